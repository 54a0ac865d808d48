"""Domain model shared by the simulator, probes, metrics and reporting layers.

Conventions that every other module leans on:

* Timestamps and durations are integer nanoseconds on a virtual clock.
  Seconds (floats) appear only at reporting boundaries; ``s_to_ns`` /
  ``ns_to_s`` are the sole conversion points.
* Value types are frozen dataclasses and safe to share across threads.
* Validation never stops at the first problem: the ``*_violations``
  helpers return the complete list of rule breaches so a caller can show
  them all at once.  ``validate_experiment`` wraps that in a raising form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

NS_PER_S = 1_000_000_000

ROLE_CONTROL_PLANE = "control-plane"
ROLE_WORKER = "worker"
ROLES = (ROLE_CONTROL_PLANE, ROLE_WORKER)

ARCHS = ("x86_64", "arm64")

WORKLOAD_PAUSE_BATCH = "pause-batch"
WORKLOAD_FRONTEND_BACKEND = "frontend-backend"
WORKLOAD_MULTI_SERVICE = "multi-service"
WORKLOAD_KINDS = (
    WORKLOAD_PAUSE_BATCH,
    WORKLOAD_FRONTEND_BACKEND,
    WORKLOAD_MULTI_SERVICE,
)

# Stage identifiers for cluster bring-up timelines.  Deployment stages are
# fixed names; per-component stages use the "component:" prefix.
PHASE_NODE_DEPLOYMENT = "ND"
PHASE_OS_INSTALL = "OS_I"
PHASE_K8S_INSTALL = "K8S_I"
STAGE_PHASES = (PHASE_NODE_DEPLOYMENT, PHASE_OS_INSTALL, PHASE_K8S_INSTALL)
COMPONENT_PREFIX = "component:"

LEDGER_PHASES = ("cluster-deployment", "k8s-installation", "service-deployment")
ACTION_MODES = ("manual", "automated")

ENTITY_POD = "pod"
ENTITY_SERVICE = "service"
ENTITIES = (ENTITY_POD, ENTITY_SERVICE)

# Lifecycle transitions in the only order they may occur per entity.
TRANSITIONS = ("created", "scheduled", "ready", "delete-requested", "deleted")

POD_STATES = ("Pending", "Creating", "Ready", "Terminating", "Deleted")


def s_to_ns(seconds: float) -> int:
    """Convert seconds to integer nanoseconds (round half to even)."""
    return round(seconds * NS_PER_S)


def ns_to_s(ns: int) -> float:
    return ns / NS_PER_S


def component_phase(name: str) -> str:
    """Phase id for a named platform component, e.g. ``component:NetMA``."""
    return COMPONENT_PREFIX + name


def phase_display(phase_id: str) -> str:
    """Human label for a phase id (strips the component prefix)."""
    if phase_id.startswith(COMPONENT_PREFIX):
        return phase_id[len(COMPONENT_PREFIX):]
    return phase_id


def is_phase_id(phase_id: str) -> bool:
    if phase_id in STAGE_PHASES:
        return True
    return (
        phase_id.startswith(COMPONENT_PREFIX)
        and len(phase_id) > len(COMPONENT_PREFIX)
    )


class SpecValidationError(ValueError):
    """Raised when a spec breaks its invariants; carries every violation."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class NodeProfile:
    """Static description of one cluster node.

    ``readiness_base_s``/``readiness_slope_s`` parameterize pod readiness
    latency on this node; ``deletion_base_s`` the teardown latency;
    ``jitter_rel`` the relative half-width of the uniform noise applied to
    both.  ``p_idle_w``/``p_max_w`` feed the power model.
    """

    name: str
    role: str
    cpu_cores: int
    mem_gb: float
    arch: str = "x86_64"
    p_idle_w: float = 35.0
    p_max_w: float = 95.0
    readiness_base_s: float = 2.0
    readiness_slope_s: float = 0.0
    deletion_base_s: float = 1.0
    jitter_rel: float = 0.0


@dataclass(frozen=True)
class ClusterSpec:
    name: str
    nodes: tuple[NodeProfile, ...]
    flavor_label: str = ""

    def control_planes(self) -> tuple[NodeProfile, ...]:
        return tuple(n for n in self.nodes if n.role == ROLE_CONTROL_PLANE)

    def workers(self) -> tuple[NodeProfile, ...]:
        return tuple(n for n in self.nodes if n.role == ROLE_WORKER)


@dataclass(frozen=True)
class ServiceSpec:
    """One service of a multi-service workload; ``depends_on`` lists the
    services it calls into (edges must form a DAG)."""

    name: str
    replicas: int = 1
    depends_on: tuple[str, ...] = ()


@dataclass(frozen=True)
class WorkloadSpec:
    kind: str
    batch_size: int = 0
    replicas: int = 0
    services: tuple[ServiceSpec, ...] = ()


def pause_batch(batch_size: int) -> WorkloadSpec:
    return WorkloadSpec(kind=WORKLOAD_PAUSE_BATCH, batch_size=batch_size)


def frontend_backend(replicas: int) -> WorkloadSpec:
    return WorkloadSpec(kind=WORKLOAD_FRONTEND_BACKEND, replicas=replicas)


def multi_service(services: tuple[ServiceSpec, ...]) -> WorkloadSpec:
    return WorkloadSpec(kind=WORKLOAD_MULTI_SERVICE, services=tuple(services))


@dataclass(frozen=True)
class ExperimentSpec:
    """A full campaign: workload scales, repetitions, sampling windows.

    One spec describes one arm of a comparison; baseline and treatment
    arms are separate specs sharing ``id`` and ``seed`` so their derived
    per-run seeds pair up.
    """

    id: str
    cluster: ClusterSpec
    workload: WorkloadSpec
    scale_points: tuple[int, ...]
    repetitions: int
    seed: int
    sampling_window_s: float = 0.0
    sampling_interval_s: float = 1.0
    treatment_label: str = "treatment"
    baseline_label: str = "baseline"


@dataclass(frozen=True)
class Phase:
    phase_id: str
    start_ns: int
    end_ns: int

    @property
    def duration_ns(self) -> int:
        return self.end_ns - self.start_ns

    @property
    def duration_s(self) -> float:
        return ns_to_s(self.duration_ns)


@dataclass(frozen=True)
class PhaseTimeline:
    """Contiguous measured phases plus their total.

    ``total_ns`` is stored rather than derived so that a corrupted
    timeline is detectable: ``timeline_violations`` re-checks the sum at
    microsecond tolerance.
    """

    phases: tuple[Phase, ...]
    total_ns: int

    @classmethod
    def from_phases(cls, phases: tuple[Phase, ...]) -> "PhaseTimeline":
        return cls(phases=tuple(phases),
                   total_ns=sum(p.duration_ns for p in phases))

    @property
    def total_s(self) -> float:
        return ns_to_s(self.total_ns)

    def duration_of(self, phase_id: str) -> float:
        for p in self.phases:
            if p.phase_id == phase_id:
                return p.duration_s
        raise KeyError(phase_id)


@dataclass(frozen=True)
class LifecycleEvent:
    entity: str
    entity_id: str
    transition: str
    at_ns: int


@dataclass(frozen=True)
class ActionEntry:
    phase: str
    action_id: str
    description: str
    mode: str


@dataclass(frozen=True)
class ActionLedger:
    label: str
    entries: tuple[ActionEntry, ...]

    def manual_count(self, phase: str) -> int:
        return sum(
            1 for e in self.entries if e.phase == phase and e.mode == "manual"
        )

    def phases(self) -> tuple[str, ...]:
        seen: list[str] = []
        for e in self.entries:
            if e.phase not in seen:
                seen.append(e.phase)
        return tuple(seen)


@dataclass(frozen=True)
class Sample:
    at_ns: int
    cpu_util: float
    mem_gb: float


@dataclass(frozen=True)
class SampleSeries:
    node: str
    samples: tuple[Sample, ...]


@dataclass(frozen=True)
class StatsSummary:
    n: int
    min: float
    max: float
    avg: float
    p95: float
    stdev: float


@dataclass(frozen=True)
class PowerEstimate:
    node: str
    power_w: float
    energy_kwh_day: float


def node_violations(node: NodeProfile, where: str = "") -> list[str]:
    pre = f"{where}node '{node.name}': " if node.name else f"{where}node: "
    out: list[str] = []
    if not node.name:
        out.append(f"{where}node name must be nonempty")
    if node.role not in ROLES:
        out.append(pre + f"role must be one of {ROLES}, got '{node.role}'")
    if node.cpu_cores < 1:
        out.append(pre + "cpu_cores must be a positive integer")
    if not node.mem_gb > 0:
        out.append(pre + "mem_gb must be positive")
    if node.arch not in ARCHS:
        out.append(pre + f"arch must be one of {ARCHS}, got '{node.arch}'")
    if not node.p_idle_w > 0:
        out.append(pre + "p_idle_w must be positive")
    if not node.p_max_w > node.p_idle_w:
        out.append(pre + "p_max_w must exceed p_idle_w")
    if node.readiness_base_s < 0 or node.readiness_slope_s < 0:
        out.append(pre + "readiness latency coefficients must be nonnegative")
    if node.deletion_base_s < 0:
        out.append(pre + "deletion_base_s must be nonnegative")
    if not 0.0 <= node.jitter_rel < 1.0:
        out.append(pre + "jitter_rel must lie in [0, 1)")
    return out


def cluster_violations(cluster: ClusterSpec) -> list[str]:
    out: list[str] = []
    if not cluster.name:
        out.append("cluster name must be nonempty")
    if not cluster.nodes:
        out.append("cluster must declare at least one node")
    names = [n.name for n in cluster.nodes]
    for name in sorted(set(n for n in names if names.count(n) > 1)):
        out.append(f"duplicate node name '{name}'")
    if cluster.nodes and not cluster.control_planes():
        out.append("cluster must include at least one control-plane node")
    for node in cluster.nodes:
        out.extend(node_violations(node))
    return out


def _dependency_violations(services: tuple[ServiceSpec, ...]) -> list[str]:
    out: list[str] = []
    names = {s.name for s in services}
    for s in services:
        for dep in s.depends_on:
            if dep not in names:
                out.append(
                    f"service '{s.name}' depends on undeclared service '{dep}'"
                )
    # Kahn's algorithm; leftovers mean a cycle.
    indeg = {s.name: 0 for s in services}
    for s in services:
        for dep in s.depends_on:
            if dep in indeg:
                indeg[s.name] += 1
    queue = sorted(n for n, d in indeg.items() if d == 0)
    seen = 0
    dependents: dict[str, list[str]] = {n: [] for n in indeg}
    for s in services:
        for dep in s.depends_on:
            if dep in dependents:
                dependents[dep].append(s.name)
    while queue:
        n = queue.pop()
        seen += 1
        for m in dependents[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                queue.append(m)
    if seen != len(indeg):
        cyclic = sorted(n for n, d in indeg.items() if d > 0)
        out.append("service dependencies contain a cycle involving "
                   + ", ".join(cyclic))
    return out


def workload_violations(workload: WorkloadSpec) -> list[str]:
    out: list[str] = []
    if workload.kind not in WORKLOAD_KINDS:
        out.append(
            f"workload kind must be one of {WORKLOAD_KINDS}, got "
            f"'{workload.kind}'"
        )
        return out
    if workload.kind == WORKLOAD_PAUSE_BATCH:
        if workload.batch_size < 1:
            out.append("pause-batch workload needs batch_size >= 1")
    elif workload.kind == WORKLOAD_FRONTEND_BACKEND:
        if workload.replicas < 1:
            out.append("frontend-backend workload needs replicas >= 1")
    else:
        if not workload.services:
            out.append("multi-service workload needs at least one service")
        names = [s.name for s in workload.services]
        for name in sorted(set(n for n in names if names.count(n) > 1)):
            out.append(f"duplicate service name '{name}'")
        for s in workload.services:
            if not s.name:
                out.append("service name must be nonempty")
            if s.replicas < 1:
                out.append(f"service '{s.name}' needs replicas >= 1")
        out.extend(_dependency_violations(workload.services))
    return out


def experiment_violations(spec: ExperimentSpec) -> list[str]:
    """Every invariant breach in ``spec``, in a stable order."""
    out: list[str] = []
    if not spec.id:
        out.append("experiment id must be nonempty")
    out.extend(cluster_violations(spec.cluster))
    if spec.cluster.nodes and not spec.cluster.workers():
        out.append("cluster must contain at least one worker node")
    out.extend(workload_violations(spec.workload))
    if not spec.scale_points:
        out.append("scale_points must be nonempty")
    else:
        if any(s < 1 for s in spec.scale_points):
            out.append("scale_points must be positive integers")
        if any(b <= a for a, b in zip(spec.scale_points,
                                      spec.scale_points[1:])):
            out.append("scale_points must be strictly increasing")
    if spec.repetitions < 1:
        out.append("repetitions must be >= 1")
    if not 0 <= spec.seed < 2 ** 64:
        out.append("seed must fit in an unsigned 64-bit integer")
    if spec.sampling_window_s < 0:
        out.append("sampling_window_s must be nonnegative")
    if spec.sampling_window_s > 0:
        if spec.sampling_interval_s <= 0:
            out.append("sampling_interval_s must be positive")
        elif spec.sampling_window_s < spec.sampling_interval_s:
            out.append("sampling_window_s must be >= sampling_interval_s")
    if not spec.treatment_label:
        out.append("treatment_label must be nonempty")
    if not spec.baseline_label:
        out.append("baseline_label must be nonempty")
    if spec.treatment_label == spec.baseline_label:
        out.append("treatment_label and baseline_label must differ")
    return out


def validate_experiment(spec: ExperimentSpec) -> ExperimentSpec:
    """Return ``spec`` unchanged or raise ``SpecValidationError`` carrying
    the complete violation list."""
    violations = experiment_violations(spec)
    if violations:
        raise SpecValidationError(violations)
    return spec


def timeline_violations(timeline: PhaseTimeline) -> list[str]:
    out: list[str] = []
    prev_end: int | None = None
    for p in timeline.phases:
        if not is_phase_id(p.phase_id):
            out.append(f"unknown phase id '{p.phase_id}'")
        if p.end_ns < p.start_ns:
            out.append(f"phase '{p.phase_id}' ends before it starts")
        if prev_end is not None and p.start_ns < prev_end:
            out.append(f"phase '{p.phase_id}' overlaps its predecessor")
        prev_end = p.end_ns
    span = sum(p.duration_ns for p in timeline.phases)
    # Tolerance is 1 microsecond: integer math makes the sum exact, so any
    # slack only forgives float round-tripping by callers.
    if abs(span - timeline.total_ns) > 1_000:
        out.append(
            f"total_ns {timeline.total_ns} does not match phase sum {span}"
        )
    return out


def ledger_violations(ledger: ActionLedger) -> list[str]:
    out: list[str] = []
    seen: set[str] = set()
    for e in ledger.entries:
        if e.phase not in LEDGER_PHASES:
            out.append(f"action '{e.action_id}': unknown phase '{e.phase}'")
        if e.mode not in ACTION_MODES:
            out.append(f"action '{e.action_id}': unknown mode '{e.mode}'")
        if not e.action_id:
            out.append("action ids must be nonempty")
        elif e.action_id in seen:
            out.append(f"duplicate action id '{e.action_id}'")
        seen.add(e.action_id)
    return out
