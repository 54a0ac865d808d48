"""Deterministic simulated cluster backend.

A session owns a virtual clock (integer nanoseconds), a seeded PCG64
generator and an event queue.  Identical (cluster, seed) pairs replay
identical histories: equal-time events drain ordered by
``(t_ns, entity_id, insertion_seq)`` and every random draw happens in a
documented order (one readiness jitter per pod in creation order at
apply time; one deletion jitter per pod in request order; per node then
per tick for resource samples; one per phase for phase scripts).

Latency model per pod on node N with admit index k (its 1-based
position within the apply on that node):

    ready   = t_apply + readiness_base_s + readiness_slope_s * k * (1 + e)
    deleted = t_request + deletion_base_s * (1 + e')

where e, e' are uniform in [-jitter_rel, +jitter_rel].  Service
entities become ready when their last member pod is ready plus a fixed
registration delay, and are torn down when their last member dies.

Capacity is worker cores times ``pods_per_core``; an oversized apply
places pods up to the limit, then raises ``CapacityError`` naming the
pods it did place.
"""

from __future__ import annotations

import hashlib
import heapq
from dataclasses import dataclass

import numpy as np

from .model import (
    ENTITY_POD,
    ENTITY_SERVICE,
    NS_PER_S,
    WORKLOAD_FRONTEND_BACKEND,
    WORKLOAD_MULTI_SERVICE,
    WORKLOAD_PAUSE_BATCH,
    ClusterSpec,
    LifecycleEvent,
    NodeProfile,
    Phase,
    PhaseTimeline,
    Sample,
    SampleSeries,
    ServiceSpec,
    WorkloadSpec,
    cluster_violations,
    is_phase_id,
    s_to_ns,
    workload_violations,
)

DEFAULT_PODS_PER_CORE = 10
DEFAULT_REGISTRATION_DELAY_S = 0.2

EVENT_LOG_HEADER = "t_ns,entity,entity_id,transition"


class SimulatorError(Exception):
    pass


class ClusterConfigError(SimulatorError, ValueError):
    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class WorkloadConfigError(SimulatorError, ValueError):
    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class CapacityError(SimulatorError):
    """Apply would exceed cluster pod capacity.

    ``placed_pod_ids`` lists the pods that were admitted before the
    limit was hit; they will still become ready.
    """

    def __init__(self, requested: int, capacity: int, live: int,
                 placed_pod_ids: tuple[str, ...]):
        self.requested = requested
        self.capacity = capacity
        self.live = live
        self.placed_pod_ids = placed_pod_ids
        super().__init__(
            f"applying {requested} pods with {live} live exceeds "
            f"capacity {capacity}"
        )


class UnknownPodError(SimulatorError):
    def __init__(self, pod_id: str):
        self.pod_id = pod_id
        super().__init__(f"unknown pod id '{pod_id}'")


class PodStateError(SimulatorError):
    pass


class BackendUnsupportedError(SimulatorError):
    """The requested backend operation is not available in this build."""


@dataclass(frozen=True)
class ResourceProfile:
    """Idle-state telemetry model for one node: a baseline plus uniform
    noise of the given amplitude, sampled independently per tick."""

    node: str
    cpu_baseline: float = 0.02
    cpu_noise_amp: float = 0.0
    mem_baseline_gb: float = 0.5
    mem_noise_amp_gb: float = 0.0


@dataclass(frozen=True)
class PhaseModel:
    """Affine phase duration: base_s + per_node_s * |nodes|, jittered."""

    phase_id: str
    base_s: float
    per_node_s: float = 0.0
    jitter_rel: float = 0.0


class SimPod:
    __slots__ = ("id", "node", "state", "admit_index", "service",
                 "ready_at_ns", "deleted_at_ns")

    def __init__(self, pod_id: str, node: str, admit_index: int,
                 service: str | None):
        self.id = pod_id
        self.node = node
        self.state = "Creating"
        self.admit_index = admit_index
        self.service = service
        self.ready_at_ns: int | None = None
        self.deleted_at_ns: int | None = None


class _SimService:
    __slots__ = ("name", "members", "torn_down")

    def __init__(self, name: str, members: tuple[str, ...]):
        self.name = name
        self.members = members
        self.torn_down = False


class BackendSession:
    """Mutable simulation state; create via :func:`open_session`."""

    def __init__(self, cluster: ClusterSpec, seed: int, pods_per_core: int,
                 registration_delay_ns: int,
                 resource_profiles: dict[str, ResourceProfile]):
        self.cluster = cluster
        self.seed = seed
        self.clock_ns = 0
        self.pods_per_core = pods_per_core
        self.registration_delay_ns = registration_delay_ns
        self.resource_profiles = resource_profiles
        self.rng = np.random.Generator(np.random.PCG64(seed))
        self.pods: dict[str, SimPod] = {}
        self.services: dict[str, _SimService] = {}
        self.log: list[LifecycleEvent] = []
        self._queue: list[tuple[int, str, int, LifecycleEvent]] = []
        self._cancelled: set[tuple[str, str]] = set()
        self._seq = 0
        self._batch = 0
        self._workers = cluster.workers()
        self._nodes_by_name = {n.name: n for n in cluster.nodes}

    def capacity(self) -> int:
        return sum(w.cpu_cores for w in self._workers) * self.pods_per_core

    def live_pod_count(self) -> int:
        return sum(1 for p in self.pods.values() if p.state != "Deleted")

    def _push(self, entity: str, entity_id: str, transition: str,
              at_ns: int) -> None:
        ev = LifecycleEvent(entity=entity, entity_id=entity_id,
                            transition=transition, at_ns=at_ns)
        heapq.heappush(self._queue, (at_ns, entity_id, self._seq, ev))
        self._seq += 1

    def _jitter(self, rel: float) -> float:
        # One draw per call even when rel == 0 keeps the stream aligned
        # across jitter settings.
        return rel * self.rng.uniform(-1.0, 1.0)


def open_session(cluster: ClusterSpec, seed: int, *,
                 resource_profiles=(),
                 pods_per_core: int = DEFAULT_PODS_PER_CORE,
                 registration_delay_s: float = DEFAULT_REGISTRATION_DELAY_S,
                 ) -> BackendSession:
    """Open a simulated session against ``cluster``.

    The cluster must be valid and must contain at least one worker node.
    """
    problems = cluster_violations(cluster)
    if not problems and not cluster.workers():
        problems.append("cluster has no worker nodes")
    if not 0 <= seed < 2 ** 64:
        problems.append("seed must fit in an unsigned 64-bit integer")
    if pods_per_core < 1:
        problems.append("pods_per_core must be >= 1")
    if registration_delay_s < 0:
        problems.append("registration_delay_s must be nonnegative")
    profile_map: dict[str, ResourceProfile] = {}
    node_names = {n.name for n in cluster.nodes}
    for prof in resource_profiles:
        if prof.node not in node_names:
            problems.append(
                f"resource profile names unknown node '{prof.node}'"
            )
        profile_map[prof.node] = prof
    if problems:
        raise ClusterConfigError(problems)
    return BackendSession(cluster, seed, pods_per_core,
                          s_to_ns(registration_delay_s), profile_map)


def _expand_pods(workload: WorkloadSpec) -> list[tuple[str | None, int]]:
    """(service name, replica count) groups in creation order."""
    if workload.kind == WORKLOAD_PAUSE_BATCH:
        return [(None, workload.batch_size)]
    if workload.kind == WORKLOAD_FRONTEND_BACKEND:
        return [("frontend", workload.replicas), ("backend", 1)]
    return [(s.name, s.replicas) for s in workload.services]


def _service_specs(workload: WorkloadSpec) -> tuple[ServiceSpec, ...]:
    if workload.kind == WORKLOAD_FRONTEND_BACKEND:
        return (ServiceSpec("frontend", workload.replicas, ("backend",)),
                ServiceSpec("backend", 1))
    if workload.kind == WORKLOAD_MULTI_SERVICE:
        return workload.services
    return ()


def apply_workload(session: BackendSession,
                   workload: WorkloadSpec) -> list[str]:
    """Create the workload's pods at the current virtual time.

    Returns the created pod ids in creation order.  Pods are placed
    round-robin across worker nodes; service workloads additionally
    register one service entity per service.  Raises
    :class:`CapacityError` after placing as many pods as fit when the
    batch exceeds free capacity.
    """
    problems = workload_violations(workload)
    if problems:
        raise WorkloadConfigError(problems)
    for svc in _service_specs(workload):
        if svc.name in session.services:
            raise WorkloadConfigError(
                [f"service '{svc.name}' is already deployed in this session"]
            )

    session._batch += 1
    batch = session._batch
    t0 = session.clock_ns
    capacity = session.capacity()
    live = session.live_pod_count()
    budget = capacity - live

    groups = _expand_pods(workload)
    requested = sum(count for _, count in groups)
    workers = session._workers
    placed: list[str] = []
    ready_by_service: dict[str, int] = {}
    admit_counts: dict[str, int] = {}
    rr = 0
    truncated = requested > budget

    for service_name, count in groups:
        prefix = service_name if service_name is not None else "pause"
        for replica in range(1, count + 1):
            if len(placed) >= budget:
                break
            node = workers[rr % len(workers)]
            rr += 1
            admit_counts[node.name] = admit_counts.get(node.name, 0) + 1
            k = admit_counts[node.name]
            pod_id = f"{prefix}-b{batch}-{replica:04d}"
            jitter = session._jitter(node.jitter_rel)
            latency_s = (node.readiness_base_s
                         + node.readiness_slope_s * k * (1.0 + jitter))
            ready_ns = t0 + s_to_ns(latency_s)
            pod = SimPod(pod_id, node.name, k, service_name)
            pod.ready_at_ns = ready_ns
            session.pods[pod_id] = pod
            session._push(ENTITY_POD, pod_id, "created", t0)
            session._push(ENTITY_POD, pod_id, "scheduled", t0)
            session._push(ENTITY_POD, pod_id, "ready", ready_ns)
            placed.append(pod_id)
            if service_name is not None:
                prev = ready_by_service.get(service_name)
                ready_by_service[service_name] = (
                    ready_ns if prev is None else max(prev, ready_ns)
                )
        if len(placed) >= budget and truncated:
            break

    if not truncated:
        for svc in _service_specs(workload):
            members = tuple(p for p in placed
                            if session.pods[p].service == svc.name)
            session.services[svc.name] = _SimService(svc.name, members)
            session._push(ENTITY_SERVICE, svc.name, "created", t0)
            session._push(
                ENTITY_SERVICE, svc.name, "ready",
                ready_by_service[svc.name] + session.registration_delay_ns,
            )

    if truncated:
        raise CapacityError(requested, capacity, live, tuple(placed))
    return placed


def delete_workload(session: BackendSession, pod_ids) -> int:
    """Request deletion of the given pods at the current virtual time.

    Pods must be Creating or Ready.  A Creating pod's pending ready
    event is cancelled (it never becomes ready).  When the last member
    of a service is deleted the service entity is torn down as well.
    Returns the number of deletions scheduled; an empty request is a
    no-op.
    """
    pod_ids = list(pod_ids)
    if not pod_ids:
        return 0
    targets: list[SimPod] = []
    requested: set[str] = set()
    for pod_id in pod_ids:
        pod = session.pods.get(pod_id)
        if pod is None:
            raise UnknownPodError(pod_id)
        if pod_id in requested:
            raise PodStateError(f"pod '{pod_id}' requested twice")
        requested.add(pod_id)
        if pod.state not in ("Creating", "Ready"):
            raise PodStateError(
                f"pod '{pod_id}' is {pod.state}; only Creating or Ready "
                f"pods can be deleted"
            )
        targets.append(pod)
    t_req = session.clock_ns
    for pod in targets:
        node = session._nodes_by_name[pod.node]
        jitter = session._jitter(node.jitter_rel)
        duration_s = node.deletion_base_s * (1.0 + jitter)
        deleted_ns = t_req + s_to_ns(duration_s)
        if pod.state == "Creating":
            session._cancelled.add((pod.id, "ready"))
        pod.state = "Terminating"
        pod.deleted_at_ns = deleted_ns
        session._push(ENTITY_POD, pod.id, "delete-requested", t_req)
        session._push(ENTITY_POD, pod.id, "deleted", deleted_ns)
    for service in session.services.values():
        if service.torn_down:
            continue
        members = [session.pods[m] for m in service.members]
        if members and all(m.state in ("Terminating", "Deleted")
                           for m in members):
            service.torn_down = True
            last = max(m.deleted_at_ns for m in members)
            session._push(ENTITY_SERVICE, service.name,
                          "delete-requested", t_req)
            session._push(ENTITY_SERVICE, service.name, "deleted", last)
    return len(targets)


def watch_events(session: BackendSession,
                 until_s: float | None = None) -> list[LifecycleEvent]:
    """Drain pending events, return them, and advance the clock.

    With ``until_s`` the drain stops at that virtual time (which must
    not lie in the past) and the clock lands exactly there; without it
    everything pending is drained and the clock lands on the last event.
    """
    limit_ns: int | None = None
    if until_s is not None:
        limit_ns = s_to_ns(until_s)
        if limit_ns < session.clock_ns:
            raise ValueError(
                f"cannot watch into the past: until={until_s}s is before "
                f"the session clock"
            )
    drained: list[LifecycleEvent] = []
    queue = session._queue
    while queue and (limit_ns is None or queue[0][0] <= limit_ns):
        _, _, _, ev = heapq.heappop(queue)
        key = (ev.entity_id, ev.transition)
        if key in session._cancelled:
            session._cancelled.discard(key)
            continue
        if ev.entity == ENTITY_POD:
            pod = session.pods[ev.entity_id]
            if ev.transition == "ready" and pod.state == "Creating":
                pod.state = "Ready"
            elif ev.transition == "deleted":
                pod.state = "Deleted"
        session.log.append(ev)
        drained.append(ev)
    if limit_ns is not None:
        session.clock_ns = limit_ns
    elif drained:
        session.clock_ns = max(session.clock_ns, drained[-1].at_ns)
    return drained


def sample_resources(session: BackendSession, window_s: float,
                     interval_s: float) -> list[SampleSeries]:
    """Sample per-node CPU and memory over a window of virtual time.

    Emits floor(window/interval) samples per node at interval boundaries
    and advances the clock by the window.  Every node gets a series;
    nodes without an explicit profile use the default idle profile.
    """
    if interval_s <= 0:
        raise ValueError("interval_s must be positive")
    if window_s < interval_s:
        raise ValueError("window_s must be at least interval_s")
    window_ns = s_to_ns(window_s)
    interval_ns = s_to_ns(interval_s)
    count = window_ns // interval_ns
    t0 = session.clock_ns
    series: list[SampleSeries] = []
    for node in session.cluster.nodes:
        prof = session.resource_profiles.get(node.name)
        if prof is None:
            prof = ResourceProfile(node=node.name)
        samples = []
        for k in range(1, count + 1):
            u_cpu = session.rng.uniform(-1.0, 1.0)
            u_mem = session.rng.uniform(-1.0, 1.0)
            cpu = min(max(prof.cpu_baseline + prof.cpu_noise_amp * u_cpu,
                          0.0), 1.0)
            mem = max(prof.mem_baseline_gb + prof.mem_noise_amp_gb * u_mem,
                      0.0)
            samples.append(Sample(at_ns=t0 + k * interval_ns,
                                  cpu_util=cpu, mem_gb=mem))
        series.append(SampleSeries(node=node.name, samples=tuple(samples)))
    session.clock_ns = t0 + window_ns
    return series


def phase_duration_s(model: PhaseModel, node_count: int) -> float:
    """Nominal (jitter-free) duration of a phase on ``node_count`` nodes.
    With zero nodes this degenerates to the intercept ``base_s``."""
    return model.base_s + model.per_node_s * node_count


def run_phase_script(session: BackendSession,
                     script) -> PhaseTimeline:
    """Execute a sequence of :class:`PhaseModel` stages back to back.

    Durations follow the affine model on the session's node count with
    one jitter draw per phase; the clock advances to the end of the last
    phase.  Returns the resulting timeline.
    """
    script = list(script)
    problems: list[str] = []
    if not script:
        problems.append("phase script must be nonempty")
    seen: set[str] = set()
    for model in script:
        if not is_phase_id(model.phase_id):
            problems.append(f"unknown phase id '{model.phase_id}'")
        elif model.phase_id in seen:
            problems.append(f"duplicate phase id '{model.phase_id}'")
        seen.add(model.phase_id)
        if model.base_s < 0 or phase_duration_s(
                model, len(session.cluster.nodes)) < 0:
            problems.append(f"phase '{model.phase_id}' has a negative duration")
        if not 0.0 <= model.jitter_rel < 1.0:
            problems.append(f"phase '{model.phase_id}' jitter_rel "
                            "must lie in [0, 1)")
    if problems:
        raise WorkloadConfigError(problems)
    node_count = len(session.cluster.nodes)
    phases: list[Phase] = []
    for model in script:
        jitter = session._jitter(model.jitter_rel)
        duration_s = phase_duration_s(model, node_count) * (1.0 + jitter)
        duration_ns = s_to_ns(duration_s)
        phases.append(Phase(model.phase_id, session.clock_ns,
                            session.clock_ns + duration_ns))
        session.clock_ns += duration_ns
    return PhaseTimeline.from_phases(tuple(phases))


def export_event_log(session: BackendSession) -> str:
    """Drained event history as CSV text with a fixed header."""
    lines = [EVENT_LOG_HEADER]
    lines.extend(f"{ev.at_ns},{ev.entity},{ev.entity_id},{ev.transition}"
                 for ev in session.log)
    return "\n".join(lines) + "\n"


def session_fingerprint(session: BackendSession) -> str:
    """SHA-256 of the exported event log; equal histories hash equal."""
    return hashlib.sha256(export_event_log(session).encode()).hexdigest()


class RemoteOrchestratorAdapter:
    """Placeholder for driving a live orchestrator over the wire.

    The surface mirrors the simulated backend but every operation raises
    :class:`BackendUnsupportedError`; only construction succeeds.
    """

    def __init__(self, endpoint: str):
        self.endpoint = endpoint

    def _unsupported(self) -> BackendUnsupportedError:
        return BackendUnsupportedError(
            "remote orchestrator sessions are not supported in this build; "
            "use the simulated backend"
        )

    def apply_manifest(self, manifest_text: str):
        raise self._unsupported()

    def watch(self, until_s: float | None = None):
        raise self._unsupported()

    def delete_by_label(self, label: str):
        raise self._unsupported()

    def sample_nodes(self, window_s: float, interval_s: float):
        raise self._unsupported()
