"""Campaign documents: the on-disk form of a benchmark experiment.

One document describes the shared campaign parameters (seed, scale
points, repetitions, workload, sampling) plus a ``treatment:`` arm and
an optional ``baseline:`` arm, each carrying its own cluster, resource
profiles, optional power-node subset and optional phase script.  The
format is the kvdoc grammar; docs/campaign-spec.md shows a complete
example.  All scalars arrive as strings from the parser; this module
owns the type conversions and reports every problem it can find at
once.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

from . import kvdoc
from .model import (
    ClusterSpec,
    ExperimentSpec,
    LEDGER_PHASES,
    NodeProfile,
    ServiceSpec,
    WorkloadSpec,
    WORKLOAD_FRONTEND_BACKEND,
    WORKLOAD_KINDS,
    WORKLOAD_MULTI_SERVICE,
    WORKLOAD_PAUSE_BATCH,
    experiment_violations,
)
from .sim import (
    DEFAULT_PODS_PER_CORE,
    DEFAULT_REGISTRATION_DELAY_S,
    PhaseModel,
    ResourceProfile,
)

MIP_REFERENCE_HEADER = ("phase", "published_pct")


class SpecFileError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class ArmConfig:
    label: str
    cluster: ClusterSpec
    resources: tuple[ResourceProfile, ...] = ()
    power_nodes: tuple[str, ...] | None = None
    phases: tuple[PhaseModel, ...] = ()


@dataclass(frozen=True)
class CampaignConfig:
    doc_id: str
    seed: int
    repetitions: int
    scale_points: tuple[int, ...]
    workload: WorkloadSpec
    treatment: ArmConfig
    baseline: ArmConfig | None = None
    sampling_window_s: float = 0.0
    sampling_interval_s: float = 1.0
    pods_per_core: int = DEFAULT_PODS_PER_CORE
    registration_delay_s: float = DEFAULT_REGISTRATION_DELAY_S
    treatment_ledger: str | None = None
    baseline_ledger: str | None = None
    mip_reference: str | None = None

    def arms(self) -> tuple[ArmConfig, ...]:
        if self.baseline is None:
            return (self.treatment,)
        return (self.treatment, self.baseline)

    def arm_spec(self, arm: ArmConfig, seed: int | None = None) -> ExperimentSpec:
        baseline_label = (self.baseline.label if self.baseline is not None
                          else "baseline")
        return ExperimentSpec(
            id=self.doc_id,
            cluster=arm.cluster,
            workload=self.workload,
            scale_points=self.scale_points,
            repetitions=self.repetitions,
            seed=self.seed if seed is None else seed,
            sampling_window_s=self.sampling_window_s,
            sampling_interval_s=self.sampling_interval_s,
            treatment_label=self.treatment.label,
            baseline_label=baseline_label,
        )


class _Reader:
    """Typed access into the parsed document, collecting problems."""

    def __init__(self):
        self.problems: list[str] = []

    def fail(self, where: str, message: str) -> None:
        self.problems.append(f"{where}: {message}")

    def scalar(self, mapping: dict, key: str, where: str,
               required: bool = False) -> str | None:
        value = mapping.get(key)
        if value is None:
            if required:
                self.fail(where, f"missing required key '{key}'")
            return None
        if not isinstance(value, str):
            self.fail(where, f"'{key}' must be a scalar")
            return None
        return value

    def integer(self, mapping: dict, key: str, where: str,
                required: bool = False, default: int = 0) -> int:
        raw = self.scalar(mapping, key, where, required)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            self.fail(where, f"'{key}' must be an integer, got '{raw}'")
            return default

    def number(self, mapping: dict, key: str, where: str,
               required: bool = False, default: float = 0.0) -> float:
        raw = self.scalar(mapping, key, where, required)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            self.fail(where, f"'{key}' must be a number, got '{raw}'")
            return default

    def block(self, mapping: dict, key: str, where: str, kind,
              required: bool = False):
        value = mapping.get(key)
        if value is None:
            if required:
                self.fail(where, f"missing required section '{key}'")
            return None
        if not isinstance(value, kind):
            expected = "a list" if kind is list else "a mapping"
            self.fail(where, f"'{key}' must be {expected}")
            return None
        return value


def _parse_node(reader: _Reader, item: dict, where: str) -> NodeProfile:
    defaults = NodeProfile(name="", role="worker", cpu_cores=1, mem_gb=1.0)
    return NodeProfile(
        name=reader.scalar(item, "name", where, required=True) or "",
        role=reader.scalar(item, "role", where, required=True) or "",
        cpu_cores=reader.integer(item, "cpu_cores", where, required=True,
                                 default=1),
        mem_gb=reader.number(item, "mem_gb", where, required=True,
                             default=1.0),
        arch=reader.scalar(item, "arch", where) or defaults.arch,
        p_idle_w=(reader.number(item, "p_idle_w", where,
                                default=defaults.p_idle_w)
                  if "p_idle_w" in item else defaults.p_idle_w),
        p_max_w=(reader.number(item, "p_max_w", where,
                               default=defaults.p_max_w)
                 if "p_max_w" in item else defaults.p_max_w),
        readiness_base_s=(reader.number(item, "readiness_base_s", where)
                          if "readiness_base_s" in item
                          else defaults.readiness_base_s),
        readiness_slope_s=(reader.number(item, "readiness_slope_s", where)
                           if "readiness_slope_s" in item
                           else defaults.readiness_slope_s),
        deletion_base_s=(reader.number(item, "deletion_base_s", where)
                         if "deletion_base_s" in item
                         else defaults.deletion_base_s),
        jitter_rel=(reader.number(item, "jitter_rel", where)
                    if "jitter_rel" in item else defaults.jitter_rel),
    )


def _parse_cluster(reader: _Reader, block: dict, where: str) -> ClusterSpec:
    nodes: list[NodeProfile] = []
    raw_nodes = reader.block(block, "nodes", where, list, required=True) or []
    for idx, item in enumerate(raw_nodes):
        node_where = f"{where}.nodes[{idx}]"
        if not isinstance(item, dict):
            reader.fail(node_where, "must be a mapping")
            continue
        nodes.append(_parse_node(reader, item, node_where))
    return ClusterSpec(
        name=reader.scalar(block, "name", where, required=True) or "",
        nodes=tuple(nodes),
        flavor_label=reader.scalar(block, "flavor", where) or "",
    )


def _parse_workload(reader: _Reader, block: dict) -> WorkloadSpec:
    where = "workload"
    kind = reader.scalar(block, "kind", where, required=True) or ""
    if kind and kind not in WORKLOAD_KINDS:
        reader.fail(where, f"unknown kind '{kind}' "
                           f"(expected one of {', '.join(WORKLOAD_KINDS)})")
    services: list[ServiceSpec] = []
    raw_services = reader.block(block, "services", where, list)
    if kind == WORKLOAD_MULTI_SERVICE and raw_services is None:
        reader.fail(where, "multi-service workload needs a services list")
    for idx, item in enumerate(raw_services or []):
        svc_where = f"{where}.services[{idx}]"
        if not isinstance(item, dict):
            reader.fail(svc_where, "must be a mapping")
            continue
        deps = reader.block(item, "depends_on", svc_where, list) or []
        dep_names: list[str] = []
        for dep in deps:
            if not isinstance(dep, str):
                reader.fail(svc_where, "depends_on entries must be scalars")
            else:
                dep_names.append(dep)
        services.append(ServiceSpec(
            name=reader.scalar(item, "name", svc_where, required=True) or "",
            replicas=(reader.integer(item, "replicas", svc_where, default=1)
                      if "replicas" in item else 1),
            depends_on=tuple(dep_names),
        ))
    # Scale points supply the size knob at run time; the stored spec uses
    # neutral placeholders so that it validates on its own.
    return WorkloadSpec(
        kind=kind,
        batch_size=1 if kind == WORKLOAD_PAUSE_BATCH else 0,
        replicas=1 if kind == WORKLOAD_FRONTEND_BACKEND else 0,
        services=tuple(services),
    )


def _parse_arm(reader: _Reader, block: dict, where: str) -> ArmConfig:
    label = reader.scalar(block, "label", where, required=True) or ""
    cluster_block = reader.block(block, "cluster", where, dict, required=True)
    cluster = (
        _parse_cluster(reader, cluster_block, f"{where}.cluster")
        if cluster_block is not None
        else ClusterSpec(name="", nodes=())
    )
    resources: list[ResourceProfile] = []
    for idx, item in enumerate(reader.block(block, "resources", where, list)
                               or []):
        res_where = f"{where}.resources[{idx}]"
        if not isinstance(item, dict):
            reader.fail(res_where, "must be a mapping")
            continue
        resources.append(ResourceProfile(
            node=reader.scalar(item, "node", res_where, required=True) or "",
            cpu_baseline=reader.number(item, "cpu_baseline", res_where,
                                       required=True),
            cpu_noise_amp=(reader.number(item, "cpu_noise_amp", res_where)
                           if "cpu_noise_amp" in item else 0.0),
            mem_baseline_gb=reader.number(item, "mem_baseline_gb", res_where,
                                          required=True),
            mem_noise_amp_gb=(reader.number(item, "mem_noise_amp_gb",
                                            res_where)
                              if "mem_noise_amp_gb" in item else 0.0),
        ))
    power_nodes: tuple[str, ...] | None = None
    raw_power = reader.block(block, "power_nodes", where, list)
    if raw_power is not None:
        names: list[str] = []
        for entry in raw_power:
            if not isinstance(entry, str):
                reader.fail(where, "power_nodes entries must be scalars")
            else:
                names.append(entry)
        power_nodes = tuple(names)
    phases: list[PhaseModel] = []
    for idx, item in enumerate(reader.block(block, "phases", where, list)
                               or []):
        ph_where = f"{where}.phases[{idx}]"
        if not isinstance(item, dict):
            reader.fail(ph_where, "must be a mapping")
            continue
        phases.append(PhaseModel(
            phase_id=reader.scalar(item, "phase", ph_where, required=True)
            or "",
            base_s=reader.number(item, "base_s", ph_where, required=True),
            per_node_s=(reader.number(item, "per_node_s", ph_where)
                        if "per_node_s" in item else 0.0),
            jitter_rel=(reader.number(item, "jitter_rel", ph_where)
                        if "jitter_rel" in item else 0.0),
        ))
    return ArmConfig(label=label, cluster=cluster,
                     resources=tuple(resources), power_nodes=power_nodes,
                     phases=tuple(phases))


def parse_campaign(text: str) -> CampaignConfig:
    """Parse and validate campaign document text.

    Raises :class:`kvdoc.DocumentSyntaxError` for grammar problems and
    :class:`SpecFileError` (with the complete problem list) for schema
    or invariant violations.
    """
    doc = kvdoc.parse_document(text)
    reader = _Reader()
    known = {"id", "seed", "repetitions", "scale_points", "workload",
             "sampling_window_s", "sampling_interval_s", "pods_per_core",
             "registration_delay_s", "treatment", "baseline", "ledgers",
             "mip_reference"}
    for key in doc:
        if key not in known:
            reader.fail("document", f"unknown key '{key}'")

    doc_id = reader.scalar(doc, "id", "document", required=True) or ""
    seed = reader.integer(doc, "seed", "document", required=True)
    repetitions = reader.integer(doc, "repetitions", "document",
                                 required=True, default=1)
    scale_points: list[int] = []
    raw_scales = reader.block(doc, "scale_points", "document", list,
                              required=True)
    for entry in raw_scales or []:
        if not isinstance(entry, str):
            reader.fail("scale_points", "entries must be scalars")
            continue
        try:
            scale_points.append(int(entry))
        except ValueError:
            reader.fail("scale_points", f"'{entry}' is not an integer")

    workload_block = reader.block(doc, "workload", "document", dict,
                                  required=True)
    workload = (_parse_workload(reader, workload_block)
                if workload_block is not None
                else WorkloadSpec(kind=""))

    treatment_block = reader.block(doc, "treatment", "document", dict,
                                   required=True)
    treatment = (_parse_arm(reader, treatment_block, "treatment")
                 if treatment_block is not None else None)
    baseline = None
    baseline_block = reader.block(doc, "baseline", "document", dict)
    if baseline_block is not None:
        baseline = _parse_arm(reader, baseline_block, "baseline")

    treatment_ledger = baseline_ledger = None
    ledger_block = reader.block(doc, "ledgers", "document", dict)
    if ledger_block is not None:
        treatment_ledger = reader.scalar(ledger_block, "treatment", "ledgers")
        baseline_ledger = reader.scalar(ledger_block, "baseline", "ledgers")

    sampling_window_s = reader.number(doc, "sampling_window_s", "document")
    sampling_interval_s = (reader.number(doc, "sampling_interval_s",
                                         "document")
                           if "sampling_interval_s" in doc else 1.0)
    pods_per_core = (reader.integer(doc, "pods_per_core", "document")
                     if "pods_per_core" in doc else DEFAULT_PODS_PER_CORE)
    registration_delay_s = (
        reader.number(doc, "registration_delay_s", "document")
        if "registration_delay_s" in doc else DEFAULT_REGISTRATION_DELAY_S)
    mip_reference = reader.scalar(doc, "mip_reference", "document")

    if reader.problems:
        raise SpecFileError(reader.problems)
    assert treatment is not None

    config = CampaignConfig(
        doc_id=doc_id,
        seed=seed,
        repetitions=repetitions,
        scale_points=tuple(scale_points),
        workload=workload,
        treatment=treatment,
        baseline=baseline,
        sampling_window_s=sampling_window_s,
        sampling_interval_s=sampling_interval_s,
        pods_per_core=pods_per_core,
        registration_delay_s=registration_delay_s,
        treatment_ledger=treatment_ledger,
        baseline_ledger=baseline_ledger,
        mip_reference=mip_reference,
    )
    problems: list[str] = []
    for arm in config.arms():
        for violation in experiment_violations(config.arm_spec(arm)):
            problems.append(f"arm '{arm.label}': {violation}")
        if arm.power_nodes is not None:
            node_names = {n.name for n in arm.cluster.nodes}
            for name in arm.power_nodes:
                if name not in node_names:
                    problems.append(
                        f"arm '{arm.label}': power node '{name}' is not in "
                        f"the cluster"
                    )
    if config.baseline is not None and (
            config.baseline.label == config.treatment.label):
        problems.append("treatment and baseline labels must differ")
    if problems:
        raise SpecFileError(sorted(set(problems)))
    return config


def load_campaign(path: str | Path) -> CampaignConfig:
    return parse_campaign(Path(path).read_text(encoding="utf-8"))


def _node_to_doc(node: NodeProfile) -> dict:
    item: dict = {
        "name": node.name,
        "role": node.role,
        "cpu_cores": node.cpu_cores,
        "mem_gb": node.mem_gb,
    }
    defaults = NodeProfile(name="x", role="worker", cpu_cores=1, mem_gb=1.0)
    for key in ("arch", "p_idle_w", "p_max_w", "readiness_base_s",
                "readiness_slope_s", "deletion_base_s", "jitter_rel"):
        value = getattr(node, key)
        if value != getattr(defaults, key):
            item[key] = value
    return item


def _arm_to_doc(arm: ArmConfig) -> dict:
    block: dict = {
        "label": arm.label,
        "cluster": {
            "name": arm.cluster.name,
            **({"flavor": arm.cluster.flavor_label}
               if arm.cluster.flavor_label else {}),
            "nodes": [_node_to_doc(n) for n in arm.cluster.nodes],
        },
    }
    if arm.resources:
        block["resources"] = [
            {
                "node": r.node,
                "cpu_baseline": r.cpu_baseline,
                **({"cpu_noise_amp": r.cpu_noise_amp}
                   if r.cpu_noise_amp else {}),
                "mem_baseline_gb": r.mem_baseline_gb,
                **({"mem_noise_amp_gb": r.mem_noise_amp_gb}
                   if r.mem_noise_amp_gb else {}),
            }
            for r in arm.resources
        ]
    if arm.power_nodes is not None:
        block["power_nodes"] = list(arm.power_nodes)
    if arm.phases:
        block["phases"] = [
            {
                "phase": p.phase_id,
                "base_s": p.base_s,
                **({"per_node_s": p.per_node_s} if p.per_node_s else {}),
                **({"jitter_rel": p.jitter_rel} if p.jitter_rel else {}),
            }
            for p in arm.phases
        ]
    return block


def dump_campaign(config: CampaignConfig) -> str:
    """Serialize a campaign back to document text (inverse of
    :func:`parse_campaign` up to formatting defaults)."""
    doc: dict = {
        "id": config.doc_id,
        "seed": config.seed,
        "repetitions": config.repetitions,
        "scale_points": list(config.scale_points),
    }
    workload_block: dict = {"kind": config.workload.kind}
    if config.workload.services:
        workload_block["services"] = [
            {
                "name": s.name,
                "replicas": s.replicas,
                **({"depends_on": list(s.depends_on)}
                   if s.depends_on else {}),
            }
            for s in config.workload.services
        ]
    doc["workload"] = workload_block
    if config.sampling_window_s:
        doc["sampling_window_s"] = config.sampling_window_s
        doc["sampling_interval_s"] = config.sampling_interval_s
    if config.pods_per_core != DEFAULT_PODS_PER_CORE:
        doc["pods_per_core"] = config.pods_per_core
    if config.registration_delay_s != DEFAULT_REGISTRATION_DELAY_S:
        doc["registration_delay_s"] = config.registration_delay_s
    doc["treatment"] = _arm_to_doc(config.treatment)
    if config.baseline is not None:
        doc["baseline"] = _arm_to_doc(config.baseline)
    ledgers = {}
    if config.treatment_ledger:
        ledgers["treatment"] = config.treatment_ledger
    if config.baseline_ledger:
        ledgers["baseline"] = config.baseline_ledger
    if ledgers:
        doc["ledgers"] = ledgers
    if config.mip_reference:
        doc["mip_reference"] = config.mip_reference
    return kvdoc.serialize_document(doc)


def parse_mip_reference(text: str) -> dict[str, float]:
    """Parse a published-values CSV (``phase,published_pct``)."""
    rows = [row for row in csv.reader(io.StringIO(text)) if row]
    if not rows or tuple(rows[0]) != MIP_REFERENCE_HEADER:
        raise SpecFileError(
            [f"reference header must be {','.join(MIP_REFERENCE_HEADER)}"]
        )
    out: dict[str, float] = {}
    problems: list[str] = []
    for lineno, row in enumerate(rows[1:], 2):
        if len(row) != 2:
            problems.append(f"row {lineno}: expected 2 fields")
            continue
        phase = row[0]
        if phase not in LEDGER_PHASES:
            problems.append(
                f"row {lineno}: unknown phase '{phase}' "
                f"(expected one of {', '.join(LEDGER_PHASES)})"
            )
            continue
        if phase in out:
            problems.append(f"row {lineno}: duplicate phase '{phase}'")
            continue
        try:
            out[phase] = float(row[1])
        except ValueError:
            problems.append(f"row {lineno}: '{row[1]}' is not a number")
    if problems:
        raise SpecFileError(problems)
    return out


def read_mip_reference(path: str | Path) -> dict[str, float]:
    return parse_mip_reference(Path(path).read_text(encoding="utf-8"))
