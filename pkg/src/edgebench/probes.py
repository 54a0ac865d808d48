"""Measurement probes: pod batches, service startup, phase timelines.

A probe owns one session, drives a workload through its full lifecycle
(apply, drain to ready, delete, drain to gone) and reduces the event
stream to per-pod latencies plus makespans.  ``run_campaign`` sweeps
repetitions across scale points, one fresh session per cell, and never
aborts on a single failed cell.

Per-run seeds derive from the campaign seed as

    sha256("edgebench:v1:<seed>:<repetition>:<scale>")[:8]  (big-endian)

so runs are reproducible in isolation and both arms of a comparison,
sharing the campaign seed, get pairwise-matched streams.  Repetition 0
with scale 0 is reserved for arm-level sampling sessions.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

from .model import (
    ENTITY_POD,
    ENTITY_SERVICE,
    WORKLOAD_FRONTEND_BACKEND,
    WORKLOAD_PAUSE_BATCH,
    ExperimentSpec,
    PhaseTimeline,
    WorkloadSpec,
    ns_to_s,
    pause_batch,
    timeline_violations,
    validate_experiment,
)
from .sim import BackendSession, CapacityError, open_session
from . import sim


class ProbeError(Exception):
    pass


class TimelineSumError(ProbeError):
    """A measured timeline failed its own consistency check; that is a
    probe bug, not a property of the system under test."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class CampaignError(ProbeError):
    pass


@dataclass(frozen=True)
class BatchMeasurement:
    """Readiness and deletion latencies for one pod batch.

    ``complete`` is False when the batch hit the capacity limit; the
    per-pod lists then cover only the pods that were actually placed.
    """

    scale: int
    per_pod_readiness_s: tuple[float, ...]
    readiness_makespan_s: float
    per_pod_deletion_s: tuple[float, ...]
    deletion_makespan_s: float
    complete: bool = True
    failure: str | None = None


@dataclass(frozen=True)
class ServiceMeasurement:
    """End-to-end service timings: last service ready minus apply, and
    last pod gone minus delete request."""

    startup_s: float
    deletion_s: float


@dataclass(frozen=True)
class RunRecord:
    """Everything one campaign cell produced (see report.emit_run_records
    for the serialized form)."""

    label: str
    scale: int
    repetition: int
    seed: int
    workload_kind: str
    batch: BatchMeasurement | None
    service: ServiceMeasurement | None
    timeline: PhaseTimeline | None = None
    failed: bool = False
    failure: str | None = None


def derive_seed(seed: int, repetition: int, scale: int) -> int:
    """Stable per-run seed; see the module docstring for the scheme."""
    material = f"edgebench:v1:{seed}:{repetition}:{scale}".encode()
    return int.from_bytes(hashlib.sha256(material).digest()[:8], "big")


def _lifecycle(session: BackendSession, workload: WorkloadSpec,
               scale: int) -> tuple[BatchMeasurement, ServiceMeasurement | None]:
    """Run one apply/ready/delete cycle and reduce it to measurements."""
    t_apply = session.clock_ns
    failure: str | None = None
    try:
        pod_ids = sim.apply_workload(session, workload)
        complete = True
    except CapacityError as err:
        pod_ids = list(err.placed_pod_ids)
        complete = False
        failure = str(err)
    events = sim.watch_events(session)

    ready_at = {ev.entity_id: ev.at_ns for ev in events
                if ev.entity == ENTITY_POD and ev.transition == "ready"}
    missing = [p for p in pod_ids if p not in ready_at]
    if missing:
        raise ProbeError(f"pods never became ready: {', '.join(missing)}")
    ordered = sorted(pod_ids)
    readiness = tuple(ns_to_s(ready_at[p] - t_apply) for p in ordered)

    service_ready_ns = [ev.at_ns for ev in events
                        if ev.entity == ENTITY_SERVICE
                        and ev.transition == "ready"]

    t_delete = session.clock_ns
    sim.delete_workload(session, ordered)
    events = sim.watch_events(session)
    deleted_at = {ev.entity_id: ev.at_ns for ev in events
                  if ev.entity == ENTITY_POD and ev.transition == "deleted"}
    deletion = tuple(ns_to_s(deleted_at[p] - t_delete) for p in ordered)

    batch = BatchMeasurement(
        scale=scale,
        per_pod_readiness_s=readiness,
        readiness_makespan_s=max(readiness) if readiness else 0.0,
        per_pod_deletion_s=deletion,
        deletion_makespan_s=max(deletion) if deletion else 0.0,
        complete=complete,
        failure=failure,
    )
    service = None
    if service_ready_ns:
        service = ServiceMeasurement(
            startup_s=ns_to_s(max(service_ready_ns) - t_apply),
            deletion_s=ns_to_s(max(deleted_at.values()) - t_delete),
        )
    return batch, service


def measure_pod_batch(session: BackendSession,
                      batch_size: int) -> BatchMeasurement:
    """Deploy ``batch_size`` pause pods, wait for readiness, delete them.

    On a capacity overflow the measurement still covers the placed pods
    and comes back flagged incomplete.
    """
    if batch_size < 1:
        raise ProbeError("batch_size must be >= 1")
    batch, _ = _lifecycle(session, pause_batch(batch_size), batch_size)
    return batch


def measure_service(session: BackendSession,
                    workload: WorkloadSpec) -> ServiceMeasurement:
    """Deploy a service workload and time startup and teardown
    end to end (startup includes service registration)."""
    if workload.kind == WORKLOAD_PAUSE_BATCH:
        raise ProbeError("measure_service needs a service workload")
    scale = sum(s.replicas for s in workload.services) or workload.replicas
    _, service = _lifecycle(session, workload, scale)
    if service is None:
        raise ProbeError("workload produced no service entities")
    return service


def measure_phases(session: BackendSession, script) -> PhaseTimeline:
    """Run a phase script and validate the resulting timeline.

    A timeline that fails validation (phase sum drifting from the total
    past 1 microsecond, overlaps, bad ids) raises
    :class:`TimelineSumError`.
    """
    timeline = sim.run_phase_script(session, script)
    check_timeline(timeline)
    return timeline


def check_timeline(timeline: PhaseTimeline) -> PhaseTimeline:
    problems = timeline_violations(timeline)
    if problems:
        raise TimelineSumError(problems)
    return timeline


def workload_at_scale(workload: WorkloadSpec, scale: int) -> WorkloadSpec:
    """Instantiate the workload's size knob at a scale point: batch size
    for pause batches, replica count for frontend-backend, a per-service
    replica multiplier for multi-service workloads."""
    if workload.kind == WORKLOAD_PAUSE_BATCH:
        return replace(workload, batch_size=scale)
    if workload.kind == WORKLOAD_FRONTEND_BACKEND:
        return replace(workload, replicas=scale)
    services = tuple(replace(s, replicas=s.replicas * scale)
                     for s in workload.services)
    return replace(workload, services=services)


def run_campaign(spec: ExperimentSpec, session_factory=None,
                 label: str | None = None) -> list[RunRecord]:
    """Sweep ``repetitions x scale_points`` for one arm of a campaign.

    ``session_factory(cluster, seed)`` supplies the backend (defaults to
    the simulator).  Each cell gets a fresh session keyed by its derived
    seed.  Failed cells are recorded, not raised; only a campaign where
    every cell failed raises :class:`CampaignError`.
    """
    validate_experiment(spec)
    if session_factory is None:
        session_factory = open_session
    if label is None:
        label = spec.treatment_label
    records: list[RunRecord] = []
    any_ok = False
    for scale in spec.scale_points:
        for repetition in range(1, spec.repetitions + 1):
            run_seed = derive_seed(spec.seed, repetition, scale)
            session = session_factory(spec.cluster, run_seed)
            workload = workload_at_scale(spec.workload, scale)
            try:
                batch, service = _lifecycle(session, workload, scale)
                failed = not batch.complete
                failure = batch.failure
            except (sim.SimulatorError, ProbeError) as err:
                batch, service = None, None
                failed, failure = True, str(err)
            records.append(RunRecord(
                label=label, scale=scale, repetition=repetition,
                seed=run_seed, workload_kind=spec.workload.kind,
                batch=batch, service=service,
                failed=failed, failure=failure,
            ))
            any_ok = any_ok or not failed
    if not any_ok:
        raise CampaignError(
            f"every run of arm '{label}' failed; first failure: "
            f"{records[0].failure}"
        )
    return records
