"""Benchmark harness and deterministic cluster simulator for edge-cloud
orchestration KPIs: deployment phase timing, pod and service lifecycle
latencies, manual-intervention accounting, and a linear power model."""

from .model import (
    ActionEntry,
    ActionLedger,
    ClusterSpec,
    ExperimentSpec,
    LifecycleEvent,
    NodeProfile,
    Phase,
    PhaseTimeline,
    PowerEstimate,
    Sample,
    SampleSeries,
    ServiceSpec,
    SpecValidationError,
    StatsSummary,
    WorkloadSpec,
    experiment_violations,
    validate_experiment,
)
from .cam import (
    CamManifest,
    CamService,
    CamValidationError,
    ServiceChannel,
    UnitParseError,
    parse_bandwidth,
    parse_cam,
    parse_delay,
    serialize_cam,
    validate_cam,
)
from .sim import (
    BackendSession,
    BackendUnsupportedError,
    CapacityError,
    PhaseModel,
    ResourceProfile,
    SimPod,
    apply_workload,
    delete_workload,
    export_event_log,
    open_session,
    run_phase_script,
    sample_resources,
    session_fingerprint,
    watch_events,
)
from .probes import (
    BatchMeasurement,
    RunRecord,
    ServiceMeasurement,
    derive_seed,
    measure_phases,
    measure_pod_batch,
    measure_service,
    run_campaign,
)
from .metrics import (
    MetricsInputError,
    MipResult,
    PowerModelParams,
    aggregate_stats,
    compute_mip,
    compute_overhead,
    daily_energy,
    estimate_power,
    mean_over_window,
)
from .report import (
    KpiReport,
    build_report,
    check_consistency,
    emit_csv,
    emit_json,
    emit_plot_data,
)

__version__ = "0.1.0"
