"""Calibrated reference scenarios.

Each fixture reproduces one published result table or figure when run
through the harness: bring-up stage timings for two cluster sizes,
per-component bring-up decomposition, intervention ledgers, idle power
on a three-node x86 cluster, single-host power under a growing virtual
cluster, pod storms on an edge cluster, and a four-service application.

Calibration constants were solved from the published endpoint values
(affine stage model ``a + b * nodes``; readiness model
``base + slope * admit_index``) and are frozen here; the tests assert
the reproduced numbers, not the constants.
"""

from __future__ import annotations

from pathlib import Path

from .metrics import dump_action_ledger
from .model import (
    ActionEntry,
    ActionLedger,
    ClusterSpec,
    NodeProfile,
    ServiceSpec,
    WorkloadSpec,
    WORKLOAD_MULTI_SERVICE,
    WORKLOAD_PAUSE_BATCH,
    component_phase,
)
from .sim import PhaseModel, ResourceProfile
from .specfile import ArmConfig, CampaignConfig, dump_campaign

FIXTURES = (
    "fig4a",
    "fig4b",
    "table3",
    "table4",
    "table5",
    "inf2-150pods",
    "inf6-bookinfo",
)

# Published intervention shares; the cluster-deployment value does not
# follow from the published action counts (3 of 19 -> 15.79), which the
# report surfaces as a discrepancy note when given this reference.
TABLE3_PUBLISHED = {
    "cluster-deployment": 25.3,
    "k8s-installation": 9.52,
    "service-deployment": 18.18,
}


def stage_script_fig4a() -> tuple[PhaseModel, ...]:
    """Bring-up stages: node deployment, OS install, orchestrator install."""
    return (
        PhaseModel("ND", base_s=25.7, per_node_s=15.9),
        PhaseModel("OS_I", base_s=91.6, per_node_s=152.2 / 6),
        PhaseModel("K8S_I", base_s=169.3, per_node_s=243.8 / 6),
    )


def component_script_fig4b() -> tuple[PhaseModel, ...]:
    """Per-component installation stages of the full platform bring-up."""
    return (
        PhaseModel(component_phase("Preparation"), 324.55,
                   per_node_s=43.1 / 6),
        PhaseModel(component_phase("NetMA"), 470.7, per_node_s=51.3),
        PhaseModel(component_phase("PDLC"), 401.75, per_node_s=54.5 / 6),
        PhaseModel(component_phase("MDM"), 362.2, per_node_s=43.4 / 6),
        PhaseModel(component_phase("SWM"), 73.1, per_node_s=-1.6 / 6),
    )


def bringup_cluster(node_count: int, name: str) -> ClusterSpec:
    """Generic x86 cluster with one control plane and n-1 workers."""
    if node_count < 2:
        raise ValueError("bring-up clusters need at least two nodes")
    nodes = [NodeProfile(name="control-1", role="control-plane",
                         cpu_cores=4, mem_gb=8.0)]
    nodes.extend(
        NodeProfile(name=f"worker-{i}", role="worker", cpu_cores=4,
                    mem_gb=8.0)
        for i in range(1, node_count)
    )
    return ClusterSpec(name=name, nodes=tuple(nodes))


def _bringup_campaign(doc_id: str,
                      script: tuple[PhaseModel, ...]) -> CampaignConfig:
    return CampaignConfig(
        doc_id=doc_id,
        seed=1,
        repetitions=1,
        scale_points=(1,),
        workload=WorkloadSpec(kind=WORKLOAD_PAUSE_BATCH, batch_size=1),
        treatment=ArmConfig(label="nodes-9",
                            cluster=bringup_cluster(9, f"{doc_id}-9"),
                            phases=script),
        baseline=ArmConfig(label="nodes-3",
                           cluster=bringup_cluster(3, f"{doc_id}-3"),
                           phases=script),
    )


def campaign_fig4a() -> CampaignConfig:
    return _bringup_campaign("fig4a", stage_script_fig4a())


def campaign_fig4b() -> CampaignConfig:
    return _bringup_campaign("fig4b", component_script_fig4b())


_LEDGER_VERBS = {
    "cluster-deployment": (
        "provision node image", "assign static address", "register node",
        "configure storage pool", "verify network reachability",
    ),
    "k8s-installation": (
        "install runtime packages", "render kubeadm config", "join node",
        "apply CNI manifest", "label node role", "verify control plane",
    ),
    "service-deployment": (
        "render deployment manifest", "apply manifest", "create service",
        "wait for rollout", "smoke-test endpoint",
    ),
}


def _ledger(label: str, counts: dict[str, tuple[int, int]]) -> ActionLedger:
    """counts maps phase -> (manual, automated)."""
    entries: list[ActionEntry] = []
    for phase, (manual, automated) in counts.items():
        verbs = _LEDGER_VERBS[phase]
        short = "".join(word[0] for word in phase.split("-"))
        for i in range(1, manual + automated + 1):
            mode = "manual" if i <= manual else "automated"
            desc = verbs[(i - 1) % len(verbs)]
            entries.append(ActionEntry(
                phase=phase,
                action_id=f"{label}-{short}-{i:02d}",
                description=f"{desc} ({i})",
                mode=mode,
            ))
    return ActionLedger(label=label, entries=tuple(entries))


def ledgers_table3() -> tuple[ActionLedger, ActionLedger]:
    """(treatment, baseline) action ledgers behind the published counts."""
    treatment = _ledger("auto", {
        "cluster-deployment": (3, 16),
        "k8s-installation": (4, 38),
        "service-deployment": (2, 9),
    })
    baseline = _ledger("hand", {
        "cluster-deployment": (19, 0),
        "k8s-installation": (42, 0),
        "service-deployment": (11, 0),
    })
    return treatment, baseline


def campaign_table4() -> CampaignConfig:
    """Idle power on a three-node x86 cluster, both stacks."""
    def xeon(name: str, role: str) -> NodeProfile:
        return NodeProfile(name=name, role=role, cpu_cores=8, mem_gb=16.0,
                           p_idle_w=35.0, p_max_w=95.0)

    cluster = ClusterSpec(name="inf6", nodes=(
        xeon("master", "control-plane"),
        xeon("worker-1", "worker"),
        xeon("worker-2", "worker"),
    ))

    def profiles(values) -> tuple[ResourceProfile, ...]:
        return tuple(
            ResourceProfile(node=node, cpu_baseline=cpu, mem_baseline_gb=mem)
            for node, cpu, mem in values
        )

    return CampaignConfig(
        doc_id="table4",
        seed=4,
        repetitions=1,
        scale_points=(1,),
        workload=WorkloadSpec(kind=WORKLOAD_PAUSE_BATCH, batch_size=1),
        sampling_window_s=1800.0,
        sampling_interval_s=15.0,
        treatment=ArmConfig(
            label="codeco", cluster=cluster,
            resources=profiles((
                ("master", 0.0466, 3.14),
                ("worker-1", 0.0381, 2.92),
                ("worker-2", 0.0230, 1.22),
            )),
        ),
        baseline=ArmConfig(
            label="k8s", cluster=cluster,
            resources=profiles((
                ("master", 0.0176, 1.15),
                ("worker-1", 0.0110, 0.99),
                ("worker-2", 0.0069, 0.57),
            )),
        ),
    )


# (virtual nodes, arm, cpu utilization, mem GB, published watts)
TABLE5_POINTS = (
    (0, "kind", 0.006, 4.91, 61.6),
    (5, "kind", 0.018, 4.98, 62.9),
    (10, "kind", 0.024, 5.42, 63.6),
    (20, "kind", 0.031, 6.28, 64.5),
    (0, "codeco-kind", 0.023, 12.18, 64.9),
    (5, "codeco-kind", 0.029, 12.92, 65.6),
    (10, "codeco-kind", 0.042, 14.88, 67.4),
    (20, "codeco-kind", 0.075, 17.70, 71.4),
)

TABLE5_P_IDLE_W = 60.0
TABLE5_P_MAX_W = 165.0


def campaign_table5() -> CampaignConfig:
    """Single host carrying a 20-node virtual cluster, both stacks.

    The host appears as the worker node; the virtual control plane node
    exists only to satisfy the topology, so power accounting is
    restricted to the host via ``power_nodes``.
    """
    cluster = ClusterSpec(name="kind-host", nodes=(
        NodeProfile(name="kind-control", role="control-plane",
                    cpu_cores=2, mem_gb=4.0,
                    p_idle_w=TABLE5_P_IDLE_W, p_max_w=TABLE5_P_MAX_W),
        NodeProfile(name="host", role="worker", cpu_cores=16, mem_gb=64.0,
                    p_idle_w=TABLE5_P_IDLE_W, p_max_w=TABLE5_P_MAX_W),
    ))

    def arm(label: str, cpu: float, mem: float) -> ArmConfig:
        return ArmConfig(
            label=label, cluster=cluster,
            resources=(ResourceProfile(node="host", cpu_baseline=cpu,
                                       mem_baseline_gb=mem),),
            power_nodes=("host",),
        )

    return CampaignConfig(
        doc_id="table5",
        seed=5,
        repetitions=1,
        scale_points=(1,),
        workload=WorkloadSpec(kind=WORKLOAD_PAUSE_BATCH, batch_size=1),
        sampling_window_s=1800.0,
        sampling_interval_s=15.0,
        treatment=arm("codeco-kind", 0.075, 17.70),
        baseline=arm("kind", 0.031, 6.28),
    )


def campaign_inf2() -> CampaignConfig:
    """Pod storms up to 150 pods on a two-worker edge cluster."""
    def cluster(readiness_base: float, slope: float) -> ClusterSpec:
        worker = dict(role="worker", cpu_cores=12, mem_gb=32.0, arch="arm64",
                      p_idle_w=15.0, p_max_w=60.0,
                      readiness_base_s=readiness_base,
                      readiness_slope_s=slope, deletion_base_s=1.2,
                      jitter_rel=0.02)
        return ClusterSpec(name="inf2", nodes=(
            NodeProfile(name="control", role="control-plane", cpu_cores=4,
                        mem_gb=8.0),
            NodeProfile(name="jetson-1", **worker),
            NodeProfile(name="jetson-2", **worker),
        ))

    return CampaignConfig(
        doc_id="inf2-150pods",
        seed=7,
        repetitions=5,
        scale_points=(10, 50, 100, 150),
        workload=WorkloadSpec(kind=WORKLOAD_PAUSE_BATCH, batch_size=1),
        treatment=ArmConfig(
            label="codeco",
            cluster=cluster(1.0328571428571428, 1.4757142857142858),
        ),
        baseline=ArmConfig(
            label="k8s",
            cluster=cluster(1.087142857142857, 0.9642857142857143),
        ),
    )


def campaign_inf6() -> CampaignConfig:
    """Four-service application startup and teardown on two workers."""
    def cluster(name: str, base: float, slope: float,
                deletion: float) -> ClusterSpec:
        worker = dict(role="worker", cpu_cores=8, mem_gb=16.0,
                      readiness_base_s=base, readiness_slope_s=slope,
                      deletion_base_s=deletion, jitter_rel=0.02)
        return ClusterSpec(name=name, nodes=(
            NodeProfile(name="master", role="control-plane", cpu_cores=8,
                        mem_gb=16.0),
            NodeProfile(name="worker-1", **worker),
            NodeProfile(name="worker-2", **worker),
        ))

    services = (
        ServiceSpec("productpage", 1, ("details", "reviews")),
        ServiceSpec("details", 1),
        ServiceSpec("reviews", 1, ("ratings",)),
        ServiceSpec("ratings", 1),
    )
    return CampaignConfig(
        doc_id="inf6-bookinfo",
        seed=11,
        repetitions=5,
        scale_points=(1,),
        workload=WorkloadSpec(kind=WORKLOAD_MULTI_SERVICE,
                              services=services),
        registration_delay_s=0.2,
        treatment=ArmConfig(
            label="codeco",
            cluster=cluster("inf6-codeco", 10.0, 0.4, 6.0),
        ),
        baseline=ArmConfig(
            label="k8s",
            cluster=cluster("inf6-k8s", 3.0, 0.15, 4.0),
        ),
    )


_CAMPAIGNS = {
    "fig4a": campaign_fig4a,
    "fig4b": campaign_fig4b,
    "table4": campaign_table4,
    "table5": campaign_table5,
    "inf2-150pods": campaign_inf2,
    "inf6-bookinfo": campaign_inf6,
}


def write_fixture(name: str, out_dir: str | Path) -> list[Path]:
    """Write fixture ``name`` into ``out_dir``; returns the paths."""
    if name not in FIXTURES:
        raise KeyError(name)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit(filename: str, text: str) -> None:
        path = out_dir / filename
        path.write_text(text, encoding="utf-8")
        written.append(path)

    if name == "table3":
        treatment, baseline = ledgers_table3()
        emit("table3_treatment_ledger.csv", dump_action_ledger(treatment))
        emit("table3_baseline_ledger.csv", dump_action_ledger(baseline))
        lines = ["phase,published_pct"]
        lines.extend(f"{phase},{value}"
                     for phase, value in TABLE3_PUBLISHED.items())
        emit("table3_reference.csv", "\n".join(lines) + "\n")
        return written

    config = _CAMPAIGNS[name]()
    emit(f"{name}.spec", dump_campaign(config))
    if name == "table5":
        lines = ["kind_nodes,arm,cpu_util,mem_gb,published_power_w"]
        lines.extend(
            f"{nodes},{arm},{cpu},{mem},{watts}"
            for nodes, arm, cpu, mem, watts in TABLE5_POINTS
        )
        emit("table5_points.csv", "\n".join(lines) + "\n")
    return written
