"""Report assembly: aggregate run records into comparison tables.

Everything here recomputes from raw measurements; nothing trusts
pre-aggregated numbers.  Per-scale statistics summarize repetition-level
values (each repetition contributes its batch mean / makespan once), so
STDEV reflects run-to-run spread rather than within-batch spread.

Serialized forms:

* ``report.json``: ``{"schema": 1, ...}`` with sorted keys; raw float
  values, with rounded display values stored beside them where the
  rounding rules apply (``mip_pct`` beside ``raw_pct``).
* section CSVs (emit_csv): seconds and utilizations with 6 decimals,
  watts/GB with 3, percentages per the metrics rounding rules
  (intervention share 2, overheads 1, timeline shares 2).  Every CSV
  number is reproducible from the JSON raw values.
* run records (emit_run_records): one JSON document per line, schema
  ``{"label", "scale", "repetition", "seed", "workload_kind", "batch",
  "service", "timeline", "failed", "failure"}`` where ``batch`` holds
  per-pod latency lists and makespans, ``service`` startup/deletion
  seconds, ``timeline`` phase (id, start_ns, end_ns) triples.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .metrics import (
    PowerModelParams,
    aggregate_stats,
    compute_overhead,
    daily_energy,
    estimate_power,
    mean_over_window,
    round_half_away,
)
from .model import (
    LEDGER_PHASES,
    ActionLedger,
    PhaseTimeline,
    SampleSeries,
    StatsSummary,
    phase_display,
)
from .probes import BatchMeasurement, RunRecord

SCHEMA_VERSION = 1

# Lifecycle metric names, in presentation order.
METRIC_ORDER = (
    "readiness_mean_s",
    "readiness_makespan_s",
    "deletion_mean_s",
    "deletion_makespan_s",
    "service_startup_s",
    "service_deletion_s",
)

_FIG_PREFIX = {
    "pause-batch": "fig5",
    "frontend-backend": "fig6",
    "multi-service": "fig7",
}


class ReportError(Exception):
    pass


class ConsistencyError(ReportError):
    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class LifecycleCell:
    label: str
    scale: int
    metric: str
    stats: StatsSummary


@dataclass(frozen=True)
class OverheadCell:
    scale: int
    metric: str
    baseline_avg: float
    treatment_avg: float
    raw_pct: float
    overhead_pct: float


@dataclass(frozen=True)
class PhaseShare:
    phase_id: str
    duration_s: float
    share_pct: float


@dataclass(frozen=True)
class TimelineSummary:
    label: str
    total_s: float
    shares: tuple[PhaseShare, ...]


@dataclass(frozen=True)
class MipRow:
    phase: str
    c_a: int
    k_a: int
    raw_pct: float
    mip_pct: float
    note: str | None = None


@dataclass(frozen=True)
class ResourceRow:
    label: str
    node: str
    cpu_util_mean: float
    mem_gb_mean: float
    power_w: float | None = None
    energy_kwh_day: float | None = None


@dataclass(frozen=True)
class ClusterPower:
    label: str
    power_w: float
    energy_kwh_day: float


@dataclass(frozen=True)
class FailureNote:
    label: str
    scale: int
    repetition: int
    reason: str


@dataclass(frozen=True)
class KpiReport:
    experiment_id: str
    treatment_label: str
    baseline_label: str
    workload_kind: str | None = None
    lifecycle: tuple[LifecycleCell, ...] = ()
    overheads: tuple[OverheadCell, ...] = ()
    timelines: tuple[TimelineSummary, ...] = ()
    mip: tuple[MipRow, ...] = ()
    resources: tuple[ResourceRow, ...] = ()
    cluster_power: tuple[ClusterPower, ...] = ()
    power_overhead_raw_pct: float | None = None
    power_overhead_pct: float | None = None
    failures: tuple[FailureNote, ...] = ()
    notes: tuple[str, ...] = ()


def _batch_mean(values: tuple[float, ...]) -> float:
    return math.fsum(values) / len(values)


def _run_metrics(record: RunRecord) -> dict[str, float]:
    out: dict[str, float] = {}
    batch = record.batch
    if batch is not None and batch.complete and batch.per_pod_readiness_s:
        out["readiness_mean_s"] = _batch_mean(batch.per_pod_readiness_s)
        out["readiness_makespan_s"] = batch.readiness_makespan_s
        out["deletion_mean_s"] = _batch_mean(batch.per_pod_deletion_s)
        out["deletion_makespan_s"] = batch.deletion_makespan_s
    if record.service is not None:
        out["service_startup_s"] = record.service.startup_s
        out["service_deletion_s"] = record.service.deletion_s
    return out


def build_report(records, *,
                 experiment_id: str = "experiment",
                 treatment_label: str = "treatment",
                 baseline_label: str = "baseline",
                 treatment_ledger: ActionLedger | None = None,
                 baseline_ledger: ActionLedger | None = None,
                 samples: dict[str, list[SampleSeries]] | None = None,
                 power_params: dict[str, dict[str, PowerModelParams]] | None = None,
                 timelines: dict[str, PhaseTimeline] | None = None,
                 mip_reference: dict[str, float] | None = None,
                 ) -> KpiReport:
    """Aggregate raw inputs into a :class:`KpiReport`.

    ``records`` may cover one or both arms (matched by label).  Ledgers,
    idle-state samples, power parameters and phase timelines are all
    optional sections.  ``power_params`` maps label -> node -> params;
    nodes without params get resource rows but no power estimate and do
    not count toward the cluster total.
    """
    records = list(records)
    if not records:
        raise ReportError("cannot build a report from zero run records")
    notes: list[str] = []
    failures = tuple(
        FailureNote(r.label, r.scale, r.repetition, r.failure or "failed")
        for r in records if r.failed
    )

    kinds = sorted({r.workload_kind for r in records})
    if len(kinds) > 1:
        raise ReportError(f"records mix workload kinds: {', '.join(kinds)}")
    workload_kind = kinds[0] if kinds else None

    by_cell: dict[tuple[str, int], list[RunRecord]] = {}
    for r in records:
        by_cell.setdefault((r.label, r.scale), []).append(r)

    lifecycle: list[LifecycleCell] = []
    stats_by_key: dict[tuple[str, int, str], StatsSummary] = {}
    scales = sorted({scale for _, scale in by_cell})
    labels_present = sorted({label for label, _ in by_cell})
    for (label, scale), cell_records in sorted(by_cell.items()):
        per_metric: dict[str, list[float]] = {}
        for r in sorted(cell_records, key=lambda r: r.repetition):
            if r.failed:
                continue
            for metric, value in _run_metrics(r).items():
                per_metric.setdefault(metric, []).append(value)
        for metric in METRIC_ORDER:
            if metric in per_metric:
                stats = aggregate_stats(per_metric[metric])
                lifecycle.append(LifecycleCell(
                    label=label, scale=scale, metric=metric, stats=stats,
                ))
                stats_by_key[(label, scale, metric)] = stats

    overheads: list[OverheadCell] = []
    for scale in scales:
        for metric in METRIC_ORDER:
            t_stats = stats_by_key.get((treatment_label, scale, metric))
            b_stats = stats_by_key.get((baseline_label, scale, metric))
            if t_stats is None or b_stats is None:
                continue
            t_avg = t_stats.avg
            b_avg = b_stats.avg
            if b_avg <= 0:
                notes.append(
                    f"scale {scale} {metric}: baseline average is not "
                    f"positive; overhead undefined"
                )
                continue
            overheads.append(OverheadCell(
                scale=scale, metric=metric,
                baseline_avg=b_avg, treatment_avg=t_avg,
                raw_pct=100.0 * (t_avg - b_avg) / b_avg,
                overhead_pct=compute_overhead(t_avg, b_avg),
            ))
    if len(labels_present) == 2:
        for scale in scales:
            have = {label for label, s in by_cell if s == scale}
            for label in labels_present:
                if label not in have:
                    notes.append(
                        f"scale {scale}: no '{label}' runs to pair against"
                    )

    timeline_rows: list[TimelineSummary] = []
    for label in sorted((timelines or {})):
        timeline = timelines[label]
        total_s = timeline.total_s
        shares = []
        for p in timeline.phases:
            share = (100.0 * p.duration_ns / timeline.total_ns
                     if timeline.total_ns > 0 else 0.0)
            shares.append(PhaseShare(p.phase_id, p.duration_s, share))
        timeline_rows.append(TimelineSummary(label, total_s, tuple(shares)))

    mip_rows: list[MipRow] = []
    if treatment_ledger is not None and baseline_ledger is not None:
        phases = [p for p in LEDGER_PHASES
                  if p in set(treatment_ledger.phases())
                  | set(baseline_ledger.phases())]
        for phase in phases:
            c_a = treatment_ledger.manual_count(phase)
            k_a = baseline_ledger.manual_count(phase)
            if k_a == 0:
                notes.append(
                    f"phase '{phase}': baseline has no manual actions; "
                    f"intervention share undefined"
                )
                continue
            raw = 100.0 * c_a / k_a
            rounded = round_half_away(raw, 2)
            note = None
            if mip_reference and phase in mip_reference:
                published = mip_reference[phase]
                if abs(published - rounded) > 0.005:
                    note = (f"published reference {published} differs from "
                            f"computed {rounded} (c_a={c_a}, k_a={k_a})")
            mip_rows.append(MipRow(phase=phase, c_a=c_a, k_a=k_a,
                                   raw_pct=raw, mip_pct=rounded, note=note))

    resource_rows: list[ResourceRow] = []
    cluster_rows: list[ClusterPower] = []
    for label in sorted((samples or {})):
        node_params = (power_params or {}).get(label, {})
        total_w = 0.0
        powered = 0
        for series in samples[label]:
            cpu, mem = mean_over_window(series)
            params = node_params.get(series.node)
            if params is None:
                resource_rows.append(ResourceRow(label, series.node, cpu, mem))
                continue
            watts = estimate_power(cpu, mem, params)
            resource_rows.append(ResourceRow(
                label, series.node, cpu, mem,
                power_w=watts, energy_kwh_day=daily_energy(watts),
            ))
            total_w += watts
            powered += 1
        if powered:
            cluster_rows.append(ClusterPower(
                label=label, power_w=total_w,
                energy_kwh_day=daily_energy(total_w),
            ))

    power_raw = power_rounded = None
    by_label = {c.label: c for c in cluster_rows}
    if treatment_label in by_label and baseline_label in by_label:
        t_w = by_label[treatment_label].power_w
        b_w = by_label[baseline_label].power_w
        if b_w > 0:
            power_raw = 100.0 * (t_w - b_w) / b_w
            power_rounded = compute_overhead(t_w, b_w)

    return KpiReport(
        experiment_id=experiment_id,
        treatment_label=treatment_label,
        baseline_label=baseline_label,
        workload_kind=workload_kind,
        lifecycle=tuple(lifecycle),
        overheads=tuple(overheads),
        timelines=tuple(timeline_rows),
        mip=tuple(mip_rows),
        resources=tuple(resource_rows),
        cluster_power=tuple(cluster_rows),
        power_overhead_raw_pct=power_raw,
        power_overhead_pct=power_rounded,
        failures=failures,
        notes=tuple(notes),
    )


def check_consistency(report: KpiReport) -> list[str]:
    """Cross-check every derived number in the report against its
    operands; returns the complete list of violations."""
    out: list[str] = []
    for cell in report.lifecycle:
        s = cell.stats
        where = f"lifecycle {cell.label}/{cell.scale}/{cell.metric}"
        if not (s.min <= s.avg <= s.max and s.p95 <= s.max
                and s.min <= s.p95):
            out.append(f"{where}: summary ordering broken")
        if s.stdev < 0 or s.n < 1:
            out.append(f"{where}: invalid n or stdev")
    stats_by_key = {(c.label, c.scale, c.metric): c.stats
                    for c in report.lifecycle}
    for (label, scale, metric), stats in stats_by_key.items():
        if metric == "readiness_mean_s":
            peer = stats_by_key.get((label, scale, "readiness_makespan_s"))
            if peer is not None and peer.avg < stats.avg - 1e-9:
                out.append(
                    f"lifecycle {label}/{scale}: makespan below batch mean"
                )
    for cell in report.overheads:
        expect_raw = (100.0 * (cell.treatment_avg - cell.baseline_avg)
                      / cell.baseline_avg)
        if abs(expect_raw - cell.raw_pct) > 1e-9:
            out.append(f"overhead {cell.scale}/{cell.metric}: raw mismatch")
        if compute_overhead(cell.treatment_avg,
                            cell.baseline_avg) != cell.overhead_pct:
            out.append(f"overhead {cell.scale}/{cell.metric}: "
                       f"rounding mismatch")
    for t in report.timelines:
        if not t.shares:
            continue
        dur_sum = math.fsum(p.duration_s for p in t.shares)
        if abs(dur_sum - t.total_s) > 1e-6:
            out.append(f"timeline '{t.label}': durations sum to {dur_sum}, "
                       f"total says {t.total_s}")
        if t.total_s > 0:
            share_sum = math.fsum(p.share_pct for p in t.shares)
            if abs(share_sum - 100.0) > 0.2:
                out.append(f"timeline '{t.label}': phase shares sum to "
                           f"{share_sum:.3f}%")
    for row in report.mip:
        if row.k_a <= 0:
            out.append(f"mip '{row.phase}': nonpositive baseline count")
            continue
        raw = 100.0 * row.c_a / row.k_a
        if abs(raw - row.raw_pct) > 1e-9:
            out.append(f"mip '{row.phase}': raw mismatch")
        if round_half_away(raw, 2) != row.mip_pct:
            out.append(f"mip '{row.phase}': rounding mismatch")
    power_by_label: dict[str, float] = {}
    for row in report.resources:
        if row.power_w is not None:
            power_by_label[row.label] = (
                power_by_label.get(row.label, 0.0) + row.power_w
            )
            if row.energy_kwh_day is None or abs(
                    daily_energy(row.power_w) - row.energy_kwh_day) > 1e-12:
                out.append(f"resources {row.label}/{row.node}: "
                           f"energy does not match power")
    for cluster in report.cluster_power:
        expected = power_by_label.get(cluster.label)
        if expected is None:
            out.append(f"cluster power '{cluster.label}': no node rows")
            continue
        if abs(expected - cluster.power_w) > 1e-9:
            out.append(f"cluster power '{cluster.label}': total {cluster.power_w} "
                       f"does not match node sum {expected}")
        if abs(daily_energy(cluster.power_w) - cluster.energy_kwh_day) > 1e-12:
            out.append(f"cluster power '{cluster.label}': energy mismatch")
    by_label = {c.label: c for c in report.cluster_power}
    if report.power_overhead_pct is not None:
        t = by_label.get(report.treatment_label)
        b = by_label.get(report.baseline_label)
        if t is None or b is None:
            out.append("power overhead present without both cluster totals")
        else:
            if compute_overhead(t.power_w, b.power_w) != report.power_overhead_pct:
                out.append("power overhead rounding mismatch")
            raw = 100.0 * (t.power_w - b.power_w) / b.power_w
            if (report.power_overhead_raw_pct is None
                    or abs(raw - report.power_overhead_raw_pct) > 1e-9):
                out.append("power overhead raw mismatch")
    return out


def _fmt(value: float, decimals: int) -> str:
    return f"{value:.{decimals}f}"


def _csv_line(fields) -> str:
    out = []
    for f in fields:
        text = str(f)
        if any(ch in text for ch in ",\"\n"):
            text = '"' + text.replace('"', '""') + '"'
        out.append(text)
    return ",".join(out)


def _write(path: Path, lines: list[str]) -> Path:
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def emit_csv(report: KpiReport, out_dir: str | Path) -> list[Path]:
    """Write one CSV per report section under ``out_dir``.

    Stable names and field orders; the failures file is omitted when
    there are no failures.  Returns the written paths.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    lines = ["label,scale,metric,n,min,max,avg,p95,stdev"]
    for c in report.lifecycle:
        s = c.stats
        lines.append(_csv_line([
            c.label, c.scale, c.metric, s.n,
            _fmt(s.min, 6), _fmt(s.max, 6), _fmt(s.avg, 6),
            _fmt(s.p95, 6), _fmt(s.stdev, 6),
        ]))
    written.append(_write(out_dir / "lifecycle.csv", lines))

    lines = ["scale,metric,baseline_avg,treatment_avg,overhead_pct"]
    for c in report.overheads:
        lines.append(_csv_line([
            c.scale, c.metric, _fmt(c.baseline_avg, 6),
            _fmt(c.treatment_avg, 6), _fmt(c.overhead_pct, 1),
        ]))
    for cluster_metric, rounded in (
            ("cluster_power_w", report.power_overhead_pct),):
        if rounded is None:
            continue
        by_label = {c.label: c for c in report.cluster_power}
        t = by_label[report.treatment_label]
        b = by_label[report.baseline_label]
        lines.append(_csv_line([
            "", cluster_metric, _fmt(b.power_w, 6), _fmt(t.power_w, 6),
            _fmt(rounded, 1),
        ]))
    written.append(_write(out_dir / "overheads.csv", lines))

    lines = ["label,phase,duration_s,share_pct"]
    for t in report.timelines:
        for p in t.shares:
            lines.append(_csv_line([
                t.label, phase_display(p.phase_id),
                _fmt(p.duration_s, 6), _fmt(p.share_pct, 2),
            ]))
        lines.append(_csv_line([t.label, "TOTAL", _fmt(t.total_s, 6),
                                _fmt(100.0 if t.shares else 0.0, 2)]))
    written.append(_write(out_dir / "phases.csv", lines))

    lines = ["phase,c_a,k_a,mip_pct,note"]
    for row in report.mip:
        lines.append(_csv_line([
            row.phase, row.c_a, row.k_a, _fmt(row.mip_pct, 2),
            row.note or "",
        ]))
    written.append(_write(out_dir / "mip.csv", lines))

    lines = ["label,node,cpu_util_mean,mem_gb_mean,power_w,energy_kwh_day"]
    for row in report.resources:
        lines.append(_csv_line([
            row.label, row.node, _fmt(row.cpu_util_mean, 6),
            _fmt(row.mem_gb_mean, 3),
            _fmt(row.power_w, 3) if row.power_w is not None else "",
            (_fmt(row.energy_kwh_day, 4)
             if row.energy_kwh_day is not None else ""),
        ]))
    for c in report.cluster_power:
        lines.append(_csv_line([
            c.label, "CLUSTER", "", "", _fmt(c.power_w, 3),
            _fmt(c.energy_kwh_day, 4),
        ]))
    written.append(_write(out_dir / "resources.csv", lines))

    if report.failures:
        lines = ["label,scale,repetition,reason"]
        for f in report.failures:
            lines.append(_csv_line([f.label, f.scale, f.repetition, f.reason]))
        written.append(_write(out_dir / "failures.csv", lines))
    return written


def _stats_to_dict(s: StatsSummary) -> dict:
    return {"n": s.n, "min": s.min, "max": s.max, "avg": s.avg,
            "p95": s.p95, "stdev": s.stdev}


def _stats_from_dict(d: dict) -> StatsSummary:
    return StatsSummary(n=d["n"], min=d["min"], max=d["max"], avg=d["avg"],
                        p95=d["p95"], stdev=d["stdev"])


def report_to_dict(report: KpiReport) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "experiment_id": report.experiment_id,
        "treatment_label": report.treatment_label,
        "baseline_label": report.baseline_label,
        "workload_kind": report.workload_kind,
        "lifecycle": [
            {"label": c.label, "scale": c.scale, "metric": c.metric,
             "stats": _stats_to_dict(c.stats)}
            for c in report.lifecycle
        ],
        "overheads": [
            {"scale": c.scale, "metric": c.metric,
             "baseline_avg": c.baseline_avg,
             "treatment_avg": c.treatment_avg,
             "raw_pct": c.raw_pct, "overhead_pct": c.overhead_pct}
            for c in report.overheads
        ],
        "timelines": [
            {"label": t.label, "total_s": t.total_s,
             "phases": [
                 {"phase": p.phase_id, "duration_s": p.duration_s,
                  "share_pct": p.share_pct}
                 for p in t.shares
             ]}
            for t in report.timelines
        ],
        "mip": [
            {"phase": r.phase, "c_a": r.c_a, "k_a": r.k_a,
             "raw_pct": r.raw_pct, "mip_pct": r.mip_pct, "note": r.note}
            for r in report.mip
        ],
        "resources": [
            {"label": r.label, "node": r.node,
             "cpu_util_mean": r.cpu_util_mean,
             "mem_gb_mean": r.mem_gb_mean,
             "power_w": r.power_w, "energy_kwh_day": r.energy_kwh_day}
            for r in report.resources
        ],
        "cluster_power": [
            {"label": c.label, "power_w": c.power_w,
             "energy_kwh_day": c.energy_kwh_day}
            for c in report.cluster_power
        ],
        "power_overhead_raw_pct": report.power_overhead_raw_pct,
        "power_overhead_pct": report.power_overhead_pct,
        "failures": [
            {"label": f.label, "scale": f.scale,
             "repetition": f.repetition, "reason": f.reason}
            for f in report.failures
        ],
        "notes": list(report.notes),
    }


def report_from_dict(data: dict) -> KpiReport:
    if data.get("schema") != SCHEMA_VERSION:
        raise ReportError(
            f"unsupported report schema {data.get('schema')!r}; "
            f"expected {SCHEMA_VERSION}"
        )
    return KpiReport(
        experiment_id=data["experiment_id"],
        treatment_label=data["treatment_label"],
        baseline_label=data["baseline_label"],
        workload_kind=data.get("workload_kind"),
        lifecycle=tuple(
            LifecycleCell(d["label"], d["scale"], d["metric"],
                          _stats_from_dict(d["stats"]))
            for d in data.get("lifecycle", ())
        ),
        overheads=tuple(
            OverheadCell(d["scale"], d["metric"], d["baseline_avg"],
                         d["treatment_avg"], d["raw_pct"], d["overhead_pct"])
            for d in data.get("overheads", ())
        ),
        timelines=tuple(
            TimelineSummary(
                d["label"], d["total_s"],
                tuple(PhaseShare(p["phase"], p["duration_s"], p["share_pct"])
                      for p in d.get("phases", ())),
            )
            for d in data.get("timelines", ())
        ),
        mip=tuple(
            MipRow(d["phase"], d["c_a"], d["k_a"], d["raw_pct"],
                   d["mip_pct"], d.get("note"))
            for d in data.get("mip", ())
        ),
        resources=tuple(
            ResourceRow(d["label"], d["node"], d["cpu_util_mean"],
                        d["mem_gb_mean"], d.get("power_w"),
                        d.get("energy_kwh_day"))
            for d in data.get("resources", ())
        ),
        cluster_power=tuple(
            ClusterPower(d["label"], d["power_w"], d["energy_kwh_day"])
            for d in data.get("cluster_power", ())
        ),
        power_overhead_raw_pct=data.get("power_overhead_raw_pct"),
        power_overhead_pct=data.get("power_overhead_pct"),
        failures=tuple(
            FailureNote(d["label"], d["scale"], d["repetition"], d["reason"])
            for d in data.get("failures", ())
        ),
        notes=tuple(data.get("notes", ())),
    )


def emit_json(report: KpiReport, out_dir: str | Path) -> Path:
    """Write ``report.json`` (schema-versioned, sorted keys, raw floats)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "report.json"
    path.write_text(
        json.dumps(report_to_dict(report), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    return path


def load_report(path: str | Path) -> KpiReport:
    return report_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def emit_plot_data(report: KpiReport, out_dir: str | Path) -> list[Path]:
    """Write plot-ready CSVs named after the figure each one backs.

    Lifecycle curves become ``<fig>_readiness.csv`` / ``<fig>_deletion.csv``
    (fig5 for pause batches, fig6 for frontend-backend, fig7 for
    multi-service startup/teardown), timelines become ``fig4_phases.csv``
    and resource rows ``fig8_power.csv``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    stats_by_key = {(c.label, c.scale, c.metric): c.stats
                    for c in report.lifecycle}
    scales = sorted({c.scale for c in report.lifecycle})

    def curve(metric: str) -> list[str]:
        lines = ["scale,baseline_mean,baseline_stdev,"
                 "treatment_mean,treatment_stdev"]
        for scale in scales:
            b = stats_by_key.get((report.baseline_label, scale, metric))
            t = stats_by_key.get((report.treatment_label, scale, metric))
            if b is None and t is None:
                continue
            lines.append(_csv_line([
                scale,
                _fmt(b.avg, 6) if b else "", _fmt(b.stdev, 6) if b else "",
                _fmt(t.avg, 6) if t else "", _fmt(t.stdev, 6) if t else "",
            ]))
        return lines

    if report.lifecycle and report.workload_kind in _FIG_PREFIX:
        prefix = _FIG_PREFIX[report.workload_kind]
        if report.workload_kind == "multi-service":
            pairs = (("service_startup_s", "_startup.csv"),
                     ("service_deletion_s", "_deletion.csv"))
        else:
            pairs = (("readiness_mean_s", "_readiness.csv"),
                     ("deletion_mean_s", "_deletion.csv"))
        for metric, suffix in pairs:
            lines = curve(metric)
            if len(lines) > 1:
                written.append(_write(out_dir / f"{prefix}{suffix}", lines))

    if report.timelines:
        lines = ["label,phase,duration_s,share_pct"]
        for t in report.timelines:
            for p in t.shares:
                lines.append(_csv_line([
                    t.label, phase_display(p.phase_id),
                    _fmt(p.duration_s, 6), _fmt(p.share_pct, 2),
                ]))
        written.append(_write(out_dir / "fig4_phases.csv", lines))

    powered = [r for r in report.resources if r.power_w is not None]
    if powered:
        lines = ["label,node,power_w"]
        for r in powered:
            lines.append(_csv_line([r.label, r.node, _fmt(r.power_w, 3)]))
        written.append(_write(out_dir / "fig8_power.csv", lines))
    return written


def _batch_to_dict(b: BatchMeasurement) -> dict:
    return {
        "scale": b.scale,
        "per_pod_readiness_s": list(b.per_pod_readiness_s),
        "readiness_makespan_s": b.readiness_makespan_s,
        "per_pod_deletion_s": list(b.per_pod_deletion_s),
        "deletion_makespan_s": b.deletion_makespan_s,
        "complete": b.complete,
        "failure": b.failure,
    }


def _timeline_to_dict(t: PhaseTimeline) -> dict:
    return {
        "total_ns": t.total_ns,
        "phases": [
            {"phase": p.phase_id, "start_ns": p.start_ns, "end_ns": p.end_ns}
            for p in t.phases
        ],
    }


def record_to_dict(record: RunRecord) -> dict:
    return {
        "label": record.label,
        "scale": record.scale,
        "repetition": record.repetition,
        "seed": record.seed,
        "workload_kind": record.workload_kind,
        "batch": (_batch_to_dict(record.batch)
                  if record.batch is not None else None),
        "service": ({"startup_s": record.service.startup_s,
                     "deletion_s": record.service.deletion_s}
                    if record.service is not None else None),
        "timeline": (_timeline_to_dict(record.timeline)
                     if record.timeline is not None else None),
        "failed": record.failed,
        "failure": record.failure,
    }


def emit_run_records(records, out_dir: str | Path) -> Path:
    """Write ``records.jsonl``: one JSON document per run, sorted keys."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "records.jsonl"
    lines = [json.dumps(record_to_dict(r), sort_keys=True) for r in records]
    path.write_text("\n".join(lines) + ("\n" if lines else ""),
                    encoding="utf-8")
    return path
