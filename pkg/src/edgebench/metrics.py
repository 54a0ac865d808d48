"""KPI formulas: manual-intervention share, power, energy, statistics.

Rounding, once and for all: percentages round half away from zero
(manual-intervention share to 2 decimals, overheads to 1); everything
else is left unrounded here and formatted only at the reporting layer.
Percentile is nearest-rank (the ceil(0.95 n)-th smallest sample) and
STDEV is the sample standard deviation (ddof=1, zero for n=1).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import numpy as np

from .model import (
    ACTION_MODES,
    LEDGER_PHASES,
    ActionEntry,
    ActionLedger,
    SampleSeries,
    StatsSummary,
)

LEDGER_CSV_HEADER = ("phase", "action_id", "description", "mode")

HOURS_PER_DAY = 24.0
DEFAULT_MEM_W_PER_GB = 0.2


class MetricsInputError(ValueError):
    """A precondition of a formula does not hold."""


def round_half_away(value: float, decimals: int) -> float:
    """Round half away from zero at ``decimals`` places.

    Python's ``round`` is half-to-even; published percentage tables use
    the schoolbook rule, so this goes through ``Decimal``.
    """
    q = Decimal(1).scaleb(-decimals)
    return float(Decimal(repr(float(value))).quantize(q, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class PowerModelParams:
    """Linear node power model: idle floor, CPU span, memory adder."""

    p_idle_w: float
    p_max_w: float
    mem_w_per_gb: float = DEFAULT_MEM_W_PER_GB


def power_params_violations(params: PowerModelParams) -> list[str]:
    out: list[str] = []
    if not params.p_idle_w > 0:
        out.append("p_idle_w must be positive")
    if not params.p_max_w > params.p_idle_w:
        out.append("p_max_w must exceed p_idle_w")
    if params.mem_w_per_gb < 0:
        out.append("mem_w_per_gb must be nonnegative")
    return out


@dataclass(frozen=True)
class MipResult:
    phase: str
    c_a: int
    k_a: int
    mip_pct: float


def compute_mip(treatment: ActionLedger, baseline: ActionLedger,
                phase: str) -> MipResult:
    """Manual-intervention share of ``phase``: treatment manual count over
    baseline manual count, as a percentage rounded to 2 decimals.

    Rejects a baseline with zero manual actions in the phase (the ratio
    is undefined there, not 0 or 100).
    """
    c_a = treatment.manual_count(phase)
    k_a = baseline.manual_count(phase)
    if k_a == 0:
        raise MetricsInputError(
            f"baseline ledger '{baseline.label}' has no manual actions "
            f"in phase '{phase}'"
        )
    return MipResult(phase=phase, c_a=c_a, k_a=k_a,
                     mip_pct=round_half_away(100.0 * c_a / k_a, 2))


def estimate_power(u_cpu: float, mem_gb: float,
                   params: PowerModelParams) -> float:
    """Node power draw in watts for mean CPU utilization ``u_cpu`` (0..1)
    and mean memory footprint ``mem_gb``."""
    problems = power_params_violations(params)
    if problems:
        raise MetricsInputError("; ".join(problems))
    if not 0.0 <= u_cpu <= 1.0:
        raise MetricsInputError(f"u_cpu must lie in [0, 1], got {u_cpu}")
    if mem_gb < 0:
        raise MetricsInputError(f"mem_gb must be nonnegative, got {mem_gb}")
    return (params.p_idle_w
            + (params.p_max_w - params.p_idle_w) * u_cpu
            + params.mem_w_per_gb * mem_gb)


def daily_energy(power_w: float) -> float:
    """Energy in kWh for one day of constant draw ``power_w``."""
    if power_w < 0:
        raise MetricsInputError(f"power must be nonnegative, got {power_w}")
    return power_w * HOURS_PER_DAY / 1000.0


def p95_rank(n: int) -> int:
    """1-based nearest-rank index of the 95th percentile in a sorted
    sample of size n: ceil(0.95 n), computed in exact integer math."""
    return -((-19 * n) // 20)


def aggregate_stats(values) -> StatsSummary:
    """MIN/MAX/AVG/P95/STDEV summary of a nonempty sample."""
    data = np.asarray(list(values), dtype=np.float64)
    if data.size == 0:
        raise MetricsInputError("cannot summarize an empty sample")
    if not np.all(np.isfinite(data)):
        raise MetricsInputError("sample contains non-finite values")
    ordered = np.sort(data)
    n = int(data.size)
    stdev = float(np.std(data, ddof=1)) if n > 1 else 0.0
    return StatsSummary(
        n=n,
        min=float(ordered[0]),
        max=float(ordered[-1]),
        avg=float(np.mean(data)),
        p95=float(ordered[p95_rank(n) - 1]),
        stdev=stdev,
    )


def mean_over_window(series: SampleSeries) -> tuple[float, float]:
    """Mean CPU utilization and mean memory (GB) over a sample series."""
    if not series.samples:
        raise MetricsInputError(f"series for node '{series.node}' is empty")
    n = len(series.samples)
    cpu = math.fsum(s.cpu_util for s in series.samples) / n
    mem = math.fsum(s.mem_gb for s in series.samples) / n
    return cpu, mem


def compute_overhead(treatment: float, baseline: float) -> float:
    """Relative overhead of treatment over baseline as a percentage,
    rounded to 1 decimal.  Requires a positive baseline."""
    if not baseline > 0:
        raise MetricsInputError(
            f"baseline must be positive, got {baseline}"
        )
    return round_half_away(100.0 * (treatment - baseline) / baseline, 1)


class LedgerFormatError(ValueError):
    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def parse_action_ledger(text: str, label: str) -> ActionLedger:
    """Parse ledger CSV (header ``phase,action_id,description,mode``)."""
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row]
    if not rows or tuple(rows[0]) != LEDGER_CSV_HEADER:
        raise LedgerFormatError(
            [f"ledger header must be {','.join(LEDGER_CSV_HEADER)}"]
        )
    problems: list[str] = []
    entries: list[ActionEntry] = []
    for lineno, row in enumerate(rows[1:], 2):
        if len(row) != 4:
            problems.append(f"row {lineno}: expected 4 fields, got {len(row)}")
            continue
        entries.append(ActionEntry(phase=row[0], action_id=row[1],
                                   description=row[2], mode=row[3]))
    ledger = ActionLedger(label=label, entries=tuple(entries))
    seen: set[str] = set()
    for e in ledger.entries:
        if e.phase not in LEDGER_PHASES:
            problems.append(
                f"action '{e.action_id}': unknown phase '{e.phase}' "
                f"(expected one of {', '.join(LEDGER_PHASES)})"
            )
        if e.mode not in ACTION_MODES:
            problems.append(
                f"action '{e.action_id}': unknown mode '{e.mode}'"
            )
        if not e.action_id:
            problems.append("action ids must be nonempty")
        elif e.action_id in seen:
            problems.append(f"duplicate action id '{e.action_id}'")
        seen.add(e.action_id)
    if problems:
        raise LedgerFormatError(problems)
    return ledger


def read_action_ledger(path: str | Path) -> ActionLedger:
    path = Path(path)
    return parse_action_ledger(path.read_text(encoding="utf-8"), path.stem)


def dump_action_ledger(ledger: ActionLedger) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(LEDGER_CSV_HEADER)
    for e in ledger.entries:
        writer.writerow([e.phase, e.action_id, e.description, e.mode])
    return buf.getvalue()


def write_action_ledger(ledger: ActionLedger, path: str | Path) -> None:
    Path(path).write_text(dump_action_ledger(ledger), encoding="utf-8")
