import csv
import io
import math
from decimal import Decimal
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgebench.metrics import (
    LedgerFormatError,
    MetricsInputError,
    PowerModelParams,
    aggregate_stats,
    compute_mip,
    compute_overhead,
    daily_energy,
    dump_action_ledger,
    estimate_power,
    mean_over_window,
    p95_rank,
    parse_action_ledger,
    power_params_violations,
    round_half_away,
)
from edgebench.model import ActionEntry, ActionLedger, Sample, SampleSeries


# ---------------------------------------------------------------------------
# rounding


def test_round_half_away_basic():
    assert round_half_away(2.5, 0) == 3.0
    assert round_half_away(-2.5, 0) == -3.0
    assert round_half_away(2.675, 2) == 2.68
    assert round_half_away(1.005, 2) == 1.01


def test_round_half_away_uses_repr_not_binary():
    # 2.675 is stored as 2.67499999... in binary; banker's rounding on the
    # binary value gives 2.67. The shortest-repr route gives 2.68.
    assert round(2.675, 2) == 2.67
    assert round_half_away(2.675, 2) == 2.68


@given(st.floats(min_value=-1e6, max_value=1e6), st.integers(0, 6))
def test_round_half_away_matches_decimal(value, decimals):
    expected = float(
        Decimal(repr(value)).quantize(Decimal(1).scaleb(-decimals), rounding="ROUND_HALF_UP")
    )
    assert round_half_away(value, decimals) == expected


# ---------------------------------------------------------------------------
# manual intervention percentage


def _ledger_with_counts(label, phase, manual, auto):
    """Ledger holding exactly `manual` manual and `auto` automated actions
    in `phase`."""
    entries = []
    for i in range(manual):
        entries.append(ActionEntry(phase, f"{label}-m-{i:03d}", "operator step", "manual"))
    for i in range(auto):
        entries.append(ActionEntry(phase, f"{label}-a-{i:03d}", "scripted step", "automated"))
    return ActionLedger(label=label, entries=tuple(entries))


# Frozen from hand computation: 100 * c_a / k_a, half-away 2dp.
MIP_CASES = [
    (4, 42, 9.52),
    (2, 11, 18.18),
    (3, 19, 15.79),
    (7, 7, 100.00),
    (0, 5, 0.00),
    (1, 3, 33.33),
]


@pytest.mark.parametrize("c_a,k_a,expected", MIP_CASES)
def test_compute_mip_frozen(c_a, k_a, expected):
    phase = "cluster-deployment"
    treatment = _ledger_with_counts("t", phase, c_a, 10)
    baseline = _ledger_with_counts("b", phase, k_a, 0)
    result = compute_mip(treatment, baseline, phase)
    assert result.mip_pct == expected
    assert result.c_a == c_a and result.k_a == k_a
    assert result.phase == phase


def test_compute_mip_rejects_zero_baseline():
    phase = "k8s-installation"
    treatment = _ledger_with_counts("t", phase, 3, 0)
    baseline = _ledger_with_counts("b", phase, 0, 12)
    with pytest.raises(MetricsInputError):
        compute_mip(treatment, baseline, phase)


def test_compute_mip_counts_only_requested_phase():
    treatment = ActionLedger(
        label="t",
        entries=(
            ActionEntry("cluster-deployment", "t-1", "x", "manual"),
            ActionEntry("k8s-installation", "t-2", "y", "manual"),
        ),
    )
    baseline = _ledger_with_counts("b", "cluster-deployment", 4, 0)
    result = compute_mip(treatment, baseline, "cluster-deployment")
    assert result.c_a == 1 and result.k_a == 4
    assert result.mip_pct == 25.0


@given(st.integers(0, 400), st.integers(1, 400))
@settings(max_examples=60)
def test_compute_mip_matches_fraction(c_a, k_a):
    phase = "service-deployment"
    got = compute_mip(
        _ledger_with_counts("t", phase, c_a, 0),
        _ledger_with_counts("b", phase, k_a, 0),
        phase,
    ).mip_pct
    # 2dp half-away on the exact rational, no float in the reference path
    scaled = Fraction(100 * c_a, k_a) * 100
    floor = scaled.numerator // scaled.denominator
    rounded = floor + (1 if scaled - floor >= Fraction(1, 2) else 0)
    assert got == pytest.approx(float(Fraction(rounded, 100)), abs=1e-9)


# ---------------------------------------------------------------------------
# power and energy

XEON = PowerModelParams(p_idle_w=35.0, p_max_w=95.0)
HOST = PowerModelParams(p_idle_w=60.0, p_max_w=165.0)

# Frozen watts from p_idle + (p_max-p_idle)*u + 0.2*mem, cross-checked
# against the published per-node readings at +-0.15 W.
POWER_CASES = [
    (XEON, 0.0466, 3.14, 38.424),
    (XEON, 0.0381, 2.92, 37.870),
    (XEON, 0.0230, 1.22, 36.624),
    (XEON, 0.0176, 1.15, 36.286),
    (XEON, 0.0110, 0.99, 35.858),
    (XEON, 0.0069, 0.57, 35.528),
    (HOST, 0.0060, 4.91, 61.612),
    (HOST, 0.0180, 4.98, 62.886),
    (HOST, 0.0240, 5.42, 63.604),
    (HOST, 0.0310, 6.28, 64.511),
    (HOST, 0.0230, 12.18, 64.851),
    (HOST, 0.0290, 12.92, 65.629),
    (HOST, 0.0420, 14.88, 67.386),
    (HOST, 0.0750, 17.70, 71.415),
]


@pytest.mark.parametrize("params,u_cpu,mem_gb,expected_w", POWER_CASES)
def test_estimate_power_frozen(params, u_cpu, mem_gb, expected_w):
    assert estimate_power(u_cpu, mem_gb, params) == pytest.approx(expected_w, abs=5e-4)


def test_estimate_power_bounds():
    assert estimate_power(0.0, 0.0, XEON) == 35.0
    assert estimate_power(1.0, 0.0, XEON) == 95.0


def test_estimate_power_rejects_bad_inputs():
    with pytest.raises(MetricsInputError):
        estimate_power(-0.01, 1.0, XEON)
    with pytest.raises(MetricsInputError):
        estimate_power(1.01, 1.0, XEON)
    with pytest.raises(MetricsInputError):
        estimate_power(0.5, -1.0, XEON)


@given(
    st.floats(0, 1),
    st.floats(0, 64),
    st.floats(1, 200),
    st.floats(0.1, 300),
)
def test_estimate_power_affine_in_cpu(u, mem, p_idle, span):
    params = PowerModelParams(p_idle_w=p_idle, p_max_w=p_idle + span)
    base = estimate_power(0.0, mem, params)
    est = estimate_power(u, mem, params)
    assert est == pytest.approx(base + span * u, rel=1e-12, abs=1e-9)
    assert est >= base - 1e-9


def test_power_params_violations():
    assert power_params_violations(XEON) == []
    bad = PowerModelParams(p_idle_w=95.0, p_max_w=35.0)
    assert any("p_max" in v for v in power_params_violations(bad))
    assert power_params_violations(PowerModelParams(p_idle_w=-1.0, p_max_w=10.0))


# Frozen kWh/day for the published cluster and host watt readings.
ENERGY_CASES = [
    (107.6, 2.5824),
    (112.7, 2.7048),
    (64.5, 1.548),
    (71.4, 1.7136),
]


@pytest.mark.parametrize("watts,kwh", ENERGY_CASES)
def test_daily_energy_frozen(watts, kwh):
    assert daily_energy(watts) == pytest.approx(kwh, abs=1e-9)


@given(st.floats(0, 1e4))
def test_daily_energy_linear(watts):
    assert daily_energy(watts) == pytest.approx(watts * 24.0 / 1000.0, rel=1e-12)


def test_daily_energy_rejects_negative():
    with pytest.raises(MetricsInputError):
        daily_energy(-1.0)


# ---------------------------------------------------------------------------
# overhead

OVERHEAD_CASES = [
    (57.11, 37.73, 51.4),
    (112.7, 107.6, 4.7),
    (71.4, 64.5, 10.7),
    (100.0, 100.0, 0.0),
    (90.0, 100.0, -10.0),
]


@pytest.mark.parametrize("treatment,baseline,expected", OVERHEAD_CASES)
def test_compute_overhead_frozen(treatment, baseline, expected):
    assert compute_overhead(treatment, baseline) == expected


def test_compute_overhead_rejects_nonpositive_baseline():
    with pytest.raises(MetricsInputError):
        compute_overhead(10.0, 0.0)
    with pytest.raises(MetricsInputError):
        compute_overhead(10.0, -5.0)


# ---------------------------------------------------------------------------
# aggregation


def test_aggregate_stats_small_vector():
    s = aggregate_stats([1.0, 2.0, 3.0, 4.0, 5.0])
    assert s.n == 5
    assert s.min == 1.0 and s.max == 5.0
    assert s.avg == 3.0
    assert s.p95 == 5.0
    assert s.stdev == pytest.approx(math.sqrt(2.5))


def test_aggregate_stats_single_sample():
    s = aggregate_stats([4.2])
    assert s.n == 1
    assert s.stdev == 0.0
    assert s.min == s.max == s.avg == s.p95 == 4.2


def test_aggregate_stats_rejects_empty_and_nonfinite():
    with pytest.raises(MetricsInputError):
        aggregate_stats([])
    with pytest.raises(MetricsInputError):
        aggregate_stats([1.0, float("nan")])
    with pytest.raises(MetricsInputError):
        aggregate_stats([1.0, float("inf")])


@pytest.mark.parametrize(
    "n,rank",
    [(1, 1), (2, 2), (19, 19), (20, 19), (21, 20), (40, 38), (100, 95), (101, 96)],
)
def test_p95_rank_nearest(n, rank):
    assert p95_rank(n) == rank


@given(st.integers(1, 100_000))
def test_p95_rank_is_ceiling(n):
    # nearest-rank definition: ceil(0.95 * n), derived via Fraction so the
    # reference never touches float arithmetic.
    exact = Fraction(19 * n, 20)
    expected = exact.numerator // exact.denominator
    if exact.denominator != 1:
        expected += 1
    assert p95_rank(n) == expected


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=400))
@settings(max_examples=200)
def test_aggregate_stats_matches_brute_force(values):
    s = aggregate_stats(values)
    ordered = sorted(values)
    assert s.n == len(values)
    assert s.min == ordered[0]
    assert s.max == ordered[-1]
    assert s.avg == pytest.approx(math.fsum(values) / len(values), rel=1e-12, abs=1e-9)
    assert s.p95 == ordered[p95_rank(len(values)) - 1]
    if len(values) > 1:
        mean = math.fsum(values) / len(values)
        var = math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1)
        assert s.stdev == pytest.approx(math.sqrt(var), rel=1e-9, abs=1e-9)
    else:
        assert s.stdev == 0.0


def test_aggregate_stats_accepts_numpy_array():
    s = aggregate_stats(np.linspace(0.0, 1.0, 21))
    assert s.p95 == pytest.approx(0.95)


def test_mean_over_window():
    series = SampleSeries(
        node="n1",
        samples=(
            Sample(at_ns=0, cpu_util=0.2, mem_gb=1.0),
            Sample(at_ns=1, cpu_util=0.4, mem_gb=3.0),
        ),
    )
    cpu, mem = mean_over_window(series)
    assert cpu == pytest.approx(0.3)
    assert mem == pytest.approx(2.0)
    with pytest.raises(MetricsInputError):
        mean_over_window(SampleSeries(node="n1", samples=()))


# ---------------------------------------------------------------------------
# action ledger round-trip


def _demo_ledger():
    entries = [
        ActionEntry("cluster-deployment", "a-01", "provision node", "automated"),
        ActionEntry("cluster-deployment", "a-02", "join node", "manual"),
        ActionEntry("k8s-installation", "a-03", "install kubelet", "automated"),
    ]
    return ActionLedger(label="demo", entries=tuple(entries))


def test_ledger_round_trip():
    text = dump_action_ledger(_demo_ledger())
    back = parse_action_ledger(text, label="demo")
    assert back == _demo_ledger()
    assert back.manual_count("cluster-deployment") == 1
    assert back.manual_count("k8s-installation") == 0
    assert back.phases() == ("cluster-deployment", "k8s-installation")


def test_ledger_csv_header_is_stable():
    text = dump_action_ledger(_demo_ledger())
    assert text.splitlines()[0] == "phase,action_id,description,mode"


def test_parse_ledger_rejects_bad_header():
    with pytest.raises(LedgerFormatError):
        parse_action_ledger("a,b,c\nx,y,z\n", label="x")


def test_parse_ledger_rejects_bad_mode():
    text = "phase,action_id,description,mode\ncluster-deployment,a-1,step,sometimes\n"
    with pytest.raises(LedgerFormatError) as err:
        parse_action_ledger(text, label="x")
    assert "mode" in str(err.value)


def test_parse_ledger_rejects_unknown_phase():
    text = "phase,action_id,description,mode\nwarmup,a-1,step,automated\n"
    with pytest.raises(LedgerFormatError) as err:
        parse_action_ledger(text, label="x")
    assert "phase" in str(err.value)


def test_parse_ledger_rejects_duplicate_action_id():
    text = (
        "phase,action_id,description,mode\n"
        "cluster-deployment,a-1,step,automated\n"
        "cluster-deployment,a-1,again,manual\n"
    )
    with pytest.raises(LedgerFormatError):
        parse_action_ledger(text, label="x")


def test_parse_ledger_collects_all_problems():
    text = (
        "phase,action_id,description,mode\n"
        "warmup,a-1,step,automated\n"
        "cluster-deployment,a-2,step,sometimes\n"
    )
    with pytest.raises(LedgerFormatError) as err:
        parse_action_ledger(text, label="x")
    assert len(err.value.violations) == 2


def test_parse_ledger_tolerates_quoted_description():
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["phase", "action_id", "description", "mode"])
    writer.writerow(["cluster-deployment", "a-1", "step, with comma", "automated"])
    ledger = parse_action_ledger(buf.getvalue(), label="x")
    assert ledger.entries[0].description == "step, with comma"
