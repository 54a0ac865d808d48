"""Acceptance suite: one test per shipped claim.

Each test checks one published table or figure reproduction, oracle
equivalence, or end-to-end property at its stated tolerance, then
prints a single PASS/FAIL line (visible with ``pytest -s`` and in
failure reports).  Published values appear as literals here on
purpose: they are the contract, not something to recompute.
"""

import math
import random
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from edgebench import cam, cli, fixtures, kvdoc, metrics, report, specfile
from edgebench.model import (
    ClusterSpec,
    ExperimentSpec,
    NodeProfile,
    component_phase,
    ns_to_s,
    pause_batch,
    s_to_ns,
)
from edgebench.probes import measure_pod_batch, run_campaign
from edgebench.sim import open_session
from edgebench.specfile import ArmConfig, CampaignConfig, dump_campaign

CORPUS_DIR = Path(__file__).resolve().parent.parent / "docs" / "cam-corpus"


def _verdict(num: int, name: str, problems: list[str],
             started: float, budget_s: float) -> None:
    elapsed = time.perf_counter() - started
    if elapsed >= budget_s:
        problems.append(f"took {elapsed:.1f} s, budget {budget_s:.0f} s")
    status = "FAIL" if problems else "PASS"
    print(f"[acceptance {num}] {name}: {status} ({elapsed:.2f} s)")
    assert not problems, (
        f"[acceptance {num}] {name}: " + "; ".join(problems[:20])
    )


def _tiny_records():
    """Smallest two-arm record set that lets build_report run."""
    cluster = ClusterSpec(name="tiny", nodes=(
        NodeProfile("cp", "control-plane", cpu_cores=2, mem_gb=4.0),
        NodeProfile("w1", "worker", cpu_cores=2, mem_gb=4.0),
    ))
    spec = ExperimentSpec(id="tiny", cluster=cluster, workload=pause_batch(1),
                          scale_points=(1,), repetitions=1, seed=1)
    return (run_campaign(spec, label="treatment")
            + run_campaign(spec, label="baseline"))


def test_c1_intervention_share_exactness():
    started = time.perf_counter()
    problems: list[str] = []
    treatment, baseline = fixtures.ledgers_table3()

    expected = {
        "k8s-installation": (4, 42, 9.52),
        "service-deployment": (2, 11, 18.18),
        "cluster-deployment": (3, 19, 15.79),
    }
    for phase, (c_a, k_a, pct) in expected.items():
        row = metrics.compute_mip(treatment, baseline, phase)
        if (row.c_a, row.k_a) != (c_a, k_a):
            problems.append(
                f"{phase}: counts {row.c_a}/{row.k_a}, expected {c_a}/{k_a}"
            )
        if row.mip_pct != pct:
            problems.append(f"{phase}: share {row.mip_pct}, expected {pct}")

    # The published cluster-deployment share disagrees with its own
    # action counts; the report must surface that, and only that, as a
    # discrepancy note.
    built = report.build_report(
        _tiny_records(),
        treatment_ledger=treatment,
        baseline_ledger=baseline,
        mip_reference=dict(fixtures.TABLE3_PUBLISHED),
    )
    rows = {r.phase: r for r in built.mip}
    cd = rows.get("cluster-deployment")
    if cd is None or cd.note is None:
        problems.append("cluster-deployment row lacks the discrepancy note")
    elif "25.3" not in cd.note or "15.79" not in cd.note:
        problems.append(f"discrepancy note incomplete: {cd.note}")
    for phase in ("k8s-installation", "service-deployment"):
        row = rows.get(phase)
        if row is None:
            problems.append(f"{phase}: row missing from the report")
        elif row.note is not None:
            problems.append(f"{phase}: unexpected note: {row.note}")

    _verdict(1, "intervention-share exactness", problems, started, 1.0)


XEON = metrics.PowerModelParams(p_idle_w=35.0, p_max_w=95.0)
HOST = metrics.PowerModelParams(p_idle_w=fixtures.TABLE5_P_IDLE_W,
                                p_max_w=fixtures.TABLE5_P_MAX_W)

# (arm, mean cpu utilization, resident GB, published W) per node
TABLE4_NODES = (
    ("k8s", 0.0176, 1.15, 36.3),
    ("k8s", 0.0110, 0.99, 35.8),
    ("k8s", 0.0069, 0.57, 35.5),
    ("codeco", 0.0466, 3.14, 38.3),
    ("codeco", 0.0381, 2.92, 37.8),
    ("codeco", 0.0230, 1.22, 36.6),
)

TABLE4_CLUSTER_W = {"k8s": 107.6, "codeco": 112.7}
TABLE5_CLUSTER_W = {"kind": 64.5, "codeco-kind": 71.4}
DAILY_ENERGY_KWH = ((107.6, 2.58), (112.7, 2.70), (64.5, 1.55), (71.4, 1.71))


def test_c2_power_model_reproduction():
    started = time.perf_counter()
    problems: list[str] = []

    cluster_sums: dict[str, float] = {}
    for arm, cpu, mem, published in TABLE4_NODES:
        watts = metrics.estimate_power(cpu, mem, XEON)
        if abs(watts - published) > 0.15:
            problems.append(
                f"{arm} node ({cpu}, {mem}): {watts:.3f} W vs {published}"
            )
        cluster_sums[arm] = (cluster_sums.get(arm, 0.0)
                             + metrics.round_half_away(watts, 1))
    for arm, published in TABLE4_CLUSTER_W.items():
        if abs(cluster_sums[arm] - published) > 0.2 + 1e-9:
            problems.append(
                f"{arm} cluster: {cluster_sums[arm]:.1f} W vs {published}"
            )

    host_20: dict[str, float] = {}
    for nodes, arm, cpu, mem, published in fixtures.TABLE5_POINTS:
        watts = metrics.estimate_power(cpu, mem, HOST)
        if abs(watts - published) > 0.15:
            problems.append(
                f"{arm}@{nodes} nodes: {watts:.3f} W vs {published}"
            )
        if nodes == 20:
            host_20[arm] = metrics.round_half_away(watts, 1)
    for arm, published in TABLE5_CLUSTER_W.items():
        if abs(host_20.get(arm, float("nan")) - published) > 0.2 + 1e-9:
            problems.append(
                f"{arm} host: {host_20.get(arm)} W vs {published}"
            )

    for watts, published_kwh in DAILY_ENERGY_KWH:
        kwh = metrics.daily_energy(watts)
        if abs(kwh - published_kwh) > 0.01:
            problems.append(
                f"daily energy at {watts} W: {kwh:.4f} vs {published_kwh}"
            )

    _verdict(2, "power-model reproduction", problems, started, 1.0)


def test_c3_phase_decomposition_consistency():
    started = time.perf_counter()
    problems: list[str] = []

    stage_report, _ = cli.execute_campaign(fixtures.campaign_fig4a(), Path("."))
    stage = {t.label: t for t in stage_report.timelines}
    for label, published in (("nodes-3", 532.3), ("nodes-9", 1023.7)):
        timeline = stage.get(label)
        if timeline is None:
            problems.append(f"stage timeline '{label}' missing")
            continue
        if abs(timeline.total_s - published) > 1e-6:
            problems.append(
                f"{label}: total {timeline.total_s!r} s vs {published}"
            )
        drift = abs(math.fsum(s.duration_s for s in timeline.shares)
                    - timeline.total_s)
        if drift > 1e-9:
            problems.append(f"{label}: phase sum drifts by {drift} s")

    component_report, _ = cli.execute_campaign(fixtures.campaign_fig4b(),
                                               Path("."))
    comp = {t.label: t for t in component_report.timelines}
    netma = component_phase("NetMA")
    for label, published in (("nodes-3", 33.7), ("nodes-9", 40.5)):
        timeline = comp.get(label)
        if timeline is None:
            problems.append(f"component timeline '{label}' missing")
            continue
        shares = [s.share_pct for s in timeline.shares if s.phase_id == netma]
        if len(shares) != 1:
            problems.append(f"{label}: expected one NetMA share, got {shares}")
            continue
        if abs(shares[0] - published) > 0.2:
            problems.append(
                f"{label}: NetMA share {shares[0]:.3f} pp vs {published}"
            )

    _verdict(3, "phase-decomposition consistency", problems, started, 5.0)


def test_c4_overhead_arithmetic():
    started = time.perf_counter()
    problems: list[str] = []
    cases = (
        (57.11, 37.73, 51.4),
        (112.7, 107.6, 4.7),
        (71.4, 64.5, 10.7),
    )
    for treatment, baseline, published in cases:
        got = metrics.compute_overhead(treatment, baseline)
        if got != published:
            problems.append(
                f"overhead({treatment}, {baseline}) = {got}, "
                f"expected +{published}"
            )
    _verdict(4, "overhead arithmetic", problems, started, 1.0)


def _oracle_batch(cluster: ClusterSpec, seed: int, n: int):
    """Recompute scheduled latencies from the documented draw order:
    one readiness jitter per pod in creation order, then one deletion
    jitter per pod in the same order, round-robin across workers."""
    workers = cluster.workers()
    gen = np.random.Generator(np.random.PCG64(seed))
    readiness: list[float] = []
    placed: list[NodeProfile] = []
    admitted: dict[str, int] = {}
    for i in range(n):
        node = workers[i % len(workers)]
        admitted[node.name] = admitted.get(node.name, 0) + 1
        k = admitted[node.name]
        e = node.jitter_rel * gen.uniform(-1.0, 1.0)
        latency = node.readiness_base_s + node.readiness_slope_s * k * (1.0 + e)
        readiness.append(ns_to_s(s_to_ns(latency)))
        placed.append(node)
    deletion: list[float] = []
    for node in placed:
        e = node.jitter_rel * gen.uniform(-1.0, 1.0)
        deletion.append(ns_to_s(s_to_ns(node.deletion_base_s * (1.0 + e))))
    return tuple(readiness), tuple(deletion)


def test_c5_probe_simulator_oracle_equivalence():
    started = time.perf_counter()
    problems: list[str] = []
    config = fixtures.campaign_inf2()
    clusters = (config.treatment.cluster, config.baseline.cluster)
    seed_source = np.random.Generator(np.random.PCG64(20260817))
    seeds = [int(s) for s in seed_source.integers(0, 2 ** 63, size=100)]

    for index, seed in enumerate(seeds):
        cluster = clusters[index % 2]
        for n in (1, 10, 50, 150):
            got = measure_pod_batch(open_session(cluster, seed), n)
            want_ready, want_deleted = _oracle_batch(cluster, seed, n)
            if got.per_pod_readiness_s != want_ready:
                problems.append(f"seed {seed} n={n}: readiness mismatch")
            elif got.readiness_makespan_s != max(want_ready):
                problems.append(f"seed {seed} n={n}: makespan mismatch")
            if got.per_pod_deletion_s != want_deleted:
                problems.append(f"seed {seed} n={n}: deletion mismatch")
            if len(problems) > 5:
                _verdict(5, "probe/simulator oracle equivalence",
                         problems, started, 30.0)

    _verdict(5, "probe/simulator oracle equivalence", problems, started, 30.0)


def test_c6_statistics_oracle():
    started = time.perf_counter()
    problems: list[str] = []
    rng = np.random.Generator(np.random.PCG64(660817))

    for case in range(1000):
        n = int(rng.integers(1, 10_001))
        shape = case % 3
        if shape == 0:
            values = rng.normal(rng.uniform(-100.0, 100.0),
                                rng.uniform(0.5, 50.0), size=n)
        elif shape == 1:
            values = rng.uniform(-1000.0, 1000.0, size=n)
        else:
            values = rng.lognormal(0.0, 1.0, size=n)

        summary = metrics.aggregate_stats(values)
        ordered = np.sort(values)
        rank = math.ceil(Fraction(19 * n, 20))
        data = values.tolist()
        mean = math.fsum(data) / n
        scale = max(1.0, math.fsum(map(abs, data)) / n)

        if summary.n != n:
            problems.append(f"case {case}: n {summary.n} != {n}")
        if summary.min != float(ordered[0]) or summary.max != float(ordered[-1]):
            problems.append(f"case {case}: min/max not bit-identical")
        if summary.p95 != float(ordered[rank - 1]):
            problems.append(f"case {case}: p95 rank mismatch (n={n})")
        if abs(summary.avg - mean) > 1e-12 * scale:
            problems.append(f"case {case}: avg off by {summary.avg - mean}")
        if n == 1:
            if summary.stdev != 0.0:
                problems.append(f"case {case}: stdev of n=1 is {summary.stdev}")
        else:
            stdev = math.sqrt(
                math.fsum((x - mean) ** 2 for x in data) / (n - 1)
            )
            if abs(summary.stdev - stdev) > 1e-12 * max(1.0, stdev):
                problems.append(
                    f"case {case}: stdev off by {summary.stdev - stdev}"
                )
        if len(problems) > 5:
            break

    _verdict(6, "statistics oracle", problems, started, 30.0)


_SERVICE_NAMES = ("alpha", "beta", "gamma", "delta", "relay", "cache",
                  "ingest", "store")


def _generated_manifest(rnd: random.Random) -> cam.CamManifest:
    names = rnd.sample(_SERVICE_NAMES, rnd.randint(0, 5))
    services = tuple(
        cam.CamService(
            name=name,
            image=rnd.choice((
                "",
                f"registry.local/{name}:{rnd.randint(0, 9)}.{rnd.randint(0, 9)}",
            )),
            replicas=rnd.randint(1, 4),
        )
        for name in names
    )
    channels: list[cam.ServiceChannel] = []
    if len(names) >= 2:
        pairs = [(a, b) for a in names for b in names if a != b]
        rnd.shuffle(pairs)
        for a, b in pairs[: rnd.randint(0, min(4, len(pairs)))]:
            channels.append(cam.ServiceChannel(
                from_service=a,
                to_service=b,
                service_class=rnd.choice(cam.SERVICE_CLASSES),
                bandwidth_bps=rnd.choice((
                    rnd.randint(1, 10 ** 10),
                    rnd.randint(1, 10 ** 4) * 10 ** 6,
                    rnd.randint(1, 10 ** 4) * 10 ** 3,
                )),
                max_delay_ns=rnd.choice((
                    rnd.randint(1, 10 ** 12),
                    rnd.randint(1, 10 ** 4) * 10 ** 6,
                )),
            ))
    return cam.CamManifest(
        app_name=rnd.choice(("shop", "iot-mesh", "edge.app", "A1")),
        services=services,
        service_channels=tuple(channels),
        performance_profile=rnd.choice((None,) + cam.PERFORMANCE_PROFILES),
        app_energy_limit=rnd.choice((
            None, float(rnd.randint(0, 500)), rnd.uniform(0.0, 100.0),
        )),
        app_failure_tolerance=rnd.choice((None, "", "zone", "2 nodes")),
        scheduler_name=rnd.choice(("default-scheduler", "qos-scheduler")),
        compliance_class=rnd.choice((None, "eu-data-act")),
        qos_class=rnd.choice((None,) + cam.QOS_CLASSES),
        security_class=rnd.choice((None, "confidential", "open")),
    )


def _check_corpus(problems: list[str]) -> None:
    files = sorted(CORPUS_DIR.glob("*.cam"))
    if len(files) != 5:
        problems.append(f"corpus has {len(files)} manifests, expected 5")
    parsed: dict[str, cam.CamManifest] = {}
    for path in files:
        try:
            manifest = cam.parse_cam(path.read_text(encoding="utf-8"))
        except (kvdoc.DocumentSyntaxError, cam.CamValidationError) as err:
            problems.append(f"{path.name}: does not parse: {err}")
            continue
        parsed[path.stem] = manifest
        if cam.parse_cam(cam.serialize_cam(manifest)) != manifest:
            problems.append(f"{path.name}: round-trip is not identity")

    pair = parsed.get("frontend-backend")
    if pair is None:
        problems.append("frontend-backend manifest missing")
    else:
        channel = pair.service_channels[0] if pair.service_channels else None
        if channel is None or channel.bandwidth_bps != 5_000_000:
            problems.append("bandwidth '5M' did not normalize to 5000000")
        if channel is None or channel.max_delay_ns != 10_000_000:
            problems.append("maxDelay '10ms' did not normalize to 10000000")
        if pair.qos_class != "Gold" or len(pair.services) != 2:
            problems.append("frontend-backend normal form off")

    minimal = parsed.get("minimal")
    if minimal is None or minimal.app_name != "hello-edge" \
            or minimal.scheduler_name != cam.DEFAULT_SCHEDULER \
            or minimal.services or minimal.service_channels:
        problems.append("minimal manifest normal form off")

    green = parsed.get("greenness")
    if green is None or green.performance_profile != "Greenness" \
            or green.app_energy_limit != 20.0 \
            or green.app_failure_tolerance != "":
        problems.append("greenness manifest normal form off")

    book = parsed.get("bookinfo")
    if book is None or len(book.services) != 4 \
            or len(book.service_channels) != 3 \
            or book.scheduler_name != "qos-scheduler":
        problems.append("bookinfo manifest normal form off")

    best = parsed.get("besteffort")
    if best is None:
        problems.append("besteffort manifest missing")
    else:
        if not any("x-owner" in w for w in best.warnings):
            problems.append("unknown key did not produce a warning")
        facts = (best.compliance_class, best.qos_class, best.security_class)
        if facts != ("eu-data-act", "Bronze", "confidential"):
            problems.append(f"besteffort intents off: {facts}")
        if (not best.service_channels
                or best.service_channels[0].service_class != "BESTEFFORT"
                or best.service_channels[0].max_delay_ns != 10 ** 9):
            problems.append("besteffort channel normal form off")


def test_c7_cam_round_trip():
    started = time.perf_counter()
    problems: list[str] = []

    rnd = random.Random(71)
    for case in range(200):
        manifest = _generated_manifest(rnd)
        text = cam.serialize_cam(manifest)
        reparsed = cam.parse_cam(text)
        if reparsed != manifest:
            problems.append(f"generated case {case}: round-trip inequality")
        elif cam.serialize_cam(reparsed) != text:
            problems.append(f"generated case {case}: serialize not idempotent")
        if len(problems) > 5:
            break

    _check_corpus(problems)

    fuzz = random.Random(0xFA22)
    seed_text = (CORPUS_DIR / "frontend-backend.cam").read_text(
        encoding="utf-8")
    alphabet = "ab:#-\n  \"\\\t.0589KMGmsu"
    for case in range(100_000):
        if case % 2:
            text = "".join(fuzz.choice(alphabet)
                           for _ in range(fuzz.randint(0, 60)))
        else:
            chars = list(seed_text)
            for _ in range(fuzz.randint(1, 6)):
                chars[fuzz.randrange(len(chars))] = fuzz.choice(alphabet)
            text = "".join(chars)
        try:
            cam.parse_cam(text)
        except (kvdoc.DocumentSyntaxError, cam.CamValidationError):
            pass
        except Exception as err:  # noqa: BLE001 - the claim is totality
            problems.append(
                f"fuzz case {case}: {type(err).__name__}: {err}"
            )
            break

    _verdict(7, "manifest round-trip and fuzz totality", problems,
             started, 60.0)


def test_c8_end_to_end_determinism(tmp_path, capsys):
    started = time.perf_counter()
    problems: list[str] = []

    written = fixtures.write_fixture("inf2-150pods", tmp_path / "fixture")
    spec_path = next(p for p in written if p.suffix == ".spec")
    out_dirs = []
    for sub in ("first", "second"):
        out = tmp_path / sub
        rc = cli.main(["run", "--spec", str(spec_path), "--out", str(out)])
        if rc != 0:
            problems.append(f"{sub} run exited {rc}")
        out_dirs.append(out)
    capsys.readouterr()

    names = sorted(p.name for p in out_dirs[0].iterdir())
    if names != sorted(p.name for p in out_dirs[1].iterdir()):
        problems.append("the two runs wrote different file sets")
    else:
        diffs = [
            name for name in names
            if (out_dirs[0] / name).read_bytes()
            != (out_dirs[1] / name).read_bytes()
        ]
        if diffs:
            problems.append(f"outputs differ between runs: {', '.join(diffs)}")

    loaded = report.load_report(out_dirs[0] / "report.json")
    violations = report.check_consistency(loaded)
    if violations:
        problems.append(f"consistency violations: {violations[:3]}")

    cells = {(c.label, c.scale, c.metric): c.stats for c in loaded.lifecycle}
    for label, published in (("codeco", 57.11), ("k8s", 37.73)):
        stats = cells.get((label, 150, "readiness_mean_s"))
        if stats is None:
            problems.append(f"no readiness cell for {label} at scale 150")
        elif abs(stats.avg - published) > 0.02 * published:
            problems.append(
                f"{label} mean readiness {stats.avg:.4f} s is more than "
                f"2% from {published}"
            )

    _verdict(8, "end-to-end determinism", problems, started, 60.0)


def test_c9_capacity_failure_mode(tmp_path, capsys):
    started = time.perf_counter()
    problems: list[str] = []

    # One 10-core worker at the default pod density: room for 100 pods.
    cluster = ClusterSpec(name="cap100", nodes=(
        NodeProfile("cp", "control-plane", cpu_cores=4, mem_gb=8.0),
        NodeProfile("w1", "worker", cpu_cores=10, mem_gb=16.0,
                    readiness_base_s=1.0, readiness_slope_s=0.05,
                    deletion_base_s=0.5),
    ))
    spec = ExperimentSpec(id="cap", cluster=cluster, workload=pause_batch(1),
                          scale_points=(50, 100, 150), repetitions=2, seed=9)
    records = run_campaign(spec, label="one")
    if len(records) != 6:
        problems.append(f"expected 6 runs, got {len(records)}")
    for record in records:
        oversized = record.scale > 100
        if record.failed != oversized:
            problems.append(
                f"scale {record.scale} rep {record.repetition}: "
                f"failed={record.failed}"
            )
        if record.batch is None:
            problems.append(f"scale {record.scale}: no batch retained")
            continue
        placed = len(record.batch.per_pod_readiness_s)
        if not oversized and (not record.batch.complete
                              or placed != record.scale):
            problems.append(
                f"scale {record.scale}: complete={record.batch.complete}, "
                f"placed {placed}"
            )
        if oversized:
            if record.batch.complete or placed != 100:
                problems.append(
                    f"scale {record.scale}: overflow placed {placed} pods, "
                    f"complete={record.batch.complete}"
                )
            if not record.failure or "capacity" not in record.failure:
                problems.append(
                    f"scale {record.scale}: failure reason '{record.failure}'"
                )

    # Same shape through the command line: failed cells land in the
    # report and failures.csv, not in the exit code.
    config = CampaignConfig(
        doc_id="cap100", seed=9, repetitions=2, scale_points=(50, 100, 150),
        workload=pause_batch(1),
        treatment=ArmConfig(label="one", cluster=cluster),
        baseline=ArmConfig(label="two", cluster=cluster),
    )
    spec_path = tmp_path / "cap100.spec"
    spec_path.write_text(dump_campaign(config), encoding="utf-8")
    out = tmp_path / "out"
    rc = cli.main(["run", "--spec", str(spec_path), "--out", str(out)])
    captured = capsys.readouterr()
    if rc != 0:
        problems.append(f"run exited {rc}: {captured.err.strip()}")
    if "arm one: 6 runs, 2 failed" not in captured.out:
        problems.append(f"run summary off: {captured.out.splitlines()[:3]}")
    if not (out / "failures.csv").exists():
        problems.append("failures.csv missing")
    loaded = report.load_report(out / "report.json")
    failed_cells = {(f.label, f.scale, f.repetition) for f in loaded.failures}
    expected_cells = {(label, 150, rep)
                      for label in ("one", "two") for rep in (1, 2)}
    if failed_cells != expected_cells:
        problems.append(
            f"failed cells {sorted(failed_cells)} != oversized cells"
        )
    lifecycle_scales = {c.scale for c in loaded.lifecycle}
    if lifecycle_scales != {50, 100}:
        problems.append(
            f"lifecycle covers scales {sorted(lifecycle_scales)}, "
            f"expected only the deployable ones"
        )

    _verdict(9, "capacity failure mode", problems, started, 10.0)
