"""Command line interface.

Subcommands: ``run`` (execute a campaign document and emit reports),
``validate-cam`` (check an application manifest), ``mip`` (intervention
shares from a pair of action ledgers), ``fixtures`` (write a bundled
reference scenario), ``report`` (re-emit tables from a saved
report.json).

Exit codes: 0 success, 1 input or spec error, 2 report consistency
violation, 3 manifest validation failure.  Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import cam, fixtures, metrics, probes, report, sim, specfile
from .kvdoc import DocumentSyntaxError

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INCONSISTENT = 2
EXIT_CAM_INVALID = 3

OUT_ENV = "EDGEBENCH_OUT"
FORMATS = ("csv", "json", "plot")


class _ExitInput(Exception):
    """Abort the subcommand with an input-error diagnostic."""

    def __init__(self, message: str):
        self.message = message


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags by default; 2 is taken.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _out_dir(args) -> Path:
    if args.out:
        return Path(args.out)
    env = os.environ.get(OUT_ENV)
    if env:
        return Path(env)
    raise _ExitInput(f"no output directory: pass --out or set {OUT_ENV}")


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise _ExitInput(f"cannot read '{path}': {err.strerror or err}")


def _formats(raw: str) -> tuple[str, ...]:
    chosen = tuple(part.strip() for part in raw.split(",") if part.strip())
    bad = [f for f in chosen if f not in FORMATS]
    if bad or not chosen:
        raise _ExitInput(
            f"--format takes a comma-separated subset of "
            f"{','.join(FORMATS)}, got '{raw}'"
        )
    return chosen


def _arm_session_factory(config: specfile.CampaignConfig,
                         arm: specfile.ArmConfig):
    def factory(cluster, seed):
        return sim.open_session(
            cluster, seed,
            resource_profiles=arm.resources,
            pods_per_core=config.pods_per_core,
            registration_delay_s=config.registration_delay_s,
        )
    return factory


def execute_campaign(
    config: specfile.CampaignConfig, base_dir: Path,
) -> tuple[report.KpiReport, list[probes.RunRecord]]:
    """Run every arm of a campaign and assemble the report.

    ``base_dir`` anchors relative ledger and reference paths.
    """
    records: list[probes.RunRecord] = []
    samples: dict[str, list] = {}
    timelines: dict[str, object] = {}
    power_params: dict[str, dict[str, metrics.PowerModelParams]] = {}
    for arm in config.arms():
        spec = config.arm_spec(arm)
        factory = _arm_session_factory(config, arm)
        records.extend(probes.run_campaign(spec, factory, label=arm.label))
        if arm.phases:
            session = factory(arm.cluster,
                              probes.derive_seed(config.seed, 0, 1))
            timelines[arm.label] = probes.measure_phases(session, arm.phases)
        if config.sampling_window_s > 0:
            session = factory(arm.cluster,
                              probes.derive_seed(config.seed, 0, 0))
            samples[arm.label] = sim.sample_resources(
                session, config.sampling_window_s, config.sampling_interval_s
            )
            wanted = (arm.power_nodes if arm.power_nodes is not None
                      else tuple(n.name for n in arm.cluster.nodes))
            power_params[arm.label] = {
                node.name: metrics.PowerModelParams(node.p_idle_w,
                                                    node.p_max_w)
                for node in arm.cluster.nodes if node.name in wanted
            }

    treatment_ledger = baseline_ledger = None
    if config.treatment_ledger and config.baseline_ledger:
        treatment_ledger = metrics.read_action_ledger(
            base_dir / config.treatment_ledger)
        baseline_ledger = metrics.read_action_ledger(
            base_dir / config.baseline_ledger)
    mip_reference = None
    if config.mip_reference:
        mip_reference = specfile.read_mip_reference(
            base_dir / config.mip_reference)

    baseline_label = (config.baseline.label if config.baseline is not None
                      else "baseline")
    return report.build_report(
        records,
        experiment_id=config.doc_id,
        treatment_label=config.treatment.label,
        baseline_label=baseline_label,
        treatment_ledger=treatment_ledger,
        baseline_ledger=baseline_ledger,
        samples=samples or None,
        power_params=power_params or None,
        timelines=timelines or None,
        mip_reference=mip_reference,
    ), records


def cmd_run(args) -> int:
    out_dir = _out_dir(args)
    formats = _formats(args.format)
    text = _read_text(args.spec)
    try:
        config = specfile.parse_campaign(text)
    except DocumentSyntaxError as err:
        print(f"{args.spec}: {err}", file=sys.stderr)
        return EXIT_INPUT
    except specfile.SpecFileError as err:
        for problem in err.problems:
            print(f"{args.spec}: {problem}", file=sys.stderr)
        return EXIT_INPUT
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    try:
        result, records = execute_campaign(config, Path(args.spec).parent)
    except (sim.SimulatorError, probes.ProbeError, specfile.SpecFileError,
            metrics.MetricsInputError, metrics.LedgerFormatError,
            OSError) as err:
        print(f"campaign failed: {err}", file=sys.stderr)
        return EXIT_INPUT

    violations = report.check_consistency(result)
    if violations:
        for violation in violations:
            print(f"consistency: {violation}", file=sys.stderr)
        return EXIT_INCONSISTENT

    report.emit_run_records(records, out_dir)
    if "json" in formats:
        report.emit_json(result, out_dir)
    if "csv" in formats:
        report.emit_csv(result, out_dir)
    if "plot" in formats:
        report.emit_plot_data(result, out_dir)

    for arm_label in sorted({r.label for r in records}):
        arm_records = [r for r in records if r.label == arm_label]
        failed = sum(1 for r in arm_records if r.failed)
        line = f"arm {arm_label}: {len(arm_records)} runs"
        if failed:
            line += f", {failed} failed"
        print(line)
    for note in result.notes:
        print(f"note: {note}")
    print(f"wrote {out_dir}")
    return EXIT_OK


def cmd_validate_cam(args) -> int:
    text = _read_text(args.manifest)
    try:
        manifest = cam.parse_cam(text)
    except DocumentSyntaxError as err:
        print(f"{args.manifest}: {err}", file=sys.stderr)
        return EXIT_CAM_INVALID
    except cam.CamValidationError as err:
        for violation in err.violations:
            print(f"{args.manifest}: {violation}", file=sys.stderr)
        return EXIT_CAM_INVALID
    for warning in manifest.warnings:
        print(f"{args.manifest}: warning: {warning}", file=sys.stderr)
    services = len(manifest.services)
    channels = len(manifest.service_channels)
    print(f"{args.manifest}: OK ({manifest.app_name}: {services} services, "
          f"{channels} channels)")
    return EXIT_OK


def cmd_mip(args) -> int:
    try:
        treatment = metrics.read_action_ledger(args.treatment)
        baseline = metrics.read_action_ledger(args.baseline)
    except metrics.LedgerFormatError as err:
        for violation in err.violations:
            print(f"ledger: {violation}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as err:
        print(f"cannot read ledger: {err}", file=sys.stderr)
        return EXIT_INPUT
    reference: dict[str, float] = {}
    if args.reference:
        try:
            reference = specfile.read_mip_reference(args.reference)
        except specfile.SpecFileError as err:
            for problem in err.problems:
                print(f"{args.reference}: {problem}", file=sys.stderr)
            return EXIT_INPUT
        except OSError as err:
            print(f"cannot read reference: {err}", file=sys.stderr)
            return EXIT_INPUT

    phases = [p for p in metrics.LEDGER_PHASES
              if p in set(treatment.phases()) | set(baseline.phases())]
    failed = False
    for phase in phases:
        try:
            row = metrics.compute_mip(treatment, baseline, phase)
        except metrics.MetricsInputError as err:
            print(f"{phase}: {err}", file=sys.stderr)
            failed = True
            continue
        print(f"{row.phase}: {row.c_a}/{row.k_a} manual -> {row.mip_pct}%")
        if phase in reference:
            published = reference[phase]
            if abs(published - row.mip_pct) > 0.005:
                print(f"  note: published reference {published} differs "
                      f"from computed {row.mip_pct} "
                      f"(c_a={row.c_a}, k_a={row.k_a})")
    if not phases:
        print("no ledger phases found", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_INPUT if failed else EXIT_OK


def cmd_fixtures(args) -> int:
    out_dir = _out_dir(args)
    try:
        written = fixtures.write_fixture(args.name, out_dir)
    except KeyError:
        print(f"unknown fixture '{args.name}'; available: "
              f"{', '.join(fixtures.FIXTURES)}", file=sys.stderr)
        return EXIT_INPUT
    for path in written:
        print(str(path))
    return EXIT_OK


def cmd_report(args) -> int:
    out_dir = _out_dir(args)
    formats = _formats(args.format)
    text = _read_text(args.report)
    try:
        loaded = report.report_from_dict(json.loads(text))
    except (ValueError, KeyError, TypeError, report.ReportError) as err:
        print(f"{args.report}: not a valid report: {err}", file=sys.stderr)
        return EXIT_INPUT
    violations = report.check_consistency(loaded)
    if violations:
        for violation in violations:
            print(f"consistency: {violation}", file=sys.stderr)
        return EXIT_INCONSISTENT
    if "json" in formats:
        report.emit_json(loaded, out_dir)
    if "csv" in formats:
        report.emit_csv(loaded, out_dir)
    if "plot" in formats:
        report.emit_plot_data(loaded, out_dir)
    print(f"wrote {out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="edgebench",
                     description="cluster benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a campaign document")
    p_run.add_argument("--spec", required=True, help="campaign document path")
    p_run.add_argument("--out", help=f"output directory (default ${OUT_ENV})")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the document seed")
    p_run.add_argument("--format", default="csv,json,plot",
                       help="comma-separated subset of csv,json,plot")
    p_run.set_defaults(func=cmd_run)

    p_cam = sub.add_parser("validate-cam", help="validate a manifest")
    p_cam.add_argument("manifest", help="manifest path")
    p_cam.set_defaults(func=cmd_validate_cam)

    p_mip = sub.add_parser("mip", help="intervention shares from ledgers")
    p_mip.add_argument("--treatment", required=True)
    p_mip.add_argument("--baseline", required=True)
    p_mip.add_argument("--reference",
                       help="published-values CSV for discrepancy notes")
    p_mip.set_defaults(func=cmd_mip)

    p_fix = sub.add_parser("fixtures", help="write a reference scenario")
    p_fix.add_argument("name",
                       help=f"one of: {', '.join(fixtures.FIXTURES)}")
    p_fix.add_argument("--out", help=f"output directory (default ${OUT_ENV})")
    p_fix.set_defaults(func=cmd_fixtures)

    p_rep = sub.add_parser("report", help="re-emit tables from report.json")
    p_rep.add_argument("--report", required=True, help="report.json path")
    p_rep.add_argument("--out", help=f"output directory (default ${OUT_ENV})")
    p_rep.add_argument("--format", default="csv,plot",
                       help="comma-separated subset of csv,json,plot")
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _ExitInput as err:
        print(err.message, file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
