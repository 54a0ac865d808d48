"""End-to-end campaign run through the command line entry point.

Materializes the shipped two-arm fixture (edge stack vs stock
orchestrator on two 12-core arm64 workers, five repetitions at four
batch sizes), runs it twice into separate directories, and checks the
output trees byte for byte. No wall clock leaks into any artifact, so
a rerun with the same seed is identical down to the last byte.

    python demos/05_full_campaign.py
"""

import filecmp
import tempfile
from pathlib import Path

from edgebench import cli, fixtures, report


def run_once(spec: Path, out: Path) -> None:
    rc = cli.main(["run", "--spec", str(spec), "--out", str(out)])
    assert rc == 0, f"run exited {rc}"


def main() -> None:
    with tempfile.TemporaryDirectory() as scratch:
        root = Path(scratch)
        fixture_dir = root / "fixture"
        fixtures.write_fixture("inf2-150pods", fixture_dir)
        spec = next(fixture_dir.glob("*.spec"))

        first, second = root / "first", root / "second"
        run_once(spec, first)
        run_once(spec, second)

        names = sorted(p.name for p in first.iterdir())
        print("artifacts:")
        for name in names:
            print(f"  {name}")

        match, mismatch, errors = filecmp.cmpfiles(
            first, second, names, shallow=False)
        assert not mismatch and not errors, (mismatch, errors)
        print(f"rerun identical: {len(match)} files byte for byte")

        rep = report.load_report(first / "report.json")
        stats = {(c.label, c.scale, c.metric): c.stats for c in rep.lifecycle}
        print("\nmean pod readiness at the largest batch size:")
        for label in ("codeco", "k8s"):
            cell = stats[(label, 150, "readiness_mean_s")]
            print(f"  {label:7} {cell.avg:7.2f} s over {cell.n} repetitions "
                  f"(p95 {cell.p95:.2f} s)")


if __name__ == "__main__":
    main()
