"""Application-manifest walkthrough.

Parses the shipped corpus, shows how unit quantities normalize, and
provokes a validation failure to show that every problem is reported
at once. Run from the repository root:

    python demos/01_manifest_tour.py
"""

from pathlib import Path

from edgebench import cam

CORPUS = Path(__file__).resolve().parent.parent / "docs" / "cam-corpus"


def tour_corpus():
    for path in sorted(CORPUS.glob("*.cam")):
        manifest = cam.parse_cam(path.read_text(encoding="utf-8"))
        print(f"{path.name}: app '{manifest.app_name}', "
              f"{len(manifest.services)} services, "
              f"{len(manifest.service_channels)} channels")
        for warning in manifest.warnings:
            print(f"  warning: {warning}")
        for ch in manifest.service_channels:
            print(f"  {ch.from_service} -> {ch.to_service}: "
                  f"{ch.bandwidth_bps} bit/s, {ch.max_delay_ns} ns "
                  f"({ch.service_class})")


def show_normalization():
    # Units normalize to exact integers in base units; the canonical
    # form picks the largest suffix that divides exactly.
    for text in ("5M", "5m", "0.5M", "1500K"):
        bps = cam.parse_bandwidth(text)
        print(f"bandwidth {text!r:8} -> {bps:>12} bit/s "
              f"-> canonical {cam.format_bandwidth(bps)!r}")
    for text in ("10ms", "2500ms", "1s"):
        ns = cam.parse_delay(text)
        print(f"delay     {text!r:8} -> {ns:>12} ns    "
              f"-> canonical {cam.format_delay(ns)!r}")


BROKEN = """\
appName: ""
qosClass: Platinum
services:
  - name: web
  - name: web
serviceChannels:
  - fromService: web
    toService: ghost
    serviceClass: FAST
    bandwidth: 0.0005K
    maxDelay: 10MS
"""


def show_error_collection():
    print("\nparsing a deliberately broken manifest:")
    try:
        cam.parse_cam(BROKEN)
    except cam.CamValidationError as err:
        for violation in err.violations:
            print(f"  problem: {violation}")


if __name__ == "__main__":
    tour_corpus()
    print()
    show_normalization()
    show_error_collection()
    print("\nround-trip: serialize_cam output parses back to an equal "
          "manifest and is byte-stable.")
    manifest = cam.parse_cam((CORPUS / "frontend-backend.cam").read_text())
    text = cam.serialize_cam(manifest)
    assert cam.parse_cam(text) == manifest
    assert cam.serialize_cam(cam.parse_cam(text)) == text
    print(text)
