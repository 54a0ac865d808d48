"""Application manifests: parse, validate, canonically serialize.

The manifest format is the kvdoc grammar (docs/cam-grammar.md) with the
schema below.  All quantities normalize to exact integers in base units:
bandwidth to bits per second, delays to nanoseconds.  A fractional
number is accepted only when it lands exactly on the base unit
("1.5M" -> 1_500_000; "1.5" alone is rejected), so parsing never rounds.

Canonical serialization renders each quantity with the largest suffix
that divides it exactly and orders keys in a fixed schema order;
``parse_cam(serialize_cam(m)) == m`` and serialization is idempotent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation

from . import kvdoc
from .kvdoc import DocumentSyntaxError

QOS_CLASSES = ("Gold", "Silver", "Bronze")
SERVICE_CLASSES = ("ASSURED", "BESTEFFORT")
# Known performance profiles; unknown values are kept with a warning so
# the profile vocabulary can grow without a schema change.
PERFORMANCE_PROFILES = ("Performance", "Greenness", "Resilience")

DEFAULT_SCHEDULER = "default-scheduler"

# suffix -> multiplier; bandwidth suffixes are decimal and case-insensitive,
# delay suffixes are lowercase and mandatory.
_BANDWIDTH_SUFFIXES = {"K": 10 ** 3, "M": 10 ** 6, "G": 10 ** 9}
_DELAY_SUFFIXES = {"ns": 1, "us": 10 ** 3, "ms": 10 ** 6, "s": 10 ** 9}


class UnitParseError(ValueError):
    pass


class CamValidationError(ValueError):
    """Raised on schema or semantic violations; carries the full list."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class CamService:
    name: str
    image: str = ""
    replicas: int = 1


@dataclass(frozen=True)
class ServiceChannel:
    from_service: str
    to_service: str
    service_class: str
    bandwidth_bps: int
    max_delay_ns: int


@dataclass(frozen=True)
class CamManifest:
    app_name: str
    services: tuple[CamService, ...] = ()
    service_channels: tuple[ServiceChannel, ...] = ()
    performance_profile: str | None = None
    app_energy_limit: float | None = None
    app_failure_tolerance: str | None = None
    scheduler_name: str = DEFAULT_SCHEDULER
    compliance_class: str | None = None
    qos_class: str | None = None
    security_class: str | None = None
    # Parser warnings (unknown keys, unknown profiles); not part of identity.
    warnings: tuple[str, ...] = field(default=(), compare=False)


def _split_number_suffix(text: str) -> tuple[str, str]:
    text = text.strip()
    i = 0
    while i < len(text) and (text[i].isdigit() or text[i] == "."):
        i += 1
    return text[:i], text[i:]


def _exact_base_units(number: str, multiplier: int, original: str) -> int:
    try:
        quantity = Decimal(number)
    except InvalidOperation:
        raise UnitParseError(f"malformed number in '{original}'") from None
    scaled = quantity * multiplier
    if scaled != int(scaled):
        raise UnitParseError(
            f"'{original}' is not an exact integer in base units"
        )
    return int(scaled)


def parse_bandwidth(text: str) -> int:
    """Bandwidth quantity to exact bits per second.

    Grammar: unsigned decimal with optional case-insensitive K/M/G suffix
    (decimal multipliers).  ``"5M"`` -> 5_000_000, ``"1500"`` -> 1500.
    """
    if not isinstance(text, str):
        raise UnitParseError("bandwidth must be a string")
    number, suffix = _split_number_suffix(text)
    if not number:
        raise UnitParseError(f"malformed number in '{text}'")
    if suffix:
        multiplier = _BANDWIDTH_SUFFIXES.get(suffix.upper())
        if multiplier is None:
            raise UnitParseError(f"unknown bandwidth suffix '{suffix}'")
    else:
        multiplier = 1
    bps = _exact_base_units(number, multiplier, text)
    if bps <= 0:
        raise UnitParseError(f"bandwidth must be positive, got '{text}'")
    return bps


def parse_delay(text: str) -> int:
    """Delay quantity to exact nanoseconds.

    Grammar: unsigned decimal with mandatory ns/us/ms/s suffix.
    ``"10ms"`` -> 10_000_000.
    """
    if not isinstance(text, str):
        raise UnitParseError("delay must be a string")
    number, suffix = _split_number_suffix(text)
    if not number:
        raise UnitParseError(f"malformed number in '{text}'")
    if not suffix:
        raise UnitParseError(f"delay '{text}' needs a unit suffix (ns/us/ms/s)")
    multiplier = _DELAY_SUFFIXES.get(suffix)
    if multiplier is None:
        raise UnitParseError(f"unknown delay suffix '{suffix}'")
    ns = _exact_base_units(number, multiplier, text)
    if ns <= 0:
        raise UnitParseError(f"delay must be positive, got '{text}'")
    return ns


def format_bandwidth(bps: int) -> str:
    """Canonical text: largest suffix dividing exactly, else plain bps."""
    for suffix, multiplier in (("G", 10 ** 9), ("M", 10 ** 6), ("K", 10 ** 3)):
        if bps % multiplier == 0:
            return f"{bps // multiplier}{suffix}"
    return str(bps)


def format_delay(ns: int) -> str:
    for suffix, multiplier in (("s", 10 ** 9), ("ms", 10 ** 6), ("us", 10 ** 3)):
        if ns % multiplier == 0:
            return f"{ns // multiplier}{suffix}"
    return f"{ns}ns"


_TOP_KEYS = (
    "appName", "performanceProfile", "appEnergyLimit", "appFailureTolerance",
    "schedulerName", "complianceClass", "qosClass", "securityClass",
    "services", "serviceChannels",
)
_SERVICE_KEYS = ("name", "image", "replicas")
_CHANNEL_KEYS = ("fromService", "toService", "serviceClass",
                 "bandwidth", "maxDelay")


def _want_str(doc: dict, key: str, problems: list[str]) -> str | None:
    value = doc.get(key)
    if value is None:
        return None
    if not isinstance(value, str):
        problems.append(f"{key}: expected a scalar")
        return None
    return value


def _parse_services(raw, problems: list[str],
                    warnings: list[str]) -> tuple[CamService, ...]:
    if not isinstance(raw, list):
        problems.append("services: expected a list")
        return ()
    out: list[CamService] = []
    for idx, item in enumerate(raw):
        where = f"services[{idx}]"
        if not isinstance(item, dict):
            problems.append(f"{where}: expected a mapping")
            continue
        for key in item:
            if key not in _SERVICE_KEYS:
                warnings.append(f"unknown key '{where}.{key}' ignored")
        name = item.get("name")
        if not isinstance(name, str) or not name:
            problems.append(f"{where}: name is required")
            continue
        image = item.get("image", "")
        if not isinstance(image, str):
            problems.append(f"{where}.image: expected a scalar")
            image = ""
        replicas = 1
        if "replicas" in item:
            try:
                replicas = int(item["replicas"])
            except (TypeError, ValueError):
                problems.append(f"{where}.replicas: expected an integer")
        out.append(CamService(name=name, image=image, replicas=replicas))
    return tuple(out)


def _parse_channels(raw, problems: list[str],
                    warnings: list[str]) -> tuple[ServiceChannel, ...]:
    if not isinstance(raw, list):
        problems.append("serviceChannels: expected a list")
        return ()
    out: list[ServiceChannel] = []
    for idx, item in enumerate(raw):
        where = f"serviceChannels[{idx}]"
        if not isinstance(item, dict):
            problems.append(f"{where}: expected a mapping")
            continue
        for key in item:
            if key not in _CHANNEL_KEYS:
                warnings.append(f"unknown key '{where}.{key}' ignored")
        ok = True
        fields: dict[str, str] = {}
        for key in ("fromService", "toService", "serviceClass",
                    "bandwidth", "maxDelay"):
            value = item.get(key)
            if not isinstance(value, str) or not value:
                problems.append(f"{where}.{key} is required")
                ok = False
            else:
                fields[key] = value
        if not ok:
            continue
        bandwidth = delay = None
        try:
            bandwidth = parse_bandwidth(fields["bandwidth"])
        except UnitParseError as err:
            problems.append(f"{where}.bandwidth: {err}")
        try:
            delay = parse_delay(fields["maxDelay"])
        except UnitParseError as err:
            problems.append(f"{where}.maxDelay: {err}")
        if bandwidth is None or delay is None:
            # the channel is dropped, so the semantic pass never sees it;
            # flag a bad serviceClass here to keep the report complete
            if fields["serviceClass"] not in SERVICE_CLASSES:
                problems.append(
                    f"{where}: serviceClass must be one of "
                    f"{', '.join(SERVICE_CLASSES)}, got '{fields['serviceClass']}'"
                )
            continue
        out.append(ServiceChannel(
            from_service=fields["fromService"],
            to_service=fields["toService"],
            service_class=fields["serviceClass"],
            bandwidth_bps=bandwidth,
            max_delay_ns=delay,
        ))
    return tuple(out)


def parse_cam(text: str) -> CamManifest:
    """Parse manifest text into a normalized :class:`CamManifest`.

    Syntax problems raise :class:`kvdoc.DocumentSyntaxError` with a
    position; schema and semantic problems raise
    :class:`CamValidationError` carrying the complete violation list.
    Unknown top-level keys produce warnings on the manifest, not errors.
    """
    doc = kvdoc.parse_document(text)
    problems: list[str] = []
    warnings: list[str] = []
    for key in doc:
        if key not in _TOP_KEYS:
            warnings.append(f"unknown key '{key}' ignored")

    app_name = _want_str(doc, "appName", problems) or ""

    profile = _want_str(doc, "performanceProfile", problems)
    if profile is not None and profile not in PERFORMANCE_PROFILES:
        warnings.append(
            f"unrecognized performanceProfile '{profile}' kept as-is"
        )

    energy: float | None = None
    raw_energy = _want_str(doc, "appEnergyLimit", problems)
    if raw_energy is not None:
        try:
            energy = float(raw_energy)
        except ValueError:
            problems.append(f"appEnergyLimit: not a number: '{raw_energy}'")
        else:
            if energy < 0:
                problems.append("appEnergyLimit must be nonnegative")

    tolerance = _want_str(doc, "appFailureTolerance", problems)
    scheduler = _want_str(doc, "schedulerName", problems)

    services = ()
    if "services" in doc:
        services = _parse_services(doc["services"], problems, warnings)
    channels = ()
    if "serviceChannels" in doc:
        channels = _parse_channels(doc["serviceChannels"], problems, warnings)

    manifest = CamManifest(
        app_name=app_name,
        services=services,
        service_channels=channels,
        performance_profile=profile,
        app_energy_limit=energy,
        app_failure_tolerance=tolerance,
        scheduler_name=scheduler if scheduler is not None else DEFAULT_SCHEDULER,
        compliance_class=_want_str(doc, "complianceClass", problems),
        qos_class=_want_str(doc, "qosClass", problems),
        security_class=_want_str(doc, "securityClass", problems),
        warnings=tuple(warnings),
    )
    problems.extend(validate_cam(manifest))
    if problems:
        raise CamValidationError(problems)
    return manifest


def validate_cam(manifest: CamManifest) -> list[str]:
    """Semantic rules over an already-constructed manifest; returns the
    complete list of violations (empty means valid)."""
    out: list[str] = []
    if not manifest.app_name:
        out.append("appName must be nonempty")
    if not manifest.scheduler_name:
        out.append("schedulerName must be nonempty")
    if manifest.qos_class is not None and manifest.qos_class not in QOS_CLASSES:
        out.append(
            f"qosClass must be one of {', '.join(QOS_CLASSES)}, "
            f"got '{manifest.qos_class}'"
        )
    names = [s.name for s in manifest.services]
    for name in sorted(set(n for n in names if names.count(n) > 1)):
        out.append(f"duplicate service name '{name}'")
    for s in manifest.services:
        if s.replicas < 1:
            out.append(f"service '{s.name}': replicas must be >= 1")
    declared = set(names)
    seen_pairs: set[tuple[str, str]] = set()
    for idx, ch in enumerate(manifest.service_channels):
        where = f"serviceChannels[{idx}]"
        if ch.service_class not in SERVICE_CLASSES:
            out.append(
                f"{where}: serviceClass must be one of "
                f"{', '.join(SERVICE_CLASSES)}, got '{ch.service_class}'"
            )
        for end, label in ((ch.from_service, "fromService"),
                           (ch.to_service, "toService")):
            if end not in declared:
                out.append(f"{where}: {label} '{end}' is not a declared service")
        if ch.from_service == ch.to_service:
            out.append(f"{where}: channel endpoints must differ")
        pair = (ch.from_service, ch.to_service)
        if pair in seen_pairs:
            out.append(f"{where}: duplicate channel "
                       f"{ch.from_service} -> {ch.to_service}")
        seen_pairs.add(pair)
        if ch.bandwidth_bps <= 0:
            out.append(f"{where}: bandwidth must be positive")
        if ch.max_delay_ns <= 0:
            out.append(f"{where}: maxDelay must be positive")
    if manifest.app_energy_limit is not None and manifest.app_energy_limit < 0:
        out.append("appEnergyLimit must be nonnegative")
    return out


def _format_energy(value: float) -> str:
    value = float(value)
    return str(int(value)) if value.is_integer() else repr(value)


def serialize_cam(manifest: CamManifest) -> str:
    """Canonical manifest text.

    Fixed key order, canonical unit suffixes, absent optionals omitted
    (an empty ``service_channels`` produces no channel section).  The
    result parses back to an equal manifest and re-serializes to the
    same bytes.
    """
    violations = validate_cam(manifest)
    if violations:
        raise CamValidationError(violations)
    doc: dict = {"appName": manifest.app_name}
    if manifest.performance_profile is not None:
        doc["performanceProfile"] = manifest.performance_profile
    if manifest.app_energy_limit is not None:
        doc["appEnergyLimit"] = _format_energy(manifest.app_energy_limit)
    if manifest.app_failure_tolerance is not None:
        doc["appFailureTolerance"] = manifest.app_failure_tolerance
    doc["schedulerName"] = manifest.scheduler_name
    if manifest.compliance_class is not None:
        doc["complianceClass"] = manifest.compliance_class
    if manifest.qos_class is not None:
        doc["qosClass"] = manifest.qos_class
    if manifest.security_class is not None:
        doc["securityClass"] = manifest.security_class
    if manifest.services:
        services = []
        for s in manifest.services:
            item: dict = {"name": s.name}
            if s.image:
                item["image"] = s.image
            item["replicas"] = s.replicas
            services.append(item)
        doc["services"] = services
    if manifest.service_channels:
        doc["serviceChannels"] = [
            {
                "fromService": ch.from_service,
                "toService": ch.to_service,
                "serviceClass": ch.service_class,
                "bandwidth": format_bandwidth(ch.bandwidth_bps),
                "maxDelay": format_delay(ch.max_delay_ns),
            }
            for ch in manifest.service_channels
        ]
    return kvdoc.serialize_document(doc)
