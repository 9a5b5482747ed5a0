"""Scenario model and ``.scenario`` file I/O.

Files are YAML. Quantities are stored in file units (GHz, dBm, dBi, degrees,
meters, wavelengths) so that load -> dump is lossless; SI/linear views are
derived on access.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .channel import AntennaArray, CascadeScaling, RadioParams
from .errors import ScenarioError
from .geometry import SizingRule

_TOP_KEYS = {
    "name", "radio", "arrays", "bs", "asas", "irs_candidates",
    "thresholds_deg", "s_max", "sizing_rule", "cascade_scaling", "sweep",
}
_RADIO_KEYS = {
    "frequency_ghz", "total_power_dbm", "noise_power_dbm",
    "tx_gain_dbi", "rx_gain_dbi", "reflection_loss",
}
_ARRAY_KEYS = {"elements", "spacing_wavelengths", "axis"}
_IRS_KEYS = {"center", "normal", "cell_pitch_wavelengths", "max_area_m2"}
_SWEEP_KEYS = {"frequency_ghz", "separation_m", "cap_m2"}


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ArraySpec:
    elements: int = 2
    spacing_wavelengths: float = 0.5
    axis: tuple[float, float, float] = (1.0, 0.0, 0.0)

    def build(self, center, wavelength: float) -> AntennaArray:
        return AntennaArray.ula(center, self.elements, self.spacing_wavelengths * wavelength, self.axis)


@dataclass(frozen=True)
class IrsCandidate:
    center: tuple[float, float, float]
    normal: tuple[float, float, float]
    cell_pitch_wavelengths: float = 0.25
    max_area_m2: float | None = 0.25  # None: far-field bound only


@dataclass(frozen=True)
class Sweep:
    frequency_ghz: tuple[float, ...] = ()
    separation_m: tuple[float, ...] = ()
    cap_m2: tuple[float | None, ...] = ()


@dataclass(frozen=True)
class Scenario:
    name: str
    frequency_ghz: float
    total_power_dbm: float
    noise_power_dbm: float
    tx_gain_dbi: float
    rx_gain_dbi: float
    bs_center: tuple[float, float, float]
    asa_centers: tuple[tuple[float, float, float], ...]
    irs_candidates: tuple[IrsCandidate, ...] = ()
    reflection_loss: float = 1.0
    bs_array: ArraySpec = field(default_factory=ArraySpec)
    user_array: ArraySpec = field(default_factory=ArraySpec)
    incidence_threshold_deg: float = 80.0
    reflection_threshold_deg: float = 80.0
    s_max: int = 1
    sizing_rule: SizingRule = SizingRule.AREA_FORMULA
    cascade_scaling: CascadeScaling = CascadeScaling.NORMALIZED
    sweep: Sweep = field(default_factory=Sweep)

    def __post_init__(self):
        validate(self)

    # SI / linear views

    @property
    def radio(self) -> RadioParams:
        return RadioParams(
            carrier_frequency=self.frequency_ghz * 1e9,
            tx_gain=db_to_linear(self.tx_gain_dbi),
            rx_gain=db_to_linear(self.rx_gain_dbi),
            total_power=dbm_to_watts(self.total_power_dbm),
            noise_power=dbm_to_watts(self.noise_power_dbm),
        )

    @property
    def num_asas(self) -> int:
        return len(self.asa_centers)

    @property
    def num_irs(self) -> int:
        return len(self.irs_candidates)

    @property
    def incidence_threshold(self) -> float:
        return math.radians(self.incidence_threshold_deg)

    @property
    def reflection_threshold(self) -> float:
        return math.radians(self.reflection_threshold_deg)

    def asa_point(self, u: int) -> np.ndarray:
        return np.array(self.asa_centers[u], dtype=float)

    def bs_antenna(self) -> AntennaArray:
        return self.bs_array.build(self.bs_center, self.radio.wavelength)

    def user_antenna(self, center) -> AntennaArray:
        return self.user_array.build(center, self.radio.wavelength)

    def cell_pitch(self, m: int) -> float:
        return self.irs_candidates[m].cell_pitch_wavelengths * self.radio.wavelength

    def asa_spacings(self) -> list[float]:
        pts = np.array(self.asa_centers, dtype=float)
        return [float(d) for d in np.linalg.norm(np.diff(pts, axis=0), axis=1)]

    @property
    def separation(self) -> float | None:
        """Mean consecutive ASA spacing, or ``None`` for a single ASA."""
        gaps = self.asa_spacings()
        return sum(gaps) / len(gaps) if gaps else None

    @property
    def uniformly_spaced(self) -> bool:
        gaps = self.asa_spacings()
        return not gaps or max(gaps) - min(gaps) <= 1e-9 * max(gaps)

    # sweep helpers

    def with_frequency(self, ghz: float) -> "Scenario":
        return replace(self, frequency_ghz=float(ghz))

    def with_cap(self, cap_m2: float | None) -> "Scenario":
        cap = None if cap_m2 is None else float(cap_m2)
        return replace(self, irs_candidates=tuple(replace(c, max_area_m2=cap) for c in self.irs_candidates))

    def with_separation(self, d: float) -> "Scenario":
        """Rescale ASA offsets about the corridor centroid so the mean spacing is ``d``."""
        current = self.separation
        if current is None:
            raise ScenarioError("separation sweep needs at least two ASAs")
        pts = np.array(self.asa_centers, dtype=float)
        centroid = pts.mean(axis=0)
        moved = centroid + (pts - centroid) * (float(d) / current)
        return replace(self, asa_centers=tuple(tuple(float(x) for x in p) for p in moved))


def _finite_vec(value, where: str) -> tuple[float, float, float]:
    try:
        vec = tuple(float(x) for x in value)
    except (TypeError, ValueError):
        raise ScenarioError(f"{where}: expected three numbers, got {value!r}") from None
    if len(vec) != 3 or not all(math.isfinite(x) for x in vec):
        raise ScenarioError(f"{where}: expected three finite numbers, got {value!r}")
    return vec


def validate(s: Scenario) -> None:
    """Raise ``ScenarioError`` naming the first violated invariant."""
    if s.frequency_ghz <= 0 or not math.isfinite(s.frequency_ghz):
        raise ScenarioError("radio.frequency_ghz must be positive")
    for name in ("total_power_dbm", "noise_power_dbm", "tx_gain_dbi", "rx_gain_dbi"):
        if not math.isfinite(getattr(s, name)):
            raise ScenarioError(f"radio.{name} must be finite")
    if not 0.0 < s.reflection_loss <= 1.0:
        raise ScenarioError("radio.reflection_loss must lie in (0, 1]")
    for label, spec in (("bs", s.bs_array), ("user", s.user_array)):
        if int(spec.elements) != spec.elements or spec.elements < 1:
            raise ScenarioError(f"arrays.{label}.elements must be a positive integer")
        if not spec.spacing_wavelengths > 0:
            raise ScenarioError(f"arrays.{label}.spacing_wavelengths must be positive")
        if not any(spec.axis):
            raise ScenarioError(f"arrays.{label}.axis must be non-zero")
    if len(s.asa_centers) < 1:
        raise ScenarioError("asas: at least one ASA is required")
    if len(set(s.asa_centers)) != len(s.asa_centers):
        raise ScenarioError("asas: ASA centers must be pairwise distinct")
    if s.bs_center in s.asa_centers:
        raise ScenarioError("bs.center coincides with an ASA center")
    for m, c in enumerate(s.irs_candidates):
        if not any(c.normal):
            raise ScenarioError(f"irs_candidates[{m}].normal must be non-zero")
        if not c.cell_pitch_wavelengths > 0:
            raise ScenarioError(f"irs_candidates[{m}].cell_pitch_wavelengths must be positive")
        if c.max_area_m2 is not None and not c.max_area_m2 > 0:
            raise ScenarioError(f"irs_candidates[{m}].max_area_m2 must be positive or null")
    for name in ("incidence_threshold_deg", "reflection_threshold_deg"):
        if not 0.0 < getattr(s, name) <= 180.0:
            raise ScenarioError(f"thresholds_deg: {name} must lie in (0, 180]")
    if isinstance(s.s_max, bool) or int(s.s_max) != s.s_max or s.s_max < 1:
        raise ScenarioError("s_max must be a positive integer")
    for f in s.sweep.frequency_ghz:
        if not f > 0:
            raise ScenarioError("sweep.frequency_ghz entries must be positive")
    for d in s.sweep.separation_m:
        if not d > 0:
            raise ScenarioError("sweep.separation_m entries must be positive")
    for cap in s.sweep.cap_m2:
        if cap is not None and not cap > 0:
            raise ScenarioError("sweep.cap_m2 entries must be positive or null")


def _mapping(value, where: str, allowed: set[str]) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ScenarioError(f"{where}: expected a mapping")
    unknown = set(value) - allowed
    if unknown:
        raise ScenarioError(f"{where}: unknown key(s) {sorted(unknown)}")
    return value


def _array_spec(raw, where: str) -> ArraySpec:
    raw = _mapping(raw, where, _ARRAY_KEYS)
    spec = ArraySpec()
    return ArraySpec(
        elements=int(raw.get("elements", spec.elements)),
        spacing_wavelengths=float(raw.get("spacing_wavelengths", spec.spacing_wavelengths)),
        axis=_finite_vec(raw.get("axis", spec.axis), f"{where}.axis"),
    )


def _enum(cls, value, where: str):
    try:
        return cls(value)
    except ValueError:
        choices = ", ".join(e.value for e in cls)
        raise ScenarioError(f"{where}: {value!r} is not one of {choices}") from None


def scenario_from_dict(data: dict) -> Scenario:
    data = _mapping(data, "scenario", _TOP_KEYS)
    for key in ("radio", "bs", "asas"):
        if key not in data:
            raise ScenarioError(f"missing required section {key!r}")
    radio = _mapping(data["radio"], "radio", _RADIO_KEYS)
    for key in ("frequency_ghz", "total_power_dbm", "noise_power_dbm", "tx_gain_dbi", "rx_gain_dbi"):
        if key not in radio:
            raise ScenarioError(f"radio.{key} is required")
    arrays = _mapping(data.get("arrays"), "arrays", {"bs", "user"})
    bs = _mapping(data["bs"], "bs", {"center"})
    if "center" not in bs:
        raise ScenarioError("bs.center is required")
    if not isinstance(data["asas"], list):
        raise ScenarioError("asas: expected a list")
    asas = []
    for u, raw in enumerate(data["asas"]):
        raw = _mapping(raw, f"asas[{u}]", {"center"})
        asas.append(_finite_vec(raw.get("center"), f"asas[{u}].center"))
    irs = []
    for m, raw in enumerate(data.get("irs_candidates") or []):
        raw = _mapping(raw, f"irs_candidates[{m}]", _IRS_KEYS)
        for key in ("center", "normal"):
            if key not in raw:
                raise ScenarioError(f"irs_candidates[{m}].{key} is required")
        cap = raw.get("max_area_m2", 0.25)
        irs.append(
            IrsCandidate(
                center=_finite_vec(raw["center"], f"irs_candidates[{m}].center"),
                normal=_finite_vec(raw["normal"], f"irs_candidates[{m}].normal"),
                cell_pitch_wavelengths=float(raw.get("cell_pitch_wavelengths", 0.25)),
                max_area_m2=None if cap is None else float(cap),
            )
        )
    thresholds = _mapping(data.get("thresholds_deg"), "thresholds_deg", {"incidence", "reflection"})
    sweep = _mapping(data.get("sweep"), "sweep", _SWEEP_KEYS)
    try:
        return Scenario(
            name=str(data.get("name", "scenario")),
            frequency_ghz=float(radio["frequency_ghz"]),
            total_power_dbm=float(radio["total_power_dbm"]),
            noise_power_dbm=float(radio["noise_power_dbm"]),
            tx_gain_dbi=float(radio["tx_gain_dbi"]),
            rx_gain_dbi=float(radio["rx_gain_dbi"]),
            reflection_loss=float(radio.get("reflection_loss", 1.0)),
            bs_center=_finite_vec(bs["center"], "bs.center"),
            asa_centers=tuple(asas),
            irs_candidates=tuple(irs),
            bs_array=_array_spec(arrays.get("bs"), "arrays.bs"),
            user_array=_array_spec(arrays.get("user"), "arrays.user"),
            incidence_threshold_deg=float(thresholds.get("incidence", 80.0)),
            reflection_threshold_deg=float(thresholds.get("reflection", 80.0)),
            s_max=data.get("s_max", 1),
            sizing_rule=_enum(SizingRule, data.get("sizing_rule", "area_formula"), "sizing_rule"),
            cascade_scaling=_enum(
                CascadeScaling, data.get("cascade_scaling", "normalized"), "cascade_scaling"
            ),
            sweep=Sweep(
                frequency_ghz=tuple(float(x) for x in sweep.get("frequency_ghz") or ()),
                separation_m=tuple(float(x) for x in sweep.get("separation_m") or ()),
                cap_m2=tuple(None if x is None else float(x) for x in sweep.get("cap_m2") or ()),
            ),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"invalid value: {exc}") from None


def scenario_to_dict(s: Scenario) -> dict:
    def arr(spec: ArraySpec) -> dict:
        return {"elements": spec.elements, "spacing_wavelengths": spec.spacing_wavelengths, "axis": list(spec.axis)}

    out = {
        "name": s.name,
        "radio": {
            "frequency_ghz": s.frequency_ghz,
            "total_power_dbm": s.total_power_dbm,
            "noise_power_dbm": s.noise_power_dbm,
            "tx_gain_dbi": s.tx_gain_dbi,
            "rx_gain_dbi": s.rx_gain_dbi,
            "reflection_loss": s.reflection_loss,
        },
        "arrays": {"bs": arr(s.bs_array), "user": arr(s.user_array)},
        "bs": {"center": list(s.bs_center)},
        "asas": [{"center": list(c)} for c in s.asa_centers],
        "irs_candidates": [
            {
                "center": list(c.center),
                "normal": list(c.normal),
                "cell_pitch_wavelengths": c.cell_pitch_wavelengths,
                "max_area_m2": c.max_area_m2,
            }
            for c in s.irs_candidates
        ],
        "thresholds_deg": {"incidence": s.incidence_threshold_deg, "reflection": s.reflection_threshold_deg},
        "s_max": s.s_max,
        "sizing_rule": s.sizing_rule.value,
        "cascade_scaling": s.cascade_scaling.value,
    }
    sweep = {k: list(getattr(s.sweep, k)) for k in ("frequency_ghz", "separation_m", "cap_m2") if getattr(s.sweep, k)}
    if sweep:
        out["sweep"] = sweep
    return out


def dump_scenario(s: Scenario) -> str:
    """Canonical YAML text (sorted keys)."""
    return yaml.safe_dump(scenario_to_dict(s), sort_keys=True, default_flow_style=None)


def loads_scenario(text: str, source: str = "<string>") -> Scenario:
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ScenarioError(f"{source}: parse error at {where}: {exc.problem}") from None
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{source}: parse error: {exc}") from None
    try:
        return scenario_from_dict(data)
    except ScenarioError as exc:
        raise ScenarioError(f"{source}: {exc}") from None


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"{path}: cannot read scenario ({exc.strerror})") from None
    return loads_scenario(text, source=str(path))


def bundled_scenario_path(name: str) -> Path:
    """Path to a scenario shipped with the package, e.g. ``"table1_D20"``."""
    fname = name if name.endswith(".scenario") else f"{name}.scenario"
    path = Path(str(resources.files("irsplace") / "scenarios" / fname))
    if not path.exists():
        raise ScenarioError(f"no bundled scenario named {name!r}")
    return path


def bundled_scenario(name: str) -> Scenario:
    return load_scenario(bundled_scenario_path(name))
