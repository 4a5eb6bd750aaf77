"""Presets, scenario configuration and JSON channel specs.

All numbers are stored in SI units.  Length-valued keys also accept strings
with an ``m`` or ``km`` suffix.  Unknown keys are always rejected.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Mapping, Optional

from .errors import ConfigError, DomainError
from .optics import (
    AtmosphereModel,
    BeamSetup,
    ChannelModel,
    Condition,
    Trajectory,
    TrajectoryKind,
    build_channel,
    fiber_channel,
)
from .units import parse_length, parse_nonneg_length

# Half-angle of a cone subtending one steradian: 2*pi*(1 - cos t) = 1.
ONE_SR_HALF_ANGLE = math.acos(1.0 - 1.0 / (2.0 * math.pi))

_LENGTH_KEYS = {"w0", "a_R", "wavelength", "curvature", "h_tilde", "community_altitude", "h_max"}


def _num(value, name: str, length: bool = False) -> float:
    if isinstance(value, str) and value.strip().lower() in ("inf", "infinity"):
        return math.inf
    if length:
        return parse_length(value)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name}: expected a number, got {value!r}")
    return float(value)


def _enc(x):
    """JSON-safe float (infinity as the string 'inf')."""
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if isinstance(x, dict):
        return {k: _enc(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_enc(v) for v in x]
    return x


def _strict(data: Mapping, allowed, where: str) -> None:
    if not isinstance(data, Mapping):
        raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
    extra = sorted(set(data) - set(allowed))
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(extra)}")


def beam_setup_from_dict(data: Mapping, base: Optional[BeamSetup] = None) -> BeamSetup:
    names = [f.name for f in fields(BeamSetup)]
    _strict(data, names, "setup")
    kw = {}
    for k, v in data.items():
        if k == "n_ex_trusted":
            if not isinstance(v, bool):
                raise ConfigError("setup.n_ex_trusted must be true or false")
            kw[k] = v
        else:
            kw[k] = _num(v, f"setup.{k}", length=k in _LENGTH_KEYS)
    try:
        if base is not None:
            return replace(base, **kw)
        missing = [k for k in ("w0", "a_R", "eta_eff") if k not in kw]
        if missing:
            raise ConfigError(f"setup: missing key(s) {', '.join(missing)}")
        return BeamSetup(**kw)
    except DomainError as exc:
        raise ConfigError(f"setup: {exc}") from exc


def atmosphere_from_dict(data: Mapping, base: Optional[AtmosphereModel] = None) -> AtmosphereModel:
    names = [f.name for f in fields(AtmosphereModel)]
    _strict(data, names, "atmosphere")
    kw: dict = {}
    for k, v in data.items():
        if k == "sky_irradiance":
            _strict(v, [c.value for c in Condition], "atmosphere.sky_irradiance")
            merged = dict((base or AtmosphereModel()).sky_irradiance)
            merged.update({c: _num(x, f"atmosphere.sky_irradiance.{c}") for c, x in v.items()})
            kw[k] = merged
        elif k == "cn2_constant" and v is None:
            kw[k] = None
        else:
            kw[k] = _num(v, f"atmosphere.{k}", length=k in _LENGTH_KEYS)
    try:
        return replace(base, **kw) if base is not None else AtmosphereModel(**kw)
    except DomainError as exc:
        raise ConfigError(f"atmosphere: {exc}") from exc


# ---------------------------------------------------------------- presets

@dataclass(frozen=True)
class Preset:
    name: str
    title: str
    setup: BeamSetup
    atmosphere: AtmosphereModel
    condition: str
    fiber_loss_rate: float
    community_altitude: Optional[float]
    rows: tuple  # (parameter, symbol, value) exactly as tabulated

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "title": self.title,
            "setup": _enc(self.setup.to_dict()),
            "atmosphere": _enc(self.atmosphere.to_dict()),
            "condition": self.condition,
            "fiber_loss_rate": self.fiber_loss_rate,
            "community_altitude": self.community_altitude,
            "table": [list(r) for r in self.rows],
        }


def _common_rows(w0, aR, eff, nex, filt):
    return (
        ("Beam Curvature", "R0", "inf"),
        ("Wavelength", "lambda", "800 nm"),
        ("Initial spot-size", "w0", w0),
        ("Receiver Aperture", "a_R", aR),
        ("Detector Efficiency", "eta_eff", eff),
        ("Detector Noise", "n_ex", nex),
        ("Pointing error", "sigma_p^2", "1 urad ~ (1e-6 z)^2"),
        ("Pulse Duration", "dt", "10 ns"),
        ("Field of View", "Omega_fov", "1e-10 sr"),
        ("Frequency Filter", "dlambda", filt),
    )


PRESETS = {
    "table1-setup1": Preset(
        "table1-setup1",
        "Fiber/satellite modular network, Setup #1 (clear day-time)",
        BeamSetup(w0=0.40, a_R=1.0, eta_eff=0.4, n_ex=0.0, filter_nm=1e-4),
        AtmosphereModel(),
        "clear-day",
        0.02,
        None,
        _common_rows("40 cm", "1 m", "0.4", "~0", "0.1 pm")
        + (("interCommunity Link", "ICL", "Downlink"), ("fiber Loss-Rate", "gamma", "0.02 per km")),
    ),
    "table1-setup2": Preset(
        "table1-setup2",
        "Fiber/satellite modular network, Setup #2 (clear night-time)",
        BeamSetup(w0=0.20, a_R=0.40, eta_eff=0.4, n_ex=0.0, filter_nm=1.0),
        AtmosphereModel(),
        "clear-night",
        0.02,
        None,
        _common_rows("20 cm", "40 cm", "0.4", "~0", "1 nm")
        + (("interCommunity Link", "ICL", "Downlink"), ("fiber Loss-Rate", "gamma", "0.02 per km")),
    ),
    "table2": Preset(
        "table2",
        "Free-space/fiber modular network (clear day-time)",
        BeamSetup(w0=0.05, a_R=0.05, eta_eff=0.5, n_ex=0.05, filter_nm=1.0),
        # Ground C_n^2 chosen so the Rytov variance reaches 1 near 1066 m.
        AtmosphereModel(hv_ground=2.75e-14),
        "clear-day",
        0.02,
        30.0,
        _common_rows("5 cm", "5 cm", "0.5", "0.05", "1 nm")
        + (("Altitude", "h", "30 m"), ("fiber Loss-Rate", "gamma", "0.02 per km"),
           ("interCommunity Link", "ICL", "Free-Space (Clear day-time)")),
    ),
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None


# ---------------------------------------------------------------- channel specs

_CHANNEL_KEYS = {"medium", "length", "loss_rate", "preset", "kind", "z", "h", "h_sat", "theta",
                 "h1", "h2", "condition", "setup", "atmosphere", "strict"}


def channel_from_spec(spec: Mapping) -> ChannelModel:
    """Build a channel from a JSON-style mapping.

    Fiber: ``{"medium": "fiber", "length": "10km", "loss_rate": 0.02}``.
    Free space: ``{"medium": "free-space", "preset": "table2", "kind": "ground", "z": "500m"}``
    with optional ``setup``/``atmosphere`` overrides.
    """
    _strict(spec, _CHANNEL_KEYS, "channel")
    medium = spec.get("medium", "free-space")
    if medium == "fiber":
        _strict(spec, {"medium", "length", "loss_rate"}, "fiber channel")
        if "length" not in spec:
            raise ConfigError("fiber channel needs a length")
        return fiber_channel(parse_nonneg_length(spec["length"]), _num(spec.get("loss_rate", 0.02), "loss_rate"))
    if medium != "free-space":
        raise ConfigError(f"unknown medium {medium!r}")
    preset = get_preset(spec.get("preset", "table2"))
    setup = beam_setup_from_dict(spec.get("setup", {}), preset.setup)
    atmo = atmosphere_from_dict(spec.get("atmosphere", {}), preset.atmosphere)
    traj = trajectory_from_args(spec.get("kind", "ground"), spec, default_h=preset.community_altitude or 0.0)
    cond = spec.get("condition", preset.condition)
    return build_channel(setup, atmo, traj, condition=_condition(cond), strict=bool(spec.get("strict", True)))


def _condition(value) -> str:
    try:
        return Condition(value).value
    except ValueError:
        raise ConfigError(f"unknown condition {value!r}; choose from {', '.join(c.value for c in Condition)}") from None


_KIND_ALIASES = {"intersat": "intersatellite"}


def trajectory_from_args(kind: str, args: Mapping, default_h: float = 0.0) -> Trajectory:
    kind = _KIND_ALIASES.get(kind, kind)
    try:
        k = TrajectoryKind(kind)
    except ValueError:
        raise ConfigError(f"unknown trajectory kind {kind!r}") from None

    def length(key, default=None):
        if args.get(key) is None:
            if default is None:
                raise ConfigError(f"{kind} trajectory needs {key}")
            return default
        return parse_nonneg_length(args[key])

    theta = _num(args.get("theta", 0.0) or 0.0, "theta")
    if k is TrajectoryKind.GROUND:
        return Trajectory.ground(length("z"), length("h", default_h))
    if k is TrajectoryKind.INTERSATELLITE:
        return Trajectory.intersatellite(length("z"), length("h1", 0.0), length("h2", 0.0))
    h_sat = length("h_sat")
    return Trajectory.uplink(h_sat, theta) if k is TrajectoryKind.UPLINK else Trajectory.downlink(h_sat, theta)


# ---------------------------------------------------------------- scenarios

@dataclass
class ModularParams:
    k_b: int = 4
    k_c: list = field(default_factory=lambda: [4, 8])
    # Fixed |P_{b|c}| for the best case; None derives it from the downlink rate.
    p_bc: Optional[int] = None
    h_max: float = 1.5e6
    theta_window: float = ONE_SR_HALF_ANGLE
    per_attachment_rate: Optional[float] = None


@dataclass
class SweepParams:
    figure: str = "fig3a"
    c_grid: list = field(default_factory=lambda: [10.0 ** (e / 4.0) for e in range(-12, 5)])
    k_values: list = field(default_factory=lambda: [4, 6, 8])
    z_grid: list = field(default_factory=lambda: [10.0 ** (e / 4.0) for e in range(0, 29)])


FIGURES = ("fig1", "fig3a", "fig3c", "fig4a", "fig4b")


@dataclass
class ScenarioConfig:
    setup: BeamSetup
    atmosphere: AtmosphereModel = field(default_factory=AtmosphereModel)
    preset: Optional[str] = None
    condition: str = "clear-day"
    fiber_loss_rate: float = 0.02
    community_altitude: float = 30.0
    clock_ratio: float = 1.0
    modular: ModularParams = field(default_factory=ModularParams)
    sweep: SweepParams = field(default_factory=SweepParams)

    @classmethod
    def from_preset(cls, name: str) -> "ScenarioConfig":
        p = get_preset(name)
        return cls(
            setup=p.setup,
            atmosphere=p.atmosphere,
            preset=name,
            condition=p.condition,
            fiber_loss_rate=p.fiber_loss_rate,
            community_altitude=p.community_altitude if p.community_altitude is not None else 30.0,
        )

    def to_dict(self) -> dict:
        return _enc({
            "preset": self.preset,
            "setup": self.setup.to_dict(),
            "atmosphere": self.atmosphere.to_dict(),
            "condition": self.condition,
            "fiber_loss_rate": self.fiber_loss_rate,
            "community_altitude": self.community_altitude,
            "clock_ratio": self.clock_ratio,
            "modular": asdict(self.modular),
            "sweep": asdict(self.sweep),
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: Mapping) -> "ScenarioConfig":
        top = ("preset", "setup", "atmosphere", "condition", "fiber_loss_rate", "community_altitude",
               "clock_ratio", "modular", "sweep")
        _strict(data, top, "config")
        if data.get("preset") is not None:
            cfg = cls.from_preset(data["preset"])
        elif "setup" in data:
            cfg = cls(setup=beam_setup_from_dict(data["setup"]))
        else:
            raise ConfigError("config needs either a preset or a setup")
        if "setup" in data:
            cfg.setup = beam_setup_from_dict(data["setup"], cfg.setup)
        if "atmosphere" in data:
            cfg.atmosphere = atmosphere_from_dict(data["atmosphere"], cfg.atmosphere)
        if "condition" in data:
            cfg.condition = _condition(data["condition"])
        for k in ("fiber_loss_rate", "clock_ratio"):
            if k in data:
                setattr(cfg, k, _num(data[k], k))
        if "community_altitude" in data:
            cfg.community_altitude = parse_nonneg_length(data["community_altitude"])
        if "modular" in data:
            cfg.modular = _modular_from_dict(data["modular"], cfg.modular)
        if "sweep" in data:
            cfg.sweep = _sweep_from_dict(data["sweep"], cfg.sweep)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_json(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc

    def with_overrides(self, overrides) -> "ScenarioConfig":
        """Apply ``a.b=value`` strings; values are parsed as JSON when possible."""
        data = copy.deepcopy(self.to_dict())
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not of the form key=value")
            key, raw = item.split("=", 1)
            try:
                value = json.loads(raw)
            except json.JSONDecodeError:
                value = raw
            parts = key.strip().split(".")
            node = data
            for p in parts[:-1]:
                if not isinstance(node.get(p), dict):
                    raise ConfigError(f"override {key!r}: {p!r} is not a section")
                node = node[p]
            if parts[-1] not in node:
                raise ConfigError(f"override {key!r}: unknown key")
            node[parts[-1]] = value
        return ScenarioConfig.from_dict(data)

    def validate(self) -> None:
        m = self.modular
        if m.k_b < 1 or any(k < 1 for k in m.k_c):
            raise ConfigError("connectivities must be >= 1")
        if m.p_bc is not None and m.p_bc < 1:
            raise ConfigError("modular.p_bc must be >= 1")
        if self.clock_ratio <= 0:
            raise ConfigError("clock_ratio must be > 0")
        if self.fiber_loss_rate <= 0:
            raise ConfigError("fiber_loss_rate must be > 0")
        if self.sweep.figure not in FIGURES:
            raise ConfigError(f"unknown figure {self.sweep.figure!r}; choose from {', '.join(FIGURES)}")
        if any(c <= 0 for c in self.sweep.c_grid):
            raise ConfigError("sweep.c_grid entries must be > 0")
        if any(z < 0 for z in self.sweep.z_grid):
            raise ConfigError("sweep.z_grid entries must be >= 0")


def _int(v, name):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{name} must be an integer, got {v!r}")
    return v


def _modular_from_dict(data: Mapping, base: ModularParams) -> ModularParams:
    _strict(data, [f.name for f in fields(ModularParams)], "modular")
    out = replace(base)
    if "k_b" in data:
        out.k_b = _int(data["k_b"], "modular.k_b")
    if "k_c" in data:
        if not isinstance(data["k_c"], list):
            raise ConfigError("modular.k_c must be a list")
        out.k_c = [_int(k, "modular.k_c") for k in data["k_c"]]
    if "p_bc" in data:
        out.p_bc = None if data["p_bc"] is None else _int(data["p_bc"], "modular.p_bc")
    if "h_max" in data:
        out.h_max = parse_nonneg_length(data["h_max"])
    if "theta_window" in data:
        out.theta_window = _num(data["theta_window"], "modular.theta_window")
    if "per_attachment_rate" in data:
        v = data["per_attachment_rate"]
        out.per_attachment_rate = None if v is None else _num(v, "modular.per_attachment_rate")
    return out


def _sweep_from_dict(data: Mapping, base: SweepParams) -> SweepParams:
    _strict(data, [f.name for f in fields(SweepParams)], "sweep")
    out = replace(base)
    if "figure" in data:
        out.figure = str(data["figure"])
    for key in ("c_grid", "z_grid"):
        if key in data:
            if not isinstance(data[key], list):
                raise ConfigError(f"sweep.{key} must be a list")
            conv = (lambda v: parse_length(v)) if key == "z_grid" else (lambda v: _num(v, f"sweep.{key}"))
            setattr(out, key, [conv(v) for v in data[key]])
    if "k_values" in data:
        if not isinstance(data["k_values"], list):
            raise ConfigError("sweep.k_values must be a list")
        out.k_values = [_int(k, "sweep.k_values") for k in data["k_values"]]
    return out
