"""Free-space channel physics.

Turns a beam setup, an atmosphere and a trajectory into a :class:`ChannelModel`
(maximum transmissivity, Weibull wandering ensemble and thermal background).
Lengths are meters throughout.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable, Optional

from scipy import integrate, special

from .capacity import (
    CapacityBound,
    FadingDensity,
    fading_capacity,
    fiber_transmissivity,
    plob,
    thermal_fading_capacity,
    thermal_loss_bound,
)
from .errors import DomainError, LineOfSightWarning, QuadratureError, WeakTurbulenceViolated, WeakTurbulenceWarning

R_EARTH = 6_371_000.0
FAR_FIELD_FACTOR = 10.0
# Yura grading only bites when turbulent broadening is at least 1% of w_d^2.
YURA_RELEVANCE = 1e-2
PHI_WARN = 0.1
PHI_ERROR = 0.5
ZENITH_LIMIT = 1.0


class TrajectoryKind(str, Enum):
    GROUND = "ground"
    UPLINK = "uplink"
    DOWNLINK = "downlink"
    INTERSATELLITE = "intersatellite"


class Condition(str, Enum):
    CLEAR_NIGHT = "clear-night"
    CLOUDY_DAY = "cloudy-day"
    CLEAR_DAY = "clear-day"


class Medium(str, Enum):
    FIBER = "fiber"
    FREE_SPACE = "free-space"


@dataclass(frozen=True)
class BeamSetup:
    w0: float
    a_R: float
    eta_eff: float
    wavelength: float = 800e-9
    curvature: float = math.inf
    n_ex: float = 0.0
    pointing_error: float = 1e-6
    pulse_duration: float = 10e-9
    field_of_view: float = 1e-10
    filter_nm: float = 1.0
    # Trusted excess noise is attributed to the receiver and left out of n_bar.
    n_ex_trusted: bool = True

    def __post_init__(self):
        for name in ("w0", "a_R", "wavelength", "curvature"):
            v = getattr(self, name)
            if not v > 0:
                raise DomainError(f"{name} must be > 0, got {v}")
        if not 0.0 < self.eta_eff <= 1.0:
            raise DomainError(f"eta_eff must lie in (0, 1], got {self.eta_eff}")
        for name in ("n_ex", "pointing_error", "pulse_duration", "field_of_view", "filter_nm"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise DomainError(f"{name} must be finite and >= 0, got {v}")

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def rayleigh_range(self) -> float:
        return math.pi * self.w0**2 / self.wavelength

    @property
    def collection_factor(self) -> float:
        """Gamma_R = dt * dlambda * Omega * a_R^2 (dlambda in nm)."""
        return self.pulse_duration * self.filter_nm * self.field_of_view * self.a_R**2

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------- geometry


def h_theta(z: float, theta: float) -> float:
    """Altitude reached after slant distance z from the ground at zenith angle theta."""
    return math.sqrt(R_EARTH**2 + z**2 + 2.0 * z * R_EARTH * math.cos(theta)) - R_EARTH


def z_theta(h: float, theta: float) -> float:
    """Slant distance from the ground to altitude h at zenith angle theta."""
    c = math.cos(theta)
    # Rationalised form avoids cancellation for h << R_E.
    num = h * h + 2.0 * h * R_EARTH
    return num / (math.sqrt(num + (R_EARTH * c) ** 2) + R_EARTH * c)


@dataclass(frozen=True)
class GroundSatGeometry:
    z_slant: float
    h_of_z: Callable[[float], float]
    z_of_h: Callable[[float], float]


def ground_satellite_geometry(h: float, theta: float, direction: str = "uplink") -> GroundSatGeometry:
    if not h >= 0:
        raise DomainError(f"altitude must be >= 0, got {h}")
    if abs(theta) > math.pi / 2:
        raise DomainError(f"zenith angle must satisfy |theta| <= pi/2, got {theta}")
    zs = z_theta(h, theta)
    if direction == "uplink":
        return GroundSatGeometry(zs, lambda z: h_theta(z, theta), lambda hh: z_theta(hh, theta))
    if direction == "downlink":
        return GroundSatGeometry(zs, lambda z: h_theta(zs - z, theta), lambda hh: zs - z_theta(hh, theta))
    raise DomainError(f"direction must be uplink or downlink, got {direction!r}")


def line_of_sight_limit(h1: float, h2: float) -> float:
    """Longest chord between two altitudes that does not cross the Earth."""
    if h1 < 0 or h2 < 0:
        raise DomainError("altitudes must be >= 0")
    return sum(h * (h + 2.0 * R_EARTH) / (h + R_EARTH) for h in (h1, h2))


def tangent_chord_limit(h1: float, h2: float) -> float:
    """Length of the straight path that grazes the Earth's surface.

    Strict geometric occlusion limit; :func:`line_of_sight_limit` is the
    shorter working value used for planning.
    """
    if h1 < 0 or h2 < 0:
        raise DomainError("altitudes must be >= 0")
    return sum(math.sqrt(h * (h + 2.0 * R_EARTH)) for h in (h1, h2))


@dataclass(frozen=True)
class Trajectory:
    kind: TrajectoryKind
    z: float
    h: float = 0.0
    h_sat: float = 0.0
    theta: float = 0.0
    h1: float = 0.0
    h2: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", TrajectoryKind(self.kind))
        if not (self.z >= 0 and math.isfinite(self.z)):
            raise DomainError(f"propagation length must be finite and >= 0, got {self.z}")
        if self.kind in (TrajectoryKind.UPLINK, TrajectoryKind.DOWNLINK) and abs(self.theta) > ZENITH_LIMIT:
            raise DomainError(f"zenith angle {self.theta} rad outside the weak-turbulence window |theta| <= 1")
        for name in ("h", "h_sat", "h1", "h2"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be >= 0")

    @classmethod
    def ground(cls, z: float, h: float = 30.0) -> "Trajectory":
        return cls(TrajectoryKind.GROUND, z, h=h)

    @classmethod
    def uplink(cls, h_sat: float, theta: float = 0.0) -> "Trajectory":
        return cls(TrajectoryKind.UPLINK, z_theta(h_sat, theta), h_sat=h_sat, theta=theta)

    @classmethod
    def downlink(cls, h_sat: float, theta: float = 0.0) -> "Trajectory":
        return cls(TrajectoryKind.DOWNLINK, z_theta(h_sat, theta), h_sat=h_sat, theta=theta)

    @classmethod
    def intersatellite(cls, z: float, h1: float = 0.0, h2: float = 0.0) -> "Trajectory":
        return cls(TrajectoryKind.INTERSATELLITE, z, h1=h1, h2=h2)

    def altitude(self) -> Optional[Callable[[float], float]]:
        """Altitude along the path as a function of distance from the transmitter."""
        k = self.kind
        if k is TrajectoryKind.GROUND:
            return lambda zeta: self.h
        if k is TrajectoryKind.UPLINK:
            return lambda zeta: h_theta(zeta, self.theta)
        if k is TrajectoryKind.DOWNLINK:
            return lambda zeta: h_theta(max(self.z - zeta, 0.0), self.theta)
        return None


# ---------------------------------------------------------------- atmosphere


@dataclass(frozen=True)
class AtmosphereModel:
    alpha0: float = 5e-6
    h_tilde: float = 6600.0
    # Hufnagel-Valley parameters; cn2_constant overrides the profile when set.
    hv_ground: float = 1.7e-14
    hv_wind: float = 21.0
    cn2_constant: Optional[float] = None
    sky_irradiance: dict = field(
        default_factory=lambda: {"clear-night": 1.9e13, "cloudy-day": 1.9e18, "clear-day": 1.9e18}
    )
    kappa_day: float = 0.3
    kappa_night: float = 7.36e-7
    h_sun: float = 4.61e18

    def __post_init__(self):
        if not self.alpha0 > 0:
            raise DomainError("alpha0 must be > 0")
        if not self.h_tilde > 0:
            raise DomainError("h_tilde must be > 0")
        if self.hv_ground < 0 or (self.cn2_constant is not None and self.cn2_constant < 0):
            raise DomainError("C_n^2 must be >= 0")
        object.__setattr__(self, "sky_irradiance", dict(self.sky_irradiance))

    def __hash__(self):
        return hash((self.alpha0, self.h_tilde, self.hv_ground, self.hv_wind, self.cn2_constant))

    def alpha(self, h: float) -> float:
        return self.alpha0 * math.exp(-h / self.h_tilde)

    def cn2(self, h: float) -> float:
        if self.cn2_constant is not None:
            return self.cn2_constant
        v = self.hv_wind
        return (
            0.00594 * (v / 27.0) ** 2 * (1e-5 * h) ** 10 * math.exp(-h / 1000.0)
            + 2.7e-16 * math.exp(-h / 1500.0)
            + self.hv_ground * math.exp(-h / 100.0)
        )

    def to_dict(self) -> dict:
        return asdict(self)


def _path_points(traj: Trajectory):
    """Breakpoints where the altitude crosses the profile's length scales."""
    if traj.kind not in (TrajectoryKind.UPLINK, TrajectoryKind.DOWNLINK):
        return None
    pts = []
    for hh in (100.0, 1000.0, 5000.0, 20000.0, 50000.0):
        if hh < traj.h_sat:
            d = z_theta(hh, traj.theta)
            pts.append(d if traj.kind is TrajectoryKind.UPLINK else traj.z - d)
    return [p for p in pts if 0 < p < traj.z] or None


def _path_integral(f, traj: Trajectory) -> float:
    if traj.z == 0:
        return 0.0
    val, err = integrate.quad(f, 0.0, traj.z, points=_path_points(traj), limit=400, epsabs=0.0, epsrel=1e-10)
    if err > 1e-6 * abs(val) + 1e-300:
        raise QuadratureError(f"path integral did not converge (error {err})", err)
    return val


# ---------------------------------------------------------------- loss terms


@dataclass(frozen=True)
class Diffraction:
    w_d: float
    eta_d: float
    eta_d_far: float
    far_field: bool


def diffraction(setup: BeamSetup, z: float) -> Diffraction:
    if not z >= 0:
        raise DomainError(f"z must be >= 0, got {z}")
    focus = 1.0 if math.isinf(setup.curvature) else (1.0 - z / setup.curvature)
    wd2 = setup.w0**2 * (focus**2 + (z / setup.rayleigh_range) ** 2)
    ratio = 2.0 * setup.a_R**2 / wd2
    return Diffraction(
        w_d=math.sqrt(wd2),
        eta_d=-math.expm1(-ratio),
        eta_d_far=ratio,
        far_field=z > FAR_FIELD_FACTOR * setup.rayleigh_range,
    )


def extinction(atmo: AtmosphereModel, traj: Trajectory) -> float:
    k = traj.kind
    if k is TrajectoryKind.INTERSATELLITE:
        return 1.0
    if k is TrajectoryKind.GROUND:
        return math.exp(-atmo.alpha(traj.h) * traj.z)
    hl = traj.altitude()
    return math.exp(-_path_integral(lambda s: atmo.alpha(hl(s)), traj))


@dataclass(frozen=True)
class Turbulence:
    rho0: float
    phi: float
    w_st: float
    sigma_t2: float
    sigma_ry2: float
    eta_st: float
    eta_st_far: float


def turbulence(setup: BeamSetup, atmo: AtmosphereModel, traj: Trajectory, strict: bool = True) -> Turbulence:
    """Weak-turbulence short-term spot and turbulent wandering.

    Raises :class:`WeakTurbulenceViolated` when Yura's parameter exceeds 0.5 and
    the turbulent broadening is not negligible; warns above 0.1 or when the
    ground Rytov variance exceeds 1.
    """
    if traj.kind is TrajectoryKind.INTERSATELLITE:
        raise DomainError("intersatellite paths carry no turbulence")
    k = setup.wavenumber
    z = traj.z
    diff = diffraction(setup, z)
    if traj.kind is TrajectoryKind.GROUND:
        cn2 = atmo.cn2(traj.h)
        weight = 0.548 * k**2 * cn2 * z
        sigma_ry2 = 1.23 * k ** (7.0 / 6.0) * z ** (11.0 / 6.0) * cn2
    else:
        hl = traj.altitude()
        weight = 1.46 * k**2 * _path_integral(lambda s: (1.0 - s / z) ** (5.0 / 3.0) * atmo.cn2(hl(s)), traj) if z else 0.0
        sigma_ry2 = 2.25 * k ** (7.0 / 6.0) * _path_integral(lambda s: (z - s) ** (5.0 / 6.0) * atmo.cn2(hl(s)), traj)
    if weight <= 0.0:
        rho0, phi, spread = math.inf, 0.0, 0.0
    else:
        rho0 = weight ** (-3.0 / 5.0)
        phi = 0.33 * (rho0 / setup.w0) ** (1.0 / 3.0)
        spread = 2.0 * (setup.wavelength * z / (math.pi * rho0)) ** 2
    wst2 = diff.w_d**2 + spread * (1.0 - phi) ** 2
    sigma_t2 = spread * (1.0 - (1.0 - phi) ** 2)
    relevant = spread > YURA_RELEVANCE * diff.w_d**2
    if relevant and phi > PHI_ERROR:
        msg = f"Yura parameter phi={phi:.3g} > {PHI_ERROR} at z={z:.6g} m"
        if strict:
            raise WeakTurbulenceViolated(msg)
        warnings.warn(msg, WeakTurbulenceWarning, stacklevel=2)
    elif relevant and phi > PHI_WARN:
        warnings.warn(f"Yura parameter phi={phi:.3g} is not << 1 at z={z:.6g} m", WeakTurbulenceWarning, stacklevel=2)
    if traj.kind is TrajectoryKind.GROUND and sigma_ry2 > 1.0:
        warnings.warn(f"Rytov variance {sigma_ry2:.3g} > 1 at z={z:.6g} m", WeakTurbulenceWarning, stacklevel=2)
    ratio = 2.0 * setup.a_R**2 / wst2
    return Turbulence(rho0, phi, math.sqrt(wst2), sigma_t2, sigma_ry2, -math.expm1(-ratio), ratio)


def wandering_variance(setup: BeamSetup, traj: Trajectory, turb: Optional[Turbulence] = None) -> float:
    sigma_p2 = (setup.pointing_error * traj.z) ** 2
    k = traj.kind
    if k is TrajectoryKind.INTERSATELLITE or k is TrajectoryKind.DOWNLINK:
        return sigma_p2
    if turb is None:
        raise DomainError("turbulent trajectories need a turbulence result")
    if k is TrajectoryKind.UPLINK:
        return turb.sigma_t2
    return turb.sigma_t2 + sigma_p2


# ---------------------------------------------------------------- Weibull law


def _one_minus_i0e(x: float) -> float:
    """1 - exp(-2x) I0(2x), accurate for small x."""
    if x < 1e-4:
        return x * (2.0 - x * (3.0 - x * (10.0 / 3.0 - x * 35.0 / 12.0)))
    return 1.0 - special.i0e(2.0 * x)


def f0(x: float) -> float:
    return 1.0 / _one_minus_i0e(x)


def f1(x: float) -> float:
    return float(special.i1e(2.0 * x))


@dataclass(frozen=True)
class WeibullParams:
    gamma_shape: float
    r0: float


def weibull_params(eta_st: float, eta_st_far: float, a_R: float) -> WeibullParams:
    if not 0.0 < eta_st <= 1.0:
        raise DomainError(f"eta_st must lie in (0, 1], got {eta_st}")
    if not eta_st_far > 0:
        raise DomainError("eta_st_far must be > 0")
    x = eta_st_far
    g = _one_minus_i0e(x)
    log_arg = math.log(2.0 * eta_st) - math.log(g)
    if not log_arg > 0.0:
        raise DomainError("degenerate Weibull parameters: log argument <= 1")
    shape = 4.0 * x * f1(x) / (g * log_arg)
    return WeibullParams(shape, a_R / log_arg ** (1.0 / shape))


# ---------------------------------------------------------------- noise


def background_photons(setup: BeamSetup, atmo: AtmosphereModel, traj: Trajectory, condition) -> float:
    """Total thermal occupation n_bar = eta_eff n_B + n_ex (n_ex dropped when trusted)."""
    cond = Condition(condition)
    excess = 0.0 if setup.n_ex_trusted else setup.n_ex
    k = traj.kind
    if k is TrajectoryKind.INTERSATELLITE:
        return excess
    if k is TrajectoryKind.UPLINK:
        kappa = atmo.kappa_night if cond is Condition.CLEAR_NIGHT else atmo.kappa_day
        irr = kappa * atmo.h_sun
    else:
        irr = atmo.sky_irradiance[cond.value]
    return setup.eta_eff * irr * setup.collection_factor + excess


# ---------------------------------------------------------------- channels


@dataclass(frozen=True)
class ChannelModel:
    medium: Medium
    eta: float
    n_bar: float = 0.0
    density: Optional[FadingDensity] = None
    trajectory: Optional[Trajectory] = None
    diagnostics: dict = field(default_factory=dict, compare=False, hash=False)

    def capacity(self) -> CapacityBound:
        if self.density is None:
            return thermal_loss_bound(self.eta, self.n_bar)
        return thermal_fading_capacity(self.density, self.n_bar)

    def mean_transmissivity(self) -> float:
        """E[tau] over the fading ensemble."""
        d = self.density
        if d is None or d.sigma == 0:
            return self.eta
        val, _ = integrate.quad(lambda x: d.survival(x) * math.exp(-x), 0.0, 60.0, limit=400)
        return self.eta * (1.0 - val)


def fiber_channel(length_m: float, loss_rate_per_km: float = 0.02) -> ChannelModel:
    eta = fiber_transmissivity(length_m / 1000.0, loss_rate_per_km).value
    return ChannelModel(Medium.FIBER, eta, diagnostics={"length_m": length_m})


def _fading_from_spot(setup: BeamSetup, eta: float, eta_spot: float, eta_spot_far: float, sigma2: float) -> FadingDensity:
    wp = weibull_params(eta_spot, eta_spot_far, setup.a_R)
    return FadingDensity(eta, wp.gamma_shape, wp.r0, math.sqrt(max(sigma2, 0.0)))


def intersatellite_capacity(setup: BeamSetup, z: float, h1: Optional[float] = None, h2: Optional[float] = None) -> CapacityBound:
    """Pure-loss capacity between satellites, with pointing-error fading when eps_p > 0."""
    if h1 is not None and h2 is not None and z > line_of_sight_limit(h1, h2):
        warnings.warn(f"z={z:.6g} m exceeds the line-of-sight limit", LineOfSightWarning, stacklevel=2)
    diff = diffraction(setup, z)
    eta = setup.eta_eff * diff.eta_d
    if setup.pointing_error == 0.0 or z == 0.0:
        return plob(eta)
    dens = _fading_from_spot(setup, eta, diff.eta_d, diff.eta_d_far, (setup.pointing_error * z) ** 2)
    return fading_capacity(dens)


def build_channel(setup: BeamSetup, atmo: AtmosphereModel, traj: Trajectory, condition="clear-day", strict: bool = True) -> ChannelModel:
    diff = diffraction(setup, traj.z)
    diag = {"w_d": diff.w_d, "eta_d": diff.eta_d, "eta_d_far": diff.eta_d_far, "far_field": diff.far_field}
    sigma_p2 = (setup.pointing_error * traj.z) ** 2
    if traj.kind is TrajectoryKind.INTERSATELLITE:
        if traj.h1 or traj.h2:
            if traj.z > line_of_sight_limit(traj.h1, traj.h2):
                warnings.warn(f"z={traj.z:.6g} m exceeds the line-of-sight limit", LineOfSightWarning, stacklevel=2)
        eta_atm, eta_spot, eta_far, w_st = 1.0, diff.eta_d, diff.eta_d_far, diff.w_d
        turb = None
        diag.update(rho0=math.inf, phi=0.0, sigma_t2=0.0, sigma_ry2=0.0)
    else:
        eta_atm = extinction(atmo, traj)
        turb = turbulence(setup, atmo, traj, strict=strict)
        eta_spot, eta_far, w_st = turb.eta_st, turb.eta_st_far, turb.w_st
        diag.update(rho0=turb.rho0, phi=turb.phi, sigma_t2=turb.sigma_t2, sigma_ry2=turb.sigma_ry2)
    sigma2 = wandering_variance(setup, traj, turb)
    eta = setup.eta_eff * eta_atm * eta_spot
    n_bar = background_photons(setup, atmo, traj, condition)
    diag.update(eta_atm=eta_atm, eta_st=eta_spot, w_st=w_st, sigma_p2=sigma_p2, sigma2=sigma2)
    dens = None
    if traj.z > 0:
        dens = _fading_from_spot(setup, eta, eta_spot, eta_far, sigma2)
        diag.update(gamma_shape=dens.weibull_shape, r0=dens.weibull_scale)
    return ChannelModel(
        Medium.FREE_SPACE,
        eta,
        n_bar=n_bar,
        density=dens,
        trajectory=traj,
        diagnostics=diag,
    )
