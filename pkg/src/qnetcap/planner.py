"""Distance constraints that keep community isolation the minimum cut, plus sweeps.

Fiber limits are closed form.  Free-space and intersatellite limits are
roots of a monotone log-ratio, bracketed by bisection down to 1 m and then
polished inside the final bracket so the defining equality holds tightly.
"""

from __future__ import annotations

import csv
import io
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

from scipy import optimize

from .capacity import LN2
from .config import ScenarioConfig
from .errors import NoSolution, QnetcapError
from .optics import (
    AtmosphereModel,
    BeamSetup,
    Trajectory,
    build_channel,
    fiber_channel,
    intersatellite_capacity,
    line_of_sight_limit,
)

BISECT_TOL = 1.0
BISECT_MAXITER = 200
WEAK_TURBULENCE_WINDOW = 1066.0
DEFAULT_H_MAX = 1.5e6

OK = "ok"
WINDOW_LIMITED = "WindowLimited"
NO_SOLUTION = "NoSolution"
BRACKET_LIMITED = "BracketLimited"
UNDEFINED = "Undefined"


@dataclass(frozen=True)
class ConstraintResult:
    value: float  # meters; nan when status is NoSolution
    status: str = OK
    regime: Optional[str] = None
    divisor: Optional[float] = None
    los_limit: Optional[float] = None
    lower: Optional[float] = None
    upper: Optional[float] = None
    iterations: int = 0

    @property
    def exceeds_los(self) -> Optional[bool]:
        if self.los_limit is None or self.status == NO_SOLUTION:
            return None
        return self.value >= self.los_limit

    def require(self) -> float:
        if self.status == NO_SOLUTION:
            raise NoSolution("target capacity is unreachable at any admissible distance")
        return self.value


# ---------------------------------------------------------------- fiber

def max_fiber_length(c_target: float, k: float, loss_rate: float = 0.02) -> float:
    """Longest fiber edge (m) for which k parallel edges still carry ``c_target``."""
    if not c_target > 0 or not k > 0:
        raise ValueError("c_target and k must be > 0")
    return -1000.0 / loss_rate * math.log10(-math.expm1(-c_target / k * LN2))


# ---------------------------------------------------------------- root finding

def _solve_decreasing(g: Callable[[float], float], lo: float, hi: float):
    """Root of a decreasing ``g`` on [lo, hi]: bisect to BISECT_TOL, then polish."""
    glo, ghi = g(lo), g(hi)
    if glo < 0:
        return math.nan, NO_SOLUTION, 0
    if ghi >= 0:
        return hi, BRACKET_LIMITED, 0
    it = 0
    while hi - lo > BISECT_TOL and it < BISECT_MAXITER:
        mid = 0.5 * (lo + hi)
        if g(mid) >= 0:
            lo = mid
        else:
            hi = mid
        it += 1
    root = optimize.brentq(g, lo, hi, xtol=1e-12 * hi, rtol=1e-14, maxiter=200)
    return root, OK, it


# ---------------------------------------------------------------- intersatellite

def max_intersatellite_separation(c_target: float, h_min_star: float, setup: BeamSetup,
                                  h_max: float = DEFAULT_H_MAX, regime: Optional[str] = None) -> ConstraintResult:
    """Largest z with h_min_star * B(z) >= c_target (pointing-error fading included)."""
    if not c_target > 0:
        raise ValueError("c_target must be > 0")
    los = line_of_sight_limit(h_max, h_max)
    hi = max(10.0 * los, 1e8)

    def g(z):
        return math.log(h_min_star * float(intersatellite_capacity(setup, z)) / c_target)

    z, status, it = _solve_decreasing(g, 1.0, hi)
    return ConstraintResult(z, status, regime, h_min_star, los, iterations=it)


def intersatellite_capacity_at(setup: BeamSetup, z: float) -> float:
    return float(intersatellite_capacity(setup, z))


def _loss_log(eta_eff: float, rate: float) -> Optional[float]:
    """ln[eta_eff / (eta_eff - 1 + 2^-rate)], or None when no transmissivity suffices."""
    arg = eta_eff - 1.0 + 2.0 ** (-rate)
    if arg <= 0:
        return None
    return math.log(eta_eff / arg)


@dataclass(frozen=True)
class IntersatBounds:
    upper: Optional[float]
    lower: Optional[float]
    upper_status: str
    lower_status: str


def intersat_bounds(c_target: float, h_min_star: float, setup: BeamSetup, clock_ratio: float = 1.0) -> IntersatBounds:
    """Pointing-free upper bound and slow-detector lower bound on z_b^max.

    Upper: the non-fading channel with the full diffraction-limited
    transmissivity.  Lower: a slow detector sees the long-term spot
    w_d^2 + (eps_p z)^2 and runs ``clock_ratio`` times more uses per
    fast-detector use, so it must deliver clock_ratio * C per use.
    """
    a2, w02, zr = setup.a_R**2, setup.w0**2, setup.rayleigh_range
    up_log = _loss_log(setup.eta_eff, c_target / h_min_star)
    upper, ustat = None, UNDEFINED
    if up_log is not None:
        ratio = 2.0 * a2 / (w02 * up_log) - 1.0
        if ratio >= 0:
            upper, ustat = zr * math.sqrt(ratio), OK
    lo_log = _loss_log(setup.eta_eff, clock_ratio * c_target / h_min_star)
    lower, lstat = None, UNDEFINED
    if lo_log is not None:
        num = 2.0 * a2 / lo_log - w02
        den = w02 / zr**2 + setup.pointing_error**2
        if num >= 0:
            lower, lstat = math.sqrt(num / den), OK
    return IntersatBounds(upper, lower, ustat, lstat)


def slow_detector_capacity(setup: BeamSetup, z: float) -> float:
    """Per-use capacity of a receiver that integrates over the wandering."""
    from .capacity import plob
    from .optics import diffraction

    w2 = diffraction(setup, z).w_d ** 2 + (setup.pointing_error * z) ** 2
    eta = setup.eta_eff * -math.expm1(-2.0 * setup.a_R**2 / w2)
    return float(plob(eta))


# ---------------------------------------------------------------- ground free space

def ground_capacity(setup: BeamSetup, atmo: AtmosphereModel, z: float, condition: str, h: float = 30.0) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ch = build_channel(setup, atmo, Trajectory.ground(z, h), condition=condition)
    return float(ch.capacity())


def max_freespace_length(c_target: float, k_c: float, setup: BeamSetup, atmo: AtmosphereModel,
                         condition: str = "clear-day", h: float = 30.0,
                         window: float = WEAK_TURBULENCE_WINDOW) -> ConstraintResult:
    """Largest ground link length in [1 m, window] with k_c * L_F(z) >= c_target."""
    if not c_target > 0:
        raise ValueError("c_target must be > 0")

    def g(z):
        cap = ground_capacity(setup, atmo, z, condition, h)
        if cap <= 0:
            return -math.inf
        return math.log(k_c * cap / c_target)

    z, status, it = _solve_decreasing(g, 1.0, window)
    if status == BRACKET_LIMITED:
        status = WINDOW_LIMITED
    return ConstraintResult(z, status, divisor=k_c, iterations=it)


# ---------------------------------------------------------------- best case

def per_attachment_rate(cfg: ScenarioConfig) -> float:
    """Capacity of one intercommunity link in the best-case layout.

    Fiber/satellite presets: a downlink from h_max at the edge of the angular
    window.  Ground preset: a 1 km free-space link.
    """
    m = cfg.modular
    if m.per_attachment_rate is not None:
        return m.per_attachment_rate
    if cfg.preset == "table2" or cfg.sweep.figure.startswith("fig4"):
        return ground_capacity(cfg.setup, cfg.atmosphere, 1000.0, cfg.condition, cfg.community_altitude)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ch = build_channel(cfg.setup, cfg.atmosphere, Trajectory.downlink(m.h_max, m.theta_window),
                           condition=cfg.condition, strict=False)
    return float(ch.capacity())


def best_case_attachments(c_target: float, rate: float, fixed: Optional[int] = None) -> int:
    if fixed is not None:
        return fixed
    if not rate > 0:
        raise NoSolution("per-attachment rate is zero")
    return max(1, math.ceil(c_target / rate - 1e-12))


# ---------------------------------------------------------------- sweeps

CONSTRAINT_COLUMNS = ("figure", "c_target", "k", "regime", "divisor", "value_m", "status",
                      "lower_m", "upper_m", "los_m", "exceeds_los")
CURVE_COLUMNS = ("figure", "channel", "z_m", "eta", "n_bar", "capacity", "bound_kind", "status")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return format(x, ".10g")
    return str(x)


def _threads() -> int:
    raw = os.environ.get("QNETCAP_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 1
    return max(1, n)


def _run_rows(jobs: list) -> list:
    """Evaluate row thunks; results keep grid order whatever the completion order."""
    n = min(_threads(), max(1, len(jobs)))
    if n == 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(lambda f: f(), jobs))


def _guard(build: Callable[[], dict], base: dict) -> Callable[[], dict]:
    def run():
        try:
            return build()
        except (QnetcapError, ValueError, ArithmeticError) as exc:
            row = dict(base)
            row["status"] = f"error:{type(exc).__name__}"
            return row
    return run


def _constraint_jobs(cfg: ScenarioConfig) -> list:
    fig = cfg.sweep.figure
    jobs = []
    los = line_of_sight_limit(cfg.modular.h_max, cfg.modular.h_max)
    rate = None

    def best_divisor(c, k):
        nonlocal rate
        if rate is None:
            rate = per_attachment_rate(cfg)
        return k * best_case_attachments(c, rate, cfg.modular.p_bc)

    for c in cfg.sweep.c_grid:
        for k in cfg.sweep.k_values:
            if fig == "fig3a":
                for regime in ("worst-case", "best-case"):
                    base = {"figure": fig, "c_target": c, "k": k, "regime": regime}

                    def build(c=c, k=k, regime=regime, base=base):
                        H = k if regime == "worst-case" else best_divisor(c, k)
                        r = max_intersatellite_separation(c, H, cfg.setup, cfg.modular.h_max, regime)
                        b = intersat_bounds(c, H, cfg.setup, cfg.clock_ratio)
                        return {**base, "divisor": H, "value_m": r.value, "status": r.status,
                                "lower_m": b.lower, "upper_m": b.upper, "los_m": los, "exceeds_los": r.exceeds_los}
                    jobs.append(_guard(build, base))
            elif fig == "fig3c":
                base = {"figure": fig, "c_target": c, "k": k, "regime": "community"}
                jobs.append(_guard(lambda c=c, k=k, base=base: {
                    **base, "divisor": k, "value_m": max_fiber_length(c, k, cfg.fiber_loss_rate), "status": OK}, base))
            elif fig == "fig4a":
                for regime in ("worst-case", "best-case"):
                    base = {"figure": fig, "c_target": c, "k": k, "regime": regime}

                    def build(c=c, k=k, regime=regime, base=base):
                        H = k if regime == "worst-case" else best_divisor(c, k)
                        return {**base, "divisor": H, "value_m": max_fiber_length(c, H, cfg.fiber_loss_rate), "status": OK}
                    jobs.append(_guard(build, base))
            elif fig == "fig4b":
                base = {"figure": fig, "c_target": c, "k": k, "regime": "community"}

                def build(c=c, k=k, base=base):
                    r = max_freespace_length(c, k, cfg.setup, cfg.atmosphere, cfg.condition, cfg.community_altitude)
                    return {**base, "divisor": k, "value_m": r.value, "status": r.status}
                jobs.append(_guard(build, base))
    return jobs


def _curve_jobs(cfg: ScenarioConfig) -> list:
    jobs = []
    channels = ("fiber", "ground", "intersatellite", "downlink", "uplink")
    for name in channels:
        for z in cfg.sweep.z_grid:
            base = {"figure": "fig1", "channel": name, "z_m": z}

            def build(name=name, z=z, base=base):
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    if name == "fiber":
                        ch = fiber_channel(z, cfg.fiber_loss_rate)
                    elif name == "ground":
                        ch = build_channel(cfg.setup, cfg.atmosphere, Trajectory.ground(z, cfg.community_altitude),
                                           cfg.condition, strict=False)
                    elif name == "intersatellite":
                        ch = build_channel(cfg.setup, cfg.atmosphere, Trajectory.intersatellite(z), cfg.condition)
                    else:
                        make = Trajectory.downlink if name == "downlink" else Trajectory.uplink
                        ch = build_channel(cfg.setup, cfg.atmosphere, make(z, 0.0), cfg.condition, strict=False)
                    cap = ch.capacity()
                return {**base, "eta": ch.eta, "n_bar": ch.n_bar, "capacity": cap.value,
                        "bound_kind": cap.kind.value, "status": OK}
            jobs.append(_guard(build, base))
    return jobs


def sweep(cfg: ScenarioConfig) -> tuple:
    """(columns, rows) for the configured figure; failing rows carry an error status."""
    if cfg.sweep.figure == "fig1":
        return CURVE_COLUMNS, _run_rows(_curve_jobs(cfg))
    return CONSTRAINT_COLUMNS, _run_rows(_constraint_jobs(cfg))


def sweep_csv(cfg: ScenarioConfig) -> str:
    cols, rows = sweep(cfg)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in cols])
    return buf.getvalue()
