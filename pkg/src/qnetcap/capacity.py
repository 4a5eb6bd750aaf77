"""Point-to-point capacity bounds for lossy and thermal-lossy bosonic channels.

All rates are in bits per channel use.  Fading ensembles are described by
:class:`FadingDensity`, a Weibull-shaped beam-wandering model.  Capacities over
a fading ensemble are evaluated in the coordinate ``x = ln(eta / tau)`` where the
density becomes a smooth generalised-Weibull law with survival function

    S(x) = exp(-(r0^2 / 2 sigma^2) x^(2/gamma)).

Working in ``x`` removes the integrable endpoint singularity that the raw
density has at ``tau -> eta`` when ``gamma > 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from scipy import integrate

from .errors import DomainError, InfiniteCapacityError, QuadratureError

LN2 = math.log(2.0)
QUAD_EPSREL = 1e-9
# Absolute error budget accepted from quad before we complain.
QUAD_ACCEPT = 1e-7
TAIL_RATIO = 1e-16
TAU_FLOOR_LOG = 290.0 * math.log(10.0)


class BoundKind(str, Enum):
    EXACT = "exact-achievable"
    TIGHT = "tight-upper-bound"


def _merge_kind(*kinds):
    return BoundKind.TIGHT if BoundKind.TIGHT in kinds else BoundKind.EXACT


@dataclass(frozen=True)
class CapacityBound:
    """A capacity value with its provenance.

    An infinite value (perfect transmission) is legal but inert: any arithmetic
    or float conversion raises :class:`InfiniteCapacityError` so it can never be
    summed into a network quietly.  Comparisons remain allowed.
    """

    value: float
    kind: BoundKind = BoundKind.EXACT

    def __post_init__(self):
        if math.isnan(self.value) or self.value < 0:
            raise DomainError(f"capacity must be >= 0, got {self.value}")
        object.__setattr__(self, "kind", BoundKind(self.kind))

    @property
    def infinite(self) -> bool:
        return math.isinf(self.value)

    def _finite(self) -> float:
        if self.infinite:
            raise InfiniteCapacityError("tagged infinite capacity cannot enter arithmetic")
        return self.value

    def __float__(self):
        return self._finite()

    def _combine(self, other, op):
        if isinstance(other, CapacityBound):
            return CapacityBound(op(self._finite(), other._finite()), _merge_kind(self.kind, other.kind))
        return CapacityBound(op(self._finite(), float(other)), self.kind)

    def __add__(self, other):
        return self._combine(other, lambda a, b: a + b)

    __radd__ = __add__

    def __mul__(self, other):
        return self._combine(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._combine(other, lambda a, b: a / b)

    def _cmp_value(self, other):
        return other.value if isinstance(other, CapacityBound) else float(other)

    def __lt__(self, other):
        return self.value < self._cmp_value(other)

    def __le__(self, other):
        return self.value <= self._cmp_value(other)

    def __gt__(self, other):
        return self.value > self._cmp_value(other)

    def __ge__(self, other):
        return self.value >= self._cmp_value(other)


@dataclass(frozen=True)
class Transmissivity:
    value: float

    def __post_init__(self):
        v = float(self.value)
        if not 0.0 <= v <= 1.0:
            raise DomainError(f"transmissivity must lie in [0, 1], got {self.value}")
        object.__setattr__(self, "value", v)

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class ThermalOccupation:
    n_bar: float

    def __post_init__(self):
        v = float(self.n_bar)
        if not v >= 0.0 or math.isinf(v):
            raise DomainError(f"thermal occupation must be finite and >= 0, got {self.n_bar}")
        object.__setattr__(self, "n_bar", v)

    def n_bar_e(self, tau) -> float:
        tau = _eta(tau)
        if tau >= 1.0:
            raise DomainError("environment occupation undefined at tau = 1")
        return self.n_bar / (1.0 - tau)

    def __float__(self):
        return self.n_bar


def _eta(x) -> float:
    return Transmissivity(float(x)).value


def _nbar(x) -> float:
    return ThermalOccupation(float(x)).n_bar


def entropy_h(x: float) -> float:
    """Von Neumann entropy of a thermal state with mean photon number ``x``."""
    if x <= 0.0:
        return 0.0
    return ((x + 1.0) * math.log1p(x) - x * math.log(x)) / LN2


def _plob_value(eta: float) -> float:
    return -math.log1p(-eta) / LN2


def plob(eta) -> CapacityBound:
    eta = _eta(eta)
    if eta == 1.0:
        return CapacityBound(math.inf)
    return CapacityBound(_plob_value(eta))


def _thermal_value(tau: float, n_bar: float) -> float:
    ne = n_bar / (1.0 - tau)
    val = -ne * math.log(tau) / LN2 + _plob_value(tau) - entropy_h(ne)
    return max(val, 0.0)


def thermal_loss_bound(tau, n_bar) -> CapacityBound:
    tau, n_bar = _eta(tau), _nbar(n_bar)
    if n_bar == 0.0:
        return plob(tau)
    if tau <= n_bar:
        return CapacityBound(0.0, BoundKind.TIGHT)
    if tau == 1.0:
        return CapacityBound(math.inf, BoundKind.TIGHT)
    return CapacityBound(_thermal_value(tau, n_bar), BoundKind.TIGHT)


def _thermal_slope(tau: float, n_bar: float) -> float:
    """dL/dtau of the thermal-loss bound on tau > n_bar."""
    ne = n_bar / (1.0 - tau)
    dne = ne / (1.0 - tau)
    # log(1 + 1/ne) written so a subnormal ne cannot overflow
    return (1.0 / (1.0 - tau) - ne / tau) / LN2 - dne * (math.log(tau) + math.log1p(ne) - math.log(ne)) / LN2


def fiber_transmissivity(length_km: float, loss_rate: float) -> Transmissivity:
    """Fiber transmissivity ``10^(-loss_rate * length)`` with loss_rate in 1/km (dB/10)."""
    if not length_km >= 0.0 or math.isinf(length_km):
        raise DomainError(f"fiber length must be finite and >= 0, got {length_km}")
    if not loss_rate > 0.0 or math.isinf(loss_rate):
        raise DomainError(f"fiber loss rate must be > 0, got {loss_rate}")
    return Transmissivity(10.0 ** (-loss_rate * length_km))


@dataclass(frozen=True)
class FadingDensity:
    """Beam-wandering fading ensemble.

    ``eta_max`` is the best-case transmissivity, ``weibull_shape`` and
    ``weibull_scale`` (meters) the Weibull parameters of the spot, and
    ``sigma`` (meters) the wandering standard deviation.  ``sigma = 0`` is the
    degenerate, non-fading channel.
    """

    eta_max: float
    weibull_shape: float
    weibull_scale: float
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "eta_max", _eta(self.eta_max))
        for name in ("weibull_shape", "weibull_scale"):
            v = float(getattr(self, name))
            if not (v > 0.0 and math.isfinite(v)):
                raise DomainError(f"{name} must be finite and > 0, got {v}")
            object.__setattr__(self, name, v)
        s = float(self.sigma)
        if not (s >= 0.0 and math.isfinite(s)):
            raise DomainError(f"sigma must be finite and >= 0, got {self.sigma}")
        object.__setattr__(self, "sigma", s)

    @property
    def rate(self) -> float:
        """Coefficient a = r0^2 / (2 sigma^2) of the survival exponent."""
        if self.sigma == 0.0:
            return math.inf
        return self.weibull_scale**2 / (2.0 * self.sigma**2)

    @property
    def power(self) -> float:
        return 2.0 / self.weibull_shape

    def survival(self, x: float) -> float:
        """P(ln(eta/tau) > x)."""
        if x <= 0.0:
            return 1.0
        a = self.rate
        if math.isinf(a):
            return 0.0
        return math.exp(-a * x**self.power)

    def pdf_x(self, x: float) -> float:
        if x <= 0.0:
            return 0.0
        a, p = self.rate, self.power
        return a * p * x ** (p - 1.0) * math.exp(-a * x**p)

    def pdf(self, tau: float) -> float:
        """Raw transmissivity density F_sigma(tau) on (0, eta]."""
        if tau <= 0.0 or tau >= self.eta_max:
            return 0.0
        return self.pdf_x(math.log(self.eta_max / tau)) / tau

    def scale_x(self) -> float:
        """x at which the survival function equals 1/e."""
        return self.rate ** (-1.0 / self.power)

    def with_eta(self, eta: float) -> "FadingDensity":
        return replace(self, eta_max=eta)


def _quad(f, lo, hi, points=None, **kw):
    pts = None
    if points:
        pts = sorted({p for p in points if lo < p < hi})
    val, err, *rest = integrate.quad(
        f, lo, hi, points=pts or None, epsabs=0.0, epsrel=QUAD_EPSREL, limit=400, full_output=1, **kw
    )
    if err > max(QUAD_ACCEPT * abs(val), 1e-14):
        raise QuadratureError(f"quadrature did not converge on [{lo}, {hi}]: estimate {val}, error {err}", err)
    return val, err


def _breakpoints(d: FadingDensity, hi: float):
    xc = d.scale_x()
    pts = [xc * m for m in (1e-6, 1e-3, 0.1, 1.0)] + [1.0, 5.0]
    # keep refining geometrically until the survival shoulder has died out
    x = 3.0 * xc
    while x < hi and d.survival(x / 3.0) > 1e-18:
        pts.append(x)
        x *= 3.0
    return [p for p in pts if 0.0 < p < hi]


def _loss_tail(eta: float, x: float) -> float:
    """Integral of 1 / (e^t - eta) over t in [x, inf)."""
    return -math.log1p(-eta * math.exp(-x)) / eta


def _complement_integral(d: FadingDensity) -> float:
    """K = int_0^inf (1 - S(x)) / (e^x - eta) dx, so that B_F = eta K / ln 2."""
    eta, a, p = d.eta_max, d.rate, d.power
    gap = 1.0 - eta

    def f(x):
        if x <= 0.0:
            return 0.0
        return -math.expm1(-a * x**p) / (math.expm1(x) + gap)

    lo, hi, total = 0.0, 40.0, 0.0
    for _ in range(8):
        val, _ = _quad(f, lo, hi, _breakpoints(d, hi))
        total += val
        tail = _loss_tail(eta, hi)
        if tail <= TAIL_RATIO * total or total == 0.0 and tail < 1e-300:
            break
        lo, hi = hi, hi + 40.0
    # 1 - S is increasing, so (1 - S(hi)) * tail underestimates the remainder by at most S(hi) * tail.
    return total + (1.0 - d.survival(hi)) * tail


def fading_capacity(density: FadingDensity) -> CapacityBound:
    """Ensemble average of the PLOB bound over the wandering density."""
    d = density
    eta = d.eta_max
    if eta == 0.0:
        return CapacityBound(0.0)
    if d.sigma == 0.0:
        return plob(eta)
    return CapacityBound(eta * _complement_integral(d) / LN2)


def delta_factor(density: FadingDensity) -> float:
    """Correction factor Delta(eta, sigma) so that B_F = -Delta log2(1 - eta)."""
    eta = density.eta_max
    if eta in (0.0, 1.0):
        raise DomainError("correction factor is defined for 0 < eta < 1")
    return fading_capacity(density).value / _plob_value(eta)


def thermal_fading_capacity(density: FadingDensity, n_bar) -> CapacityBound:
    """Thermal-loss bound averaged over the part of the ensemble with tau > n_bar.

    For eta < 1 this is evaluated after an integration by parts in x.  Since
    L(n_bar) = 0 the boundary term cancels against the full integral, leaving

        L_F = int_0^xbar (1 - S(x)) tau(x) L'(tau(x)) dx,   xbar = ln(eta / n_bar),

    a bounded, non-negative integrand with no subtraction to lose digits in.
    """
    d = density
    nb = _nbar(n_bar)
    if nb == 0.0:
        return fading_capacity(d)
    eta = d.eta_max
    if nb >= eta:
        return CapacityBound(0.0, BoundKind.TIGHT)
    if d.sigma == 0.0:
        return thermal_loss_bound(eta, nb)
    xbar = math.log(eta) - math.log(nb)  # eta / nb can overflow for subnormal n_bar
    if eta == 1.0:
        return CapacityBound(_thermal_direct_x(d, nb, xbar), BoundKind.TIGHT)

    a, p = d.rate, d.power

    def g(x):
        tau = eta * math.exp(-x)
        if tau <= nb or x <= 0.0:
            return 0.0
        return -math.expm1(-a * x**p) * tau * _thermal_slope(tau, nb)

    # tau L'(tau) decays like x e^-x, but xbar can reach ~700 for tiny n_bar
    pts = _breakpoints(d, xbar) + [10.0 * 2.0**i for i in range(7)]
    val, _ = _quad(g, 0.0, xbar, pts)
    return CapacityBound(max(val, 0.0), BoundKind.TIGHT)


def _thermal_direct_x(d: FadingDensity, nb: float, xbar: float) -> float:
    # Only used at eta = 1, where L(eta) is infinite and the by-parts form breaks.
    def f(x):
        tau = d.eta_max * math.exp(-x)
        if tau <= nb or x <= 0.0:
            return 0.0
        return d.pdf_x(x) * _thermal_value(tau, nb)

    val, _ = _quad(f, 0.0, xbar, _breakpoints(d, xbar))
    return max(val, 0.0)


def thermal_correction_closed_form(density: FadingDensity, n_bar) -> float:
    """Printed closed form of the thermal correction T(eta, n_bar).

    T = P(tau > n_bar) * [n log2 n / (1 - n) + h(n)] - B_F(n), with B_F(n) the
    fading capacity of the same wandering law rescaled to maximum n.
    """
    nb = _nbar(n_bar)
    d = density
    if nb == 0.0 or nb >= d.eta_max:
        return 0.0
    prob = 1.0 - d.survival(math.log(d.eta_max) - math.log(nb))
    bracket = nb * math.log2(nb) / (1.0 - nb) + entropy_h(nb)
    return prob * bracket - fading_capacity(d.with_eta(nb)).value


def thermal_fading_closed_form(density: FadingDensity, n_bar) -> CapacityBound:
    """B_F(eta) - T(eta, n_bar) using the printed closed-form correction.

    This is always at least :func:`thermal_fading_capacity`, i.e. a looser bound.
    """
    nb = _nbar(n_bar)
    if nb == 0.0:
        return fading_capacity(density)
    if nb >= density.eta_max:
        return CapacityBound(0.0, BoundKind.TIGHT)
    bf = fading_capacity(density)
    if bf.infinite:
        return CapacityBound(math.inf, BoundKind.TIGHT)
    val = bf.value - thermal_correction_closed_form(density, nb)
    return CapacityBound(max(val, 0.0), BoundKind.TIGHT)


def thermal_fading_quadrature(density: FadingDensity, n_bar) -> float:
    """Direct integral of F(tau) L(tau, n_bar) over tau in [n_bar, eta].

    An independent evaluation route kept for cross-validation.  The endpoint
    singularity at tau -> eta is handled with an algebraic quadrature weight.
    """
    nb = _nbar(n_bar)
    d = density
    eta = d.eta_max
    if nb >= eta:
        return 0.0
    if nb == 0.0:
        return _density_integral(d, lambda t: _plob_value(t))
    return _density_integral(d, lambda t: _thermal_value(t, nb) if t > nb else 0.0, lower=nb)


def density_normalization(density: FadingDensity) -> float:
    """Raw-density integral of F_sigma over (0, eta]; should be 1."""
    return _density_integral(density, lambda t: 1.0)


def _density_integral(d: FadingDensity, g, lower: float = 0.0) -> float:
    """Integral of F(tau) g(tau) over [lower, eta] in the raw tau coordinate."""
    if d.sigma == 0.0:
        raise DomainError("raw density integral undefined for a degenerate ensemble")
    eta, p = d.eta_max, d.power
    xc = d.scale_x()
    x_lo = math.log(eta) - math.log(lower) if lower > 0.0 else math.inf
    # Survival drops below 1e-18 at x_dead; past it nothing contributes.  The
    # raw coordinate also stops where tau would reach 1e-290.
    x_dead = min((42.0 / d.rate) ** (1.0 / p), math.log(eta) + TAU_FLOOR_LOG, x_lo)
    # Near tau = eta the raw coordinate cannot resolve x below ~1e-3, so the
    # first panel always reaches at least that far.
    x_first = min(max(xc * 1e-4, 1e-3), x_dead)
    edges = {x_first, x_dead}
    edges.update(xc * m for m in (1e-2, 0.1, 0.3, 1.0, 2.0, 4.0))
    x = x_first
    # Each raw panel spans at most a factor e^2 in tau (or 1.5 in x near the peak).
    while x < x_dead:
        x = min(x * 1.5, x + 2.0)
        edges.add(x)
    xs = sorted(e for e in edges if x_first <= e <= x_dead)
    taus = [eta * math.exp(-x) for x in xs]

    # First panel [tau_1, eta]: integrate in v = a x^p, where F(tau) dtau = e^-v dv
    # and the endpoint singularity disappears.
    a = d.rate
    v1 = a * xs[0] ** p
    total, _ = integrate.quad(
        lambda v: math.exp(-v) * g(eta * math.exp(-((v / a) ** (1.0 / p)))),
        0.0, v1, epsabs=0.0, epsrel=1e-10, limit=400,
    )
    for hi, lo in zip(taus[:-1], taus[1:]):
        val, _ = integrate.quad(lambda t: d.pdf(t) * g(t), lo, hi, epsabs=0.0, epsrel=1e-10, limit=400)
        total += val
    # Mass past the last panel, bounded by g at the cutoff.
    if not math.isfinite(x_lo):
        total += d.survival(xs[-1]) * g(taus[-1])
    return total
