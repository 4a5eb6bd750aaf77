import dataclasses
import math
import warnings

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qnetcap.capacity import fiber_transmissivity, plob
from qnetcap.config import get_preset
from qnetcap.errors import DomainError, LineOfSightWarning, WeakTurbulenceViolated, WeakTurbulenceWarning
from qnetcap.optics import (
    R_EARTH,
    AtmosphereModel,
    Trajectory,
    background_photons,
    build_channel,
    diffraction,
    extinction,
    f0,
    fiber_channel,
    ground_satellite_geometry,
    h_theta,
    intersatellite_capacity,
    line_of_sight_limit,
    tangent_chord_limit,
    turbulence,
    wandering_variance,
    weibull_params,
    z_theta,
)

S1 = get_preset("table1-setup1")
T2 = get_preset("table2")


def quiet(fn, *a, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return fn(*a, **kw)


# -- diffraction

def test_diffraction_at_origin():
    d = diffraction(S1.setup, 0.0)
    assert d.w_d == S1.setup.w0
    assert d.eta_d == pytest.approx(1 - math.exp(-2 * 1.0 / 0.16), rel=1e-14)


def test_rayleigh_range_doubles_area():
    s = S1.setup
    assert diffraction(s, s.rayleigh_range).w_d == pytest.approx(math.sqrt(2) * s.w0, rel=1e-14)


def test_far_field_transmissivity():
    d = diffraction(S1.setup, 1e6)
    assert d.far_field is False  # z_R is about 628 km
    d = diffraction(S1.setup, 1e7)
    assert d.far_field
    assert d.eta_d == pytest.approx(d.eta_d_far, rel=0.03)
    d = diffraction(S1.setup, 3e7)
    assert d.eta_d == pytest.approx(d.eta_d_far, rel=0.01)


def test_focused_beam_narrows_before_focus():
    s = dataclasses.replace(S1.setup, curvature=1e6)
    assert diffraction(s, 5e5).w_d < diffraction(S1.setup, 5e5).w_d


# -- extinction

def test_ground_extinction_closed_form():
    atmo = AtmosphereModel()
    eta = extinction(atmo, Trajectory.ground(1000.0, 30.0))
    assert eta == pytest.approx(math.exp(-5e-6 * math.exp(-30 / 6600) * 1000), rel=1e-14)
    assert eta == pytest.approx(0.99503, abs=1e-5)


def test_intersatellite_has_no_extinction():
    assert extinction(AtmosphereModel(), Trajectory.intersatellite(1e6)) == 1.0


def test_zenith_uplink_extinction_limit():
    atmo = AtmosphereModel()
    limit = math.exp(-atmo.alpha0 * atmo.h_tilde)
    # altitude profile decays on 6.6 km; at 1000 km the residual is negligible
    assert extinction(atmo, Trajectory.uplink(1e6)) == pytest.approx(limit, rel=1e-9)
    assert extinction(atmo, Trajectory.uplink(1e4)) > limit
    assert extinction(atmo, Trajectory.downlink(1e6)) == pytest.approx(limit, rel=1e-9)


# -- turbulence

def test_no_turbulence_without_cn2():
    atmo = AtmosphereModel(cn2_constant=0.0)
    t = turbulence(T2.setup, atmo, Trajectory.ground(500.0))
    assert math.isinf(t.rho0)
    assert t.sigma_t2 == 0.0
    assert t.w_st == pytest.approx(diffraction(T2.setup, 500.0).w_d, rel=1e-14)


def test_rytov_boundary_near_window():
    t = quiet(turbulence, T2.setup, T2.atmosphere, Trajectory.ground(1066.0, 30.0))
    assert 0.8 <= t.sigma_ry2 <= 1.2


def test_downlink_turbulence_negligible():
    up = quiet(turbulence, S1.setup, S1.atmosphere, Trajectory.uplink(5e5), strict=False)
    down = quiet(turbulence, S1.setup, S1.atmosphere, Trajectory.downlink(5e5), strict=False)
    assert down.sigma_t2 < 1e-3 * up.sigma_t2


def test_yura_grading():
    with pytest.warns(WeakTurbulenceWarning):
        turbulence(T2.setup, T2.atmosphere, Trajectory.ground(1000.0, 30.0))
    tight = dataclasses.replace(T2.setup, w0=0.002)
    with pytest.raises(WeakTurbulenceViolated):
        quiet(turbulence, tight, T2.atmosphere, Trajectory.ground(1000.0, 30.0))
    with pytest.warns(WeakTurbulenceWarning):
        turbulence(tight, T2.atmosphere, Trajectory.ground(1000.0, 30.0), strict=False)


def test_turbulence_rejects_space_path():
    with pytest.raises(DomainError):
        turbulence(S1.setup, S1.atmosphere, Trajectory.intersatellite(1e5))


def test_zenith_window_enforced():
    with pytest.raises(DomainError):
        Trajectory.uplink(5e5, 1.2)


# -- wandering

def test_wandering_variance_by_kind():
    s = S1.setup
    assert wandering_variance(s, Trajectory.intersatellite(1e6)) == pytest.approx(1.0, rel=1e-14)
    down = Trajectory.downlink(5e5)
    assert wandering_variance(s, down) == pytest.approx((1e-6 * down.z) ** 2, rel=1e-14)
    up = Trajectory.uplink(5e5)
    t = quiet(turbulence, s, S1.atmosphere, up, strict=False)
    assert wandering_variance(s, up, t) == t.sigma_t2
    with pytest.raises(DomainError):
        wandering_variance(s, up)


# -- Weibull parameters

@pytest.mark.parametrize("x", [1e-6, 1e-5, 1e-3, 0.5, 3.0])
def test_f0_against_bessel(x):
    with mp.workdps(40):
        ref = 1 / (1 - mp.exp(-2 * mp.mpf(x)) * mp.besseli(0, 2 * mp.mpf(x)))
    assert f0(x) == pytest.approx(float(ref), rel=1e-8)


def test_f0_leading_behaviour():
    x = 1e-6
    assert f0(x) == pytest.approx(1 / (2 * x) + 0.75, rel=1e-8)


def test_weibull_params_positive_on_ground_grid():
    for z in (10.0, 50.0, 200.0, 500.0, 1066.0):
        ch = quiet(build_channel, T2.setup, T2.atmosphere, Trajectory.ground(z, 30.0), T2.condition)
        assert ch.density.weibull_shape > 0 and ch.density.weibull_scale > 0


def test_weibull_domain():
    with pytest.raises(DomainError):
        weibull_params(0.0, 1e-3, 0.05)
    with pytest.raises(DomainError):
        # spot far too small for the stated far-field ratio
        weibull_params(1e-3, 0.5, 0.05)


# -- background noise

def test_ground_background_arithmetic():
    s = T2.setup
    assert s.collection_factor == pytest.approx(2.5e-21, rel=1e-12)
    n_b = 1.9e18 * s.collection_factor
    assert n_b == pytest.approx(4.75e-3, rel=1e-12)
    got = background_photons(s, T2.atmosphere, Trajectory.ground(500.0), "cloudy-day")
    assert got == pytest.approx(s.eta_eff * n_b, rel=1e-12)
    untrusted = dataclasses.replace(s, n_ex_trusted=False)
    assert background_photons(untrusted, T2.atmosphere, Trajectory.ground(500.0), "cloudy-day") == pytest.approx(
        s.eta_eff * n_b + 0.05, rel=1e-12)


def test_uplink_background_arithmetic():
    s = S1.setup
    n_b = 0.3 * 4.61e18 * (10e-9 * 1e-4 * 1e-10 * 1.0)
    got = background_photons(s, S1.atmosphere, Trajectory.uplink(5e5), "clear-day")
    assert got == pytest.approx(s.eta_eff * n_b, rel=1e-12)


def test_intersatellite_background_is_excess_only():
    s = dataclasses.replace(S1.setup, n_ex=0.01, n_ex_trusted=False)
    assert background_photons(s, S1.atmosphere, Trajectory.intersatellite(1e6), "clear-day") == 0.01
    assert background_photons(S1.setup, S1.atmosphere, Trajectory.intersatellite(1e6), "clear-day") == 0.0


# -- geometry

def test_zenith_geometry_is_trivial():
    for h in (0.0, 30.0, 5e5, 1.5e6):
        assert z_theta(h, 0.0) == pytest.approx(h, rel=1e-15, abs=1e-9)


def test_slant_distance_closed_form():
    h, th = 5.3e5, 1.0
    with mp.workdps(40):
        R, c = mp.mpf(R_EARTH), mp.cos(th)
        ref = mp.sqrt((R * c) ** 2 + h * h + 2 * h * R) - R * c
    g = ground_satellite_geometry(h, th)
    assert g.z_slant == pytest.approx(float(ref), rel=1e-13)


@settings(max_examples=200)
@given(st.floats(0.0, 3e6), st.floats(-1.5, 1.5))
def test_geometry_round_trip(h, theta):
    z = z_theta(h, theta)
    assert h_theta(z, theta) == pytest.approx(h, rel=1e-6, abs=1e-6)


def test_downlink_geometry_direction():
    g = ground_satellite_geometry(5e5, 0.3, "downlink")
    assert g.h_of_z(0.0) == pytest.approx(5e5, rel=1e-12)
    assert g.h_of_z(g.z_slant) == pytest.approx(0.0, abs=1e-6)
    with pytest.raises(DomainError):
        ground_satellite_geometry(5e5, 0.3, "sideways")


def test_line_of_sight_values():
    assert line_of_sight_limit(1.5e6, 1.5e6) == pytest.approx(5428e3, abs=1e3)
    assert line_of_sight_limit(0.0, 0.0) == 0.0
    assert line_of_sight_limit(1.5e6, 0.0) == pytest.approx(0.5 * line_of_sight_limit(1.5e6, 1.5e6), rel=1e-15)
    assert line_of_sight_limit(1.5e6, 0.0) == pytest.approx(2714e3, abs=1e3)
    # the grazing chord is longer than the working limit
    assert tangent_chord_limit(1.5e6, 1.5e6) > line_of_sight_limit(1.5e6, 1.5e6)


@given(st.floats(0.0, 5e6), st.floats(0.0, 5e6), st.floats(1.0, 1e6))
def test_line_of_sight_symmetric_and_monotone(h1, h2, dh):
    assert line_of_sight_limit(h1, h2) == line_of_sight_limit(h2, h1)
    assert line_of_sight_limit(h1 + dh, h2) > line_of_sight_limit(h1, h2)


# -- intersatellite capacity

def test_intersatellite_far_field_form():
    s = dataclasses.replace(S1.setup, pointing_error=0.0)
    z = 5e7
    wd = diffraction(s, z).w_d
    expected = s.eta_eff * 2 * s.a_R**2 / (wd**2 * math.log(2))
    assert intersatellite_capacity(s, z).value == pytest.approx(expected, rel=1e-3)


def test_intersatellite_pointing_limit():
    s0 = dataclasses.replace(S1.setup, pointing_error=0.0)
    s1 = dataclasses.replace(S1.setup, pointing_error=1e-12)
    for z in (1e5, 1e6, 5e6):
        assert intersatellite_capacity(s1, z).value == pytest.approx(intersatellite_capacity(s0, z).value, rel=1e-6)


def test_pointing_error_costs_capacity():
    s0 = dataclasses.replace(S1.setup, pointing_error=0.0)
    c = intersatellite_capacity(S1.setup, 2e6).value
    assert 0.0 < c < intersatellite_capacity(s0, 2e6).value


def test_line_of_sight_warning():
    with pytest.warns(LineOfSightWarning):
        intersatellite_capacity(S1.setup, 6e6, 1.5e6, 1.5e6)
    with pytest.warns(LineOfSightWarning):
        build_channel(S1.setup, S1.atmosphere, Trajectory.intersatellite(6e6, 1.5e6, 1.5e6))


# -- composed channels

def test_fiber_bypasses_optics():
    ch = fiber_channel(25e3, 0.02)
    assert ch.eta == fiber_transmissivity(25.0, 0.02).value
    assert ch.density is None and ch.n_bar == 0.0
    assert ch.capacity() == plob(ch.eta)


def test_ground_capacity_decays():
    near = quiet(build_channel, T2.setup, T2.atmosphere, Trajectory.ground(100.0), T2.condition)
    far = quiet(build_channel, T2.setup, T2.atmosphere, Trajectory.ground(1000.0), T2.condition)
    assert near.capacity() > far.capacity()


def test_built_channel_invariants():
    cases = [
        (T2, Trajectory.ground(300.0)),
        (S1, Trajectory.uplink(5e5, 0.4)),
        (S1, Trajectory.downlink(5e5, 0.4)),
        (S1, Trajectory.intersatellite(2e6)),
    ]
    for preset, traj in cases:
        ch = quiet(build_channel, preset.setup, preset.atmosphere, traj, preset.condition, strict=False)
        d = ch.diagnostics
        assert ch.eta <= preset.setup.eta_eff
        assert ch.eta == pytest.approx(preset.setup.eta_eff * d["eta_atm"] * d["eta_st"], rel=1e-14)
        for k in ("eta_atm", "eta_st", "eta_d"):
            assert 0.0 <= d[k] <= 1.0
        assert d["w_d"] <= d["w_st"] + 1e-15
        assert ch.mean_transmissivity() <= ch.eta


@pytest.mark.parametrize("h", [3e5, 1e6])
@pytest.mark.parametrize("theta", [0.0, 0.7])
def test_downlink_beats_uplink(h, theta):
    args = (S1.setup, S1.atmosphere)
    down = quiet(build_channel, *args, Trajectory.downlink(h, theta), S1.condition, strict=False)
    up = quiet(build_channel, *args, Trajectory.uplink(h, theta), S1.condition, strict=False)
    assert down.capacity() >= up.capacity()
