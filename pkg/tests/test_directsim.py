import numpy as np
import pytest

from pwstab import directsim as ds
from pwstab._fourier import shift
from pwstab.errors import BlowUp, PreconditionError, UnsupportedFamily
from pwstab.models import Model

from conftest import HARMONIC


def test_single_mode_follows_dispersion_relation():
    x = 2 * np.pi * np.arange(64) / 64
    st = ds.SimState.from_values(HARMONIC, np.cos(x), 2 * np.pi)
    traj = ds.simulate(st, 3.7, 0.01)
    assert np.max(np.abs(traj.final.v - np.cos(x + 3.7))) < 1e-10


def test_travelling_wave_and_conservation(cubic_profile):
    prof = cubic_profile
    c = prof.params.c
    traj = ds.simulate(prof, prof.Xi / abs(c), 2e-3, output_every=0.5)
    ref = prof.sample(traj.final.x - c * traj.final.t)[0]
    err = np.sqrt(np.sum((traj.final.v - ref) ** 2) * prof.Xi / traj.final.modes)
    assert err < 1e-6
    assert np.max(np.abs(traj.dM)) < 1e-12
    assert np.max(np.abs(traj.dQ)) < 1e-10
    assert np.max(np.abs(traj.dH)) < 1e-8
    assert np.max(traj.dist_to_orbit) < 1e-6


def test_step_refinement_converges(cubic_profile):
    # perturbed wave so the solution is not a pure translation
    x0 = ds.SimState.from_profile(cubic_profile, 128)
    v0 = x0.v * (1 + 0.2 * np.cos(2 * np.pi * x0.x / x0.length))
    st = ds.SimState.from_values(cubic_profile.model, v0, x0.length)
    finals = [ds.simulate(st, 2.0, dt).final.v for dt in (0.01, 0.005, 0.0025)]
    e1 = np.max(np.abs(finals[0] - finals[1]))
    e2 = np.max(np.abs(finals[1] - finals[2]))
    assert e2 < 1e-8
    assert np.log2(e1 / e2) > 3.0


def test_translation_equivariance(cubic_profile):
    st = ds.SimState.from_profile(cubic_profile, 128)
    v = st.v * (1 + 0.1 * np.sin(2 * np.pi * st.x / st.length))
    s = 0.37
    a = ds.simulate(ds.SimState.from_values(st.model, v, st.length), 1.0, 0.01).final.v
    b = ds.simulate(ds.SimState.from_values(st.model, shift(v, s, st.length), st.length), 1.0, 0.01).final.v
    assert np.max(np.abs(shift(a, s, st.length) - b)) < 1e-10


def test_orbital_distance_ignores_phase(cubic_profile):
    st = ds.SimState.from_profile(cubic_profile, 256)
    ref = st.v
    moved = shift(ref, 1.234, st.length)
    d, s = ds.orbital_distance(moved, ref, st.length, cubic_profile.Xi)
    assert d < 1e-10
    assert s == pytest.approx(1.234, abs=1e-6)


def test_subharmonic_domain(cubic_profile):
    traj = ds.simulate(cubic_profile, 1.0, 5e-3, domain_multiplier=2, output_every=0.5)
    assert traj.final.length == pytest.approx(2 * cubic_profile.Xi)
    assert np.max(traj.dist_to_orbit) < 1e-8


def test_harmonic_growth_experiment_reports_no_growth(harmonic_profile):
    res = ds.growth_rate_experiment(harmonic_profile, 1e-5, t_max=5.0, dt=1e-2)
    assert not res.growth_detected
    assert res.rate == 0.0


def test_perturbation_too_large(harmonic_profile):
    with pytest.raises(PreconditionError):
        ds.growth_rate_experiment(harmonic_profile, 1e-2, t_max=1.0)


def test_growth_experiment_rejects_bad_floquet_exponent(harmonic_profile):
    with pytest.raises(PreconditionError):
        ds.growth_rate_experiment(harmonic_profile, 1e-5, nu_select=1.0, t_max=1.0)


def test_only_constant_kappa_kdv():
    with pytest.raises(UnsupportedFamily):
        ds.SimState.from_values(Model("EKL", (0.0,)), np.zeros(32), 1.0)
    with pytest.raises(PreconditionError):
        ds.SimState.from_values(Model("KDV", (0.0,), (1.0, 0.5)), np.zeros(32), 1.0)


def test_blow_up_detected():
    # large data for a quintic flux with a huge step
    m = Model("KDV", (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 5.0))
    x = 2 * np.pi * np.arange(32) / 32
    st = ds.SimState.from_values(m, 3 * np.cos(x), 2 * np.pi)
    with pytest.warns(ds.CFLWarning), pytest.raises(BlowUp):
        ds.simulate(st, 50.0, 0.5)


def test_bad_step():
    x = 2 * np.pi * np.arange(32) / 32
    with pytest.raises(PreconditionError):
        ds.simulate(ds.SimState.from_values(HARMONIC, np.cos(x), 2 * np.pi), 1.0, 0.0)
