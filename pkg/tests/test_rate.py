import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fockstab import units
from fockstab.numerics import DomainError
from fockstab.rate import (RateModel, build_rate_matrix, decay_time,
                           evolve_populations, stabilization_rate,
                           steady_fidelity, steady_populations)
from helpers import birth_death_rhs, rk4_trajectory

KAPPA_C = 3.1


def comb_rates(tones):
    """Pump rates {level: lambda_khz} for a list of (level, omega, j) triples."""
    return {i: stabilization_rate(om, j, 2400.0) for i, om, j in tones}


TONES = {
    1: [(0, 86.0, 400.0)],
    2: [(0, 86.0, 400.0), (1, 86.0, 380.0)],
    3: [(0, 86.0, 330.0), (1, 86.0, 341.0), (2, 87.0, 356.0)],
}


# ------------------------------------------------------- cascade bottleneck

def test_pump_rate_closed_form():
    lam = stabilization_rate(86.0, 400.0, 2400.0)
    assert lam == pytest.approx(1.0 / (1 / 86.0 + 1 / 400.0 + 1 / 2400.0),
                                rel=1e-15)
    assert lam < min(86.0, 400.0, 2400.0)      # harmonic sum below every leg
    for bad in [(0.0, 1.0, 1.0), (1.0, -2.0, 1.0), (1.0, 1.0, 0.0)]:
        with pytest.raises(DomainError):
            stabilization_rate(*bad)


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3),
       st.floats(1e-2, 1e2))
def test_pump_rate_unit_covariance(om, j, kr, scale):
    # quoting all inputs in different units rescales the output identically
    assert stabilization_rate(scale * om, scale * j, scale * kr) \
        == pytest.approx(scale * stabilization_rate(om, j, kr), rel=1e-12)


# ---------------------------------------------------------------- generator

@given(st.lists(st.floats(0.0, 500.0), min_size=1, max_size=6))
def test_generator_columns_sum_to_zero(lams):
    dim = len(lams) + 1
    model = build_rate_matrix(lams + [0.0], KAPPA_C, dim)
    assert np.abs(model.gamma.sum(axis=0)).max() < 1e-12


def test_generator_mapping_equals_sequence():
    a = build_rate_matrix({0: 68.0, 1: 67.0}, KAPPA_C, 4)
    b = build_rate_matrix([68.0, 67.0, 0.0, 0.0], KAPPA_C, 4)
    assert np.array_equal(a.gamma, b.gamma)
    assert a.lambdas_khz == b.lambdas_khz


def test_generator_rejects_bad_input():
    with pytest.raises(DomainError):
        build_rate_matrix([68.0], KAPPA_C, 1)
    with pytest.raises(DomainError):
        build_rate_matrix([68.0, 67.0], 0.0, 3)
    with pytest.raises(DomainError):
        build_rate_matrix([68.0, -1.0], KAPPA_C, 3)
    with pytest.raises(DomainError, match="top truncation level"):
        build_rate_matrix([68.0, 67.0], KAPPA_C, 2)
    with pytest.raises(DomainError):
        build_rate_matrix({5: 68.0}, KAPPA_C, 3)
    with pytest.raises(DomainError):
        build_rate_matrix([1.0, 2.0, 3.0, 0.0], KAPPA_C, 3)


def test_generator_entries_are_angular():
    model = build_rate_matrix([68.0, 0.0], KAPPA_C, 2)
    assert model.gamma[1, 0] == pytest.approx(units.khz(68.0), rel=1e-15)
    assert model.gamma[0, 1] == pytest.approx(units.khz(KAPPA_C), rel=1e-15)


# ---------------------------------------------------------------- evolution

def test_evolution_matches_independent_rk4():
    lams = comb_rates(TONES[2])
    model = build_rate_matrix(lams, KAPPA_C, 4)
    times = np.arange(0.0, 301.0, 1.0)
    p0 = np.zeros(4)
    p0[0] = 1.0

    lam_ang = np.zeros(4)
    for i, v in lams.items():
        lam_ang[i] = units.khz(v)
    oracle = rk4_trajectory(birth_death_rhs(lam_ang, units.khz(KAPPA_C)),
                            p0, times, dt=0.01)

    traj = evolve_populations(model, p0, times)
    assert traj.method == "eigen"
    assert np.abs(traj.populations - oracle).max() < 1e-8
    assert np.abs(traj.populations.sum(axis=1) - 1.0).max() < 1e-12


def test_evolution_input_validation():
    model = build_rate_matrix([68.0, 0.0], KAPPA_C, 2)
    ok = np.array([1.0, 0.0])
    with pytest.raises(DomainError):
        evolve_populations(model, [1.0, 0.0, 0.0], [0.0, 1.0])
    with pytest.raises(DomainError):
        evolve_populations(model, [0.7, 0.7], [0.0, 1.0])
    with pytest.raises(DomainError):
        evolve_populations(model, [1.2, -0.2], [0.0, 1.0])
    with pytest.raises(DomainError):
        evolve_populations(model, ok, [1.0, 1.0])
    with pytest.raises(DomainError):
        evolve_populations(model, ok, [-1.0, 0.0])
    with pytest.raises(DomainError):
        evolve_populations(model, ok, [])


def test_defective_generator_falls_back_to_expm():
    # hand-built Jordan block: eigenbasis is singular, eigen route must bail.
    # dP0/dt = -P0, dP1/dt = P0 - P1  =>  P0 = e^-t, P1 = t e^-t
    gamma = np.array([[-1.0, 0.0], [1.0, -1.0]])
    model = RateModel((0.0, 0.0), KAPPA_C, 2, gamma)
    times = np.array([0.0, 0.5, 1.5, 3.0])
    traj = evolve_populations(model, [1.0, 0.0], times)
    assert traj.method == "expm"
    assert np.abs(traj.populations[:, 0] - np.exp(-times)).max() < 1e-12
    assert np.abs(traj.populations[:, 1] - times * np.exp(-times)).max() < 1e-12


# ------------------------------------------------------------- steady state

def test_steady_matches_null_vector_route():
    model = build_rate_matrix(comb_rates(TONES[3]), KAPPA_C, 5)
    p = steady_populations(model)
    assert p.sum() == pytest.approx(1.0, abs=1e-14)
    # independent route: kernel of the generator
    w, v = np.linalg.eig(model.gamma)
    k = int(np.argmin(np.abs(w)))
    null = np.real(v[:, k])
    null /= null.sum()
    assert np.abs(p - null).max() < 1e-10
    # link-by-link detailed balance
    lam = np.array(model.lambdas_khz)
    up = lam[:-1] * p[:-1]
    down = np.arange(1, 5) * KAPPA_C * p[1:]
    assert np.abs(up - down).max() < 1e-12


def test_steady_requires_gap_free_pumping():
    with pytest.raises(DomainError, match="pump gap"):
        steady_populations(build_rate_matrix({1: 68.0}, KAPPA_C, 3))


def test_steady_fidelity_guards():
    model = build_rate_matrix(comb_rates(TONES[2]), KAPPA_C, 4)
    f = steady_fidelity(model, 2)
    assert 0.0 < f < 1.0
    p = steady_populations(model)
    assert f == pytest.approx(p[2], rel=1e-15)
    with pytest.raises(DomainError):
        steady_fidelity(model, 0)
    with pytest.raises(DomainError):
        steady_fidelity(model, 4)
    with pytest.raises(DomainError, match="does not reach"):
        steady_fidelity(model, 3)


# --------------------------------------------------------------- decay time

def test_bare_decay_time_is_exact():
    model = build_rate_matrix([], KAPPA_C, 5)
    kap = units.khz(KAPPA_C)
    for n in (1, 2, 3, 4):
        # no pump: P_n(t) = exp(-n kappa t) exactly
        assert decay_time(model, n) == pytest.approx(1.0 / (n * kap), rel=1e-9)


def test_protected_decay_time_matches_quadratic_formula():
    lam1 = stabilization_rate(86.0, 380.0, 2400.0)
    model = build_rate_matrix({1: lam1}, KAPPA_C, 3)
    # level 0 only absorbs, so the decaying pair {1,2} closes on itself:
    #   d/dt [P1, P2] = [[-(lam+kap), 2 kap], [lam, -2 kap]] [P1, P2]
    # and the slow root of eta^2 + (lam + 3 kap) eta + 2 kap^2 = 0 rules
    # the late-time lifetime.
    lam = units.khz(lam1)
    kap = units.khz(KAPPA_C)
    b = lam + 3 * kap
    eta_slow = (-b + math.sqrt(b * b - 8 * kap * kap)) / 2.0
    assert decay_time(model, 2) == pytest.approx(-1.0 / eta_slow, rel=1e-10)


@given(st.floats(1.0, 500.0))
def test_refill_tone_never_shortens_lifetime(lam1):
    bare = build_rate_matrix([], KAPPA_C, 3)
    fed = build_rate_matrix({1: lam1}, KAPPA_C, 3)
    assert decay_time(fed, 2) >= decay_time(bare, 2) - 1e-9


def test_decay_time_bounds():
    model = build_rate_matrix([], KAPPA_C, 3)
    with pytest.raises(DomainError):
        decay_time(model, 0)
    with pytest.raises(DomainError):
        decay_time(model, 3)
