"""Radial ODE operations: exact-solution tracking, envelope and barrier
checks, and the power-law supersolution radius against a root-finding oracle."""

import math

import numpy as np
import pytest
from scipy.optimize import brentq

from singlab.radial import (
    RadialTrajectory,
    eikonal_solution,
    fit_blowup_exponent,
    integrate,
    ko_check,
    osserman_check,
    osserman_min_lambda,
    supersolution_radius,
)
from singlab.regimes import ParameterDomainError, Params


# ---------------------------------------------------------------------------
# integrate
# ---------------------------------------------------------------------------


def test_integrate_validation():
    P = Params(3, 2.0, 1.5, 1.0)
    with pytest.raises(ParameterDomainError):
        integrate(P, 1.0, 1.0, 0.0, 0.5)  # r1 < r0
    with pytest.raises(ParameterDomainError):
        integrate(P, 0.0, 1.0, 0.0, 2.0)
    with pytest.raises(ParameterDomainError):
        integrate(P, 1.0, 1.0, 0.0, 2.0, tol=0.0)


def test_integrate_tracks_exact_separable_solution():
    # u = 2 r^(-2) solves the absorption-only equation for N = 3, p = 2
    P = Params(3, 2.0, 4.0 / 3.0, 0.0)
    traj = integrate(P, 1.0, 2.0, -4.0, 10.0, tol=1e-12)
    assert not traj.diverged
    exact = 2.0 * traj.r**-2.0
    rel = np.abs(traj.u - exact) / exact
    assert float(rel.max()) <= 1e-6


def test_integrate_flags_divergence():
    P = Params(3, 3.0, 1.5, 0.0)
    traj = integrate(P, 1.0, 5.0, 5.0, 10.0)
    assert traj.diverged
    # the blow-up is reached strictly before the requested endpoint
    assert traj.r[-1] < 10.0
    assert float(traj.u.max()) > 1e7


def test_scaling_equivariance_on_critical_line():
    # on q = 2p/(p+1) the map u -> ell^alpha u(ell r) preserves the equation
    P = Params(3, 2.0, 4.0 / 3.0, 1.0)
    ell, alpha = 2.0, 2.0
    a = integrate(P, 1.0, 0.3, -0.1, 3.0, tol=1e-12)
    b = integrate(P, 0.5, ell**alpha * 0.3, ell ** (alpha + 1) * -0.1, 1.5, tol=1e-12)
    assert not a.diverged and not b.diverged
    assert math.isclose(a.r[-1], 3.0) and math.isclose(b.r[-1], 1.5)
    assert abs(b.u[-1] - ell**alpha * a.u[-1]) <= 1e-8 * abs(a.u[-1])


# ---------------------------------------------------------------------------
# envelope check
# ---------------------------------------------------------------------------


def test_ko_check_finite_and_tolerance_stable():
    P = Params(3, 2.0, 1.6, 1.0)
    t1 = integrate(P, 0.1, 5.0, -10.0, 1.0, tol=1e-10)
    t2 = integrate(P, 0.1, 5.0, -10.0, 1.0, tol=5e-11)
    c1, c2 = ko_check(t1), ko_check(t2)
    assert math.isfinite(c1) and c1 > 0
    assert abs(c1 - c2) <= 1e-6 * abs(c1)


def test_ko_check_domain():
    traj = integrate(Params(3, 2.0, 1.5, 0.0), 1.0, 1.0, 0.0, 2.0)
    with pytest.raises(ParameterDomainError):
        ko_check(traj)  # M = 0
    traj2 = integrate(Params(3, 1.5, 1.8, 1.0), 1.0, 1.0, 0.0, 2.0)
    with pytest.raises(ParameterDomainError):
        ko_check(traj2)  # q >= p


# ---------------------------------------------------------------------------
# barrier sweep
# ---------------------------------------------------------------------------


def test_osserman_admissible_exponent():
    P = Params(3, 3.0, 1.5, 1.0)
    lam = osserman_min_lambda(P, 1.0, 1.0)
    assert lam is not None
    assert abs(lam - 3.662356) <= 1e-4
    # the returned lambda certifies; slightly below it must not
    assert osserman_check(P, 1.0, 1.0, lam) >= 0.0
    assert osserman_check(P, 1.0, 1.0, 0.99 * lam) < 0.0


def test_osserman_inadmissible_exponent():
    # below the admissible blow-up rate no amplitude certifies the barrier
    P = Params(3, 3.0, 1.5, 1.0)
    assert osserman_min_lambda(P, 1.0, 0.5) is None


def test_osserman_check_validation():
    P = Params(3, 3.0, 1.5, 1.0)
    with pytest.raises(ParameterDomainError):
        osserman_check(P, -1.0, 1.0, 1.0)
    with pytest.raises(ParameterDomainError):
        osserman_check(P, 1.0, 1.0, 1.0, n=4)


# ---------------------------------------------------------------------------
# power-law supersolution radius vs root-finding oracle
# ---------------------------------------------------------------------------


def test_supersolution_radius_matches_brentq():
    P = Params(2, 2.0, 1.6, 1.0)
    n_amp = 1024.0
    got = supersolution_radius(P, n_amp)
    assert got is not None

    p, q, M, N = P.p, P.q, P.M, P.N
    gamma = q / (p - q)

    def F(r):
        return (
            n_amp ** (q - 1.0)
            * (n_amp ** (p - q) - gamma**q * M)
            * r ** (2.0 - (p - 1.0) * gamma)
            - gamma * (gamma + 2.0 - N)
        )

    want = brentq(F, 1e-12, 1e12, xtol=1e-300, rtol=1e-14)
    assert abs(got - want) <= 1e-10 * want
    # larger amplitude must enlarge the validity radius (exponent is negative)
    bigger = supersolution_radius(P, 10.0 * n_amp)
    assert bigger > got


def test_supersolution_radius_small_amplitude_and_domain():
    P = Params(2, 2.0, 1.6, 1.0)
    gamma = P.q / (P.p - P.q)
    # amplitude below the gradient-balance floor: no validity radius
    assert supersolution_radius(P, 0.5 * (gamma**P.q * P.M) ** (1.0 / (P.p - P.q))) is None
    with pytest.raises(ParameterDomainError):
        supersolution_radius(Params(2, 2.0, 1.25, 1.0), 10.0)  # q below critical
    with pytest.raises(ParameterDomainError):
        supersolution_radius(Params(2, 2.0, 1.6, 0.0), 10.0)  # M = 0


# ---------------------------------------------------------------------------
# blow-up exponent fit and the eikonal power law
# ---------------------------------------------------------------------------


def test_fit_recovers_power_law_exponent():
    P = Params(2, 2.0, 1.6, 1.0)
    r = np.geomspace(0.01, 1.0, 200)
    u, du = eikonal_solution(P, r)
    traj = RadialTrajectory(r=r, u=u, du=du, params=P)
    gamma = P.q / (P.p - P.q)
    assert abs(fit_blowup_exponent(traj, (0.01, 1.0)) + gamma) <= 1e-12


def test_fit_validation():
    P = Params(2, 2.0, 1.6, 1.0)
    r = np.geomspace(0.01, 1.0, 200)
    u, du = eikonal_solution(P, r)
    traj = RadialTrajectory(r=r, u=u, du=du, params=P)
    with pytest.raises(ParameterDomainError):
        fit_blowup_exponent(traj, (0.9, 1.0))  # fewer than 8 samples
    bad = RadialTrajectory(r=r, u=u - u.max(), du=du, params=P)
    with pytest.raises(ValueError):
        fit_blowup_exponent(bad, (0.01, 1.0))


def test_eikonal_balance_identity():
    rng = np.random.default_rng(11)
    r = np.geomspace(1e-3, 1e3, 50)
    for _ in range(20):
        p = rng.uniform(1.5, 6.0)
        q = rng.uniform(1.0 + 1e-3, min(2.0, p) - 1e-3)
        M = rng.uniform(0.1, 10.0)
        P = Params(3, float(p), float(q), float(M))
        u, du = eikonal_solution(P, r)
        res = np.abs(u**p - M * np.abs(du) ** q)
        assert float((res / u**p).max()) <= 1e-12


def test_eikonal_domain():
    with pytest.raises(ParameterDomainError):
        eikonal_solution(Params(3, 1.5, 1.8, 1.0), np.array([1.0]))  # q >= p
    with pytest.raises(ParameterDomainError):
        eikonal_solution(Params(3, 2.0, 1.5, 0.0), np.array([1.0]))  # M = 0
