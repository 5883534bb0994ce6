"""Separable-profile boundary value problems on the half-sphere.

On the critical line q = 2p/(p+1) the master equation admits separable
solutions u = r^(-alpha) * omega(theta); the axisymmetric profile solves

    -(sin t)^(2-N) d/dt((sin t)^(N-2) w') + alpha(N-2-alpha) w + |w|^(p-1)w
        - M*(alpha^2 w^2 + w'^2)^(p/(p+1)) = 0

with w = 0 on the equatorial boundary.  This module shoots for the minimal
positive profile, solves the M = 0 reduction (the psi profile), and brackets
the existence threshold in M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .regimes import Params, ParameterDomainError, exponents

__all__ = [
    "ProfileProblem",
    "ProfileSolution",
    "ShotTrajectory",
    "ThresholdScanError",
    "shoot",
    "end_value_map",
    "solve_min_profile",
    "solve_psi",
    "existence_threshold",
    "residual",
    "HALF_SPHERE",
    "PSI",
    "WHOLE_SPHERE",
]

HALF_SPHERE = "half_sphere_dirichlet"
PSI = "absorption_only_psi"
WHOLE_SPHERE = "whole_sphere_constant"

_POLE_OFFSET = 1e-6
_SCAN_POINTS = 512
_SCAN_LO, _SCAN_HI = 1e-4, 1e4
# Uniform residual/collocation grid node count.  Sized so both the truncation
# of the |w|^(p-1)w boundary layer (divergent higher derivatives at the
# Dirichlet zero when p < 2) and the eps/h rounding floor stay below the
# 1e-8 scaled-residual target.
_GRID_NODES = 2**18 + 1


class ThresholdScanError(RuntimeError):
    """Raised when the existence indicator is not monotone on the pre-scan."""

    def __init__(self, msg, scan):
        super().__init__(msg)
        self.scan = scan


@dataclass(frozen=True)
class ProfileProblem:
    params: Params
    variant: str = HALF_SPHERE
    theta_end: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.variant not in (HALF_SPHERE, PSI, WHOLE_SPHERE):
            raise ParameterDomainError(f"unknown variant {self.variant!r}")
        N, p, q = self.params.N, self.params.p, self.params.q
        if self.variant == HALF_SPHERE:
            q_star = 2.0 * p / (p + 1.0)
            if abs(q - q_star) > 1e-12:
                raise ParameterDomainError(
                    f"half-sphere profile requires q = 2p/(p+1) = {q_star}, got q={q}"
                )
        if self.variant == PSI:
            p_crit = (N + 1.0) / (N - 1.0)
            if not p < p_crit - 1e-12:
                raise ParameterDomainError(
                    f"psi profile requires p < (N+1)/(N-1) = {p_crit}, got p={p}"
                )
        if self.theta_end is None:
            end = math.pi if (N == 2 or self.variant == WHOLE_SPHERE) else math.pi / 2
            object.__setattr__(self, "theta_end", end)

    # ODE coefficients: c0 = alpha*(N-2-alpha), M-term only for non-psi
    def _coeffs(self):
        N, p, M = self.params.N, self.params.p, self.params.M
        alpha = 2.0 / (p - 1.0)
        c0 = alpha * (N - 2.0 - alpha)
        M_eff = 0.0 if self.variant == PSI else M
        return alpha, c0, M_eff, p / (p + 1.0)

    def _startup(self, omega0: float):
        """Initial (theta0, w0, v0).  N >= 3 starts just off the pole with a
        Taylor slope from pole regularity; N = 2 starts at the symmetry
        midpoint of the arc with zero slope."""
        N, p = self.params.N, self.params.p
        alpha, c0, M_eff, mexp = self._coeffs()
        if N >= 3:
            t0 = _POLE_OFFSET
            wdd0 = (
                c0 * omega0
                + omega0**p
                - M_eff * alpha ** (2.0 * p / (p + 1.0)) * omega0 ** (2.0 * p / (p + 1.0))
            ) / (N - 1.0)
            return t0, omega0, t0 * wdd0
        return 0.5 * self.theta_end, omega0, 0.0


@dataclass(frozen=True)
class ShotTrajectory:
    theta: np.ndarray
    omega: np.ndarray
    domega: np.ndarray
    crossed: bool
    diverged: bool
    theta_stop: float


@dataclass(frozen=True)
class ProfileSolution:
    theta: np.ndarray
    omega: np.ndarray
    domega: np.ndarray
    omega_at_pole: float
    residual: float
    shots: int
    brackets: int
    problem: ProfileProblem


def _raw_shot(problem: ProfileProblem, omega0: float, rtol=1e-10):
    """One adaptive shot; returns the kernel tuple (status, t, w, v, nstep)."""
    N, p = problem.params.N, problem.params.p
    alpha, c0, M_eff, mexp = problem._coeffs()
    t0, w0, v0 = problem._startup(omega0)
    t_end = problem.theta_end
    if problem.variant == WHOLE_SPHERE and N >= 3:
        t_end = math.pi - _POLE_OFFSET
    return K.profile_shot(
        N, p, c0, M_eff, alpha * alpha, mexp, t0, t_end, w0, v0, rtol, 1e-12, 1000000
    )


def _indicator(status, t_stop, w_stop, theta_end):
    """Sign convention for the end-value map: crossings before theta_end are
    negative, surviving shots carry omega(theta_end), divergence is positive."""
    if status == K.CROSSED_ZERO:
        return -(theta_end - t_stop) - 1e-300
    if status in (K.DIVERGED, K.STEP_UNDERFLOW):
        return abs(w_stop) + 1.0
    return w_stop


def shoot(problem: ProfileProblem, omega0: float, steps: int = 2001, rtol=1e-10):
    """Integrate one shot; returns (trajectory, end_value).

    The trajectory is resampled on a uniform grid up to the stopping angle
    (theta_end, first zero crossing, or divergence point) by fixed-step RK4.
    """
    if omega0 < 0:
        raise ParameterDomainError("omega0 must be >= 0")
    N, p = problem.params.N, problem.params.p
    alpha, c0, M_eff, mexp = problem._coeffs()
    t0, w0, v0 = problem._startup(omega0)

    if problem.variant == WHOLE_SPHERE and omega0 > 0:
        # constant-root check: when the startup curvature vanishes to rounding
        # the exact solution is the constant; integrating the (unstable)
        # equilibrium would only amplify float noise, so emit the constant.
        rhs0 = (
            c0 * omega0
            + omega0**p
            - M_eff * (alpha * alpha * omega0 * omega0) ** mexp
        )
        scale = max(1.0, abs(c0) * omega0, omega0**p)
        if abs(rhs0) <= 1e-9 * scale:
            grid = np.linspace(t0, problem.theta_end, steps)
            traj = ShotTrajectory(
                theta=grid,
                omega=np.full(steps, omega0),
                domega=np.zeros(steps),
                crossed=False,
                diverged=False,
                theta_stop=problem.theta_end,
            )
            return traj, omega0

    status, t_stop, w_stop, v_stop, _ = _raw_shot(problem, omega0, rtol)

    grid = np.linspace(t0, t_stop, steps)
    w, v = K.profile_fixed_grid(N, p, c0, M_eff, alpha * alpha, mexp, grid, w0, v0, 4)
    # truncate at the first non-finite sample (blow-up overshoot)
    bad = ~np.isfinite(w)
    if bad.any():
        cut = int(np.argmax(bad))
        grid, w, v = grid[:cut], w[:cut], v[:cut]
    traj = ShotTrajectory(
        theta=grid,
        omega=w,
        domega=v,
        crossed=status == K.CROSSED_ZERO,
        diverged=status in (K.DIVERGED, K.STEP_UNDERFLOW),
        theta_stop=t_stop,
    )
    return traj, _indicator(status, t_stop, w_stop, problem.theta_end)


def end_value_map(problem: ProfileProblem, omega0s, rtol=1e-10):
    """End-value indicator at each omega0 (vector version of shoot)."""
    out = np.empty(len(omega0s))
    for i, w0 in enumerate(omega0s):
        status, t_stop, w_stop, _, _ = _raw_shot(problem, w0, rtol)
        out[i] = _indicator(status, t_stop, w_stop, problem.theta_end)
    return out


def _build_solution(problem: ProfileProblem, omega0, shots, brackets):
    """Lay the converged shot on the uniform collocation grid."""
    N, p = problem.params.N, problem.params.p
    alpha, c0, M_eff, mexp = problem._coeffs()
    t0, w0, v0 = problem._startup(omega0)
    n_nodes = _GRID_NODES
    if N >= 3:
        grid = np.linspace(t0, problem.theta_end, n_nodes)
        w, v = K.profile_fixed_grid(N, p, c0, M_eff, alpha * alpha, mexp, grid, w0, v0, 2)
    else:
        # N = 2: the operator is autonomous; integrate both halves from the
        # symmetry midpoint independently (symmetry is checked, not imposed)
        half = n_nodes // 2 + 1
        fwd = np.linspace(t0, problem.theta_end, half)
        bwd = np.linspace(t0, 0.0, half)
        wf, vf = K.profile_fixed_grid(N, p, c0, M_eff, alpha * alpha, mexp, fwd, w0, v0, 2)
        wb, vb = K.profile_fixed_grid(N, p, c0, M_eff, alpha * alpha, mexp, bwd, w0, v0, 2)
        grid = np.concatenate([bwd[::-1], fwd[1:]])
        w = np.concatenate([wb[::-1], wf[1:]])
        v = np.concatenate([vb[::-1], vf[1:]])
    sol = ProfileSolution(
        theta=grid,
        omega=w,
        domega=v,
        omega_at_pole=w0,
        residual=math.nan,
        shots=shots,
        brackets=brackets,
        problem=problem,
    )
    object.__setattr__(sol, "residual", residual(sol, problem))
    return sol


def solve_min_profile(problem: ProfileProblem, rtol=1e-10) -> ProfileSolution | None:
    """Scan the end-value map on 512 log-spaced omega0 and bisect the
    smallest sign-change bracket; None when no bracket exists."""
    omega0s = np.logspace(
        math.log10(_SCAN_LO), math.log10(_SCAN_HI), _SCAN_POINTS
    )
    f = end_value_map(problem, omega0s, rtol)
    shots = len(omega0s)
    sign = np.sign(f)
    idx = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    if len(idx) == 0:
        return None
    a, b = omega0s[idx[0]], omega0s[idx[0] + 1]
    fa = f[idx[0]]
    while (b - a) > 4e-15 * b:
        m = 0.5 * (a + b)
        status, t_stop, w_stop, _, _ = _raw_shot(problem, m, rtol)
        fm = _indicator(status, t_stop, w_stop, problem.theta_end)
        shots += 1
        if fm == 0.0:
            a = b = m
            break
        if fa * fm < 0.0:
            b = m
        else:
            a, fa = m, fm
    # of the two bracket endpoints keep the shot that survives positive
    status, t_stop, w_stop, _, _ = _raw_shot(problem, a, rtol)
    omega0 = a if status == K.REACHED_END else b
    return _build_solution(problem, omega0, shots + 1, brackets=len(idx))


def solve_psi(N: int, p: float, rtol=1e-10) -> ProfileSolution:
    """Positive profile of the absorption-only equation (M = 0); unique for
    subcritical p, so the first bracket is the answer."""
    p_crit = (N + 1.0) / (N - 1.0)
    if not 1.0 < p < p_crit - 1e-12:
        raise ParameterDomainError(
            f"psi requires 1 < p < (N+1)/(N-1) = {p_crit}, got p={p}"
        )
    q_star = 2.0 * p / (p + 1.0)
    problem = ProfileProblem(Params(N, p, q_star, 0.0), variant=PSI)
    sol = solve_min_profile(problem, rtol)
    if sol is None:
        raise RuntimeError(f"no psi bracket found for N={N}, p={p}")
    return sol


def existence_threshold(N: int, p: float, M_range=None, tol: float = 0.02):
    """Bracket of the threshold M above which a positive half-sphere profile
    exists (q on the critical line).  Degenerate brackets at 0 for p at or
    below the critical exponent, where existence holds for every admissible M.
    """
    from .regimes import m_star_star, critical_constants

    p_crit = (N + 1.0) / (N - 1.0)
    if p < p_crit - 1e-12:
        return (0.0, 0.0)
    if abs(p - p_crit) <= 1e-12:
        return (0.0, 1e-12)  # exists for every M > 0

    q_star = 2.0 * p / (p + 1.0)
    mss = m_star_star(N, p)
    M_Np = critical_constants(Params(N, p, q_star, 0.0)).M_Np
    if M_range is None:
        M_range = (mss, M_Np)
    lo, hi = M_range
    if lo > mss + 1e-12 or hi < M_Np - 1e-12:
        raise ParameterDomainError(
            f"M_range must contain [m**, M_Np] = [{mss}, {M_Np}]"
        )

    def exists(M):
        problem = ProfileProblem(Params(N, p, q_star, M), variant=HALF_SPHERE)
        omega0s = np.logspace(
            math.log10(_SCAN_LO), math.log10(_SCAN_HI), _SCAN_POINTS
        )
        f = end_value_map(problem, omega0s)
        s = np.sign(f)
        return bool((s[:-1] * s[1:] < 0).any())

    # monotonicity guard before bisection
    Ms = np.linspace(lo, hi, 32)
    scan = np.array([exists(M) for M in Ms])
    flips = np.nonzero(scan[:-1] != scan[1:])[0]
    if scan[0] or not scan[-1] or len(flips) > 1:
        raise ThresholdScanError(
            "existence indicator not a single 0->1 step on the pre-scan",
            list(zip(Ms.tolist(), scan.tolist())),
        )
    a, b = Ms[flips[0]], Ms[flips[0] + 1]
    while (b - a) > tol:
        m = 0.5 * (a + b)
        if exists(m):
            b = m
        else:
            a = m
    return (a, b)


def residual(solution: ProfileSolution, problem: ProfileProblem) -> float:
    """Sup-norm of the second-order central-difference collocation residual
    of the profile ODE on interior nodes.

    The ODE is collocated in first-order-system form (defects of w' = v and
    of v' = rhs(w, v) with centered differences): a scalar second-difference
    stencil amplifies float64 storage rounding by 1/h^2 and bottoms out near
    2e-7 for O(1)-amplitude profiles, while the system form keeps the noise
    floor at eps/h.  Each defect is reported relative to the local term
    magnitude max(1, |w|^p, |v|), so the figure expresses how well the ODE is
    satisfied at the solution's own scale.
    """
    t, w, v = solution.theta, solution.omega, solution.domega
    if len(t) != len(w) or len(t) != len(v) or len(t) < 3:
        raise ParameterDomainError("incompatible or too-short grids")
    N, p = problem.params.N, problem.params.p
    alpha, c0, M_eff, mexp = problem._coeffs()
    h = t[1] - t[0]
    wi, vi = w[1:-1], v[1:-1]
    dw = (w[2:] - w[:-2]) / (2.0 * h)
    dv = (v[2:] - v[:-2]) / (2.0 * h)
    rhs = (
        c0 * wi
        + np.sign(wi) * np.abs(wi) ** p
        - M_eff * (alpha * alpha * wi * wi + vi * vi) ** mexp
    )
    if N > 2:
        rhs -= (N - 2.0) * (np.cos(t[1:-1]) / np.sin(t[1:-1])) * vi
    scale = np.maximum(1.0, np.maximum(np.abs(wi) ** p, np.abs(vi)))
    return float(
        max(np.max(np.abs(dw - vi) / scale), np.max(np.abs(dv - rhs) / scale))
    )
