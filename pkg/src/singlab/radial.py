"""Radial ODE laboratory for the master equation.

Integrates radial solutions of

    -u'' - (N-1)u'/r + |u|^(p-1)u - M|u'|^q = 0,

checks the Keller-Osserman a priori envelope max{M^(1/(p-q)) r^(-gamma),
r^(-alpha)}, evaluates the Osserman barrier inequality for
U(rho) = lambda (a^2 - rho^2)^(-b), computes the radius on which the eikonal
power-law supersolution is valid, and fits blow-up exponents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .regimes import Params, ParameterDomainError

__all__ = [
    "RadialTrajectory",
    "integrate",
    "ko_check",
    "osserman_check",
    "osserman_min_lambda",
    "supersolution_radius",
    "fit_blowup_exponent",
    "eikonal_solution",
]


@dataclass(frozen=True)
class RadialTrajectory:
    r: np.ndarray
    u: np.ndarray
    du: np.ndarray
    params: Params
    diverged: bool = False


def integrate(
    params: Params, r0: float, u0: float, v0: float, r1: float, tol: float = 1e-10
) -> RadialTrajectory:
    """Adaptive integration from r0 to r1 at relative tolerance tol; stops
    early (divergence flag) when |u| exceeds 1e12."""
    if not (0 < r0 < r1) or not all(map(math.isfinite, (r0, u0, v0, r1, tol))):
        raise ParameterDomainError("need finite inputs with 0 < r0 < r1")
    if tol <= 0:
        raise ParameterDomainError("tol must be positive")
    status, n, r, u, v = K.radial_integrate(
        params.N, params.p, params.q, params.M, r0, u0, v0, r1, tol, 1e-14, 200000
    )
    return RadialTrajectory(
        r=r, u=u, du=v, params=params, diverged=status != K.REACHED_END
    )


def ko_check(traj: RadialTrajectory) -> float:
    """sup over samples of u(r) / max{M^(1/(p-q)) r^(-gamma), r^(-alpha)}:
    the empirical constant in the a priori upper envelope."""
    p, q, M = traj.params.p, traj.params.q, traj.params.M
    if q >= p:
        raise ParameterDomainError("the envelope requires q < p")
    if M <= 0:
        raise ParameterDomainError("the envelope requires M > 0")
    alpha = 2.0 / (p - 1.0)
    gamma = q / (p - q)
    env = np.maximum(M ** (1.0 / (p - q)) * traj.r**-gamma, traj.r**-alpha)
    return float(np.max(traj.u / env))


def osserman_check(
    params: Params, a: float, b: float, lam: float, n: int = 1000
) -> float:
    """Minimum of L[U] over n Chebyshev points of (0, a) for the barrier
    U(rho) = lam*(a^2 - rho^2)^(-b); min >= 0 certifies a supersolution."""
    if not (a > 0 and b > 0 and lam >= 0 and n >= 16):
        raise ParameterDomainError("need a > 0, b > 0, lambda >= 0, n >= 16")
    j = np.arange(1, n + 1)
    rho = a * 0.5 * (1.0 - np.cos((2.0 * j - 1.0) * math.pi / (2.0 * n)))
    return float(np.min(_barrier_LU(params, a, b, lam, rho)))


def _barrier_LU(params: Params, a, b, lam, rho):
    """L[U] for U = lam*(a^2 - rho^2)^(-b) at the radii rho."""
    N, p, q, M = params.N, params.p, params.q, params.M
    s = a * a - rho * rho
    U = lam * s ** (-b)
    dU = 2.0 * b * lam * rho * s ** (-b - 1.0)
    d2U = 2.0 * b * lam * s ** (-b - 1.0) + 4.0 * b * (b + 1.0) * lam * rho * rho * s ** (
        -b - 2.0
    )
    return -d2U - (N - 1.0) * dU / rho + U**p - M * dU**q


def osserman_min_lambda(
    params: Params,
    a: float,
    b: float,
    n: int = 1000,
    lam_max: float = 1e6,
):
    """Smallest lambda (to 1e-6 relative) with a nonnegative barrier residual,
    located by geometric sweep plus bisection; None when every lambda fails.

    Candidate lambdas must pass both the n-point Chebyshev check and a
    boundary-layer check clustered at rho -> a: for b below the admissible
    exponent the sign failure concentrates at the rim, where a plain
    Chebyshev grid would spuriously accept astronomically large lambda.
    """
    rim = a * np.sqrt(1.0 - np.logspace(-15, -2, 240))

    def ok(lam):
        return (
            osserman_check(params, a, b, lam, n) >= 0.0
            and float(np.min(_barrier_LU(params, a, b, lam, rim))) >= 0.0
        )

    lam = 1e-6
    prev = 0.0
    while lam <= lam_max:
        if ok(lam):
            break
        prev, lam = lam, lam * 2.0
    else:
        return None
    lo, hi = prev, lam
    while hi - lo > 1e-6 * hi:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def supersolution_radius(params: Params, n_amp: float) -> float | None:
    """Radius r_n on which U_n = n r^(-gamma) is a supersolution in the
    supercritical-gradient regime: the positive solution of

        n^(q-1) (n^(p-q) - gamma^q M) r^(2-(p-1)gamma) = gamma (gamma+2-N),

    None when the amplitude is too small (n^(p-q) <= gamma^q M)."""
    N, p, q, M = params.N, params.p, params.q, params.M
    if not (2.0 * p / (p + 1.0) < q < min(2.0, p)):
        raise ParameterDomainError("requires 2p/(p+1) < q < min{2, p}")
    if not p < (N + 1.0) / (N - 1.0):
        raise ParameterDomainError("requires p < (N+1)/(N-1) so gamma+2-N > 0")
    if M <= 0:
        raise ParameterDomainError("requires M > 0")
    gamma = q / (p - q)
    margin = n_amp ** (p - q) - gamma**q * M
    if margin <= 0.0:
        return None
    lhs = n_amp ** (q - 1.0) * margin
    rhs = gamma * (gamma + 2.0 - N)
    # exponent 2-(p-1)gamma < 0 in this regime
    return (rhs / lhs) ** (1.0 / (2.0 - (p - 1.0) * gamma))


def fit_blowup_exponent(traj: RadialTrajectory, window) -> float:
    """OLS slope of log u vs log r over the radii window (inclusive)."""
    lo, hi = window
    mask = (traj.r >= lo) & (traj.r <= hi)
    if int(mask.sum()) < 8:
        raise ParameterDomainError("window must contain at least 8 samples")
    u = traj.u[mask]
    if np.any(u <= 0):
        raise ValueError("nonpositive u in fit window")
    x = np.log(traj.r[mask])
    y = np.log(u)
    return float(np.polyfit(x, y, 1)[0])


def eikonal_solution(params: Params, r: np.ndarray):
    """The exact eikonal power law U = omega0 r^(-gamma) with
    omega0 = gamma^gamma M^(1/(p-q)); returns (U, U')."""
    p, q, M = params.p, params.q, params.M
    if not (1.0 < q < p and M > 0):
        raise ParameterDomainError("requires 1 < q < p and M > 0")
    gamma = q / (p - q)
    omega0 = gamma**gamma * M ** (1.0 / (p - q))
    return omega0 * r**-gamma, -gamma * omega0 * r ** (-gamma - 1.0)
