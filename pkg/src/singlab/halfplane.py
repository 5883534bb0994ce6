"""Log-polar finite-difference solver for the master equation on a
half-annulus approximating the upper half-plane with a boundary Dirac at the
origin.

The domain is {(r, theta) : r_min <= r <= r_max, 0 <= theta <= pi} with
Dirichlet data u = k*P2 on the inner arc (P2 the half-plane Poisson kernel)
and u = 0 on the flat boundary rows and the outer arc.  In log-polar
coordinates s = log r the operator becomes

    -Delta u = -(u_ss + u_tt) / r^2,

so the discrete system is a plain 5-point Laplacian on a uniform (s, theta)
rectangle plus a diagonal reaction term.  Solutions are produced by the
monotone sub/supersolution iteration

    (-Delta + lam) u_{n+1} = lam u_n - u_n^p + M |grad u_n|^q,

with a pointwise shift lam(x) = p * super(x)^(p-1) + 1 chosen once from the
supersolution, so a single sparse factorization serves every sweep.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .regimes import Params, ParameterDomainError, classify

__all__ = [
    "PolarGrid",
    "Field",
    "SolveReport",
    "SingularInputError",
    "OrderViolationError",
    "NonconvergenceError",
    "SupersolutionConstructionError",
    "poisson_kernel",
    "solve_absorption",
    "solve_full",
    "fundamental_solution",
    "strong_limit",
    "diagnostics",
    "removability_probe",
]

MAX_OUTER_ITERATIONS = 500
#: relative slack for nodewise ordering certificates: the sampled harmonic
#: majorant is harmonic only up to O(h^2) truncation error, so strict
#: inequalities can be violated at discretization level near the inner ring.
ORDER_SLACK = 1e-4
_GROWTH = 1.6
_MAX_GROWTH_STEPS = 40


class SingularInputError(ValueError):
    """Kernel evaluation requested at the singular boundary point."""


class OrderViolationError(RuntimeError):
    """An iterate escaped the sub/supersolution sandwich."""

    def __init__(self, message, node):
        super().__init__(f"{message} at node (r index, theta index) = {node}")
        self.node = node


class NonconvergenceError(RuntimeError):
    """Outer iteration failed to reach tolerance; carries the report."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


class SupersolutionConstructionError(RuntimeError):
    """No discretely verified supersolution within the growth budget."""


@dataclass(frozen=True)
class PolarGrid:
    """Log-spaced radial by uniform angular tensor grid on the half-annulus."""

    r_min: float = 1e-4
    r_max: float = 1.0
    n_r: int = 256
    n_theta: int = 128

    def __post_init__(self):
        if not (0.0 < self.r_min < self.r_max):
            raise ParameterDomainError("need 0 < r_min < r_max")
        if self.n_r < 32 or self.n_theta < 16:
            raise ParameterDomainError("need n_r >= 32 and n_theta >= 16")

    @property
    def r(self) -> np.ndarray:
        return np.geomspace(self.r_min, self.r_max, self.n_r)

    @property
    def theta(self) -> np.ndarray:
        return np.linspace(0.0, math.pi, self.n_theta)

    @property
    def hs(self) -> float:
        return math.log(self.r_max / self.r_min) / (self.n_r - 1)

    @property
    def htheta(self) -> float:
        return math.pi / (self.n_theta - 1)


@dataclass
class Field:
    """Nonnegative grid function with Dirichlet-zero flat boundary and outer
    arc; k_mass records the Dirac weight of the inner-arc data."""

    grid: PolarGrid
    values: np.ndarray
    params: Params
    k_mass: float

    def validate(self) -> None:
        v = self.values
        if v.shape != (self.grid.n_r, self.grid.n_theta):
            raise ValueError("values shape does not match grid")
        if np.any(v < 0.0):
            raise ValueError("field has negative values")
        if np.any(v[:, 0] != 0.0) or np.any(v[:, -1] != 0.0):
            raise ValueError("field nonzero on a flat-boundary row")
        if np.any(v[-1, 1:-1] != 0.0):
            raise ValueError("field nonzero on the outer arc")

    def to_csv(self, path) -> None:
        """Rows (r, theta, u), row-major by radius, full float precision."""
        r, th = self.grid.r, self.grid.theta
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "theta", "u"])
            for i in range(self.grid.n_r):
                for j in range(self.grid.n_theta):
                    w.writerow(
                        [repr(float(r[i])), repr(float(th[j])),
                         repr(float(self.values[i, j]))]
                    )


@dataclass
class SolveReport:
    iterations: int
    final_gap: float
    ordered: bool
    converged: bool

    def to_dict(self):
        return {
            "iterations": self.iterations,
            "final_gap": self.final_gap,
            "ordered": self.ordered,
            "converged": self.converged,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def poisson_kernel(N: int, x) -> float:
    """Half-space Poisson kernel P_N(x) = c_N * x_N * |x|^(-N) with the
    unit-mass normalization c_N = Gamma(N/2) * pi^(-N/2)."""
    if N < 2:
        raise ParameterDomainError("need N >= 2")
    x = np.asarray(x, dtype=float)
    if x.shape != (N,):
        raise ParameterDomainError(f"x must be a point in R^{N}")
    if x[-1] < 0.0:
        raise ParameterDomainError("x must lie in the closed half-space")
    norm = float(np.linalg.norm(x))
    if norm == 0.0:
        raise SingularInputError("Poisson kernel is singular at the origin")
    c_N = math.gamma(N / 2.0) / math.pi ** (N / 2.0)
    return c_N * float(x[-1]) * norm**-N


def _kernel_grid(grid: PolarGrid, k: float) -> np.ndarray:
    """k * P2 sampled on the full grid (P2 = sin(theta) / (pi * r))."""
    r = grid.r[:, None]
    th = grid.theta[None, :]
    vals = (k / math.pi) * np.sin(th) / r
    vals[:, 0] = 0.0
    vals[:, -1] = 0.0
    return vals


def _grad_sq_interior(grid: PolarGrid, u: np.ndarray) -> np.ndarray:
    """|grad u|^2 = (u_s^2 + u_theta^2)/r^2 at interior nodes, centered."""
    us = (u[2:, 1:-1] - u[:-2, 1:-1]) / (2.0 * grid.hs)
    ut = (u[1:-1, 2:] - u[1:-1, :-2]) / (2.0 * grid.htheta)
    r2 = (grid.r[1:-1] ** 2)[:, None]
    return (us * us + ut * ut) / r2


def _power(u: np.ndarray, p: float) -> np.ndarray:
    """Odd extension |u|^(p-1) u, safe for (microscopically) negative values."""
    return np.sign(u) * np.abs(u) ** p


def _residual_interior(grid: PolarGrid, params: Params, u: np.ndarray):
    """Discrete residual -Delta_h u + |u|^(p-1)u - M|grad_h u|^q at interior
    nodes (5-point log-polar Laplacian, centered gradient)."""
    hs2, ht2 = grid.hs**2, grid.htheta**2
    r2 = (grid.r[1:-1] ** 2)[:, None]
    lap = (
        (u[2:, 1:-1] - 2.0 * u[1:-1, 1:-1] + u[:-2, 1:-1]) / hs2
        + (u[1:-1, 2:] - 2.0 * u[1:-1, 1:-1] + u[1:-1, :-2]) / ht2
    ) / r2
    g2 = _grad_sq_interior(grid, u)
    return (
        -lap
        + _power(u[1:-1, 1:-1], params.p)
        - params.M * g2 ** (params.q / 2.0)
    )


def _interior_matrix(grid: PolarGrid, lam: np.ndarray):
    """Sparse LU of the scaled operator -(D_ss + D_tt) + diag(r^2 lam) on
    interior nodes (Dirichlet boundaries eliminated)."""
    ni, nj = grid.n_r - 2, grid.n_theta - 2
    ds = sp.diags(
        [np.ones(ni - 1), -2.0 * np.ones(ni), np.ones(ni - 1)], [-1, 0, 1]
    ) / grid.hs**2
    dt = sp.diags(
        [np.ones(nj - 1), -2.0 * np.ones(nj), np.ones(nj - 1)], [-1, 0, 1]
    ) / grid.htheta**2
    lap = sp.kron(ds, sp.eye(nj)) + sp.kron(sp.eye(ni), dt)
    r2 = np.repeat(grid.r[1:-1] ** 2, nj)
    A = (-lap + sp.diags(r2 * lam.ravel())).tocsc()
    return splu(A)


def _monotone_iterate(
    grid: PolarGrid,
    params: Params,
    inner_data: np.ndarray,
    start: np.ndarray,
    lam: np.ndarray,
    tol: float,
    sub: np.ndarray | None = None,
    super_: np.ndarray | None = None,
):
    """Run the shifted fixed-point sweep from `start` (full-grid array).

    Returns (full-grid solution array, SolveReport).  Every iterate is
    checked against the optional sub/super sandwich with relative slack;
    a violation raises OrderViolationError with the first offending node.
    """
    p, q, M = params.p, params.q, params.M
    lu = _interior_matrix(grid, lam)
    ni, nj = grid.n_r - 2, grid.n_theta - 2
    r2 = (grid.r[1:-1] ** 2)[:, None]

    u = start.copy()
    u_int = u[1:-1, 1:-1].copy()
    sub_int = None if sub is None else sub[1:-1, 1:-1]
    sup_int = None if super_ is None else super_[1:-1, 1:-1]

    def first_violation(new, bound, sign):
        gap = sign * (new - bound) - ORDER_SLACK * (1.0 + np.abs(bound))
        idx = np.argmax(gap)
        if gap.flat[idx] > 0.0:
            i, j = np.unravel_index(idx, (ni, nj))
            return (int(i) + 1, int(j) + 1)
        return None

    ordered = True
    gap = math.inf
    iterations = 0
    for iterations in range(1, MAX_OUTER_ITERATIONS + 1):
        g2 = _grad_sq_interior(grid, u)
        rhs = r2 * (lam * u_int - _power(u_int, p) + M * g2 ** (q / 2.0))
        rhs[0, :] += inner_data[1:-1] / grid.hs**2
        new_int = lu.solve(rhs.ravel()).reshape(ni, nj)

        if np.any(new_int > u_int + ORDER_SLACK * (1.0 + np.abs(u_int))):
            ordered = False
        if sub_int is not None:
            node = first_violation(new_int, sub_int, -1.0)
            if node is not None:
                raise OrderViolationError("iterate fell below subsolution", node)
        if sup_int is not None:
            node = first_violation(new_int, sup_int, 1.0)
            if node is not None:
                raise OrderViolationError("iterate exceeded supersolution", node)

        gap = float(np.max(np.abs(new_int - u_int)))
        u_int = new_int
        u[1:-1, 1:-1] = u_int
        u[0, :] = inner_data
        u[-1, :] = 0.0
        u[:, 0] = 0.0
        u[:, -1] = 0.0
        if gap <= tol:
            return u, SolveReport(iterations, gap, ordered, True)

    report = SolveReport(iterations, gap, ordered, False)
    raise NonconvergenceError(
        f"no convergence after {MAX_OUTER_ITERATIONS} iterations "
        f"(final gap {gap:.3e} > tol {tol:.3e})",
        report,
    )


def solve_absorption(grid: PolarGrid, p: float, k: float, tol: float = 1e-8):
    """Minimal solution of -Delta v + v^p = 0 with inner-arc data k*P2 and
    zero Dirichlet data elsewhere, by monotone iteration downward from the
    harmonic majorant k*P2."""
    if p <= 1.0:
        raise ParameterDomainError("need p > 1")
    if k < 0.0:
        raise ParameterDomainError("need k >= 0")
    if tol <= 0.0:
        raise ParameterDomainError("need tol > 0")
    params = Params(2, p, 2.0 * p / (p + 1.0), 0.0)
    kernel = _kernel_grid(grid, k)
    alpha = 2.0 / (p - 1.0)
    # Start from min{k*P2, Lam*r^(-alpha)}: still a majorant of the solution,
    # but with a k-independent far field so the monotone shift stays moderate.
    lam_amp = alpha ** (2.0 / (p - 1.0))
    envelope = np.broadcast_to(
        (grid.r ** -alpha)[:, None], kernel.shape
    )
    for _ in range(_MAX_GROWTH_STEPS):
        start = np.minimum(kernel, lam_amp * envelope)
        start[:, 0] = 0.0
        start[:, -1] = 0.0
        start[-1, :] = 0.0
        start[0, :] = np.maximum(start[0, :], kernel[0, :])
        res = _residual_interior(grid, params, start)
        # On the kernel branch the analytic residual is kernel^p >= 0 and any
        # discrete deficit is pure truncation error (the kernel is harmonic);
        # only the envelope branch must certify discretely.
        kernel_branch = kernel[1:-1, 1:-1] <= lam_amp * envelope[1:-1, 1:-1]
        if np.all((res >= 0.0) | kernel_branch):
            break
        lam_amp *= _GROWTH
    else:
        raise SupersolutionConstructionError(
            "no verified absorption majorant within the growth budget"
        )
    lam = p * start[1:-1, 1:-1] ** (p - 1.0) + 1.0
    zero = np.zeros_like(kernel)
    u, report = _monotone_iterate(
        grid, params, kernel[0, :], start, lam, tol, sub=zero
    )
    u = np.maximum(u, 0.0)
    fld = Field(grid=grid, values=u, params=params, k_mass=k)
    fld.validate()
    return fld, report


def _verify_sub_super(grid, params, sub, super_):
    """Pre-flight ordering and one-signed discrete residual checks."""
    if np.any(sub > super_ + ORDER_SLACK * (1.0 + np.abs(super_))):
        idx = np.argmax(sub - super_)
        raise OrderViolationError(
            "sub exceeds super", np.unravel_index(idx, sub.shape)
        )
    for name, arr, sign in (("sub", sub, 1.0), ("super", super_, -1.0)):
        res = _residual_interior(grid, params, arr)
        g2 = _grad_sq_interior(grid, arr)
        scale = ORDER_SLACK * (
            1.0
            + np.abs(arr[1:-1, 1:-1]) ** params.p
            + params.M * g2 ** (params.q / 2.0)
        )
        bad = sign * res > scale
        if np.any(bad):
            i, j = np.unravel_index(np.argmax(sign * res - scale), res.shape)
            raise ParameterDomainError(
                f"{name} is not a discrete {name}solution at interior node "
                f"({i + 1}, {j + 1}): residual {res[i, j]:.3e}"
            )


def solve_full(
    grid: PolarGrid,
    params: Params,
    k: float,
    sub: Field,
    super_: Field | np.ndarray,
    tol: float = 1e-8,
):
    """Monotone iteration for the full operator between a verified discrete
    subsolution and supersolution, starting from the supersolution."""
    if params.N != 2:
        raise ParameterDomainError("the PDE solver is restricted to N = 2")
    if tol <= 0.0:
        raise ParameterDomainError("need tol > 0")
    sub_arr = sub.values if isinstance(sub, Field) else np.asarray(sub, float)
    sup_arr = (
        super_.values if isinstance(super_, Field) else np.asarray(super_, float)
    )
    _verify_sub_super(grid, params, sub_arr, sup_arr)
    lam = params.p * sup_arr[1:-1, 1:-1] ** (params.p - 1.0) + 1.0
    inner = _kernel_grid(grid, k)[0, :]
    u, report = _monotone_iterate(
        grid, params, inner, sup_arr, lam, tol, sub=sub_arr, super_=sup_arr
    )
    u = np.maximum(u, 0.0)
    fld = Field(grid=grid, values=u, params=params, k_mass=k)
    fld.validate()
    return fld, report


def _ko_envelope(grid: PolarGrid, params: Params) -> np.ndarray:
    """A priori envelope max{M^(1/(p-q)) r^(-gamma), r^(-alpha)} on the grid."""
    p, q, M = params.p, params.q, params.M
    if q >= p or M <= 0.0:
        raise ParameterDomainError("the envelope requires q < p and M > 0")
    alpha = 2.0 / (p - 1.0)
    gamma = q / (p - q)
    r = grid.r[:, None]
    return np.broadcast_to(
        np.maximum(M ** (1.0 / (p - q)) * r**-gamma, r**-alpha),
        (grid.n_r, grid.n_theta),
    ).copy()


def _is_discrete_supersolution(grid, params, arr) -> bool:
    return bool(np.all(_residual_interior(grid, params, arr) >= 0.0))


def _build_supersolution(grid: PolarGrid, params: Params, k: float):
    """Candidate supersolution min{k*P2 + C_a, c * KO envelope}, with C_a and
    c grown geometrically until the discrete residual test passes."""
    kernel = _kernel_grid(grid, k)
    ko = _ko_envelope(grid, params)

    c = 1.0
    for _ in range(_MAX_GROWTH_STEPS):
        cand = c * ko
        cand[:, 0] = 0.0
        cand[:, -1] = 0.0
        cand[-1, :] = 0.0
        if _is_discrete_supersolution(grid, params, cand):
            break
        c *= _GROWTH
    else:
        raise SupersolutionConstructionError(
            "no verified envelope multiple within the growth budget"
        )

    C_a = 1.0
    for _ in range(_MAX_GROWTH_STEPS):
        cand = np.minimum(kernel + C_a, c * ko)
        cand[:, 0] = 0.0
        cand[:, -1] = 0.0
        cand[-1, :] = 0.0
        cand[0, :] = np.maximum(cand[0, :], kernel[0, :])
        if _is_discrete_supersolution(grid, params, cand):
            return cand, C_a, c
        C_a *= _GROWTH
    raise SupersolutionConstructionError(
        "no verified supersolution within the growth budget"
    )


def fundamental_solution(
    grid: PolarGrid, params: Params, k: float, tol: float = 1e-8
):
    """Solution with boundary Dirac weight k: subsolution from the absorption
    problem, supersolution from the capped-kernel/envelope construction, then
    the full monotone solve."""
    if "weak-singularity-solvable" not in classify(params).labels:
        raise ParameterDomainError(
            "fundamental solutions require the weak-singularity regime"
        )
    if k <= 0.0:
        raise ParameterDomainError("need k > 0")
    return _fundamental_solution_unchecked(grid, params, k, tol)


def _fundamental_solution_unchecked(grid, params, k, tol):
    sub_field, _ = solve_absorption(grid, params.p, k, tol)
    super_arr, _, _ = _build_supersolution(grid, params, k)
    return solve_full(grid, params, k, sub_field, super_arr, tol)


def strong_limit(grid: PolarGrid, params: Params, k_list, tol: float = 1e-8):
    """Solve along increasing Dirac weights; return the last field and the
    saturation: the sup over the annulus [10 r_min, 100 r_min] of the
    relative gap between the last two fields."""
    k_list = [float(k) for k in k_list]
    if len(k_list) < 4 or any(b <= a for a, b in zip(k_list, k_list[1:])):
        raise ParameterDomainError("k_list must be >= 4 increasing weights")
    if k_list[-1] / k_list[0] < 100.0:
        raise ParameterDomainError("k_list must span at least two decades")
    prev = None
    fld = None
    for k in k_list:
        fld, _ = fundamental_solution(grid, params, k, tol)
        last_pair = (prev, fld.values)
        prev = fld.values
    a, b = last_pair
    mask = (grid.r >= 10.0 * grid.r_min) & (grid.r <= 100.0 * grid.r_min)
    bb, aa = b[mask, 1:-1], a[mask, 1:-1]
    floor = 1e-12 * float(np.max(bb))
    saturation = float(np.max(np.abs(bb - aa) / np.maximum(np.abs(bb), floor)))
    return fld, saturation


def _fit_slope(r: np.ndarray, u: np.ndarray) -> float:
    return float(np.polyfit(np.log(r), np.log(u), 1)[0])


def diagnostics(field: Field) -> dict:
    """Blow-up diagnostics of a positive field: near-ring kernel ratio,
    radial log-log slope at theta = pi/2, rescaled angular profiles, envelope
    ratio, and (in the gradient-dominated regime) the sign margin of the
    power-law subsolution candidate m r^(-gamma) sin(theta)."""
    grid, params, k = field.grid, field.params, field.k_mass
    p, q, M = params.p, params.q, params.M
    alpha = 2.0 / (p - 1.0)
    r, th = grid.r, grid.theta
    u = field.values

    out: dict = {}

    i_ring = int(np.argmin(np.abs(r - 2.0 * grid.r_min)))
    if k > 0.0:
        kernel = _kernel_grid(grid, k)
        out["near_ring_ratio_profile"] = u[i_ring, 1:-1] / kernel[i_ring, 1:-1]
    else:
        out["near_ring_ratio_profile"] = None

    j_mid = int(np.argmin(np.abs(th - math.pi / 2.0)))
    mask = (r >= 10.0 * grid.r_min) & (r <= 100.0 * grid.r_min) & (u[:, j_mid] > 0.0)
    out["radial_slope"] = (
        _fit_slope(r[mask], u[mask, j_mid]) if int(mask.sum()) >= 2 else None
    )

    profiles = {}
    for mult in (10.0, 30.0, 100.0):
        i = int(np.argmin(np.abs(r - mult * grid.r_min)))
        profiles[float(r[i])] = r[i] ** alpha * u[i, :]
    out["rescaled_angular_profile"] = profiles

    if q < p and M > 0.0:
        out["ko_ratio"] = float(np.max(u / _ko_envelope(grid, params)))
    else:
        out["ko_ratio"] = None

    if q > 2.0 * p / (p + 1.0) and M > 0.0:
        gamma = q / (p - q)
        e1 = (q * (p + 1.0) - 2.0 * p) / (p - q)
        pgam = gamma**2 - (params.N - 2.0) * gamma + 1.0 - params.N
        sth = np.sin(th)[None, :]
        cth = np.cos(th)[None, :]
        rr = r[:, None]
        margins = {}
        for m in (0.01, 0.1, 1.0):
            expr = -m * rr**e1 * pgam * sth + m**q * (
                m ** (p - q) * sth**p
                - M * (gamma**2 * sth**2 + cth**2) ** (q / 2.0)
            )
            margins[m] = float(np.max(expr))
        out["eikonal_subsolution_margin"] = margins
    else:
        out["eikonal_subsolution_margin"] = None
    return out


def removability_probe(
    r_min_list, params: Params, k: float, r_max: float = 1.0,
    n_r: int | None = None, n_theta: int = 128, tol: float = 1e-8,
):
    """Concentrate the boundary data by shrinking r_min and track the sup of
    the solution over the fixed annulus [0.1, 0.2].

    Unless n_r is given, the radial node count scales with the decade span so
    every grid in the family shares the same radial step; otherwise the
    per-grid discretization error drifts and masks the trend being probed.

    Returns a report dict with the per-grid sups, whether they decrease
    monotonically, and the relative change over the last shrink step.
    """
    r_min_list = [float(r) for r in r_min_list]
    if len(r_min_list) < 2 or any(
        b >= a for a, b in zip(r_min_list, r_min_list[1:])
    ):
        raise ParameterDomainError("r_min_list must be >= 2 decreasing radii")
    if k < 0.0:
        raise ParameterDomainError("need k >= 0")
    sups = []
    for r_min in r_min_list:
        nodes = n_r
        if nodes is None:
            nodes = max(128, int(round(math.log(r_max / r_min) / 0.027)) + 1)
        grid = PolarGrid(r_min, r_max, nodes, n_theta)
        if k == 0.0:
            fld, _ = solve_absorption(grid, params.p, 0.0, tol)
        else:
            fld, _ = _fundamental_solution_unchecked(grid, params, k, tol)
        mask = (grid.r >= 0.1) & (grid.r <= 0.2)
        sups.append(float(np.max(fld.values[mask, :])))
    decreasing = all(b <= a for a, b in zip(sups, sups[1:]))
    denom = max(abs(sups[-1]), 1e-300)
    return {
        "r_min": r_min_list,
        "annulus_sup": sups,
        "monotone_decreasing": decreasing,
        "last_rel_change": abs(sups[-1] - sups[-2]) / denom,
    }
