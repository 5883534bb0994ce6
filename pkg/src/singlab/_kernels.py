"""Jitted ODE kernels: adaptive Cash-Karp shooting for the separable-profile
equation and for the radial master equation, plus a fixed-step RK4 sampler
used to lay final profiles on uniform grids (keeps the grid values on one
smooth trajectory so central-difference residuals stay clean O(h^2)).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# shot status codes
REACHED_END = 0
CROSSED_ZERO = 1
DIVERGED = 2
STEP_UNDERFLOW = 3

_CAP_W = 1e12
_CAP_V = 1e15

# Cash-Karp 4(5) coefficients
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 3.0 / 10.0, -9.0 / 10.0, 6.0 / 5.0
_A51, _A52, _A53, _A54 = -11.0 / 54.0, 5.0 / 2.0, -70.0 / 27.0, 35.0 / 27.0
_A61, _A62, _A63, _A64, _A65 = (
    1631.0 / 55296.0,
    175.0 / 512.0,
    575.0 / 13824.0,
    44275.0 / 110592.0,
    253.0 / 4096.0,
)
_B1, _B3, _B4, _B6 = 37.0 / 378.0, 250.0 / 621.0, 125.0 / 594.0, 512.0 / 1771.0
_E1 = _B1 - 2825.0 / 27648.0
_E3 = _B3 - 18575.0 / 48384.0
_E4 = _B4 - 13525.0 / 55296.0
_E5 = -277.0 / 14336.0
_E6 = _B6 - 1.0 / 4.0


@njit(cache=True)
def _profile_rhs(t, w, v, N, p, c0, M, alpha2, mexp):
    """Profile equation on the sphere, axisymmetric reduction:

    w'' = -(N-2)*cot(t)*w' + c0*w + |w|^(p-1)w - M*(alpha^2 w^2 + w'^2)^mexp
    """
    dv = c0 * w - M * (alpha2 * w * w + v * v) ** mexp
    aw = abs(w)
    if aw > 0.0:
        dv += math.copysign(aw**p, w)
    if N > 2:
        s = math.sin(t)
        dv -= (N - 2.0) * (math.cos(t) / s) * v
    return dv


@njit(cache=True)
def profile_shot(
    N,
    p,
    c0,
    M,
    alpha2,
    mexp,
    t0,
    t_end,
    w0,
    v0,
    rtol,
    atol,
    max_steps,
):
    """Adaptive Cash-Karp integration of the profile equation.

    Returns (status, t_stop, w_stop, v_stop, n_steps).  Integration stops at
    t_end, at the first zero crossing of w (crossing located by bisection on
    the cubic Hermite interpolant), or on divergence.
    """
    t, w, v = t0, w0, v0
    h = min(1e-3, (t_end - t0) * 0.1)
    if h <= 0.0:
        return REACHED_END, t, w, v, 0
    nstep = 0
    while nstep < max_steps:
        if t + h > t_end:
            h = t_end - t
        last = h >= (t_end - t) * (1.0 - 1e-14)

        k1v = _profile_rhs(t, w, v, N, p, c0, M, alpha2, mexp)
        k1w = v

        w2 = w + h * _A21 * k1w
        v2 = v + h * _A21 * k1v
        k2v = _profile_rhs(t + 0.2 * h, w2, v2, N, p, c0, M, alpha2, mexp)
        k2w = v2

        w3 = w + h * (_A31 * k1w + _A32 * k2w)
        v3 = v + h * (_A31 * k1v + _A32 * k2v)
        k3v = _profile_rhs(t + 0.3 * h, w3, v3, N, p, c0, M, alpha2, mexp)
        k3w = v3

        w4 = w + h * (_A41 * k1w + _A42 * k2w + _A43 * k3w)
        v4 = v + h * (_A41 * k1v + _A42 * k2v + _A43 * k3v)
        k4v = _profile_rhs(t + 0.6 * h, w4, v4, N, p, c0, M, alpha2, mexp)
        k4w = v4

        w5 = w + h * (_A51 * k1w + _A52 * k2w + _A53 * k3w + _A54 * k4w)
        v5 = v + h * (_A51 * k1v + _A52 * k2v + _A53 * k3v + _A54 * k4v)
        k5v = _profile_rhs(t + h, w5, v5, N, p, c0, M, alpha2, mexp)
        k5w = v5

        w6 = w + h * (_A61 * k1w + _A62 * k2w + _A63 * k3w + _A64 * k4w + _A65 * k5w)
        v6 = v + h * (_A61 * k1v + _A62 * k2v + _A63 * k3v + _A64 * k4v + _A65 * k5v)
        k6v = _profile_rhs(t + 0.875 * h, w6, v6, N, p, c0, M, alpha2, mexp)
        k6w = v6

        wn = w + h * (_B1 * k1w + _B3 * k3w + _B4 * k4w + _B6 * k6w)
        vn = v + h * (_B1 * k1v + _B3 * k3v + _B4 * k4v + _B6 * k6v)
        ew = h * (_E1 * k1w + _E3 * k3w + _E4 * k4w + _E5 * k5w + _E6 * k6w)
        ev = h * (_E1 * k1v + _E3 * k3v + _E4 * k4v + _E5 * k5v + _E6 * k6v)

        sw = atol + rtol * max(abs(w), abs(wn))
        sv = atol + rtol * max(abs(v), abs(vn))
        err = max(abs(ew) / sw, abs(ev) / sv)

        if err <= 1.0:
            nstep += 1
            tn = t + h
            if not math.isfinite(wn) or abs(wn) > _CAP_W or abs(vn) > _CAP_V:
                return DIVERGED, tn, wn, vn, nstep
            if wn < 0.0 and w >= 0.0:
                # locate the crossing on the cubic Hermite interpolant
                lo, hi = 0.0, 1.0
                for _ in range(80):
                    mid = 0.5 * (lo + hi)
                    h00 = (1.0 + 2.0 * mid) * (1.0 - mid) ** 2
                    h10 = mid * (1.0 - mid) ** 2
                    h01 = mid * mid * (3.0 - 2.0 * mid)
                    h11 = mid * mid * (mid - 1.0)
                    wm = h00 * w + h10 * h * v + h01 * wn + h11 * h * vn
                    if wm > 0.0:
                        lo = mid
                    else:
                        hi = mid
                tc = t + 0.5 * (lo + hi) * h
                return CROSSED_ZERO, tc, 0.0, vn, nstep
            t, w, v = tn, wn, vn
            if last or t >= t_end * (1.0 - 1e-15):
                return REACHED_END, t, w, v, nstep
        # step-size update
        if err == 0.0:
            fac = 5.0
        else:
            fac = 0.9 * err ** (-0.2)
            if fac > 5.0:
                fac = 5.0
            elif fac < 0.1:
                fac = 0.1
        h *= fac
        if h < 1e-14:
            return STEP_UNDERFLOW, t, w, v, nstep
    return STEP_UNDERFLOW, t, w, v, nstep


@njit(cache=True)
def profile_fixed_grid(N, p, c0, M, alpha2, mexp, grid, w0, v0, nsub):
    """Classical RK4 along the node sequence `grid` (monotone, either
    direction), nsub substeps per interval.  Returns (w, v) at the nodes."""
    n = grid.shape[0]
    w_out = np.empty(n)
    v_out = np.empty(n)
    w, v = w0, v0
    w_out[0] = w
    v_out[0] = v
    for i in range(n - 1):
        h = (grid[i + 1] - grid[i]) / nsub
        t = grid[i]
        for _ in range(nsub):
            k1v = _profile_rhs(t, w, v, N, p, c0, M, alpha2, mexp)
            k1w = v
            k2v = _profile_rhs(
                t + 0.5 * h, w + 0.5 * h * k1w, v + 0.5 * h * k1v, N, p, c0, M, alpha2, mexp
            )
            k2w = v + 0.5 * h * k1v
            k3v = _profile_rhs(
                t + 0.5 * h, w + 0.5 * h * k2w, v + 0.5 * h * k2v, N, p, c0, M, alpha2, mexp
            )
            k3w = v + 0.5 * h * k2v
            k4v = _profile_rhs(t + h, w + h * k3w, v + h * k3v, N, p, c0, M, alpha2, mexp)
            k4w = v + h * k3v
            w += h * (k1w + 2.0 * k2w + 2.0 * k3w + k4w) / 6.0
            v += h * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) / 6.0
            t += h
        w_out[i + 1] = w
        v_out[i + 1] = v
    return w_out, v_out


@njit(cache=True)
def _radial_rhs(r, u, v, N, p, q, M):
    """u'' = -(N-1)u'/r + |u|^(p-1)u - M|u'|^q."""
    dv = -(N - 1.0) * v / r - M * abs(v) ** q
    au = abs(u)
    if au > 0.0:
        dv += math.copysign(au**p, u)
    return dv


@njit(cache=True)
def radial_integrate(N, p, q, M, r0, u0, v0, r1, rtol, atol, max_record):
    """Adaptive Cash-Karp integration of the radial master equation from r0
    to r1, recording accepted steps.  Returns (status, n, r_arr, u_arr, v_arr)
    with status DIVERGED if |u| exceeded the cap before r1."""
    r_arr = np.empty(max_record)
    u_arr = np.empty(max_record)
    v_arr = np.empty(max_record)
    r, u, v = r0, u0, v0
    n = 0
    r_arr[n], u_arr[n], v_arr[n] = r, u, v
    n += 1
    h = (r1 - r0) * 1e-4
    status = REACHED_END
    while n < max_record:
        if r + h > r1:
            h = r1 - r

        k1v = _radial_rhs(r, u, v, N, p, q, M)
        k1u = v
        u2 = u + h * _A21 * k1u
        v2 = v + h * _A21 * k1v
        k2v = _radial_rhs(r + 0.2 * h, u2, v2, N, p, q, M)
        k2u = v2
        u3 = u + h * (_A31 * k1u + _A32 * k2u)
        v3 = v + h * (_A31 * k1v + _A32 * k2v)
        k3v = _radial_rhs(r + 0.3 * h, u3, v3, N, p, q, M)
        k3u = v3
        u4 = u + h * (_A41 * k1u + _A42 * k2u + _A43 * k3u)
        v4 = v + h * (_A41 * k1v + _A42 * k2v + _A43 * k3v)
        k4v = _radial_rhs(r + 0.6 * h, u4, v4, N, p, q, M)
        k4u = v4
        u5 = u + h * (_A51 * k1u + _A52 * k2u + _A53 * k3u + _A54 * k4u)
        v5 = v + h * (_A51 * k1v + _A52 * k2v + _A53 * k3v + _A54 * k4v)
        k5v = _radial_rhs(r + h, u5, v5, N, p, q, M)
        k5u = v5
        u6 = u + h * (_A61 * k1u + _A62 * k2u + _A63 * k3u + _A64 * k4u + _A65 * k5u)
        v6 = v + h * (_A61 * k1v + _A62 * k2v + _A63 * k3v + _A64 * k4v + _A65 * k5v)
        k6v = _radial_rhs(r + 0.875 * h, u6, v6, N, p, q, M)
        k6u = v6

        un = u + h * (_B1 * k1u + _B3 * k3u + _B4 * k4u + _B6 * k6u)
        vn = v + h * (_B1 * k1v + _B3 * k3v + _B4 * k4v + _B6 * k6v)
        eu = h * (_E1 * k1u + _E3 * k3u + _E4 * k4u + _E5 * k5u + _E6 * k6u)
        ev = h * (_E1 * k1v + _E3 * k3v + _E4 * k4v + _E5 * k5v + _E6 * k6v)

        su = atol + rtol * max(abs(u), abs(un))
        sv = atol + rtol * max(abs(v), abs(vn))
        err = max(abs(eu) / su, abs(ev) / sv)

        if err <= 1.0:
            rn = r + h
            if not math.isfinite(un) or abs(un) > _CAP_W or abs(vn) > _CAP_V:
                status = DIVERGED
                break
            r, u, v = rn, un, vn
            r_arr[n], u_arr[n], v_arr[n] = r, u, v
            n += 1
            if r >= r1 * (1.0 - 1e-15):
                break
        if err == 0.0:
            fac = 5.0
        else:
            fac = 0.9 * err ** (-0.2)
            if fac > 5.0:
                fac = 5.0
            elif fac < 0.1:
                fac = 0.1
        h *= fac
        if h < 1e-16 * r1:
            status = STEP_UNDERFLOW
            break
    return status, n, r_arr[:n], u_arr[:n], v_arr[:n]
