"""Closed-form exponents, critical constants and regime classification.

Everything here concerns the equation

    -Delta(u) + u^p - M*|grad u|^q = 0,   p > 1, 1 < q < 2, M >= 0,

on (part of) R^N.  The balance between the absorption term u^p and the
gradient source M*|grad u|^q is governed by three exponents

    alpha = 2/(p-1),   beta = (2-q)/(q-1),   gamma = q/(p-q)  (q < p),

which coincide exactly on the critical line q = 2p/(p+1).  The module also
evaluates the explicit thresholds (non-existence constant m**, sufficient
existence constant M_Np, whole-sphere tangency constant m*, eikonal
amplitude omega0, and xi_M) and finds the positive roots of the polynomial
whose roots are the constant separable profiles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "Params",
    "ExponentSet",
    "CriticalConstants",
    "RegimeReport",
    "PolyRoot",
    "ParameterDomainError",
    "exponents",
    "classify",
    "m_star_star",
    "m_star_star_r",
    "m_star",
    "critical_constants",
    "constant_profile_poly",
    "constant_profile_roots",
]

# tolerance used for "on the critical line" floating-point comparisons
_LINE_TOL = 1e-12


class ParameterDomainError(ValueError):
    """Raised when arguments fall outside an operation's parameter domain."""


@dataclass(frozen=True)
class Params:
    """Problem quadruple (N, p, q, M)."""

    N: int
    p: float
    q: float
    M: float = 0.0

    def __post_init__(self):
        if not (isinstance(self.N, int) and self.N >= 2):
            raise ParameterDomainError(f"N must be an integer >= 2, got {self.N}")
        if not (math.isfinite(self.p) and self.p > 1):
            raise ParameterDomainError(f"p must satisfy p > 1, got {self.p}")
        if not (math.isfinite(self.q) and 1 < self.q < 2):
            raise ParameterDomainError(f"q must satisfy 1 < q < 2, got {self.q}")
        if not (math.isfinite(self.M) and self.M >= 0):
            raise ParameterDomainError(f"M must satisfy M >= 0, got {self.M}")

    def to_dict(self):
        return {"N": self.N, "p": self.p, "q": self.q, "M": self.M}

    @classmethod
    def from_dict(cls, d):
        return cls(N=int(d["N"]), p=float(d["p"]), q=float(d["q"]), M=float(d["M"]))


@dataclass(frozen=True)
class ExponentSet:
    alpha: float
    beta: float
    gamma: float | None
    q_star: float
    p_crit: float
    q_bdry: float

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "q_star": self.q_star,
            "p_crit": self.p_crit,
            "q_bdry": self.q_bdry,
        }

    @classmethod
    def from_dict(cls, d):
        g = d.get("gamma")
        return cls(
            alpha=float(d["alpha"]),
            beta=float(d["beta"]),
            gamma=None if g is None else float(g),
            q_star=float(d["q_star"]),
            p_crit=float(d["p_crit"]),
            q_bdry=float(d["q_bdry"]),
        )


def exponents(params: Params) -> ExponentSet:
    """Exponent set for the given parameters.  gamma is absent when q >= p."""
    N, p, q = params.N, params.p, params.q
    alpha = 2.0 / (p - 1.0)
    beta = (2.0 - q) / (q - 1.0)
    gamma = q / (p - q) if q < p else None
    return ExponentSet(
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        q_star=2.0 * p / (p + 1.0),
        p_crit=(N + 1.0) / (N - 1.0),
        q_bdry=(N + 1.0) / N,
    )


def m_star_star(N: int, p: float) -> float:
    """Non-existence threshold for half-sphere profiles at q = 2p/(p+1).

    m** = (p+1) * (((N-1)p - (N+1)) / (2p))^(p/(p+1)), defined for
    p >= (N+1)/(N-1) (value 0 at the critical p).
    """
    if p < (N + 1.0) / (N - 1.0) - _LINE_TOL:
        raise ParameterDomainError(
            f"m** is defined for p >= (N+1)/(N-1); got N={N}, p={p}"
        )
    base = max(((N - 1.0) * p - (N + 1.0)) / (2.0 * p), 0.0)
    return (p + 1.0) * base ** (p / (p + 1.0))


def m_star_star_r(N: int, p: float, r: float) -> float:
    """Generalized threshold (p+1)*((p-r)/(p(r-1)))^(p/(p+1)).

    Domain: (N+1)/(N-1) <= r < p.  At the lower endpoint the value equals
    m**(N, p); as r -> p it tends to 0.
    """
    lo = (N + 1.0) / (N - 1.0)
    if not (lo - _LINE_TOL <= r < p):
        raise ParameterDomainError(
            f"r must lie in [(N+1)/(N-1), p) = [{lo}, {p}), got {r}"
        )
    return (p + 1.0) * ((p - r) / (p * (r - 1.0))) ** (p / (p + 1.0))


def m_star(N: int, p: float) -> float:
    """Whole-sphere tangency constant (p+1)*((p(N-2)-N)/(2p))^(p/(p+1)).

    Defined for N >= 3 and p > N/(N-2): the coefficient M at which the
    constant-profile polynomial acquires a double positive root.
    """
    if N < 3 or p <= N / (N - 2.0):
        raise ParameterDomainError(
            f"m* requires N >= 3 and p > N/(N-2); got N={N}, p={p}"
        )
    return (p + 1.0) * ((p * (N - 2.0) - N) / (2.0 * p)) ** (p / (p + 1.0))


def _M_Np(N: int, p: float) -> float:
    """Sufficient-existence constant: 0 for p <= (N+1)/(N-1), otherwise the
    smallest of the applicable sufficient branches."""
    p_crit = (N + 1.0) / (N - 1.0)
    if p <= p_crit + _LINE_TOL:
        return 0.0
    alpha = 2.0 / (p - 1.0)
    # A = N - 1 + alpha*(N - 2 - alpha) = (p+1)(p(N-1)-(N+1))/(p-1)^2 > 0 here
    A = N - 1.0 + alpha * (N - 2.0 - alpha)
    exp = p / (p + 1.0)
    branches = [(p + 1.0) * (A / (p * min(1.0, alpha * alpha))) ** exp]
    if 1.0 < p < 3.0:  # alpha > 1: improved denominators are available
        if alpha >= 2.0:
            f0 = (alpha + 2.0) * (alpha - 1.0) ** ((alpha + 1.0) / (alpha + 2.0))
            branches.append((p + 1.0) * (A / (p * f0)) ** exp)
        else:
            branches.append((p + 1.0) * (A / (p * alpha * alpha)) ** exp)
    return min(branches)


@dataclass(frozen=True)
class CriticalConstants:
    m_star_star: float | None
    M_Np: float
    m_star: float | None
    omega0: float | None
    xi_M: float | None

    def to_dict(self):
        return {
            "m_star_star": self.m_star_star,
            "M_Np": self.M_Np,
            "m_star": self.m_star,
            "omega0": self.omega0,
            "xi_M": self.xi_M,
        }

    @classmethod
    def from_dict(cls, d):
        g = lambda k: None if d.get(k) is None else float(d[k])
        return cls(g("m_star_star"), float(d["M_Np"]), g("m_star"), g("omega0"), g("xi_M"))


def critical_constants(params: Params) -> CriticalConstants:
    """All explicit constants that are defined at the given parameters."""
    N, p, q, M = params.N, params.p, params.q, params.M
    p_crit = (N + 1.0) / (N - 1.0)

    mss = m_star_star(N, p) if p >= p_crit - _LINE_TOL else None
    ms = m_star(N, p) if (N >= 3 and p > N / (N - 2.0)) else None

    omega0 = None
    if q < p and M > 0:
        gamma = q / (p - q)
        omega0 = gamma**gamma * M ** (1.0 / (p - q))

    xi = None
    if M > 0 and q > max(N / (N - 1.0), 2.0 * p / (p + 1.0)):
        beta = (2.0 - q) / (q - 1.0)
        xi = (1.0 / beta) * (((N - 1.0) * q - N) / (M * (p - 1.0))) ** (1.0 / (p - 1.0))

    return CriticalConstants(
        m_star_star=mss, M_Np=_M_Np(N, p), m_star=ms, omega0=omega0, xi_M=xi
    )


# ---------------------------------------------------------------------------
# regime classification
# ---------------------------------------------------------------------------

LABEL_REMOVABLE = "removable"
LABEL_WEAK = "weak-singularity-solvable"
LABEL_STRONG_ABS = "strong-singularity-absorption"
LABEL_STRONG_CRIT = "strong-singularity-critical"
LABEL_EIKONAL = "eikonal-dominated"
LABEL_INDET = "indeterminate"


@dataclass(frozen=True)
class RegimeReport:
    labels: frozenset[str]
    citations: dict = field(hash=False)

    def to_dict(self):
        return {"labels": sorted(self.labels), "citations": dict(self.citations)}

    @classmethod
    def from_dict(cls, d):
        return cls(labels=frozenset(d["labels"]), citations=dict(d["citations"]))


def classify(params: Params) -> RegimeReport:
    """Apply the removability / solvability / strong-singularity hypothesis
    checks literally; returns 'indeterminate' when no hypothesis is met
    (notably inside the open gap m** <= M < M_Np on the critical line)."""
    N, p, q, M = params.N, params.p, params.q, params.M
    q_star = 2.0 * p / (p + 1.0)
    p_crit = (N + 1.0) / (N - 1.0)
    q_bdry = (N + 1.0) / N

    on_p_crit = abs(p - p_crit) <= _LINE_TOL
    above_p_crit = p > p_crit + _LINE_TOL
    on_q_star = abs(q - q_star) <= _LINE_TOL
    on_q_bdry = abs(q - q_bdry) <= _LINE_TOL

    labels: set[str] = set()
    citations: dict[str, list[str]] = {}

    def tag(label, cite):
        labels.add(label)
        citations.setdefault(label, []).append(cite)

    # removability
    if on_p_crit and q < 1.0 + 1.0 / N - _LINE_TOL:
        tag(LABEL_REMOVABLE, "removability theorem, case (i): p = (N+1)/(N-1), q < 1 + 1/N")
    if above_p_crit and q < q_star - _LINE_TOL:
        tag(LABEL_REMOVABLE, "removability theorem, case (iii): p > (N+1)/(N-1), q < 2p/(p+1)")
    if above_p_crit and on_q_star and M < m_star_star(N, p) - _LINE_TOL:
        tag(LABEL_REMOVABLE, "removability theorem, case (iv): q = 2p/(p+1), M < m**")

    # weak singularity (fundamental solutions u_k exist)
    if p < p_crit - _LINE_TOL and q < q_bdry - _LINE_TOL:
        tag(LABEL_WEAK, "weak-singularity theorem: p < (N+1)/(N-1), q < (N+1)/N")

    # strong singularity
    if q <= q_star + _LINE_TOL and p < p_crit - _LINE_TOL:
        tag(LABEL_STRONG_ABS, "strong-singularity case (i): 1 < q <= 2p/(p+1), p < (N+1)/(N-1)")
    if on_p_crit and on_q_bdry:
        tag(LABEL_STRONG_CRIT, "strong-singularity case (ii): (p, q) = ((N+1)/(N-1), (N+1)/N)")

    # eikonal-dominated supercritical gradient regime
    if q_star + _LINE_TOL < q < min(2.0, p) - _LINE_TOL:
        tag(LABEL_EIKONAL, "supercritical-gradient theorem: 2p/(p+1) < q < min{2, p}")

    if not labels:
        tag(LABEL_INDET, "no theorem hypothesis met (open region)")

    return RegimeReport(labels=frozenset(labels), citations=citations)


# ---------------------------------------------------------------------------
# constant separable profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PolyRoot:
    value: float
    multiplicity: int = 1


def constant_profile_poly(N: int, p: float, M: float):
    """Return P with P(X) = X^(p-1) - M*alpha^(2p/(p+1))*X^((p-1)/(p+1))
    + alpha*(N-2-alpha); positive roots are the constant profiles."""
    alpha = 2.0 / (p - 1.0)
    coeff = M * alpha ** (2.0 * p / (p + 1.0))
    tail = alpha * (N - 2.0 - alpha)

    def P(x):
        return x ** (p - 1.0) - coeff * x ** ((p - 1.0) / (p + 1.0)) + tail

    return P


def constant_profile_roots(
    N: int, p: float, M: float, n_scan: int = 4096
) -> list[PolyRoot]:
    """All positive roots of the constant-profile polynomial.

    Sign-change scan on a log grid over [1e-8, 1e8] refined by bisection to
    1e-12 relative; tangency (double) roots detected as interior minima with
    |P| below 1e-9 of the local term magnitude and no sign change.
    """
    if N < 2 or p <= 1 or M < 0:
        raise ParameterDomainError(f"need N >= 2, p > 1, M >= 0; got {N}, {p}, {M}")
    P = constant_profile_poly(N, p, M)
    alpha = 2.0 / (p - 1.0)
    coeff = M * alpha ** (2.0 * p / (p + 1.0))
    tail = alpha * (N - 2.0 - alpha)

    lo, hi = 1e-8, 1e8
    ratio = (hi / lo) ** (1.0 / (n_scan - 1))
    xs = [lo * ratio**i for i in range(n_scan)]
    vals = [P(x) for x in xs]

    def scale(x):
        # characteristic magnitude of the polynomial's terms at x
        return max(x ** (p - 1.0), coeff * x ** ((p - 1.0) / (p + 1.0)), abs(tail), 1e-300)

    roots: list[PolyRoot] = []
    for i in range(n_scan - 1):
        a, b, fa, fb = xs[i], xs[i + 1], vals[i], vals[i + 1]
        if fa == 0.0:
            roots.append(PolyRoot(a))
            continue
        if fa * fb < 0.0:
            # bracketed bisection to 1e-12 relative
            while (b - a) > 1e-12 * b:
                m = 0.5 * (a + b)
                fm = P(m)
                if fm == 0.0:
                    a = b = m
                    break
                if fa * fm < 0.0:
                    b, fb = m, fm
                else:
                    a, fa = m, fm
            roots.append(PolyRoot(0.5 * (a + b)))
    if vals[-1] == 0.0:
        roots.append(PolyRoot(xs[-1]))

    # tangency detection: local minimum of P with tiny |P| and no sign change;
    # the minimum is refined as the (simple) root of the analytic derivative
    def dP(x):
        return (p - 1.0) * x ** (p - 2.0) - coeff * (
            (p - 1.0) / (p + 1.0)
        ) * x ** ((p - 1.0) / (p + 1.0) - 1.0)

    doubles: list[PolyRoot] = []
    for i in range(1, n_scan - 1):
        if vals[i] <= vals[i - 1] and vals[i] <= vals[i + 1] and vals[i] > 0.0:
            a, b = xs[i - 1], xs[i + 1]
            ga, gb = dP(a), dP(b)
            if not (ga < 0.0 < gb):
                continue
            while (b - a) > 1e-14 * b:
                m = 0.5 * (a + b)
                gm = dP(m)
                if gm == 0.0:
                    a = b = m
                    break
                if gm < 0.0:
                    a = m
                else:
                    b = m
            xm = 0.5 * (a + b)
            if abs(P(xm)) < 1e-9 * scale(xm):
                if not any(abs(r.value - xm) <= 1e-6 * xm for r in roots):
                    doubles.append(PolyRoot(xm, multiplicity=2))

    roots.extend(doubles)
    roots.sort(key=lambda r: r.value)
    return roots
