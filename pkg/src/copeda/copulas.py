"""Parametric bivariate copulas and the multivariate normal copula.

Families: product (independence), normal, Student t, Clayton, Frank and
Gumbel.  Each family supports density, CDF, conditional distribution
(h-function), inverse h-function, sampling and moment-based parameter
estimation through Kendall's tau.  Clayton and Gumbel are evaluated in log
space so that extreme dependence parameters do not overflow; Frank with
negative dependence is routed through the reflection ``u -> 1 - u``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.stats import t as _tdist

INTERIOR_EPS = 1e-10       # clamp for (0,1) arguments of densities and h
RHO_MAX = 1.0 - 1e-8       # largest admissible |rho| for normal/Student
FRANK_THETA_MAX = 300.0    # |theta| cap keeping exp(-theta*(u+v)) in range
STUDENT_NU_MIN = 1.0
STUDENT_NU_MAX = 100.0
HINV_TOL = 1e-10           # bisection tolerance for the Gumbel h-inverse


class CopulaFamily(str, Enum):
    PRODUCT = "product"
    NORMAL = "normal"
    STUDENT = "student"
    CLAYTON = "clayton"
    FRANK = "frank"
    GUMBEL = "gumbel"


class ParameterError(ValueError):
    """Copula parameter outside the family's admissible domain."""


class UnsupportedTauError(ValueError):
    """Kendall tau not attainable by the requested family."""


@dataclass(frozen=True)
class BivariateCopula:
    """A parametric bivariate copula: family tag plus parameters.

    ``theta`` is the dependence parameter (the correlation rho for the
    normal and Student families); ``nu`` is the Student degrees of freedom
    and is ignored by every other family.
    """

    family: CopulaFamily
    theta: float = 0.0
    nu: float = math.nan

    def __post_init__(self):
        f, th = self.family, self.theta
        if f in (CopulaFamily.NORMAL, CopulaFamily.STUDENT):
            if not -1.0 < th < 1.0:
                raise ParameterError(f"{f.value}: rho must be in (-1, 1), got {th}")
        elif f is CopulaFamily.CLAYTON:
            if not th > 0.0:
                raise ParameterError(f"clayton: theta must be > 0, got {th}")
        elif f is CopulaFamily.GUMBEL:
            if not th >= 1.0:
                raise ParameterError(f"gumbel: theta must be >= 1, got {th}")
        elif f is CopulaFamily.FRANK:
            if th == 0.0 or not math.isfinite(th):
                raise ParameterError("frank: theta must be finite and nonzero")
            if abs(th) > FRANK_THETA_MAX:
                raise ParameterError(f"frank: |theta| capped at {FRANK_THETA_MAX}")
        if f is CopulaFamily.STUDENT and not self.nu >= STUDENT_NU_MIN:
            raise ParameterError(f"student: nu must be >= {STUDENT_NU_MIN}, got {self.nu}")

    @property
    def n_params(self) -> int:
        if self.family is CopulaFamily.PRODUCT:
            return 0
        return 2 if self.family is CopulaFamily.STUDENT else 1


def product() -> BivariateCopula:
    return BivariateCopula(CopulaFamily.PRODUCT)


def normal(rho: float) -> BivariateCopula:
    return BivariateCopula(CopulaFamily.NORMAL, float(rho))


def student(rho: float, nu: float) -> BivariateCopula:
    return BivariateCopula(CopulaFamily.STUDENT, float(rho), float(nu))


def clayton(theta: float) -> BivariateCopula:
    return BivariateCopula(CopulaFamily.CLAYTON, float(theta))


def frank(theta: float) -> BivariateCopula:
    return BivariateCopula(CopulaFamily.FRANK, float(theta))


def gumbel(theta: float) -> BivariateCopula:
    return BivariateCopula(CopulaFamily.GUMBEL, float(theta))


def _interior(u):
    return np.clip(np.asarray(u, dtype=float), INTERIOR_EPS, 1.0 - INTERIOR_EPS)


def _as_result(x, *inputs):
    """Return a float when every input was scalar, else the array."""
    if all(np.ndim(i) == 0 for i in inputs):
        return float(x)
    return x


# ---------------------------------------------------------------------------
# log densities


def _normal_logpdf(rho, u, v):
    x = special.ndtri(u)
    y = special.ndtri(v)
    r2 = 1.0 - rho * rho
    return -0.5 * np.log(r2) + (2.0 * rho * x * y - rho * rho * (x * x + y * y)) / (2.0 * r2)


def _student_logpdf(rho, nu, u, v):
    x = _tdist.ppf(u, nu)
    y = _tdist.ppf(v, nu)
    r2 = 1.0 - rho * rho
    q = (x * x - 2.0 * rho * x * y + y * y) / r2
    const = (special.gammaln((nu + 2.0) / 2.0) + special.gammaln(nu / 2.0)
             - 2.0 * special.gammaln((nu + 1.0) / 2.0))
    return (const - 0.5 * np.log(r2)
            - 0.5 * (nu + 2.0) * np.log1p(q / nu)
            + 0.5 * (nu + 1.0) * (np.log1p(x * x / nu) + np.log1p(y * y / nu)))


def _clayton_logS(theta, u, v):
    # log(u^-theta + v^-theta - 1), stable for large theta
    a = -theta * np.log(u)
    b = -theta * np.log(v)
    m = np.maximum(a, b)
    return m + np.log(np.exp(a - m) + np.exp(b - m) - np.exp(-m))


def _clayton_logpdf(theta, u, v):
    s = _clayton_logS(theta, u, v)
    return (np.log1p(theta) - (theta + 1.0) * (np.log(u) + np.log(v))
            - (2.0 + 1.0 / theta) * s)


def _frank_logD(theta, u, v):
    # log of e^{-theta u} + e^{-theta v} - e^{-theta(u+v)} - e^{-theta}, theta > 0
    a = -theta * u
    b = -theta * v
    m = np.maximum(a, b)
    return m + np.log(np.exp(a - m) + np.exp(b - m)
                      - np.exp(a + b - m) - np.exp(-theta - m))


def _frank_logpdf(theta, u, v):
    # positive theta only; negative handled by reflection at the dispatcher
    return (np.log(theta) + np.log(-np.expm1(-theta)) - theta * (u + v)
            - 2.0 * _frank_logD(theta, u, v))


def _gumbel_parts(theta, u, v):
    lx = np.log(-np.log(u))
    ly = np.log(-np.log(v))
    a = theta * lx
    b = theta * ly
    m = np.maximum(a, b)
    log_s = m + np.log(np.exp(a - m) + np.exp(b - m))  # log((-log u)^th + (-log v)^th)
    log_cdf = -np.exp(log_s / theta)
    return lx, ly, log_s, log_cdf


def _gumbel_logpdf(theta, u, v):
    lx, ly, log_s, log_cdf = _gumbel_parts(theta, u, v)
    bracket = np.log1p((theta - 1.0) * np.exp(-log_s / theta))
    return (log_cdf - np.log(u) - np.log(v) + (theta - 1.0) * (lx + ly)
            + (2.0 / theta - 2.0) * log_s + bracket)


def copula_logpdf(c: BivariateCopula, u, v):
    """Log density of the copula at interior-clamped ``(u, v)``."""
    uu, vv = _interior(u), _interior(v)
    f = c.family
    if f is CopulaFamily.PRODUCT:
        out = np.zeros(np.broadcast(uu, vv).shape)
    elif f is CopulaFamily.NORMAL:
        out = _normal_logpdf(c.theta, uu, vv)
    elif f is CopulaFamily.STUDENT:
        out = _student_logpdf(c.theta, c.nu, uu, vv)
    elif f is CopulaFamily.CLAYTON:
        out = _clayton_logpdf(c.theta, uu, vv)
    elif f is CopulaFamily.FRANK:
        if c.theta > 0:
            out = _frank_logpdf(c.theta, uu, vv)
        else:
            out = _frank_logpdf(-c.theta, 1.0 - uu, vv)
    else:
        out = _gumbel_logpdf(c.theta, uu, vv)
    return _as_result(out, u, v)


def copula_pdf(c: BivariateCopula, u, v):
    """Copula density c(u, v); finite at interior points."""
    return _as_result(np.exp(copula_logpdf(c, u, v)), u, v)


# ---------------------------------------------------------------------------
# CDFs


def _bvn_cdf(x, y, rho):
    """Standard bivariate normal CDF via Owen's T function."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if abs(rho) < 1e-14:
        return special.ndtr(x) * special.ndtr(y)
    if rho > 1.0 - 1e-14:
        return special.ndtr(np.minimum(x, y))
    if rho < -1.0 + 1e-14:
        return np.clip(special.ndtr(x) + special.ndtr(y) - 1.0, 0.0, None)
    # nudge exact zeros so the a-arguments below stay finite
    xs = np.where(x == 0.0, 1e-300, x)
    ys = np.where(y == 0.0, 1e-300, y)
    r = math.sqrt(1.0 - rho * rho)
    ax = np.clip((ys - rho * xs) / (xs * r), -1e10, 1e10)
    ay = np.clip((xs - rho * ys) / (ys * r), -1e10, 1e10)
    delta = np.where(xs * ys < 0, 0.5, 0.0)
    out = (0.5 * (special.ndtr(xs) + special.ndtr(ys))
           - special.owens_t(xs, ax) - special.owens_t(ys, ay) - delta)
    return np.clip(out, 0.0, 1.0)


def _student_cdf_point(rho, nu, u, v):
    # C(u, v) = int_0^v h(u | t) dt; the integrand is smooth and bounded
    val, _ = quad(lambda t: _student_h(rho, nu, u, t), 0.0, v,
                  epsabs=1e-6, epsrel=1e-8, limit=200)
    return min(max(val, 0.0), 1.0)


def _cdf_interior(c: BivariateCopula, u, v):
    f = c.family
    if f is CopulaFamily.PRODUCT:
        return u * v
    if f is CopulaFamily.NORMAL:
        return _bvn_cdf(special.ndtri(u), special.ndtri(v), c.theta)
    if f is CopulaFamily.STUDENT:
        flat_u, flat_v = np.ravel(u), np.ravel(v)
        flat_u, flat_v = np.broadcast_arrays(flat_u, flat_v)
        vals = np.array([_student_cdf_point(c.theta, c.nu, a, b)
                         for a, b in zip(flat_u, flat_v)])
        return vals.reshape(np.broadcast(u, v).shape)
    if f is CopulaFamily.CLAYTON:
        return np.exp(-_clayton_logS(c.theta, u, v) / c.theta)
    if f is CopulaFamily.FRANK:
        if c.theta > 0:
            # C = -(1/theta) * log(D / (1 - e^-theta)) with D in log space
            log_d = _frank_logD(c.theta, u, v)
            return -(log_d - np.log1p(-np.exp(-c.theta))) / c.theta
        return v - _cdf_interior(frank(-c.theta), 1.0 - u, v)
    _, _, _, log_cdf = _gumbel_parts(c.theta, u, v)
    return np.exp(log_cdf)


def copula_cdf(c: BivariateCopula, u, v):
    """Copula CDF with exact boundary behavior C(u,0)=0, C(u,1)=u."""
    ua = np.asarray(u, dtype=float)
    va = np.asarray(v, dtype=float)
    res = np.asarray(_cdf_interior(c, _interior(ua), _interior(va)), dtype=float)
    res = np.where(va >= 1.0, np.clip(ua, 0.0, 1.0), res)
    res = np.where(ua >= 1.0, np.clip(va, 0.0, 1.0), res)
    res = np.where((ua <= 0.0) | (va <= 0.0), 0.0, res)
    return _as_result(np.clip(res, 0.0, 1.0), u, v)


# ---------------------------------------------------------------------------
# h-functions (conditional CDF of U given V = v) and their inverses


def _normal_h(rho, u, v):
    x = special.ndtri(u)
    y = special.ndtri(v)
    return special.ndtr((x - rho * y) / math.sqrt(1.0 - rho * rho))


def _normal_hinv(rho, p, v):
    y = special.ndtri(v)
    x = special.ndtri(p) * math.sqrt(1.0 - rho * rho) + rho * y
    return special.ndtr(x)


def _student_h(rho, nu, u, v):
    x = _tdist.ppf(u, nu)
    y = _tdist.ppf(v, nu)
    denom = np.sqrt((nu + y * y) * (1.0 - rho * rho) / (nu + 1.0))
    return _tdist.cdf((x - rho * y) / denom, nu + 1.0)


def _student_hinv(rho, nu, p, v):
    y = _tdist.ppf(v, nu)
    denom = np.sqrt((nu + y * y) * (1.0 - rho * rho) / (nu + 1.0))
    x = _tdist.ppf(p, nu + 1.0) * denom + rho * y
    return _tdist.cdf(x, nu)


def _clayton_h(theta, u, v):
    s = _clayton_logS(theta, u, v)
    return np.exp(-(theta + 1.0) * np.log(v) - (1.0 + 1.0 / theta) * s)


def _clayton_hinv(theta, p, v):
    # u = [(p v^(theta+1))^(-theta/(theta+1)) - v^-theta + 1]^(-1/theta)
    t1 = (-theta / (theta + 1.0)) * (np.log(p) + (theta + 1.0) * np.log(v))
    t2 = -theta * np.log(v)
    inner = t1 + np.log(1.0 - np.exp(t2 - t1) + np.exp(-t1))
    return np.exp(-inner / theta)


def _frank_h(theta, u, v):
    # positive theta; log-space form avoids cancellation at large theta
    log_h = np.log1p(-np.exp(-theta * u)) - theta * v - _frank_logD(theta, u, v)
    return np.exp(log_h)


def _frank_hinv(theta, p, v):
    beta = np.exp(-theta * v)
    gamma = math.exp(-theta)
    alpha = (beta * (1.0 - p) + p * gamma) / (beta + p * (1.0 - beta))
    return -np.log(alpha) / theta


def _gumbel_h(theta, u, v):
    _, ly, log_s, log_cdf = _gumbel_parts(theta, u, v)
    return np.exp(log_cdf + (theta - 1.0) * ly + (1.0 / theta - 1.0) * log_s - np.log(v))


def _gumbel_hinv(theta, p, v):
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    p_b, v_b = np.broadcast_arrays(p, v)
    lo = np.full(p_b.shape, INTERIOR_EPS)
    hi = np.full(p_b.shape, 1.0 - INTERIOR_EPS)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        too_low = _gumbel_h(theta, mid, v_b) < p_b
        lo = np.where(too_low, mid, lo)
        hi = np.where(too_low, hi, mid)
        if np.max(hi - lo) < HINV_TOL * 1e-3:
            break
    return 0.5 * (lo + hi)


def copula_h(c: BivariateCopula, u, v):
    """Conditional CDF of U given V = v (the partial derivative of C in v)."""
    uu, vv = _interior(u), _interior(v)
    f = c.family
    if f is CopulaFamily.PRODUCT:
        out = uu * np.ones_like(vv)
    elif f is CopulaFamily.NORMAL:
        out = _normal_h(c.theta, uu, vv)
    elif f is CopulaFamily.STUDENT:
        out = _student_h(c.theta, c.nu, uu, vv)
    elif f is CopulaFamily.CLAYTON:
        out = _clayton_h(c.theta, uu, vv)
    elif f is CopulaFamily.FRANK:
        if c.theta > 0:
            out = _frank_h(c.theta, uu, vv)
        else:
            out = 1.0 - _frank_h(-c.theta, 1.0 - uu, vv)
    else:
        out = _gumbel_h(c.theta, uu, vv)
    return _as_result(np.clip(out, 0.0, 1.0), u, v)


def copula_hinv(c: BivariateCopula, p, v):
    """Inverse of the h-function in its first argument.

    The probability ``p`` is guarded against exact 0/1 only: conditional
    probabilities far below the interior clamp are meaningful (strong
    dependence pushes h to ~1e-25 at grid corners) and must invert exactly.
    """
    pp = np.clip(np.asarray(p, dtype=float), 1e-300, 1.0 - 1e-16)
    vv = _interior(v)
    f = c.family
    if f is CopulaFamily.PRODUCT:
        out = pp * np.ones_like(vv)
    elif f is CopulaFamily.NORMAL:
        out = _normal_hinv(c.theta, pp, vv)
    elif f is CopulaFamily.STUDENT:
        out = _student_hinv(c.theta, c.nu, pp, vv)
    elif f is CopulaFamily.CLAYTON:
        out = _clayton_hinv(c.theta, pp, vv)
    elif f is CopulaFamily.FRANK:
        if c.theta > 0:
            out = _frank_hinv(c.theta, pp, vv)
        else:
            out = 1.0 - _frank_hinv(-c.theta, 1.0 - pp, vv)
    else:
        out = _gumbel_hinv(c.theta, pp, vv)
    return _as_result(np.clip(out, INTERIOR_EPS, 1.0 - INTERIOR_EPS), p, v)


# ---------------------------------------------------------------------------
# sampling


def copula_sample(c: BivariateCopula, m: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``m`` pairs by the conditional distribution method.

    V is uniform, W is uniform and U = hinv(W | V), so the pair (U, V) has
    uniform margins and the dependence of ``c``.
    """
    v = rng.random(m)
    w = rng.random(m)
    u = copula_hinv(c, w, v)
    return np.column_stack([u, v])


def mvnormal_copula_sample(correlation: np.ndarray, m: int,
                           rng: np.random.Generator) -> np.ndarray:
    """Sample from the multivariate normal copula with the given correlation."""
    corr = np.asarray(correlation, dtype=float)
    chol = np.linalg.cholesky(corr)
    z = rng.standard_normal((m, corr.shape[0])) @ chol.T
    return special.ndtr(z)


# ---------------------------------------------------------------------------
# Kendall tau conversions


def clip_tau(tau: float) -> float:
    """Clamp an empirical tau away from +-1 so moment inversion stays valid.

    Exact ties and comonotone pairs do occur in nearly converged selected
    populations.
    """
    return float(np.clip(tau, -(1.0 - 1e-8), 1.0 - 1e-8))


def _debye1(theta: float) -> float:
    """First Debye function D1(theta) = (1/theta) * int_0^theta t/(e^t - 1) dt."""

    def integrand(t):
        if abs(t) < 1e-12:
            return 1.0
        return t / math.expm1(t)

    val, _ = quad(integrand, 0.0, theta, limit=200)
    return val / theta


def _frank_tau(theta: float) -> float:
    # tau(theta) = 1 - (4/theta) * (1 - D1(theta)); odd in theta
    sign = 1.0 if theta > 0 else -1.0
    th = abs(theta)
    return sign * (1.0 - 4.0 / th * (1.0 - _debye1(th)))


def tau_to_parameter(family: CopulaFamily, tau: float) -> BivariateCopula:
    """Moment fit: copula of the family whose theoretical tau matches ``tau``.

    A tau of zero collapses to the product copula for every family.  Clayton
    and Gumbel cannot represent negative dependence and raise
    :class:`UnsupportedTauError` for tau <= 0.
    """
    tau = float(tau)
    if not -1.0 < tau < 1.0:
        raise ParameterError(f"tau must be in (-1, 1), got {tau}")
    if family is CopulaFamily.PRODUCT or tau == 0.0:
        return product()
    if family in (CopulaFamily.NORMAL, CopulaFamily.STUDENT):
        rho = float(np.clip(math.sin(math.pi * tau / 2.0), -RHO_MAX, RHO_MAX))
        if family is CopulaFamily.NORMAL:
            return normal(rho)
        return student(rho, 30.0)  # placeholder nu; refine with fit_student_dof
    if family is CopulaFamily.CLAYTON:
        if tau <= 0.0:
            raise UnsupportedTauError("clayton requires tau > 0")
        return clayton(2.0 * tau / (1.0 - tau))
    if family is CopulaFamily.GUMBEL:
        if tau <= 0.0:
            raise UnsupportedTauError("gumbel requires tau > 0")
        return gumbel(1.0 / (1.0 - tau))
    # Frank: invert tau(theta) numerically on theta > 0, use odd symmetry
    target = abs(tau)
    if target >= _frank_tau(FRANK_THETA_MAX):
        theta = FRANK_THETA_MAX
    else:
        theta = brentq(lambda t: _frank_tau(t) - target, 1e-10, FRANK_THETA_MAX,
                       xtol=1e-12, rtol=8.9e-16)
    return frank(math.copysign(theta, tau))


def parameter_to_tau(c: BivariateCopula) -> float:
    """Theoretical Kendall tau of the copula."""
    f = c.family
    if f is CopulaFamily.PRODUCT:
        return 0.0
    if f in (CopulaFamily.NORMAL, CopulaFamily.STUDENT):
        return 2.0 * math.asin(c.theta) / math.pi
    if f is CopulaFamily.CLAYTON:
        return c.theta / (c.theta + 2.0)
    if f is CopulaFamily.GUMBEL:
        return 1.0 - 1.0 / c.theta
    return _frank_tau(c.theta)


# ---------------------------------------------------------------------------
# likelihood


def copula_loglik(c: BivariateCopula, U: np.ndarray) -> float:
    """Sum of log densities over the rows of an (m, 2) matrix."""
    U = np.asarray(U, dtype=float)
    return float(np.sum(copula_logpdf(c, U[:, 0], U[:, 1])))


def fit_student_dof(U: np.ndarray, rho: float) -> BivariateCopula:
    """Profile-likelihood fit of the Student degrees of freedom.

    Golden-section search on log(nu) over [1, 100] with the correlation held
    fixed; the tolerance is 1e-3 on nu, which costs about thirty likelihood
    evaluations.
    """
    rho = float(np.clip(rho, -RHO_MAX, RHO_MAX))
    lo, hi = math.log(STUDENT_NU_MIN), math.log(STUDENT_NU_MAX)
    invphi = (math.sqrt(5.0) - 1.0) / 2.0

    def score(log_nu):
        return copula_loglik(student(rho, math.exp(log_nu)), U)

    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = score(x1), score(x2)
    while hi - lo > 1e-5:
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = score(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = score(x2)
    return student(rho, math.exp(0.5 * (lo + hi)))
