"""Nonparametric dependence statistics and tests.

Kendall's tau, pseudo-observations, the empirical copula, a permutation
Cramer-von Mises independence test, CvM goodness-of-fit copula selection,
copula-entropy mutual information, and positive-definite repair of
correlation matrices.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .copulas import (
    BivariateCopula,
    CopulaFamily,
    UnsupportedTauError,
    clip_tau,
    copula_cdf,
    copula_logpdf,
    copula_sample,
    fit_student_dof,
    product,
    tau_to_parameter,
)

EIG_FLOOR = 1e-8  # smallest eigenvalue kept by the PD repair


class DegenerateDataWarning(UserWarning):
    """A dependence statistic was requested on constant data."""


def kendall_tau(x, y) -> float:
    """Tie-corrected Kendall tau-b of two equally long vectors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValueError("kendall_tau needs two equally long vectors, m >= 2")
    if np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
        warnings.warn("constant input vector; tau set to 0",
                      DegenerateDataWarning, stacklevel=2)
        return 0.0
    tau = stats.kendalltau(x, y).statistic
    return float(tau) if np.isfinite(tau) else 0.0


def kendall_tau_matrix(X) -> np.ndarray:
    """Symmetric matrix of pairwise tau-b values with unit diagonal."""
    X = np.asarray(X, dtype=float)
    n = X.shape[1]
    out = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = kendall_tau(X[:, i], X[:, j])
    return out


def pseudo_observations(X) -> np.ndarray:
    """Column-wise rank/(m+1) transform with average ranks on ties."""
    X = np.asarray(X, dtype=float)
    m = X.shape[0]
    U = np.empty_like(X)
    for j in range(X.shape[1]):
        U[:, j] = stats.rankdata(X[:, j], method="average") / (m + 1.0)
    return U


def empirical_copula_at(U, u: float, v: float) -> float:
    """Empirical copula of a two-column sample at the point (u, v)."""
    U = np.asarray(U, dtype=float)
    return float(np.mean((U[:, 0] <= u) & (U[:, 1] <= v)))


def _empirical_copula_at_sample(le_u: np.ndarray, le_v: np.ndarray) -> np.ndarray:
    # C_n at the sample points from precomputed "<=" indicator matrices
    return (le_u & le_v).mean(axis=1)


@dataclass(frozen=True)
class IndepTestResult:
    statistic: float
    p_value: float
    independent: bool


def indep_test_cvm(u, v, replicates: int = 100,
                   rng: np.random.Generator | None = None,
                   sig_level: float = 0.01) -> IndepTestResult:
    """Cramer-von Mises independence test with a permutation p-value.

    The statistic is ``sum_i (C_n(u_i, v_i) - u_i v_i)^2``; the p-value is
    the fraction of replicates (one margin permuted) at least as large as
    the observed statistic, with the (r + 1) / (B + 1) correction.
    """
    if rng is None:
        rng = np.random.default_rng()
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    m = u.size
    le_u = u[None, :] <= u[:, None]   # le_u[i, k] = (u_k <= u_i)
    le_v = v[None, :] <= v[:, None]
    cn = _empirical_copula_at_sample(le_u, le_v)
    observed = float(np.sum((cn - u * v) ** 2))
    exceed = 0
    for _ in range(replicates):
        perm = rng.permutation(m)
        cn_p = _empirical_copula_at_sample(le_u, le_v[np.ix_(perm, perm)])
        stat = float(np.sum((cn_p - u * v[perm]) ** 2))
        if stat >= observed:
            exceed += 1
    p_value = (exceed + 1.0) / (replicates + 1.0)
    return IndepTestResult(observed, p_value, p_value >= sig_level)


def gof_select_copula(u, v, candidates) -> BivariateCopula:
    """Moment-fit each candidate family and keep the CvM-closest one.

    Each feasible candidate is fitted by tau inversion (the Student family
    additionally gets a profile-likelihood degrees-of-freedom fit) and
    scored by ``sum_i (C_n(u_i, v_i) - C_theta(u_i, v_i))^2`` evaluated at
    the pseudo-observations of the input, which removes marginal noise from
    the comparison.  Families that cannot represent the observed tau are
    skipped; if every candidate is skipped the product copula is returned.
    """
    U = pseudo_observations(np.column_stack([u, v]))
    u, v = U[:, 0], U[:, 1]
    tau = clip_tau(kendall_tau(u, v))
    le_u = u[None, :] <= u[:, None]
    le_v = v[None, :] <= v[:, None]
    cn = _empirical_copula_at_sample(le_u, le_v)
    best: BivariateCopula | None = None
    best_stat = np.inf
    for family in candidates:
        family = CopulaFamily(family)
        if family is CopulaFamily.PRODUCT:
            continue
        try:
            cop = tau_to_parameter(family, tau)
        except UnsupportedTauError:
            continue
        if family is CopulaFamily.STUDENT and cop.family is CopulaFamily.STUDENT:
            cop = fit_student_dof(np.column_stack([u, v]), cop.theta)
        stat = float(np.sum((cn - copula_cdf(cop, u, v)) ** 2))
        if stat < best_stat:
            best, best_stat = cop, stat
    return best if best is not None else product()


def copula_mutual_information(c: BivariateCopula,
                              rng: np.random.Generator | None = None,
                              samples: int = 100) -> float:
    """Mutual information of the coupled pair via the copula entropy.

    The normal family has the closed form -log(1 - rho^2)/2; other families
    are estimated by a Monte-Carlo average of the log density over draws
    from the copula itself.  The estimate is floored at zero.
    """
    if c.family is CopulaFamily.NORMAL:
        return float(-0.5 * np.log1p(-c.theta * c.theta))
    if c.family is CopulaFamily.PRODUCT:
        return 0.0
    if rng is None:
        rng = np.random.default_rng()
    U = copula_sample(c, samples, rng)
    mi = float(np.mean(copula_logpdf(c, U[:, 0], U[:, 1])))
    return max(mi, 0.0)


def make_positive_definite(R) -> np.ndarray:
    """Repair a correlation matrix so a Cholesky factorization exists.

    A matrix that already factorizes is returned unchanged.  Otherwise the
    eigenvalues are floored at 1e-8, the matrix is reconstructed and
    rescaled back to unit diagonal.
    """
    R = np.asarray(R, dtype=float)
    R = 0.5 * (R + R.T)
    np.fill_diagonal(R, 1.0)
    current = R
    for _ in range(20):
        try:
            np.linalg.cholesky(current)
            return current
        except np.linalg.LinAlgError:
            pass
        eigval, eigvec = np.linalg.eigh(current)
        eigval = np.maximum(eigval, EIG_FLOOR)
        rebuilt = (eigvec * eigval) @ eigvec.T
        d = np.sqrt(np.diag(rebuilt))
        rebuilt = rebuilt / np.outer(d, d)
        rebuilt = 0.5 * (rebuilt + rebuilt.T)
        np.fill_diagonal(rebuilt, 1.0)
        current = rebuilt
    return current
