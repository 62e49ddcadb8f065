"""Exact risk of the MAP estimator and its explicit-constant upper bounds.

The estimation error splits exactly into a squared bias plus two noise
variance terms: one propagated through the novel task's responses and one
through the hyper-mean estimate. All expectations here are frequentist --
task parameters fixed, noise alone random -- with a Monte-Carlo path that
re-runs the estimator on fresh noise draws as an independent cross-check
(optionally redrawing the task parameters as well for Bayes-averaged
curves).

The upper bounds mirror the singular-value chains behind the headline risk
bound. Each is evaluated step by step from the constant ledger so every
factor is auditable; where the derivation's intermediate and final printed
forms disagree about constant placement, the step-by-step verified chain is
canonical and the headline form is reported alongside.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matan
from .exceptions import DomainError, NoSourceTasksError
from .model import BoundConstants, Environment, derived_ledger, substream
from .posterior import MAX_CONDITION

_MC_SOURCE_NOISE = 4
_MC_NOVEL_NOISE = 5
_MC_SOURCE_THETA = 6
_MC_NOVEL_THETA = 7


@dataclass(frozen=True)
class RiskReport:
    """Exact bias/variance split with an optional Monte-Carlo cross-check."""

    bias_sq: float
    var_novel: float
    var_source: float
    total: float
    mc_mean: float | None = None
    mc_se: float | None = None


@dataclass(frozen=True)
class UpperBoundReport:
    """All explicit upper-bound values for one (M, n, k) configuration.

    ``rate_c`` and ``rate_d`` are the two effective-sample-size factors of
    the headline bound ``value = d * sigma_novel_sq * rate_c**-2 * rate_d *
    proof_constant``; ``value`` itself is the sum of the variance and bias
    bounds, so the proof constant is exactly ``value / (d * sigma_novel_sq *
    rate_c**-2 * rate_d)`` and never silently one.
    """

    variance_bound: float
    bias_bound: float
    smax_bound: float
    d1: float
    d2: float
    rate_c: float
    rate_d: float
    value: float
    asymptotic_value: float


class _Decomposition:
    """Factorized pieces of an environment shared by the exact formulas.

    The per-task solves ``Z_i = C_i^-1 X_i`` are data-independent, so both
    the closed-form moments and the batched Monte-Carlo evaluation reuse
    them; the Monte-Carlo path still runs the estimator itself on every
    sampled response vector.
    """

    def __init__(self, env: Environment):
        if env.num_source == 0:
            raise NoSourceTasksError("risk of the MAP estimator needs at least one source task")
        self.env = env
        d = env.d
        s2th = env.prior.sigma_theta_sq
        self.zs = []
        prec = np.zeros((d, d))
        cov_mu_inner = np.zeros((d, d))
        acc = np.zeros(d)
        for task in env.source_tasks:
            cmat = s2th * (task.design @ task.design.T)
            cmat[np.diag_indices_from(cmat)] += task.noise_sq
            z = matan.solve_spd(cmat, task.design, max_condition=MAX_CONDITION, name="per-task covariance")
            self.zs.append(z)
            prec += task.design.T @ z
            cov_mu_inner += task.noise_sq * (z.T @ z)
            acc += z.T @ (task.design @ task.theta)
        prec = 0.5 * (prec + prec.T)
        eye = np.eye(d)
        self.tau_cov = matan.solve_spd(prec, eye, max_condition=MAX_CONDITION, name="tau precision")
        self.tau_cov = 0.5 * (self.tau_cov + self.tau_cov.T)
        self.mean_mu_tau = self.tau_cov @ acc
        self.cov_mu_tau = self.tau_cov @ cov_mu_inner @ self.tau_cov

        cov0 = self.tau_cov.copy()
        cov0[np.diag_indices_from(cov0)] += s2th
        self.cov0 = cov0
        self.g = matan.solve_spd(cov0, eye, max_condition=MAX_CONDITION, name="pre-data covariance")
        self.g = 0.5 * (self.g + self.g.T)
        novel = env.novel_task
        self.f = (novel.design.T @ novel.design) / novel.noise_sq
        self.post_cov = matan.solve_spd(self.f + self.g, eye, max_condition=MAX_CONDITION, name="novel precision")
        self.post_cov = 0.5 * (self.post_cov + self.post_cov.T)

    def bias_vector(self) -> np.ndarray:
        return self.post_cov @ (self.g @ (self.mean_mu_tau - self.env.novel_task.theta))

    def variances(self) -> tuple[float, float]:
        novel = self.env.novel_task
        var_novel = float(np.sum((novel.design @ self.post_cov) ** 2) / novel.noise_sq)
        w = self.g @ self.post_cov
        var_source = float(np.sum(w * (self.cov_mu_tau @ w)))
        return var_novel, var_source


def exact_bias(env: Environment) -> np.ndarray:
    """Expected estimation error vector, E[theta_hat] - theta_novel."""
    return _Decomposition(env).bias_vector()


def exact_variance(env: Environment) -> tuple[float, float]:
    """Trace of the estimator covariance, split by noise source.

    Returns ``(var_novel, var_source)``: the part driven by novel-task noise
    and the part propagated through the hyper-mean estimate.
    """
    return _Decomposition(env).variances()


def exact_risk(env: Environment) -> RiskReport:
    """Closed-form frequentist risk E||theta_hat - theta_novel||^2."""
    dec = _Decomposition(env)
    bias = dec.bias_vector()
    var_novel, var_source = dec.variances()
    bias_sq = float(bias @ bias)
    return RiskReport(
        bias_sq=bias_sq,
        var_novel=var_novel,
        var_source=var_source,
        total=bias_sq + var_novel + var_source,
    )


def mc_risk(env: Environment, reps: int, seed: int = 0, *, redraw_thetas: bool = False) -> tuple[float, float]:
    """Monte-Carlo mean and standard error of the squared estimation error.

    Runs the MAP estimator on ``reps`` independent observation draws with the
    task parameters held fixed; with ``redraw_thetas`` every repetition also
    redraws all parameters from the hyper-prior (Bayes-averaged risk). The
    standard error uses the sample standard deviation. Deterministic given
    the seed, independent of batching.
    """
    if reps < 2:
        raise DomainError("need reps >= 2 to estimate a standard error")
    dec = _Decomposition(env)
    env_ = dec.env
    d = env_.d
    s2th = env_.prior.sigma_theta_sq
    tau = env_.prior.tau

    t = np.zeros((d, reps))
    for i, (task, z) in enumerate(zip(env_.source_tasks, dec.zs)):
        if redraw_thetas:
            th = tau[:, None] + np.sqrt(s2th) * substream(seed, _MC_SOURCE_THETA, i).standard_normal((d, reps))
            mean = task.design @ th
        else:
            mean = (task.design @ task.theta)[:, None]
        noise = substream(seed, _MC_SOURCE_NOISE, i).standard_normal((task.rows, reps))
        t += z.T @ (mean + np.sqrt(task.noise_sq) * noise)
    mu = dec.tau_cov @ t

    novel = env_.novel_task
    if redraw_thetas:
        th_n = tau[:, None] + np.sqrt(s2th) * substream(seed, _MC_NOVEL_THETA, 0).standard_normal((d, reps))
    else:
        th_n = novel.theta[:, None]
    noise = substream(seed, _MC_NOVEL_NOISE, 0).standard_normal((novel.rows, reps))
    y_n = novel.design @ th_n + np.sqrt(novel.noise_sq) * noise
    estimates = dec.post_cov @ (novel.design.T @ y_n / novel.noise_sq + dec.g @ mu)
    losses = np.sum((estimates - th_n) ** 2, axis=0)
    mean = float(losses.mean())
    se = float(losses.std(ddof=1) / np.sqrt(reps))
    return mean, se


def full_risk_report(env: Environment, reps: int, seed: int = 0, *, redraw_thetas: bool = False) -> RiskReport:
    """Exact decomposition plus the Monte-Carlo cross-check in one report."""
    report = exact_risk(env)
    mc_mean, mc_se = mc_risk(env, reps, seed, redraw_thetas=redraw_thetas)
    return RiskReport(
        bias_sq=report.bias_sq,
        var_novel=report.var_novel,
        var_source=report.var_source,
        total=report.total,
        mc_mean=mc_mean,
        mc_se=mc_se,
    )


# ---------------------------------------------------------------------------
# Explicit-constant upper bounds
# ---------------------------------------------------------------------------

def _check_counts(c: BoundConstants, M: int, n: int, k: int):
    if M < 0 or k < 0 or (M > 0 and n < 1):
        raise DomainError(f"invalid counts M={M}, n={n}, k={k}")
    for name in ("s1", "s2", "gamma1", "gamma2", "sigma_theta_sq", "sigma_novel_sq"):
        if not getattr(c, name) > 0:
            raise DomainError(f"constant {name} must be positive")


def novel_cov_smax_forms(c: BoundConstants, M: int, n: int, k: int) -> tuple[float, float]:
    """Bound on the largest singular value of the novel posterior covariance.

    Returns ``(chain, headline)``. ``chain`` walks the verified inequality
    steps: the posterior precision is at least the novel data precision
    ``k s2^2 / sigma_novel_sq`` plus the reciprocal of
    ``sigma_theta_sq + smax(C_1) / (M n s1^2)``, with
    ``smax(C_1) <= sigma_theta_sq n gamma1^2 + sigma_source_sq``. ``headline``
    re-expresses the same quantity as ``sigma_novel_sq / s2^2`` divided by the
    sample-size factor ``rate_c``; the two agree up to rounding. With no
    source tasks the chain reduces to the single-task Bayes bound
    ``1 / (k s2^2 / sigma_novel_sq + 1 / sigma_theta_sq)``.
    """
    _check_counts(c, M, n, k)
    data_precision = k * c.s2**2 / c.sigma_novel_sq
    if M == 0:
        chain = 1.0 / (data_precision + 1.0 / c.sigma_theta_sq)
    else:
        smax_c1 = c.sigma_theta_sq * n * c.gamma1**2 + c.sigma_source_sq
        prior_smax = c.sigma_theta_sq + smax_c1 / (M * n * c.s1**2)
        chain = 1.0 / (data_precision + 1.0 / prior_smax)
    rate_c, _ = sample_size_factors(c, M, n, k)
    headline = c.sigma_novel_sq / c.s2**2 / rate_c
    return chain, headline


def novel_cov_smax_bound(c: BoundConstants, M: int, n: int, k: int) -> float:
    """Canonical (chain-form) bound on smax of the novel posterior covariance."""
    return novel_cov_smax_forms(c, M, n, k)[0]


def sample_size_factors(c: BoundConstants, M: int, n: int, k: int) -> tuple[float, float]:
    """Effective sample-size factors (rate_c, rate_d) of the headline bound."""
    led = derived_ledger(c, M)
    if M == 0:
        return float(k), float(k)
    rate_c = k + M * n / (n / led["L"] + led["A"])
    rate_d = k + M * n / ((n / led["L1"] + led["A1"]) * (M * n / led["L2"] + led["A2"]))
    return rate_c, rate_d


def variance_upper_bound(c: BoundConstants, d: int, M: int, n: int, k: int) -> float:
    """Upper bound on the total estimator variance trace."""
    _check_counts(c, M, n, k)
    rate_c, rate_d = sample_size_factors(c, M, n, k)
    return (c.kappa_novel**2 * c.sigma_novel_sq / c.s2**2) * d * rate_c**-2 * rate_d


def bias_upper_bound(c: BoundConstants, d: int, M: int, n: int, k: int) -> float:
    """Upper bound on the squared bias for parameters in the unit 2-ball.

    The proof-constant chain: the pre-data precision has norm at most
    ``1/sigma_theta_sq`` (squared: the dimensionally consistent
    ``sigma_theta_sq**-2``), and the hyper-mean's systematic offset is at
    most the parameter-set diameter 2 times the condition number
    ``kappa**2 * kappa_tilde`` of the weighted source Gram matrix. The shape
    factor is ``d`` times the squared posterior-covariance bound; the
    constant is reported by the docstring decomposition, never folded away.
    """
    _check_counts(c, M, n, k)
    smax = novel_cov_smax_bound(c, M, n, k)
    offset = 2.0 * c.kappa**2 * c.kappa_tilde
    return d * smax**2 * offset**2 / c.sigma_theta_sq**2


def source_cov_factors(c: BoundConstants, M: int, n: int) -> tuple[float, float]:
    """Bounds (d1, d2) on the source-side covariance singular values.

    ``d1`` dominates ``smax^2`` of (pre-data precision x hyper-mean
    covariance); ``d2`` dominates ``smax`` of the noise-scaled per-task
    covariance inverse on the design's column space (everywhere when
    n <= d; for tall designs the inverse has unit singular values on the
    orthogonal complement, which the variance chain never touches).
    """
    d2 = 1.0 / (n * c.s1**2 / c.alpha1 + 1.0)
    if M == 0:
        return c.kappa_tau**2, d2
    first = 2.0 * M * n * c.s1**2 / ((n * c.s1**2 * c.kappa**2 + c.alpha1) * c.kappa_tau)
    d1 = 1.0 / (first + 1.0 / c.kappa_tau**2)
    return d1, d2


def risk_upper_bound(c: BoundConstants, d: int, M: int, n: int, k: int, sigma_novel_sq: float) -> UpperBoundReport:
    """Headline risk bound with every constituent reported.

    ``sigma_novel_sq`` may differ from the ledger's value, in which case the
    noise ratio is rescaled so the report stays self-consistent.
    """
    if sigma_novel_sq != c.sigma_novel_sq:
        scale = sigma_novel_sq / c.sigma_novel_sq
        c = BoundConstants(**{
            **c.__dict__,
            "alpha2": c.alpha2 * scale,
            "sigma_novel_sq": sigma_novel_sq,
            **{key: 0.0 for key in ("L", "L1", "L2", "A", "A1", "A2")},
        })
        c = BoundConstants(**{**c.__dict__, **derived_ledger(c, M)})
    _check_counts(c, M, n, k)
    rate_c, rate_d = sample_size_factors(c, M, n, k)
    var_bound = variance_upper_bound(c, d, M, n, k)
    bias_bound = bias_upper_bound(c, d, M, n, k)
    smax = novel_cov_smax_bound(c, M, n, k)
    d1, d2 = source_cov_factors(c, M, n)
    return UpperBoundReport(
        variance_bound=var_bound,
        bias_bound=bias_bound,
        smax_bound=smax,
        d1=d1,
        d2=d2,
        rate_c=rate_c,
        rate_d=rate_d,
        value=var_bound + bias_bound,
        asymptotic_value=asymptotic_bound(c.alpha2, M, c.kappa, k, d, sigma_novel_sq),
    )


def asymptotic_bound(alpha2: float, M: int, kappa: float, k: int, d: int, sigma_novel_sq: float) -> float:
    """Few-shot limit of the risk bound as the per-task sample count grows.

    Evaluates ``d * sigma_novel_sq / (k + 2 alpha2 M / (M + kappa^2))``.
    """
    if alpha2 < 0 or sigma_novel_sq <= 0 or k < 0 or M < 0 or kappa <= 0:
        raise DomainError("asymptotic bound needs nonnegative alpha2, k, M and positive noise/kappa")
    shared = 2.0 * alpha2 * M / (M + kappa**2) if M else 0.0
    return d * sigma_novel_sq / (k + shared)
