"""Empirical-Bayes posterior inference and MAP estimation for the novel task.

With a flat treatment of the hyper-mean, conditioning on the source
responses gives a Gaussian over tau:

    Sigma_tau^-1 = sum_i X_i^T (sigma_theta^2 X_i X_i^T + sigma_i^2 I)^-1 X_i
    mu_tau       = Sigma_tau sum_i X_i^T (...)^-1 y_i

The novel task's parameters then have prior N(mu_tau, sigma_theta^2 I +
Sigma_tau), and conditioning on the novel responses gives the posterior whose
mean is the MAP estimate. All inner inverses are evaluated through SPD solves
(never formed explicitly); each per-task n x n solve is the canonical path,
with an equivalent d x d route available when n is much larger than d.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matan
from .exceptions import NoSourceTasksError, ValidationError
from .model import Environment, Observations

# Solves abort with a diagnostic past this condition number rather than
# returning silently inaccurate moments.
MAX_CONDITION = 1e12

_METHODS = ("direct", "woodbury")


@dataclass(frozen=True)
class TauPosterior:
    """Gaussian posterior over the hyper-mean given the source responses."""

    mean: np.ndarray
    cov: np.ndarray


@dataclass(frozen=True)
class NovelPosterior:
    """Posterior over the novel task's parameters.

    ``cov0`` is the pre-data covariance ``sigma_theta^2 I + Sigma_tau``; the
    posterior ``cov`` never exceeds it in the Loewner order because novel
    data only adds precision.
    """

    mean: np.ndarray
    cov: np.ndarray
    cov0: np.ndarray


def _xt_cinv(task, sigma_theta_sq: float, method: str):
    """Return (X^T C^-1 X, operator y -> X^T C^-1 y) for C = s2th X X^T + noise I."""
    X = task.design
    n = task.rows
    if method == "direct":
        C = sigma_theta_sq * (X @ X.T)
        C[np.diag_indices_from(C)] += task.noise_sq
        Z = matan.solve_spd(C, X, max_condition=MAX_CONDITION, name="per-task covariance")
        xtcx = X.T @ Z

        def apply(y):
            return Z.T @ y

        return xtcx, apply

    # Woodbury route: everything in d x d space.
    S = X.T @ X
    K = S / task.noise_sq
    K[np.diag_indices_from(K)] += 1.0 / sigma_theta_sq
    S_over = S / task.noise_sq

    def cinv_x(v):
        return v / task.noise_sq - S_over @ matan.solve_spd(
            K, v / task.noise_sq, max_condition=MAX_CONDITION, name="woodbury core"
        )

    xtcx = cinv_x(S)
    xtcx = 0.5 * (xtcx + xtcx.T)

    def apply(y):
        return cinv_x(X.T @ y)

    return xtcx, apply


def tau_precision(env: Environment, method: str = "direct") -> np.ndarray:
    """Posterior precision of the hyper-mean (data-independent)."""
    if env.num_source == 0:
        raise NoSourceTasksError("no source tasks: the hyper-mean posterior is undefined")
    if method not in _METHODS:
        raise ValidationError(f"unknown method {method!r}")
    prec = np.zeros((env.d, env.d))
    for task in env.source_tasks:
        xtcx, _ = _xt_cinv(task, env.prior.sigma_theta_sq, method)
        prec += xtcx
    return 0.5 * (prec + prec.T)


def tau_covariance(env: Environment, method: str = "direct") -> np.ndarray:
    """Posterior covariance of the hyper-mean (data-independent)."""
    prec = tau_precision(env, method)
    cov = matan.solve_spd(prec, np.eye(env.d), max_condition=MAX_CONDITION, name="tau precision")
    return 0.5 * (cov + cov.T)


def tau_posterior(env: Environment, obs: Observations, method: str = "direct") -> TauPosterior:
    """Posterior over the hyper-mean given the source responses."""
    if env.num_source == 0:
        raise NoSourceTasksError("no source tasks: the hyper-mean posterior is undefined")
    if method not in _METHODS:
        raise ValidationError(f"unknown method {method!r}")
    d = env.d
    prec = np.zeros((d, d))
    rhs = np.zeros(d)
    for task, y in zip(env.source_tasks, obs.sources):
        xtcx, apply = _xt_cinv(task, env.prior.sigma_theta_sq, method)
        prec += xtcx
        rhs += apply(y)
    prec = 0.5 * (prec + prec.T)
    cov = matan.solve_spd(prec, np.eye(d), max_condition=MAX_CONDITION, name="tau precision")
    cov = 0.5 * (cov + cov.T)
    mean = matan.solve_spd(prec, rhs, max_condition=MAX_CONDITION, name="tau precision")
    return TauPosterior(mean=mean, cov=cov)


def novel_posterior(tp: TauPosterior, env: Environment, obs: Observations) -> NovelPosterior:
    """Condition the novel task's parameters on its own responses."""
    d = env.d
    task = env.novel_task
    cov0 = tp.cov.copy()
    cov0[np.diag_indices_from(cov0)] += env.prior.sigma_theta_sq
    g = matan.solve_spd(cov0, np.eye(d), max_condition=MAX_CONDITION, name="pre-data covariance")
    g = 0.5 * (g + g.T)
    f = (task.design.T @ task.design) / task.noise_sq
    prec = f + g
    cov = matan.solve_spd(prec, np.eye(d), max_condition=MAX_CONDITION, name="novel precision")
    cov = 0.5 * (cov + cov.T)
    rhs = task.design.T @ obs.novel / task.noise_sq + g @ tp.mean
    mean = matan.solve_spd(prec, rhs, max_condition=MAX_CONDITION, name="novel precision")
    return NovelPosterior(mean=mean, cov=cov, cov0=cov0)


def map_estimate(env: Environment, obs: Observations, method: str = "direct") -> np.ndarray:
    """MAP estimate of the novel task's parameters (= posterior mean)."""
    return novel_posterior(tau_posterior(env, obs, method), env, obs).mean
