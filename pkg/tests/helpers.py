"""Shared test oracles, all deliberately written as plain transcriptions.

Everything here forms explicit inverses with ``np.linalg.inv`` and loops over
outcomes one by one, trading speed for independence from the library's solve
and enumeration paths.
"""

import numpy as np

from metarisk.model import HyperPrior, sample_environment


def brute_force_tau_posterior(env, obs):
    """Hyper-mean posterior via explicit inverses."""
    d = env.d
    prec = np.zeros((d, d))
    rhs = np.zeros(d)
    for task, y in zip(env.source_tasks, obs.sources):
        c = env.prior.sigma_theta_sq * (task.design @ task.design.T) + task.noise_sq * np.eye(task.rows)
        cinv = np.linalg.inv(c)
        prec += task.design.T @ cinv @ task.design
        rhs += task.design.T @ cinv @ y
    cov = np.linalg.inv(prec)
    return cov @ rhs, cov


def brute_force_novel_posterior(env, obs, tau_mean, tau_cov):
    """Novel-task posterior via explicit inverses."""
    d = env.d
    task = env.novel_task
    cov0 = env.prior.sigma_theta_sq * np.eye(d) + tau_cov
    g = np.linalg.inv(cov0)
    f = task.design.T @ task.design / task.noise_sq
    cov = np.linalg.inv(f + g)
    mean = cov @ (task.design.T @ obs.novel / task.noise_sq + g @ tau_mean)
    return mean, cov, cov0


def brute_force_map(env, obs):
    tau_mean, tau_cov = brute_force_tau_posterior(env, obs)
    mean, _, _ = brute_force_novel_posterior(env, obs, tau_mean, tau_cov)
    return mean


def estimator_linear_maps(env):
    """Matrices (B_1..B_M, B_novel, offset) with theta_hat = sum B_i y_i.

    Derived entirely through explicit inverses so Monte-Carlo oracles built
    on top stay independent of the library's risk formulas.
    """
    d = env.d
    prec = np.zeros((d, d))
    per_task = []
    for task in env.source_tasks:
        c = env.prior.sigma_theta_sq * (task.design @ task.design.T) + task.noise_sq * np.eye(task.rows)
        cinv = np.linalg.inv(c)
        prec += task.design.T @ cinv @ task.design
        per_task.append(task.design.T @ cinv)
    tau_cov = np.linalg.inv(prec)
    cov0 = env.prior.sigma_theta_sq * np.eye(d) + tau_cov
    g = np.linalg.inv(cov0)
    novel = env.novel_task
    f = novel.design.T @ novel.design / novel.noise_sq
    post = np.linalg.inv(f + g)
    front = post @ g @ tau_cov
    maps = [front @ m for m in per_task]
    b_novel = post @ novel.design.T / novel.noise_sq
    return maps, b_novel


def mc_error_sample(env, reps, rng):
    """(d, reps) array of estimation errors theta_hat - theta_novel."""
    maps, b_novel = estimator_linear_maps(env)
    d = env.d
    errors = np.zeros((d, reps))
    for task, bmat in zip(env.source_tasks, maps):
        mean = task.design @ task.theta
        ys = mean[:, None] + np.sqrt(task.noise_sq) * rng.standard_normal((task.rows, reps))
        errors += bmat @ ys
    novel = env.novel_task
    ys = (novel.design @ novel.theta)[:, None] + np.sqrt(novel.noise_sq) * rng.standard_normal((novel.rows, reps))
    errors += b_novel @ ys
    return errors - novel.theta[:, None]


def random_environment(rng, d=None, M=None, n=None, k=None, homogeneous=False, unit_ball=False, kind="gaussian"):
    """Random environment for cross-oracle tests; parameters log-uniform-ish."""
    d = d if d is not None else int(rng.integers(1, 8))
    M = M if M is not None else int(rng.integers(1, 11))
    n = n if n is not None else int(rng.integers(1, 51))
    k = k if k is not None else int(rng.integers(1, 51))
    prior = HyperPrior(rng.standard_normal(d), float(10 ** rng.uniform(-2, 0.5)))
    env = sample_environment(
        prior, M, n, k,
        noise_sq_source=float(10 ** rng.uniform(-2, 0.5)),
        noise_sq_novel=float(10 ** rng.uniform(-2, 0.5)),
        design_kind=kind,
        seed=int(rng.integers(0, 2**31)),
        clip_theta_unit_ball=unit_ball,
        shared_source_design=homogeneous,
    )
    return env


def random_homogeneous_unit_ball_environment(rng, kind="gaussian"):
    """The upper-bound dominance setting: shared full-rank source design,
    shared noise, every parameter inside the unit 2-ball."""
    d = int(rng.integers(2, 8))
    M = int(rng.integers(1, 11))
    n = int(rng.integers(d, 51))
    k = int(rng.integers(d, 51))
    prior = HyperPrior(rng.standard_normal(d) * 0.3, float(10 ** rng.uniform(-2, 1)))
    env = sample_environment(
        prior, M, n, k,
        noise_sq_source=float(10 ** rng.uniform(-3, 1.5)),
        noise_sq_novel=float(10 ** rng.uniform(-3, 1.5)),
        design_kind=kind,
        seed=int(rng.integers(0, 2**31)),
        clip_theta_unit_ball=True,
        shared_source_design=True,
    )
    return env
