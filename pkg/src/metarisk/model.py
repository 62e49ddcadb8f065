"""Hierarchical linear-model environments.

An environment is a hyper-prior (hyper-mean ``tau`` and parameter variance
``sigma_theta_sq``) plus ``M`` source regression tasks and one novel task.
Task parameters are drawn as ``theta_i = tau + xi_i`` with Gaussian ``xi_i``;
responses as ``y_i = X_i theta_i + eps_i`` with isotropic Gaussian noise.

Randomness policy
-----------------
All sampling uses numpy's PCG64 generator seeded through
``SeedSequence(seed, spawn_key=...)`` substreams, one substream per task and
role. Source task ``i`` draws its parameters and design from spawn key
``(0, i)``; the novel task from ``(1, 0)``; observations use ``(2, i)`` and
``(3, 0)``. Because streams are disjoint, adding tasks or growing a design
never perturbs draws that already existed, which keeps sweep curves
comparable point to point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import matan
from .exceptions import DimensionError, SingularMatrixError, ValidationError

# Substream roles (first element of every spawn key).
_SOURCE_DRAW = 0
_NOVEL_DRAW = 1
_SOURCE_OBS = 2
_NOVEL_OBS = 3

DESIGN_KINDS = ("polynomial", "gaussian")


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the given role/index key under ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class HyperPrior:
    """Hyper-mean and parameter variance shared by every task."""

    tau: np.ndarray
    sigma_theta_sq: float

    def __post_init__(self):
        object.__setattr__(self, "tau", np.asarray(self.tau, dtype=float))
        if self.tau.ndim != 1 or self.tau.size == 0:
            raise DimensionError("tau must be a nonempty vector")
        if not self.sigma_theta_sq > 0:
            raise ValidationError("sigma_theta_sq must be positive")

    @property
    def d(self) -> int:
        return self.tau.size


@dataclass(frozen=True)
class Task:
    """One linear regression problem: design, true parameters, noise level."""

    design: np.ndarray
    theta: np.ndarray
    noise_sq: float

    def __post_init__(self):
        object.__setattr__(self, "design", matan.as_matrix(self.design, "design"))
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=float))
        if self.design.shape[1] != self.theta.size:
            raise DimensionError(
                f"design has {self.design.shape[1]} columns but theta has {self.theta.size}"
            )
        if not self.noise_sq > 0:
            raise ValidationError("noise_sq must be positive")

    @property
    def rows(self) -> int:
        return self.design.shape[0]


@dataclass(frozen=True)
class Environment:
    """Hyper-prior plus M source tasks and one novel task."""

    prior: HyperPrior
    source_tasks: tuple[Task, ...]
    novel_task: Task
    seed: int | None = None
    design_kind: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "source_tasks", tuple(self.source_tasks))
        d = self.prior.d
        for idx, task in enumerate(self.source_tasks):
            if task.theta.size != d:
                raise DimensionError(f"source task {idx} dimension {task.theta.size} != {d}")
        if self.novel_task.theta.size != d:
            raise DimensionError("novel task dimension mismatch")

    @property
    def d(self) -> int:
        return self.prior.d

    @property
    def num_source(self) -> int:
        return len(self.source_tasks)


@dataclass(frozen=True)
class Observations:
    """Per-task response vectors, sources first, the novel task last."""

    ys: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "ys", tuple(np.asarray(y, dtype=float) for y in self.ys))

    @classmethod
    def for_environment(cls, env: Environment, ys) -> "Observations":
        obs = cls(tuple(ys))
        tasks = list(env.source_tasks) + [env.novel_task]
        if len(obs.ys) != len(tasks):
            raise DimensionError(f"got {len(obs.ys)} response vectors for {len(tasks)} tasks")
        for idx, (y, task) in enumerate(zip(obs.ys, tasks)):
            if y.shape != (task.rows,):
                raise DimensionError(f"response {idx} has shape {y.shape}, expected ({task.rows},)")
        return obs

    @property
    def novel(self) -> np.ndarray:
        return self.ys[-1]

    @property
    def sources(self) -> tuple[np.ndarray, ...]:
        return self.ys[:-1]


def polynomial_design(rows: int, d: int, x_low: float = -1.0, x_high: float = 1.0, seed=0) -> np.ndarray:
    """Rows ``[1, x, x^2, ..., x^(d-1)]`` for x drawn uniformly on [x_low, x_high].

    A degenerate interval (``x_low == x_high``) pins x to that value. ``seed``
    may be an integer or an existing generator.
    """
    if rows < 1 or d < 1:
        raise DimensionError("rows and d must be at least 1")
    if x_low > x_high:
        raise ValidationError(f"empty interval [{x_low}, {x_high}]")
    rng = _as_generator(seed)
    x = rng.uniform(x_low, x_high, size=rows)
    return np.vander(x, N=d, increasing=True)


def gaussian_design(rows: int, d: int, seed=0) -> np.ndarray:
    """Design with independent standard-normal entries."""
    if rows < 1 or d < 1:
        raise DimensionError("rows and d must be at least 1")
    rng = _as_generator(seed)
    return rng.standard_normal((rows, d))


def _draw_design(kind: str, rows: int, d: int, rng, x_range) -> np.ndarray:
    if kind == "polynomial":
        return polynomial_design(rows, d, x_range[0], x_range[1], rng)
    if kind == "gaussian":
        return gaussian_design(rows, d, rng)
    raise ValidationError(f"unknown design kind {kind!r}; expected one of {DESIGN_KINDS}")


def _draw_theta(prior: HyperPrior, rng, clip: bool) -> np.ndarray:
    theta = prior.tau + np.sqrt(prior.sigma_theta_sq) * rng.standard_normal(prior.d)
    if clip:
        norm = np.linalg.norm(theta)
        if norm > 1.0:
            theta = theta / norm
    return theta


def sample_environment(
    prior: HyperPrior,
    M: int,
    n: int,
    k: int,
    noise_sq_source: float,
    noise_sq_novel: float,
    design_kind: str = "polynomial",
    seed: int = 0,
    *,
    x_range: tuple[float, float] = (-1.0, 1.0),
    clip_theta_unit_ball: bool = False,
    shared_source_design: bool = False,
) -> Environment:
    """Draw an environment: M source tasks with n rows each, one novel task with k rows.

    Each task's substream draws its parameters first and its design second, so
    growing ``n`` or ``k`` extends a design without changing earlier rows or
    the task's parameters. ``clip_theta_unit_ball`` projects each theta onto
    the unit 2-ball (the assumption of the explicit-constant bounds);
    ``shared_source_design`` reuses source task 0's design for all sources,
    which is the homogeneous setting the upper-bound constants are sharpest in.
    """
    if M < 0 or n < 1 or k < 1:
        raise ValidationError("need M >= 0, n >= 1, k >= 1")
    sources = []
    shared = None
    for i in range(M):
        rng = substream(seed, _SOURCE_DRAW, i)
        theta = _draw_theta(prior, rng, clip_theta_unit_ball)
        if shared_source_design:
            if shared is None:
                shared = _draw_design(design_kind, n, prior.d, rng, x_range)
            design = shared
        else:
            design = _draw_design(design_kind, n, prior.d, rng, x_range)
        sources.append(Task(design, theta, noise_sq_source))
    rng = substream(seed, _NOVEL_DRAW, 0)
    theta = _draw_theta(prior, rng, clip_theta_unit_ball)
    design = _draw_design(design_kind, k, prior.d, rng, x_range)
    novel = Task(design, theta, noise_sq_novel)
    return Environment(prior, tuple(sources), novel, seed=seed, design_kind=design_kind)


def sample_observations(env: Environment, seed: int = 0) -> Observations:
    """Draw ``y_i = X_i theta_i + eps_i`` for every task, novel last."""
    ys = []
    for i, task in enumerate(env.source_tasks):
        rng = substream(seed, _SOURCE_OBS, i)
        eps = np.sqrt(task.noise_sq) * rng.standard_normal(task.rows)
        ys.append(task.design @ task.theta + eps)
    rng = substream(seed, _NOVEL_OBS, 0)
    task = env.novel_task
    eps = np.sqrt(task.noise_sq) * rng.standard_normal(task.rows)
    ys.append(task.design @ task.theta + eps)
    return Observations.for_environment(env, ys)


# ---------------------------------------------------------------------------
# Bound-constant ledger
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundConstants:
    """Singular-value and noise-ratio constants feeding the explicit bounds.

    ``s1``/``gamma1`` are the extreme singular values of the scaled source
    designs ``X_i/sqrt(n)`` (min and max over tasks), ``s2``/``gamma2`` those
    of the scaled novel design. ``kappa_tilde`` and ``kappa_tau`` are the
    condition numbers of ``sigma_theta_sq X X^T + sigma_1^2 I`` (worst source)
    and of the hyper-mean posterior covariance; in ``worst-case`` mode they
    are replaced by the ceilings ``kappa**2`` and ``kappa**4`` (the latter
    presume full-rank ``X X^T``). The absolute variances are carried along
    because the singular-value chain for the posterior covariance needs them,
    not just the ratios.
    """

    s1: float
    s2: float
    gamma1: float
    gamma2: float
    kappa: float
    kappa_novel: float
    alpha1: float
    alpha2: float
    L: float
    L1: float
    L2: float
    A: float
    A1: float
    A2: float
    kappa_tilde: float
    kappa_tau: float
    mode: str
    sigma_theta_sq: float
    sigma_source_sq: float
    sigma_novel_sq: float


def derived_ledger(c: BoundConstants, M: int) -> dict[str, float]:
    """Recompute L, L1, L2, A, A1, A2 from the primitive fields for a given M.

    The stored fields use the M of the originating environment; bound
    evaluators call this so they stay correct when asked about other M.
    """
    return {
        "L": c.alpha2 / ((M + c.kappa**2) * c.s2**2),
        "L1": c.alpha1 / (c.s1**2 * c.s2**2 * c.kappa_novel**2),
        "L2": c.kappa_tilde * c.kappa_tau * c.alpha2 / (2.0 * c.s2**2 * c.kappa_novel**2),
        "A": c.s2**2 * c.alpha1 / (c.s1**2 * c.alpha2),
        "A1": c.s2**2 * c.kappa_novel**2,
        "A2": c.alpha1 * c.s2**2 * c.kappa_novel**2 / (c.kappa_tau**2 * c.s1**2 * c.alpha2),
    }


def _rank_deficient(ext: matan.SingularExtremes, shape: tuple[int, int]) -> bool:
    # Standard numerical-rank criterion: s_min below machine noise for s_max.
    tol = max(shape) * np.finfo(float).eps * ext.s_max
    return ext.s_min <= tol or shape[0] < shape[1]


def bound_constants(env: Environment, mode: str = "exact") -> BoundConstants:
    """Compute the bound-constant ledger for an environment.

    In ``exact`` mode every quantity comes from the actual matrices and a
    rank-deficient design is an error naming the offending task. In
    ``worst-case`` mode the extra condition numbers fall back to their
    stated ceilings ``kappa**2`` and ``kappa**4``.
    """
    if mode not in ("exact", "worst-case"):
        raise ValidationError(f"unknown bound-constant mode {mode!r}")
    M = env.num_source
    sigma_theta_sq = env.prior.sigma_theta_sq

    if M > 0:
        extremes = []
        for i, task in enumerate(env.source_tasks):
            ext = matan.singular_extremes(task.design / np.sqrt(task.rows))
            if mode == "exact" and _rank_deficient(ext, task.design.shape):
                raise SingularMatrixError(f"source task {i} design is rank-deficient")
            extremes.append(ext)
        s1 = min(e.s_min for e in extremes)
        gamma1 = max(e.s_max for e in extremes)
        kappa = gamma1 / s1 if s1 > 0 else np.inf
        sigma_source_sq = max(t.noise_sq for t in env.source_tasks)
    else:
        # No source tasks: the source-side constants are unused by every
        # downstream formula (all their terms carry a factor of M).
        s1 = gamma1 = kappa = 1.0
        sigma_source_sq = sigma_theta_sq

    novel = env.novel_task
    ext = matan.singular_extremes(novel.design / np.sqrt(novel.rows))
    if mode == "exact" and _rank_deficient(ext, novel.design.shape):
        raise SingularMatrixError("novel task design is rank-deficient")
    s2, gamma2 = ext.s_min, ext.s_max
    kappa_novel = gamma2 / s2 if s2 > 0 else np.inf

    alpha1 = sigma_source_sq / sigma_theta_sq
    alpha2 = novel.noise_sq / sigma_theta_sq

    if mode == "exact" and M > 0:
        kappa_tilde = 0.0
        for task in env.source_tasks:
            gram = sigma_theta_sq * (task.design @ task.design.T)
            gram[np.diag_indices_from(gram)] += task.noise_sq
            eig = np.linalg.eigvalsh(gram)
            kappa_tilde = max(kappa_tilde, eig[-1] / eig[0])
        from .posterior import tau_covariance  # local import; posterior depends on this module

        eig = np.linalg.eigvalsh(tau_covariance(env))
        kappa_tau = eig[-1] / eig[0]
    else:
        kappa_tilde = kappa**2
        kappa_tau = kappa**4

    base = BoundConstants(
        s1=s1, s2=s2, gamma1=gamma1, gamma2=gamma2,
        kappa=kappa, kappa_novel=kappa_novel,
        alpha1=alpha1, alpha2=alpha2,
        L=0.0, L1=0.0, L2=0.0, A=0.0, A1=0.0, A2=0.0,
        kappa_tilde=kappa_tilde, kappa_tau=kappa_tau, mode=mode,
        sigma_theta_sq=sigma_theta_sq,
        sigma_source_sq=sigma_source_sq,
        sigma_novel_sq=novel.noise_sq,
    )
    ledger = derived_ledger(base, M)
    return BoundConstants(
        **{**base.__dict__, **ledger}
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def environment_to_dict(env: Environment) -> dict:
    """JSON-ready dict with explicit matrices; round-trips losslessly."""
    return {
        "kind": "environment",
        "d": env.d,
        "tau": env.prior.tau.tolist(),
        "sigma_theta_sq": env.prior.sigma_theta_sq,
        "tasks": [
            {
                "n": t.rows,
                "noise_sq": t.noise_sq,
                "design": t.design.tolist(),
                "theta": t.theta.tolist(),
            }
            for t in env.source_tasks
        ],
        "novel": {
            "k": env.novel_task.rows,
            "noise_sq": env.novel_task.noise_sq,
            "design": env.novel_task.design.tolist(),
            "theta": env.novel_task.theta.tolist(),
        },
        "design_kind": env.design_kind,
        "seed": env.seed,
    }


def environment_from_dict(doc: dict) -> Environment:
    if doc.get("kind") != "environment":
        raise ValidationError("expected a document with kind='environment'")
    prior = HyperPrior(np.asarray(doc["tau"], dtype=float), float(doc["sigma_theta_sq"]))
    sources = tuple(
        Task(np.asarray(t["design"], dtype=float), np.asarray(t["theta"], dtype=float), float(t["noise_sq"]))
        for t in doc["tasks"]
    )
    nov = doc["novel"]
    novel = Task(np.asarray(nov["design"], dtype=float), np.asarray(nov["theta"], dtype=float), float(nov["noise_sq"]))
    env = Environment(prior, sources, novel, seed=doc.get("seed"), design_kind=doc.get("design_kind"))
    if env.d != int(doc["d"]):
        raise ValidationError(f"declared d={doc['d']} but tau has length {env.d}")
    return env


def environment_to_json(env: Environment, indent: int | None = 2) -> str:
    return json.dumps(environment_to_dict(env), indent=indent)


def environment_from_json(text: str) -> Environment:
    return environment_from_dict(json.loads(text))
