"""Minimax lower-bound calculators: packings, KL matrices, Fano-style bounds.

Log-base policy: KL divergences and the mutual-information sums derived from
them are computed in nats; every function named ``mi_*`` converts exactly to
bits at its return boundary, and the general Fano calculator consumes bits.
The three closed-form corollary calculators (``iid_bound``, ``meta_bound``,
``partial_env_bound``) evaluate their printed formulas verbatim, treating the
supplied KL ceiling ``alpha`` as a unitless plug-in; callers wanting strict
base bookkeeping should route through ``general_fano_bound`` with the
``mi_bound_*`` values.

An exact brute-force oracle (``exact_task_mi``, ``map_decoder_error``)
enumerates small discrete environments outcome by outcome so the packing
bounds and decoder inequalities can be checked with zero modeling error.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError, DomainError, ResourceBudgetError, ValidationError
from .model import Task

_LN2 = float(np.log(2.0))

# Largest exact-enumeration outcome count per observation block.
ENUMERATION_BUDGET = 2**16


@dataclass(frozen=True)
class LossSpec:
    """Power-family loss psi(t) = t**exponent applied to Euclidean distance."""

    exponent: float = 2.0

    def __post_init__(self):
        if not self.exponent > 0:
            raise DomainError("loss exponent must be positive")

    def psi(self, t: float) -> float:
        return float(t) ** self.exponent


@dataclass(frozen=True)
class KLMatrix:
    """Pairwise divergences of a distribution family, in nats."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionError(f"KL matrix must be square, got shape {arr.shape}")
        if np.any(arr < 0) or np.any(np.isnan(arr)):
            raise ValidationError("KL matrix must be nonnegative")
        if np.any(np.diag(arr) != 0):
            raise ValidationError("KL matrix must have a zero diagonal")
        object.__setattr__(self, "values", arr)

    @property
    def size(self) -> int:
        return self.values.shape[0]

    @property
    def alpha(self) -> float:
        """Largest off-diagonal divergence."""
        if self.size < 2:
            return 0.0
        off = self.values[~np.eye(self.size, dtype=bool)]
        return float(off.max())

    def total(self) -> float:
        return float(self.values.sum())


@dataclass(frozen=True)
class PackingSet:
    """Centers pairwise at least 2*delta apart inside the unit 2-ball."""

    centers: np.ndarray
    delta: float
    pairwise_dist: np.ndarray

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=float)
        dist = np.asarray(self.pairwise_dist, dtype=float)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "pairwise_dist", dist)
        j = centers.shape[0]
        if dist.shape != (j, j):
            raise DimensionError("distance matrix shape does not match centers")
        if j >= 2:
            off = dist[~np.eye(j, dtype=bool)]
            if off.min() < 2.0 * self.delta * (1.0 - 1e-12):
                raise ValidationError(
                    f"pairwise separation {off.min():.6g} below 2*delta = {2 * self.delta:.6g}"
                )
        norms = np.linalg.norm(centers, axis=1)
        if norms.size and norms.max() > 1.0 + 1e-12:
            raise ValidationError("packing centers must lie in the unit ball")

    @property
    def size(self) -> int:
        return self.centers.shape[0]


@dataclass(frozen=True)
class FanoInput:
    """Inputs shared by the closed-form lower-bound calculators."""

    loss: LossSpec
    delta: float
    J: int
    M: int = 0
    n: int = 0
    k: int = 0
    alpha: float = 0.0

    def __post_init__(self):
        if self.J < 2:
            raise DomainError("need at least J = 2 packed distributions")
        if min(self.M, self.n, self.k) < 0 or self.alpha < 0 or self.delta < 0:
            raise DomainError("counts, alpha and delta must be nonnegative")

    @classmethod
    def from_kl_matrix(cls, loss: LossSpec, delta: float, kl: KLMatrix, M: int = 0, n: int = 0, k: int = 0) -> "FanoInput":
        return cls(loss=loss, delta=delta, J=kl.size, M=M, n=n, k=k, alpha=kl.alpha)


# ---------------------------------------------------------------------------
# KL divergences for Gaussian linear-regression tasks
# ---------------------------------------------------------------------------

def gaussian_lr_kl(task_i: Task, task_j: Task, shared_noise_sq: float) -> float:
    """KL divergence, in nats, between two fixed-design regression tasks.

    Both response distributions are Gaussian with the same isotropic noise,
    so the divergence is ||X_i theta_i - X_j theta_j||^2 / (2 sigma^2).
    """
    if task_i.rows != task_j.rows:
        raise DimensionError(
            f"row counts differ: {task_i.rows} vs {task_j.rows}"
        )
    if not shared_noise_sq > 0:
        raise DomainError("shared noise variance must be positive")
    diff = task_i.design @ task_i.theta - task_j.design @ task_j.theta
    return float(diff @ diff) / (2.0 * shared_noise_sq)


def kl_matrix(tasks, shared_noise_sq: float) -> KLMatrix:
    """Pairwise ``gaussian_lr_kl`` values for a family of tasks."""
    tasks = list(tasks)
    if len(tasks) < 2:
        raise DimensionError("need at least two tasks")
    j = len(tasks)
    values = np.zeros((j, j))
    for a in range(j):
        for b in range(j):
            if a != b:
                values[a, b] = gaussian_lr_kl(tasks[a], tasks[b], shared_noise_sq)
    return KLMatrix(values)


def discrete_kl_matrix(dists) -> KLMatrix:
    """Pairwise divergences, in nats, of finite distributions (rows of ``dists``)."""
    p = np.asarray(dists, dtype=float)
    j = p.shape[0]
    values = np.zeros((j, j))
    for a in range(j):
        for b in range(j):
            if a == b:
                continue
            mask = p[a] > 0
            if np.any(p[b][mask] == 0):
                values[a, b] = np.inf
            else:
                values[a, b] = float(np.sum(p[a][mask] * np.log(p[a][mask] / p[b][mask])))
    return KLMatrix(values)


# ---------------------------------------------------------------------------
# Closed-form lower bounds
# ---------------------------------------------------------------------------

def _clamped(loss: LossSpec, delta: float, factor: float) -> float:
    return loss.psi(delta) * max(0.0, factor)


def iid_bound(fi: FanoInput) -> float:
    """Single-source minimax lower bound from k samples and KL ceiling alpha."""
    factor = 1.0 - (fi.k * fi.alpha + 1.0) / np.log2(fi.J)
    return _clamped(fi.loss, fi.delta, factor)


def meta_bound(fi: FanoInput) -> float:
    """Novel-task lower bound accounting for M tasks of n samples each.

    Reduces exactly to ``iid_bound`` when M*n = 0 and never exceeds it.
    """
    if fi.M + 1 > fi.J:
        raise DomainError(f"need M + 1 <= J, got M={fi.M}, J={fi.J}")
    factor = 1.0 - (1.0 + (fi.M * fi.n / (fi.J - 1) + fi.k) * fi.alpha) / np.log2(fi.J)
    return _clamped(fi.loss, fi.delta, factor)


def partial_env_bound(fi: FanoInput) -> float:
    """Lower bound when the sources cannot cover the packing (M + 1 < J).

    Independent of n: more per-task samples never close the gap left by
    unobserved members of the family.
    """
    if fi.M + 1 >= fi.J:
        raise DomainError(f"need M + 1 < J, got M={fi.M}, J={fi.J}")
    factor = (np.log2(fi.J - fi.M) - fi.k * fi.alpha - 1.0) / np.log2(fi.J)
    return _clamped(fi.loss, fi.delta, factor)


def general_fano_bound(loss: LossSpec, delta: float, J: int, mi_w_bits: float, mi_z_bits: float) -> float:
    """Decoder-error lower bound from the two mutual informations, in bits."""
    if J < 2:
        raise DomainError("need at least J = 2")
    if mi_w_bits < 0 or mi_z_bits < 0:
        raise DomainError("mutual informations must be nonnegative")
    factor = 1.0 - (mi_w_bits + mi_z_bits + 1.0) / np.log2(J)
    return _clamped(loss, delta, factor)


# ---------------------------------------------------------------------------
# Mutual-information bounds from pairwise divergences
# ---------------------------------------------------------------------------

def mi_bound_local_packing(kl: KLMatrix, k: int) -> float:
    """Bits of information k i.i.d. samples can carry about the index."""
    if k < 0:
        raise DomainError("k must be nonnegative")
    return (k / kl.size**2) * kl.total() / _LN2


def mi_bound_product_packing(kl: KLMatrix, M: int, n: int) -> float:
    """Bits the M-task, n-samples-each observation carries about the held-out index."""
    j = kl.size
    if M + 1 > j:
        raise DomainError(f"need M + 1 <= J, got M={M}, J={j}")
    if M == 0 or n == 0:
        return 0.0
    return (M * n / (j**2 * (j - 1))) * kl.total() / _LN2


def mi_bound_mixture_packing(kl: KLMatrix, n: int) -> float:
    """Bits carried by n samples from the leave-one-out mixture.

    The per-sample bound is ``total KL / ((J-1) J^2)``; the stated result
    tensorizes over the n independent draws, hence the factor n.
    """
    j = kl.size
    if j < 2:
        raise DomainError("need at least two distributions")
    if n < 0:
        raise DomainError("n must be nonnegative")
    return (n / ((j - 1) * j**2)) * kl.total() / _LN2


# ---------------------------------------------------------------------------
# Exact enumeration oracle for small discrete environments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscreteMeta:
    """A small finite-alphabet environment the oracle can enumerate exactly.

    ``dists`` has one row per distribution. ``scheme`` selects how the source
    block is sampled: "product" draws n i.i.d. samples from each of the M
    ordered source tasks; "mixture" draws n i.i.d. samples from the uniform
    mixture of everything except the held-out index (which requires
    M = J - 1).
    """

    dists: np.ndarray
    M: int
    n: int
    k: int
    scheme: str = "product"

    def __post_init__(self):
        arr = np.asarray(self.dists, dtype=float)
        if arr.ndim != 2 or arr.shape[0] < 2:
            raise DimensionError("need a (J, alphabet) array with J >= 2")
        if np.any(arr < 0):
            raise ValidationError("probabilities must be nonnegative")
        sums = arr.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-12):
            raise ValidationError("each distribution must sum to 1 within 1e-12")
        if self.scheme not in ("product", "mixture"):
            raise ValidationError(f"unknown scheme {self.scheme!r}")
        if self.scheme == "mixture" and self.M != arr.shape[0] - 1:
            raise ValidationError("mixture scheme requires M = J - 1")
        if min(self.M, self.n, self.k) < 0:
            raise DomainError("M, n, k must be nonnegative")
        object.__setattr__(self, "dists", arr)

    @property
    def J(self) -> int:
        return self.dists.shape[0]

    @property
    def alphabet(self) -> int:
        return self.dists.shape[1]


def _check_budget(alphabet: int, length: int, label: str) -> int:
    count = alphabet**length
    if count > ENUMERATION_BUDGET:
        raise ResourceBudgetError(
            f"{label} block would enumerate {count} outcomes "
            f"(budget {ENUMERATION_BUDGET})"
        )
    return count


def _product_pmf(p: np.ndarray, length: int) -> np.ndarray:
    """Distribution of ``length`` i.i.d. draws from ``p``, kron-ordered."""
    out = np.ones(1)
    for _ in range(length):
        out = np.kron(out, p)
    return out


def _mi_from_conditionals(cond: np.ndarray) -> float:
    """I(index; outcome) in nats for a uniform index with rows p(outcome|index)."""
    j = cond.shape[0]
    marginal = cond.mean(axis=0)
    mask = cond > 0
    ratio = np.ones_like(cond)
    np.divide(cond, marginal[None, :], out=ratio, where=mask)
    return float(np.sum(np.where(mask, cond * np.log(ratio), 0.0)) / j)


def _source_conditionals(dm: DiscreteMeta) -> np.ndarray:
    """p(W | held-out index) rows for either sampling scheme."""
    if dm.scheme == "mixture":
        _check_budget(dm.alphabet, dm.n, "mixture source")
        rows = []
        for i in range(dm.J):
            mix = np.delete(dm.dists, i, axis=0).mean(axis=0)
            rows.append(_product_pmf(mix, dm.n))
        return np.asarray(rows)

    _check_budget(dm.alphabet, dm.M * dm.n, "source")
    rows = []
    indices = list(range(dm.J))
    for i in range(dm.J):
        others = [j for j in indices if j != i]
        selections = list(itertools.permutations(others, dm.M))
        acc = np.zeros(dm.alphabet ** (dm.M * dm.n))
        for sel in selections:
            block = np.ones(1)
            for j in sel:
                block = np.kron(block, _product_pmf(dm.dists[j], dm.n))
            acc += block
        rows.append(acc / len(selections))
    return np.asarray(rows)


def _novel_conditionals(dm: DiscreteMeta) -> np.ndarray:
    _check_budget(dm.alphabet, dm.k, "novel")
    return np.asarray([_product_pmf(dm.dists[i], dm.k) for i in range(dm.J)])


def exact_task_mi(dm: DiscreteMeta) -> tuple[float, float]:
    """Exact (I(index; W), I(index; Z)) in bits by full enumeration.

    The held-out index is uniform over the J distributions; W is the source
    observation block under ``dm.scheme`` and Z the k novel-task samples.
    """
    mi_w = _mi_from_conditionals(_source_conditionals(dm)) if dm.M and dm.n else 0.0
    mi_z = _mi_from_conditionals(_novel_conditionals(dm)) if dm.k else 0.0
    return mi_w / _LN2, mi_z / _LN2


def exact_joint_mi(dm: DiscreteMeta) -> float:
    """Exact I(index; (W, Z)) in bits; W and Z are independent given the index."""
    cond_w = _source_conditionals(dm) if dm.M and dm.n else np.ones((dm.J, 1))
    cond_z = _novel_conditionals(dm) if dm.k else np.ones((dm.J, 1))
    if cond_w.shape[1] * cond_z.shape[1] > ENUMERATION_BUDGET:
        raise ResourceBudgetError(
            f"joint block would enumerate {cond_w.shape[1] * cond_z.shape[1]} outcomes "
            f"(budget {ENUMERATION_BUDGET})"
        )
    joint = np.asarray([np.kron(cond_w[i], cond_z[i]) for i in range(dm.J)])
    return _mi_from_conditionals(joint) / _LN2


def map_decoder_error(joint) -> float:
    """Error probability of the optimal decoder for a finite (Y, Z) joint."""
    arr = np.asarray(joint, dtype=float)
    if arr.ndim != 2:
        raise DimensionError("joint must be a 2-D array p(y, z)")
    if np.any(arr < 0) or abs(arr.sum() - 1.0) > 1e-9:
        raise ValidationError("joint must be a probability table summing to 1")
    return float(1.0 - arr.max(axis=0).sum())


def fano_decoder_floor(joint) -> float:
    """Fano right-hand side (H(Y|Z) - 1) / log2 |Y| for a finite joint."""
    arr = np.asarray(joint, dtype=float)
    pz = arr.sum(axis=0)
    mask = arr > 0
    cond = np.divide(arr, pz[None, :], out=np.ones_like(arr), where=mask)
    h_cond = -float(np.sum(np.where(mask, arr * np.log2(cond), 0.0)))
    return (h_cond - 1.0) / np.log2(arr.shape[0])


# ---------------------------------------------------------------------------
# Packing construction and the regression lower bound
# ---------------------------------------------------------------------------

def greedy_packing(d: int, delta: float, budget: int = 100_000, seed: int = 0) -> PackingSet:
    """Randomized greedy packing of the unit ball, rescaled to separation 2*delta.

    Candidates drawn uniformly from the unit ball are accepted whenever they
    sit at distance >= 1/2 from everything accepted so far; the search stops
    after ``budget`` consecutive rejections. Scaling all accepted points by
    ``4 * delta`` then yields pairwise separation >= 2*delta with diameters
    <= 4*delta. A small resulting set is a quality issue, not an error.
    """
    if d < 1 or budget < 1:
        raise DomainError("need d >= 1 and budget >= 1")
    if not 0.0 < delta <= 0.25:
        raise DomainError("delta must lie in (0, 1/4] so scaled centers stay in the unit ball")
    rng = np.random.default_rng(seed)
    accepted: list[np.ndarray] = []
    rejections = 0
    chunk = 4096
    while rejections < budget:
        raw = rng.standard_normal((chunk, d))
        raw /= np.linalg.norm(raw, axis=1, keepdims=True)
        radii = rng.uniform(size=chunk) ** (1.0 / d)
        candidates = raw * radii[:, None]
        pos = 0
        while pos < chunk:
            if accepted:
                dists = np.linalg.norm(np.asarray(accepted)[None, :, :] - candidates[pos:, None, :], axis=2)
                ok = np.all(dists >= 0.5, axis=1)
                hits = np.flatnonzero(ok)
                if hits.size == 0:
                    rejections += chunk - pos
                    if rejections >= budget:
                        break
                    pos = chunk
                    continue
                first = int(hits[0])
                rejections += first
                if rejections >= budget:
                    break
                accepted.append(candidates[pos + first])
                rejections = 0
                pos += first + 1
            else:
                accepted.append(candidates[pos])
                pos += 1
        if rejections >= budget:
            break
    centers = 4.0 * delta * np.asarray(accepted)
    diff = centers[:, None, :] - centers[None, :, :]
    pairwise = np.linalg.norm(diff, axis=2)
    return PackingSet(centers=centers, delta=delta, pairwise_dist=pairwise)


def regression_lower_bound(d: int, sigma_sq: float, gamma: float, M: int, n: int, k: int) -> float:
    """Explicit minimax lower bound for the linear-regression family.

    Uses the proof's explicit constants: separation
    ``delta^2 = d sigma^2 / (64 gamma^2 (2^-d M n + k))`` and bound value
    ``delta^2 / 4``. Requires d >= 3 (the result's hypothesis).
    """
    if d <= 2:
        raise DomainError("the regression lower bound requires dimension d > 2")
    if sigma_sq <= 0 or gamma <= 0:
        raise DomainError("sigma_sq and gamma must be positive")
    if M < 0 or n < 0 or k < 0:
        raise DomainError("counts must be nonnegative")
    effective = 2.0**-d * M * n + k
    if effective <= 0:
        raise DomainError("need a positive effective sample count")
    delta_sq = d * sigma_sq / (64.0 * gamma**2 * effective)
    return delta_sq / 4.0


# ---------------------------------------------------------------------------
# Serialization (same JSON family as environments)
# ---------------------------------------------------------------------------

def packing_to_dict(ps: PackingSet) -> dict:
    return {
        "kind": "packing_set",
        "delta": ps.delta,
        "size": ps.size,
        "centers": ps.centers.tolist(),
        "pairwise_dist": ps.pairwise_dist.tolist(),
    }


def packing_from_dict(doc: dict) -> PackingSet:
    if doc.get("kind") != "packing_set":
        raise ValidationError("expected a document with kind='packing_set'")
    return PackingSet(
        centers=np.asarray(doc["centers"], dtype=float),
        delta=float(doc["delta"]),
        pairwise_dist=np.asarray(doc["pairwise_dist"], dtype=float),
    )


def kl_matrix_to_dict(kl: KLMatrix) -> dict:
    return {"kind": "kl_matrix", "values": kl.values.tolist()}


def kl_matrix_from_dict(doc: dict) -> KLMatrix:
    if doc.get("kind") != "kl_matrix":
        raise ValidationError("expected a document with kind='kl_matrix'")
    return KLMatrix(np.asarray(doc["values"], dtype=float))


def bound_record(bound_name: str, value: float, inputs: dict) -> str:
    """One JSON line describing a bound evaluation, for CLI reports."""
    return json.dumps(
        {"inputs": inputs, "bound_name": bound_name, "value": value, "base": "bits"}
    )
