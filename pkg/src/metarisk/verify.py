"""Randomized verification suites for the package's provable inequalities.

Each suite draws randomized instances, checks an inequality that should hold
with zero violations, and reports the worst observed slack (bound minus exact
value) together with a serialized failing instance when one exists. The CLI
``verify`` command runs everything and exits nonzero on any failure; the
acceptance tests call the same functions so the two surfaces cannot drift.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fano, matan

# Floating-point grace for comparisons of exactly provable inequalities.
_TOL = 1e-9


@dataclass
class SuiteResult:
    name: str
    cases: int
    failures: int
    worst_slack: float
    failing_example: dict | None = None
    records: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "cases": self.cases,
            "failures": self.failures,
            "worst_slack": self.worst_slack,
            "failing_example": self.failing_example,
        }


class _Tracker:
    def __init__(self, name):
        self.name = name
        self.cases = 0
        self.failures = 0
        self.worst = np.inf
        self.example = None

    def check(self, slack: float, instance: dict):
        self.cases += 1
        if slack < self.worst:
            self.worst = slack
        if slack < -_TOL:
            self.failures += 1
            if self.example is None:
                self.example = dict(instance, slack=slack)

    def result(self) -> SuiteResult:
        worst = self.worst if self.cases else 0.0
        return SuiteResult(self.name, self.cases, self.failures, float(worst), self.example)


# ---------------------------------------------------------------------------
# Matrix lemma suite
# ---------------------------------------------------------------------------

def matrix_lemma_suite(cases: int = 1000, seed: int = 0) -> list[SuiteResult]:
    """Singular-value sum/product lemmas and the trace bound on random pairs."""
    rng = np.random.default_rng(seed)
    sum_max = _Tracker("singular-sum-max")
    sum_min_pd = _Tracker("singular-sum-min-pd")
    prod = _Tracker("singular-product")
    trace = _Tracker("trace-bound")

    for case in range(cases):
        m = int(rng.integers(1, 7))
        n = int(rng.integers(1, 7))
        a = rng.standard_normal((m, n))
        b = rng.standard_normal((m, n))
        ea, eb, es = (matan.singular_extremes(x) for x in (a, b, a + b))
        sum_max.check(ea.s_max + eb.s_max - es.s_max, {"case": case, "shape": [m, n]})

        spd_a = _random_spd(rng, m)
        spd_b = _random_spd(rng, m)
        ea, eb, es = (matan.singular_extremes(x) for x in (spd_a, spd_b, spd_a + spd_b))
        sum_min_pd.check(es.s_min - (ea.s_min + eb.s_min), {"case": case, "size": m})

        sa = rng.standard_normal((m, m))
        sb = rng.standard_normal((m, m))
        ea, eb, ep = (matan.singular_extremes(x) for x in (sa, sb, sa @ sb))
        scale = max(ea.s_max * eb.s_max, 1.0)
        prod.check((ea.s_max * eb.s_max - ep.s_max) / scale, {"case": case, "size": m, "which": "max"})
        prod.check((ep.s_min - ea.s_min * eb.s_min) / scale, {"case": case, "size": m, "which": "min"})

        vn = matan.von_neumann_bound(sa, sb)
        tr = abs(float(np.trace(sa @ sb)))
        scale = max(vn, 1.0)
        trace.check((vn - tr) / scale, {"case": case, "size": m, "which": "lower"})
        trace.check((m * ea.s_max * eb.s_max - vn) / scale, {"case": case, "size": m, "which": "upper"})

    return [sum_max.result(), sum_min_pd.result(), prod.result(), trace.result()]


def _random_spd(rng, m):
    x = rng.standard_normal((m, m + 1))
    g = x @ x.T
    g[np.diag_indices_from(g)] += 0.1
    return g


# ---------------------------------------------------------------------------
# Exact-MI / packing-lemma suite
# ---------------------------------------------------------------------------

def _random_dists(rng, j, alphabet):
    # Full support keeps all pairwise divergences finite.
    raw = rng.dirichlet(np.ones(alphabet), size=j)
    return 0.8 * raw + 0.2 / alphabet


def random_discrete_instance(rng, scheme: str) -> fano.DiscreteMeta:
    """One randomized small environment within the enumeration budget."""
    j = int(rng.integers(2, 5))
    alphabet = int(rng.integers(2, 5))
    dists = _random_dists(rng, j, alphabet)
    if scheme == "mixture":
        m = j - 1
        n = int(rng.integers(1, 9))
    else:
        m = int(rng.integers(1, j))
        n = int(rng.integers(1, 8 // m + 1))
    k = int(rng.integers(0, 9))
    return fano.DiscreteMeta(dists=dists, M=m, n=n, k=k, scheme=scheme)


def _instance_doc(dm: fano.DiscreteMeta) -> dict:
    return {
        "dists": dm.dists.tolist(),
        "M": dm.M,
        "n": dm.n,
        "k": dm.k,
        "scheme": dm.scheme,
    }


def mi_lemma_suite(cases: int = 200, seed: int = 0) -> list[SuiteResult]:
    """Exact mutual information versus every applicable packing-lemma bound.

    Also checks the optimal-decoder error against the Fano floor on the
    novel-task joint, and the subadditivity of the joint information on
    instances small enough to enumerate jointly.
    """
    rng = np.random.default_rng(seed)
    local = _Tracker("local-packing")
    product = _Tracker("product-packing")
    mixture = _Tracker("mixture-packing")
    decoder = _Tracker("fano-decoder")
    subadd = _Tracker("mi-subadditivity")
    records = []

    for case in range(cases):
        scheme = "mixture" if case % 2 else "product"
        dm = random_discrete_instance(rng, scheme)
        doc = dict(_instance_doc(dm), case=case)
        kl = fano.discrete_kl_matrix(dm.dists)
        mi_w, mi_z = fano.exact_task_mi(dm)

        if dm.k:
            bound = fano.mi_bound_local_packing(kl, dm.k)
            local.check(bound - mi_z, doc)
            records.append({"inputs": doc, "bound_name": "local_packing", "value": bound, "base": "bits"})
        if scheme == "product":
            bound = fano.mi_bound_product_packing(kl, dm.M, dm.n)
            product.check(bound - mi_w, doc)
            records.append({"inputs": doc, "bound_name": "product_packing", "value": bound, "base": "bits"})
        else:
            bound = fano.mi_bound_mixture_packing(kl, dm.n)
            mixture.check(bound - mi_w, doc)
            records.append({"inputs": doc, "bound_name": "mixture_packing", "value": bound, "base": "bits"})

        if dm.k:
            cond = np.asarray([fano._product_pmf(dm.dists[i], dm.k) for i in range(dm.J)])
            joint = cond / dm.J
            err = fano.map_decoder_error(joint)
            decoder.check(err - fano.fano_decoder_floor(joint), doc)

        if dm.alphabet ** (dm.M * dm.n + dm.k) <= 4096 and dm.k and dm.n:
            joint_mi = fano.exact_joint_mi(dm)
            subadd.check(mi_w + mi_z - joint_mi, doc)

    results = [local.result(), product.result(), mixture.result(), decoder.result(), subadd.result()]
    results[0].records = records
    return results


def fano_decoder_suite(cases: int = 200, seed: int = 0) -> SuiteResult:
    """Optimal-decoder error versus the Fano floor on random finite joints."""
    rng = np.random.default_rng(seed)
    tracker = _Tracker("fano-decoder-random-joints")
    for case in range(cases):
        ny = int(rng.integers(2, 9))
        nz = int(rng.integers(2, 17))
        joint = rng.dirichlet(np.ones(ny * nz)).reshape(ny, nz)
        err = fano.map_decoder_error(joint)
        floor = fano.fano_decoder_floor(joint)
        tracker.check(err - floor, {"case": case, "shape": [ny, nz]})
    return tracker.result()


def packing_suite(budget: int = 100_000, seed: int = 0, dims=(1, 2, 3, 4)) -> SuiteResult:
    """Separation and cardinality checks for the greedy packing construction."""
    tracker = _Tracker("greedy-packing")
    for d in dims:
        ps = fano.greedy_packing(d, delta=0.25, budget=budget, seed=seed + d)
        off = ps.pairwise_dist[~np.eye(ps.size, dtype=bool)]
        sep_slack = float(off.min() - 2 * ps.delta) if ps.size >= 2 else np.inf
        tracker.check(sep_slack, {"d": d, "size": ps.size, "check": "separation"})
        if d <= 4:
            tracker.check(float(ps.size - 2**d), {"d": d, "size": ps.size, "check": "cardinality"})
    return tracker.result()


def run_all(
    mi_cases: int = 200,
    matrix_cases: int = 1000,
    decoder_cases: int = 200,
    packing_budget: int = 100_000,
    seed: int = 0,
) -> dict:
    """Run every suite and assemble the JSON-ready report."""
    suites: list[SuiteResult] = []
    suites.extend(matrix_lemma_suite(matrix_cases, seed))
    suites.extend(mi_lemma_suite(mi_cases, seed + 1))
    suites.append(fano_decoder_suite(decoder_cases, seed + 2))
    suites.append(packing_suite(packing_budget, seed + 3))
    records = []
    for s in suites:
        records.extend(s.records)
    total_failures = sum(s.failures for s in suites)
    return {
        "suites": [s.to_dict() for s in suites],
        "bound_records": records,
        "total_failures": total_failures,
        "budgets": {
            "mi_cases": mi_cases,
            "matrix_cases": matrix_cases,
            "decoder_cases": decoder_cases,
            "packing_budget": packing_budget,
            "seed": seed,
        },
    }
