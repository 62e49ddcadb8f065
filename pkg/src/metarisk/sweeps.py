"""Experiment sweeps: config parsing, per-grid-point evaluation, CSV output.

A sweep config is a strict-schema JSON document: a base environment block,
a sweep axis with a grid, a list of named (M, n, k) configurations, and
repetition/seed settings. Unknown keys anywhere are hard errors so a typo in
a sweep definition cannot silently change an experiment.

Grid points are independent given their derived seeds, so they may be
evaluated in parallel; rows are always collected and written in (config,
grid) order, which keeps the CSV byte-identical regardless of worker count.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import fano, matan, risk
from .exceptions import SingularMatrixError, ValidationError
from .model import Environment, HyperPrior, bound_constants, sample_environment
from .risk import exact_risk, mc_risk, risk_upper_bound

CSV_HEADER = (
    "config_id,sweep_value,risk_exact,bias_sq,var_novel,var_source,"
    "risk_mc,risk_mc_se,upper_thm52,upper_asymptotic,lower_thm51"
)

AXES = (
    "novel_noise_sq",
    "total_data_add_tasks",
    "total_data_add_k",
    "k",
    "n",
    "M",
)

RISK_MODES = ("frequentist", "bayes-averaged")

_BASE_KEYS = {
    "d": True,
    "tau": True,
    "sigma_theta_sq": True,
    "noise_sq_source": True,
    "noise_sq_novel": True,
    "design_kind": True,
    "x_range": False,
    "clip_theta_unit_ball": False,
    "shared_source_design": False,
}
_TOP_KEYS = {"base": True, "sweep": True, "configs": True, "reps": False, "risk_mode": False, "seed": True}
_SWEEP_KEYS = {"axis": True, "grid": True}
_ENTRY_KEYS = {"id": True, "M": True, "n": True, "k": True, "axis": False}

PRESETS = ("fig3a", "fig3b")


@dataclass(frozen=True)
class ConfigEntry:
    id: str
    M: int
    n: int
    k: int
    axis: str | None = None


@dataclass(frozen=True)
class SweepConfig:
    d: int
    tau: tuple[float, ...]
    sigma_theta_sq: float
    noise_sq_source: float
    noise_sq_novel: float
    design_kind: str
    x_range: tuple[float, float]
    clip_theta_unit_ball: bool
    shared_source_design: bool
    axis: str
    grid: tuple
    configs: tuple[ConfigEntry, ...]
    reps: int
    risk_mode: str
    seed: int


@dataclass(frozen=True)
class ResultRow:
    """One CSV row; None renders as an empty cell."""

    config_id: str
    sweep_value: float
    risk_exact: float | None
    bias_sq: float | None
    var_novel: float | None
    var_source: float | None
    risk_mc: float | None
    risk_mc_se: float | None
    upper_thm52: float | None
    upper_asymptotic: float | None
    lower_thm51: float | None


def _require_keys(doc: dict, schema: dict, where: str):
    unknown = sorted(set(doc) - set(schema))
    if unknown:
        raise ValidationError(f"unknown keys in {where}: {', '.join(unknown)}")
    missing = sorted(key for key, required in schema.items() if required and key not in doc)
    if missing:
        raise ValidationError(f"missing keys in {where}: {', '.join(missing)}")


def parse_config(doc: dict) -> SweepConfig:
    """Validate a parsed JSON document into a SweepConfig."""
    if not isinstance(doc, dict):
        raise ValidationError("config root must be an object")
    _require_keys(doc, _TOP_KEYS, "config")
    base = doc["base"]
    _require_keys(base, _BASE_KEYS, "base")
    sweep = doc["sweep"]
    _require_keys(sweep, _SWEEP_KEYS, "sweep")

    d = int(base["d"])
    tau = tuple(float(v) for v in base["tau"])
    if len(tau) != d:
        raise ValidationError(f"tau has length {len(tau)} but d = {d}")
    axis = sweep["axis"]
    if axis not in AXES:
        raise ValidationError(f"unknown sweep axis {axis!r}; expected one of {AXES}")
    grid = tuple(sweep["grid"])
    if not grid:
        raise ValidationError("sweep grid must be nonempty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValidationError("sweep grid must be strictly increasing")

    entries = []
    seen = set()
    if not doc["configs"]:
        raise ValidationError("configs list must be nonempty")
    for i, entry in enumerate(doc["configs"]):
        _require_keys(entry, _ENTRY_KEYS, f"configs[{i}]")
        entry_axis = entry.get("axis")
        if entry_axis is not None and entry_axis not in AXES:
            raise ValidationError(f"unknown axis {entry_axis!r} in configs[{i}]")
        cid = str(entry["id"])
        if cid in seen:
            raise ValidationError(f"duplicate config id {cid!r}")
        seen.add(cid)
        m, n, k = int(entry["M"]), int(entry["n"]), int(entry["k"])
        if m < 0 or n < 1 or k < 1:
            raise ValidationError(f"configs[{i}] needs M >= 0, n >= 1, k >= 1")
        entries.append(ConfigEntry(cid, m, n, k, entry_axis))

    reps = int(doc.get("reps", 0))
    if reps == 1 or reps < 0:
        raise ValidationError("reps must be 0 (no Monte-Carlo columns) or >= 2")
    risk_mode = doc.get("risk_mode", "frequentist")
    if risk_mode not in RISK_MODES:
        raise ValidationError(f"unknown risk_mode {risk_mode!r}; expected one of {RISK_MODES}")

    x_range = tuple(float(v) for v in base.get("x_range", (-1.0, 1.0)))
    if len(x_range) != 2 or x_range[0] > x_range[1]:
        raise ValidationError("x_range must be [low, high] with low <= high")

    return SweepConfig(
        d=d,
        tau=tau,
        sigma_theta_sq=float(base["sigma_theta_sq"]),
        noise_sq_source=float(base["noise_sq_source"]),
        noise_sq_novel=float(base["noise_sq_novel"]),
        design_kind=str(base["design_kind"]),
        x_range=x_range,
        clip_theta_unit_ball=bool(base.get("clip_theta_unit_ball", False)),
        shared_source_design=bool(base.get("shared_source_design", False)),
        axis=axis,
        grid=grid,
        configs=tuple(entries),
        reps=reps,
        risk_mode=risk_mode,
        seed=int(doc["seed"]),
    )


def load_config(path_or_preset: str) -> SweepConfig:
    """Load a config from a JSON file path or a named preset."""
    if path_or_preset in PRESETS:
        text = resources.files("metarisk.presets").joinpath(f"{path_or_preset}.json").read_text()
    else:
        with open(path_or_preset, encoding="utf-8") as handle:
            text = handle.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc}") from exc
    return parse_config(doc)


def derive_seed(seed: int, *key: int) -> int:
    """Stable 64-bit child seed for a role/index key."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(key))
    return int(ss.generate_state(1, np.uint64)[0])


def _apply_axis(entry: ConfigEntry, cfg: SweepConfig, axis: str, value):
    m, n, k = entry.M, entry.n, entry.k
    noise_novel = cfg.noise_sq_novel
    if axis == "novel_noise_sq":
        noise_novel = float(value)
        if noise_novel <= 0:
            raise ValidationError(f"novel noise grid value {value} must be positive")
    elif axis == "k":
        k = _as_count(value, "k", 1)
    elif axis == "n":
        n = _as_count(value, "n", 1)
    elif axis == "M":
        m = _as_count(value, "M", 0)
    elif axis == "total_data_add_tasks":
        total = _as_count(value, "total data", 1)
        extra = total - entry.k
        if extra < 0 or extra % entry.n:
            raise ValidationError(
                f"total {total} is not k + (whole number of tasks) * n for config {entry.id!r}"
            )
        m = extra // entry.n
    elif axis == "total_data_add_k":
        total = _as_count(value, "total data", 1)
        k = total - entry.M * entry.n
        if k < 1:
            raise ValidationError(f"total {total} leaves no novel samples for config {entry.id!r}")
    return m, n, k, noise_novel


def _as_count(value, name, minimum):
    if float(value) != int(value):
        raise ValidationError(f"{name} grid value {value} must be an integer")
    value = int(value)
    if value < minimum:
        raise ValidationError(f"{name} grid value {value} below minimum {minimum}")
    return value


def _asymptotic_only(env: Environment, m: int, k: int, d: int) -> float | None:
    sigma_novel_sq = env.novel_task.noise_sq
    alpha2 = sigma_novel_sq / env.prior.sigma_theta_sq
    if m == 0:
        return float(risk.asymptotic_bound(alpha2, 0, 1.0, k, d, sigma_novel_sq))
    exts = [matan.singular_extremes(t.design / np.sqrt(t.rows)) for t in env.source_tasks]
    s1 = min(e.s_min for e in exts)
    if s1 <= 0:
        return None
    kappa = max(e.s_max for e in exts) / s1
    return float(risk.asymptotic_bound(alpha2, m, kappa, k, d, sigma_novel_sq))


def _max_design_smax(env: Environment) -> float:
    gammas = [
        matan.singular_extremes(t.design / np.sqrt(t.rows)).s_max
        for t in (*env.source_tasks, env.novel_task)
    ]
    return max(gammas)


def evaluate_point(cfg: SweepConfig, ci: int, gi: int, *, include_mc: bool = True) -> ResultRow:
    """Evaluate one (config, grid point) cell of the sweep."""
    entry = cfg.configs[ci]
    value = cfg.grid[gi]
    axis = entry.axis or cfg.axis
    m, n, k, noise_novel = _apply_axis(entry, cfg, axis, value)
    prior = HyperPrior(np.asarray(cfg.tau), cfg.sigma_theta_sq)
    env = sample_environment(
        prior, m, n, k,
        cfg.noise_sq_source, noise_novel,
        design_kind=cfg.design_kind,
        seed=derive_seed(cfg.seed, 8, ci),
        x_range=cfg.x_range,
        clip_theta_unit_ball=cfg.clip_theta_unit_ball,
        shared_source_design=cfg.shared_source_design,
    )

    risk_exact = bias_sq = var_novel = var_source = None
    if m >= 1:
        report = exact_risk(env)
        risk_exact, bias_sq = report.total, report.bias_sq
        var_novel, var_source = report.var_novel, report.var_source

    risk_mc = risk_mc_se = None
    if include_mc and cfg.reps >= 2 and m >= 1:
        risk_mc, risk_mc_se = mc_risk(
            env, cfg.reps,
            seed=derive_seed(cfg.seed, 9, ci, gi),
            redraw_thetas=cfg.risk_mode == "bayes-averaged",
        )

    upper = upper_asym = None
    try:
        consts = bound_constants(env, mode="exact")
        ub = risk_upper_bound(consts, cfg.d, m, n, k, env.novel_task.noise_sq)
        upper, upper_asym = float(ub.value), float(ub.asymptotic_value)
    except SingularMatrixError:
        # Rank-deficient designs fall outside the headline bound's
        # hypotheses; the cell stays empty rather than reporting a vacuous
        # number. The large-n asymptote only needs the source-side condition
        # number, so it survives a rank-deficient novel design.
        upper_asym = _asymptotic_only(env, m, k, cfg.d)

    lower = None
    if cfg.d >= 3:
        lower = fano.regression_lower_bound(
            cfg.d, env.novel_task.noise_sq, _max_design_smax(env), m, n, k
        )

    return ResultRow(
        config_id=entry.id,
        sweep_value=value,
        risk_exact=risk_exact,
        bias_sq=bias_sq,
        var_novel=var_novel,
        var_source=var_source,
        risk_mc=risk_mc,
        risk_mc_se=risk_mc_se,
        upper_thm52=upper,
        upper_asymptotic=upper_asym,
        lower_thm51=lower,
    )


def _point_task(args):
    cfg, ci, gi, include_mc = args
    return (ci, gi), evaluate_point(cfg, ci, gi, include_mc=include_mc)


def run_sweep(cfg: SweepConfig, *, include_mc: bool = True, workers: int = 1) -> list[ResultRow]:
    """Evaluate the whole grid, rows ordered by (config, grid point)."""
    points = [(cfg, ci, gi, include_mc) for ci in range(len(cfg.configs)) for gi in range(len(cfg.grid))]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            collected = dict(pool.map(_point_task, points))
    else:
        collected = dict(map(_point_task, points))
    return [collected[(ci, gi)] for ci in range(len(cfg.configs)) for gi in range(len(cfg.grid))]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def rows_to_csv(rows) -> str:
    """Render rows with full round-trip precision under the fixed header."""
    lines = [CSV_HEADER]
    for row in rows:
        lines.append(",".join(_cell(v) for v in (
            row.config_id, row.sweep_value, row.risk_exact, row.bias_sq,
            row.var_novel, row.var_source, row.risk_mc, row.risk_mc_se,
            row.upper_thm52, row.upper_asymptotic, row.lower_thm51,
        )))
    return "\n".join(lines) + "\n"
