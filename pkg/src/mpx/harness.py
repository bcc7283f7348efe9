"""Experiment harness: configs, seeded runs, CSV traces and property suites.

The harness is what the ``mpx`` command drives. It resolves catalog
problems, builds geometries and policies, runs one solver instance per
seed (optionally in worker processes; results are ordered by seed before
anything is written), emits CSV traces and fits log-log rate slopes.
It also hosts the executable property suites for the auxiliary
inequalities the step-size analysis rests on.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    IterationBudgetZero,
    NonPositiveGap,
    TooLarge,
    TooShort,
)
from .geometry import Ball, BregmanGeometry, Simplex
from .problems import get_problem, geometry_for
from .solver import POLICY_KINDS, RunReport, make_policy, run
from .stochastic import NOISE_KINDS, NoiseModel, NoisyOracle, martingale_lemma_check

CSV_HEADER = "t,eta,Z,gap,cum_regret"


# ---------------------------------------------------------------------------
# configuration


@dataclass
class ExperimentConfig:
    problem: str = "matgame-rps"
    geometry: str = "entropy"
    policy: str = "bsmooth"
    iters: int = 1000
    seeds: tuple[int, ...] = (0,)
    sigma: float = 0.0
    noise: str = "sphere"
    g0: float = 1.0
    c: float | None = None
    theta: float = 0.9
    diameter: float | None = None
    eta: float | None = None
    out: str | None = None

    def validate(self):
        if self.iters < 1:
            raise IterationBudgetZero("iters must be >= 1")
        if not self.seeds:
            raise ValueError("need at least one seed")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.policy not in POLICY_KINDS:
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.noise not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.noise!r}")
        if self.policy == "fixed" and self.eta is None:
            raise ValueError("fixed policy needs --eta")
        return self


_INT_KEYS = {"iters"}
_FLOAT_KEYS = {"sigma", "g0", "c", "theta", "diameter", "eta"}


def _coerce(key, value):
    if key == "seed":
        return tuple(int(s) for s in str(value).split(",") if s != "")
    if key in _INT_KEYS:
        return int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    return value


def load_config(path: str, overrides: dict | None = None) -> ExperimentConfig:
    """Read a flat key=value config file; overrides win over file values."""
    values: dict = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, raw = line.partition("=")
            values[key.strip()] = _coerce(key.strip(), raw.strip())
    values.update(overrides or {})
    if "seed" in values:
        values["seeds"] = values.pop("seed")
    return ExperimentConfig(**values).validate()


# ---------------------------------------------------------------------------
# slope fitting


@dataclass
class SlopeEstimate:
    slope: float
    intercept: float
    r_squared: float
    window: tuple[int, int]


def estimate_slope(ts, gaps, window_fraction: float = 0.5) -> SlopeEstimate:
    """OLS of log(gap) on log(t) over the last fraction of the log-t axis.

    Transients from the large initial step pollute early iterations, so the
    default window keeps the last half of the log-time axis.
    """
    ts = np.asarray(ts, dtype=float)
    gaps = np.asarray(gaps, dtype=float)
    if ts.size != gaps.size or ts.size < 10:
        raise TooShort("need at least 10 trace points for a slope fit")
    lo, hi = math.log(ts[0]), math.log(ts[-1])
    cut = hi - window_fraction * (hi - lo)
    sel = np.log(ts) >= cut - 1e-12
    t_w, g_w = ts[sel], gaps[sel]
    bad = g_w <= 0
    if np.any(bad):
        raise NonPositiveGap(f"gap <= 0 at t={int(t_w[np.argmax(bad)])}")
    lx, ly = np.log(t_w), np.log(g_w)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    total = float(np.sum((ly - np.mean(ly)) ** 2))
    r2 = 0.0 if total < 1e-30 else 1.0 - float(np.sum(resid**2)) / total
    return SlopeEstimate(float(slope), float(intercept), r2,
                         (int(t_w[0]), int(t_w[-1])))


# ---------------------------------------------------------------------------
# experiment driver


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    reports: list[RunReport]
    mean_gap: np.ndarray
    slope: SlopeEstimate | None
    paths: list[str] = field(default_factory=list)

    @property
    def t(self) -> np.ndarray:
        return self.reports[0].t


def _run_single(cfg: ExperimentConfig, seed: int) -> RunReport:
    problem = get_problem(cfg.problem)
    geometry = geometry_for(problem, cfg.geometry, cfg.diameter)
    policy = make_policy(cfg.policy, D=geometry.diameter, G0=cfg.g0,
                         c=cfg.c, eta=cfg.eta, theta=cfg.theta)
    oracle = None
    if cfg.sigma > 0:
        oracle = NoisyOracle(problem, NoiseModel(cfg.noise, cfg.sigma), seed)
    return run(problem, geometry, policy, cfg.iters, seed=seed, oracle=oracle)


def seed_path(out: str, seed: int, multi: bool) -> str:
    if not multi:
        return out
    root, ext = os.path.splitext(out)
    return f"{root}.s{seed}{ext or '.csv'}"


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentResult:
    """Run every seed, average the gap traces and fit the rate slope.

    Seeds may execute in worker processes; reports are collected and
    ordered by seed, and a single collector writes the CSVs afterwards.
    """
    cfg.validate()
    seeds = sorted(cfg.seeds)
    # fail fast on unknown problems / incompatible geometry before dispatch
    geometry_for(get_problem(cfg.problem), cfg.geometry, cfg.diameter)
    if workers and workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_run_single, [cfg] * len(seeds), seeds))
    else:
        reports = [_run_single(cfg, s) for s in seeds]

    mean_gap = np.mean(np.stack([r.gap for r in reports]), axis=0)
    slope = None
    if reports[0].t.size >= 10 and np.all(mean_gap > 0):
        slope = estimate_slope(reports[0].t, mean_gap)
    paths = []
    if cfg.out:
        for seed, rep in zip(seeds, reports):
            path = seed_path(cfg.out, seed, len(seeds) > 1)
            emit_csv(rep, path)
            paths.append(path)
    return ExperimentResult(cfg, reports, mean_gap, slope, paths)


# ---------------------------------------------------------------------------
# CSV traces


def emit_csv(report: RunReport, path: str) -> None:
    """Write metadata comments, the fixed header and full-precision rows."""
    lines = []
    for key in sorted(report.meta):
        lines.append(f"# {key}={report.meta[key]}")
    lines.append(CSV_HEADER)
    regret_known = report.meta.get("regret_available", True)
    for t, eta, z, gap, regret in report.rows():
        reg = "NA" if not regret_known or math.isnan(regret) else f"{regret:.17g}"
        lines.append(f"{t},{eta:.17g},{z:.17g},{gap:.17g},{reg}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_csv(path: str) -> RunReport:
    """Read a trace written by :func:`emit_csv` back into a report."""
    meta: dict = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key] = val
                continue
            if line == CSV_HEADER:
                continue
            t, eta, z, gap, reg = line.split(",")
            rows.append((int(t), float(eta), float(z), float(gap),
                         math.nan if reg == "NA" else float(reg)))
    arr = np.array(rows, dtype=float) if rows else np.zeros((0, 5))
    return RunReport(arr[:, 0].astype(np.int64), arr[:, 1], arr[:, 2],
                     arr[:, 3], arr[:, 4], meta)


# ---------------------------------------------------------------------------
# lemma property suites


@dataclass
class LemmaSuiteReport:
    seed: int
    sequences: int
    triples: int
    inv_sqrt_failures: int = 0
    inv_log_failures: int = 0
    three_point_failures: dict = field(default_factory=dict)
    martingale_ok: bool = True

    @property
    def passed(self) -> bool:
        return (self.inv_sqrt_failures == 0 and self.inv_log_failures == 0
                and all(v == 0 for v in self.three_point_failures.values())
                and self.martingale_ok)


def _three_point_geometries():
    return {
        "euclidean": BregmanGeometry("euclidean", Ball(np.zeros(3), 2.0)),
        "entropy": BregmanGeometry("entropy", Simplex(4)),
        "cube": BregmanGeometry("cube", Ball(np.zeros(3), 1.5)),
    }


def three_point_check(geometry: BregmanGeometry, rng: np.random.Generator,
                      triples: int = 1000, tol: float = 1e-9) -> int:
    """Count violations of the prox three-point inequality over random triples."""
    failures = 0
    for _ in range(triples):
        x = geometry.sample_interior(rng)
        d = rng.standard_normal(geometry.set.dim) * rng.uniform(0.1, 3.0)
        xp = geometry.prox(x, d, 1.0)
        p = geometry.sample_interior(rng)
        lhs = float((xp - p) @ d)
        rhs = (geometry.divergence(p, x) - geometry.divergence(p, xp)
               - geometry.divergence(xp, x))
        if lhs > rhs + tol:
            failures += 1
    return failures


def lemma_suite(seed: int = 0, sequences: int = 1000,
                triples: int = 1000) -> LemmaSuiteReport:
    """Run the inverse-sum, three-point and martingale property checks.

    For random sequences a_i in [0, a] with a_0 >= 1 the two accumulator
    sums are checked against their closed-form lower/upper bounds; the
    three-point inequality is sampled per geometry kind; the martingale
    bound is estimated by Monte-Carlo.
    """
    rng = np.random.default_rng(seed)
    report = LemmaSuiteReport(seed, sequences, triples)
    tol = 1e-9
    for _ in range(sequences):
        n = int(rng.integers(1, 120))
        a = float(rng.uniform(0.05, 5.0))
        a0 = float(rng.uniform(1.0, 10.0))
        ai = rng.uniform(0.0, a, n)
        prefix = a0 + np.concatenate([[0.0], np.cumsum(ai)[:-1]])
        total = a0 + float(np.sum(ai))
        mid_sqrt = float(np.sum(ai / np.sqrt(prefix)))
        lower = math.sqrt(total) - math.sqrt(a0)
        upper = 2.0 * a / math.sqrt(a0) + 3.0 * math.sqrt(a) + 3.0 * math.sqrt(total)
        if not (lower - tol <= mid_sqrt <= upper + tol):
            report.inv_sqrt_failures += 1
        mid_log = float(np.sum(ai / prefix))
        log_bound = 2.0 + 4.0 * a / a0 + 2.0 * math.log(1.0 + float(np.sum(ai[:-1])) / a0)
        if mid_log > log_bound + tol:
            report.inv_log_failures += 1
    for kind, geom in _three_point_geometries().items():
        report.three_point_failures[kind] = three_point_check(geom, rng, triples)
    report.martingale_ok = martingale_lemma_check(D=2.0, trials=2000, n=40, seed=seed)
    return report


# ---------------------------------------------------------------------------
# brute-force matrix game oracle


def _min_of_max(B: np.ndarray, grid: int):
    """Minimize max(B @ w) over the simplex by grid search plus refinement."""
    k = B.shape[1]

    def value(w):
        return float(np.max(B @ w))

    if k == 1:
        w = np.array([1.0])
        return value(w), w
    if k == 2:
        lo, hi = 0.0, 1.0
        for _ in range(200):
            m1 = lo + (hi - lo) / 3.0
            m2 = hi - (hi - lo) / 3.0
            if value(np.array([m1, 1 - m1])) <= value(np.array([m2, 1 - m2])):
                hi = m2
            else:
                lo = m1
        w = np.array([(lo + hi) / 2.0, 1.0 - (lo + hi) / 2.0])
        return value(w), w
    # k == 3: barycentric grid then shrinking local grids
    best_w, best_v = None, math.inf
    for i in range(grid + 1):
        for j in range(grid + 1 - i):
            w = np.array([i, j, grid - i - j], dtype=float) / grid
            v = value(w)
            if v < best_v:
                best_v, best_w = v, w
    radius = 1.0 / grid
    for _ in range(12):
        # deterministic local grid around the incumbent
        deltas = np.linspace(-radius, radius, 9)
        for d1 in deltas:
            for d2 in deltas:
                w = best_w + np.array([d1, d2, -(d1 + d2)])
                if np.any(w < 0):
                    continue
                w = w / np.sum(w)
                v = value(w)
                if v < best_v:
                    best_v, best_w = v, w
        radius *= 0.35
    return best_v, best_w


def brute_force_game(A, grid: int = 200):
    """Minimax value and equilibrium strategies by exhaustive search.

    Only small games (both sides at most 3 strategies) are supported; the
    inner linear problems are exact by vertex enumeration and the outer
    simplex search refines a dense grid locally.
    """
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    if m > 3 or n > 3:
        raise TooLarge("brute force oracle limited to 3x3 games")
    if grid < 100:
        raise TooLarge("grid resolution must be at least 100")
    value_z, z_star = _min_of_max(A.T, grid)   # min_z max_j (A^T z)_j
    neg_value_y, y_star = _min_of_max(-A, grid)  # max_y min_i (A y)_i
    value = 0.5 * (value_z - neg_value_y)
    return value, z_star, y_star
