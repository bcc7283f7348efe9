"""Monotone VI problem instances, regularity tags and exact gap evaluators.

Every problem bundles a monotone operator F over a feasible set with one
exact gap evaluator (duality gap for games, suboptimality for convex
objectives, residual for the multiplayer game) and a set of declared
regularity constants that :func:`certify_regularity` can audit by
sampling.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    CouplingTooLarge,
    DimensionMismatch,
    DimensionTooSmall,
    EmptyMatrix,
    IncompatibleGeometry,
    NotPSD,
    UnknownProblem,
)
from .geometry import Ball, Box, BregmanGeometry, FeasibleSet, Product, Simplex, as_point

Array = np.ndarray

LIPSCHITZ_SMOOTH = "lipschitz-smooth"
LIPSCHITZ_BOUNDED = "lipschitz-bounded"
BREGMAN_SMOOTH = "bregman-smooth"
BREGMAN_BOUNDED = "bregman-bounded"


@dataclass(frozen=True)
class RegularityClass:
    """A declared regularity tag with its constant."""

    tag: str
    constant: float

    def __post_init__(self):
        if not (self.constant > 0 and math.isfinite(self.constant)):
            raise ValueError(f"regularity constant must be positive, got {self.constant}")


class MonotoneProblem:
    """A monotone operator with its feasible set and gap evaluator.

    Immutable after construction; the operator and gap are pure functions.
    """

    def __init__(self, name: str, feasible_set: FeasibleSet,
                 operator: Callable[[Array], Array],
                 regularity: Sequence[RegularityClass],
                 gap: Callable[[Array], float], gap_kind: str,
                 known_solution: Array | None = None,
                 objective: Callable[[Array], float] | None = None,
                 geometries: tuple[str, ...] = ("euclidean",)):
        self.name = name
        self.set = feasible_set
        self.operator = operator
        self.regularity = tuple(regularity)
        self.gap = gap
        self.gap_kind = gap_kind
        self.known_solution = None if known_solution is None else np.asarray(
            known_solution, dtype=float)
        self.objective = objective
        self.geometries = geometries

    def constant(self, tag: str) -> float | None:
        for r in self.regularity:
            if r.tag == tag:
                return r.constant
        return None

    def __repr__(self):
        return f"MonotoneProblem({self.name!r}, dim={self.set.dim})"


def evaluate(problem: MonotoneProblem, x) -> Array:
    """Operator value F(x) with dimension validation."""
    x = as_point(x, problem.set.dim)
    out = np.asarray(problem.operator(x), dtype=float)
    if out.shape != x.shape:
        raise DimensionMismatch("operator returned a vector of the wrong length")
    return out


# ---------------------------------------------------------------------------
# matrix games


def saddle_gap(A, z, y) -> float:
    """Nonnegative duality gap max_j (A^T z)_j - min_i (A y)_i.

    The inner linear problems over the simplices are solved exactly by
    vertex enumeration, i.e. coordinate max/min.
    """
    A = np.asarray(A, dtype=float)
    z = as_point(z, A.shape[0])
    y = as_point(y, A.shape[1])
    return float(np.max(A.T @ z) - np.min(A @ y))


def make_matrix_game(A, name: str = "matgame",
                     known_solution=None) -> MonotoneProblem:
    """Zero-sum matrix game min_z max_y z^T A y on a product of simplices.

    The operator is F(z, y) = (A y, -A^T z). Constants are declared for the
    entropy pairing on the product set (blockwise l1 primal norm): the
    smoothness constant is max|A_ij| and the operator bound carries the
    sqrt(2) block factor.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.size == 0:
        raise EmptyMatrix("payoff matrix must be a nonempty 2-d array")
    if not np.all(np.isfinite(A)):
        raise EmptyMatrix("payoff matrix must be finite")
    m, n = A.shape
    amax = float(np.max(np.abs(A))) if A.size else 0.0
    amax = max(amax, 1e-12)
    feasible = Product([Simplex(m), Simplex(n)])

    def operator(x):
        return np.concatenate([A @ x[m:], -(A.T @ x[:m])])

    def gap(x):
        return float(np.max(A.T @ x[:m]) - np.min(A @ x[m:]))

    return MonotoneProblem(
        name, feasible, operator,
        regularity=(RegularityClass(LIPSCHITZ_SMOOTH, amax),
                    RegularityClass(LIPSCHITZ_BOUNDED, math.sqrt(2.0) * amax)),
        gap=gap, gap_kind="saddle", known_solution=known_solution,
        geometries=("entropy", "euclidean"))


# ---------------------------------------------------------------------------
# max of convex quadratics


def _maxquad_value_and_active(pieces, x):
    vals = [0.5 * float(x @ (Q @ x)) + float(b @ x) for Q, b in pieces]
    top = max(vals)
    for i, v in enumerate(vals):
        if v >= top - 1e-12:
            return top, i
    return top, 0


def _maxquad_oracle(pieces, radius):
    """Brute-force minimum of the max of quadratics over the ball (dim <= 2).

    Dense grid at resolution radius/2000, then local refinement: a short
    decaying subgradient polish plus closed-form candidates from single
    pieces and equal-curvature piece intersections.
    """
    dim = pieces[0][0].shape[0]
    steps = 2001

    def f(x):
        return _maxquad_value_and_active(pieces, x)[0]

    axis = np.linspace(-radius, radius, 2 * steps - 1)
    if dim == 1:
        pts = axis[np.abs(axis) <= radius].reshape(-1, 1)
    else:
        X, Y = np.meshgrid(axis, axis, indexing="ij")
        mask = X**2 + Y**2 <= radius**2
        pts = np.stack([X[mask], Y[mask]], axis=1)
    vals = None
    for Q, b in pieces:
        quad = 0.5 * np.einsum("ni,ij,nj->n", pts, Q, pts) + pts @ b
        vals = quad if vals is None else np.maximum(vals, quad)
    i = int(np.argmin(vals))
    best_x, best_f = pts[i], float(vals[i])

    # decaying subgradient polish from the grid minimizer
    x = best_x.copy()
    step = radius / 2000.0
    ball = Ball(np.zeros(dim), radius)
    for k in range(50):
        _, a = _maxquad_value_and_active(pieces, x)
        g = pieces[a][0] @ x + pieces[a][1]
        ng = float(np.linalg.norm(g))
        if ng == 0.0:
            break
        x = ball.project(x - (step * 0.85**k) * g / ng)
        fx = f(x)
        if fx < best_f:
            best_f, best_x = fx, x.copy()

    # closed-form candidates
    cands = []
    for Q, b in pieces:
        try:
            cands.append(np.linalg.solve(Q, -b))
        except np.linalg.LinAlgError:
            pass
    for i in range(len(pieces)):
        for j in range(i + 1, len(pieces)):
            Qi, bi = pieces[i]
            Qj, bj = pieces[j]
            if not np.allclose(Qi, Qj):
                continue
            delta = bi - bj
            try:
                qinv_b = np.linalg.solve(Qi, bi)
                qinv_d = np.linalg.solve(Qi, delta)
            except np.linalg.LinAlgError:
                continue
            denom = float(delta @ qinv_d)
            if abs(denom) < 1e-14:
                continue
            mu = -float(delta @ qinv_b) / denom
            cands.append(-(qinv_b + mu * qinv_d))
    for c in cands:
        c = ball.project(c)
        fc = f(c)
        if fc < best_f:
            best_f, best_x = fc, c
    return best_f, best_x


def make_max_quadratics(pieces, radius: float, f_star: float | None = None,
                        name: str = "maxquad") -> MonotoneProblem:
    """f(x) = max_i {1/2 x^T Q_i x + b_i^T x} over a Euclidean ball.

    The operator returns the gradient of the active piece; ties within
    1e-12 break to the lowest index for reproducible traces. The Bregman
    boundedness constant against the cube-norm geometry is measured by
    sampling at construction. For dim >= 3 supply ``f_star``.
    """
    pieces = [(np.asarray(Q, dtype=float), np.asarray(b, dtype=float))
              for Q, b in pieces]
    if not pieces:
        raise EmptyMatrix("need at least one quadratic piece")
    dim = pieces[0][0].shape[0]
    for Q, b in pieces:
        if Q.shape != (dim, dim) or b.shape != (dim,):
            raise DimensionMismatch("quadratic pieces disagree in dimension")
        if float(np.min(np.linalg.eigvalsh(0.5 * (Q + Q.T)))) < -1e-10:
            raise NotPSD("quadratic piece matrix is not positive semidefinite")
    feasible = Ball(np.zeros(dim), radius)

    def operator(x):
        _, a = _maxquad_value_and_active(pieces, x)
        return pieces[a][0] @ x + pieces[a][1]

    def objective(x):
        return _maxquad_value_and_active(pieces, x)[0]

    if f_star is None:
        if dim > 2:
            raise DimensionTooSmall(
                "grid oracle only covers dim <= 2; pass f_star explicitly")
        f_star, x_star = _maxquad_oracle(pieces, radius)
    else:
        x_star = None

    # measure the Bregman boundedness constant against the cube geometry
    geom = BregmanGeometry("cube", feasible)
    rng = np.random.default_rng(zlib.crc32(name.encode()) & 0xFFFF)
    ratio = 0.0
    for _ in range(20_000):
        x = feasible.sample(rng)
        y = feasible.sample(rng)
        sep = float(np.linalg.norm(x - y))
        div = geom.divergence(y, x)
        if sep < 1e-9 or div < 1e-18:
            continue
        ratio = max(ratio, float(np.linalg.norm(operator(x))) * sep / math.sqrt(div))
    m_const = 1.05 * ratio
    g_prime = max(float(np.max(np.linalg.eigvalsh(0.5 * (Q + Q.T)))) * radius
                  + float(np.linalg.norm(b)) for Q, b in pieces)

    return MonotoneProblem(
        name, feasible, operator,
        regularity=(RegularityClass(BREGMAN_BOUNDED, m_const),
                    RegularityClass(LIPSCHITZ_BOUNDED, g_prime)),
        gap=lambda x: objective(x) - f_star, gap_kind="convex",
        known_solution=x_star, objective=objective,
        geometries=("cube", "euclidean"))


# ---------------------------------------------------------------------------
# entropy-singular toy


def make_entropic_toy(n: int, target=None, name: str = "entropic") -> MonotoneProblem:
    """Minimize sum_i x_i log(x_i / q_i) on the simplex.

    With the default uniform target this is f(x) = sum x log x with optimum
    -log n at the uniform point. The operator log(x) - log(q) + 1 blows up
    at the simplex boundary, so no finite Lipschitz constant exists; the
    geometry-relative smoothness constant is measured over interior pairs
    (coordinates floored at 1e-6) at construction and cached.
    """
    if n < 2:
        raise DimensionTooSmall("entropic toy needs n >= 2")
    feasible = Simplex(n)
    if target is None:
        q = np.full(n, 1.0 / n)
        f_star = -math.log(n)
    else:
        q = as_point(target, n)
        if not (feasible.contains(q) and np.all(q > 1e-9)):
            raise DimensionMismatch("target must be an interior simplex point")
        f_star = 0.0
    log_q = np.log(q)
    base = float(log_q @ q)  # f(x) = sum x log x - x.log q; f(q) = base - base

    def operator(x):
        return np.log(np.maximum(x, 1e-300)) - log_q + 1.0

    def objective(x):
        xp = np.maximum(x, 0.0)
        terms = np.where(xp > 0, xp * (np.log(np.where(xp > 0, xp, 1.0)) - log_q), 0.0)
        return float(np.sum(terms))

    geom = BregmanGeometry("entropy", feasible)
    rng = np.random.default_rng(zlib.crc32(name.encode()) & 0xFFFF)
    ratio = 0.0
    for _ in range(10_000):
        x, y = _simplex_pair(feasible, rng, 1e-6)
        div = geom.divergence(y, x)
        if div < 1e-18:
            continue
        diff = geom.dual_norm(operator(y) - operator(x))
        ratio = max(ratio, diff / math.sqrt(2.0 * div))

    return MonotoneProblem(
        name, feasible, operator,
        regularity=(RegularityClass(BREGMAN_SMOOTH, 1.10 * ratio),),
        gap=lambda x: objective(x) - f_star, gap_kind="convex",
        known_solution=q, objective=objective, geometries=("entropy",))


# ---------------------------------------------------------------------------
# further catalog problems


def make_quadratic(offset, radius: float, name: str = "quadratic") -> MonotoneProblem:
    """f(x) = 1/2 ||x - a||^2 over an origin-centered ball."""
    a = as_point(offset)
    feasible = Ball(np.zeros(a.size), radius)
    x_star = feasible.project(a)
    f_star = 0.5 * float(np.sum((x_star - a) ** 2))

    def objective(x):
        return 0.5 * float(np.sum((x - a) ** 2))

    return MonotoneProblem(
        name, feasible, lambda x: x - a,
        regularity=(RegularityClass(LIPSCHITZ_SMOOTH, 1.0),
                    RegularityClass(LIPSCHITZ_BOUNDED, radius + float(np.linalg.norm(a)))),
        gap=lambda x: objective(x) - f_star, gap_kind="convex",
        known_solution=x_star, objective=objective,
        geometries=("euclidean", "cube"))


def make_nplayer_quadratic(n_players: int, coupling: float,
                           name: str = "nplayer") -> MonotoneProblem:
    """N scalar players on [-1, 1] with quadratic cost and mean-field coupling.

    Player i minimizes 1/2 x_i^2 + kappa x_i mean(x_{-i}); the concatenated
    gradient operator is x + kappa/(N-1) (sum(x) - x), positive definite for
    |kappa| < 1, so the unique Nash point is the origin. The gap is the
    residual <F(x), x - x*>, a minorant of the sup-based gap.
    """
    if n_players < 2:
        raise DimensionTooSmall("need at least two players")
    if abs(coupling) >= 1.0:
        raise CouplingTooLarge("|coupling| must be below 1")
    n = int(n_players)
    k = coupling / (n - 1)
    feasible = Box(-np.ones(n), np.ones(n))

    def operator(x):
        return x + k * (np.sum(x) - x)

    lip = max(abs(1.0 + coupling), abs(1.0 - k))
    return MonotoneProblem(
        name, feasible, operator,
        regularity=(RegularityClass(LIPSCHITZ_SMOOTH, lip),
                    RegularityClass(LIPSCHITZ_BOUNDED, lip * math.sqrt(n))),
        gap=lambda x: float(operator(x) @ x), gap_kind="residual",
        known_solution=np.zeros(n), geometries=("euclidean",))


# ---------------------------------------------------------------------------
# sampling, monotonicity and certification


def _simplex_pair(feasible, rng, floor):
    """Pair of interior simplex points; half the draws hug the boundary."""
    n = feasible.dim
    if rng.random() < 0.5:
        x = rng.dirichlet(np.ones(n))
        y = rng.dirichlet(np.ones(n))
    else:
        x = rng.dirichlet(np.full(n, 0.25))
        y = x * np.exp(0.3 * rng.standard_normal(n))
    x = np.maximum(x, floor)
    y = np.maximum(y, floor)
    return x / np.sum(x), y / np.sum(y)


def sample_pair(geometry: BregmanGeometry, rng: np.random.Generator,
                floor: float = 1e-6):
    """Point pair for regularity sampling: independent or local draws."""
    if geometry.kind == "entropy":
        parts = geometry.set.flat_parts()
        xs, ys = [], []
        for _, _, p in parts:
            x, y = _simplex_pair(p, rng, floor)
            xs.append(x)
            ys.append(y)
        return np.concatenate(xs), np.concatenate(ys)
    x = geometry.set.sample(rng)
    if rng.random() < 0.5:
        y = geometry.set.sample(rng)
    else:
        scale = 0.1 * max(geometry.set.euclidean_diameter(), 1.0)
        y = geometry.set.project(x + scale * rng.standard_normal(x.size))
    return x, y


def monotonicity_min(problem: MonotoneProblem, samples: int = 1000,
                     seed: int = 0) -> float:
    """Minimum of <x - y, F(x) - F(y)> over sampled feasible pairs."""
    rng = np.random.default_rng(seed)
    worst = math.inf
    for _ in range(samples):
        x = problem.set.sample(rng)
        y = problem.set.sample(rng)
        worst = min(worst, float((x - y) @ (problem.operator(x) - problem.operator(y))))
    return worst


@dataclass
class CertEntry:
    tag: str
    declared: float
    empirical: float
    passed: bool
    note: str = ""


@dataclass
class RegularityReport:
    problem: str
    geometry: str
    samples: int
    seed: int
    entries: list[CertEntry]

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def entry(self, tag: str) -> CertEntry:
        for e in self.entries:
            if e.tag == tag:
                return e
        raise KeyError(tag)


def certify_regularity(problem: MonotoneProblem, geometry: BregmanGeometry,
                       samples: int = 10_000, seed: int = 0,
                       extra: Sequence[RegularityClass] = ()) -> RegularityReport:
    """Audit declared regularity constants by maximizing empirical ratios.

    Each tagged inequality is evaluated over sampled interior pairs and
    passes when the maximal ratio stays within 1% of the declared constant.
    For the geometry-relative smoothness tag the left side uses the dual of
    the geometry's global norm as a proxy for the local norm; the report
    notes this.
    """
    if samples < 100:
        raise ValueError("need at least 100 sample pairs")
    rng = np.random.default_rng(seed)
    tags = list(problem.regularity) + list(extra)
    best = {id(t): 0.0 for t in tags}
    for _ in range(samples):
        x, y = sample_pair(geometry, rng)
        fx = problem.operator(x)
        fy = problem.operator(y)
        sep = geometry.norm(y - x)
        for t in tags:
            if t.tag == LIPSCHITZ_SMOOTH:
                if sep > 1e-12:
                    r = geometry.dual_norm(fy - fx) / sep
                else:
                    continue
            elif t.tag == LIPSCHITZ_BOUNDED:
                r = max(geometry.dual_norm(fx), geometry.dual_norm(fy))
            elif t.tag == BREGMAN_SMOOTH:
                div = geometry.divergence(y, x)
                if div < 1e-18:
                    continue
                r = geometry.dual_norm(fy - fx) / math.sqrt(2.0 * div)
            elif t.tag == BREGMAN_BOUNDED:
                div = geometry.divergence(y, x)
                if div < 1e-18 or sep < 1e-9:
                    continue
                r = geometry.dual_norm(fx) * sep / math.sqrt(div)
            else:
                raise ValueError(f"unknown regularity tag {t.tag!r}")
            if r > best[id(t)]:
                best[id(t)] = r
    entries = []
    for t in tags:
        emp = best[id(t)]
        note = "global dual norm used as local-norm proxy" if t.tag == BREGMAN_SMOOTH else ""
        entries.append(CertEntry(t.tag, t.constant, emp,
                                 emp <= 1.01 * t.constant, note))
    return RegularityReport(problem.name, geometry.kind, samples, seed, entries)


# ---------------------------------------------------------------------------
# catalog

RPS_PAYOFF = np.array([[0.0, -1.0, 2.0],
                       [1.0, 0.0, -3.0],
                       [-2.0, 3.0, 0.0]])
_RPS_EQ = np.array([3.0, 2.0, 1.0]) / 6.0

GAME_2X2 = np.array([[1.0, -1.0], [-1.0, 1.0]])

CATALOG = ("matgame-rps", "matgame-2x2", "quadratic", "maxquad", "entropic",
           "nplayer")

_cache: dict[str, MonotoneProblem] = {}


def get_problem(name: str) -> MonotoneProblem:
    """Catalog lookup; instances are cached (they are immutable)."""
    if name not in CATALOG:
        raise UnknownProblem(f"unknown problem {name!r}; choose from {CATALOG}")
    if name not in _cache:
        _cache[name] = _build(name)
    return _cache[name]


def _build(name):
    if name == "matgame-rps":
        return make_matrix_game(RPS_PAYOFF, name=name,
                                known_solution=np.concatenate([_RPS_EQ, _RPS_EQ]))
    if name == "matgame-2x2":
        eq = np.array([0.5, 0.5])
        return make_matrix_game(GAME_2X2, name=name,
                                known_solution=np.concatenate([eq, eq]))
    if name == "quadratic":
        return make_quadratic(np.array([1.0, -0.5]), radius=2.0, name=name)
    if name == "maxquad":
        eye = np.eye(2)
        return make_max_quadratics(
            [(eye, np.array([-1.0, 0.0])), (eye, np.array([0.0, -1.0]))],
            radius=2.0, name=name)
    if name == "entropic":
        weights = np.arange(1.0, 11.0)
        return make_entropic_toy(10, target=weights / weights.sum(), name=name)
    if name == "nplayer":
        return make_nplayer_quadratic(4, 0.5, name=name)
    raise UnknownProblem(name)


def geometry_for(problem: MonotoneProblem, kind: str,
                 diameter: float | None = None) -> BregmanGeometry:
    """Build a geometry of the requested kind, validating compatibility."""
    if kind not in problem.geometries:
        raise IncompatibleGeometry(
            f"problem {problem.name!r} supports {problem.geometries}, not {kind!r}")
    return BregmanGeometry(kind, problem.set, diameter=diameter)
