"""Feasible sets, mirror maps, Bregman divergences and prox steps.

A geometry bundles a feasible set with a divergence-generating function R
and exposes the three operations the solver needs: divergence between
points, the prox (mirror) step, and a diameter bound D. Three generating
functions are supported:

* ``euclidean``   R = 1/2 ||x||^2 on any set (prox = project(gradient step))
* ``entropy``     R = sum x_i log x_i on simplices (multiplicative prox)
* ``cube``        R = 1/3 ||x||^3 on origin-centered balls (scalar solve)

Product sets use the sum of member generating functions, so divergences
add across parts and the prox decomposes part by part.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .errors import (
    BoundaryViolation,
    DimensionMismatch,
    NonPositiveStep,
    RootFindFailure,
    UnboundedSet,
)

Array = np.ndarray

ENTROPY_FLOOR = 1e-12


def as_point(x, dim: int | None = None) -> Array:
    """Validate and return a finite 1-d float array."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatch(f"expected a 1-d point, got shape {x.shape}")
    if dim is not None and x.size != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise BoundaryViolation("point has non-finite entries")
    return x


def project_simplex(v: Array) -> Array:
    """Euclidean projection onto the probability simplex (sort algorithm)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    cond = u - css / idx > 0
    rho = idx[cond][-1]
    theta = css[cond][-1] / rho
    return np.maximum(v - theta, 0.0)


# ---------------------------------------------------------------------------
# feasible sets


class FeasibleSet:
    """Convex feasible set with membership test, projection and sampling."""

    dim: int

    def contains(self, x: Array, tol: float = 1e-9) -> bool:
        raise NotImplementedError

    def project(self, x: Array) -> Array:
        """Euclidean projection onto the set."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator) -> Array:
        """Draw a random feasible point."""
        raise NotImplementedError

    def euclidean_diameter(self) -> float:
        raise NotImplementedError

    def flat_parts(self) -> list[tuple[int, int, "FeasibleSet"]]:
        """(start, stop, atomic set) triples covering the coordinates."""
        return [(0, self.dim, self)]


class Simplex(FeasibleSet):
    def __init__(self, n: int):
        if n < 1:
            raise DimensionMismatch("simplex needs n >= 1")
        self.n = self.dim = int(n)

    def contains(self, x, tol=1e-9):
        x = as_point(x, self.dim)
        return bool(np.all(x >= -tol) and abs(float(np.sum(x)) - 1.0) <= tol)

    def project(self, x):
        return project_simplex(as_point(x, self.dim))

    def sample(self, rng):
        return rng.dirichlet(np.ones(self.n))

    def euclidean_diameter(self):
        return math.sqrt(2.0) if self.n > 1 else 0.0

    def __repr__(self):
        return f"Simplex({self.n})"


class Ball(FeasibleSet):
    def __init__(self, center, radius: float):
        self.center = as_point(center)
        if radius <= 0:
            raise UnboundedSet("ball radius must be positive")
        self.radius = float(radius)
        self.dim = self.center.size

    def contains(self, x, tol=1e-9):
        x = as_point(x, self.dim)
        return bool(np.linalg.norm(x - self.center) <= self.radius + tol)

    def project(self, x):
        x = as_point(x, self.dim)
        d = x - self.center
        nrm = float(np.linalg.norm(d))
        if nrm <= self.radius:
            return x
        return self.center + d * (self.radius / nrm)

    def sample(self, rng):
        # uniform in the ball via normal direction and radial cdf
        g = rng.standard_normal(self.dim)
        g /= np.linalg.norm(g)
        r = self.radius * rng.random() ** (1.0 / self.dim)
        return self.center + r * g

    def euclidean_diameter(self):
        return 2.0 * self.radius

    def __repr__(self):
        return f"Ball(r={self.radius}, dim={self.dim})"


class Box(FeasibleSet):
    def __init__(self, lower, upper):
        self.lower = as_point(lower)
        self.upper = as_point(upper)
        if self.lower.size != self.upper.size:
            raise DimensionMismatch("box bounds differ in length")
        if np.any(self.lower > self.upper):
            raise BoundaryViolation("box lower bound exceeds upper bound")
        self.dim = self.lower.size

    def contains(self, x, tol=1e-9):
        x = as_point(x, self.dim)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def project(self, x):
        return np.clip(as_point(x, self.dim), self.lower, self.upper)

    def sample(self, rng):
        return self.lower + rng.random(self.dim) * (self.upper - self.lower)

    def euclidean_diameter(self):
        return float(np.linalg.norm(self.upper - self.lower))

    def __repr__(self):
        return f"Box(dim={self.dim})"


class Product(FeasibleSet):
    """Concatenation of member sets, e.g. X = Z x Y for saddle points."""

    def __init__(self, parts: Sequence[FeasibleSet]):
        self.parts = tuple(parts)
        if not self.parts:
            raise DimensionMismatch("product of zero sets")
        self.dim = sum(p.dim for p in self.parts)
        self._slices = []
        start = 0
        for p in self.parts:
            self._slices.append((start, start + p.dim, p))
            start += p.dim

    def contains(self, x, tol=1e-9):
        x = as_point(x, self.dim)
        return all(p.contains(x[a:b], tol) for a, b, p in self._slices)

    def project(self, x):
        x = as_point(x, self.dim)
        return np.concatenate([p.project(x[a:b]) for a, b, p in self._slices])

    def sample(self, rng):
        return np.concatenate([p.sample(rng) for _, _, p in self._slices])

    def euclidean_diameter(self):
        return math.sqrt(sum(p.euclidean_diameter() ** 2 for p in self.parts))

    def flat_parts(self):
        out = []
        for a, b, p in self._slices:
            for pa, pb, atom in p.flat_parts():
                out.append((a + pa, a + pb, atom))
        return out

    def __repr__(self):
        return f"Product({list(self.parts)})"


# ---------------------------------------------------------------------------
# scalar solve for the cube-norm prox


def _solve_monotone(f: Callable[[float], float], df: Callable[[float], float],
                    lo: float, hi: float, rtol: float = 1e-12,
                    max_iter: int = 200) -> float:
    """Safeguarded Newton with bisection fallback for increasing f on [lo, hi]."""
    s = 0.5 * (lo + hi)
    scale = max(abs(f(lo)), 1.0)
    for _ in range(max_iter):
        val = f(s)
        if abs(val) <= rtol * scale:
            return s
        if val > 0:
            hi = s
        else:
            lo = s
        d = df(s)
        cand = s - val / d if d > 0 else math.nan
        s = cand if lo < cand < hi else 0.5 * (lo + hi)
        if hi - lo <= rtol * max(hi, 1.0):
            return 0.5 * (lo + hi)
    raise RootFindFailure("scalar prox solve did not converge")


# ---------------------------------------------------------------------------
# geometries


class BregmanGeometry:
    """Divergence-generating function R over a feasible set.

    Values are immutable after construction and safe to share across
    concurrent runs. ``diameter`` may be overridden with a larger value at
    construction; by default it is the analytic bound for the (kind, set)
    pair.
    """

    KINDS = ("euclidean", "entropy", "cube")

    def __init__(self, kind: str, feasible_set: FeasibleSet,
                 diameter: float | None = None,
                 boundary_floor: float = ENTROPY_FLOOR):
        if kind not in self.KINDS:
            raise ValueError(f"unknown geometry kind {kind!r}")
        self.kind = kind
        self.set = feasible_set
        self.floor = float(boundary_floor)
        self._parts = feasible_set.flat_parts()
        if kind == "entropy":
            if not all(isinstance(p, Simplex) for _, _, p in self._parts):
                raise BoundaryViolation("entropy geometry requires simplex parts")
        if kind == "cube":
            if not (isinstance(feasible_set, Ball)
                    and np.allclose(feasible_set.center, 0.0)):
                raise BoundaryViolation("cube geometry requires an origin-centered ball")
        analytic = self._analytic_diameter()
        if diameter is None:
            self.diameter = analytic
        else:
            if diameter < analytic:
                raise ValueError("diameter override must not shrink the analytic bound")
            self.diameter = float(diameter)
        # segment layout for single-pass reductions across product parts
        self._starts = np.array([a for a, _, _ in self._parts], dtype=np.intp)
        self._sizes = np.array([b - a for a, b, _ in self._parts], dtype=np.intp)
        self._single = len(self._parts) == 1

    # -- diameter ----------------------------------------------------------

    def _analytic_diameter(self) -> float:
        if self.kind == "entropy":
            return math.sqrt(sum(math.log(p.n) for _, _, p in self._parts))
        if self.kind == "cube":
            r = self.set.radius
            return math.sqrt((2.0 / 3.0) * r**3 + r**3)
        d = self.set.euclidean_diameter()
        if not math.isfinite(d):
            raise UnboundedSet("cannot bound the diameter of an unbounded set")
        return d / math.sqrt(2.0)

    # -- norms --------------------------------------------------------------

    def norm(self, v: Array) -> float:
        """Primal norm: l2 for euclidean/cube, blockwise l1 for entropy.

        Blocks of a product set combine as sqrt(sum of squared block norms),
        which preserves 1-strong convexity of the summed generating function.
        """
        return self._norm_raw(as_point(v, self.set.dim))

    def _norm_raw(self, v: Array) -> float:
        if self.kind != "entropy":
            return float(np.linalg.norm(v))
        av = np.abs(v)
        if self._single:
            return float(np.sum(av))
        return float(np.linalg.norm(np.add.reduceat(av, self._starts)))

    def dual_norm(self, v: Array) -> float:
        """Dual norm: l2 for euclidean/cube, blockwise l-infinity for entropy."""
        return self._dual_raw(as_point(v, self.set.dim))

    def _dual_raw(self, v: Array) -> float:
        if self.kind != "entropy":
            return float(np.linalg.norm(v))
        av = np.abs(v)
        if self._single:
            return float(np.max(av))
        return float(np.linalg.norm(np.maximum.reduceat(av, self._starts)))

    # -- entropy helpers ----------------------------------------------------

    def _interior(self, x: Array) -> Array:
        """Clamp simplex coordinates to the floor and renormalize per part."""
        if np.any(x < -1e-9):
            raise BoundaryViolation("entropy point has a negative coordinate")
        out = np.array(x, dtype=float)
        for a, b, _ in self._parts:
            part = np.maximum(out[a:b], self.floor)
            out[a:b] = part / np.sum(part)
        return out

    # -- core operations ----------------------------------------------------

    def divergence(self, y, x) -> float:
        """Bregman divergence D_R(y, x) = R(y) - R(x) - <grad R(x), y - x>."""
        y = as_point(y, self.set.dim)
        x = as_point(x, self.set.dim)
        if self.kind == "euclidean":
            d = y - x
            return 0.5 * float(d @ d)
        if self.kind == "cube":
            ny, nx = float(np.linalg.norm(y)), float(np.linalg.norm(x))
            val = ny**3 / 3.0 + 2.0 * nx**3 / 3.0 - nx * float(x @ y)
            return val if val > 0.0 else 0.0  # rounding can dip below zero
        x = self._interior(x)
        if np.any(y < -1e-9):
            raise BoundaryViolation("entropy point has a negative coordinate")
        yp = np.maximum(y, 0.0)
        # generalized KL; the linear terms vanish on exact simplex points
        terms = np.where(yp > 0.0, yp * np.log(np.where(yp > 0.0, yp, 1.0) / x), 0.0)
        val = float(np.sum(terms) - np.sum(yp) + np.sum(x))
        return val if val > 0.0 else 0.0

    def _div_raw(self, y: Array, x: Array) -> float:
        """Divergence for trusted solver iterates (strictly positive on entropy)."""
        if self.kind == "euclidean":
            d = y - x
            return 0.5 * float(d @ d)
        if self.kind == "cube":
            ny, nx = float(np.linalg.norm(y)), float(np.linalg.norm(x))
            val = ny**3 / 3.0 + 2.0 * nx**3 / 3.0 - nx * float(x @ y)
        else:
            val = float(y @ (np.log(y) - np.log(x)))
        return val if val > 0.0 else 0.0

    def grad(self, x) -> Array:
        """Gradient of the generating function R."""
        x = as_point(x, self.set.dim)
        if self.kind == "euclidean":
            return x.copy()
        if self.kind == "cube":
            return float(np.linalg.norm(x)) * x
        return np.log(self._interior(x)) + 1.0

    def prox(self, x, d, eta: float) -> Array:
        """Exact minimizer of eta*<d, z> + D_R(z, x) over the feasible set."""
        if eta <= 0:
            raise NonPositiveStep(f"eta must be positive, got {eta}")
        x = as_point(x, self.set.dim)
        d = as_point(d, self.set.dim)
        if self.kind == "entropy":
            x = self._interior(x)
        return self._prox_raw(x, d, eta)

    def _prox_raw(self, x: Array, d: Array, eta: float) -> Array:
        if self.kind == "euclidean":
            return self.set.project(x - eta * d)
        if self.kind == "cube":
            return self._cube_prox(x, d, eta)
        logits = np.log(x) - eta * d
        if self._single:
            w = np.exp(logits - np.max(logits))
            w /= np.sum(w)
        else:
            w = np.exp(logits - np.repeat(np.maximum.reduceat(logits, self._starts),
                                          self._sizes))
            w /= np.repeat(np.add.reduceat(w, self._starts), self._sizes)
        if np.min(w) < self.floor:
            w = np.maximum(w, self.floor)
            if self._single:
                w /= np.sum(w)
            else:
                w /= np.repeat(np.add.reduceat(w, self._starts), self._sizes)
        return w

    def _cube_prox(self, x, d, eta):
        v = float(np.linalg.norm(x)) * x - eta * d
        nv = float(np.linalg.norm(v))
        if nv == 0.0:
            return np.zeros_like(x)
        # ||z|| solves s*s = ||v||; the bracket must reach past sqrt(||v||)
        hi = max(1.0, nv)
        s = _solve_monotone(lambda s: s * s - nv, lambda s: 2.0 * s, 0.0, hi)
        s = min(s, self.set.radius)
        return (s / nv) * v

    def strong_convexity_residual(self, y, x) -> float:
        """divergence(y, x) - 1/2 ||y - x||^2 in the geometry's norm."""
        return self.divergence(y, x) - 0.5 * self.norm(
            as_point(y, self.set.dim) - as_point(x, self.set.dim)) ** 2

    # -- solver support ------------------------------------------------------

    def argmin_generator(self) -> Array:
        """Minimizer of R over the set: the start point of the solver."""
        if self.kind == "entropy":
            out = np.empty(self.set.dim)
            for a, b, p in self._parts:
                out[a:b] = 1.0 / p.n
            return out
        return self.set.project(np.zeros(self.set.dim))

    def sample_interior(self, rng: np.random.Generator,
                        floor: float = 1e-6) -> Array:
        """Random feasible point, pushed away from the entropy boundary."""
        x = self.set.sample(rng)
        if self.kind != "entropy":
            return x
        out = np.array(x)
        for a, b, _ in self._parts:
            part = np.maximum(out[a:b], floor)
            out[a:b] = part / np.sum(part)
        return out
