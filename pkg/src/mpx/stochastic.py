"""Bounded-support noise oracles for stochastic mirror-prox runs.

Noise is added to operator values (dual space), never to iterates. Both
models have zero mean and norm at most sigma by construction, so the
noisy oracle inherits an operator bound of G' + sigma whenever the base
operator is bounded by G'.
"""

from __future__ import annotations

import math
import zlib

import numpy as np

from .problems import MonotoneProblem

NOISE_KINDS = ("none", "sphere", "component")


class NoiseModel:
    """Zero-mean perturbation with support ||xi|| <= sigma.

    ``sphere`` draws uniformly on the sigma-sphere; ``component`` draws
    each coordinate uniformly from [-sigma/sqrt(d), sigma/sqrt(d)].
    """

    def __init__(self, kind: str, sigma: float):
        if kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {kind!r}")
        if sigma < 0:
            raise ValueError("sigma must be nonnegative")
        self.kind = kind if sigma > 0 else "none"
        self.sigma = float(sigma) if self.kind != "none" else 0.0

    def draw(self, rng: np.random.Generator, dim: int) -> np.ndarray:
        if self.kind == "none":
            return np.zeros(dim)
        if self.kind == "sphere":
            g = rng.standard_normal(dim)
            return (self.sigma / np.linalg.norm(g)) * g
        half = self.sigma / math.sqrt(dim)
        return rng.uniform(-half, half, dim)


class NoisyOracle:
    """Wraps an operator; each query returns F(x) plus a fresh draw.

    The generator is seeded from the run seed and a stable hash of the
    problem name, so identical (seed, problem) pairs replay the same noise
    sequence. The two queries inside one mirror-prox iteration therefore
    use independent draws automatically.
    """

    def __init__(self, problem: MonotoneProblem, noise: NoiseModel, seed: int = 0):
        self.problem = problem
        self.noise = noise
        self.seed = int(seed)
        self.rng = np.random.default_rng(
            [self.seed, zlib.crc32(problem.name.encode())])

    def sample(self, x) -> np.ndarray:
        f = np.asarray(self.problem.operator(x), dtype=float)
        if self.noise.kind == "none":
            return f
        return f + self.noise.draw(self.rng, f.size)

    def clone(self, seed: int) -> "NoisyOracle":
        """Fresh oracle with its own generator; the unit of parallelism."""
        return NoisyOracle(self.problem, self.noise, seed)


def martingale_lemma_check(D: float, trials: int = 2000, n: int = 40,
                           seed: int = 0) -> bool:
    """Monte-Carlo audit of the martingale inner-product bound.

    Draws i.i.d. unit-norm differences Z_1..Z_n, picks the adversarial
    X = (D/2) * unit(sum Z_i) on the ball of radius D/2 (its generating
    function variation D^2/8 satisfies the lemma's D^2/2 budget), and
    compares the sample mean of <sum Z_i, X> against
    (D/2) sqrt(sum E||Z_i||^2) plus three standard errors.
    """
    if trials < 10:
        raise ValueError("need at least 10 trials")
    rng = np.random.default_rng(seed)
    dim = 4
    sums = np.empty(trials)
    for k in range(trials):
        if k % 2 == 0:
            z = rng.standard_normal((n, dim))
            z /= np.linalg.norm(z, axis=1, keepdims=True)
        else:
            z = np.zeros((n, dim))
            cols = rng.integers(0, dim, n)
            z[np.arange(n), cols] = rng.choice([-1.0, 1.0], n)
        total = z.sum(axis=0)
        sums[k] = np.linalg.norm(total)
    estimate = (D / 2.0) * float(np.mean(sums))
    stderr = (D / 2.0) * float(np.std(sums)) / math.sqrt(trials)
    bound = (D / 2.0) * math.sqrt(n)  # ||Z_i|| = 1 by construction
    return estimate <= bound + 3.0 * stderr
