"""Mirror-prox engine with pluggable step-size policies.

One iteration extrapolates with the operator at the previous point and
then updates with the operator at the extrapolated point, both through
the geometry's prox; the output is the ergodic average of the
extrapolated points. Universal policies keep an accumulator
S = G0^2 + sum Z_i^2 and emit eta_t = D / sqrt(S), where the per-iteration
statistic Z_t is built from Bregman divergences (or norms) between the
iterates. eta_t is computed strictly before the two prox steps of
iteration t; Z_t is recorded strictly after.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IterationBudgetZero, MissingConstant, NonPositiveStep
from .geometry import BregmanGeometry
from .problems import (
    BREGMAN_BOUNDED,
    LIPSCHITZ_BOUNDED,
    MonotoneProblem,
)

Array = np.ndarray

POLICY_KINDS = ("fixed", "unorm", "bsmooth", "bbounded", "stoch", "adaptlb")


class FixedStep:
    """Constant step-size; recovers classic extragradient on Euclidean sets."""

    kind = "fixed"
    c = None

    def __init__(self, eta: float):
        if eta <= 0:
            raise NonPositiveStep("fixed step-size must be positive")
        self.eta = float(eta)
        self.D = None
        self.G0 = None
        self.S = 0.0

    def step_size(self) -> float:
        return self.eta

    def record(self, geometry, y_prev, x_t, y_t, eta, m=None, g=None) -> float:
        return 0.0


class UniversalStep:
    """AdaGrad-style accumulator policy eta_t = D / sqrt(G0^2 + sum Z_i^2).

    kinds and their Z statistics:

    * ``unorm``     (||x_t - y_{t-1}||^2 + ||x_t - y_t||^2) / (5 eta^2)
    * ``bsmooth``   div(x_t, y_{t-1}) / (2 eta^2)
    * ``bbounded``  (div(x_t, y_{t-1}) + div(y_t, x_t)) / eta^2
    * ``stoch``     (div(x_t, y_{t-1}) + div(y_t, x_t)) / (c^2 eta^2)

    The default c is the constant the corresponding convergence guarantee
    prescribes (sqrt(2), 1, and 5 for the noisy smooth case).
    """

    _DEFAULT_C = {"unorm": math.sqrt(5.0), "bsmooth": math.sqrt(2.0),
                  "bbounded": 1.0, "stoch": 5.0}

    def __init__(self, kind: str, D: float, G0: float = 1.0, c: float | None = None):
        if kind not in self._DEFAULT_C:
            raise ValueError(f"unknown universal policy kind {kind!r}")
        if D <= 0:
            raise ValueError("diameter D must be positive")
        if G0 == 0:
            raise ValueError("G0 must be nonzero")
        self.kind = kind
        self.D = float(D)
        self.G0 = float(G0)
        self.c = self._DEFAULT_C[kind] if c is None else float(c)
        if self.c <= 0:
            raise ValueError("c must be positive")
        self.S = self.G0 * self.G0

    def step_size(self) -> float:
        return self.D / math.sqrt(self.S)

    def record(self, geometry, y_prev, x_t, y_t, eta, m=None, g=None) -> float:
        if eta <= 0:
            raise NonPositiveStep("eta must be positive")
        if self.kind == "unorm":
            z2 = (geometry._norm_raw(x_t - y_prev) ** 2
                  + geometry._norm_raw(x_t - y_t) ** 2) / (5.0 * eta * eta)
        elif self.kind == "bsmooth":
            z2 = geometry._div_raw(x_t, y_prev) / (2.0 * eta * eta)
        else:
            z2 = (geometry._div_raw(x_t, y_prev)
                  + geometry._div_raw(y_t, x_t)) / (self.c**2 * eta * eta)
        self.S += z2
        return math.sqrt(z2)


class AdaptiveLBeta:
    """Baseline that halves toward theta/L_beta^t, estimated per iteration.

    L_beta^t = ||F(x_t) - F(y_{t-1})||_* / sqrt(div(x_t, y_{t-1})), and the
    next step is min(eta_t, theta / L_beta^t) (strong convexity modulus 1).
    When the extrapolation did not move (divergence below 1e-14) the
    step-size carries over unchanged.
    """

    kind = "adaptlb"
    c = None

    def __init__(self, D: float, G0: float = 1.0, theta: float = 0.9):
        if not 0.0 < theta < 1.0:
            raise ValueError("theta must be in (0, 1)")
        self.D = float(D)
        self.G0 = float(G0)
        self.theta = float(theta)
        self.eta = self.D / abs(self.G0)
        self.S = 0.0

    def step_size(self) -> float:
        return self.eta

    def record(self, geometry, y_prev, x_t, y_t, eta, m=None, g=None) -> float:
        div = geometry.divergence(x_t, y_prev)
        if div >= 1e-14 and m is not None and g is not None:
            l_est = geometry.dual_norm(g - m) / math.sqrt(div)
            if l_est > 0:
                self.eta = min(self.eta, self.theta / l_est)
        return 0.0


def make_policy(kind: str, D: float | None = None, G0: float = 1.0,
                c: float | None = None, eta: float | None = None,
                theta: float = 0.9):
    """Policy factory used by the experiment harness."""
    if kind == "fixed":
        if eta is None:
            raise ValueError("fixed policy needs eta")
        return FixedStep(eta)
    if kind == "adaptlb":
        return AdaptiveLBeta(D, G0, theta)
    return UniversalStep(kind, D, G0, c)


# ---------------------------------------------------------------------------
# state, report, iteration


@dataclass
class SolverState:
    y_prev: Array
    t: int = 0
    ergodic_sum: Array = None
    cum_regret: float = 0.0
    max_m_dual: float = 0.0
    max_g_dual: float = 0.0

    def __post_init__(self):
        if self.ergodic_sum is None:
            self.ergodic_sum = np.zeros_like(self.y_prev)

    @property
    def ergodic_average(self) -> Array:
        return self.ergodic_sum / max(self.t, 1)


@dataclass
class RunReport:
    """Per-iteration trace plus run metadata.

    ``cum_regret`` is NaN-filled when the problem has no known solution;
    the CSV writer turns those into the literal ``NA``.
    """

    t: Array
    eta: Array
    Z: Array
    gap: Array
    cum_regret: Array
    meta: dict = field(default_factory=dict)

    def rows(self):
        for i in range(self.t.size):
            yield (int(self.t[i]), float(self.eta[i]), float(self.Z[i]),
                   float(self.gap[i]), float(self.cum_regret[i]))

    def gap_at(self, t: int) -> float:
        idx = np.searchsorted(self.t, t)
        if idx >= self.t.size or self.t[idx] != t:
            raise KeyError(f"iteration {t} not recorded")
        return float(self.gap[idx])


def mp_iterate(state: SolverState, operator, geometry: BregmanGeometry, policy):
    """One mirror-prox step; returns (eta_t, Z_t, x_t, g_t) and advances the state.

    eta_t is read from the policy before the prox steps (so it depends on
    Z_1..Z_{t-1} only) and Z_t is recorded after both prox steps.
    """
    eta = policy.step_size()
    m = operator(state.y_prev)
    x_t = geometry._prox_raw(state.y_prev, m, eta)
    g = operator(x_t)
    y_t = geometry._prox_raw(state.y_prev, g, eta)
    z = policy.record(geometry, state.y_prev, x_t, y_t, eta, m, g)
    state.ergodic_sum += x_t
    state.t += 1
    dm = geometry._dual_raw(m)
    dg = geometry._dual_raw(g)
    if dm > state.max_m_dual:
        state.max_m_dual = dm
    if dg > state.max_g_dual:
        state.max_g_dual = dg
    state.y_prev = y_t
    return eta, z, x_t, g


def run(problem: MonotoneProblem, geometry: BregmanGeometry, policy,
        T: int, seed: int = 0, oracle=None, gap_every: int | None = None) -> RunReport:
    """Run T mirror-prox iterations and trace the ergodic-average gap.

    The start point is the minimizer of the generating function, the gap
    column is evaluated at the running ergodic average, and the regret
    column accumulates <g_t, x_t - x*> when the solution is known. For
    T > 10^4 the trace is recorded every ceil(T / 10^4) iterations (the
    final iteration is always recorded) to keep files bounded.
    """
    if T < 1:
        raise IterationBudgetZero("need at least one iteration")
    if gap_every is None:
        gap_every = max(1, math.ceil(T / 10_000))
    operator = oracle.sample if oracle is not None else problem.operator
    state = SolverState(y_prev=geometry.argmin_generator())
    x_star = problem.known_solution
    eta1 = policy.step_size()

    ts, etas, zs, gaps, regrets = [], [], [], [], []
    for t in range(1, T + 1):
        eta, z, x_t, g = mp_iterate(state, operator, geometry, policy)
        if x_star is not None:
            state.cum_regret += float(g @ (x_t - x_star))
        if t % gap_every == 0 or t == T:
            ts.append(t)
            etas.append(eta)
            zs.append(z)
            gaps.append(problem.gap(state.ergodic_average))
            regrets.append(state.cum_regret if x_star is not None else math.nan)

    meta = {
        "problem": problem.name,
        "geometry": geometry.kind,
        "policy": policy.kind,
        "seed": seed,
        "T": T,
        "D": policy.D if policy.D is not None else "",
        "G0": policy.G0 if policy.G0 is not None else "",
        "c": policy.c if policy.c is not None else "",
        "sigma": getattr(getattr(oracle, "noise", None), "sigma", 0.0),
        "noise": getattr(getattr(oracle, "noise", None), "kind", "none"),
        "gap_every": gap_every,
        "eta1": eta1,
        "eta1_above_one": eta1 > 1.0,
        "regret_available": x_star is not None,
        "max_m_dual": state.max_m_dual,
        "max_g_dual": state.max_g_dual,
    }
    return RunReport(np.array(ts, dtype=np.int64), np.array(etas), np.array(zs),
                     np.array(gaps), np.array(regrets), meta)


# ---------------------------------------------------------------------------
# trace bound audit


def z_bound_check(report: RunReport, problem: MonotoneProblem,
                  inflation: float = 1.05) -> bool:
    """Check max_t Z_t against the bound the trace's policy guarantees.

    The bound is G'/c for the divergence-halved statistic, sqrt(3) G'/c for
    the two-divergence statistic, the composite constant
    (M + sqrt(6M + 3M sqrt(M) + 4M^2))/c when a geometry-relative bound M is
    declared, and G' for the norm statistic. When no operator bound is
    declared the maximal dual norm observed along the trace is used
    instead. All bounds are inflated by 5%.
    """
    kind = report.meta.get("policy")
    z_max = float(np.max(report.Z)) if report.Z.size else 0.0
    if kind in ("fixed", "adaptlb"):
        return True

    def g_prime():
        declared = problem.constant(LIPSCHITZ_BOUNDED)
        if declared is not None:
            return declared + float(report.meta.get("sigma", 0.0) or 0.0)
        if "max_m_dual" in report.meta:
            return max(report.meta["max_m_dual"], report.meta["max_g_dual"])
        raise MissingConstant("no operator bound available for the z check")

    if kind == "bsmooth":
        bound = g_prime() / math.sqrt(2.0)
    elif kind == "unorm":
        bound = g_prime()
    elif kind in ("bbounded", "stoch"):
        c = float(report.meta.get("c", 1.0) or 1.0)
        m_const = problem.constant(BREGMAN_BOUNDED)
        if m_const is not None and kind == "bbounded":
            bound = (m_const + math.sqrt(6.0 * m_const + 3.0 * m_const * math.sqrt(m_const)
                                         + 4.0 * m_const**2)) / c
        else:
            bound = math.sqrt(3.0) * g_prime() / c
    else:
        raise MissingConstant(f"no z bound known for policy {kind!r}")
    return z_max <= inflation * bound
