"""Command line front-end: ``mpx run`` and ``mpx verify``."""

from __future__ import annotations

import argparse
import sys

from .harness import ExperimentConfig, lemma_suite, load_config, run_experiment
from .geometry import Ball, BregmanGeometry, Simplex
from .harness import three_point_check
import numpy as np


def _build_run_parser(sub):
    p = sub.add_parser("run", help="run a solver experiment and emit CSV traces")
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("--problem", help="catalog problem name")
    p.add_argument("--geometry", choices=("euclidean", "entropy", "cube"))
    p.add_argument("--policy",
                   choices=("fixed", "unorm", "bsmooth", "bbounded", "stoch", "adaptlb"))
    p.add_argument("--iters", type=int)
    p.add_argument("--seed", help="comma-separated seed list, e.g. 0,1,2")
    p.add_argument("--sigma", type=float)
    p.add_argument("--noise", choices=("sphere", "component"))
    p.add_argument("--g0", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--diameter", type=float, help="override the analytic diameter")
    p.add_argument("--eta", type=float, help="step-size for the fixed policy")
    p.add_argument("--out", help="CSV output path (multi-seed runs add .s<seed>)")
    p.add_argument("--workers", type=int, default=None)
    return p


def _overrides(args) -> dict:
    out = {}
    for key in ("problem", "geometry", "policy", "iters", "sigma", "noise",
                "g0", "c", "theta", "diameter", "eta", "out"):
        val = getattr(args, key)
        if val is not None:
            out[key] = val
    if args.seed is not None:
        out["seeds"] = tuple(int(s) for s in args.seed.split(",") if s != "")
    return out


def cmd_run(args) -> int:
    overrides = _overrides(args)
    if args.config:
        cfg = load_config(args.config, overrides)
    else:
        cfg = ExperimentConfig(**overrides).validate()
    result = run_experiment(cfg, workers=args.workers)
    final = result.mean_gap[-1]
    print(f"problem={cfg.problem} geometry={cfg.geometry} policy={cfg.policy} "
          f"iters={cfg.iters} seeds={list(cfg.seeds)}")
    print(f"final mean gap: {final:.6g}")
    if result.slope is not None:
        print(f"gap slope (log-log, window {result.slope.window}): "
              f"{result.slope.slope:+.3f}  r2={result.slope.r_squared:.3f}")
    for path in result.paths:
        print(f"wrote {path}")
    return 0


def cmd_verify(args) -> int:
    ok = True
    for seed in range(args.seeds):
        rep = lemma_suite(seed)
        status = "pass" if rep.passed else "FAIL"
        print(f"lemma suite seed={seed}: {status} "
              f"(inv-sqrt {rep.inv_sqrt_failures}, inv-log {rep.inv_log_failures}, "
              f"three-point {rep.three_point_failures}, "
              f"martingale {'ok' if rep.martingale_ok else 'FAIL'})")
        ok = ok and rep.passed
    # geometry spot checks beyond the three-point suite
    rng = np.random.default_rng(1234)
    for geom in (BregmanGeometry("euclidean", Ball(np.zeros(3), 2.0)),
                 BregmanGeometry("entropy", Simplex(5)),
                 BregmanGeometry("cube", Ball(np.zeros(2), 1.5))):
        worst = 0.0
        for _ in range(500):
            x = geom.sample_interior(rng)
            y = geom.sample_interior(rng)
            worst = min(worst, geom.divergence(y, x))
        status = "pass" if worst >= -1e-12 else "FAIL"
        print(f"divergence nonnegativity [{geom.kind}]: {status}")
        ok = ok and worst >= -1e-12
    print("verify:", "pass" if ok else "FAIL")
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="mpx",
                                     description="mirror-prox VI experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)
    _build_run_parser(sub)
    v = sub.add_parser("verify", help="run the lemma and geometry property suites")
    v.add_argument("--seeds", type=int, default=10, help="number of suite seeds")
    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    return cmd_verify(args)


if __name__ == "__main__":
    sys.exit(main())
