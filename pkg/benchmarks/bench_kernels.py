"""Time the numba kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Each workload runs once per backend to warm up (and compile), then the
best of ``--repeat`` timings is reported.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from bilinplan import _kernels
from bilinplan.linalg import lu_factor, symmetric_eig
from bilinplan.lp import LpProblem, solve_lp
from bilinplan.models import compile_decmdp, generate_rover, oracle_enumerate
from bilinplan.models.decmdp import AgentModel, DecMdp
from bilinplan.pipeline import PipelineConfig, run


def _lp_batch(rng, count=20, m=40, n=80):
    out = []
    for _ in range(count):
        A = rng.uniform(-1, 1, (m, n))
        b = A @ rng.uniform(0, 1, n)
        G = np.ones((1, n))
        out.append(LpProblem(rng.uniform(-1, 1, n), A, b, G, np.array([10.0 * n])))
    return out


def _chain_agent(states: int) -> AgentModel:
    names = tuple(f"s{i}" for i in range(states)) + ("end",)
    S = states + 1
    P = np.zeros((S, 2, S))
    for s in range(states):
        P[s, 0, s + 1] = 1.0
        P[s, 1, min(s + 2, states)] = 1.0
    r = np.zeros((S, 2))
    r[:states, 0] = np.linspace(0.1, 1.0, states)
    alpha = np.zeros(S)
    alpha[0] = 1.0
    return AgentModel(names, ("a", "b"), P, r, alpha, frozenset({"end"}))


def workloads(rng):
    lps = _lp_batch(rng)
    mats = [rng.standard_normal((60, 60)) for _ in range(10)]
    syms = [m + m.T for m in mats]
    oracle_model = DecMdp(_chain_agent(9), _chain_agent(9), None)
    rover = compile_decmdp(generate_rover(horizon=10, shared_sites=(1, 2, 3), seed=0))
    return {
        "simplex (20 LPs 40x80)": lambda: [solve_lp(p) for p in lps],
        "lu (10 x 60x60)": lambda: [lu_factor(m) for m in mats],
        "jacobi (10 x 60x60)": lambda: [symmetric_eig(m) for m in syms],
        "occupancy (oracle 2^9 x 2^9)": lambda: oracle_enumerate(oracle_model),
        "rover solve (H=10, 3 shared)": lambda: run(rover, PipelineConfig()),
    }


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    names = ["numpy"] + (["numba"] if _kernels.numba_backend is not None else [])
    jobs = workloads(np.random.default_rng(0))
    print(f"{'workload':32s} " + " ".join(f"{n:>10s}" for n in names) + "   speedup")
    for label, fn in jobs.items():
        best = {}
        for name in names:
            with _kernels.use_backend(name):
                fn()
                times = []
                for _ in range(args.repeat):
                    t = time.perf_counter()
                    fn()
                    times.append(time.perf_counter() - t)
            best[name] = min(times)
        cells = " ".join(f"{best[n] * 1000:9.1f}ms" for n in names)
        speed = f"{best['numpy'] / best['numba']:8.1f}x" if "numba" in best else ""
        print(f"{label:32s} {cells} {speed}")


if __name__ == "__main__":
    main()
