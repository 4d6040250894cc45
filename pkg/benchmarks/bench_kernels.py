"""Compare the compiled and pure-Python kernel backends.

Micro-benchmarks run both modules side by side on clauses harvested from a
real search; the end-to-end numbers rerun the search in a subprocess with
the backend forced through ``HERPROVER_PURE_PYTHON``.

    python benchmarks/bench_kernels.py [--problem problems/pigeonhole4.p]
"""

import argparse
import itertools
import json
import os
import random
import subprocess
import sys
import timeit
from pathlib import Path

from herprover import kernels
from herprover.saturation import SearchLimits, search
from herprover.tptp import load_problem

ROOT = Path(__file__).resolve().parent.parent


def harvest(problem_path, n=400, seed=0):
    rec = search(load_problem(problem_path), SearchLimits(time_limit=2.0, max_steps=300))
    clauses = [r.clause.literals for r in rec.records if r.clause.literals]
    rng = random.Random(seed)
    pairs = [(rng.choice(clauses), rng.choice(clauses)) for _ in range(n)]
    atoms = [(a[0][1], b[0][1]) for a, b in pairs]
    return clauses, pairs, atoms


def micro(mod, clauses, pairs, atoms, repeat=3):
    counter = itertools.count(10**6)

    def run_unify():
        for a, b in atoms:
            mod.unify(a, b)

    def run_subsumes():
        for a, b in pairs:
            mod.subsumes(a, b)

    def run_variant():
        for a, b in pairs:
            mod.variant(a, b)

    def run_rename():
        for c in clauses:
            mod.rename_literals(c, {}, counter)

    out = {}
    for name, fn in [("unify", run_unify), ("subsumes", run_subsumes), ("variant", run_variant), ("rename", run_rename)]:
        out[name] = min(timeit.repeat(fn, number=5, repeat=repeat))
    return out


def end_to_end(problem_path, pure):
    env = dict(os.environ)
    if pure:
        env["HERPROVER_PURE_PYTHON"] = "1"
    code = (
        "import time, json, sys\n"
        "from herprover import kernels\n"
        "from herprover.saturation import search, SearchLimits\n"
        "from herprover.tptp import load_problem\n"
        "p = load_problem(sys.argv[1])\n"
        "t = time.perf_counter()\n"
        "r = search(p, SearchLimits(time_limit=600))\n"
        "print(json.dumps([kernels.BACKEND, r.outcome, time.perf_counter() - t, r.counters['generated']]))\n"
    )
    res = subprocess.run([sys.executable, "-c", code, str(problem_path)], env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--problem", default=str(ROOT / "problems" / "pigeonhole4.p"))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    found = kernels.backends()
    if "cython" not in found:
        print("compiled extension not built; only the Python backend is available")
    clauses, pairs, atoms = harvest(args.problem, seed=args.seed)
    print(f"workload: {len(clauses)} clauses, {len(pairs)} pairs from {Path(args.problem).name}")
    times = {name: micro(mod, clauses, pairs, atoms) for name, mod in found.items()}
    print(f"{'kernel':<10}" + "".join(f"{n:>12}" for n in times) + ("     speedup" if len(times) > 1 else ""))
    for k in times["python"]:
        row = "".join(f"{times[n][k] * 1e3:>10.1f}ms" for n in times)
        if "cython" in times:
            row += f"{times['python'][k] / times['cython'][k]:>11.2f}x"
        print(f"{k:<10}{row}")

    print("\nend-to-end search:")
    runs = [end_to_end(args.problem, pure=True)]
    if "cython" in found:
        runs.append(end_to_end(args.problem, pure=False))
    for backend, outcome, secs, gen in runs:
        print(f"  {backend:<8} {outcome:<10} {secs:8.3f}s  generated={gen}")
    if len(runs) == 2:
        print(f"  speedup {runs[0][2] / runs[1][2]:.2f}x")


if __name__ == "__main__":
    main()
