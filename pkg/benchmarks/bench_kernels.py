"""Benchmark the compiled kernels against the numpy fallback.

Covers both hot paths: the per-slot simulation loop and the brute-force grid
scan. Results are checked for exact agreement while timing, so this doubles
as a coarse consistency check.

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --slots 2000000 --resolution 120
"""

import argparse
import time

from aoinet import _kernels
from aoinet.analysis import NetworkParams, ObjectiveKind
from aoinet.graph import from_spec
from aoinet.optimizer import brute_force_grid
from aoinet.simulator import SimConfig, run


def _time(fn, repeats):
    best = float("inf")
    out = None
    for _ in range(repeats):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def bench_simulator(spec, slots, repeats):
    t = from_spec(spec)
    params = NetworkParams.uniform(t.n, 1.0, 1.0 / 3.0)
    cfg = SimConfig(slots=slots, seed=42, warmup=1000)
    rows = []
    results = {}
    for backend in available_backends():
        secs, res = _time(lambda b=backend: run(t, params, cfg, backend=b),
                          repeats)
        rows.append((f"simulate {spec} T={slots}", backend, secs,
                     slots / secs / 1e6))
        results[backend] = res
    _check_equal(results, key=lambda r: (r.per_link_aoi, r.per_link_deliveries))
    return rows


def bench_grid(spec, resolution, repeats):
    t = from_spec(spec)
    rows = []
    results = {}
    for backend in available_backends():
        secs, res = _time(
            lambda b=backend: brute_force_grid(t, 1.0, ObjectiveKind.TOTAL,
                                               resolution=resolution, backend=b),
            repeats)
        n_active = sum(1 for v in range(t.n) if t.degree(v) > 0)
        cells = (resolution - 1) ** n_active
        rows.append((f"grid {spec} res={resolution}", backend, secs,
                     cells / secs / 1e6))
        results[backend] = res
    _check_equal(results, key=lambda r: (tuple(r[0]), r[1]))
    return rows


def available_backends():
    return ("compiled", "numpy") if _kernels.HAVE_COMPILED else ("numpy",)


def _check_equal(results, key):
    views = {name: key(res) for name, res in results.items()}
    names = list(views)
    for other in names[1:]:
        assert views[names[0]] == views[other], \
            f"backend mismatch: {names[0]} vs {other}"


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--slots", type=int, default=1_000_000)
    parser.add_argument("--resolution", type=int, default=80)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    if not _kernels.HAVE_COMPILED:
        print("note: compiled kernel unavailable; timing the fallback only\n")
    rows = []
    rows += bench_simulator("ring:6", args.slots, args.repeats)
    rows += bench_simulator("line:7", args.slots, args.repeats)
    rows += bench_grid("star:4", args.resolution, args.repeats)
    rows += bench_grid("complete:4", args.resolution, args.repeats)

    width = max(len(r[0]) for r in rows)
    print(f"{'workload':<{width}}  {'backend':<9} {'best time':>10}  {'rate':>12}")
    base = {}
    for workload, backend, secs, rate in rows:
        unit = "Mslot/s" if workload.startswith("simulate") else "Mcell/s"
        line = (f"{workload:<{width}}  {backend:<9} {secs:>9.3f}s  "
                f"{rate:>8.1f} {unit}")
        if backend == "compiled":
            base[workload] = secs
        elif workload in base:
            line += f"  ({secs / base[workload]:.1f}x slower)"
        print(line)


if __name__ == "__main__":
    main()
