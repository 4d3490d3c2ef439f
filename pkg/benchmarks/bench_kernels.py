"""Benchmark the compiled RK4 kernel against the numpy fallback.

Raw mode times both implementations on identical synthetic half-grid
samples across a range of Hilbert space dimensions and checks that the
results agree to rounding.  End-to-end mode reruns a squeezed-qubit
trajectory in subprocesses, once per kernel, so the import-time
selection (ADFS_FORCE_FALLBACK) is exercised the way users hit it.

Usage:
    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --dims 2 4 8 16 32 --steps 2000
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from adfs import kernels


def _workload(rng, dim, n_steps, n_jump=2):
    # a_half holds 2*n_steps+1 half-step samples of -iH - G/2.
    s = 2 * n_steps + 1
    h = rng.standard_normal((s, dim, dim)) + 1j * rng.standard_normal((s, dim, dim))
    h = 0.5 * (h + np.conj(np.swapaxes(h, 1, 2)))
    f = 0.3 * (
        rng.standard_normal((n_jump, s, dim, dim))
        + 1j * rng.standard_normal((n_jump, s, dim, dim))
    )
    g = np.einsum("msji,msjk->msik", np.conj(f), f).sum(axis=0)
    a = -1j * h - 0.5 * g
    rho = np.eye(dim, dtype=complex) / dim
    return np.ascontiguousarray(a), np.ascontiguousarray(f), rho


def _time(fn, a, f, rho, dt, repeats):
    best = float("inf")
    out = None
    for _ in range(repeats):
        work = rho.copy()
        t0 = time.perf_counter()
        out = fn(a, f, work, dt)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_raw(dims, n_steps, repeats):
    rng = np.random.default_rng(7)
    print(f"raw kernel, {n_steps} RK4 steps, best of {repeats}")
    print(f"{'dim':>4}  {'fallback':>10}  {'compiled':>10}  {'speedup':>8}  {'max dev':>9}")
    for dim in dims:
        a, f, rho = _workload(rng, dim, n_steps)
        dt = 1e-3
        t_py, out_py = _time(kernels.rk4_advance_fallback, a, f, rho, dt, repeats)
        if kernels.USE_COMPILED:
            t_c, out_c = _time(kernels.rk4_advance_compiled, a, f, rho, dt, repeats)
            dev = float(np.max(np.abs(out_c - out_py)))
            print(
                f"{dim:>4}  {t_py:>9.4f}s  {t_c:>9.4f}s  {t_py / t_c:>7.2f}x  {dev:>9.2e}"
            )
        else:
            print(f"{dim:>4}  {t_py:>9.4f}s  {'n/a':>10}  {'n/a':>8}  {'n/a':>9}")


_E2E_SNIPPET = """
import time
import numpy as np
from adfs import kernels, squeezed_qubit_example as sq
from adfs.lindblad_integrator import PropagateOptions, propagate

scn = sq.scenario("fig2")
v = scn.variants[0]
model = sq.build_model(v.schedule, control=v.control, t_final=v.t_final)
times = np.linspace(0.0, v.t_final, 201)
rho0 = sq.initial_state(v)
opts = PropagateOptions(dt_max=v.dt_max, record_states=False)
propagate(model, rho0, times[:3], opts)  # warm caches
t0 = time.perf_counter()
rec = propagate(model, rho0, times, opts)
print(f"{rec.kernel} {time.perf_counter() - t0:.4f} {rec.n_steps_total}")
"""


def bench_end_to_end():
    print("\nend-to-end trajectory (driven squeezed qubit, full horizon)")
    for force, label in (("1", "fallback"), ("", "selected")):
        env = dict(os.environ, ADFS_FORCE_FALLBACK=force)
        out = subprocess.run(
            [sys.executable, "-c", _E2E_SNIPPET],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        )
        kernel, secs, n_steps = out.stdout.split()
        print(f"  {label:>8}: kernel={kernel:<8} {float(secs):.4f}s  ({n_steps} steps)")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", type=int, nargs="+", default=[2, 4, 8, 16])
    ap.add_argument("--steps", type=int, default=1000)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--skip-end-to-end", action="store_true")
    args = ap.parse_args(argv)

    print(f"active kernel at import: {kernels.KERNEL_NAME}")
    bench_raw(args.dims, args.steps, args.repeats)
    if not args.skip_end_to_end:
        bench_end_to_end()
    return 0


if __name__ == "__main__":
    sys.exit(main())
