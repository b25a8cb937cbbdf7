"""Benchmark the compiled kernels against the pure-numpy fallback.

Run as:  python -m sbmlib.bench [--repeat N]

Covers the hot loops: phase-field steps (Allen-Cahn, Cahn-Hilliard), the
5-point explicit cylinder step, and the batched tridiagonal solve.
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from .backend import get_backends


def _phase_field_arrays(n=101):
    rng = np.random.default_rng(7)
    shape = (n, n)
    phi = np.ascontiguousarray(rng.random(shape))
    y = np.arange(n)[None, :] * np.ones((n, 1))
    psi = 0.5 * (1.0 + np.tanh((y - 30.0) / 1.5))
    den = psi + 1e-7
    face = lambda arr, a: np.ascontiguousarray(arr)  # uniform spacing 1
    cxp = np.ascontiguousarray(np.minimum(psi, np.roll(psi, -1, 0)))
    cxp[-1, :] = 0.0
    cxm = np.ascontiguousarray(np.roll(cxp, 1, 0))
    cyp = np.ascontiguousarray(np.minimum(psi, np.roll(psi, -1, 1)))
    cyp[:, -1] = 0.0
    cym = np.ascontiguousarray(np.roll(cyp, 1, 1))
    e2d = np.ascontiguousarray(1.0 / den)
    gm = np.ascontiguousarray(np.abs(np.gradient(psi, axis=1)))
    bcoef = np.ascontiguousarray(gm * 0.5 / den)
    inv_den = np.ascontiguousarray(1.0 / den)
    jn = np.zeros(shape)
    return dict(phi=phi, cxp=cxp, cxm=cxm, cyp=cyp, cym=cym, e2d=e2d,
                bcoef=bcoef, inv_den=inv_den, jn=jn)


def bench_all(repeat: int = 200) -> list[tuple[str, str, float]]:
    backends = get_backends()
    arrs = _phase_field_arrays()
    shape = arrs["phi"].shape
    out = np.empty(shape)
    scratch = np.empty(shape)
    rng = np.random.default_rng(1)
    nlines, nlen = 128, 256
    sub = rng.random((nlines, nlen)) * 0.3
    sup = rng.random((nlines, nlen)) * 0.3
    diag = 1.0 + sub + sup
    rhs = rng.random((nlines, nlen))
    tri_out = np.empty_like(rhs)

    cases = {
        "ac_step": lambda k: k.ac_step(arrs["phi"], arrs["cxp"], arrs["cxm"], arrs["cyp"],
                                       arrs["cym"], arrs["e2d"], arrs["bcoef"], 1.0, 0.01, out),
        "ch_step": lambda k: (
            k.ch_mu(arrs["phi"], arrs["cxp"], arrs["cxm"], arrs["cyp"], arrs["cym"],
                    arrs["e2d"], arrs["bcoef"], 1.0, scratch),
            k.ch_step(arrs["phi"], scratch, arrs["cxp"], arrs["cxm"], arrs["cyp"],
                      arrs["cym"], arrs["inv_den"], arrs["jn"], 0.01, out),
        ),
        "explicit_5pt": lambda k: k.explicit_step_5pt(arrs["phi"], arrs["cxp"], arrs["cxm"],
                                                      arrs["cyp"], arrs["cym"], arrs["e2d"],
                                                      arrs["jn"], 0.01, out),
        "thomas_batch": lambda k: k.thomas_batch(sub, diag, sup, rhs, tri_out),
    }

    results = []
    for case, fn in cases.items():
        for name, mod in backends.items():
            fn(mod)  # warm up
            t0 = time.perf_counter()
            for _ in range(repeat):
                fn(mod)
            dt = (time.perf_counter() - t0) / repeat
            results.append((case, name, dt))
    return results


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="kernel backend benchmark")
    parser.add_argument("--repeat", type=int, default=200)
    args = parser.parse_args(argv)
    results = bench_all(args.repeat)
    by_case: dict = {}
    for case, name, dt in results:
        by_case.setdefault(case, {})[name] = dt
    print(f"{'kernel':<14} {'python':>12} {'compiled':>12} {'speedup':>9}")
    for case, entry in by_case.items():
        py = entry.get("python", float("nan"))
        cy = entry.get("compiled")
        if cy:
            print(f"{case:<14} {py*1e6:>10.1f}us {cy*1e6:>10.1f}us {py/cy:>8.1f}x")
        else:
            print(f"{case:<14} {py*1e6:>10.1f}us {'-':>12} {'-':>9}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
