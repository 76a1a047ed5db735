#!/usr/bin/env python3
"""Compare the numba and numpy integration backends on the reference trap.

Usage: python benchmarks/benchmark_backends.py [--steps N]
"""

import argparse
import os
import time

import numpy as np

from levisim import Beam, EquationOfMotion, GasEnvironment, Particle, simulate
from levisim._kernels import BACKEND_ENV, active_backend


def reference_eom() -> EquationOfMotion:
    p = Particle(radius=100e-9, density=2200.0, refractive_index=1.45)
    b = Beam(power=1.0, waist=2e-6, wavelength=1550e-9)
    g = GasEnvironment(pressure=100.0, temperature=300.0)
    return EquationOfMotion.from_physics(p, b, g)


def run(backend: str, eom: EquationOfMotion, n_steps: int, dt: float):
    os.environ[BACKEND_ENV] = backend
    assert active_backend() == backend
    # warm-up covers JIT compilation on the numba path
    simulate(eom, duration=100 * dt, dt=dt, seed=1)
    start = time.perf_counter()
    traj = simulate(eom, duration=n_steps * dt, dt=dt, seed=1, store_every=64)
    elapsed = time.perf_counter() - start
    return elapsed, traj


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=400_000)
    args = parser.parse_args()

    eom = reference_eom()
    dt = 4e-7
    results = {}
    for backend in ("numpy", "numba"):
        try:
            elapsed, traj = run(backend, eom, args.steps, dt)
        except RuntimeError as exc:
            print(f"{backend:>6}: unavailable ({exc})")
            continue
        results[backend] = elapsed
        rate = args.steps / elapsed
        print(f"{backend:>6}: {elapsed:8.3f} s  ({rate:12.0f} steps/s)  "
              f"final |q| = {np.linalg.norm(traj.positions[-1]):.3e} m")
    if len(results) == 2:
        print(f"speedup: numba is {results['numpy'] / results['numba']:.1f}x "
              f"faster than numpy on {args.steps} steps")
    os.environ.pop(BACKEND_ENV, None)


if __name__ == "__main__":
    main()
