"""Mixed real exponent at alpha = pi/2 for the scalar tuples with standard root -k + i.

The root solves Re(Z^lam) = 0 with Z = -k + i, i.e. lam = pi / (2 arg Z), which tends
to 1/2 as k grows; the solver value is printed next to that formula.
"""
import argparse
import cmath
import math

from pencil.exponent_solver import SearchRegion, find_roots
from pencil.presets import scalar_tuple


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=float, nargs="*", default=[1, 2, 5, 10, 30, 100, 1000])
    ap.add_argument("--alpha", type=float, default=math.pi / 2)
    args = ap.parse_args()

    print(f"{'k':>8s} {'solver':>20s} {'pi/(2 arg Z)':>20s}")
    for k in args.k:
        roots = find_roots(scalar_tuple(k), SearchRegion(1e-3, 1.0, -1.0, 1.0), args.alpha, "mixed")
        real = [r.lam.real for r in roots if abs(r.lam.imag) < 1e-9]
        z = math.cos(args.alpha) + math.sin(args.alpha) * complex(-k, 1.0)
        ref = math.pi / (2 * cmath.phase(z))
        val = f"{real[0]:.15f}" if real else "none"
        print(f"{k:8g} {val:>20s} {ref:20.15f}")


if __name__ == "__main__":
    main()
