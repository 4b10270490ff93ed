#!/usr/bin/env python3
"""Reconstruction error of the N-truncated Newton inverse as the truth grows.

The data beyond |n| = N are dropped, so the error floor rises with ||V||.
Prints one row per (a, norm).
"""
import argparse

from akns_inverse import NewtonConfig, OperatorParams, Potential, forward_map, newton_invert
from akns_inverse.potentials import flat_trig
from akns_inverse.transform_operators import FunctionPair


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--norms", type=float, nargs="+", default=[0.1, 0.2, 0.3, 0.4, 0.5])
    ap.add_argument("--a", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--seed", type=int, default=100)
    ap.add_argument("--N", type=int, default=24)
    args = ap.parse_args()
    print("a  norm   error      iterations")
    for a in args.a:
        P = OperatorParams(a)
        for norm in args.norms:
            truth = flat_trig(a, args.seed + a, norm=norm)
            V, rep = newton_invert(P, forward_map(P, truth, args.N), Potential.zero(), NewtonConfig(N=args.N))
            err = (FunctionPair(V.p, V.q, V.mesh) - FunctionPair(truth.p, truth.q, truth.mesh)).norm()
            print(f"{a}  {norm:.2f}  {err:.3e}  {rep.iterations}")


if __name__ == "__main__":
    main()
