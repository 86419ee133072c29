#!/usr/bin/env python3
"""Velocity-dependent interaction shifts: solver vs first-order theory.

For each coupling strength, solves the projected ground state with and
without the current-current and retardation terms and compares the energy
difference against the lowest eigenvalue of the first-order shift matrix
over the ground-orbital spin multiplet.  The ratio should approach 1 as
the coupling decreases.

Example:
    python scripts/compare_perturbation.py --alphas 0.2,0.1
"""

import argparse
import csv

import numpy as np

from breitlab.config import CouplingSpec, GridSpec, ParticleParams
from breitlab.oracle import HydrogenicState, breit_shift_matrix
from breitlab.solver import HamiltonianSpec, solve_spectrum


def parse_args():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--alphas", default="0.2,0.1", help="comma list of couplings")
    p.add_argument("--mass2", type=float, default=1.0)
    p.add_argument("--grid-n", type=int, default=32)
    p.add_argument("--box-bohr", type=float, default=8.0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--csv", default="", help="optional per-term report CSV")
    return p.parse_args()


def main():
    args = parse_args()
    m2 = args.mass2
    mu = m2 / (1.0 + m2)
    rows = []
    print("# alpha   term               dE_solver      dE_first_order  ratio")
    for alpha in (float(a) for a in args.alphas.split(",")):
        bohr = 1.0 / (mu * alpha)
        box = args.box_bohr * bohr
        grid = GridSpec(n=args.grid_n, box_length=box,
                        softening=box / args.grid_n / 64)

        def solve(terms):
            spec = HamiltonianSpec(
                particle1=ParticleParams(mass=1.0, charge=alpha**0.5),
                particle2=ParticleParams(mass=m2, charge=-(alpha**0.5)),
                coupling=CouplingSpec(alpha_eff=alpha),
                grid=grid,
                terms=terms,
            )
            res = solve_spectrum(spec, n_states=1, tol=args.tol, seed=0,
                                 band_limit_fine=8)
            return float(res.eigenvalues[0])

        e_coul = solve(frozenset({"coulomb"}))
        state = HydrogenicState(n=1, l=0, m=0, mu=mu, alpha_eff=alpha)
        for parts in (("gaunt",), ("retardation",), ("gaunt", "retardation")):
            d_solver = solve(frozenset({"coulomb", *parts})) - e_coul
            mat = breit_shift_matrix(state, grid, alpha, m1=1.0, m2=m2,
                                     parts=parts, band_limit_fine=8)
            d_first = float(np.sort(np.linalg.eigvalsh(mat))[0])
            label = "+".join(parts)
            ratio = d_solver / d_first
            rows.append((alpha, label, d_solver, d_first, ratio))
            print(f"{alpha:<7g} {label:<18} {d_solver:+.6e}  "
                  f"{d_first:+.6e}  {ratio:.4f}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["alpha_eff", "term", "solver_delta",
                        "oracle_value", "ratio"])
            w.writerows(rows)
        print(f"# wrote {args.csv}")


if __name__ == "__main__":
    main()
