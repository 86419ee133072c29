#!/usr/bin/env python3
"""Two-charge orbit under the post-Coulomb classical Lagrangian.

Launches the self-consistent circular orbit, integrates it with the
implicit midpoint rule, reports conservation diagnostics, and shows how
the orbital frequency departs from the Kepler value as the orbit speeds
approach the light speed.

Example:
    python scripts/orbit_demo.py --radius 1.0 --light-speed 10 --csv orbit.csv
"""

import argparse

import numpy as np

from breitlab.config import ParticleParams
from breitlab.darwin import (
    DarwinSystem,
    binding_energy,
    circular_initial_state,
    circular_orbit,
    integrate,
)


def parse_args():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--mass1", type=float, default=1.0)
    p.add_argument("--mass2", type=float, default=2.0)
    p.add_argument("--charge", type=float, default=1.0,
                   help="charge of particle 1; particle 2 carries the negative")
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--light-speed", type=float, default=10.0)
    p.add_argument("--steps-per-period", type=int, default=2000)
    p.add_argument("--periods", type=float, default=3.0)
    p.add_argument("--csv", default="", help="optional trajectory CSV path")
    return p.parse_args()


def main():
    args = parse_args()
    system = DarwinSystem(
        particles=(
            ParticleParams(mass=args.mass1, charge=args.charge),
            ParticleParams(mass=args.mass2, charge=-args.charge),
        ),
        light_speed=args.light_speed,
    )
    omega, omega_k = circular_orbit(system, args.radius)
    state = circular_initial_state(system, args.radius)
    print(f"orbital frequency : {omega:.10f}")
    print(f"kepler frequency  : {omega_k:.10f}")
    print(f"fractional shift  : {(omega - omega_k) / omega_k:+.3e} "
          f"at (w_K r / c)^2 = {(omega_k * args.radius / args.light_speed) ** 2:.3e}")
    print(f"binding energy    : {binding_energy(system, state):.8f}")

    period = 2 * np.pi / omega
    dt = period / args.steps_per_period
    n_steps = int(args.periods * args.steps_per_period)
    traj = integrate(system, state, dt, n_steps)
    e_drift = float(np.max(np.abs(traj.energies - traj.energies[0])))
    p_drift = float(
        np.max(np.linalg.norm(traj.total_momenta - traj.total_momenta[0], axis=1))
    )
    sep = np.linalg.norm(traj.positions[:, 0] - traj.positions[:, 1], axis=1)
    print(f"integrated        : {n_steps} steps of dt={dt:.3e} "
          f"({args.periods} periods)")
    print(f"energy drift      : {e_drift:.3e}")
    print(f"momentum drift    : {p_drift:.3e}")
    print(f"separation range  : [{sep.min():.8f}, {sep.max():.8f}]")
    if args.csv:
        traj.write_csv(args.csv)
        print(f"wrote {args.csv}")


if __name__ == "__main__":
    main()
