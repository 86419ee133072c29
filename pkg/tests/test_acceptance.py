"""End-to-end acceptance gate.

Each test covers one headline guarantee of the package at its declared
tolerance and prints a single pass/fail line.  Configurations are frozen:
grids, softenings, and step counts below were fixed by convergence studies
(see the repository notes) and must not be loosened to make a failing
criterion pass.
"""

import numpy as np
import pytest

from breitlab.cli import _fit_order, limit_estimate
from breitlab.config import CouplingSpec, GridSpec, ParticleParams
from breitlab.darwin import (
    DarwinSystem,
    binding_energy,
    canonical_momenta,
    circular_initial_state,
    circular_orbit,
    integrate,
    lagrangian,
)
from breitlab.derivation import (
    CurrentDensity,
    FreeWavepacket,
    continuity_substitution_check,
    corrupt_packet,
    integration_by_parts_check,
    neglected_term_estimate,
    retardation_expansion_check,
)
from breitlab.oracle import HydrogenicState, breit_shift_matrix, dirac_coulomb_reference
from breitlab.solver import (
    ALL_TERMS,
    HamiltonianSpec,
    cluster_eigenvalues,
    fixed_k_matrix,
    solve_spectrum,
)
from breitlab.spinors import GAMMAS, I4, METRIC, embed


def report(name, ok, detail=""):
    print(f"acceptance[{name}]: {'PASS' if ok else 'FAIL'} {detail}".rstrip())


def pair_spec(alpha, m2, grid, terms):
    return HamiltonianSpec(
        particle1=ParticleParams(mass=1.0, charge=alpha**0.5 if alpha else 0.0),
        particle2=ParticleParams(mass=m2, charge=-(alpha**0.5) if alpha else 0.0),
        coupling=CouplingSpec(alpha_eff=alpha),
        grid=grid,
        terms=terms,
    )


def ground_binding(alpha, m2, grid, terms, tol=1e-8):
    res = solve_spectrum(pair_spec(alpha, m2, grid, terms), n_states=1, tol=tol,
                         seed=0, band_limit_fine=8)
    return float(res.binding_energies[0])


def test_clifford_algebra_and_embeddings():
    worst = 0.0
    for mu in range(4):
        for nu in range(mu, 4):
            anti = GAMMAS[mu] @ GAMMAS[nu] + GAMMAS[nu] @ GAMMAS[mu]
            worst = max(worst, np.max(np.abs(anti - 2 * METRIC[mu, nu] * I4)))
    rng = np.random.default_rng(0)
    for _ in range(100):
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        b = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        ha, hb = a + a.conj().T, b + b.conj().T
        A, B = embed(ha, 1), embed(hb, 2)
        scale = max(np.max(np.abs(A)) * np.max(np.abs(B)), 1.0)
        worst = max(worst, np.max(np.abs(A @ B - B @ A)) / scale)
    ok = worst <= 1e-13
    report("clifford_and_embeddings", ok, f"worst residual {worst:.2e}")
    assert ok


def test_free_dispersion_relation():
    grid = GridSpec(n=16, box_length=20.0)
    k1 = grid.axis_momenta()
    rng = np.random.default_rng(1)
    m1, m2 = 1.0, 2.0
    worst = 0.0
    degeneracies_ok = True
    for _ in range(50):
        idx = rng.integers(0, grid.n, size=3)
        k = np.array([k1[idx[0]], k1[idx[1]], k1[idx[2]]])
        e1 = np.sqrt(k @ k + m1**2)
        e2 = np.sqrt(k @ k + m2**2)
        vals = np.sort(np.linalg.eigvalsh(fixed_k_matrix(k, m1, m2)))
        expected = np.sort(
            [s1 * e1 + s2 * e2 for s1 in (-1, 1) for s2 in (-1, 1)
             for _ in range(4)]
        )
        worst = max(worst, np.max(np.abs(vals - expected)) / (e1 + e2))
        clusters = cluster_eigenvalues(vals, gap=1e-8 * (e1 + e2))
        if [c["multiplicity"] for c in clusters] != [4, 4, 4, 4]:
            degeneracies_ok = False
    ok = worst <= 1e-10 and degeneracies_ok
    report("free_dispersion", ok, f"worst rel dev {worst:.2e}")
    assert ok


def test_nonrelativistic_limit():
    alpha, mu = 0.1, 0.5
    exact = -mu * alpha**2 / 2
    L = 16.0 / (mu * alpha)  # 16 Bohr radii
    n = 32
    h = L / n
    softenings = (h / 16, h / 32, h / 64)
    errors = []
    for a in softenings:
        grid = GridSpec(n=n, box_length=L, softening=a)
        b = ground_binding(alpha, 1.0, grid, frozenset({"coulomb"}), tol=1e-9)
        errors.append(abs(b - exact) / abs(exact))
    within = errors[0] <= 0.02
    monotone = errors[0] > errors[1] > errors[2]
    ok = within and monotone
    report(
        "nonrelativistic_limit", ok,
        f"rel errors over softening halvings: "
        + ", ".join(f"{e:.4f}" for e in errors),
    )
    assert within, f"binding off by {errors[0]:.4f} > 2%"
    assert monotone, f"study not monotone: {errors}"


def test_perturbative_consistency():
    ratios = {}
    for alpha in (0.2, 0.1):
        mu = 0.5
        L = 8.0 / (mu * alpha)
        n = 32
        grid = GridSpec(n=n, box_length=L, softening=L / n / 64)
        e_full = ground_binding(alpha, 1.0, grid, ALL_TERMS)
        e_coul = ground_binding(alpha, 1.0, grid, frozenset({"coulomb"}))
        state = HydrogenicState(n=1, l=0, m=0, mu=mu, alpha_eff=alpha)
        mat = breit_shift_matrix(state, grid, alpha, m1=1.0, m2=1.0,
                                 band_limit_fine=8)
        predicted = float(np.sort(np.linalg.eigvalsh(mat))[0])
        ratios[alpha] = (e_full - e_coul) / predicted
    in_window = all(abs(r - 1.0) <= 5 * a**2 for a, r in ratios.items())
    approaching = abs(ratios[0.1] - 1.0) < abs(ratios[0.2] - 1.0)
    ok = in_window and approaching
    report(
        "perturbative_consistency", ok,
        f"ratios: " + ", ".join(f"alpha={a}: {r:.4f}" for a, r in ratios.items()),
    )
    assert in_window, f"ratio outside 1±5·alpha^2: {ratios}"
    assert approaching, f"ratios not approaching 1: {ratios}"


def test_heavy_mass_limit():
    alpha, m2 = 0.3, 1000.0
    mu = m2 / (1.0 + m2)
    L = 8.0 / (mu * alpha)
    levels = (28, 40, 56)
    bindings = []
    for n in levels:
        grid = GridSpec(n=n, box_length=L, softening=L / n / 4)
        bindings.append(ground_binding(alpha, m2, grid, ALL_TERMS))
    _, richardson = _fit_order([1.0 / n for n in levels], bindings)
    estimate, uncertainty = limit_estimate(bindings, richardson)
    dirac = dirac_coulomb_reference(alpha, 1, -1, mass=mu) - mu
    # leading recoil beyond the reduced-mass substitution: quadratic in the
    # one-body binding, suppressed by the total mass
    recoil = (dirac**2) / (2 * (1.0 + m2))
    target = dirac - recoil
    rel = abs(estimate - target) / abs(target)
    ok = rel <= 0.01
    report(
        "heavy_mass_limit", ok,
        f"limit estimate {estimate:.6f} (±{uncertainty:.1e}) vs "
        f"reference {target:.6f}: rel dev {rel:.4f}",
    )
    assert ok, (
        f"levels {levels} -> bindings {bindings}, estimate {estimate}, "
        f"target {target}, rel {rel}"
    )


def test_derivation_identity_suite():
    box = 40.0
    p1 = FreeWavepacket.gaussian(
        box, center_momentum=(6.0 / box, 0, 0), sigma_modes=1.9,
        mode_cutoff=11, spin=(1.0, 0.0),
    )
    p2 = FreeWavepacket.gaussian(
        box, center_momentum=(-4.0 / box, 2.0 / box, 0), sigma_modes=1.9,
        mode_cutoff=11, spin=(0.0, 1.0),
    )
    retard = FreeWavepacket.gaussian(
        box, center_momentum=(4.8 / box, 2.0 / box, 0), sigma_modes=1.9,
        mode_cutoff=7, max_terms=64,
    )
    subst = continuity_substitution_check(p1, p2, box, threshold=1e-6)
    ibp = integration_by_parts_check(p1, p2, box, levels=(48, 96, 192),
                                     threshold=1e-5)
    ret = retardation_expansion_check(
        CurrentDensity(retard),
        separations=tuple(box * f for f in (0.01, 0.015, 0.0225, 0.035,
                                            0.05, 0.075, 0.1)),
        slope_band=(2.8, 3.2),
    )
    negl = neglected_term_estimate(min_power=2.0)
    ok = subst.passed and ibp.passed and ret.passed and negl.passed
    report(
        "derivation_suite", ok,
        f"substitution {subst.residuals[0]:.1e}, "
        f"ibp {ibp.residuals[-1]:.1e} (monotone {ibp.passed}), "
        f"retardation slope {ret.fitted_order:.3f}, "
        f"neglected power {negl.fitted_order:.4f}",
    )
    assert subst.passed, subst.as_dict()
    assert ibp.passed, ibp.as_dict()
    assert ret.passed, ret.as_dict()
    assert negl.passed, negl.as_dict()


def test_classical_dynamics_invariants():
    system = DarwinSystem(
        particles=(
            ParticleParams(mass=1.0, charge=1.0),
            ParticleParams(mass=2.0, charge=-1.0),
        ),
        light_speed=10.0,
    )
    # canonical momenta against a fourth-order numerical velocity gradient
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(50):
        while True:
            pos = rng.uniform(-3.0, 3.0, size=(2, 3))
            if np.linalg.norm(pos[0] - pos[1]) > 0.5:
                break
        vel = rng.uniform(-0.5, 0.5, size=(2, 3))
        p = canonical_momenta(system, pos, vel)
        eps = 1e-3
        for a in range(2):
            for i in range(3):
                vals = []
                for step in (-2, -1, 1, 2):
                    v = vel.copy()
                    v[a, i] += step * eps
                    vals.append(lagrangian(system, pos, v))
                fd = (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * eps)
                worst = max(worst, abs(p[a, i] - fd) / max(abs(p[a, i]), 1.0))
    momenta_ok = worst <= 1e-8

    # conservation over 1e4 implicit-midpoint steps of a circular orbit
    radius = 1.0
    state = circular_initial_state(system, radius)
    omega, _ = circular_orbit(system, radius)
    traj = integrate(system, state, dt=2 * np.pi / omega / 40000, n_steps=10000)
    e_bind = abs(binding_energy(system, state))
    e_drift = float(np.max(np.abs(traj.energies - traj.energies[0])))
    p_drift = float(
        np.max(np.linalg.norm(traj.total_momenta - traj.total_momenta[0], axis=1))
    )
    drift_ok = e_drift <= 1e-8 * e_bind and p_drift <= 1e-10

    # circular-orbit correction scales as the second power of (omega_K r/c)
    xs, fracs = [], []
    for c in (8.0, 16.0, 32.0, 64.0):
        sys_c = DarwinSystem(
            particles=(
                ParticleParams(mass=1.0, charge=1.0),
                ParticleParams(mass=2.0, charge=-1.0),
            ),
            light_speed=c,
        )
        om, om_k = circular_orbit(sys_c, radius)
        xs.append(om_k * radius / c)
        fracs.append(abs(om - om_k) / om_k)
    slope = float(np.polyfit(np.log(xs), np.log(fracs), 1)[0])
    slope_ok = abs(slope - 2.0) <= 0.1

    ok = momenta_ok and drift_ok and slope_ok
    report(
        "classical_dynamics", ok,
        f"momentum residual {worst:.1e}, energy drift {e_drift:.1e} "
        f"(bound {1e-8 * e_bind:.1e}), momentum drift {p_drift:.1e}, "
        f"correction power {slope:.3f}",
    )
    assert momenta_ok, f"canonical momenta residual {worst}"
    assert drift_ok, f"drifts {e_drift}, {p_drift}"
    assert slope_ok, f"slope {slope}"


def test_negative_controls():
    # corrupting one dominant plane-wave amplitude must blow up the
    # continuity-based substitution identity by orders of magnitude
    box = 40.0
    p1 = FreeWavepacket.gaussian(
        box, center_momentum=(6.0 / box, 0, 0), sigma_modes=1.9,
        mode_cutoff=11, spin=(1.0, 0.0),
    )
    p2 = FreeWavepacket.gaussian(
        box, center_momentum=(-4.0 / box, 2.0 / box, 0), sigma_modes=1.9,
        mode_cutoff=11, spin=(0.0, 1.0),
    )
    clean = continuity_substitution_check(p1, p2, box)
    idx = int(np.argmax(np.max(np.abs(p1.amplitudes), axis=1)))
    broken = continuity_substitution_check(
        corrupt_packet(p1, index=idx, strength=0.3), p2, box
    )
    inflation = broken.residuals[0] / max(clean.residuals[0], 1e-300)
    corruption_ok = inflation >= 1e3

    # without the positive-energy projection the operator's spectrum is not
    # bounded below near the two-body rest energy (documented control)
    grid = GridSpec(n=8, box_length=24.0)
    proj = pair_spec(0.4, 1.0, grid, frozenset({"coulomb"}))
    raw = HamiltonianSpec(
        particle1=proj.particle1,
        particle2=proj.particle2,
        coupling=proj.coupling,
        grid=grid,
        terms=proj.terms,
        projection="none",
    )
    e_proj = solve_spectrum(proj, tol=1e-8, seed=0).eigenvalues[0]
    e_raw = solve_spectrum(raw, tol=1e-8, seed=0).eigenvalues[0]
    projector_matters = e_raw < e_proj - 1.0

    ok = corruption_ok and projector_matters
    report(
        "negative_controls", ok,
        f"residual inflation {inflation:.1e}, "
        f"unprojected vs projected lowest level: {e_raw:.3f} vs {e_proj:.3f}",
    )
    assert corruption_ok, f"inflation only {inflation}"
    assert projector_matters, f"{e_raw} vs {e_proj}"
