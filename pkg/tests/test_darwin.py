import numpy as np
import pytest

from breitlab.config import ConfigError, ParticleParams
from breitlab.darwin import (
    ClassicalState,
    CoincidentParticlesError,
    DarwinSystem,
    Trajectory,
    accelerations,
    binding_energy,
    canonical_momenta,
    circular_initial_state,
    circular_orbit,
    energy,
    integrate,
    kepler_frequency,
    lagrangian,
    suggest_timestep,
    total_momentum,
)


def two_body(c=10.0):
    return DarwinSystem(
        particles=(
            ParticleParams(mass=1.0, charge=1.0),
            ParticleParams(mass=2.0, charge=-1.0),
        ),
        light_speed=c,
    )


def three_body(c=10.0):
    return DarwinSystem(
        particles=(
            ParticleParams(mass=1.0, charge=1.0),
            ParticleParams(mass=2.0, charge=-1.0),
            ParticleParams(mass=1.5, charge=0.5),
        ),
        light_speed=c,
    )


def random_state(sys, rng, spread=3.0, vmax=0.5):
    n = sys.n_particles
    while True:
        pos = rng.uniform(-spread, spread, size=(n, 3))
        d = np.linalg.norm(pos[:, None] - pos[None, :], axis=-1)
        if np.all(d[~np.eye(n, dtype=bool)] > 0.5):
            break
    vel = rng.uniform(-vmax, vmax, size=(n, 3))
    return ClassicalState(0.0, pos, vel)


def test_canonical_momenta_match_velocity_gradient_of_lagrangian():
    # fourth-order central differences of L in each velocity component
    rng = np.random.default_rng(0)
    for sys in (two_body(), three_body()):
        for _ in range(10):
            st = random_state(sys, rng)
            p = canonical_momenta(sys, st.positions, st.velocities)
            eps = 1e-3
            for a in range(sys.n_particles):
                for i in range(3):
                    vals = []
                    for step in (-2, -1, 1, 2):
                        v = st.velocities.copy()
                        v[a, i] += step * eps
                        vals.append(lagrangian(sys, st.positions, v))
                    fd = (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * eps)
                    assert abs(p[a, i] - fd) <= 1e-8 * max(abs(p[a, i]), 1.0)


def test_neutral_particles_move_uniformly():
    sys = DarwinSystem(
        particles=(ParticleParams(mass=1.0), ParticleParams(mass=3.0)),
        light_speed=10.0,
    )
    st = ClassicalState(
        0.0,
        np.array([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]]),
        np.array([[0.1, 0.2, 0.0], [-0.3, 0.0, 0.1]]),
    )
    assert np.max(np.abs(accelerations(sys, st))) <= 1e-14
    traj = integrate(sys, st, dt=0.05, n_steps=100)
    expect = st.positions + 5.0 * st.velocities
    assert np.max(np.abs(traj.positions[-1] - expect)) <= 1e-10


def test_energy_and_momentum_conserved_on_generic_orbit():
    sys = two_body()
    rng = np.random.default_rng(3)
    st = random_state(sys, rng, vmax=0.5)
    traj = integrate(sys, st, dt=0.002, n_steps=1000)
    e_bind = abs(binding_energy(sys, st)) or 1.0
    # implicit midpoint: bounded O(dt^2) energy oscillation, tiny drift in
    # the conserved total momentum
    assert np.max(np.abs(traj.energies - traj.energies[0])) <= 1e-4 * e_bind
    p_scale = max(np.max(np.abs(traj.momenta)), 1.0)
    drift = np.max(np.abs(traj.total_momenta - traj.total_momenta[0]))
    assert drift <= 1e-6 * p_scale


def test_dynamics_are_rotation_invariant():
    sys = two_body()
    rng = np.random.default_rng(4)
    st = random_state(sys, rng)
    # rotation by 90 degrees about z
    R = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    st_rot = ClassicalState(0.0, st.positions @ R.T, st.velocities @ R.T)
    assert energy(sys, st_rot) == pytest.approx(energy(sys, st), rel=1e-12)
    a = accelerations(sys, st)
    a_rot = accelerations(sys, st_rot)
    assert np.max(np.abs(a_rot - a @ R.T)) <= 1e-10 * np.max(np.abs(a))


def test_circular_orbit_stays_circular():
    sys = two_body()
    st = circular_initial_state(sys, radius=4.0)
    omega, _ = circular_orbit(sys, 4.0)
    period = 2 * np.pi / omega
    traj = integrate(sys, st, dt=period / 1000, n_steps=1000)
    sep = np.linalg.norm(traj.positions[:, 0] - traj.positions[:, 1], axis=1)
    assert np.max(np.abs(sep - 4.0)) <= 1e-4 * 4.0
    # one full period returns to the initial configuration
    assert np.max(np.abs(traj.positions[-1] - traj.positions[0])) <= 2e-3


def test_orbit_correction_scales_as_velocity_squared():
    # (omega - omega_K)/omega_K against x = (omega_K r / c)^2: the Coulomb
    # limit is Keplerian and the leading correction is quadratic in v/c
    sys2 = two_body(c=1.0)
    radius = 1.0
    fracs, xs = [], []
    for c in (8.0, 16.0, 32.0, 64.0):
        sys = two_body(c=c)
        omega, omega_k = circular_orbit(sys, radius)
        fracs.append((omega - omega_k) / omega_k)
        xs.append((omega_k * radius / c) ** 2)
    slope = np.polyfit(np.log(xs), np.log(np.abs(fracs)), 1)[0]
    assert slope == pytest.approx(1.0, abs=0.05)  # power 2 in v/c
    assert all(f < 0 for f in fracs)  # velocity coupling slows the orbit


def test_binding_energy_of_bound_orbit_is_negative():
    sys = two_body()
    st = circular_initial_state(sys, radius=4.0)
    assert binding_energy(sys, st) < 0
    # and approaches the virial Coulomb value -|e1e2|/2r as c grows
    sys_nr = two_body(c=1000.0)
    st_nr = circular_initial_state(sys_nr, radius=4.0)
    assert binding_energy(sys_nr, st_nr) == pytest.approx(-1.0 / 8.0, rel=1e-4)


def test_state_and_system_validation():
    sys = two_body(c=1.0)
    pos = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    fast = ClassicalState(0.0, pos, np.array([[1.5, 0.0, 0.0], [0.0, 0.0, 0.0]]))
    with pytest.raises(ConfigError, match="light_speed"):
        accelerations(sys, fast)
    with pytest.raises(CoincidentParticlesError):
        accelerations(
            sys, ClassicalState(0.0, np.zeros((2, 3)), np.zeros((2, 3)))
        )
    with pytest.raises(ConfigError, match="particles"):
        accelerations(sys, ClassicalState(0.0, np.zeros((3, 3)), np.zeros((3, 3))))
    with pytest.raises(ConfigError, match="dt"):
        integrate(sys, ClassicalState(0.0, pos, np.zeros((2, 3))), dt=0.0, n_steps=1)
    with pytest.raises(ConfigError, match="n_steps"):
        integrate(sys, ClassicalState(0.0, pos, np.zeros((2, 3))), dt=0.1, n_steps=0)
    with pytest.raises(ConfigError):
        DarwinSystem(particles=(), light_speed=1.0)
    with pytest.raises(ConfigError):
        DarwinSystem(particles=(ParticleParams(mass=1.0),), light_speed=0.0)


def test_suggest_timestep_is_positive_and_resolves_the_orbit():
    sys = two_body()
    st = circular_initial_state(sys, radius=4.0)
    dt = suggest_timestep(sys, st)
    omega, _ = circular_orbit(sys, 4.0)
    assert 0 < dt < 0.1 * (2 * np.pi / omega)
    # at-rest fallback uses the light-crossing time
    rest = ClassicalState(
        0.0, np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 3.0]]), np.zeros((2, 3))
    )
    sys_neutral = DarwinSystem(
        particles=(ParticleParams(mass=1.0), ParticleParams(mass=1.0)),
        light_speed=10.0,
    )
    assert suggest_timestep(sys_neutral, rest) == pytest.approx(0.3 / 200)


def test_total_momentum_matches_summed_canonical_momenta():
    sys = three_body()
    rng = np.random.default_rng(6)
    st = random_state(sys, rng)
    p = canonical_momenta(sys, st.positions, st.velocities)
    assert np.allclose(total_momentum(sys, st), p.sum(axis=0))


def test_trajectory_csv_format(tmp_path):
    sys = two_body()
    st = circular_initial_state(sys, radius=4.0)
    traj = integrate(sys, st, dt=0.01, n_steps=5)
    path = tmp_path / "orbit.csv"
    traj.write_csv(path)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 7  # header + 6 states
    header = lines[0].split(",")
    assert header[0] == "t"
    assert header[-1] == "P_z"
    assert len(header) == 1 + sys.n_particles * 9 + 4
    first = [float(v) for v in lines[1].split(",")]
    assert first[0] == traj.times[0]
