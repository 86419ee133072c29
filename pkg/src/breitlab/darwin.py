"""Classical N-charge dynamics with first post-Coulomb corrections.

The Lagrangian (rest term included so the Legendre energy carries the rest
masses explicitly) is

    L = -c^2 sum_a m_a + 1/2 sum_a m_a v_a^2 + 1/(8 c^2) sum_a m_a v_a^4
        - 1/2 sum_a sum_{b!=a} e_a e_b / r_ab
        + 1/(4 c^2) sum_a sum_{b!=a} (e_a e_b / r_ab)
              * ( v_a.v_b + (n_ab.v_a)(n_ab.v_b) ),

with r_ab = r_a - r_b and n_ab = r_ab / |r_ab|.  Momenta and forces are
closed forms derived from L; both are cross-checked against numerical
gradients in the test suite.  The light speed c is a system parameter so
the 1/c^2 scaling of every correction can be measured directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .config import ConfigError, ParticleParams


class CoincidentParticlesError(ValueError):
    """Two particles at zero separation: the pair potential is singular."""


class FixedPointError(RuntimeError):
    """Velocity-dependent inertia solve failed to contract."""


class StepRejectedError(RuntimeError):
    """Implicit-midpoint stage equations failed to converge."""


@dataclass(frozen=True)
class DarwinSystem:
    """Particle content plus numerical settings for the dynamics."""

    particles: tuple[ParticleParams, ...]
    light_speed: float = 1.0
    fixed_point_tol: float = 1e-14
    fixed_point_maxiter: int = 200

    def __post_init__(self):
        if len(self.particles) < 1:
            raise ConfigError("DarwinSystem needs at least one particle")
        if not self.light_speed > 0:
            raise ConfigError("light_speed must be positive")
        object.__setattr__(self, "particles", tuple(self.particles))

    @property
    def n_particles(self) -> int:
        return len(self.particles)

    @property
    def masses(self) -> np.ndarray:
        return np.array([p.mass for p in self.particles])

    @property
    def charges(self) -> np.ndarray:
        return np.array([p.charge for p in self.particles])


@dataclass(frozen=True)
class ClassicalState:
    """Snapshot of the particle system; momenta are derived, not stored."""

    t: float
    positions: np.ndarray  # (N, 3)
    velocities: np.ndarray  # (N, 3)

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        vel = np.atleast_2d(np.asarray(self.velocities, dtype=float))
        if pos.shape != vel.shape or pos.shape[-1] != 3:
            raise ConfigError(
                f"positions/velocities must both be (N, 3), got "
                f"{pos.shape} and {vel.shape}"
            )
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "velocities", vel)


def validate_state(sys: DarwinSystem, state: ClassicalState):
    """Check particle count, sub-light speeds, and distinct positions."""
    if state.positions.shape[0] != sys.n_particles:
        raise ConfigError(
            f"state has {state.positions.shape[0]} particles, "
            f"system has {sys.n_particles}"
        )
    speeds = np.linalg.norm(state.velocities, axis=1)
    if np.any(speeds >= sys.light_speed):
        worst = float(speeds.max())
        raise ConfigError(
            f"|v| must stay below light_speed={sys.light_speed}, got {worst}"
        )
    _pair_geometry(state.positions)  # raises on coincident particles


def _pair_geometry(positions: np.ndarray):
    """(r_ab distances, n_ab unit vectors) over ordered pairs a != b."""
    sep = positions[:, None, :] - positions[None, :, :]  # r_a - r_b
    dist = np.linalg.norm(sep, axis=-1)
    n = positions.shape[0]
    off = ~np.eye(n, dtype=bool)
    if n > 1 and np.any(dist[off] == 0.0):
        raise CoincidentParticlesError("two particles at the same position")
    safe = dist + np.eye(n)  # keep the diagonal out of divisions
    return dist, sep / safe[..., None]


def lagrangian(sys: DarwinSystem, positions, velocities) -> float:
    """Scalar L(positions, velocities) including the rest-mass term."""
    state = ClassicalState(0.0, positions, velocities)
    validate_state(sys, state)
    pos, vel = state.positions, state.velocities
    m, q, c = sys.masses, sys.charges, sys.light_speed
    v2 = np.sum(vel**2, axis=1)
    L = -(c**2) * m.sum() + 0.5 * np.dot(m, v2) + np.dot(m, v2**2) / (8 * c**2)
    if sys.n_particles > 1:
        dist, nhat = _pair_geometry(pos)
        off = ~np.eye(sys.n_particles, dtype=bool)
        qq = np.outer(q, q)
        inv_r = np.where(off, 1.0 / np.where(off, dist, 1.0), 0.0)
        L -= 0.5 * np.sum(qq * inv_r)
        vv = vel @ vel.T
        nv_b = np.einsum("abi,bi->ab", nhat, vel)  # n_ab . v_b
        nv_a = np.einsum("abi,ai->ab", nhat, vel)  # n_ab . v_a
        L += np.sum(qq * inv_r * (vv + nv_a * nv_b)) / (4 * c**2)
    return float(L)


def canonical_momenta(sys: DarwinSystem, positions, velocities) -> np.ndarray:
    """p_a = dL/dv_a in closed form:

    p_a = m_a v_a (1 + v_a^2 / 2c^2)
          + sum_{b!=a} (e_a e_b / 2 c^2 r_ab) (v_b + n_ab (n_ab . v_b)).
    """
    state = ClassicalState(0.0, positions, velocities)
    validate_state(sys, state)
    pos, vel = state.positions, state.velocities
    m, q, c = sys.masses, sys.charges, sys.light_speed
    v2 = np.sum(vel**2, axis=1)
    p = m[:, None] * vel * (1.0 + v2 / (2 * c**2))[:, None]
    if sys.n_particles > 1:
        dist, nhat = _pair_geometry(pos)
        off = ~np.eye(sys.n_particles, dtype=bool)
        w = np.where(off, np.outer(q, q) / np.where(off, dist, 1.0), 0.0)
        w /= 2 * c**2
        nv_b = np.einsum("abi,bi->ab", nhat, vel)
        p += np.einsum("ab,bi->ai", w, vel)
        p += np.einsum("ab,ab,abi->ai", w, nv_b, nhat)
    return p


def _forces(sys: DarwinSystem, pos: np.ndarray, vel: np.ndarray) -> np.ndarray:
    """dL/dr_a in closed form (per ordered pair a != b):

    F_a = sum_{b!=a} (e_a e_b / r^2) { n
            + (1/2c^2) [ -(v_a.v_b) n + v_a (n.v_b) + v_b (n.v_a)
                         - 3 n (n.v_a)(n.v_b) ] },   n = n_ab.
    """
    n_p = pos.shape[0]
    if n_p == 1:
        return np.zeros_like(pos)
    c = sys.light_speed
    dist, nhat = _pair_geometry(pos)
    off = ~np.eye(n_p, dtype=bool)
    qq_r2 = np.where(
        off, np.outer(sys.charges, sys.charges) / np.where(off, dist, 1.0) ** 2, 0.0
    )
    vv = vel @ vel.T
    nv_a = np.einsum("abi,ai->ab", nhat, vel)
    nv_b = np.einsum("abi,bi->ab", nhat, vel)
    F = np.einsum("ab,abi->ai", qq_r2, nhat)
    corr = np.einsum("ab,ab,abi->ai", qq_r2, -vv - 3 * nv_a * nv_b, nhat)
    corr += np.einsum("ab,ab,ai->ai", qq_r2, nv_b, vel)
    corr += np.einsum("ab,ab,bi->ai", qq_r2, nv_a, vel)
    F += corr / (2 * c**2)
    return F


def _momentum_drag(
    sys: DarwinSystem, pos: np.ndarray, vel: np.ndarray
) -> np.ndarray:
    """Acceleration-free part of dp_a/dt coming from moving pair geometry:

    sum_{b!=a} (e_a e_b / 2 c^2 r^2) [ -v_b (n.w)
        + w (n.v_b) + n (w.v_b) - 3 n (n.w)(n.v_b) ],   w = v_a - v_b.
    """
    n_p = pos.shape[0]
    if n_p == 1:
        return np.zeros_like(pos)
    c = sys.light_speed
    dist, nhat = _pair_geometry(pos)
    off = ~np.eye(n_p, dtype=bool)
    w2 = np.where(
        off, np.outer(sys.charges, sys.charges) / np.where(off, dist, 1.0) ** 2, 0.0
    )
    w2 /= 2 * c**2
    wrel = vel[:, None, :] - vel[None, :, :]  # v_a - v_b
    nw = np.einsum("abi,abi->ab", nhat, wrel)
    nv_b = np.einsum("abi,bi->ab", nhat, vel)
    wv_b = np.einsum("abi,bi->ab", wrel, vel)
    out = -np.einsum("ab,ab,bi->ai", w2, nw, vel)
    out += np.einsum("ab,ab,abi->ai", w2, nv_b, wrel)
    out += np.einsum("ab,ab,abi->ai", w2, wv_b - 3 * nw * nv_b, nhat)
    return out


def _inertia_apply(
    sys: DarwinSystem, pos: np.ndarray, vel: np.ndarray, acc: np.ndarray
) -> np.ndarray:
    """Acceleration-dependent part of dp_a/dt beyond m_a a_a:

    m_a [ (v_a^2 / 2c^2) a_a + v_a (v_a . a_a) / c^2 ]
        + sum_{b!=a} (e_a e_b / 2 c^2 r) [ a_b + n (n . a_b) ].
    """
    m, c = sys.masses, sys.light_speed
    v2 = np.sum(vel**2, axis=1)
    out = m[:, None] * (
        (v2 / (2 * c**2))[:, None] * acc
        + vel * (np.einsum("ai,ai->a", vel, acc) / c**2)[:, None]
    )
    n_p = pos.shape[0]
    if n_p > 1:
        dist, nhat = _pair_geometry(pos)
        off = ~np.eye(n_p, dtype=bool)
        w = np.where(off, np.outer(sys.charges, sys.charges) / np.where(off, dist, 1.0), 0.0)
        w /= 2 * c**2
        na_b = np.einsum("abi,bi->ab", nhat, acc)
        out += np.einsum("ab,bi->ai", w, acc)
        out += np.einsum("ab,ab,abi->ai", w, na_b, nhat)
    return out


def _accel_fixed_point(sys, pos, vel, acc0=None):
    """Core acceleration solve; pair geometry computed once and reused."""
    rhs = _forces(sys, pos, vel) - _momentum_drag(sys, pos, vel)
    inv_m = 1.0 / sys.masses[:, None]
    m, c = sys.masses, sys.light_speed
    v2 = np.sum(vel**2, axis=1)
    mv_fac = (m * v2 / (2 * c**2))[:, None]
    mv_vec = m[:, None] * vel / c**2
    n_p = pos.shape[0]
    if n_p > 1:
        dist, nhat = _pair_geometry(pos)
        off = ~np.eye(n_p, dtype=bool)
        w = np.where(
            off, np.outer(sys.charges, sys.charges) / np.where(off, dist, 1.0), 0.0
        )
        w /= 2 * c**2

    def inertia(acc):
        out = mv_fac * acc + mv_vec * np.einsum("ai,ai->a", vel, acc)[:, None]
        if n_p > 1:
            na_b = np.einsum("abi,bi->ab", nhat, acc)
            out += w @ acc
            out += np.einsum("ab,ab,abi->ai", w, na_b, nhat)
        return out

    acc = rhs * inv_m if acc0 is None else acc0
    last_delta = None
    for _ in range(sys.fixed_point_maxiter):
        new = (rhs - inertia(acc)) * inv_m
        delta = float(np.max(np.abs(new - acc)))
        acc = new
        scale = max(float(np.max(np.abs(acc))), 1.0)
        if delta <= sys.fixed_point_tol * scale:
            return acc
        if (
            last_delta is not None
            and delta > last_delta
            and delta > 1e3 * sys.fixed_point_tol * scale
        ):
            raise FixedPointError(
                f"inertia fixed point diverging: contraction estimate "
                f"{delta / last_delta:.3g} >= 1"
            )
        last_delta = delta
    raise FixedPointError(
        f"inertia fixed point not converged in {sys.fixed_point_maxiter} "
        f"iterations (last delta {delta:.3e})"
    )


def accelerations(sys: DarwinSystem, state: ClassicalState) -> np.ndarray:
    """Solve d/dt(dL/dv_a) = dL/dr_a for the accelerations.

    The velocity-dependent inertia couples accelerations across particles;
    the linear system is solved by fixed-point iteration (the off-Newtonian
    part is O(v^2/c^2) small in the model's validity domain).
    """
    validate_state(sys, state)
    return _accel_fixed_point(sys, state.positions, state.velocities)


def energy(sys: DarwinSystem, state: ClassicalState) -> float:
    """Legendre energy E = sum_a v_a . p_a - L (includes rest masses)."""
    p = canonical_momenta(sys, state.positions, state.velocities)
    vp = float(np.sum(state.velocities * p))
    return vp - lagrangian(sys, state.positions, state.velocities)


def binding_energy(sys: DarwinSystem, state: ClassicalState) -> float:
    """Energy with the rest-mass contribution removed."""
    return energy(sys, state) - sys.light_speed**2 * float(sys.masses.sum())


def total_momentum(sys: DarwinSystem, state: ClassicalState) -> np.ndarray:
    return canonical_momenta(sys, state.positions, state.velocities).sum(axis=0)


@dataclass(frozen=True)
class Trajectory:
    """Immutable integration record (arrays indexed by step, 0 = initial)."""

    times: np.ndarray  # (S,)
    positions: np.ndarray  # (S, N, 3)
    velocities: np.ndarray  # (S, N, 3)
    momenta: np.ndarray  # (S, N, 3)
    energies: np.ndarray  # (S,)
    total_momenta: np.ndarray  # (S, 3)

    def __post_init__(self):
        for name in (
            "times",
            "positions",
            "velocities",
            "momenta",
            "energies",
            "total_momenta",
        ):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    def final_state(self) -> ClassicalState:
        return ClassicalState(
            float(self.times[-1]), self.positions[-1], self.velocities[-1]
        )

    def write_csv(self, path):
        import csv

        n = self.positions.shape[1]
        header = ["t"]
        for a in range(n):
            for comp in "xyz":
                header.append(f"pos{a+1}_{comp}")
            for comp in "xyz":
                header.append(f"vel{a+1}_{comp}")
            for comp in "xyz":
                header.append(f"mom{a+1}_{comp}")
        header += ["E", "P_x", "P_y", "P_z"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for s in range(len(self.times)):
                row = [repr(float(self.times[s]))]
                for a in range(n):
                    for block in (self.positions, self.velocities, self.momenta):
                        row.extend(repr(float(v)) for v in block[s, a])
                row.append(repr(float(self.energies[s])))
                row.extend(repr(float(v)) for v in self.total_momenta[s])
                w.writerow(row)


def suggest_timestep(sys: DarwinSystem, state: ClassicalState) -> float:
    """dt = T_min / 200 with T_min from the current acceleration scale."""
    validate_state(sys, state)
    acc = accelerations(sys, state)
    anorm = np.linalg.norm(acc, axis=1)
    vnorm = np.linalg.norm(state.velocities, axis=1)
    # T ~ 2*pi*sqrt(v/a) is only meaningful for curving motion; fall back to
    # the pair light-crossing scale when everything is at rest.
    with np.errstate(divide="ignore", invalid="ignore"):
        periods = 2 * np.pi * np.where(anorm > 0, np.sqrt(
            np.where(anorm > 0, vnorm / np.where(anorm > 0, anorm, 1.0), 1.0)
        ), np.inf)
    t_min = float(np.min(periods))
    if not np.isfinite(t_min):
        if sys.n_particles > 1:
            dist, _ = _pair_geometry(state.positions)
            off = ~np.eye(sys.n_particles, dtype=bool)
            t_min = float(dist[off].min()) / sys.light_speed
        else:
            t_min = 1.0
    return t_min / 200.0


def integrate(
    sys: DarwinSystem, state: ClassicalState, dt: float, n_steps: int
) -> Trajectory:
    """Implicit-midpoint integration of the second-order system.

    Each step solves z1 = z0 + dt*f((z0+z1)/2) for z = (positions,
    velocities), f = (velocities, accelerations), by fixed-point iteration;
    a step that fails to converge raises StepRejectedError.
    """
    if not dt > 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    if n_steps < 1:
        raise ConfigError(f"n_steps must be >= 1, got {n_steps}")
    validate_state(sys, state)

    shape = (n_steps + 1,) + state.positions.shape
    out_pos = np.empty(shape)
    out_vel = np.empty(shape)
    out_mom = np.empty(shape)
    out_t = np.empty(n_steps + 1)
    out_e = np.empty(n_steps + 1)
    out_P = np.empty((n_steps + 1, 3))

    def record(s, t, pos, vel):
        out_t[s] = t
        out_pos[s] = pos
        out_vel[s] = vel
        p = canonical_momenta(sys, pos, vel)
        out_mom[s] = p
        out_e[s] = float(np.sum(vel * p)) - lagrangian(sys, pos, vel)
        out_P[s] = p.sum(axis=0)

    pos, vel, t = state.positions.copy(), state.velocities.copy(), state.t
    record(0, t, pos, vel)
    tol = sys.fixed_point_tol
    acc_mid = _accel_fixed_point(sys, pos, vel)  # warm start carried along
    for s in range(1, n_steps + 1):
        pos1, vel1 = pos + dt * vel, vel + dt * acc_mid  # Euler predictor
        converged = False
        for _ in range(sys.fixed_point_maxiter):
            acc_mid = _accel_fixed_point(
                sys, 0.5 * (pos + pos1), 0.5 * (vel + vel1), acc0=acc_mid
            )
            new_pos = pos + dt * 0.5 * (vel + vel1)
            new_vel = vel + dt * acc_mid
            delta = max(
                float(np.max(np.abs(new_pos - pos1))),
                float(np.max(np.abs(new_vel - vel1))),
            )
            pos1, vel1 = new_pos, new_vel
            scale = max(float(np.max(np.abs(pos1))), float(np.max(np.abs(vel1))), 1.0)
            if delta <= tol * scale:
                converged = True
                break
        if not converged:
            raise StepRejectedError(
                f"step {s}: midpoint stage not converged (delta {delta:.3e})"
            )
        pos, vel, t = pos1, vel1, state.t + s * dt
        record(s, t, pos, vel)
    return Trajectory(out_t, out_pos, out_vel, out_mom, out_e, out_P)


def kepler_frequency(sys: DarwinSystem, radius: float) -> float:
    """omega_K = sqrt(|e1 e2| / (mu r^3)) for the two-body system."""
    if sys.n_particles != 2:
        raise ConfigError("kepler_frequency needs exactly two particles")
    m1, m2 = sys.masses
    mu = m1 * m2 / (m1 + m2)
    k = sys.charges[0] * sys.charges[1]
    if k >= 0:
        raise ConfigError("circular orbits need an attractive pair (e1*e2 < 0)")
    return float(np.sqrt(-k / (mu * radius**3)))


def _circular_state(
    sys: DarwinSystem, radius: float, omega: float
) -> ClassicalState:
    """Rigid circular two-body state with zero total canonical momentum.

    Particle 1 at R1*x_hat, particle 2 at -(r-R1)*x_hat, velocities along
    y_hat; R1 solves p1 + p2 = 0 (scalar equation, one root in (0, r)).
    """
    from scipy.optimize import brentq

    m1, m2 = sys.masses
    k = sys.charges[0] * sys.charges[1]
    c = sys.light_speed

    def balance(R1):
        R2 = radius - R1
        v1, v2 = omega * R1, omega * R2
        return (
            m1 * v1 * (1 + v1**2 / (2 * c**2))
            - m2 * v2 * (1 + v2**2 / (2 * c**2))
            + (k / (2 * c**2 * radius)) * (v1 - v2)
        )

    eps = 1e-12 * radius
    R1 = brentq(balance, eps, radius - eps, xtol=1e-15 * radius, rtol=8.9e-16)
    pos = np.array([[R1, 0.0, 0.0], [R1 - radius, 0.0, 0.0]])
    vel = np.array([[0.0, omega * R1, 0.0], [0.0, omega * (R1 - radius), 0.0]])
    return ClassicalState(0.0, pos, vel)


def circular_orbit(sys: DarwinSystem, radius: float):
    """Angular frequency of the rigid circular two-body orbit.

    Root-finds the radial equation of motion a_1 . n_1 = -omega^2 R_1 over
    omega, bracketing around the Kepler value.  Returns (omega, omega_K).
    """
    if sys.n_particles != 2:
        raise ConfigError("circular_orbit needs exactly two particles")
    if not radius > 0:
        raise ConfigError(f"radius must be positive, got {radius}")
    from scipy.optimize import brentq

    omega_k = kepler_frequency(sys, radius)
    if omega_k * radius >= sys.light_speed:
        raise ConfigError(
            f"radius {radius} puts orbital speeds at or beyond light_speed"
        )

    def residual(omega):
        state = _circular_state(sys, radius, omega)
        acc = accelerations(sys, state)
        R1 = state.positions[0, 0]
        return float(acc[0, 0] + omega**2 * R1)

    lo, hi = 0.5 * omega_k, 1.5 * omega_k
    f_lo, f_hi = residual(lo), residual(hi)
    if f_lo * f_hi > 0:
        raise ConfigError(
            f"no circular-orbit root in [{lo:.3e}, {hi:.3e}] "
            f"(residuals {f_lo:.3e}, {f_hi:.3e}); radius likely outside the "
            f"v < c validity domain"
        )
    omega = brentq(residual, lo, hi, xtol=1e-16 * omega_k, rtol=8.9e-16)
    return float(omega), omega_k


def circular_initial_state(sys: DarwinSystem, radius: float) -> ClassicalState:
    """State launching the self-consistent circular orbit of circular_orbit."""
    omega, _ = circular_orbit(sys, radius)
    return _circular_state(sys, radius, omega)
