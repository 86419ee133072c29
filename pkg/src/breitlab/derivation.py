"""Executable checks for the approximation chain behind the two-fermion
interaction kernel.

Synthetic fields are finite sums of exact free-Dirac plane waves, so their
bilinears are trigonometric polynomials with exactly known time dependence.
Double integrals of the form

    I = ∫∫ F(x) K(x-y) G(y) d³x d³y

over the periodic box therefore reduce to lattice sums
I = L⁶ Σ_p F(-p) G(p) K̂(p), where K̂(p) are box Fourier coefficients of the
(minimum-image) kernel.  The K̂ tables come from refined-grid FFTs with an
analytically calibrated correction for the 1/|u| singularity, giving a
sequence of quadrature levels that converges to the exact identity value.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.fft import fftn, ifftn, next_fast_len, rfftn

from .spinors import ALPHAS, PAULI

# h² coefficient of the punctured-trapezoid error for the 1/|u| kernel on a
# cubic lattice; calibrated against the closed-box integral (fit residuals
# at machine precision over six refinement levels).
_INV_R_LATTICE_CONSTANT = 3.8844950304848314

_GAMMA0 = np.eye(4, dtype=complex)


def free_spinor(k_vec, branch, chi, mass=1.0):
    """Exact unit-norm free-Dirac 4-spinor for momentum k and branch s=±1.

    Vectorized over leading axes of k_vec (..., 3) and chi (..., 2).
    """
    k_vec = np.asarray(k_vec, dtype=float)
    chi = np.asarray(chi, dtype=complex)
    e = np.sqrt(mass**2 + np.sum(k_vec**2, axis=-1))
    sk = np.einsum("iab,...i->...ab", PAULI, k_vec)
    norm = np.sqrt((e + mass) / (2 * e))[..., None]
    coupled = np.einsum("...ab,...b->...a", sk, chi) / (e + mass)[..., None]
    branch = np.asarray(branch)
    upper = np.where((branch == 1)[..., None], chi, -coupled)
    lower = np.where((branch == 1)[..., None], coupled, chi)
    return norm * np.concatenate([upper, lower], axis=-1)


@dataclass(frozen=True)
class FreeWavepacket:
    """Superposition of exact free-Dirac plane waves.

    psi(t,x) = sum_j amplitudes[j] exp(i(k_j.x - s_j E_j t)), where each
    amplitude is c_j * u_{s_j}(k_j) for some 2-spinor coefficient, so the
    field solves the free Dirac equation identically.
    """

    momenta: np.ndarray  # (M, 3)
    branches: np.ndarray  # (M,) entries ±1
    amplitudes: np.ndarray  # (M, 4)
    mass: float = 1.0

    def __post_init__(self):
        if self.momenta.shape[0] != self.amplitudes.shape[0]:
            raise ValueError("momenta/amplitudes length mismatch")
        if not np.all(np.abs(self.branches) == 1):
            raise ValueError("branches must be ±1")

    @classmethod
    def from_terms(cls, terms, mass=1.0):
        """terms: iterable of (k_vec, branch, chi 2-spinor coefficient)."""
        ks = np.array([t[0] for t in terms], dtype=float)
        ss = np.array([t[1] for t in terms], dtype=int)
        chis = np.array([t[2] for t in terms], dtype=complex)
        amps = free_spinor(ks, ss, chis, mass)
        return cls(momenta=ks, branches=ss, amplitudes=amps, mass=mass)

    @classmethod
    def gaussian(
        cls,
        box_length,
        center_momentum=(0.0, 0.0, 0.0),
        center_position=(0.0, 0.0, 0.0),
        sigma_modes=1.9,
        mode_cutoff=11,
        spin=(1.0, 0.0),
        branch=1,
        mass=1.0,
        max_terms=None,
    ):
        """Gaussian momentum envelope on the box mode lattice.

        sigma_modes is the envelope width in lattice units (2π/L); the
        position-space width is box_length/(4π·sigma_modes), so the default
        localizes the packet well inside the box.  max_terms keeps only the
        largest-amplitude modes (for the direct pair-sum evaluators, which
        scale quadratically in the term count).
        """
        unit = 2 * np.pi / box_length
        j = np.arange(-mode_cutoff, mode_cutoff + 1)
        mx, my, mz = np.meshgrid(j, j, j, indexing="ij")
        m = np.stack([mx, my, mz], axis=-1).reshape(-1, 3)
        k = unit * m
        k0 = np.asarray(center_momentum, dtype=float)
        x0 = np.asarray(center_position, dtype=float)
        sig_k = sigma_modes * unit
        env = np.exp(-np.sum((k - k0) ** 2, axis=-1) / (4 * sig_k**2))
        coef = env * np.exp(-1j * (k @ x0))
        if max_terms is not None and len(k) > max_terms:
            keep = np.argsort(np.abs(coef))[-max_terms:]
            k, coef = k[keep], coef[keep]
        coef /= np.sqrt(np.sum(np.abs(coef) ** 2) * box_length**3)
        chi = np.asarray(spin, dtype=complex)
        chi = chi / np.linalg.norm(chi)
        ss = np.full(len(k), branch, dtype=int)
        chis = np.broadcast_to(chi, (len(k), 2))
        amps = free_spinor(k, ss, chis, mass) * coef[:, None]
        return cls(momenta=k, branches=ss, amplitudes=amps, mass=mass)

    def energies(self):
        return np.sqrt(self.mass**2 + np.sum(self.momenta**2, axis=-1))

    def frequencies(self):
        return self.branches * self.energies()

    def evaluate(self, t, points):
        """psi at time t on points (..., 3) -> (..., 4)."""
        points = np.asarray(points, dtype=float)
        phase = np.exp(
            1j * (points @ self.momenta.T - t * self.frequencies())
        )
        return phase @ self.amplitudes

    def time_derivative(self, t, points):
        points = np.asarray(points, dtype=float)
        phase = np.exp(1j * (points @ self.momenta.T - t * self.frequencies()))
        return (phase * (-1j * self.frequencies())) @ self.amplitudes

    def gradient(self, t, points):
        """(..., 3, 4) spatial gradient."""
        points = np.asarray(points, dtype=float)
        phase = np.exp(1j * (points @ self.momenta.T - t * self.frequencies()))
        return np.einsum(
            "...m,mi,ma->...ia", phase, 1j * self.momenta, self.amplitudes
        )


def corrupt_packet(packet: FreeWavepacket, index=0, strength=0.3, seed=0):
    """Break the free-Dirac property of one term (negative-control helper)."""
    rng = np.random.default_rng(seed)
    amps = packet.amplitudes.copy()
    scale = np.max(np.abs(amps[index])) or 1.0
    amps[index] = amps[index] + strength * scale * (
        rng.standard_normal(4) + 1j * rng.standard_normal(4)
    )
    return replace(packet, amplitudes=amps)


def continuity_residual(packet: FreeWavepacket, t, points):
    """Pointwise ∂_t(ψ†ψ) + ∇.(ψ†αψ), and the local density scale."""
    psi = packet.evaluate(t, points)
    dpsi = packet.time_derivative(t, points)
    grad = packet.gradient(t, points)
    res = 2 * np.real(np.einsum("...a,...a->...", psi.conj(), dpsi))
    res = res + 2 * np.real(
        np.einsum("...a,iab,...ib->...", psi.conj(), ALPHAS, grad)
    )
    dens = np.real(np.einsum("...a,...a->...", psi.conj(), psi))
    return res, dens


@dataclass
class CurrentDensity:
    """Bilinear currents j^mu = (ψ†ψ, ψ†α⃗ψ) of a wavepacket."""

    packet: FreeWavepacket

    def four_current(self, t, points):
        psi = self.packet.evaluate(t, points)
        j0 = np.real(np.einsum("...a,...a->...", psi.conj(), psi))
        ji = np.real(
            np.einsum("...a,iab,...b->...i", psi.conj(), ALPHAS, psi)
        )
        return np.concatenate([j0[..., None], ji], axis=-1)

    def _pair_tables(self, point):
        p = self.packet
        x = np.asarray(point, dtype=float)
        a = p.amplitudes * np.exp(1j * (p.momenta @ x))[:, None]
        mats = np.concatenate([_GAMMA0[None], ALPHAS], axis=0)
        # T[mu, j, l] amplitude of the (j,l) oscillator in j^mu at this point
        T = np.einsum("ja,uab,lb->ujl", a.conj(), mats, a)
        omega = p.frequencies()
        dw = omega[None, :] - omega[:, None]  # e^{-i dw t} time dependence
        return T, dw

    def time_series(self, point, times):
        """Exact j^mu(t, point) for an array of times -> (len(times), 4)."""
        if len(self.packet.momenta) > 1500:
            raise ValueError("direct pair sum limited to 1500 modes")
        T, dw = self._pair_tables(point)
        times = np.atleast_1d(np.asarray(times, dtype=float))
        osc = np.exp(-1j * times[:, None, None] * dw[None])
        return np.real(np.einsum("ujl,tjl->tu", T, osc))

    def time_derivatives(self, point, t, order):
        """d^n/dt^n j^mu(t, point) for n = 0..order -> (order+1, 4)."""
        if len(self.packet.momenta) > 1500:
            raise ValueError("direct pair sum limited to 1500 modes")
        T, dw = self._pair_tables(point)
        base = T * np.exp(-1j * t * dw)[None]
        out = []
        for n in range(order + 1):
            out.append(np.real(np.einsum("ujl,jl->u", base, (-1j * dw) ** n)))
        return np.array(out)


@dataclass
class CheckReport:
    name: str
    levels: list
    residuals: list
    threshold: float
    passed: bool
    fitted_order: float | None = None
    details: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "name": self.name,
            "levels": list(self.levels),
            "residuals": [float(r) for r in self.residuals],
            "threshold": self.threshold,
            "passed": bool(self.passed),
            "fitted_order": None
            if self.fitted_order is None
            else float(self.fitted_order),
            "details": self.details,
        }


# ---------------------------------------------------------------------------
# mode-lattice reduction of double integrals
# ---------------------------------------------------------------------------


def _mode_indices(packet: FreeWavepacket, box_length):
    unit = 2 * np.pi / box_length
    m = packet.momenta / unit
    mi = np.rint(m).astype(int)
    if np.max(np.abs(m - mi)) > 1e-9:
        raise ValueError("packet momenta are not on the box mode lattice")
    return mi


def _fft_size(*span):
    # mode differences span [-2J, 2J]; linear correlation needs P > 4J
    return next_fast_len(4 * max(span) + 2)


def _packet_mode_array(packet, box_length, size, weights=None):
    mi = _mode_indices(packet, box_length)
    arr = np.zeros((4, size, size, size), dtype=complex)
    amps = packet.amplitudes if weights is None else packet.amplitudes * weights[:, None]
    idx = tuple((mi % size).T)
    for a in range(4):
        np.add.at(arr[a], idx, amps[:, a])
    return arr


def _correlate(A, gamma, B):
    """c_p = Σ_k A†(k) Γ B(k+p) on the periodic index lattice."""
    FA = fftn(A, axes=(1, 2, 3))
    FB = fftn(B, axes=(1, 2, 3))
    X = np.einsum("ab,axyz,bxyz->xyz", np.asarray(gamma, dtype=complex), FA.conj(), FB)
    return ifftn(X)


def bilinear_modes(packet, gamma, box_length, size, time_derivative=False):
    """Fourier modes of ψ†Γψ (or its time derivative at t=0)."""
    A = _packet_mode_array(packet, box_length, size)
    if not time_derivative:
        return _correlate(A, gamma, A)
    W = _packet_mode_array(packet, box_length, size, weights=packet.frequencies())
    return -1j * (_correlate(A, gamma, W) - _correlate(W, gamma, A))


def _lattice_wavenumbers(size, box_length):
    m = np.rint(np.fft.fftfreq(size) * size).astype(int)
    return 2 * np.pi * m / box_length, m


def divergence_modes(current_modes, box_length):
    """(∇·a)_p = i p·a_p from stacked component modes (3, P, P, P)."""
    size = current_modes.shape[-1]
    k, _ = _lattice_wavenumbers(size, box_length)
    out = 1j * (
        k[:, None, None] * current_modes[0]
        + k[None, :, None] * current_modes[1]
        + k[None, None, :] * current_modes[2]
    )
    return out


_KERNEL_CACHE: dict = {}


def kernel_mode_table(kind, box_length, size, n_fine, component=None):
    """Box Fourier coefficients K̂(p) of a minimum-image kernel.

    kind: "abs" (|u|), "inv" (1/|u|), "nn_inv" (u_i u_j / |u|³, needs
    component=(i,j)).  The 1/|u| singularity gets the calibrated
    punctured-lattice origin correction, removing the O(h²) quadrature error.
    """
    key = (kind, box_length, size, n_fine, component)
    if key in _KERNEL_CACHE:
        return _KERNEL_CACHE[key]
    if n_fine < size:
        raise ValueError("n_fine must be at least the mode table size")
    h = box_length / n_fine
    x = np.arange(n_fine) * h
    x = np.where(x > box_length / 2, x - box_length, x)
    ax = (x[:, None, None], x[None, :, None], x[None, None, :])
    r2 = (ax[0] ** 2 + ax[1] ** 2) + ax[2] ** 2
    if kind == "abs":
        K = np.sqrt(r2)
    elif kind == "inv":
        with np.errstate(divide="ignore"):
            K = np.where(r2 == 0.0, 0.0, 1.0 / np.sqrt(np.where(r2 == 0.0, 1.0, r2)))
        K[0, 0, 0] = _INV_R_LATTICE_CONSTANT / h
    elif kind == "nn_inv":
        i, j = component
        with np.errstate(divide="ignore"):
            inv_r3 = np.where(
                r2 == 0.0, 0.0, np.where(r2 == 0.0, 1.0, r2) ** -1.5
            )
        K = (ax[i] * ax[j]) * inv_r3
        if i == j:
            K[0, 0, 0] = _INV_R_LATTICE_CONSTANT / (3 * h)
    else:
        raise ValueError(f"unknown kernel kind {kind!r}")
    del r2
    F = rfftn(K)
    del K
    _, m = _lattice_wavenumbers(size, box_length)
    MX, MY, MZ = np.meshgrid(m, m, m, indexing="ij")
    flip = MZ < 0
    gx = np.where(flip, -MX, MX) % n_fine
    gy = np.where(flip, -MY, MY) % n_fine
    gz = np.where(flip, -MZ, MZ)
    table = np.real(F[gx, gy, gz]) / n_fine**3
    if len(_KERNEL_CACHE) > 24:
        _KERNEL_CACHE.clear()
    _KERNEL_CACHE[key] = table
    return table


def _flip_modes(F):
    return np.roll(F[::-1, ::-1, ::-1], 1, axis=(0, 1, 2))


def double_integral(F, G, table, box_length):
    """∫∫ F(x) K(x-y) G(y) d³x d³y from mode arrays and a kernel table."""
    return box_length**6 * np.sum(_flip_modes(F) * G * table)


# ---------------------------------------------------------------------------
# the checks
# ---------------------------------------------------------------------------


def continuity_substitution_check(
    packet1, packet2, box_length, n_fine=128, threshold=1e-6
):
    """Time-derivative form vs divergence form of the |x-y|-weighted
    charge-fluctuation double integral (they coincide when both fields obey
    the continuity equation)."""
    m1 = np.max(np.abs(_mode_indices(packet1, box_length)))
    m2 = np.max(np.abs(_mode_indices(packet2, box_length)))
    size = _fft_size(m1, m2)
    table = kernel_mode_table("abs", box_length, size, n_fine)
    sides = {}
    for tag, packet in (("1", packet1), ("2", packet2)):
        T = bilinear_modes(packet, _GAMMA0, box_length, size, time_derivative=True)
        cur = np.stack(
            [bilinear_modes(packet, ALPHAS[i], box_length, size) for i in range(3)]
        )
        D = divergence_modes(cur, box_length)
        sides[tag] = (T, D)
    lhs = double_integral(sides["1"][0], sides["2"][0], table, box_length)
    rhs = double_integral(sides["1"][1], sides["2"][1], table, box_length)
    scale = max(abs(lhs), abs(rhs), 1e-300)
    resid = abs(lhs - rhs) / scale
    return CheckReport(
        name="continuity_substitution",
        levels=[n_fine],
        residuals=[resid],
        threshold=threshold,
        passed=resid <= threshold,
        details={"lhs": float(np.real(lhs)), "rhs": float(np.real(rhs))},
    )


def _extrapolated_table(kind, box_length, size, n_fine, component=None):
    """Kernel table with the leading h² quadrature error cancelled by
    Richardson extrapolation between n_fine and 2*n_fine."""
    coarse = kernel_mode_table(kind, box_length, size, n_fine, component)
    fine = kernel_mode_table(kind, box_length, size, 2 * n_fine, component)
    return (4.0 * fine - coarse) / 3.0


def integration_by_parts_check(
    packet1,
    packet2,
    box_length,
    levels=(48, 96, 192),
    threshold=1e-5,
    extrapolate=True,
):
    """∫∫|x-y| (∇·a₁)(∇·a₂) = -∫∫ [a₁·a₂ - (n̂·a₁)(n̂·a₂)] / |x-y|,
    evaluated under kernel-table refinement (each level is Richardson
    extrapolated against its doubling by default)."""
    m1 = np.max(np.abs(_mode_indices(packet1, box_length)))
    m2 = np.max(np.abs(_mode_indices(packet2, box_length)))
    size = _fft_size(m1, m2)
    cur1 = np.stack(
        [bilinear_modes(packet1, ALPHAS[i], box_length, size) for i in range(3)]
    )
    cur2 = np.stack(
        [bilinear_modes(packet2, ALPHAS[i], box_length, size) for i in range(3)]
    )
    D1 = divergence_modes(cur1, box_length)
    D2 = divergence_modes(cur2, box_length)
    table = _extrapolated_table if extrapolate else kernel_mode_table
    residuals = []
    details = {}
    for n_fine in levels:
        t_abs = table("abs", box_length, size, n_fine)
        t_inv = table("inv", box_length, size, n_fine)
        lhs = double_integral(D1, D2, t_abs, box_length)
        rhs = 0.0 + 0.0j
        for i in range(3):
            rhs -= double_integral(cur1[i], cur2[i], t_inv, box_length)
            for j in range(3):
                t_nn = table("nn_inv", box_length, size, n_fine, (i, j))
                rhs += double_integral(cur1[i], cur2[j], t_nn, box_length)
        scale = max(abs(lhs), abs(rhs), 1e-300)
        residuals.append(abs(lhs - rhs) / scale)
        details[f"lhs_{n_fine}"] = float(np.real(lhs))
        details[f"rhs_{n_fine}"] = float(np.real(rhs))
    order = None
    if len(levels) >= 2 and residuals[-1] > 0:
        logs = np.log(np.maximum(residuals, 1e-300))
        order = float(
            np.polyfit(np.log([float(n) for n in levels]), logs, 1)[0] * -1
        )
    monotone = all(b <= a * (1 + 1e-12) for a, b in zip(residuals, residuals[1:]))
    return CheckReport(
        name="integration_by_parts",
        levels=list(levels),
        residuals=residuals,
        threshold=threshold,
        passed=bool(residuals[-1] <= threshold and monotone),
        fitted_order=order,
        details=details,
    )


def retardation_expansion_check(
    current: CurrentDensity,
    point=(0.0, 0.0, 0.0),
    separations=(0.4, 0.6, 0.9, 1.4, 2.0, 3.0, 4.0),
    t=0.0,
    slope_band=(2.8, 3.2),
):
    """Second-order Taylor expansion of the time-shifted current bilinear:
    the remainder must scale as separation cubed."""
    derivs = current.time_derivatives(point, t, order=2)
    seps = np.asarray(separations, dtype=float)
    exact = current.time_series(point, t - seps)
    taylor = (
        derivs[0][None, :]
        - seps[:, None] * derivs[1][None, :]
        + 0.5 * seps[:, None] ** 2 * derivs[2][None, :]
    )
    resid = np.max(np.abs(exact - taylor), axis=1)
    scale = max(np.max(np.abs(derivs[0])), 1e-300)
    resid_rel = resid / scale
    slope = float(np.polyfit(np.log(seps), np.log(np.maximum(resid_rel, 1e-300)), 1)[0])
    passed = slope_band[0] <= slope <= slope_band[1]
    return CheckReport(
        name="retardation_expansion",
        levels=list(seps),
        residuals=list(resid_rel),
        threshold=float("nan"),
        passed=bool(passed),
        fitted_order=slope,
        details={"slope_band": list(slope_band)},
    )


def neglected_term_estimate(
    speeds=(0.025, 0.05, 0.1, 0.2),
    center_modes=8,
    sigma_modes=1.9,
    mode_cutoff=16,
    n_fine=96,
    mass=1.0,
    min_power=2.0,
):
    """Size of the dropped time-derivative current-current term relative to
    the retained instantaneous current-current term, across a family of
    counter-propagating packet pairs with velocity scale v.

    The box is scaled as 1/v with the packet's momentum-space shape held
    fixed (center at center_modes lattice units, width sigma_modes), so
    every momentum in the superposition scales linearly with v and the
    ratio is a clean function of v alone.

    The ratio behaves as C v^2 (1 - d v^2 + ...) with d > 0: the oscillation
    frequencies of the current bilinears are differences of sqrt(m^2+k^2),
    which relativity reduces below their quadratic-dispersion values, and
    that reduction enters the numerator twice while the amplitude factors
    cancel between numerator and denominator.  A straight log-log fit over
    any finite speed range therefore lands strictly below the true leading
    power 2.  fitted_order is instead the v -> 0 extrapolation of the local
    slopes (quadratic in v^2); the difference from the cruder linear
    extrapolation is reported as its resolution and allowed for in the pass
    decision, since the remaining extrapolation bias is negative definite.
    """
    ratios = []
    for v in speeds:
        box = 2 * np.pi * center_modes / (mass * v)
        k0 = mass * v
        p1 = FreeWavepacket.gaussian(
            box,
            center_momentum=(k0, 0, 0),
            sigma_modes=sigma_modes,
            mode_cutoff=mode_cutoff,
            mass=mass,
        )
        p2 = FreeWavepacket.gaussian(
            box,
            center_momentum=(-k0, 0, 0),
            sigma_modes=sigma_modes,
            mode_cutoff=mode_cutoff,
            spin=(0.0, 1.0),
            mass=mass,
        )
        size = _fft_size(mode_cutoff, mode_cutoff)
        t_inv = kernel_mode_table("inv", box, size, n_fine)
        t_abs = kernel_mode_table("abs", box, size, n_fine)
        gaunt = 0.0
        negl = 0.0
        for i in range(3):
            a1 = bilinear_modes(p1, ALPHAS[i], box, size)
            a2 = bilinear_modes(p2, ALPHAS[i], box, size)
            da1 = bilinear_modes(p1, ALPHAS[i], box, size, time_derivative=True)
            da2 = bilinear_modes(p2, ALPHAS[i], box, size, time_derivative=True)
            gaunt += double_integral(a1, a2, t_inv, box)
            negl += double_integral(da1, da2, t_abs, box)
        ratios.append(abs(negl) / abs(gaunt))
    v = np.asarray(speeds, dtype=float)
    r = np.asarray(ratios, dtype=float)
    lsq_slope = float(np.polyfit(np.log(v), np.log(r), 1)[0])
    local = np.diff(np.log(r)) / np.diff(np.log(v))
    x = v[:-1] * v[1:]  # squared geometric-mean speed per slope
    power = float(np.polyval(np.polyfit(x, local, min(2, len(local) - 1)), 0.0))
    linear = float(np.polyval(np.polyfit(x, local, 1), 0.0))
    resolution = abs(power - linear)
    passed = power >= min_power - max(resolution, 1e-12)
    return CheckReport(
        name="neglected_term",
        levels=list(speeds),
        residuals=list(ratios),
        threshold=float("nan"),
        passed=bool(passed),
        fitted_order=power,
        details={
            "min_power": min_power,
            "lsq_slope": lsq_slope,
            "local_slopes": [float(s) for s in local],
            "order_resolution": resolution,
        },
    )


# ---------------------------------------------------------------------------
# direct-space potential of a current distribution
# ---------------------------------------------------------------------------


def symmetric_potential(
    current: CurrentDensity,
    t,
    x,
    r_max,
    n_r=40,
    n_theta=16,
    n_phi=32,
):
    """Half-retarded plus half-advanced potential of a wavepacket current.

    A_mu(t,x) = 1/2 ∫ d³y [j_mu(t-|x-y|, y) + j_mu(t+|x-y|, y)] / |x-y|
    by spherical quadrature centred on x (the radial Jacobian cancels the
    1/|x-y| singularity, so no excision is needed).
    """
    x = np.asarray(x, dtype=float)
    nodes_r, w_r = leggauss(n_r)
    radii = 0.5 * r_max * (nodes_r + 1.0)
    w_r = 0.5 * r_max * w_r
    nodes_c, w_c = leggauss(n_theta)
    phis = 2 * np.pi * np.arange(n_phi) / n_phi
    w_phi = 2 * np.pi / n_phi
    st = np.sqrt(1 - nodes_c**2)
    dirs = np.stack(
        [
            st[:, None] * np.cos(phis)[None, :],
            st[:, None] * np.sin(phis)[None, :],
            np.broadcast_to(nodes_c[:, None], (n_theta, n_phi)),
        ],
        axis=-1,
    ).reshape(-1, 3)
    w_ang = (w_c[:, None] * np.full(n_phi, w_phi)[None, :]).reshape(-1)
    out = np.zeros(4)
    for r, wr in zip(radii, w_r):
        pts = x[None, :] + r * dirs
        j_minus = current.four_current(t - r, pts)
        j_plus = current.four_current(t + r, pts)
        shell = 0.5 * (j_minus + j_plus)
        out += wr * r * np.einsum("p,pu->u", w_ang, shell)
    return out
