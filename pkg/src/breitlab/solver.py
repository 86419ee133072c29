"""Stationary two-fermion wave equation on a periodic Fourier grid.

The relative-coordinate field at total momentum zero is a complex array of
shape (n, n, n, 4, 4): the first spin index belongs to particle 1, the
second to particle 2.  The Hamiltonian

    H = c a1.p - c a2.p + m1 c^2 b1 + m2 c^2 b2 + V(r)

is applied matrix-free: the derivative terms by multiplication with
sum_i k_i alpha_i in momentum space (particle 2 carries -k in the
center-of-mass frame, hence the relative sign), the interaction pointwise
in position space.

The raw operator is unbounded below on a grid, so the default eigenproblem
is restricted to the tensor product of free positive-energy subspaces
(P H P with P = Lambda+ (x) Lambda+ per momentum mode).  This projection is
an artifact decision: it makes the lowest-eigenvalue search well-posed.
"""

from __future__ import annotations

import struct
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import fftn, ifftn
from scipy.sparse.linalg import LinearOperator, eigsh

from .config import CouplingSpec, GridSpec, ParticleParams
from .kernel import coefficient_fields
from .spinors import ALPHAS, BETA

ALL_TERMS = frozenset({"coulomb", "gaunt", "retardation"})


class GridMismatchError(ValueError):
    pass


@dataclass
class BilocalField:
    """Discretized relative-coordinate two-body spinor field."""

    grid: GridSpec
    values: np.ndarray  # complex, shape (n, n, n, 4, 4)

    def __post_init__(self):
        n = self.grid.n
        if self.values.shape != (n, n, n, 4, 4):
            raise ValueError(f"field shape {self.values.shape} does not match grid")

    @classmethod
    def zeros(cls, grid: GridSpec) -> "BilocalField":
        n = grid.n
        return cls(grid, np.zeros((n, n, n, 4, 4), dtype=complex))

    @classmethod
    def random(cls, grid: GridSpec, seed: int = 0) -> "BilocalField":
        rng = np.random.default_rng(seed)
        n = grid.n
        v = rng.standard_normal((n, n, n, 4, 4)) + 1j * rng.standard_normal(
            (n, n, n, 4, 4)
        )
        return cls(grid, v)

    def norm(self) -> float:
        h3 = self.grid.spacing**3
        return float(np.sqrt(h3 * np.vdot(self.values, self.values).real))

    def dot(self, other: "BilocalField") -> complex:
        if other.grid != self.grid:
            raise GridMismatchError("fields live on different grids")
        return complex(self.grid.spacing**3 * np.vdot(self.values, other.values))


def normalize(psi: BilocalField) -> BilocalField:
    """Scale to unit discrete L2 norm (sum |psi|^2 h^3 = 1)."""
    nrm = psi.norm()
    if nrm == 0.0:
        raise ValueError("cannot normalize the zero field")
    return BilocalField(psi.grid, psi.values / nrm)


@dataclass(frozen=True)
class HamiltonianSpec:
    particle1: ParticleParams
    particle2: ParticleParams
    coupling: CouplingSpec
    grid: GridSpec
    terms: frozenset = ALL_TERMS
    projection: str = "positive_energy"

    def __post_init__(self):
        if not self.terms <= ALL_TERMS:
            raise ValueError(f"unknown interaction terms: {self.terms - ALL_TERMS}")
        if self.projection not in ("none", "positive_energy"):
            raise ValueError(f"unknown projection {self.projection!r}")


@dataclass
class SpectrumResult:
    eigenvalues: list
    binding_energies: list
    residual_norms: list
    iterations: int
    converged: bool
    terms: tuple
    grid_n: int
    box_length: float
    softening: float
    wall_time: float
    clusters: list = field(default_factory=list)
    eigenvectors: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "eigenvalues": list(map(float, self.eigenvalues)),
            "binding_energies": list(map(float, self.binding_energies)),
            "residuals": list(map(float, self.residual_norms)),
            "iterations": self.iterations,
            "converged": self.converged,
            "terms": list(self.terms),
            "grid_n": self.grid_n,
            "box_length": self.box_length,
            "softening": self.softening,
            "wall_time": self.wall_time,
            "clusters": self.clusters,
        }


def fixed_k_matrix(kvec, m1: float, m2: float) -> np.ndarray:
    """Dense 16x16 free-operator matrix at one relative momentum mode."""
    kvec = np.asarray(kvec, dtype=float)
    slash = np.einsum("i,iab->ab", kvec, ALPHAS)
    one = np.eye(4)
    return (
        np.kron(slash + m1 * BETA, one) + np.kron(one, -slash + m2 * BETA)
    )


class TwoBodyOperator:
    """Precomputed matrix-free application of H and of the projector."""

    def __init__(self, spec: HamiltonianSpec, band_limit_fine: int = 4):
        self.spec = spec
        g = spec.grid
        n = g.n
        k1 = g.axis_momenta()
        kx, ky, kz = np.meshgrid(k1, k1, k1, indexing="ij")
        kvec = np.stack([kx, ky, kz], axis=-1)  # (n,n,n,3)
        self.slash = np.einsum("xyzi,iab->xyzab", kvec, ALPHAS)
        k2 = kx**2 + ky**2 + kz**2
        m1, m2 = spec.particle1.mass, spec.particle2.mass
        self.m1, self.m2 = m1, m2
        e1 = np.sqrt(m1**2 + k2)
        e2 = np.sqrt(m2**2 + k2)
        self.e1, self.e2 = e1, e2
        eye = np.eye(4, dtype=complex)
        # Lambda+ for particle 1 at +k and particle 2 at -k.
        self.L1 = (e1[..., None, None] * eye + self.slash + m1 * BETA) / (
            2 * e1[..., None, None]
        )
        self.L2 = (e2[..., None, None] * eye - self.slash + m2 * BETA) / (
            2 * e2[..., None, None]
        )
        self.L2T = np.swapaxes(self.L2, -1, -2).copy()
        self.slashT = np.swapaxes(self.slash, -1, -2).copy()

        parts = coefficient_fields(g, spec.coupling, band_limit_fine)
        c0, cg, crij = parts
        self.c0 = c0 if "coulomb" in spec.terms else None
        cij = np.zeros((n, n, n, 3, 3))
        if "gaunt" in spec.terms:
            for i in range(3):
                cij[..., i, i] += cg
        if "retardation" in spec.terms:
            cij += crij
        self.cij = cij if ("gaunt" in spec.terms or "retardation" in spec.terms) else None
        self.n_apply = 0

    # -- momentum-space pieces -------------------------------------------
    def _kinetic_k(self, psik):
        out = np.matmul(self.slash, psik)
        out -= np.matmul(psik, self.slashT)
        bdiag = np.array([1.0, 1.0, -1.0, -1.0])
        out += self.m1 * bdiag[:, None] * psik
        out += self.m2 * bdiag[None, :] * psik
        return out

    def _project_k(self, psik):
        return np.matmul(self.L1, np.matmul(psik, self.L2T))

    # -- position-space pieces -------------------------------------------
    def _potential_x(self, psi):
        out = np.zeros_like(psi)
        if self.c0 is not None:
            out += self.c0[..., None, None] * psi
        if self.cij is not None:
            left = [np.matmul(a, psi) for a in ALPHAS]
            for j in range(3):
                tmp = self.cij[..., 0, j, None, None] * left[0]
                tmp += self.cij[..., 1, j, None, None] * left[1]
                tmp += self.cij[..., 2, j, None, None] * left[2]
                out += np.matmul(tmp, ALPHAS[j].T)
        return out

    # -- public applications ---------------------------------------------
    def apply_h(self, values: np.ndarray) -> np.ndarray:
        self.n_apply += 1
        psik = fftn(values, axes=(0, 1, 2))
        kin = ifftn(self._kinetic_k(psik), axes=(0, 1, 2))
        return kin + self._potential_x(values)

    def apply_p(self, values: np.ndarray) -> np.ndarray:
        psik = fftn(values, axes=(0, 1, 2))
        return ifftn(self._project_k(psik), axes=(0, 1, 2))

    def apply_php_shifted(self, values: np.ndarray, shift: float) -> np.ndarray:
        """(P H P + shift (1-P)) applied in one pass (4 FFT rounds)."""
        self.n_apply += 1
        psik = fftn(values, axes=(0, 1, 2))
        pk = self._project_k(psik)
        p_x = ifftn(pk, axes=(0, 1, 2))
        hk = self._kinetic_k(pk) + fftn(self._potential_x(p_x), axes=(0, 1, 2))
        out = ifftn(self._project_k(hk), axes=(0, 1, 2))
        out += shift * (values - p_x)
        return out

    def apply_preconditioner(
        self, values: np.ndarray, sigma0: float, shift: float
    ) -> np.ndarray:
        """Inverse of the free projected operator, shifted below the band.

        The free part of P H P equals (E1(k)+E2(k)) on range(P) per mode, so
        M^-1 = P/(E1+E2-sigma0) + (1-P)/shift is a near-ideal preconditioner
        when sigma0 sits just below m1+m2.
        """
        psik = fftn(values, axes=(0, 1, 2))
        pk = self._project_k(psik)
        denom = (self.e1 + self.e2 - sigma0)[..., None, None]
        out = pk / denom + (psik - pk) / shift
        return ifftn(out, axes=(0, 1, 2))


def apply_hamiltonian(spec: HamiltonianSpec, psi: BilocalField) -> BilocalField:
    if psi.grid != spec.grid:
        raise GridMismatchError("field grid does not match HamiltonianSpec grid")
    op = _operator_for(spec)
    return BilocalField(psi.grid, op.apply_h(psi.values))


def positive_energy_projector(spec: HamiltonianSpec, psi: BilocalField) -> BilocalField:
    if psi.grid != spec.grid:
        raise GridMismatchError("field grid does not match HamiltonianSpec grid")
    op = _operator_for(spec)
    return BilocalField(psi.grid, op.apply_p(psi.values))


_OP_CACHE: dict = {}


def _operator_for(spec: HamiltonianSpec, band_limit_fine: int = 4) -> TwoBodyOperator:
    key = (spec, band_limit_fine)
    if key not in _OP_CACHE:
        if len(_OP_CACHE) >= 3:
            _OP_CACHE.pop(next(iter(_OP_CACHE)))
        _OP_CACHE[key] = TwoBodyOperator(spec, band_limit_fine)
    return _OP_CACHE[key]


def cluster_eigenvalues(eigs, gap: float = 1e-8):
    """Group sorted eigenvalues into degenerate clusters."""
    clusters = []
    for e in sorted(eigs):
        if clusters and e - clusters[-1][-1] <= gap:
            clusters[-1].append(e)
        else:
            clusters.append([e])
    return [
        {"energy": float(np.mean(c)), "multiplicity": len(c)} for c in clusters
    ]


def solve_spectrum(
    spec: HamiltonianSpec,
    n_states: int = 1,
    tol: float = 1e-8,
    maxiter: int | None = None,
    seed: int = 0,
    band_limit_fine: int = 4,
    keep_vectors: bool = False,
) -> SpectrumResult:
    """Lowest n_states eigenvalues of P H P within range(P).

    With projection="none" the raw operator is diagonalized instead (it
    dives toward the negative continuum; kept for demonstration).
    """
    if n_states < 1:
        raise ValueError("n_states must be >= 1")
    t0 = time.perf_counter()
    op = _operator_for(spec, band_limit_fine)
    n = spec.grid.n
    dim = n**3 * 16
    shape = (n, n, n, 4, 4)
    projected = spec.projection == "positive_energy"
    msum = op.m1 + op.m2
    shift = 2.0 * msum + 2.0
    mu = op.m1 * op.m2 / msum
    sigma0 = msum - max(2 * mu * spec.coupling.alpha_eff**2, 1e-6 * msum)

    def matvec(v):
        x = v.reshape(shape)
        if projected:
            y = op.apply_php_shifted(x, shift)
        else:
            y = op.apply_h(x)
        return y.ravel()

    lin = LinearOperator((dim, dim), matvec=matvec, dtype=complex)
    rng = np.random.default_rng(seed)
    op.n_apply = 0
    converged = True

    if projected:
        from scipy.sparse.linalg import lobpcg

        bs = n_states + 2
        X = rng.standard_normal((dim, bs)) + 1j * rng.standard_normal((dim, bs))
        for i in range(bs):
            X[:, i] = op.apply_p(X[:, i].reshape(shape)).ravel()
        X, _ = np.linalg.qr(X)

        def pmatvec(v):
            cols = np.atleast_2d(v.T).T
            out = np.empty_like(cols)
            for i in range(cols.shape[1]):
                out[:, i] = op.apply_preconditioner(
                    cols[:, i].reshape(shape), sigma0, shift
                ).ravel()
            return out.reshape(v.shape)

        M = LinearOperator((dim, dim), matvec=pmatvec, matmat=pmatvec, dtype=complex)
        vals, vecs = lobpcg(
            lin,
            X,
            M=M,
            tol=tol,
            maxiter=maxiter if maxiter is not None else 300,
            largest=False,
        )
        order = np.argsort(vals)[:n_states]
        vals = np.asarray(vals)[order]
        vecs = vecs[:, order]
    else:
        v0 = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)).ravel()
        try:
            vals, vecs = eigsh(
                lin,
                k=n_states,
                which="SA",
                tol=tol,
                v0=v0,
                maxiter=maxiter,
                ncv=min(dim, max(4 * n_states + 20, 40)),
            )
        except Exception as exc:  # ArpackNoConvergence carries partial results
            vals = getattr(exc, "eigenvalues", None)
            vecs = getattr(exc, "eigenvectors", None)
            converged = False
            if vals is None or len(vals) == 0:
                raise
        order = np.argsort(vals)
        vals = np.asarray(vals)[order]
        vecs = vecs[:, order]

    residuals = []
    for i in range(len(vals)):
        v = vecs[:, i]
        r = matvec(v) - vals[i] * v
        residuals.append(float(np.linalg.norm(r) / np.linalg.norm(v)))
    if any(r > max(tol, 1e-12) * 100 for r in residuals):
        converged = False

    msum = op.m1 + op.m2
    result = SpectrumResult(
        eigenvalues=[float(v) for v in vals],
        binding_energies=[float(v - msum) for v in vals],
        residual_norms=residuals,
        iterations=op.n_apply,
        converged=converged,
        terms=tuple(sorted(spec.terms)),
        grid_n=spec.grid.n,
        box_length=spec.grid.box_length,
        softening=spec.grid.softening,
        wall_time=time.perf_counter() - t0,
        clusters=cluster_eigenvalues(vals),
    )
    if keep_vectors:
        h3 = spec.grid.spacing**3
        result.eigenvectors = [
            BilocalField(spec.grid, (vecs[:, i] / (np.linalg.norm(vecs[:, i]) * np.sqrt(h3))).reshape(shape))
            for i in range(len(vals))
        ]
    return result


def save_field(psi: BilocalField, path) -> None:
    """Flat binary dump: header (n, 16) as little-endian uint32, then
    float64 little-endian (re, im) pairs in C order."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", psi.grid.n, 16))
        flat = psi.values.reshape(-1)
        out = np.empty(flat.size * 2, dtype="<f8")
        out[0::2] = flat.real
        out[1::2] = flat.imag
        fh.write(out.tobytes())


def load_field(path, grid: GridSpec) -> BilocalField:
    with open(path, "rb") as fh:
        n, ns = struct.unpack("<II", fh.read(8))
        if n != grid.n or ns != 16:
            raise ValueError(f"file header ({n},{ns}) does not match grid")
        data = np.frombuffer(fh.read(), dtype="<f8")
    vals = (data[0::2] + 1j * data[1::2]).reshape(n, n, n, 4, 4)
    return BilocalField(grid, vals)
