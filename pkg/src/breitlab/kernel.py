"""Interaction kernel of the two-fermion wave equation.

The position-dependent 16x16 Hermitian kernel splits into three parts
(e1e2 = -alpha_eff, r_s = sqrt(|r|^2 + a^2), n = r/|r| unsoftened):

    coulomb     =  (e1e2 / r_s) * I16
    gaunt       = -(e1e2 / 2 r_s) * sum_i alpha_i (x) alpha_i
    retardation = -(e1e2 / 2 r_s) * (alpha.n) (x) (alpha.n)

Each part is exposed separately so the solver can toggle terms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import CouplingSpec, GridSpec
from .spinors import ALPHAS, I16

# G[i, j] = alpha_i (x) alpha_j, the nine 16x16 building blocks.
GAUNT_BLOCKS = np.array(
    [[np.kron(ALPHAS[i], ALPHAS[j]) for j in range(3)] for i in range(3)]
)


class SingularKernelError(ValueError):
    """r = 0 requested with zero softening."""


@dataclass(frozen=True)
class BreitKernelSample:
    r_vec: np.ndarray
    coulomb: np.ndarray
    gaunt: np.ndarray
    retardation: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.coulomb + self.gaunt + self.retardation


def scalar_coefficients(r_vec, e1e2: float, softening: float):
    """(c0, cij) with kernel = c0*I16 + sum_ij cij[i,j] alpha_i(x)alpha_j.

    cij = -(e1e2 / 2 r_s) (delta_ij + n_i n_j).  Vectorized over leading axes
    of r_vec (shape (..., 3)).
    """
    r_vec = np.asarray(r_vec, dtype=float)
    r2 = np.sum(r_vec**2, axis=-1)
    if softening == 0.0 and np.any(r2 == 0.0):
        raise SingularKernelError("r = 0 with zero softening")
    rs = np.sqrt(r2 + softening**2)
    c0 = e1e2 / rs
    r = np.sqrt(r2)
    with np.errstate(invalid="ignore", divide="ignore"):
        n = r_vec / r[..., None]
    n = np.where(r[..., None] == 0.0, 0.0, n)  # direction undefined at r=0
    nn = n[..., :, None] * n[..., None, :]
    eye = np.eye(3)
    cij = -(e1e2 / (2 * rs))[..., None, None] * (eye + nn)
    return c0, cij


def breit_kernel(
    r_vec, coupling: CouplingSpec, softening: float
) -> BreitKernelSample:
    """Kernel sample at one relative coordinate."""
    if softening < 0:
        raise ValueError("softening must be >= 0")
    r_vec = np.asarray(r_vec, dtype=float)
    e1e2 = coupling.e1e2
    r2 = float(np.dot(r_vec, r_vec))
    if r2 == 0.0 and softening == 0.0:
        raise SingularKernelError("r = 0 with zero softening")
    rs = np.sqrt(r2 + softening**2)
    coulomb = (e1e2 / rs) * I16
    gaunt = -(e1e2 / (2 * rs)) * sum(GAUNT_BLOCKS[i, i] for i in range(3))
    if r2 > 0:
        n = r_vec / np.sqrt(r2)
        an = np.einsum("i,ist->st", n, np.stack([ALPHAS[0], ALPHAS[1], ALPHAS[2]]))
        retardation = -(e1e2 / (2 * rs)) * np.kron(an, an)
    else:
        retardation = np.zeros((16, 16), dtype=complex)
    return BreitKernelSample(
        r_vec=r_vec, coulomb=coulomb, gaunt=gaunt, retardation=retardation
    )


def kernel_field(grid: GridSpec, coupling: CouplingSpec):
    """Kernel samples at every grid point (minimum-image convention).

    Returns a dict mapping index triples to BreitKernelSample.  Intended for
    desk-scale grids; the solver uses coefficient_fields instead.
    """
    x = grid.axis_coords()
    out = {}
    for ix in range(grid.n):
        for iy in range(grid.n):
            for iz in range(grid.n):
                r_vec = np.array([x[ix], x[iy], x[iz]])
                out[(ix, iy, iz)] = breit_kernel(r_vec, coupling, grid.softening)
    return out


def _band_limit(fine_field: np.ndarray, n: int, fine: int) -> np.ndarray:
    """Restrict a (fine*n)^3 real field to the coarse grid's Fourier modes.

    Sharp low-pass on the fine grid (half weight on the +-n/2 planes so the
    coarse Nyquist mode receives the average of both), then subsample.  The
    half weight keeps the filter real and Hermitian-consistent for fields
    without per-axis reflection symmetry.
    """
    from scipy.fft import irfftn, rfftn

    nf = fine * n
    half = n // 2

    def weights(freqs):
        k = np.abs(np.rint(freqs).astype(int))
        return np.where(k < half, 1.0, np.where(k == half, 0.5, 0.0))

    w_full = weights(np.fft.fftfreq(nf) * nf)
    w_last = weights(np.arange(nf // 2 + 1))
    fk = rfftn(fine_field)
    fk *= w_full[:, None, None]
    fk *= w_full[None, :, None]
    fk *= w_last[None, None, :]
    smooth = irfftn(fk, s=(nf, nf, nf))
    return np.ascontiguousarray(smooth[::fine, ::fine, ::fine])


def coefficient_fields(
    grid: GridSpec, coupling: CouplingSpec, band_limit_fine: int = 4
):
    """Scalar coefficient fields of the kernel over the whole grid.

    Returns (c0, cg, crij):
      c0   (n,n,n)      coulomb coefficient  e1e2 / r_s
      cg   (n,n,n)      gaunt coefficient    -e1e2 / (2 r_s)   (times delta_ij)
      crij (n,n,n,3,3)  retardation          -e1e2 n_i n_j / (2 r_s)

    When band_limit_fine > 1 each coefficient is sampled on a refined grid
    and restricted to the coarse modes; pointwise sampling of the
    near-singular 1/r_s profile aliases badly and ruins spectral accuracy
    otherwise.
    """
    n, a, e1e2 = grid.n, grid.softening, coupling.e1e2
    fine = max(1, band_limit_fine)
    nf = fine * n
    h = grid.box_length / nf
    x = np.arange(nf) * h
    x = np.where(x > grid.box_length / 2, x - grid.box_length, x)
    # broadcast 1D axes to keep peak memory at a few nf^3 arrays
    ax = (x[:, None, None], x[None, :, None], x[None, None, :])
    r2 = (ax[0] ** 2 + ax[1] ** 2) + ax[2] ** 2
    inv_rs = 1.0 / np.sqrt(r2 + a**2)
    with np.errstate(divide="ignore"):
        inv_r2 = np.where(r2 == 0.0, 0.0, 1.0 / np.where(r2 == 0.0, 1.0, r2))
    del r2

    def restrict(fld):
        return _band_limit(fld, n, fine) if fine > 1 else fld.copy()

    c0 = restrict(e1e2 * inv_rs)
    cg = -0.5 * c0
    crij = np.empty((n, n, n, 3, 3))
    for i in range(3):
        for j in range(i, 3):
            nij = (ax[i] * ax[j]) * inv_r2
            nij *= inv_rs
            crij[..., i, j] = restrict(-(e1e2 / 2) * nij)
            del nij
            if j != i:
                crij[..., j, i] = crij[..., i, j]
    return c0, cg, crij


def dump_kernel_ray(grid: GridSpec, coupling: CouplingSpec, direction, path):
    """CSV of scalar part coefficients along a ray through the origin."""
    import csv

    d = np.asarray(direction, dtype=float)
    d /= np.linalg.norm(d)
    radii = np.arange(1, grid.n // 2) * grid.spacing
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "coulomb", "gaunt_coeff", "retardation_coeff"])
        for r in radii:
            rs = np.sqrt(r**2 + grid.softening**2)
            w.writerow(
                [r, coupling.e1e2 / rs, -coupling.e1e2 / (2 * rs), -coupling.e1e2 / (2 * rs)]
            )
