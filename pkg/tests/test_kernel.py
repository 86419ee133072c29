import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from breitlab.config import CouplingSpec, GridSpec
from breitlab.kernel import (
    GAUNT_BLOCKS,
    SingularKernelError,
    _band_limit,
    breit_kernel,
    coefficient_fields,
    dump_kernel_ray,
    kernel_field,
    scalar_coefficients,
)

COUPLING = CouplingSpec(alpha_eff=0.3)

r_vectors = arrays(
    np.float64,
    (3,),
    elements=st.floats(min_value=-10, max_value=10, allow_nan=False),
)


@settings(max_examples=60, deadline=None)
@given(r_vec=r_vectors)
def test_kernel_parts_are_hermitian(r_vec):
    s = breit_kernel(r_vec, COUPLING, softening=0.1)
    for part in (s.coulomb, s.gaunt, s.retardation, s.total):
        assert np.max(np.abs(part - part.conj().T)) <= 1e-14


@settings(max_examples=60, deadline=None)
@given(r_vec=r_vectors)
def test_scalar_coefficients_match_matrix_kernel(r_vec):
    a = 0.2
    c0, cij = scalar_coefficients(r_vec, COUPLING.e1e2, a)
    s = breit_kernel(r_vec, COUPLING, a)
    rebuilt = c0 * np.eye(16) + np.einsum("ij,ijst->st", cij, GAUNT_BLOCKS)
    assert np.max(np.abs(rebuilt - s.total)) <= 1e-13 * max(abs(c0), 1.0)


def test_rotation_covariance_of_retardation_part():
    # the retardation coefficient matrix transforms as n_i n_j
    r = np.array([1.0, 2.0, -0.5])
    _, cij = scalar_coefficients(r, COUPLING.e1e2, 0.0)
    rs = np.linalg.norm(r)
    n = r / rs
    expect = -(COUPLING.e1e2 / (2 * rs)) * (np.eye(3) + np.outer(n, n))
    assert np.allclose(cij, expect)


def test_singular_origin_requires_softening():
    with pytest.raises(SingularKernelError):
        breit_kernel((0.0, 0.0, 0.0), COUPLING, softening=0.0)
    with pytest.raises(SingularKernelError):
        scalar_coefficients(np.zeros((2, 3)), COUPLING.e1e2, 0.0)
    # softened origin is finite and has no preferred direction
    s = breit_kernel((0.0, 0.0, 0.0), COUPLING, softening=0.5)
    assert np.allclose(s.coulomb, (COUPLING.e1e2 / 0.5) * np.eye(16))
    assert np.max(np.abs(s.retardation)) == 0.0


def test_attractive_coulomb_is_negative_everywhere():
    grid = GridSpec(n=8, box_length=8.0, softening=0.25)
    c0, cg, crij = coefficient_fields(grid, COUPLING, band_limit_fine=1)
    assert np.all(c0 < 0)  # e1e2 = -alpha_eff < 0
    assert np.allclose(cg, -0.5 * c0)
    # retardation diagonal sums to the gaunt-scale profile: sum_i n_i^2 = 1
    trace = np.einsum("xyzii->xyz", crij)
    mask = np.ones_like(c0, dtype=bool)
    mask[0, 0, 0] = False  # direction undefined at r = 0
    assert np.allclose(trace[mask], cg[mask])


def test_band_limit_is_identity_on_resolved_fields():
    n, fine = 8, 4
    L = 5.0
    x = np.arange(n * fine) * (L / (n * fine))
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    k = 2 * np.pi / L
    field = (
        1.0
        + np.cos(k * X)
        + np.sin(2 * k * Y) * np.cos(k * Z)
        + 0.3 * np.sin(3 * k * X) * np.sin(3 * k * Y)
    )
    coarse = _band_limit(field, n, fine)
    assert np.max(np.abs(coarse - field[::fine, ::fine, ::fine])) <= 1e-12


def test_band_limit_removes_unresolved_modes():
    n, fine = 8, 4
    L = 5.0
    x = np.arange(n * fine) * (L / (n * fine))
    X = np.meshgrid(x, x, x, indexing="ij")[0]
    k = 2 * np.pi / L
    field = np.sin(7 * k * X)  # beyond the coarse Nyquist (n/2 = 4)
    coarse = _band_limit(field, n, fine)
    assert np.max(np.abs(coarse)) <= 1e-12


def test_band_limit_matches_mode_truncation_brute_force():
    # reference: full FFT of the fine field, keep coarse modes (half weight
    # on the Nyquist planes), evaluate on the coarse lattice directly
    rng = np.random.default_rng(3)
    n, fine = 6, 4
    nf = n * fine
    field = rng.standard_normal((nf, nf, nf))
    F = np.fft.fftn(field) / nf**3
    m = np.rint(np.fft.fftfreq(nf) * nf).astype(int)
    w = np.where(np.abs(m) < n // 2, 1.0, np.where(np.abs(m) == n // 2, 0.5, 0.0))
    W = w[:, None, None] * w[None, :, None] * w[None, None, :]
    idx = np.arange(0, nf, fine)
    phase = np.exp(2j * np.pi * np.outer(m, idx) / nf)
    ref = np.real(np.einsum("abc,ax,by,cz->xyz", F * W, phase, phase, phase))
    coarse = _band_limit(field, n, fine)
    assert np.max(np.abs(coarse - ref)) <= 1e-10


def test_coefficient_fields_at_fine_one_match_pointwise_samples():
    grid = GridSpec(n=8, box_length=6.0, softening=0.3)
    c0, cg, crij = coefficient_fields(grid, COUPLING, band_limit_fine=1)
    samples = kernel_field(grid, COUPLING)
    for idx in ((0, 0, 0), (1, 2, 3), (7, 7, 7), (4, 0, 5)):
        x = grid.axis_coords()
        r_vec = np.array([x[idx[0]], x[idx[1]], x[idx[2]]])
        ref_c0, ref_cij = scalar_coefficients(r_vec, COUPLING.e1e2, grid.softening)
        assert c0[idx] == pytest.approx(ref_c0, rel=1e-13)
        # crij carries only the direction-dependent part; the isotropic
        # delta_ij piece lives in cg
        assert np.allclose(crij[idx] + cg[idx] * np.eye(3), ref_cij)
        total = samples[idx].total
        rebuilt = c0[idx] * np.eye(16) + np.einsum(
            "ij,ijst->st", crij[idx] + cg[idx] * np.eye(3), GAUNT_BLOCKS
        )
        assert np.max(np.abs(rebuilt - total)) <= 1e-12


def test_band_limited_fields_converge_to_smooth_profile():
    # with generous softening the profile is smooth, so band-limiting should
    # barely change it: compare fine=1 against fine=4 samples
    # the minimum-image seam at the box faces always rings a little, so
    # compare away from the boundary octant
    grid = GridSpec(n=16, box_length=16.0, softening=3.0)
    raw, _, _ = coefficient_fields(grid, COUPLING, band_limit_fine=1)
    smooth, _, _ = coefficient_fields(grid, COUPLING, band_limit_fine=4)
    sl = np.r_[0:5, 12:16]  # indices near the origin (minimum-image center)
    core = np.ix_(sl, sl, sl)
    rel = np.max(np.abs(raw[core] - smooth[core])) / np.max(np.abs(raw))
    assert rel < 2e-3


def test_dump_kernel_ray_writes_csv(tmp_path):
    grid = GridSpec(n=8, box_length=8.0, softening=0.5)
    path = tmp_path / "ray.csv"
    dump_kernel_ray(grid, COUPLING, (1.0, 1.0, 0.0), path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "r,coulomb,gaunt_coeff,retardation_coeff"
    assert len(lines) == grid.n // 2  # header + n/2 - 1 radii
