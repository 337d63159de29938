"""Transforms, bases and snapshot files.

The reference values here are analytic: single cosine modes evaluated
from the closed-form basis functions, so every transform property is
checked against pen-and-paper numbers rather than against the code
itself.
"""

from __future__ import annotations

import numpy as np
import pytest

from llbar import fields
from llbar.fields import GridSpec, SpectralField, VectorField


def basis_1d(k: int, L: float, x: np.ndarray) -> np.ndarray:
    """Orthonormal Neumann cosine e_k on [0, L]."""
    if k == 0:
        return np.full_like(x, np.sqrt(1.0 / L))
    return np.sqrt(2.0 / L) * np.cos(k * np.pi * x / L)


def single_mode(grid: GridSpec, mode: tuple[int, ...], component: int = 0) -> SpectralField:
    coeffs = np.zeros((3,) + grid.points)
    coeffs[(component, *mode)] = 1.0
    return SpectralField(grid, grid.points, coeffs)


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(extents=(1.0, 1.0, 1.0, 1.0), points=(8, 8, 8, 8))
    with pytest.raises(ValueError):
        GridSpec(extents=(1.0, 2.0), points=(8,))
    with pytest.raises(ValueError):
        GridSpec(extents=(-1.0,), points=(8,))
    with pytest.raises(ValueError):
        GridSpec(extents=(1.0,), points=(3,))
    with pytest.raises(ValueError):
        GridSpec(extents=(1.0,), points=(8,), dealias_pad=0)
    g = GridSpec(extents=(1.0, 0.5), points=(8, 16))
    assert g.dim == 2
    assert g.padded_points == (16, 32)
    assert g.cell_volume == pytest.approx(1.0 / 8 * 0.5 / 16)


def test_single_mode_evaluates_to_basis_function():
    # d=2, anisotropic box: coefficients are w.r.t. the orthonormal basis,
    # so a unit coefficient must reproduce e_{k1}(x) e_{k2}(y) exactly.
    grid = GridSpec(extents=(1.0, 0.7), points=(12, 10))
    x = grid.axis_coords(0)
    y = grid.axis_coords(1)
    for mode in [(0, 0), (3, 0), (0, 4), (5, 2)]:
        s = single_mode(grid, mode, component=1)
        vals = fields.inverse(s).data
        expected = np.outer(
            basis_1d(mode[0], 1.0, x), basis_1d(mode[1], 0.7, y)
        )
        np.testing.assert_allclose(vals[1], expected, atol=1e-13)
        assert np.all(vals[0] == 0.0) and np.all(vals[2] == 0.0)


def test_forward_inverse_roundtrip_all_dims():
    for extents, points in [
        ((2.0,), (16,)),
        ((1.0, 0.8), (12, 8)),
        ((1.0, 0.8, 1.3), (8, 6, 10)),
    ]:
        grid = GridSpec(extents=extents, points=points)
        rng = np.random.default_rng(11)
        u = VectorField(grid, rng.standard_normal((3,) + points))
        back = fields.inverse(fields.forward(u))
        err = np.abs(back.data - u.data).max()
        assert err < 1e-12, f"roundtrip error {err} on {points}"


def test_parseval_identity():
    grid = GridSpec(extents=(1.0, 1.4), points=(16, 12))
    s = fields.random_field(grid, (16, 12), seed=5)
    u = fields.inverse(s)
    quad = (u.data**2).sum() * grid.cell_volume
    coef = (s.coeffs**2).sum()
    assert abs(quad - coef) < 1e-12 * coef, f"Parseval gap {abs(quad - coef)}"


def test_eigenvalue_array():
    grid = GridSpec(extents=(1.0, 2.0), points=(8, 8))
    lam = fields.eigenvalue_array(grid, (4, 4))
    assert lam.shape == (4, 4)
    assert lam[0, 0] == 0.0
    assert lam[3, 2] == pytest.approx((3 * np.pi) ** 2 + (2 * np.pi / 2.0) ** 2)


def test_derivative_multiplier_matches_analytic():
    # d/dx of e_k is -(k pi / L) sqrt(2/L) sin(k pi x / L): sine parity,
    # stored at DST index k-1.
    L, N, k = 1.3, 16, 4
    grid = GridSpec(extents=(L,), points=(N,))
    s = single_mode(grid, (k,))
    dc, parities = fields._derivative_multiplier(s.coeffs, grid.extents, (1,))
    assert parities == ("sin",)
    vals = fields._eval_series(dc, grid.extents, parities, (N,))
    x = grid.axis_coords(0)
    expected = -(k * np.pi / L) * np.sqrt(2.0 / L) * np.sin(k * np.pi * x / L)
    np.testing.assert_allclose(vals[0], expected, atol=1e-12)

    # second derivative stays cosine with multiplier -lambda
    dc2, parities2 = fields._derivative_multiplier(s.coeffs, grid.extents, (2,))
    assert parities2 == ("cos",)
    vals2 = fields._eval_series(dc2, grid.extents, parities2, (N,))
    expected2 = -((k * np.pi / L) ** 2) * np.sqrt(2.0 / L) * np.cos(k * np.pi * x / L)
    np.testing.assert_allclose(vals2[0], expected2, atol=1e-11)


def test_padded_evaluation_is_same_function():
    # Zero-padding the coefficients evaluates the same continuum field on
    # the finer midpoint grid; check against the explicit basis sum.
    grid = GridSpec(extents=(1.0,), points=(8,))
    s = fields.random_field(grid, (8,), seed=2)
    fine = fields._eval_series(s.coeffs, grid.extents, ("cos",), (24,))
    xf = grid.axis_coords(0, 24)
    expected = np.zeros((3, 24))
    for k in range(8):
        expected += s.coeffs[:, k, None] * basis_1d(k, 1.0, xf)[None]
    np.testing.assert_allclose(fine, expected, atol=1e-12)


def test_pad_to_band_preserves_coefficients():
    grid = GridSpec(extents=(1.0, 1.0), points=(12, 12))
    s = fields.random_field(grid, (6, 5), seed=9)
    padded = fields.pad_to_band(s, (12, 12))
    assert padded.modes == (12, 12)
    np.testing.assert_array_equal(padded.coeffs[:, :6, :5], s.coeffs)
    assert np.all(padded.coeffs[:, 6:, :] == 0.0)
    assert np.all(padded.coeffs[:, :, 5:] == 0.0)
    with pytest.raises(ValueError):
        fields.pad_to_band(s, (4, 4))


def test_random_field_counter_rng():
    grid = GridSpec(extents=(1.0,), points=(16,))
    a = fields.random_field(grid, (16,), seed=7, index=3)
    b = fields.random_field(grid, (16,), seed=7, index=3)
    np.testing.assert_array_equal(a.coeffs, b.coeffs)
    c = fields.random_field(grid, (16,), seed=7, index=4)
    assert np.any(c.coeffs != a.coeffs)
    d = fields.random_field(grid, (16,), seed=8, index=3)
    assert np.any(d.coeffs != a.coeffs)


def test_random_field_decay_law():
    # decay p rescales the flat draw by (1 + lambda)^(-p/2), same stream
    grid = GridSpec(extents=(1.0,), points=(16,))
    flat = fields.random_field(grid, (16,), seed=1, decay=0.0)
    shaped = fields.random_field(grid, (16,), seed=1, decay=4.0)
    lam = fields.eigenvalue_array(grid, (16,))
    np.testing.assert_allclose(
        shaped.coeffs, flat.coeffs * (1.0 + lam) ** -2.0, rtol=1e-15
    )
    amp = fields.random_field(grid, (16,), seed=1, decay=4.0, amplitude=2.5)
    np.testing.assert_allclose(amp.coeffs, 2.5 * shaped.coeffs, rtol=1e-15)


def test_snapshot_roundtrip_is_byte_identical(tmp_path):
    grid = GridSpec(extents=(1.0, 0.75), points=(8, 6))
    u = fields.inverse(fields.random_field(grid, (8, 6), seed=13))
    p1 = tmp_path / "a.snap"
    p2 = tmp_path / "b.snap"
    fields.write_snapshot(p1, u)
    v = fields.read_snapshot(p1)
    assert v.grid.points == grid.points
    np.testing.assert_array_equal(v.data, u.data)
    fields.write_snapshot(p2, v)
    assert p1.read_bytes() == p2.read_bytes(), "write-read-write changed bytes"


def test_snapshot_rejects_corruption(tmp_path):
    grid = GridSpec(extents=(1.0,), points=(8,))
    u = fields.inverse(fields.random_field(grid, (8,), seed=0))
    path = tmp_path / "x.snap"
    fields.write_snapshot(path, u)
    raw = path.read_bytes()

    bad_magic = tmp_path / "bad_magic.snap"
    bad_magic.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(fields.SnapshotError):
        fields.read_snapshot(bad_magic)

    truncated = tmp_path / "short.snap"
    truncated.write_bytes(raw[:-8])
    with pytest.raises(fields.SnapshotError):
        fields.read_snapshot(truncated)


def test_fft_workers_env(monkeypatch):
    monkeypatch.delenv("LLBAR_THREADS", raising=False)
    assert fields.fft_workers() == 1
    monkeypatch.setenv("LLBAR_THREADS", "4")
    assert fields.fft_workers() == 4
    monkeypatch.setenv("LLBAR_THREADS", "not-a-number")
    assert fields.fft_workers() == 1
    monkeypatch.setenv("LLBAR_THREADS", "-2")
    assert fields.fft_workers() == 1
