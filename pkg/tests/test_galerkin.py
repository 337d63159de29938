"""Parameter validation and the five Galerkin maps.

The nonlinear maps are checked three ways: closed-form single-mode
references, a quadrature weak form obtained by integrating by parts, and
the split ``rhs = linear multiplier + remainder`` used by the stepper.
"""

from __future__ import annotations

import numpy as np
import pytest

from llbar import fields, galerkin, operators
from llbar.fields import GridSpec, SpectralField
from llbar.galerkin import LLBarParams, ModeBand


PARAMS = LLBarParams(0.4, 0.01, 1.2, 0.7, 0.25)


def test_beta_sign_rules():
    LLBarParams(-0.3, 0.1, 0.2, 0.0, 0.0)  # beta1 may be negative
    for bad in range(2, 6):
        kwargs = {f"beta{i}": 0.1 for i in range(1, 6)}
        kwargs[f"beta{bad}"] = -1e-12
        with pytest.raises(ValueError, match="nonnegative"):
            LLBarParams(**kwargs)
    with pytest.raises(ValueError, match="finite"):
        LLBarParams(float("nan"), 0.1, 0.1, 0.1, 0.1)


def test_derive_beta1_and_from_physical():
    lambda_r, lambda_e, chi, gamma = 0.6, 0.08, 0.5, 1.1
    b1 = galerkin.derive_beta1(lambda_r, lambda_e, chi)
    assert b1 == pytest.approx(0.6 - 0.08, abs=0)
    p = LLBarParams.from_physical(lambda_r, lambda_e, chi, gamma)
    assert p.beta1 == pytest.approx(b1, abs=0)
    assert p.beta2 == lambda_e
    assert p.beta3 == pytest.approx(lambda_r / (2 * chi), abs=0)
    assert p.beta4 == gamma
    assert p.beta5 == pytest.approx(lambda_e / (2 * chi), abs=0)
    with pytest.raises(ValueError, match="chi"):
        LLBarParams.from_physical(0.6, 0.08, 0.0, 1.1)


def test_physical_parameters_all_or_none_and_consistent():
    with pytest.raises(ValueError, match="all-or-none"):
        LLBarParams(0.1, 0.1, 0.1, 0.1, 0.1, lambda_r=0.6)
    good = LLBarParams.from_physical(0.6, 0.08, 0.5, 1.1)
    # explicitly re-stating the consistent betas is fine
    LLBarParams(
        good.beta1, good.beta2, good.beta3, good.beta4, good.beta5,
        lambda_r=0.6, lambda_e=0.08, chi=0.5, gamma=1.1,
    )
    with pytest.raises(ValueError, match="inconsistent"):
        LLBarParams(
            good.beta1 + 1e-6, good.beta2, good.beta3, good.beta4, good.beta5,
            lambda_r=0.6, lambda_e=0.08, chi=0.5, gamma=1.1,
        )


def test_mode_band_and_projection():
    with pytest.raises(ValueError):
        ModeBand(())
    with pytest.raises(ValueError):
        ModeBand((4, 0))
    band = ModeBand((4, 3))
    assert band.dim == 2 and band.count == 12

    grid = GridSpec(extents=(1.0, 1.0), points=(8, 8))
    s = fields.random_field(grid, (8, 8), seed=1)
    p = galerkin.project(s, band)
    assert p.modes == (4, 3)
    np.testing.assert_array_equal(p.coeffs, s.coeffs[:, :4, :3])
    # projecting up zero-fills
    back = galerkin.project(p, ModeBand((8, 8)))
    np.testing.assert_array_equal(back.coeffs[:, :4, :3], p.coeffs)
    assert np.all(back.coeffs[:, 4:, :] == 0.0)
    with pytest.raises(ValueError):
        galerkin.project(s, ModeBand((16, 16)))


def test_f1_f2_are_laplacian_powers():
    grid = GridSpec(extents=(1.0,), points=(16,))
    s = fields.random_field(grid, (16,), seed=2)
    lam = s.eigenvalues
    np.testing.assert_allclose(galerkin.f1(s).coeffs, -lam * s.coeffs, atol=0)
    np.testing.assert_allclose(galerkin.f2(s).coeffs, lam**2 * s.coeffs, atol=0)


def test_f3_single_mode_closed_form():
    # e_k^3 = (3/(2L)) e_k + (1/(2L)) e_{3k}
    L, N, k, a = 1.0, 16, 2, 1.3
    grid = GridSpec(extents=(L,), points=(N,))
    coeffs = np.zeros((3, N))
    coeffs[0, k] = a
    s = SpectralField(grid=grid, modes=(N,), coeffs=coeffs)
    c3 = galerkin.f3(s)
    expected = np.zeros((3, N))
    expected[0, k] = a**3 * 3.0 / (2.0 * L)
    expected[0, 3 * k] = a**3 / (2.0 * L)
    np.testing.assert_allclose(c3.coeffs, expected, atol=1e-12)


def test_f4_constant_times_mode_closed_form():
    # u = (a e_k, b e_0, 0):  u x Delta u = (0, 0, lambda_k a b e_0 e_k)
    L, N, k = 1.0, 16, 3
    a, b = 0.8, -0.5
    grid = GridSpec(extents=(L,), points=(N,))
    coeffs = np.zeros((3, N))
    coeffs[0, k] = a
    coeffs[1, 0] = b
    s = SpectralField(grid=grid, modes=(N,), coeffs=coeffs)
    out = galerkin.f4(s)
    lam = (k * np.pi / L) ** 2
    expected = np.zeros((3, N))
    expected[2, k] = lam * a * b * np.sqrt(1.0 / L)
    np.testing.assert_allclose(out.coeffs, expected, atol=1e-12)


def test_f5_equals_f1_of_f3():
    # two independent routes to Delta(|v|^2 v) on the band: product-rule
    # assembly vs composing the projected cube with the Laplacian.  Exact
    # because the 2x-padded quadrature keeps all cubic aliases outside the
    # retained band.
    for extents, points, band in [
        ((1.0,), (32,), (32,)),
        ((1.0, 0.8), (12, 12), (8, 6)),
    ]:
        grid = GridSpec(extents=extents, points=points)
        s = galerkin.project(
            fields.random_field(grid, points, seed=3, decay=2.0), ModeBand(band)
        )
        direct = galerkin.f5(s)
        composed = galerkin.f1(galerkin.f3(s))
        gap = np.abs(direct.coeffs - composed.coeffs).max()
        scale = max(1.0, np.abs(direct.coeffs).max())
        assert gap < 1e-11 * scale, f"f5 routes differ by {gap} at {band}"


def test_rhs_weak_form_by_parts():
    # <rhs(u), phi> must equal the integrated-by-parts weak form
    #   -b1 <grad u, grad phi> - b2 <Delta u, Delta phi>
    #   + b3 <(1-|u|^2) u, phi> - b4 <u x Delta u, phi>
    #   - b5 <grad(|u|^2 u), grad phi>
    # for every phi in the band; quadratures on the shared padded grid.
    grid = GridSpec(extents=(1.0, 1.1), points=(12, 12))
    band = ModeBand((8, 8))
    u = galerkin.project(fields.random_field(grid, (12, 12), seed=4, decay=3.0), band)
    phi = galerkin.project(fields.random_field(grid, (12, 12), seed=5, decay=3.0), band)
    r = galerkin.rhs(u, PARAMS)
    lhs = float((r.coeffs * phi.coeffs).sum())

    pts = grid.padded_points
    uv = operators.padded_values(u)
    pv = operators.padded_values(phi)
    Ju = operators.padded_jacobian(u)
    Jp = operators.padded_jacobian(phi)
    lap_u = operators.padded_laplacian_values(u)
    lap_p = operators.padded_laplacian_values(phi)
    cross = np.cross(uv, lap_u, axis=0)
    cubic_grad = operators.cubic_gradient_values(u)

    inner = operators.grid_inner
    rhs_weak = (
        -PARAMS.beta1 * inner(Ju, Jp, grid, pts)
        - PARAMS.beta2 * inner(lap_u, lap_p, grid, pts)
        + PARAMS.beta3 * (inner(uv, pv, grid, pts) - inner((uv**2).sum(axis=0) * uv, pv, grid, pts))
        - PARAMS.beta4 * inner(cross, pv, grid, pts)
        - PARAMS.beta5 * inner(cubic_grad, Jp, grid, pts)
    )
    assert abs(lhs - rhs_weak) < 1e-10 * max(1.0, abs(lhs)), (
        f"weak-form residual {lhs - rhs_weak}"
    )


def test_rhs_splits_into_linear_and_remainder():
    # the stepper's split: rhs(v) = m(k) v + N(v) with m = -b1 l - b2 l^2
    grid = GridSpec(extents=(1.0,), points=(32,))
    band = ModeBand((20,))
    v = galerkin.project(fields.random_field(grid, (32,), seed=6, decay=2.0), band)
    full = galerkin.rhs(v, PARAMS)
    m = galerkin.rhs_linear_factor(grid, band, PARAMS)
    remainder, linf = galerkin.nonlinear_term(v, PARAMS)
    recombined = m * v.coeffs + remainder.coeffs
    gap = np.abs(full.coeffs - recombined).max()
    assert gap < 1e-11 * max(1.0, np.abs(full.coeffs).max()), f"split gap {gap}"
    # reported sup norm matches the padded-grid evaluation
    mag = np.sqrt((operators.padded_values(v) ** 2).sum(axis=0)).max()
    assert linf == pytest.approx(mag, rel=1e-13)


def test_rhs_zero_on_unit_constant():
    # |u| = 1 constant: every term of the flow vanishes identically
    grid = GridSpec(extents=(1.0, 1.0), points=(8, 8))
    coeffs = np.zeros((3, 8, 8))
    coeffs[0, 0, 0] = 1.0  # e_0 x e_0 has value 1 on the unit box
    s = SpectralField(grid=grid, modes=(8, 8), coeffs=coeffs)
    r = galerkin.rhs(s, PARAMS)
    assert np.abs(r.coeffs).max() < 1e-14, (
        f"equilibrium residual {np.abs(r.coeffs).max()}"
    )
