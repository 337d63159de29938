"""Retained-band projection and the Galerkin right-hand side.

The evolution solved here is

    du/dt = beta1 * Lap(u) - beta2 * Lap^2(u) + beta3 * (1 - |u|^2) u
            - beta4 * u x Lap(u) + beta5 * Lap(|u|^2 u),

projected onto a retained cosine band.  The right-hand side splits into a
diagonal linear part with symbol m(k) = -beta1*lambda(k) - beta2*lambda(k)^2
and a nonlinear remainder; ``rhs`` assembles the whole thing through the
five constituent maps ``f1`` .. ``f5`` while ``nonlinear_term`` provides a
cheaper evaluation path for time steppers (it reuses one cubic transform
for both the f3 and f5 contributions, which agree with the direct route to
rounding because the working grid oversamples the retained band by two).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fields, operators
from .fields import GridSpec, SpectralField

__all__ = [
    "LLBarParams",
    "ModeBand",
    "derive_beta1",
    "project",
    "f1",
    "f2",
    "f3",
    "f4",
    "f5",
    "rhs",
    "rhs_linear_factor",
    "nonlinear_term",
]

_CONSISTENCY_TOL = 1e-14


def derive_beta1(lambda_r: float, lambda_e: float, chi: float) -> float:
    """Exchange-relaxation combination ``lambda_r - lambda_e / (2 chi)``.

    The only coefficient in the model without a sign constraint.
    """
    chi = float(chi)
    if not math.isfinite(chi) or chi <= 0.0:
        raise ValueError(f"chi must be positive and finite, got {chi}")
    return float(lambda_r) - float(lambda_e) / (2.0 * chi)


@dataclass(frozen=True)
class LLBarParams:
    """Coefficients of the evolution equation.

    ``beta1`` may take either sign; ``beta2`` .. ``beta5`` must be
    nonnegative (zero switches the corresponding term off, which the
    degenerate diagnostic runs rely on).  The physical inputs are optional;
    when all four are given they must reproduce the betas through

        beta1 = lambda_r - lambda_e / (2 chi),   beta2 = lambda_e,
        beta3 = lambda_r / (2 chi),              beta4 = gamma,
        beta5 = lambda_e / (2 chi),

    to within 1e-14 (relative), otherwise construction fails.
    """

    beta1: float
    beta2: float
    beta3: float
    beta4: float
    beta5: float
    lambda_r: float | None = None
    lambda_e: float | None = None
    chi: float | None = None
    gamma: float | None = None

    def __post_init__(self) -> None:
        for name in ("beta1", "beta2", "beta3", "beta4", "beta5"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        for name in ("beta2", "beta3", "beta4", "beta5"):
            if getattr(self, name) < 0.0:
                raise ValueError(
                    f"{name} must be nonnegative, got {getattr(self, name)}"
                )
        physical = ("lambda_r", "lambda_e", "chi", "gamma")
        given = [name for name in physical if getattr(self, name) is not None]
        if not given:
            return
        if len(given) < len(physical):
            missing = [name for name in physical if name not in given]
            raise ValueError(
                "physical parameters are all-or-none; missing " + ", ".join(missing)
            )
        for name in physical:
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.chi <= 0.0 or not math.isfinite(self.chi):
            raise ValueError(f"chi must be positive and finite, got {self.chi}")
        if self.lambda_e < 0.0 or self.lambda_r < 0.0 or self.gamma < 0.0:
            raise ValueError("lambda_r, lambda_e and gamma must be nonnegative")
        derived = {
            "beta1": derive_beta1(self.lambda_r, self.lambda_e, self.chi),
            "beta2": self.lambda_e,
            "beta3": self.lambda_r / (2.0 * self.chi),
            "beta4": self.gamma,
            "beta5": self.lambda_e / (2.0 * self.chi),
        }
        for name, want in derived.items():
            have = getattr(self, name)
            if abs(have - want) > _CONSISTENCY_TOL * max(1.0, abs(want)):
                raise ValueError(
                    f"{name}={have!r} is inconsistent with the physical "
                    f"parameters (expected {want!r})"
                )

    @classmethod
    def from_physical(
        cls, lambda_r: float, lambda_e: float, chi: float, gamma: float
    ) -> "LLBarParams":
        """Build the betas from relaxation/exchange/susceptibility inputs."""
        chi = float(chi)
        if not math.isfinite(chi) or chi <= 0.0:
            raise ValueError(f"chi must be positive and finite, got {chi}")
        return cls(
            beta1=derive_beta1(lambda_r, lambda_e, chi),
            beta2=float(lambda_e),
            beta3=float(lambda_r) / (2.0 * chi),
            beta4=float(gamma),
            beta5=float(lambda_e) / (2.0 * chi),
            lambda_r=float(lambda_r),
            lambda_e=float(lambda_e),
            chi=chi,
            gamma=float(gamma),
        )


@dataclass(frozen=True)
class ModeBand:
    """Retained modes per axis; the Galerkin space has ``count`` scalar modes."""

    modes: tuple[int, ...]

    def __post_init__(self) -> None:
        modes = tuple(int(m) for m in self.modes)
        if not 1 <= len(modes) <= 3:
            raise ValueError(f"band must cover 1..3 axes, got {len(modes)}")
        if any(m < 1 for m in modes):
            raise ValueError(f"each axis needs at least one mode, got {modes}")
        object.__setattr__(self, "modes", modes)

    @property
    def dim(self) -> int:
        return len(self.modes)

    @property
    def count(self) -> int:
        return int(np.prod(self.modes))


def project(v: SpectralField, band: ModeBand) -> SpectralField:
    """Orthogonal projection onto the retained band (truncate, zero-fill)."""
    if band.dim != v.grid.dim:
        raise ValueError(f"band has {band.dim} axes, field has {v.grid.dim}")
    for j, (m, n) in enumerate(zip(band.modes, v.grid.points)):
        if m > n:
            raise ValueError(
                f"band of {m} modes exceeds the {n}-point grid along axis {j}"
            )
    out = np.zeros((3,) + band.modes)
    keep = tuple(slice(0, min(m, b)) for m, b in zip(v.modes, band.modes))
    out[(slice(None),) + keep] = v.coeffs[(slice(None),) + keep]
    return SpectralField(grid=v.grid, modes=band.modes, coeffs=out)


def f1(v: SpectralField) -> SpectralField:
    """Laplacian; diagonal with multiplier ``-lambda(k)``."""
    return operators.laplacian(v)


def f2(v: SpectralField) -> SpectralField:
    """Bilaplacian; diagonal with multiplier ``lambda(k)^2``."""
    return operators.bilaplacian(v)


def f3(v: SpectralField) -> SpectralField:
    """Band projection of the cubic ``|v|^2 v``."""
    return operators.cubic_band(v)


def f4(v: SpectralField) -> SpectralField:
    """Band projection of the precession density ``v x Lap(v)``."""
    u_vals = operators.padded_values(v)
    lap_vals = operators.padded_laplacian_values(v)
    w = np.cross(u_vals, lap_vals, axis=0)
    coeffs = fields._transform_series(
        w, v.grid.extents, ("cos",) * v.grid.dim, v.modes
    )
    return SpectralField(grid=v.grid, modes=v.modes, coeffs=coeffs)


def f5(v: SpectralField) -> SpectralField:
    """Band projection of ``Lap(|v|^2 v)`` assembled from the pointwise
    expansion ``2|grad v|^2 v + 2 (v . Lap v) v + 4 (grad v)(v . grad v) +
    |v|^2 Lap v`` rather than by composing ``f1`` with ``f3``; the two
    routes agreeing is one of the identity checks."""
    return operators.delta_cubic_band(v)


def rhs(v: SpectralField, params: LLBarParams) -> SpectralField:
    """Full Galerkin right-hand side at ``v``."""
    lam = v.eigenvalues
    linear = (-params.beta1 * lam - params.beta2 * lam * lam)[None] * v.coeffs
    c3 = f3(v).coeffs
    c4 = f4(v).coeffs
    c5 = f5(v).coeffs
    coeffs = (
        linear
        + params.beta3 * (v.coeffs - c3)
        - params.beta4 * c4
        + params.beta5 * c5
    )
    return SpectralField(grid=v.grid, modes=v.modes, coeffs=coeffs)


def rhs_linear_factor(
    grid: GridSpec, band: ModeBand, params: LLBarParams
) -> np.ndarray:
    """Diagonal symbol ``m(k) = -beta1*lambda(k) - beta2*lambda(k)^2``.

    Shape matches ``band.modes``; broadcast against the leading component
    axis of a coefficient array.
    """
    if band.dim != grid.dim:
        raise ValueError(f"band has {band.dim} axes, grid has {grid.dim}")
    lam = fields.eigenvalue_array(grid, band.modes)
    return -params.beta1 * lam - params.beta2 * lam * lam


def nonlinear_term(
    v: SpectralField, params: LLBarParams
) -> tuple[SpectralField, float]:
    """Stiffly-stable splitting remainder ``rhs(v) - m(k) v``.

    Returns the remainder together with the pointwise-magnitude sup of
    ``v`` on the oversampled grid (the same reading as the ledger's Linf
    column), which steppers use for blow-up checks at no extra transform
    cost.  One evaluation pass serves ``v`` and ``Lap v``; one
    analysis pass serves the cubic and cross products, with the f5 term
    folded in as ``-lambda(k)`` times the cubic coefficients.
    """
    grid = v.grid
    lam = v.eigenvalues
    stacked = np.empty((6,) + v.modes)
    stacked[:3] = v.coeffs
    np.multiply(v.coeffs, -lam[None], out=stacked[3:])
    vals = fields._eval_series(
        stacked, grid.extents, ("cos",) * grid.dim, grid.padded_points
    )
    u_vals, lap_vals = vals[:3], vals[3:]
    work = np.empty_like(vals)
    norm2 = u_vals[0] * u_vals[0] + u_vals[1] * u_vals[1] + u_vals[2] * u_vals[2]
    linf = float(np.sqrt(norm2.max()))
    np.multiply(u_vals, norm2[None], out=work[:3])
    # cross product written out to skip np.cross's axis shuffling
    np.multiply(u_vals[1], lap_vals[2], out=work[3])
    work[3] -= u_vals[2] * lap_vals[1]
    np.multiply(u_vals[2], lap_vals[0], out=work[4])
    work[4] -= u_vals[0] * lap_vals[2]
    np.multiply(u_vals[0], lap_vals[1], out=work[5])
    work[5] -= u_vals[1] * lap_vals[0]
    analysis = fields._transform_series(
        work, grid.extents, ("cos",) * grid.dim, v.modes
    )
    c3, c4 = analysis[:3], analysis[3:]
    coeffs = (
        params.beta3 * (v.coeffs - c3)
        - params.beta4 * c4
        - params.beta5 * lam[None] * c3
    )
    return SpectralField(grid=grid, modes=v.modes, coeffs=coeffs), linf
