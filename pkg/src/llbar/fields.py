"""Vector fields on Neumann boxes and their cosine-spectral twins.

The domain is an axis-aligned box discretized by midpoint grids; the
Neumann Laplacian eigenbasis is then the tensor-product cosine family

    e_k(x) = prod_j e_{k_j}(x_j),   e_0 = sqrt(1/L),  e_k = sqrt(2/L) cos(k pi x / L),

with eigenvalues lambda(k) = sum_j (k_j pi / L_j)^2.  All coefficients in
this module are with respect to that L2-orthonormal basis, so Parseval is
an exact identity for band-limited fields.

Transforms ride on scipy's DCT-II/DST-II pair (midpoint collocation).
With norm='ortho' on an N-point axis of length L the scale bridge between
samples and basis coefficients is a bare factor sqrt(L/N) per axis, and
zero-padding coefficients before the inverse transform evaluates the same
continuum field on a finer midpoint grid.  Odd derivatives flip an axis to
sine parity; sine frequencies k = 1..P-1 live in DST index k-1.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

__all__ = [
    "GridSpec",
    "VectorField",
    "JacobianField",
    "SpectralField",
    "SnapshotError",
    "forward",
    "inverse",
    "eigenvalue_array",
    "random_field",
    "read_snapshot",
    "write_snapshot",
    "fft_workers",
]

SNAPSHOT_MAGIC = b"LLBR"
SNAPSHOT_VERSION = 1


def fft_workers() -> int:
    """Worker-thread cap for the transforms (env LLBAR_THREADS, default 1).

    pocketfft parallelizes across independent 1-d lines only, so results
    are bitwise identical for any worker count.
    """
    raw = os.environ.get("LLBAR_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned box with a tensor-product midpoint grid.

    Parameters
    ----------
    extents : tuple of float
        Box edge lengths L_j > 0, one per axis; len gives the dimension d in {1,2,3}.
    points : tuple of int
        Grid sizes N_j >= 4 per axis.
    dealias_pad : int
        Padding factor for pointwise products (>= 1).  The default 2 keeps
        cubic products alias-free on the retained band; 3/2 would only
        cover quadratic ones.
    """

    extents: tuple[float, ...]
    points: tuple[int, ...]
    dealias_pad: int = 2

    def __post_init__(self) -> None:
        object.__setattr__(self, "extents", tuple(float(L) for L in self.extents))
        object.__setattr__(self, "points", tuple(int(N) for N in self.points))
        if not 1 <= len(self.extents) <= 3:
            raise ValueError(f"dim must be 1, 2 or 3, got {len(self.extents)}")
        if len(self.points) != len(self.extents):
            raise ValueError(
                f"points has {len(self.points)} axes but extents has {len(self.extents)}"
            )
        for L in self.extents:
            if not (np.isfinite(L) and L > 0):
                raise ValueError(f"extents must be positive and finite, got {L}")
        for N in self.points:
            if N < 4:
                raise ValueError(f"need at least 4 points per axis, got {N}")
        if int(self.dealias_pad) < 1:
            raise ValueError(f"dealias_pad must be >= 1, got {self.dealias_pad}")
        object.__setattr__(self, "dealias_pad", int(self.dealias_pad))

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def cell_volume(self) -> float:
        vol = 1.0
        for L, N in zip(self.extents, self.points):
            vol *= L / N
        return vol

    @property
    def padded_points(self) -> tuple[int, ...]:
        return tuple(self.dealias_pad * N for N in self.points)

    def axis_coords(self, axis: int, points: int | None = None) -> np.ndarray:
        """Midpoint coordinates along one axis (optionally at another resolution)."""
        N = self.points[axis] if points is None else points
        return (np.arange(N) + 0.5) * (self.extents[axis] / N)

    def meshgrid(self, padded: bool = False) -> tuple[np.ndarray, ...]:
        pts = self.padded_points if padded else self.points
        axes = [self.axis_coords(j, pts[j]) for j in range(self.dim)]
        return tuple(np.meshgrid(*axes, indexing="ij"))


def _check_finite(name: str, data: np.ndarray) -> None:
    if not np.all(np.isfinite(data)):
        bad = int(np.size(data) - np.isfinite(data).sum())
        raise ValueError(f"{name} contains {bad} non-finite entries")


@dataclass(frozen=True, eq=False)
class VectorField:
    """Samples of u: box -> R^3, stored as data[component, i1, ..., id]."""

    grid: GridSpec
    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        expected = (3,) + self.grid.points
        if data.shape != expected:
            raise ValueError(f"VectorField data shape {data.shape}, expected {expected}")
        _check_finite("VectorField", data)
        object.__setattr__(self, "data", data)


@dataclass(frozen=True, eq=False)
class JacobianField:
    """Per-node Jacobian: data[component, axis, i1, ..., id] holds d_axis u_component."""

    grid: GridSpec
    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        expected = (3, self.grid.dim) + self.grid.points
        if data.shape != expected:
            raise ValueError(f"JacobianField data shape {data.shape}, expected {expected}")
        _check_finite("JacobianField", data)
        object.__setattr__(self, "data", data)


def eigenvalue_array(grid: GridSpec, modes: tuple[int, ...]) -> np.ndarray:
    """lambda(k) = sum_j (k_j pi / L_j)^2 on the given mode box, shape = modes."""
    per_axis = [
        (np.arange(M) * np.pi / L) ** 2 for M, L in zip(modes, grid.extents)
    ]
    lam = per_axis[0]
    for arr in per_axis[1:]:
        lam = lam[..., None] + arr
    return lam


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Cosine-basis coefficients of a vector field on a retained mode band.

    coeffs[component, k1, ..., kd] multiplies the orthonormal basis function
    e_k, so sum(coeffs**2) is exactly the squared L2 norm.
    """

    grid: GridSpec
    modes: tuple[int, ...]
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "modes", tuple(int(M) for M in self.modes))
        if len(self.modes) != self.grid.dim:
            raise ValueError(f"modes has {len(self.modes)} axes, grid has {self.grid.dim}")
        for M, N in zip(self.modes, self.grid.points):
            if not 1 <= M <= N:
                raise ValueError(f"mode count {M} outside [1, {N}]")
        coeffs = np.ascontiguousarray(self.coeffs, dtype=np.float64)
        expected = (3,) + self.modes
        if coeffs.shape != expected:
            raise ValueError(f"SpectralField coeffs shape {coeffs.shape}, expected {expected}")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def eigenvalues(self) -> np.ndarray:
        return eigenvalue_array(self.grid, self.modes)

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.modes, self.coeffs.copy())


# ---------------------------------------------------------------------------
# Low-level mixed-parity transforms.
#
# Coefficient arrays are always indexed by frequency k along every axis.
# Parity 'cos' means basis sqrt(2-ish/L) cos(k pi x/L); parity 'sin' means
# sqrt(2/L) sin(k pi x/L) with the k=0 slot required to be zero.
# ---------------------------------------------------------------------------


def _eval_series(
    coeffs: np.ndarray,
    extents: tuple[float, ...],
    parities: tuple[str, ...],
    out_points: tuple[int, ...],
) -> np.ndarray:
    """Evaluate a frequency-indexed coefficient array on a midpoint grid."""
    dim = len(extents)
    lead = coeffs.ndim - dim  # leading (component) axes pass through untouched
    arr = coeffs
    scale = 1.0
    workers = fft_workers()
    if all(p == "cos" for p in parities):
        # fast path: per-axis zero-padded transforms, last axis first so the
        # earlier passes run on the still-truncated slab
        for j, P in enumerate(out_points):
            if coeffs.shape[lead + j] > P:
                raise ValueError(
                    f"cannot evaluate {coeffs.shape[lead + j]} modes on {P} points along axis {j}"
                )
            scale *= np.sqrt(P / extents[j])
        arr = coeffs * scale
        for j in reversed(range(dim)):
            arr = sfft.idct(
                arr, type=2, n=out_points[j], axis=lead + j, norm="ortho", workers=workers
            )
        return arr
    for j in range(dim):
        axis = lead + j
        P = out_points[j]
        M = arr.shape[axis]
        if M > P:
            raise ValueError(f"cannot evaluate {M} modes on {P} points along axis {j}")
        pad_width = [(0, 0)] * arr.ndim
        if parities[j] == "cos":
            pad_width[axis] = (0, P - M)
            padded = np.pad(arr, pad_width)
            arr = sfft.idct(padded, type=2, norm="ortho", axis=axis, workers=workers)
        else:
            # drop the (zero) k=0 slot: frequency k sits at DST index k-1
            shifted = np.take(arr, np.arange(1, M), axis=axis)
            pad_width[axis] = (0, P - (M - 1))
            padded = np.pad(shifted, pad_width)
            arr = sfft.idst(padded, type=2, norm="ortho", axis=axis, workers=workers)
        scale *= np.sqrt(P / extents[j])
    return arr * scale


def _transform_series(
    values: np.ndarray,
    extents: tuple[float, ...],
    parities: tuple[str, ...],
    modes: tuple[int, ...],
) -> np.ndarray:
    """Project midpoint-grid samples onto frequency-indexed coefficients."""
    dim = len(extents)
    lead = values.ndim - dim
    arr = values
    scale = 1.0
    workers = fft_workers()
    if all(p == "cos" for p in parities):
        # fast path: truncate each axis as soon as it is transformed so the
        # later passes work on the reduced slab
        arr = values
        for j in range(dim):
            scale *= np.sqrt(extents[j] / values.shape[lead + j])
            arr = sfft.dct(arr, type=2, norm="ortho", axis=lead + j, workers=workers)
            sl = [slice(None)] * arr.ndim
            sl[lead + j] = slice(0, modes[j])
            arr = arr[tuple(sl)]
        return np.ascontiguousarray(arr) * scale
    for j in range(dim):
        axis = lead + j
        P = arr.shape[axis]
        M = modes[j]
        if parities[j] == "cos":
            full = sfft.dct(arr, type=2, norm="ortho", axis=axis, workers=workers)
            arr = np.take(full, np.arange(M), axis=axis)
        else:
            full = sfft.dst(arr, type=2, norm="ortho", axis=axis, workers=workers)
            # DST index k-1 holds frequency k; re-insert the empty k=0 slot
            kept = np.take(full, np.arange(min(M - 1, P)), axis=axis)
            pad_width = [(0, 0)] * arr.ndim
            pad_width[axis] = (1, M - 1 - kept.shape[axis])
            arr = np.pad(kept, pad_width)
        scale *= np.sqrt(extents[j] / P)
    return arr * scale


_DERIV_SIGN = (1.0, -1.0, -1.0, 1.0)  # d^m/dx^m cos: sign pattern by m mod 4


def _derivative_multiplier(
    coeffs: np.ndarray, extents: tuple[float, ...], orders: tuple[int, ...]
) -> tuple[np.ndarray, tuple[str, ...]]:
    """Apply d^orders to a cosine-parity coefficient array.

    Returns the new frequency-indexed coefficients together with the
    resulting per-axis parity ('sin' wherever the order is odd).
    """
    dim = len(extents)
    lead = coeffs.ndim - dim
    arr = coeffs.copy()
    parities = []
    for j, m in enumerate(orders):
        if m == 0:
            parities.append("cos")
            continue
        M = arr.shape[lead + j]
        k_tilde = np.arange(M) * np.pi / extents[j]
        factor = _DERIV_SIGN[m % 4] * k_tilde**m
        shape = [1] * arr.ndim
        shape[lead + j] = M
        arr = arr * factor.reshape(shape)
        parities.append("sin" if m % 2 else "cos")
    return arr, tuple(parities)


# ---------------------------------------------------------------------------
# Public transforms.
# ---------------------------------------------------------------------------


def forward(u: VectorField, modes: tuple[int, ...] | None = None) -> SpectralField:
    """Orthonormal cosine expansion of a sampled field.

    Exact (to rounding) for fields band-limited to the grid; the optional
    ``modes`` truncates to a retained band.
    """
    grid = u.grid
    if modes is None:
        modes = grid.points
    all_cos = ("cos",) * grid.dim
    coeffs = _transform_series(u.data, grid.extents, all_cos, tuple(modes))
    return SpectralField(grid, tuple(modes), coeffs)


def inverse(s: SpectralField) -> VectorField:
    """Evaluate a spectral field on its grid's midpoints."""
    grid = s.grid
    all_cos = ("cos",) * grid.dim
    values = _eval_series(s.coeffs, grid.extents, all_cos, grid.points)
    return VectorField(grid, values)


def pad_to_band(s: SpectralField, modes: tuple[int, ...]) -> SpectralField:
    """Embed a spectral field into a larger (or equal) mode band by zero fill."""
    pad_width = [(0, 0)] + [
        (0, Mt - Ms) for Ms, Mt in zip(s.modes, modes)
    ]
    for Ms, Mt in zip(s.modes, modes):
        if Mt < Ms:
            raise ValueError(f"target band {modes} smaller than source {s.modes}")
    return SpectralField(s.grid, tuple(modes), np.pad(s.coeffs, pad_width))


# ---------------------------------------------------------------------------
# Seeded fields (counter-based, reproducible).
# ---------------------------------------------------------------------------


def random_field(
    grid: GridSpec,
    modes: tuple[int, ...],
    seed: int,
    index: int = 0,
    decay: float = 0.0,
    amplitude: float = 1.0,
) -> SpectralField:
    """Random band-limited field with per-mode Gaussian coefficients.

    Coefficients are i.i.d. standard normals scaled by
    ``amplitude * (1 + lambda(k))**(-decay/2)``; ``decay = 0`` is the flat
    law stressing inequalities hardest.  The stream is the counter-based
    Philox4x64-10 generator keyed by ``(seed, index)``, so sample ``index``
    of a batch is reproducible in isolation.
    """
    if decay < 0:
        raise ValueError(f"decay exponent must be >= 0, got {decay}")
    key = np.array([seed & (2**64 - 1), index & (2**64 - 1)], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    coeffs = gen.standard_normal((3,) + tuple(modes))
    if decay > 0.0:
        lam = eigenvalue_array(grid, tuple(modes))
        coeffs = coeffs * (1.0 + lam) ** (-decay / 2.0)
    return SpectralField(grid, tuple(modes), amplitude * coeffs)


# ---------------------------------------------------------------------------
# Snapshot files: "LLBR" | version u32 | dim u32 | N_j u32... | L_j f64... |
# 3*prod(N) f64 samples, row-major over nodes with the component index
# innermost.  Everything little-endian.
# ---------------------------------------------------------------------------


class SnapshotError(Exception):
    """Malformed or mismatched snapshot file."""


def write_snapshot(path, u: VectorField) -> None:
    grid = u.grid
    header = SNAPSHOT_MAGIC
    header += struct.pack("<II", SNAPSHOT_VERSION, grid.dim)
    header += struct.pack(f"<{grid.dim}I", *grid.points)
    header += struct.pack(f"<{grid.dim}d", *grid.extents)
    # node-major, component innermost
    body = np.ascontiguousarray(np.moveaxis(u.data, 0, -1), dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body)


def read_snapshot(path, dealias_pad: int = 2) -> VectorField:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != SNAPSHOT_MAGIC:
        raise SnapshotError(f"{path}: bad magic {raw[:4]!r}")
    version, dim = struct.unpack_from("<II", raw, 4)
    if version != SNAPSHOT_VERSION:
        raise SnapshotError(f"{path}: unsupported version {version}")
    if not 1 <= dim <= 3:
        raise SnapshotError(f"{path}: bad dimension {dim}")
    offset = 12
    points = struct.unpack_from(f"<{dim}I", raw, offset)
    offset += 4 * dim
    extents = struct.unpack_from(f"<{dim}d", raw, offset)
    offset += 8 * dim
    count = 3 * int(np.prod(points))
    expected = offset + 8 * count
    if len(raw) != expected:
        raise SnapshotError(f"{path}: payload {len(raw) - offset} bytes, expected {8 * count}")
    flat = np.frombuffer(raw, dtype="<f8", count=count, offset=offset)
    data = np.moveaxis(flat.reshape(points + (3,)), -1, 0)
    grid = GridSpec(extents, points, dealias_pad=dealias_pad)
    return VectorField(grid, data.copy())
