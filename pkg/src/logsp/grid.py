"""Uniform truncated grids on [-L,L]^2 with spectral operators and free-space
convolution against cell-averaged singular kernels.

Fields are sampled at cell centers x_i = -L + (i + 1/2) h, h = 2L/n, stored
row-major as values[i, j] = u(x_i, x_j).  Convolutions against log|x|, its
split parts log(1+|x|) and log(1+1/|x|), and the Riesz kernel 1/|x| are
computed as exact linear (zero-padded, aperiodic) convolutions of the sampled
data with cell-averaged kernel tables, so no periodic image charges appear.
"""

from __future__ import annotations

import csv
import os
import struct
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft
from scipy.integrate import dblquad

__all__ = [
    "Grid2D",
    "Field",
    "LogKernelTable",
    "BoundaryDecayWarning",
    "make_grid",
    "make_field",
    "integrate",
    "l2_inner",
    "mass",
    "renormalized",
    "kinetic_energy",
    "spectral_laplacian",
    "make_log_kernel_table",
    "log_convolution",
    "coercive_convolution",
    "singular_convolution",
    "riesz_convolution",
    "boundary_ratio",
    "check_boundary_decay",
    "write_field",
    "read_field",
    "radial_profile",
    "write_radial_csv",
]

FIELD_MAGIC = b"LSPF"
FIELD_VERSION = 1

# Fields are expected to decay below this fraction of their peak at the
# domain edge; violating states trigger BoundaryDecayWarning.
BOUNDARY_DECAY_THRESHOLD = 1e-8


class BoundaryDecayWarning(UserWarning):
    """A field does not decay below threshold at the domain boundary."""


def _workers() -> int:
    v = os.environ.get("LOGSP_THREADS")
    return max(1, int(v)) if v else 1


@dataclass(frozen=True)
class Grid2D:
    """Uniform n x n grid of cell centers on [-L, L]^2, h = 2L/n."""

    n: int
    L: float
    h: float

    def coords(self) -> np.ndarray:
        """Cell-center coordinates along one axis."""
        return -self.L + (np.arange(self.n) + 0.5) * self.h

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.coords()
        return np.meshgrid(x, x, indexing="ij")

    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        """Angular wavenumbers (k1 column, k2 row for rfft2 layout)."""
        k1 = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.h)
        k2 = 2.0 * np.pi * np.fft.rfftfreq(self.n, d=self.h)
        return k1[:, None], k2[None, :]


@dataclass(frozen=True)
class Field:
    """Real samples of one scalar component on a shared Grid2D."""

    grid: Grid2D
    values: np.ndarray


def make_grid(n: int, L: float) -> Grid2D:
    """Build a grid; n must be a power of two (padded transforms), L > 0."""
    if n <= 0 or (n & (n - 1)) != 0:
        raise ValueError(f"n must be a positive power of two, got {n}")
    if not L > 0:
        raise ValueError(f"L must be positive, got {L}")
    return Grid2D(n=int(n), L=float(L), h=2.0 * float(L) / int(n))


def make_field(grid: Grid2D, values: np.ndarray) -> Field:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (grid.n, grid.n):
        raise ValueError(f"values shape {arr.shape} != {(grid.n, grid.n)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("field samples must be finite")
    arr = arr.copy()
    arr.setflags(write=False)
    return Field(grid=grid, values=arr)


def integrate(f: Field) -> float:
    """Midpoint-rule integral h^2 * sum of samples."""
    return float(f.grid.h ** 2 * np.sum(f.values))


def l2_inner(f: Field, g: Field) -> float:
    _require_same_grid(f.grid, g.grid)
    return float(f.grid.h ** 2 * np.sum(f.values * g.values))


def mass(f: Field) -> float:
    return float(f.grid.h ** 2 * np.sum(f.values ** 2))


def renormalized(f: Field, c: float) -> Field:
    """Multiplicative rescale so that the squared L2 mass equals c exactly."""
    m = mass(f)
    if m <= 0:
        raise ValueError("cannot renormalize a zero field")
    return make_field(f.grid, f.values * np.sqrt(c / m))


def _require_same_grid(a: Grid2D, b: Grid2D) -> None:
    if a != b:
        raise ValueError(f"grid mismatch: {a} vs {b}")


# ---------------------------------------------------------------------------
# Spectral operators
# ---------------------------------------------------------------------------

def spectral_laplacian(f: Field) -> Field:
    """Laplacian via Fourier differentiation of the periodic extension."""
    k1, k2 = f.grid.wavenumbers()
    uh = sfft.rfft2(f.values, workers=_workers())
    out = sfft.irfft2(-(k1 ** 2 + k2 ** 2) * uh, s=f.values.shape, workers=_workers())
    return make_field(f.grid, out)


def kinetic_energy(f: Field) -> float:
    """Gradient energy via Parseval: equals -integrate(f * laplacian f)."""
    n = f.grid.n
    k1, k2 = f.grid.wavenumbers()
    uh = sfft.rfft2(f.values, workers=_workers())
    w = np.full(uh.shape, 2.0)
    w[:, 0] = 1.0
    w[:, -1] = 1.0  # Nyquist column is not duplicated for even n
    q = np.sum(w * (k1 ** 2 + k2 ** 2) * np.abs(uh) ** 2)
    return float(f.grid.h ** 2 * q / n ** 2)


# ---------------------------------------------------------------------------
# Cell-averaged kernel tables
# ---------------------------------------------------------------------------

def _xy_arctan(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # x^2 * arctan(y/x) extended by its limit 0 on x = 0
    out = np.zeros(np.broadcast(x, y).shape)
    nz = x != 0
    out[nz] = (x ** 2 * np.arctan(np.divide(y, x, where=nz, out=np.zeros_like(out))))[nz]
    return out


def _log_antiderivative(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """H with dH/dxdy = log sqrt(x^2+y^2); continuous choice, H(0,0)=0."""
    r2 = x ** 2 + y ** 2
    xy = x * y
    with np.errstate(divide="ignore", invalid="ignore"):
        core = xy * np.log(r2) - 3.0 * xy
    core = np.where(xy == 0, 0.0, core)
    return 0.5 * (core + _xy_arctan(x, y) + _xy_arctan(y, x))


def _x_log_y_plus_r(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # x * log(y + r); for y < 0 use (y+r)(r-y) = x^2 to avoid cancellation
    r = np.hypot(x, y)
    with np.errstate(divide="ignore", invalid="ignore"):
        pos = np.log(y + r)
        neg = 2.0 * np.log(np.abs(x)) - np.log(r - y)
    val = np.where(y >= 0, pos, neg)
    return np.where(x == 0, 0.0, x * np.where(x == 0, 1.0, val))


def _riesz_antiderivative(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """M with dM/dxdy = 1/sqrt(x^2+y^2), M(0,0)=0."""
    return _x_log_y_plus_r(x, y) + _x_log_y_plus_r(y, x)


def _cell_average_from_antiderivative(anti, n: int, h: float) -> np.ndarray:
    """Averages over cells centered at (i*h, j*h), 0 <= i,j <= n."""
    corners = (np.arange(n + 2) - 0.5) * h
    cx, cy = np.meshgrid(corners, corners, indexing="ij")
    H = anti(cx, cy)
    integral = H[1:, 1:] - H[:-1, 1:] - H[1:, :-1] + H[:-1, :-1]
    return integral / h ** 2


_GAUSS_ORDER = 16


def _cell_average_quadrature(func, n: int, h: float) -> np.ndarray:
    """Tensor Gauss-Legendre cell averages of func(r) on the offset quadrant."""
    nodes, weights = np.polynomial.legendre.leggauss(_GAUSS_ORDER)
    nodes = 0.5 * h * nodes
    weights = 0.5 * weights  # scaled so that the tensor weights sum to 1
    a = np.arange(n + 1) * h
    ax, ay = np.meshgrid(a, a, indexing="ij")
    acc = np.zeros_like(ax)
    for tk, wk in zip(nodes, weights):
        for tl, wl in zip(nodes, weights):
            acc += (wk * wl) * func(np.hypot(ax + tk, ay + tl))
    return acc


def _quadrant_to_padded(base: np.ndarray, n: int) -> np.ndarray:
    """Expand averages on the quadrant |dx|,|dy| in 0..n to the 2n x 2n
    wrap-around layout used by circular convolution."""
    idx = np.minimum(np.arange(2 * n), 2 * n - np.arange(2 * n))
    return base[np.ix_(idx, idx)]


@dataclass(frozen=True)
class LogKernelTable:
    """Precomputed transforms of the cell-averaged kernels on the zero-padded
    2n x 2n domain.

    ``spectrum`` transforms the log|x| kernel; the coercive and singular
    spectra transform log(1+|x|) and log(1+1/|x|).  The singular kernel is
    stored as the exact pointwise difference of the other two, so the split
    identity holds at every lattice offset.  The Riesz table (1/|x|) backs the
    domination check on the singular part.
    """

    grid: Grid2D
    spectrum: np.ndarray
    coercive_spectrum: np.ndarray
    singular_spectrum: np.ndarray
    riesz_spectrum: np.ndarray
    log_kernel: np.ndarray
    coercive_kernel: np.ndarray
    singular_kernel: np.ndarray
    riesz_kernel: np.ndarray


_TABLE_CACHE: dict[tuple[int, float], LogKernelTable] = {}


def make_log_kernel_table(grid: Grid2D) -> LogKernelTable:
    key = (grid.n, grid.L)
    hit = _TABLE_CACHE.get(key)
    if hit is not None:
        return hit
    n, h = grid.n, grid.h

    log_base = _cell_average_from_antiderivative(_log_antiderivative, n, h)
    riesz_base = _cell_average_from_antiderivative(_riesz_antiderivative, n, h)
    coercive_base = _cell_average_quadrature(np.log1p, n, h)
    # The origin cell of log(1+r) has a conical point; resolve it adaptively.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # quadpack flags its own roundoff floor
        val, _ = dblquad(
            lambda y, x: np.log1p(np.hypot(x, y)),
            -h / 2, h / 2, -h / 2, h / 2,
            epsabs=1e-15, epsrel=1e-13,
        )
    coercive_base[0, 0] = val / h ** 2
    singular_base = coercive_base - log_base

    kernels = [
        _quadrant_to_padded(b, n)
        for b in (log_base, coercive_base, singular_base, riesz_base)
    ]
    spectra = [sfft.rfft2(k, workers=_workers()) for k in kernels]
    for arr in kernels + spectra:
        arr.setflags(write=False)
    table = LogKernelTable(
        grid=grid,
        spectrum=spectra[0],
        coercive_spectrum=spectra[1],
        singular_spectrum=spectra[2],
        riesz_spectrum=spectra[3],
        log_kernel=kernels[0],
        coercive_kernel=kernels[1],
        singular_kernel=kernels[2],
        riesz_kernel=kernels[3],
    )
    _TABLE_CACHE[key] = table
    return table


def _convolve(rho: Field, table: LogKernelTable, spectrum: np.ndarray) -> Field:
    _require_same_grid(rho.grid, table.grid)
    n = rho.grid.n
    pad = np.zeros((2 * n, 2 * n))
    pad[:n, :n] = rho.values
    conv = sfft.irfft2(
        sfft.rfft2(pad, workers=_workers()) * spectrum,
        s=(2 * n, 2 * n),
        workers=_workers(),
    )[:n, :n]
    return make_field(rho.grid, rho.grid.h ** 2 * conv)


def log_convolution(rho: Field, table: LogKernelTable) -> Field:
    """w(x) = integral of log|x-y| rho(y) dy, aperiodic (no wrap-around)."""
    return _convolve(rho, table, table.spectrum)


def coercive_convolution(rho: Field, table: LogKernelTable) -> Field:
    """Convolution against the cell-averaged log(1+|x|) kernel."""
    return _convolve(rho, table, table.coercive_spectrum)


def singular_convolution(rho: Field, table: LogKernelTable) -> Field:
    """Convolution against the cell-averaged log(1+1/|x|) kernel."""
    return _convolve(rho, table, table.singular_spectrum)


def riesz_convolution(rho: Field, table: LogKernelTable) -> Field:
    """Convolution against the cell-averaged 1/|x| kernel."""
    return _convolve(rho, table, table.riesz_spectrum)


# ---------------------------------------------------------------------------
# Boundary decay
# ---------------------------------------------------------------------------

def boundary_ratio(f: Field) -> float:
    """Largest boundary sample relative to the field's peak amplitude."""
    v = f.values
    edge = max(
        np.max(np.abs(v[0, :])), np.max(np.abs(v[-1, :])),
        np.max(np.abs(v[:, 0])), np.max(np.abs(v[:, -1])),
    )
    peak = np.max(np.abs(v))
    return float(edge / peak) if peak > 0 else 0.0


def check_boundary_decay(f: Field, label: str = "field") -> None:
    ratio = boundary_ratio(f)
    if ratio > BOUNDARY_DECAY_THRESHOLD:
        warnings.warn(
            f"{label} decays to {ratio:.2e} of its peak at the domain edge "
            f"(threshold {BOUNDARY_DECAY_THRESHOLD:.0e}); enlarge L",
            BoundaryDecayWarning,
            stacklevel=3,
        )


# ---------------------------------------------------------------------------
# Field persistence and radial export
# ---------------------------------------------------------------------------

def write_field(path, f: Field) -> None:
    """Binary dump: magic 'LSPF', version u32, n u32, L f64, n^2 f64 samples,
    row-major little-endian."""
    with open(path, "wb") as fh:
        fh.write(FIELD_MAGIC)
        fh.write(struct.pack("<II", FIELD_VERSION, f.grid.n))
        fh.write(struct.pack("<d", f.grid.L))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_field(path) -> Field:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != FIELD_MAGIC:
        raise ValueError(f"bad magic in {path!r}")
    version, n = struct.unpack_from("<II", raw, 4)
    if version != FIELD_VERSION:
        raise ValueError(f"unsupported field dump version {version}")
    (L,) = struct.unpack_from("<d", raw, 12)
    data = np.frombuffer(raw, dtype="<f8", count=n * n, offset=20)
    return make_field(make_grid(n, L), data.reshape(n, n))


def radial_profile(f: Field) -> tuple[np.ndarray, np.ndarray]:
    """Angular average binned at cell-center radii (k + 1/2) h."""
    X, Y = f.grid.meshgrid()
    r = np.hypot(X, Y)
    k = np.floor(r / f.grid.h).astype(int)
    counts = np.bincount(k.ravel())
    sums = np.bincount(k.ravel(), weights=f.values.ravel())
    nz = counts > 0
    radii = (np.arange(len(counts)) + 0.5) * f.grid.h
    return radii[nz], sums[nz] / counts[nz]


def write_radial_csv(path, f: Field) -> None:
    radii, values = radial_profile(f)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "value"])
        for r, v in zip(radii, values):
            writer.writerow([format(r, ".17g"), format(v, ".17g")])
