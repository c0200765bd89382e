"""Periodic spectral grid, fields, multiplier calculus, weights, snapshots.

Conventions, fixed once for the whole package:

  * fundamental domain [-L/2, L/2) with nodes x_j = -L/2 + j*L/N;
  * wavenumbers xi_k = 2*pi*k/L for k in [-N/2, N/2), stored in FFT order;
  * coefficients c_k = FFT(values)/N, so values_j = sum_k c_k exp(i xi_k x_j);
  * the L2 quadrature weight is L/N, hence ||u||_{L2}^2 = L * sum_k |c_k|^2.

A field whose is_real flag is set must have Hermitian coefficients,
c_{-k} = conj(c_k), within 1e-12 relative to the largest coefficient.
Multipliers that respect that symmetry (even real symbols, odd imaginary
ones) preserve the flag; all others clear it.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import LeakageError

HERMITIAN_TOL = 1e-12
DEFAULT_DEALIAS = 2.0 / 3.0
# exp(300) is close to the largest double; exponential weights beyond that
# cannot be represented on the grid at all.
EXP_WEIGHT_CAP = 300.0


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform periodic grid with N nodes on a domain of length L."""

    n: int
    length: float
    dealias_fraction: float = DEFAULT_DEALIAS

    def __post_init__(self):
        if self.n < 16 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"N must be a power of two >= 16, got {self.n}")
        if not self.length > 0:
            raise ValueError(f"domain length must be positive, got {self.length}")
        if not 0 < self.dealias_fraction <= 1:
            raise ValueError(
                f"dealias fraction must lie in (0, 1], got {self.dealias_fraction}"
            )

    @cached_property
    def x(self) -> np.ndarray:
        """Physical nodes x_j = -L/2 + j*L/N."""
        return -self.length / 2 + np.arange(self.n) * (self.length / self.n)

    @cached_property
    def modes(self) -> np.ndarray:
        """Integer mode numbers k in FFT order, k in [-N/2, N/2)."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).astype(int)

    @cached_property
    def xi(self) -> np.ndarray:
        """Wavenumbers 2*pi*k/L in FFT order."""
        return 2.0 * np.pi * self.modes / self.length

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True on modes kept by the dealias cutoff |k| <= fraction * N/2."""
        return np.abs(self.modes) <= self.dealias_fraction * (self.n // 2)

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def nyquist_index(self) -> int:
        return self.n // 2


@dataclass
class SpectralField:
    """A field on a SpectralGrid, represented by its Fourier coefficients."""

    grid: SpectralGrid
    coeffs: np.ndarray
    is_real: bool

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy(), self.is_real)

    @property
    def values(self) -> np.ndarray:
        return to_values(self)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs + other.coeffs,
                             self.is_real and other.is_real)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs - other.coeffs,
                             self.is_real and other.is_real)

    def __mul__(self, scalar) -> "SpectralField":
        c = complex(scalar)
        real_scalar = c.imag == 0.0
        return SpectralField(self.grid, self.coeffs * c, self.is_real and real_scalar)

    __rmul__ = __mul__


def _check_same_grid(f: SpectralField, g: SpectralField) -> None:
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")


def from_values(grid: SpectralGrid, values, is_real: bool | None = None) -> SpectralField:
    """Build a field from nodal values; realness is detected unless forced."""
    values = np.asarray(values)
    if values.shape != (grid.n,):
        raise ValueError(f"expected {grid.n} nodal values, got shape {values.shape}")
    if is_real is None:
        is_real = not np.iscomplexobj(values)
    coeffs = np.fft.fft(values) / grid.n
    return SpectralField(grid, coeffs, bool(is_real))


def from_coeffs(grid: SpectralGrid, coeffs, is_real: bool | None = None) -> SpectralField:
    """Build a field from Fourier coefficients in FFT order.

    With is_real=None the flag is set when the coefficients are Hermitian
    within HERMITIAN_TOL; forcing is_real=True on non-Hermitian data raises.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.shape != (grid.n,):
        raise ValueError(f"expected {grid.n} coefficients, got shape {coeffs.shape}")
    defect = hermitian_defect_of(coeffs)
    if is_real is None:
        is_real = defect <= HERMITIAN_TOL
    elif is_real and defect > HERMITIAN_TOL:
        raise ValueError(
            f"coefficients are not Hermitian (defect {defect:.3e}); cannot mark real"
        )
    return SpectralField(grid, coeffs, bool(is_real))


def to_values(f: SpectralField) -> np.ndarray:
    """Nodal values; real dtype when the field is flagged real."""
    vals = np.fft.ifft(f.coeffs) * f.grid.n
    return vals.real if f.is_real else vals


def hermitian_defect_of(coeffs: np.ndarray) -> float:
    """max |c_{-k} - conj(c_k)| relative to the largest |c_k| (0 for the zero field)."""
    scale = float(np.max(np.abs(coeffs)))
    if scale == 0.0:
        return 0.0
    flipped = coeffs[_flip_index(len(coeffs))]
    return float(np.max(np.abs(flipped - np.conj(coeffs)))) / scale


def hermitian_defect(f: SpectralField) -> float:
    return hermitian_defect_of(f.coeffs)


def _flip_index(n: int) -> np.ndarray:
    # index map k -> -k in FFT order (0 -> 0, Nyquist -> Nyquist)
    idx = np.arange(n)
    return (-idx) % n


def multiplier_preserves_real(grid: SpectralGrid, m: np.ndarray) -> bool:
    """True when m(-xi) == conj(m(xi)) within HERMITIAN_TOL, so real fields stay real."""
    m = np.asarray(m, dtype=complex)
    scale = float(np.max(np.abs(m)))
    if scale == 0.0:
        return True
    defect = np.max(np.abs(m[_flip_index(grid.n)] - np.conj(m))) / scale
    return bool(defect <= HERMITIAN_TOL)


def apply_multiplier(f: SpectralField, m) -> SpectralField:
    """Multiply the coefficients by the symbol values m (FFT order)."""
    m = np.asarray(m, dtype=complex)
    if m.shape != (f.grid.n,):
        raise ValueError(f"multiplier shape {m.shape} does not match grid")
    keep_real = f.is_real and multiplier_preserves_real(f.grid, m)
    return SpectralField(f.grid, f.coeffs * m, keep_real)


def derivative(f: SpectralField, order: int = 1) -> SpectralField:
    """Spectral derivative of the given order; odd orders zero the Nyquist mode."""
    if order < 0 or int(order) != order:
        raise ValueError(f"derivative order must be a nonnegative integer, got {order}")
    if order == 0:
        return f.copy()
    m = (1j * f.grid.xi) ** order
    if order % 2 == 1:
        m[f.grid.nyquist_index] = 0.0
    return apply_multiplier(f, m)


def fractional_D(f: SpectralField, s: float) -> SpectralField:
    """|xi|**s multiplier; the zero mode maps to 0 for s > 0 (identity at s=0)."""
    if s < 0:
        raise ValueError(f"fractional derivative order must be >= 0, got {s}")
    if s == 0:
        return f.copy()
    return apply_multiplier(f, np.abs(f.grid.xi) ** s)


def fractional_J(f: SpectralField, s: float) -> SpectralField:
    """(1 + xi**2)**(s/2) multiplier (smoothing for negative s)."""
    return apply_multiplier(f, (1.0 + f.grid.xi**2) ** (s / 2.0))


def hilbert(f: SpectralField) -> SpectralField:
    """Hilbert transform, multiplier -i*sgn(xi); an odd symbol, Nyquist zeroed."""
    m = -1j * np.sign(f.grid.xi).astype(complex)
    m[f.grid.nyquist_index] = 0.0
    return apply_multiplier(f, m)


def dealiased_product(f: SpectralField, g: SpectralField) -> SpectralField:
    """Pointwise product with the 2/3-style truncation before and after.

    Both inputs are truncated to the dealias band, multiplied at the nodes,
    and the result truncated again; quadratic aliasing then cannot pollute
    the kept band.
    """
    _check_same_grid(f, g)
    mask = f.grid.dealias_mask
    fc = np.where(mask, f.coeffs, 0.0)
    gc = np.where(mask, g.coeffs, 0.0)
    fv = np.fft.ifft(fc) * f.grid.n
    gv = np.fft.ifft(gc) * f.grid.n
    if f.is_real and g.is_real:
        prod = fv.real * gv.real
    else:
        prod = fv * gv
    pc = np.fft.fft(prod) / f.grid.n
    return SpectralField(f.grid, np.where(mask, pc, 0.0), f.is_real and g.is_real)


def l2_norm(f: SpectralField) -> float:
    """||u||_{L2} via the coefficient-side Parseval identity."""
    return float(np.sqrt(f.grid.length) * np.linalg.norm(f.coeffs))


def boundary_leakage(f: SpectralField, strip_fraction: float = 0.05) -> float:
    """Share of the |u|^2 mass lying in the outer strip_fraction of the domain.

    The strip straddles the periodic seam at +-L/2 (half its width on each
    side).  Returns 0 for the zero field.
    """
    vals = np.abs(to_values(f)) ** 2
    total = float(np.sum(vals))
    if total == 0.0:
        return 0.0
    half_strip = strip_fraction / 2.0 * f.grid.length
    x = f.grid.x
    in_strip = (x < -f.grid.length / 2 + half_strip) | (x >= f.grid.length / 2 - half_strip)
    return float(np.sum(vals[in_strip])) / total


# --- spatial weights ------------------------------------------------------

WEIGHT_KINDS = ("poly", "bracket", "exp")


@dataclass(frozen=True)
class WeightSpec:
    """A pointwise spatial weight: poly |x|^r, bracket (1+x^2)^(r/2), or exp(b*x)."""

    kind: str
    param: float

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise ValueError(f"unknown weight kind {self.kind!r}; choose from {WEIGHT_KINDS}")
        if self.kind in ("poly", "bracket") and self.param < 0:
            raise ValueError(f"{self.kind} weight exponent must be >= 0, got {self.param}")

    @property
    def label(self) -> str:
        return f"{self.kind}:{self.param:g}"

    def values(self, grid: SpectralGrid) -> np.ndarray:
        x = grid.x
        if self.kind == "poly":
            return np.abs(x) ** self.param
        if self.kind == "bracket":
            return (1.0 + x**2) ** (self.param / 2.0)
        if abs(self.param) * grid.length / 2.0 > EXP_WEIGHT_CAP:
            raise ValueError(
                f"exponential weight overflows the grid: |b|*L/2 = "
                f"{abs(self.param) * grid.length / 2.0:g} > {EXP_WEIGHT_CAP:g}"
            )
        return np.exp(self.param * x)


def poly_weight(r: float) -> WeightSpec:
    return WeightSpec("poly", r)


def bracket_weight(r: float) -> WeightSpec:
    return WeightSpec("bracket", r)


def exp_weight(b: float) -> WeightSpec:
    return WeightSpec("exp", b)


def parse_weight(text: str) -> WeightSpec:
    """Parse 'kind:param' labels such as 'poly:1.0' or 'exp:0.25'."""
    kind, sep, param = text.strip().partition(":")
    if not sep:
        raise ValueError(f"malformed weight {text!r}; expected kind:param")
    return WeightSpec(kind.strip(), float(param))


def apply_weight(f: SpectralField, w: WeightSpec,
                 max_leakage: float | None = None) -> tuple[SpectralField, float]:
    """Multiply a field by a spatial weight at the nodes.

    Returns (weighted field, boundary_leakage of the weighted field).  The
    leakage is the share of weighted mass in the outer 5% of the domain; when
    max_leakage is given and exceeded, the call refuses with LeakageError,
    since a weighted field leaning on the boundary invalidates the periodic
    surrogate of the whole-line statement being tested.
    """
    wv = w.values(f.grid)
    vals = to_values(f) * wv
    out = from_values(f.grid, vals, is_real=f.is_real if np.isrealobj(vals) else False)
    leak = boundary_leakage(out)
    if max_leakage is not None and leak > max_leakage:
        raise LeakageError(
            f"boundary leakage {leak:.3e} exceeds threshold {max_leakage:.3e} "
            f"for weight {w.label}"
        )
    return out, leak


# --- trajectories ---------------------------------------------------------

@dataclass
class Trajectory:
    """Time-indexed snapshots of a field under some evolution."""

    grid: SpectralGrid
    phase: object
    times: np.ndarray
    snapshots: list[SpectralField]
    method: str

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.times) != len(self.snapshots):
            raise ValueError("times and snapshots must have equal length")

    def __len__(self) -> int:
        return len(self.snapshots)

    @property
    def final(self) -> SpectralField:
        return self.snapshots[-1]


# --- binary snapshots -----------------------------------------------------

SNAPSHOT_MAGIC = b"DKLB"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIQddB")


def write_snapshot(path, f: SpectralField, t: float) -> None:
    """Write a field to the binary snapshot format.

    Layout: magic 'DKLB', version u32, N u64, L f64, t f64, is_real u8,
    then N little-endian (f64 re, f64 im) pairs holding the Fourier
    coefficients in FFT order.  Round trips are bit-exact.
    """
    header = _HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, f.grid.n,
                          f.grid.length, float(t), 1 if f.is_real else 0)
    body = np.empty(2 * f.grid.n, dtype="<f8")
    body[0::2] = f.coeffs.real
    body[1::2] = f.coeffs.imag
    Path(path).write_bytes(header + body.tobytes())


def read_snapshot(path, dealias_fraction: float = DEFAULT_DEALIAS
                  ) -> tuple[SpectralField, float]:
    """Read a binary snapshot; returns (field, t)."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"snapshot file {path} is truncated")
    magic, version, n, length, t, is_real = _HEADER.unpack_from(raw)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError(f"snapshot file {path} has bad magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    expected = _HEADER.size + 16 * n
    if len(raw) != expected:
        raise ValueError(f"snapshot file {path} has {len(raw)} bytes, expected {expected}")
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    coeffs = body[0::2] + 1j * body[1::2]
    grid = SpectralGrid(int(n), float(length), dealias_fraction)
    return SpectralField(grid, coeffs, bool(is_real)), float(t)
