"""Initial-data constructors: Gaussians, seeded random mixtures, probe data."""

from __future__ import annotations

import numpy as np

from .grid import SpectralField, SpectralGrid, from_values, l2_norm


def gaussian(grid: SpectralGrid, center: float = 0.0, width: float = 1.0,
             amplitude: float = 1.0) -> SpectralField:
    """amplitude * exp(-((x-center)/width)^2 / 2) sampled on the grid."""
    if width <= 0:
        raise ValueError(f"width must be positive, got {width}")
    vals = amplitude * np.exp(-0.5 * ((grid.x - center) / width) ** 2)
    return from_values(grid, vals)


def gaussian_spectral(grid: SpectralGrid, center: float = 0.0,
                      width: float = 1.0, norm: float = 1.0) -> SpectralField:
    """Unit-L2 Gaussian bump built directly in coefficient space.

    Writes the analytic Fourier coefficients of the periodization of
    (4*pi*width^2)^(-1/4)-normalized exp(-((x-center)/width)^2 / 2) instead
    of sampling and transforming, so the far tail of the coefficient array
    is exactly zero rather than FFT rounding residue.  That matters for
    weighted comparisons, where residue at high modes shows up at the
    domain seam amplified by the weight.
    """
    if width <= 0:
        raise ValueError(f"width must be positive, got {width}")
    xi = grid.xi
    # e^{-i xi L/2} realigns the analytic coefficients with FFT node order
    # (nodes start at x = -L/2, not 0)
    c = ((4.0 * np.pi * width**2) ** 0.25 / grid.length
         * np.exp(-0.5 * (xi * width) ** 2)
         * np.exp(-1j * xi * (center + grid.length / 2.0)) * norm)
    return SpectralField(grid, c, True)


def normalize_l2(f: SpectralField, target: float = 1.0) -> SpectralField:
    """Scale a field to the requested L2 norm (zero field stays zero)."""
    norm = l2_norm(f)
    if norm == 0.0:
        return f.copy()
    return f * (target / norm)


def random_mixture(grid: SpectralGrid, rng: np.random.Generator) -> SpectralField:
    """One random Gaussian mixture, L2-normalized.

    1 to 5 bumps, widths in [0.5, 4], centers in the middle half of the
    domain, standard-normal amplitudes.  Degenerate near-cancellations are
    resampled so normalization never amplifies noise.
    """
    for _ in range(100):
        bumps = int(rng.integers(1, 6))
        widths = rng.uniform(0.5, 4.0, bumps)
        centers = rng.uniform(-grid.length / 4, grid.length / 4, bumps)
        amps = rng.standard_normal(bumps)
        vals = np.zeros(grid.n)
        for a, c, w in zip(amps, centers, widths):
            vals += a * np.exp(-0.5 * ((grid.x - c) / w) ** 2)
        f = from_values(grid, vals)
        if l2_norm(f) > 1e-8:
            return normalize_l2(f)
    raise RuntimeError("could not draw a non-degenerate mixture")


def sample_ensemble(grid: SpectralGrid, size: int, seed: int) -> list[SpectralField]:
    """Deterministic ensemble of random mixtures.

    Each sample has its own PRNG stream spawned from the root seed, so the
    ensemble is reproducible regardless of evaluation order or worker count.
    """
    streams = np.random.SeedSequence(seed).spawn(size)
    return [random_mixture(grid, np.random.default_rng(s)) for s in streams]


def mollified_cusp(grid: SpectralGrid, gamma: float = 0.5, h: float = 0.05,
                   decay: float = 2.0) -> SpectralField:
    """Limited-smoothness probe data: a cusp |x|^gamma mollified at scale h.

    (x^2 + h^2)^(gamma/2) * (1 + x^2)^(-decay/2), L2-normalized.  The cusp
    controls the high-frequency tail; the bracket factor sets the prescribed
    spatial decay.
    """
    if h <= 0:
        raise ValueError(f"mollification scale must be positive, got {h}")
    x = grid.x
    vals = (x**2 + h**2) ** (gamma / 2.0) * (1.0 + x**2) ** (-decay / 2.0)
    return normalize_l2(from_values(grid, vals))
