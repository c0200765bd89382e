"""Exponential-weight conjugation of the flow and weighted persistence checks.

For symbols that are polynomials in i*xi (even integer leading power, even
absolute powers), multiplying by exp(b*x) conjugates the linear flow into
another explicit multiplier: if w(0) = exp(b*x) f then

    w(t) = exp(-t * S(i*xi - b)) w(0),

where S is the operator polynomial with S(i*xi) = -i*xi^3 - eta*Phi(xi).
For the fourth-order preset S(z) = z^3 + eta*(z^2 + z^4), whose shifted real
part splits as theta(xi) + delta with

    theta(xi) = eta*xi^4 + (3b - eta - 6*eta*b^2) * xi^2,
    delta     = eta*(b^2 + b^4) - b^3,

and whose linear-in-xi phase mu = 3b^2 - 2*eta*b - 4*eta*b^3 transports the
weighted field by mu*t.  This module computes the conjugated propagator two
independent ways (direct complex evaluation and the expanded split), checks
the commutation identity on actual fields, and measures the weighted
persistence and smoothing-versus-decay trade of the linear flow.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import symbols
from ._seam import dd_field_values, dd_semigroup_multiplier, seam_indices
from .errors import LeakageError, OverflowGuardWarning
from .fields import mollified_cusp, sample_ensemble
from .grid import (
    SpectralField,
    SpectralGrid,
    apply_multiplier,
    apply_weight,
    boundary_leakage,
    exp_weight,
    fractional_D,
    from_values,
    l2_norm,
    poly_weight,
    to_values,
)
from .norms import hs_norm, resolve_workers, weighted_norm
from .solver import apply_semigroup


def operator_polynomial(phi: symbols.PhaseFunction) -> np.ndarray:
    """Coefficients (ascending) of S with S(i*xi) = (i*xi)^3 - eta*Phi(xi).

    Exists only for symbols polynomial in i*xi: p an even integer and every
    correction term with an even integer absolute power n.  Odd signed
    powers m give genuinely complex coefficients (a complex operator).
    """
    p = phi.p
    if int(p) != p or int(p) % 2:
        raise ValueError(f"leading power p={p} is not an even integer; "
                         "the symbol is not a differential-operator polynomial")
    deg = max(3, int(p))
    coeffs = np.zeros(deg + 1, dtype=complex)
    coeffs[3] += 1.0
    # -eta*Phi(xi) = eta*(xi^p - sum c_i xi^(m_i + n_i)); xi^k = (-i)^k z^k
    coeffs[int(p)] += phi.eta * (-1j) ** int(p)
    for t in phi.terms:
        if int(t.n) != t.n or int(t.n) % 2:
            raise ValueError(
                f"correction term |xi|^{t.n} is not an even integer power; "
                "the symbol is not a differential-operator polynomial"
            )
        k = int(t.m + t.n)
        coeffs[k] -= phi.eta * t.coeff * (-1j) ** k
    return coeffs


def shifted_multiplier(phi: symbols.PhaseFunction, b: float, t: float, xi
                       ) -> np.ndarray:
    """exp(-t * S(i*xi - b)) by direct complex polynomial evaluation."""
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    coeffs = operator_polynomial(phi)
    z = 1j * np.asarray(xi, dtype=float) - b
    Sz = np.polynomial.polynomial.polyval(z, coeffs)
    ex = -t * Sz
    if np.any(ex.real > symbols.EXP_REAL_CAP):
        warnings.warn(
            f"conjugated exponent clamped at +{symbols.EXP_REAL_CAP:g}",
            OverflowGuardWarning,
            stacklevel=2,
        )
        ex = np.minimum(ex.real, symbols.EXP_REAL_CAP) + 1j * ex.imag
    return np.exp(ex)


def conjugated_propagator(g: SpectralField, b: float, eta: float, t: float
                          ) -> SpectralField:
    """Evolve an exp(b*x)-weighted field under the fourth-order preset flow."""
    phi = symbols.kdvks(eta).phase
    return apply_multiplier(g, shifted_multiplier(phi, b, t, g.grid.xi))


def expanded_multiplier(b: float, eta: float, t: float, xi) -> np.ndarray:
    """The fourth-order conjugated multiplier from its expanded split form.

    Written out from the binomial expansion of S(i*xi - b); must agree with
    shifted_multiplier to rounding.  The real part equals theta(xi) + delta.
    """
    xi = np.asarray(xi, dtype=float)
    re = (3.0 * b * xi**2 - b**3
          + eta * (-(xi**2) + b**2 + xi**4 - 6.0 * b**2 * xi**2 + b**4))
    im = (-(xi**3) + 3.0 * b**2 * xi
          + eta * (-2.0 * b * xi + 4.0 * b * xi**3 - 4.0 * b**3 * xi))
    return np.exp(-t * re - 1j * t * im)


def decay_shift(b: float, eta: float) -> float:
    """delta = eta*(b^2 + b^4) - b^3, the xi-independent real exponent part."""
    return eta * (b**2 + b**4) - b**3


def transport_speed(b: float, eta: float) -> float:
    """mu = 3b^2 - 2*eta*b - 4*eta*b^3; the weighted field translates by mu*t."""
    return 3.0 * b**2 - 2.0 * eta * b - 4.0 * eta * b**3


def theta_profile(xi, b: float, eta: float) -> np.ndarray:
    """theta(xi) = eta*xi^4 + (3b - eta - 6*eta*b^2)*xi^2."""
    xi = np.asarray(xi, dtype=float)
    return eta * xi**4 + (3.0 * b - eta - 6.0 * eta * b**2) * xi**2


@dataclass
class ConjugationResult:
    """Outcome of one weight-then-flow versus flow-then-weight comparison."""

    rel_error: float
    bound_ratio: float
    boundary_leakage: float
    delta: float
    mu: float


def conjugation_check(f: SpectralField, b: float, eta: float, t: float,
                      max_leakage: float | None = 1e-8) -> ConjugationResult:
    """Compare exp(b*x) * V(t) f against the conjugated propagator on exp(b*x) f.

    The identity is exact on the line; on the periodic grid it holds to
    rounding only while the weighted field stays away from the boundary, so
    the check refuses (LeakageError) when either weighted field puts more
    than max_leakage of its mass in the outer 5% of the domain.

    Node values of f and V(t) f under the seam (where exp(b*x) amplifies by
    more than e^5) are recomputed in double-double, because an inverse FFT
    only delivers them to 1e-16 * max|u| and the weight turns that absolute
    rounding floor into the dominant error of the whole comparison.

    bound_ratio measures ||exp(b*x) V(t) f|| against
    exp(-t*delta) * (1 + e^t) * ||exp(b*x) f||, the persistence bound shape
    with constant 1.
    """
    grid = f.grid
    w = exp_weight(b)
    wv = w.values(grid)
    phi = symbols.kdvks(eta).phase
    v = apply_semigroup(phi, t, f)
    fv = to_values(f)
    vvals = to_values(v)
    idx = seam_indices(grid, b)
    if idx.size:
        strip_f = dd_field_values(f.coeffs, grid, idx)
        mult = dd_semigroup_multiplier(operator_polynomial(phi), t, grid)
        strip_v = dd_field_values(f.coeffs, grid, idx, mult)
        if f.is_real:
            strip_f, strip_v = strip_f.real, strip_v.real
        fv = fv.astype(strip_f.dtype, copy=True)
        vvals = vvals.astype(strip_v.dtype, copy=True)
        fv[idx] = strip_f
        vvals[idx] = strip_v
    g = from_values(grid, fv * wv)
    a_side = from_values(grid, vvals * wv)
    leakage = max(boundary_leakage(g), boundary_leakage(a_side))
    if max_leakage is not None and leakage > max_leakage:
        raise LeakageError(
            f"weighted field leans on the boundary (leakage {leakage:.3e} > "
            f"{max_leakage:.3e}); widen the domain or recentre the data"
        )
    b_side = apply_multiplier(g, shifted_multiplier(phi, b, t, grid.xi))
    na = l2_norm(a_side)
    rel = l2_norm(a_side - b_side) / na if na else 0.0
    ng = l2_norm(g)
    denom = math.exp(-t * decay_shift(b, eta)) * (1.0 + math.exp(t)) * ng
    ratio = na / denom if denom else 0.0
    return ConjugationResult(rel, ratio, leakage, decay_shift(b, eta),
                             transport_speed(b, eta))


# --- polynomial-weight persistence -------------------------------------------


def weight_exchange_check(u0: SpectralField, phi: symbols.PhaseFunction,
                          r: float, s: float, t: float) -> float:
    """Ratio of ||x|^r V(t) u0|| to (1+t)*||u0||_{H^s} + ||x|^r u0||.

    The persistence mechanism trades K = p - 1 derivatives per power of
    decay, so r may not exceed s/(p-1); violating that is a usage error.
    Returns 0 for zero data.
    """
    if r < 0 or s < 0:
        raise ValueError(f"r and s must be nonnegative, got r={r}, s={s}")
    K = phi.p - 1.0
    if r > s / K + 1e-12:
        raise ValueError(
            f"decay order r={r} exceeds s/(p-1) = {s / K:g}; the persistence "
            "mechanism cannot pay for that much weight"
        )
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    w = poly_weight(r)
    denom = (1.0 + t) * hs_norm(u0, s) + weighted_norm(u0, w)
    if denom == 0.0:
        return 0.0
    return weighted_norm(apply_semigroup(phi, t, u0), w) / denom


@dataclass
class ExchangeReport:
    """Weighted-persistence ratios over a seeded ensemble and a time grid."""

    r: float
    s: float
    t_values: tuple[float, ...]
    sample_count: int
    seed: int
    ratios: np.ndarray  # shape (samples, len(t_values))
    max_ratio: float


def exchange_ensemble(phi: symbols.PhaseFunction, r: float, s: float,
                      t_values, size: int = 50, seed: int = 2024,
                      grid: SpectralGrid | None = None,
                      workers: int | None = None) -> ExchangeReport:
    """weight_exchange_check over a random ensemble; ratios must stay finite."""
    if grid is None:
        grid = SpectralGrid(256, 40.0)
    t_values = tuple(float(t) for t in t_values)
    samples = sample_ensemble(grid, size, seed)

    def one(u0):
        return [weight_exchange_check(u0, phi, r, s, t) for t in t_values]

    n_workers = resolve_workers(workers)
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            ratios = np.array(list(pool.map(one, samples)))
    else:
        ratios = np.array([one(u0) for u0 in samples])
    if not np.all(np.isfinite(ratios)):
        raise ValueError("non-finite persistence ratio in ensemble")
    return ExchangeReport(r, s, t_values, size, seed, ratios,
                          float(np.max(ratios)) if ratios.size else 0.0)


# --- smoothing-versus-decay probe --------------------------------------------


@dataclass
class ProbeReport:
    """Derivative-norm growth of rough, decaying data under one preset flow."""

    k: int
    sigmas: tuple[float, ...]
    t_values: tuple[float, ...]
    rows: list[dict]          # sigma, t, norm, mult_bound
    fitted_rates: dict        # sigma -> least-squares slope of log norm vs log t


def regularity_gain_probe(k: int, sigmas, t_values, *, eta: float = 1.0,
                          grid: SpectralGrid | None = None, gamma: float = 0.5,
                          h: float = 0.05, decay: float = 2.0) -> ProbeReport:
    """Tabulate ||D^sigma V(t) u0|| for mollified-cusp data under optimality:k.

    Also records the spectral envelope sup |xi|^sigma * exp(eta*t*Phi), which
    dominates each norm row (with ||u0|| = 1), and per-sigma fitted decay
    rates of the norm in t.  Diagnostic: nothing is asserted here.
    """
    if grid is None:
        grid = SpectralGrid(512, 40.0)
    phi = symbols.optimality(k, eta).phase
    u0 = mollified_cusp(grid, gamma, h, decay)
    sigmas = tuple(float(s) for s in sigmas)
    t_values = tuple(float(t) for t in t_values)
    rows = []
    rates = {}
    for sigma in sigmas:
        norms_t = []
        for t in t_values:
            vt = apply_semigroup(phi, t, u0)
            nrm = l2_norm(fractional_D(vt, sigma))
            bound = math.sqrt(symbols.weighted_multiplier_sup(phi, sigma, t))
            rows.append({"sigma": sigma, "t": t, "norm": nrm, "mult_bound": bound})
            norms_t.append(nrm)
        norms_arr = np.asarray(norms_t)
        if np.all(norms_arr > 0) and len(t_values) > 1:
            slope = np.polyfit(np.log(t_values), np.log(norms_arr), 1)[0]
        else:
            slope = float("nan")
        rates[sigma] = float(slope)
    return ProbeReport(int(k), sigmas, t_values, rows, rates)
