"""Damping symbols and the Fourier multiplier of the linearized flow.

Every model in this package has a linear part that is diagonal in Fourier
space, so it is fully described by the real damping symbol

    Phi(xi) = -|xi|**p + sum_i c_i * xi**m_i * |xi|**n_i,

where each correction term has strictly lower degree m_i + n_i < p.  The
linearized equation u_t + u_xxx + eta*L*u = 0 with (L u)^(xi) = -Phi(xi)*u^(xi)
is solved mode-by-mode by the multiplier exp(i*t*xi**3 + eta*t*Phi(xi)).

This module owns the symbol description, the threshold M beyond which the
leading -|xi|**p term dominates the corrections, and the solution multiplier.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, OverflowGuardWarning

# Real exponents above this are clamped so exp() stays finite for pathological
# user symbols; a warning is recorded whenever the clamp fires.
EXP_REAL_CAP = 50.0


@dataclass(frozen=True)
class PhaseTerm:
    """One correction term c * xi**m * |xi|**n of the damping symbol.

    The signed power m keeps the sign of xi (odd m makes the term odd), the
    absolute power n does not.  m must be a nonnegative integer; n a
    nonnegative real.
    """

    coeff: float
    m: int
    n: float

    def __post_init__(self):
        if self.m < 0 or int(self.m) != self.m:
            raise ValueError(f"signed power m must be a nonnegative integer, got {self.m}")
        if self.n < 0:
            raise ValueError(f"absolute power n must be nonnegative, got {self.n}")

    @property
    def degree(self) -> float:
        return self.m + self.n

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        return self.coeff * xi**self.m * np.abs(xi) ** self.n


@dataclass(frozen=True)
class PhaseFunction:
    """Damping symbol Phi(xi) = -|xi|**p + Phi1(xi), Phi1 of lower degree.

    eta > 0 is the dissipation strength multiplying the symbol in the
    evolution.  M is the smallest threshold such that for all |xi| >= M the
    leading term dominates:  Phi1(xi) <= |xi|**p / 2  and  |Phi(xi)| >=
    |xi|**p / 2.  It is computed at construction and never changes.
    """

    p: float
    terms: tuple[PhaseTerm, ...] = ()
    eta: float = 1.0
    M: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.p > 0:
            raise ValueError(f"leading power p must be positive, got {self.p}")
        if not self.eta > 0:
            raise ValueError(f"dissipation strength eta must be positive, got {self.eta}")
        for t in self.terms:
            if t.degree >= self.p:
                raise ValueError(
                    f"correction term degree m+n={t.degree} must be < p={self.p}"
                )
        object.__setattr__(self, "M", find_M(self))

    @property
    def is_even(self) -> bool:
        """True when Phi(-xi) == Phi(xi), i.e. every signed power is even."""
        return all(t.m % 2 == 0 for t in self.terms)

    def __call__(self, xi):
        return phase_eval(self, xi)


def phi1_eval(phi: PhaseFunction, xi):
    """Correction part Phi1(xi) = sum_i c_i xi**m_i |xi|**n_i."""
    xi = np.asarray(xi, dtype=float)
    out = np.zeros_like(xi)
    for t in phi.terms:
        out = out + t(xi)
    return out


def phase_eval(phi: PhaseFunction, xi):
    """Full damping symbol Phi(xi) = -|xi|**p + Phi1(xi)."""
    xi = np.asarray(xi, dtype=float)
    return -np.abs(xi) ** phi.p + phi1_eval(phi, xi)


def _dominance_holds(phi: PhaseFunction, x: float) -> bool:
    # Both dominance conditions, checked at +x and -x.
    for xi in (x, -x):
        half = abs(xi) ** phi.p / 2.0
        p1 = float(phi1_eval(phi, xi))
        if p1 > half:
            return False
        if abs(float(phase_eval(phi, xi))) < half:
            return False
    return True


def find_M(phi: PhaseFunction, rel_tol: float = 1e-12) -> float:
    """Smallest M >= 0 such that the leading term dominates for all |xi| >= M.

    Dominance means Phi1(xi) <= |xi|**p/2 and |Phi(xi)| >= |xi|**p/2.  A
    term-wise bound gives a tail point beyond which dominance provably holds
    (possible because every correction degree is < p); a fine scan of
    [0, tail] locates the last violating point and bisection pins the
    boundary to relative tolerance rel_tol.  The returned M satisfies both
    conditions itself.
    """
    if not phi.terms:
        return 0.0
    # Tail bound: sum_i |c_i| x**deg_i <= x**p / 2 holds term-wise once
    # |c_i| x**deg_i <= x**p / (2k) for each of the k terms.
    k = len(phi.terms)
    tail = 1.0
    for t in phi.terms:
        if t.coeff == 0.0:
            continue
        tail = max(tail, (2.0 * k * abs(t.coeff)) ** (1.0 / (phi.p - t.degree)))
    tail *= 1.25  # safety margin against rounding of the bound itself

    for _ in range(64):
        xs = np.linspace(0.0, tail, 8193)
        ok = np.array([_dominance_holds(phi, float(x)) for x in xs])
        if ok[-1]:
            break
        tail *= 2.0
    else:
        raise NumericalError("could not locate a dominance region for the symbol")

    bad = np.nonzero(~ok)[0]
    if bad.size == 0:
        return 0.0
    lo = float(xs[bad[-1]])                      # violates
    hi = float(xs[min(bad[-1] + 1, len(xs) - 1)])  # holds
    while hi - lo > rel_tol * max(hi, 1.0):
        mid = 0.5 * (lo + hi)
        if _dominance_holds(phi, mid):
            hi = mid
        else:
            lo = mid
    return hi


def semigroup_multiplier(phi: PhaseFunction, t: float, xi):
    """Multiplier exp(i*t*xi**3 + eta*t*Phi(xi)) of the linear flow at time t.

    The real part of the exponent is clamped at EXP_REAL_CAP (with a recorded
    warning) so pathological symbols cannot overflow exp().
    """
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    xi = np.asarray(xi, dtype=float)
    re = phi.eta * t * phase_eval(phi, xi)
    if np.any(re > EXP_REAL_CAP):
        warnings.warn(
            f"semigroup exponent clamped at +{EXP_REAL_CAP:g}; the symbol grows "
            "faster than the guard allows",
            OverflowGuardWarning,
            stacklevel=2,
        )
        re = np.minimum(re, EXP_REAL_CAP)
    return np.exp(re + 1j * t * xi**3)


def weighted_multiplier_sup(phi: PhaseFunction, q: float, t: float,
                            samples: int = 20001) -> float:
    """sup over xi of |xi|**(2q) * exp(2*eta*t*Phi(xi)), by dense scan.

    Finite for every t > 0 because the symbol decays like -|xi|**p in the
    tail; the scan window covers both the low-frequency maximizer and the
    onset of tail decay.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if q < 0:
        raise ValueError("q must be nonnegative")
    xi_star = (max(2.0 * q, 1.0) / (phi.eta * t * phi.p)) ** (1.0 / phi.p)
    xi_max = max(10.0, 4.0 * phi.M, 4.0 * xi_star,
                 (200.0 / (phi.eta * t)) ** (1.0 / phi.p))
    xs = np.linspace(-xi_max, xi_max, samples)
    vals = np.abs(xs) ** (2.0 * q) * np.exp(
        np.minimum(2.0 * phi.eta * t * phase_eval(phi, xs), EXP_REAL_CAP)
    )
    return float(np.max(vals))


@dataclass(frozen=True)
class ModelPreset:
    """A named damping symbol."""

    name: str
    phase: PhaseFunction


def kdvb(eta: float = 1.0) -> ModelPreset:
    """Second-order damping: Phi(xi) = -xi**2 (Burgers-type dissipation)."""
    return ModelPreset("kdvb", PhaseFunction(p=2.0, terms=(), eta=eta))


def ost(eta: float = 1.0) -> ModelPreset:
    """Phi(xi) = -|xi|**3 + |xi|, the fully nonlocal third-order damping."""
    return ModelPreset("ost", PhaseFunction(p=3.0, terms=(PhaseTerm(1.0, 0, 1.0),), eta=eta))


def kdvks(eta: float = 1.0) -> ModelPreset:
    """Phi(xi) = -xi**4 + xi**2, fourth-order damping with an unstable band."""
    return ModelPreset("kdvks", PhaseFunction(p=4.0, terms=(PhaseTerm(1.0, 0, 2.0),), eta=eta))


def optimality(k: int, eta: float = 1.0) -> ModelPreset:
    """Phi(xi) = -|xi|**(2k) + xi**(2k-3)*|xi|**2, odd in its correction.

    The correction term carries an odd signed power, so the symbol is not
    even and the evolution does not preserve real-valued data.
    """
    if int(k) != k or k < 2:
        raise ValueError(f"k must be an integer >= 2, got {k}")
    k = int(k)
    return ModelPreset(
        f"optimality:{k}",
        PhaseFunction(p=2.0 * k, terms=(PhaseTerm(1.0, 2 * k - 3, 2.0),), eta=eta),
    )


def preset(name: str, eta: float = 1.0) -> ModelPreset:
    """Look up a preset by name; 'optimality:k' selects the k-th family member."""
    key = name.strip().lower()
    if key == "kdvb":
        return kdvb(eta)
    if key == "ost":
        return ost(eta)
    if key == "kdvks":
        return kdvks(eta)
    if key.startswith("optimality:"):
        try:
            k = int(key.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"malformed preset name {name!r}; expected optimality:<int>")
        return optimality(k, eta)
    raise ValueError(
        f"unknown preset {name!r}; choose kdvb, ost, kdvks, or optimality:<k>"
    )
