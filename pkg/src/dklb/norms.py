"""Norm machinery: smoothing constants, mixed norms, ensemble ratio checks.

The linear flow trades decay of the damping symbol for integrability and
derivatives.  The bookkeeping exponent is

    alpha(a, b, s) = 1/a - s/p - (1/p) * (1/a1 - 1/b),   1/a + 1/a1 = 1,

and every time-local bound in the package has the shape

    A(a, b, s)(T) = exp(eta*T) * T**(1/a) + (a*alpha)**(-1/a) * T**alpha,

finite exactly when alpha > 0.  Mixed space-time Lebesgue norms are computed
on discrete trajectories (trapezoid in time, grid quadrature in space, in the
stated nesting order), and verify_* routines measure bound ratios over
seeded random ensembles.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import symbols
from .fields import sample_ensemble
from .grid import (
    SpectralField,
    SpectralGrid,
    Trajectory,
    WeightSpec,
    apply_multiplier,
    bracket_weight,
    derivative,
    fractional_D,
    fractional_J,
    l2_norm,
    to_values,
)

INF = math.inf


def conjugate_exponent(a: float) -> float:
    """a1 with 1/a + 1/a1 = 1 (a=1 -> inf, a=inf -> 1)."""
    if a == INF:
        return 1.0
    if a <= 1:
        if a == 1:
            return INF
        raise ValueError(f"exponent must be >= 1, got {a}")
    return a / (a - 1.0)


def alpha(a: float, b: float, s: float, p: float) -> float:
    """Smoothing exponent 1/a - s/p - (1/p)(1/a1 - 1/b); 1/inf is 0."""
    if a < 1 or b < 1:
        raise ValueError(f"Lebesgue exponents must be >= 1, got a={a}, b={b}")
    inv_a = 0.0 if a == INF else 1.0 / a
    inv_a1 = 1.0 - inv_a
    inv_b = 0.0 if b == INF else 1.0 / b
    return inv_a - s / p - (inv_a1 - inv_b) / p


@dataclass(frozen=True)
class SmoothingParams:
    """Exponent bundle (a, b, s) for one smoothing bound on a given symbol."""

    a: float
    b: float
    s: float
    p: float
    eta: float
    alpha: float = field(init=False)

    def __post_init__(self):
        if self.s < 0:
            raise ValueError(f"derivative gain s must be >= 0, got {self.s}")
        object.__setattr__(self, "alpha", alpha(self.a, self.b, self.s, self.p))
        if self.alpha <= 0:
            raise ValueError(
                f"alpha(a={self.a}, b={self.b}, s={self.s}) = {self.alpha:g} <= 0 "
                f"for p={self.p}; the bound constant is infinite"
            )


def smoothing_A(a: float, b: float, s: float, phi: symbols.PhaseFunction,
                T: float) -> float:
    """Bound constant exp(eta*T)*T^(1/a) + (a*alpha)^(-1/a) * T^alpha."""
    params = SmoothingParams(a, b, s, phi.p, phi.eta)
    if T < 0:
        raise ValueError(f"horizon T must be >= 0, got {T}")
    inv_a = 0.0 if a == INF else 1.0 / a
    al = params.alpha
    return math.exp(phi.eta * T) * T**inv_a + (a * al) ** (-inv_a) * T**al


def A2(phi: symbols.PhaseFunction, T: float) -> float:
    """Constant for the plain L2_T L4_x bound (a=2, b=4, s=0)."""
    return smoothing_A(2.0, 4.0, 0.0, phi, T)


def A3(phi: symbols.PhaseFunction, s: float, T: float) -> float:
    """Constant for the s-derivative L2_T L4_x bound (a=2, b=4)."""
    return smoothing_A(2.0, 4.0, s, phi, T)


def A4(phi: symbols.PhaseFunction, T: float) -> float:
    """Constant for the one-derivative L2_T L4_x bound (a=2, b=4, s=1)."""
    return smoothing_A(2.0, 4.0, 1.0, phi, T)


def A6(phi: symbols.PhaseFunction, T: float) -> float:
    """Constant for the gradient sup-in-x bound (a=2, b=inf, s=1)."""
    return smoothing_A(2.0, INF, 1.0, phi, T)


# --- norms on fields and trajectories --------------------------------------


def hs_norm(f: SpectralField, s: float = 0.0) -> float:
    """Sobolev norm ||(1+xi^2)^(s/2) u||_{L2}."""
    w = (1.0 + f.grid.xi**2) ** (s / 2.0)
    return float(np.sqrt(f.grid.length) * np.linalg.norm(w * f.coeffs))


def lp_norm(f: SpectralField, p: float) -> float:
    """Physical-space L^p norm with quadrature weight L/N; p=inf is the grid max."""
    vals = np.abs(to_values(f))
    if p == INF:
        return float(np.max(vals))
    if p < 1:
        raise ValueError(f"Lebesgue exponent must be >= 1, got {p}")
    return float((np.sum(vals**p) * f.grid.dx) ** (1.0 / p))


def weighted_norm(f: SpectralField, w: WeightSpec) -> float:
    """||w(x) * u||_{L2} at the nodes."""
    wv = w.values(f.grid)
    vals = np.abs(to_values(f))
    return float(np.sqrt(np.sum((wv * vals) ** 2) * f.grid.dx))


def _trapezoid_weights(times: np.ndarray) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if len(t) < 2:
        raise ValueError("a trajectory norm needs at least two time samples")
    d = np.diff(t)
    if np.any(d <= 0):
        raise ValueError("trajectory times must be strictly increasing")
    w = np.zeros(len(t))
    w[:-1] += d / 2.0
    w[1:] += d / 2.0
    return w


def _pnorm(vals: np.ndarray, weights: np.ndarray, p: float, axis=None):
    if p == INF:
        return np.max(vals, axis=axis)
    return (np.sum(weights * vals**p, axis=axis)) ** (1.0 / p)


def mixed_norm(traj: Trajectory, outer: float, inner: float,
               order: str = "t_outer_x_inner", op=None) -> float:
    """Mixed space-time norm of a trajectory.

    order='t_outer_x_inner' computes (int_0^T (int |u|^inner dx)^(outer/inner)
    dt)^(1/outer); 'x_outer_t_inner' nests the other way around.  inf
    exponents take grid maxima.  op, when given, maps each snapshot before
    the norm (e.g. a derivative).
    """
    if order not in ("t_outer_x_inner", "x_outer_t_inner"):
        raise ValueError(f"unknown nesting order {order!r}")
    if not traj.snapshots:
        raise ValueError("cannot take a mixed norm of an empty trajectory")
    snaps = traj.snapshots if op is None else [op(f) for f in traj.snapshots]
    V = np.stack([np.abs(to_values(f)) for f in snaps])  # (n_t, n_x)
    tw = _trapezoid_weights(traj.times)
    xw = np.full(traj.grid.n, traj.grid.dx)
    if order == "t_outer_x_inner":
        per_time = _pnorm(V, xw[None, :], inner, axis=1)
        return float(_pnorm(per_time, tw, outer))
    per_node = _pnorm(V, tw[:, None], inner, axis=0)
    return float(_pnorm(per_node, xw, outer))


def lambda_diagnostics(traj: Trajectory, s: float = 0.0, r: float | None = None,
                       b: float | None = None) -> dict[str, float]:
    """The layered trajectory diagnostics lambda1..lambda8 (those defined).

    lambda1  sup-in-time H^s norm
    lambda2  A2(T)^-1 ||u||_{L2_T L4_x}
    lambda3  A3(T)^-1 ||D^s u||_{L2_T L4_x}          (needs alpha(2,4,s) > 0)
    lambda4  ||D^s du/dx||_{L2_T L4_x}               (deliberately unnormalized)
    lambda5  ||du/dx||_{L2_T L4_x}                   (deliberately unnormalized)
    lambda6  A6(T)^-1 ||du/dx||_{L2_T Linf_x}        (needs alpha(2,inf,1) > 0)
    lambda7  sup-in-time |||x|^r u||_{L2}, when r is given
    lambda8  sup-in-time ||exp(b x) u||_{L2}, when b is given

    Aggregates: Lambda = lambda1+..+lambda5, Omega = Lambda+lambda6+lambda7,
    Theta = Lambda+lambda6+lambda8, reported when their parts are defined.
    """
    phi = traj.phase
    T = float(traj.times[-1])
    if T <= 0:
        raise ValueError("trajectory horizon must be positive")
    out: dict[str, float] = {}
    out["lambda1"] = max(hs_norm(f, s) for f in traj.snapshots)
    out["lambda2"] = mixed_norm(traj, 2.0, 4.0) / A2(phi, T)
    if alpha(2.0, 4.0, s, phi.p) > 0:
        out["lambda3"] = mixed_norm(traj, 2.0, 4.0, op=lambda f: fractional_D(f, s)) \
            / A3(phi, s, T)
    out["lambda4"] = mixed_norm(traj, 2.0, 4.0,
                                op=lambda f: derivative(fractional_D(f, s)))
    out["lambda5"] = mixed_norm(traj, 2.0, 4.0, op=derivative)
    if alpha(2.0, INF, 1.0, phi.p) > 0:
        out["lambda6"] = mixed_norm(traj, 2.0, INF, op=derivative) / A6(phi, T)
    if r is not None:
        out["lambda7"] = max(weighted_norm(f, WeightSpec("poly", r))
                             for f in traj.snapshots)
    if b is not None:
        out["lambda8"] = max(weighted_norm(f, WeightSpec("exp", b))
                             for f in traj.snapshots)
    if "lambda3" in out:
        out["Lambda"] = sum(out[k] for k in
                            ("lambda1", "lambda2", "lambda3", "lambda4", "lambda5"))
        if "lambda6" in out and "lambda7" in out:
            out["Omega"] = out["Lambda"] + out["lambda6"] + out["lambda7"]
        if "lambda6" in out and "lambda8" in out:
            out["Theta"] = out["Lambda"] + out["lambda6"] + out["lambda8"]
    return out


# --- ensemble verification of the linear-flow bounds ------------------------

SMOOTHING_CHECKS = ("C1", "C2", "C3", "C4", "P_inf")


@dataclass
class NormEnsembleReport:
    """Bound ratios LHS/RHS over a seeded ensemble; the RHS constant is 1."""

    check: str
    sample_count: int
    seed: int
    T: float
    params: dict
    ratios: np.ndarray
    max_ratio: float
    fitted_constant: float


def _linear_trajectory(u0: SpectralField, phi: symbols.PhaseFunction,
                       T: float, nt: int) -> Trajectory:
    times = np.linspace(0.0, T, nt + 1)
    snaps = [apply_multiplier(u0, symbols.semigroup_multiplier(phi, t, u0.grid.xi))
             for t in times]
    return Trajectory(u0.grid, phi, times, snaps, "linear")


def resolve_workers(workers: int | None = None) -> int:
    """Worker count for ensemble loops, bounded by the DKLB_THREADS env var."""
    env = os.environ.get("DKLB_THREADS")
    try:
        bound = int(env) if env else 1
    except ValueError:
        raise ValueError(f"DKLB_THREADS must be an integer, got {env!r}") from None
    if bound < 1:
        raise ValueError(f"DKLB_THREADS must be >= 1, got {bound}")
    return max(1, min(workers or bound, bound))


def verify_smoothing(check: str, phi: symbols.PhaseFunction, *,
                     grid: SpectralGrid | None = None, T: float = 1.0,
                     size: int = 100, seed: int = 2024, nt: int = 48,
                     s: float = 0.0, a: float = 2.0, b: float = 4.0,
                     q: float = 1.0, workers: int | None = None
                     ) -> NormEnsembleReport:
    """Measure one linear-flow bound over a seeded random ensemble.

    check selects the inequality:
      C1     ||D^s V u0||_{La_T Linf_x}  vs  A(a,inf,s)(T) ||u0||_{La1_x}
      C2     ||D^s V u0||_{L2_T Lb_x}    vs  A(2,b,s)(T)   ||u0||_{L2}
      C3     ||D^1 V u0||_{L2_T Lb_x}    vs  A(2,b,1-s)(T) ||D^s u0||_{L2}
      C4     ||D^s V u0||_{L2_T L2_x}    vs  A(2,2,s)(T)   ||u0||_{L2}
      P_inf  ||D^q V u0||_{Linf_x L2_T}  vs  ||u0||_{L2}   (fitted constant)

    Parameters outside an inequality's hypothesis range raise ValueError.
    Ratios use constant 1 on the right, so the fitted constant is simply the
    ensemble maximum.
    """
    if check not in SMOOTHING_CHECKS:
        raise ValueError(f"unknown check {check!r}; choose from {SMOOTHING_CHECKS}")
    if grid is None:
        grid = SpectralGrid(256, 40.0)
    if T <= 0:
        raise ValueError("T must be positive")

    p = phi.p
    if check == "C1":
        if a < 2:
            raise ValueError(f"C1 requires a >= 2, got a={a}")
        params = SmoothingParams(a, INF, s, p, phi.eta)  # validates alpha > 0
        a1 = conjugate_exponent(a)
        const = smoothing_A(a, INF, s, phi, T)

        def ratio(u0, traj):
            rhs = const * lp_norm(u0, a1)
            lhs = mixed_norm(traj, a, INF, op=lambda f: fractional_D(f, s))
            return lhs / rhs if rhs else 0.0

        used = {"a": a, "s": s, "alpha": params.alpha}
    elif check == "C2":
        if b < 2:
            raise ValueError(f"C2 requires b >= 2, got b={b}")
        params = SmoothingParams(2.0, b, s, p, phi.eta)
        const = smoothing_A(2.0, b, s, phi, T)

        def ratio(u0, traj):
            rhs = const * l2_norm(u0)
            lhs = mixed_norm(traj, 2.0, b, op=lambda f: fractional_D(f, s))
            return lhs / rhs if rhs else 0.0

        used = {"b": b, "s": s, "alpha": params.alpha}
    elif check == "C3":
        if b < 2:
            raise ValueError(f"C3 requires b >= 2, got b={b}")
        if not 0 <= s <= 1:
            raise ValueError(f"C3 requires 0 <= s <= 1, got s={s}")
        params = SmoothingParams(2.0, b, 1.0 - s, p, phi.eta)
        const = smoothing_A(2.0, b, 1.0 - s, phi, T)

        def ratio(u0, traj):
            rhs = const * l2_norm(fractional_D(u0, s))
            lhs = mixed_norm(traj, 2.0, b, op=lambda f: fractional_D(f, 1.0))
            return lhs / rhs if rhs else 0.0

        used = {"b": b, "s": s, "alpha": params.alpha}
    elif check == "C4":
        params = SmoothingParams(2.0, 2.0, s, p, phi.eta)
        const = smoothing_A(2.0, 2.0, s, phi, T)

        def ratio(u0, traj):
            rhs = const * l2_norm(u0)
            lhs = mixed_norm(traj, 2.0, 2.0, op=lambda f: fractional_D(f, s))
            return lhs / rhs if rhs else 0.0

        used = {"s": s, "alpha": params.alpha}
    else:  # P_inf
        if q < 0:
            raise ValueError(f"P_inf requires q >= 0, got q={q}")
        if not p > 2 * q:
            raise ValueError(f"P_inf requires p > 2q, got p={p}, q={q}")

        def ratio(u0, traj):
            rhs = l2_norm(u0)
            lhs = mixed_norm(traj, INF, 2.0, order="x_outer_t_inner",
                             op=lambda f: fractional_D(f, q))
            return lhs / rhs if rhs else 0.0

        used = {"q": q}

    samples = sample_ensemble(grid, size, seed)

    def one(u0):
        return ratio(u0, _linear_trajectory(u0, phi, T, nt))

    n_workers = resolve_workers(workers)
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            ratios = np.array(list(pool.map(one, samples)))
    else:
        ratios = np.array([one(u0) for u0 in samples])

    if not np.all(np.isfinite(ratios)):
        raise ValueError("non-finite bound ratio in ensemble")
    mx = float(np.max(ratios)) if len(ratios) else 0.0
    return NormEnsembleReport(check, size, seed, T, used, ratios, mx, mx)


def interpolation_check(f: SpectralField, a: float, b: float, theta: float) -> float:
    """Ratio of ||<x>^(theta*b) J^((1-theta)*a) f|| to the interpolated product.

    Measures || <x>^(tb) J^((1-t)a) f ||_{L2} against
    || <x>^b f ||^theta * || J^a f ||^(1-theta); scale-invariant by
    homogeneity, 0 for the zero field.
    """
    if not 0 <= theta <= 1:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    if a < 0 or b < 0:
        raise ValueError(f"orders must be nonnegative, got a={a}, b={b}")
    denom = (weighted_norm(f, bracket_weight(b)) ** theta
             * hs_norm(f, a) ** (1.0 - theta))
    if denom == 0.0:
        return 0.0
    num = weighted_norm(fractional_J(f, (1.0 - theta) * a), bracket_weight(theta * b))
    return num / denom
