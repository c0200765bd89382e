"""Time evolution: linear flow, Picard iteration, ETDRK4, existence horizon.

The equation integrated here is

    u_t + u_xxx + eta*L*u + u*u_x = 0,      (L u)^(xi) = -Phi(xi) u^(xi),

whose linear part is the diagonal multiplier exp(i*t*xi^3 + eta*t*Phi(xi)).
Two independent routes to the same solution are kept deliberately separate:
the Picard iteration solves the integral (Duhamel) form on a coarse stored
time grid, while ETDRK4 steps the differential form with exponential
integrator coefficients.  Cross-checking them is the point, so neither may
call the other.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import norms, symbols
from .errors import NumericalError
from .grid import (
    SpectralField,
    Trajectory,
    apply_multiplier,
    dealiased_product,
    derivative,
    l2_norm,
    multiplier_preserves_real,
)


def apply_semigroup(phi: symbols.PhaseFunction, t: float,
                    f: SpectralField) -> SpectralField:
    """Evolve a field by the linear flow for time t >= 0."""
    return apply_multiplier(f, symbols.semigroup_multiplier(phi, t, f.grid.xi))


def linear_trajectory(u0: SpectralField, phi: symbols.PhaseFunction, T: float,
                      nt: int) -> Trajectory:
    """Linear flow sampled on a uniform grid of nt+1 time nodes."""
    times = np.linspace(0.0, T, nt + 1)
    snaps = [apply_semigroup(phi, float(t), u0) for t in times]
    return Trajectory(u0.grid, phi, times, snaps, "linear")


def nonlinearity(f: SpectralField) -> SpectralField:
    """The advection term as fed to Duhamel: -1/2 d/dx of the dealiased square.

    Equals -u*u_x up to dealiasing; its zero mode vanishes identically
    because it is a total derivative.
    """
    return derivative(dealiased_product(f, f)) * (-0.5)


# --- Picard iteration on the integral form ----------------------------------


@dataclass
class ContractionReport:
    """Convergence record of one Picard run."""

    converged: bool
    iterations: int
    iterate_distances: list[float]
    lambda_values: list[dict[str, float]]
    z_bound: float
    T_used: float
    tol: float
    notes: list[str] = field(default_factory=list)

    @property
    def distance_ratios(self) -> list[float]:
        d = self.iterate_distances
        return [d[i] / d[i - 1] if d[i - 1] > 0 else 0.0 for i in range(1, len(d))]


def _simpson_weights(i: int, dt: float) -> np.ndarray:
    """Quadrature weights over nodes 0..i for int_0^{t_i}.

    Composite Simpson when the panel count i is even; for odd i >= 3 Simpson
    on the first i-3 panels plus a 3/8 tail; a single trapezoid panel at
    i = 1.  The two low-order closures touch only O(dt^3) terms.
    """
    w = np.zeros(i + 1)
    if i == 0:
        return w
    if i == 1:
        w[:2] = dt / 2.0
        return w
    if i % 2 == 0:
        w[0] = w[i] = dt / 3.0
        w[1:i:2] = 4.0 * dt / 3.0
        w[2:i:2] = 2.0 * dt / 3.0
        return w
    head = i - 3
    if head:
        w[0] = dt / 3.0
        w[1:head:2] = 4.0 * dt / 3.0
        w[2:head:2] = 2.0 * dt / 3.0
        w[head] = dt / 3.0
    w[head] += 3.0 * dt / 8.0
    w[head + 1] += 9.0 * dt / 8.0
    w[head + 2] += 9.0 * dt / 8.0
    w[i] += 3.0 * dt / 8.0
    return w


def picard_solve(u0: SpectralField, phi: symbols.PhaseFunction, T: float,
                 nt: int = 64, tol: float = 1e-8, max_iter: int = 25,
                 s: float = 0.0, nonlinear: bool = True, cstar: float = 1.0,
                 weight_r: float | None = None, weight_b: float | None = None
                 ) -> tuple[Trajectory, ContractionReport]:
    """Solve the integral form by successive substitution on a stored grid.

    The Duhamel map is w -> V(t)u0 + int_0^t V(t-t') N(w(t')) dt' with
    N(w) = -1/2 d/dx w^2, discretized by composite Simpson on nt+1 uniform
    nodes with the exact flow multiplier at every quadrature node.  Iterates
    start from the linear flow; convergence is sup-in-time H^s distance
    <= tol between successive iterates.

    Returns the last iterate as a trajectory plus a ContractionReport with
    per-iterate distances and layered norm diagnostics.  Non-convergence is
    reported, not raised; NaN/overflow aborts with NumericalError.
    """
    if T <= 0:
        raise ValueError(f"horizon T must be positive, got {T}")
    if nt < 2 or nt % 2:
        raise ValueError(f"nt must be a positive even integer, got {nt}")
    if cstar <= 0:
        raise ValueError(f"cstar must be positive, got {cstar}")
    dt = T / nt
    times = np.linspace(0.0, T, nt + 1)
    xi = u0.grid.xi

    # exact flow multipliers for every node separation k*dt
    mults = [symbols.semigroup_multiplier(phi, k * dt, xi) for k in range(nt + 1)]
    weights = [_simpson_weights(i, dt) for i in range(nt + 1)]

    linear = [apply_multiplier(u0, mults[i]) for i in range(nt + 1)]

    def duhamel(iterate: list[SpectralField]) -> list[SpectralField]:
        if not nonlinear:
            return [f.copy() for f in linear]
        nl = [nonlinearity(f) for f in iterate]
        out = []
        for i in range(nt + 1):
            acc = linear[i].coeffs.copy()
            w = weights[i]
            for j in range(i + 1):
                if w[j]:
                    acc += w[j] * mults[i - j] * nl[j].coeffs
            keep_real = linear[i].is_real and all(f.is_real for f in nl[: i + 1])
            out.append(SpectralField(u0.grid, acc, keep_real))
        return out

    notes: list[str] = []
    if phi.p <= 2.5:
        notes.append(
            f"p={phi.p:g} <= 5/2: the layered contraction norms are outside "
            "their validity range; diagnostics only"
        )

    z_bound = 2.0 * cstar * norms.hs_norm(u0, s)
    current = linear
    distances: list[float] = []
    lambdas: list[dict[str, float]] = []
    converged = False
    iterations = 0
    for _ in range(max_iter):
        new = duhamel(current)
        iterations += 1
        if not all(np.all(np.isfinite(f.coeffs)) for f in new):
            raise NumericalError(
                f"Picard iterate {iterations} lost finiteness (NaN/overflow)"
            )
        dist = max(
            norms.hs_norm(a - b, s) for a, b in zip(new, current)
        )
        distances.append(dist)
        traj = Trajectory(u0.grid, phi, times, new, "picard")
        lambdas.append(norms.lambda_diagnostics(traj, s, weight_r, weight_b))
        current = new
        if dist <= tol:
            converged = True
            break

    if not converged:
        notes.append(
            f"no fixed point after {iterations} iterations: last distance "
            f"{distances[-1]:.3e} above tol {tol:g}; partial trajectory returned"
        )
    report = ContractionReport(converged, iterations, distances, lambdas,
                               z_bound, T, tol, notes)
    return Trajectory(u0.grid, phi, times, current, "picard"), report


# --- ETDRK4 on the differential form ----------------------------------------


def _etdrk4_coeffs(z: np.ndarray, dt: float, contour_points: int = 32):
    """Exponential-integrator coefficients Q, f1, f2, f3 for nodes z = dt*c.

    Entire functions of z evaluated by averaging over a unit circle around
    each node (full circle: the symbol is complex, so conjugate symmetry may
    not be assumed); a Taylor series takes over for |z| < 1e-4 where the
    direct formulas cancel catastrophically.
    """
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-4
    zs = np.where(small, 1.0, z)  # placeholder values, overwritten below
    theta = 2.0 * np.pi * (np.arange(contour_points) + 0.5) / contour_points
    r = zs[:, None] + np.exp(1j * theta)[None, :]
    er = np.exp(r)
    Q = dt * np.mean((np.exp(r / 2.0) - 1.0) / r, axis=1)
    f1 = dt * np.mean((-4.0 - r + er * (4.0 - 3.0 * r + r**2)) / r**3, axis=1)
    f2 = dt * np.mean((2.0 + r + er * (-2.0 + r)) / r**3, axis=1)
    f3 = dt * np.mean((-4.0 - 3.0 * r - r**2 + er * (4.0 - r)) / r**3, axis=1)
    if np.any(small):
        zz = z[small]
        Q[small] = dt * (0.5 + zz / 8.0 + zz**2 / 48.0 + zz**3 / 384.0)
        f1[small] = dt * (1.0 / 6.0 + zz / 6.0 + 3.0 * zz**2 / 40.0 + zz**3 / 45.0)
        f2[small] = dt * (1.0 / 6.0 + zz / 12.0 + zz**2 / 40.0 + zz**3 / 180.0)
        f3[small] = dt * (1.0 / 6.0 + 0.0 * zz - zz**2 / 120.0 - zz**3 / 360.0)
    return Q, f1, f2, f3


def etdrk4_solve(u0: SpectralField, phi: symbols.PhaseFunction, T: float,
                 dt: float, nonlinear: bool = True, snapshot_stride: int = 1,
                 contour_points: int = 32) -> Trajectory:
    """Fourth-order exponential time differencing on the differential form.

    T must be an integer multiple of dt.  With nonlinear=False each step is
    exactly the flow multiplier, reproducing apply_semigroup.  NaN or
    overflow aborts with the offending step index.
    """
    if dt <= 0 or T <= 0:
        raise ValueError("T and dt must be positive")
    steps_f = T / dt
    steps = int(round(steps_f))
    if steps < 1 or abs(steps_f - steps) > 1e-9 * max(1.0, steps_f):
        raise ValueError(f"T={T} is not an integer multiple of dt={dt}")
    if snapshot_stride < 1:
        raise ValueError("snapshot_stride must be >= 1")

    grid = u0.grid
    xi = grid.xi
    E = symbols.semigroup_multiplier(phi, dt, xi)
    E2 = symbols.semigroup_multiplier(phi, dt / 2.0, xi)
    c = 1j * xi**3 + phi.eta * symbols.phase_eval(phi, xi)
    z = np.minimum(c.real * dt, symbols.EXP_REAL_CAP) + 1j * c.imag * dt
    Q, f1, f2, f3 = _etdrk4_coeffs(z, dt, contour_points)

    def nl_coeffs(coeffs: np.ndarray, is_real: bool) -> np.ndarray:
        if not nonlinear:
            return np.zeros_like(coeffs)
        f = SpectralField(grid, coeffs, is_real)
        return nonlinearity(f).coeffs

    v = u0.coeffs.copy()
    is_real = u0.is_real and grid_preserves_real(phi, grid)
    times = [0.0]
    snaps = [SpectralField(grid, v.copy(), u0.is_real)]
    for step in range(1, steps + 1):
        Nv = nl_coeffs(v, is_real)
        a = E2 * v + Q * Nv
        Na = nl_coeffs(a, is_real)
        b = E2 * v + Q * Na
        Nb = nl_coeffs(b, is_real)
        cc = E2 * a + Q * (2.0 * Nb - Nv)
        Nc = nl_coeffs(cc, is_real)
        v = E * v + f1 * Nv + 2.0 * f2 * (Na + Nb) + f3 * Nc
        if not np.all(np.isfinite(v)):
            raise NumericalError(f"ETDRK4 lost finiteness at step {step}")
        if step % snapshot_stride == 0 or step == steps:
            times.append(step * dt)
            snaps.append(SpectralField(grid, v.copy(), is_real))
    return Trajectory(grid, phi, np.array(times), snaps, "etdrk4")


def grid_preserves_real(phi: symbols.PhaseFunction, grid) -> bool:
    """True when the flow multiplier keeps real data real on this grid."""
    m = symbols.semigroup_multiplier(phi, 1e-3, grid.xi)
    return multiplier_preserves_real(grid, m)


def dissipation_residuals(traj: Trajectory) -> np.ndarray:
    """Per-step residual of the energy balance for the Burgers-type symbol.

    For Phi(xi) = -xi^2 the exact semi-discrete identity is
    d/dt ||u||^2 = -2*eta*||u_x||^2 (the advection term is a total
    derivative and drops out).  Returned is, for each step,

        | (E_{n+1} - E_n)/dt + eta*(D_n + D_{n+1}) | / E_n

    with E = ||u||^2 and D = ||u_x||^2 (trapezoid in time on D).
    """
    eta = traj.phase.eta
    E = np.array([l2_norm(f) ** 2 for f in traj.snapshots])
    D = np.array([l2_norm(derivative(f)) ** 2 for f in traj.snapshots])
    dts = np.diff(traj.times)
    res = np.abs((E[1:] - E[:-1]) / dts + eta * (D[:-1] + D[1:]))
    return np.where(E[:-1] > 0, res / np.where(E[:-1] > 0, E[:-1], 1.0), 0.0)


# --- the existence horizon from the contraction bookkeeping ------------------


def existence_time(u0_hs_norm: float, phi: symbols.PhaseFunction,
                   s: float = 0.0, cstar: float = 1.0) -> tuple[float, float]:
    """Largest horizon (capped at 1) the contraction bookkeeping certifies.

    z0 = 2*cstar*||u0||_{H^s}; the bookkeeping needs a horizon T with
    (A2+A3)(T) < 1/(2*cstar*z0), which exists because both constants vanish
    as T -> 0.  Returns (T0, z0) with T0 = min(1, T~), T~ found by bisection;
    the returned T0 satisfies the strict inequality.  Zero data makes the
    constraint vacuous and returns T0 = 1.
    """
    if u0_hs_norm < 0:
        raise ValueError("norm must be nonnegative")
    if cstar <= 0:
        raise ValueError(f"cstar must be positive, got {cstar}")
    z0 = 2.0 * cstar * u0_hs_norm
    if z0 == 0.0:
        return 1.0, 0.0

    def a_sum(T: float) -> float:
        return norms.A2(phi, T) + norms.A3(phi, s, T)

    threshold = 1.0 / (2.0 * cstar * z0)
    if a_sum(1.0) < threshold:
        return 1.0, z0
    lo = 1.0
    for _ in range(4096):
        lo /= 2.0
        if a_sum(lo) < threshold:
            break
    else:
        raise NumericalError("could not find a horizon satisfying the constraint")
    hi = 2.0 * lo
    for _ in range(200):
        if hi - lo <= 1e-12 * hi:
            break
        mid = 0.5 * (lo + hi)
        if a_sum(mid) < threshold:
            lo = mid
        else:
            hi = mid
    return lo, z0
