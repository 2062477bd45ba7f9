"""Gap equation, critical temperature, order parameters and the mean-field flow."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from openbcs.generator import generator_s0_closed, generator_splus_sminus_closed
from openbcs.meanfield import MeanFieldPoint, pulsation
from openbcs.reservoir import ReservoirSpec, gamma_resonant

BRACKET_LO = 1e-8
BRACKET_HI = 1 - 1e-12
CRITICAL_WINDOW = 1e-6


class InaccessibleResonanceError(ValueError):
    """The nu = 0 slice fixes x with x^2 > xi*^2, leaving no admissible y."""


class BoundaryExit(ArithmeticError):
    """A flow stage left x^2 + 4y <= 1, y >= 0."""


class UnphysicalRatioError(ValueError):
    """|2 eps / g| > 1 puts x = S^0 outside [-1, 1]."""


def gap_function(xi, beta: float, g: float):
    """G(xi) = exp(beta g xi) - (1 + xi)/(1 - xi) on [0, 1)."""
    xi_arr = np.asarray(xi, dtype=float)
    if np.any(xi_arr >= 1) or np.any(xi_arr < 0):
        raise ValueError("gap function is defined on 0 <= xi < 1")
    val = np.exp(beta * g * xi_arr) - (1 + xi_arr) / (1 - xi_arr)
    return float(val) if val.ndim == 0 else val


def pole_free_gap(xi, beta: float, g: float):
    """F(xi) = exp(beta g xi)(1 - xi) - (1 + xi), same zeros as G without the pole."""
    xi = np.asarray(xi, dtype=float)
    val = np.exp(beta * g * xi) * (1 - xi) - (1 + xi)
    return float(val) if val.ndim == 0 else val


def _log_gap(xi: float, k: float) -> float:
    # sign(F) = sign(k xi + log(1 - xi) - log(1 + xi)); no overflow for any k xi
    return k * xi - 2 * math.atanh(xi)


def _series_gap(xi: float, k: float) -> tuple[float, float]:
    """F(xi)/xi and its derivative from the Taylor series, for xi << 1."""
    # F(xi) = sum_n c_n xi^n, c_n = k^(n-1)/(n-1)! (k/n - 1) for n >= 2, c_1 = k - 2
    val = k - 2.0
    der = 0.0
    coef = 1.0  # k^(n-1)/(n-1)!
    for n in range(2, 30):
        coef *= k / (n - 1)
        c = coef * (k / n - 1)
        val += c * xi ** (n - 1)
        der += (n - 1) * c * xi ** (n - 2)
    return val, der


def sign_changes(beta: float, g: float, n_scan: int = 1000) -> int:
    """Sign changes of F on an interior scan of (0, 1)."""
    k = beta * g
    xs = np.linspace(BRACKET_LO, BRACKET_HI, n_scan)
    signs = np.sign([_log_gap(float(v), k) for v in xs])
    signs = signs[signs != 0]
    return int(np.count_nonzero(np.diff(signs)))


@dataclass(frozen=True)
class GapRoot:
    xi: float
    status: str  # "solved", "critical window" or "saturated"
    residual: float
    iterations: int


def solve_gap_detailed(beta: float, g: float, tol: float = 1e-14) -> GapRoot | None:
    """Nontrivial root of the gap equation, or None when beta g <= 2."""
    if tol < 1e-14:
        raise ValueError("tol below 1e-14 is not reachable in double precision")
    if beta <= 0 or g <= 0:
        raise ValueError("beta and g must be positive")
    k = beta * g
    if k <= 2:
        return None
    if k - 2 < CRITICAL_WINDOW:
        # root ~ sqrt(3(k-2)/2): too shallow for the direct form, solve F/xi = 0 by series
        xi = math.sqrt(1.5 * (k - 2))
        it = 0
        for it in range(1, 60):
            val, der = _series_gap(xi, k)
            step = val / der
            xi -= step
            if abs(step) <= 1e-16 * xi:
                break
        return GapRoot(xi, "critical window", abs(_series_gap(xi, k)[0] * xi), it)

    lo, hi = BRACKET_LO, BRACKET_HI
    if _log_gap(hi, k) >= 0:
        # root = 1 - 2 exp(-k) + ..., closer to 1 than the bracket; iterate xi = tanh(k xi / 2)
        xi = 1.0
        for it in range(1, 20):
            new = math.tanh(k * xi / 2)
            if new == xi:
                break
            xi = new
        xi = min(xi, math.nextafter(1.0, 0.0))
        return GapRoot(xi, "saturated", abs(math.tanh(k * xi / 2) - xi), it)
    if not _log_gap(lo, k) > 0:
        raise ArithmeticError(f"gap root not bracketed for beta*g = {k}")
    it = 0
    while hi - lo > 1e-12 and it < 200:
        mid = 0.5 * (lo + hi)
        if _log_gap(mid, k) > 0:
            lo = mid
        else:
            hi = mid
        it += 1
    xi = 0.5 * (lo + hi)
    # Newton polish on k xi - 2 artanh(xi); derivative k - 2/(1 - xi^2)
    for _ in range(20):
        d = k - 2.0 / ((1 - xi) * (1 + xi))
        step = _log_gap(xi, k) / d
        new = min(max(xi - step, lo), hi)
        it += 1
        if abs(new - xi) <= 4e-16 * xi:
            xi = new
            break
        xi = new
    # F itself loses digits to the (1 - xi) cancellation near 1; the tanh form does not
    res = abs(math.tanh(k * xi / 2) - xi)
    if res > max(tol, 1e-13):
        raise ArithmeticError(f"gap root polish stalled at |tanh(k xi/2) - xi| = {res:.3g}")
    return GapRoot(xi, "solved", res, it)


def solve_gap(beta: float, g: float, tol: float = 1e-14) -> float | None:
    root = solve_gap_detailed(beta, g, tol)
    return None if root is None else root.xi


def critical_temperature(g: float, k_B: float = 1.0) -> float:
    if g <= 0 or k_B <= 0:
        raise ValueError("g and k_B must be positive")
    return g / (2 * k_B)


def tanh_gap_residual(omega: float, beta: float, g: float) -> float:
    """g tanh(beta omega / 2) - omega."""
    if not 0 < omega < g:
        raise ValueError("tanh form needs 0 < omega < g")
    return g * math.tanh(beta * omega / 2) - omega


def order_parameters(xi_star: float, epsilon_tilde: float, g: float) -> tuple[float, float, float]:
    """(x, y, delta) on the nu = 0 slice for a gap root xi*."""
    x = -2 * epsilon_tilde / g + 0.0  # no negative zero
    if abs(x) > 1:
        raise UnphysicalRatioError(f"x = -2 eps/g = {x:.6g} lies outside [-1, 1]")
    if xi_star**2 < x**2:
        raise InaccessibleResonanceError(
            f"xi*^2 = {xi_star**2:.6g} < x^2 = {x**2:.6g}: no admissible y on the nu = 0 slice"
        )
    y = (xi_star**2 - x**2) / 4
    return x, y, 0.5 * math.sqrt(y)


@dataclass(frozen=True)
class GapSolution:
    beta: float
    g: float
    epsilon_tilde: float
    k_B: float
    xi_star: float | None
    omega_star: float | None
    x: float
    y: float | None
    delta: float | None
    phase: str
    t_critical: float
    status: str = "ok"
    tanh_residual: float | None = field(default=None)

    @property
    def temperature(self) -> float:
        return 1.0 / (self.k_B * self.beta)


def gap_solution(beta: float, g: float, epsilon_tilde: float = 0.0,
                 k_B: float = 1.0) -> GapSolution:
    """Solve the gap equation and derive the order parameters; never raises on physics."""
    tc = critical_temperature(g, k_B)
    x = -2 * epsilon_tilde / g + 0.0  # no negative zero
    root = solve_gap_detailed(beta, g)
    if root is None:
        return GapSolution(beta, g, epsilon_tilde, k_B, None, None, x, None, None,
                           "normal", tc)
    xi = root.xi
    omega = g * xi
    status = "ok" if root.status == "solved" else root.status
    try:
        x, y, delta = order_parameters(xi, epsilon_tilde, g)
    except InaccessibleResonanceError:
        y = delta = None
        status = "resonance inaccessible"
    except UnphysicalRatioError:
        y = delta = None
        status = "unphysical epsilon/g"
    return GapSolution(beta, g, epsilon_tilde, k_B, xi, omega, x, y, delta,
                       "superconducting", tc, status, tanh_gap_residual(omega, beta, g))


def phase_diagram(t_grid: Sequence[float], g_grid: Sequence[float], epsilon_tilde: float = 0.0,
                  k_B: float = 1.0) -> list[GapSolution]:
    """One GapSolution per (T, g), T outer and g inner."""
    if len(t_grid) == 0 or len(g_grid) == 0:
        raise ValueError("grids must be nonempty")
    if any(v <= 0 for v in t_grid) or any(v <= 0 for v in g_grid):
        raise ValueError("grid values must be positive")
    rows = []
    for temp in t_grid:
        for g in g_grid:
            beta = 1.0 / (k_B * temp)
            try:
                rows.append(gap_solution(beta, g, epsilon_tilde, k_B))
            except (ArithmeticError, ValueError) as exc:
                rows.append(GapSolution(beta, g, epsilon_tilde, k_B, None, None,
                                        -2 * epsilon_tilde / g, None, None, "unknown",
                                        critical_temperature(g, k_B), f"error: {exc}"))
    return rows


# --- mean-field flow -------------------------------------------------------------------

@dataclass(frozen=True)
class FlowRow:
    t: float
    x: float
    y: float
    f1: float
    f2: float
    status: str = "ok"


def flow_field(x: float, y: float, epsilon_tilde: float, g: float,
               spec: ReservoirSpec) -> tuple[float, float]:
    """(dx/dt, dy/dt) from the closed forms, with resonant Gammas at the current point."""
    if y < 0 or x * x + 4 * y > 1 + 1e-12:
        raise BoundaryExit(f"(x, y) = ({x:.6g}, {y:.6g}) left the admissible region")
    if y == 0:
        return 0.0, 0.0
    point = MeanFieldPoint(x, y, epsilon_tilde, g)
    omega, nu = pulsation(point)
    gammas = gamma_resonant(spec, omega, nu)
    return generator_s0_closed(point, gammas), generator_splus_sminus_closed(point, gammas)


def _rk4(x, y, h, field_fn):
    k1 = field_fn(x, y)
    k2 = field_fn(x + 0.5 * h * k1[0], y + 0.5 * h * k1[1])
    k3 = field_fn(x + 0.5 * h * k2[0], y + 0.5 * h * k2[1])
    k4 = field_fn(x + h * k3[0], y + h * k3[1])
    return (x + h * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]) / 6,
            y + h * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]) / 6)


def meanfield_flow(initial: MeanFieldPoint, spec: ReservoirSpec, t_max: float, dt: float,
                   step_tol: float = 1e-6) -> list[FlowRow]:
    """Integrate dx/dt = f1, dy/dt = f2 with classical RK4.

    Each step is also taken as two half steps; their difference (/15, the
    Richardson estimate) must stay below ``step_tol``. The run stops with a
    flagged row if that fails or the point leaves x^2 + 4y <= 1, y > 0.
    """
    if t_max <= 0 or dt <= 0:
        raise ValueError("t_max and dt must be positive")
    if not initial.admissible or initial.y <= 0:
        raise ValueError("flow needs an admissible start with y > 0")
    eps, g = initial.epsilon_tilde, initial.g

    def fld(x, y):
        return flow_field(x, y, eps, g, spec)

    x, y = initial.x, initial.y
    n_steps = int(round(t_max / dt))
    rows = []
    f1, f2 = fld(x, y)
    rows.append(FlowRow(0.0, x, y, f1, f2))
    for i in range(1, n_steps + 1):
        try:
            full = _rk4(x, y, dt, fld)
            half = _rk4(*_rk4(x, y, dt / 2, fld), dt / 2, fld)
        except BoundaryExit:
            rows.append(FlowRow(i * dt, x, y, math.nan, math.nan, "boundary exit"))
            break
        except (ValueError, ArithmeticError) as exc:
            rows.append(FlowRow(i * dt, x, y, math.nan, math.nan, f"step failure: {exc}"))
            break
        err = max(abs(full[0] - half[0]), abs(full[1] - half[1])) / 15
        x, y = half
        if err > step_tol:
            rows.append(FlowRow(i * dt, x, y, math.nan, math.nan,
                                f"step failure: error estimate {err:.3g}"))
            break
        if y <= 0 or x * x + 4 * y > 1 + 1e-12:
            rows.append(FlowRow(i * dt, x, y, math.nan, math.nan, "boundary exit"))
            break
        f1, f2 = fld(x, y)
        rows.append(FlowRow(i * dt, x, y, f1, f2))
    return rows
