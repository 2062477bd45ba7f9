"""Semiclassical single-site layer: classical intensive values and free evolution."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace

import numpy as np

from openbcs.spin_algebra import IDENTITY, SIGMA_MINUS, SIGMA_PLUS, SIGMA_ZERO


class DegeneratePointError(ValueError):
    """The point has omega = 0 or y = 0, where the rho operators are undefined."""


class InadmissiblePointError(ValueError):
    """(x, y) cannot be realized by a single-site density matrix."""


@dataclass(frozen=True)
class MeanFieldPoint:
    """Classical values x = S^0, y = S^+S^-, s = S^+ and the couplings.

    ``s`` defaults to the real gauge +sqrt(y).
    """

    x: float
    y: float
    epsilon_tilde: float
    g: float
    s: complex = field(default=None)

    def __post_init__(self):
        if self.y < 0:
            raise ValueError(f"y must be nonnegative, got {self.y}")
        if self.g <= 0:
            raise ValueError(f"g must be positive, got {self.g}")
        if self.s is None:
            object.__setattr__(self, "s", complex(math.sqrt(self.y)))
        else:
            object.__setattr__(self, "s", complex(self.s))
            if abs(abs(self.s) ** 2 - self.y) > 1e-14 * max(1.0, self.y):
                raise ValueError(f"|s|^2 = {abs(self.s) ** 2} does not match y = {self.y}")

    @property
    def bloch_length(self) -> float:
        return math.sqrt(self.x**2 + 4 * self.y)

    @property
    def admissible(self) -> bool:
        return self.x**2 + 4 * self.y <= 1 + 1e-14

    def with_phase(self, phi: float) -> MeanFieldPoint:
        """Gauge-rotated copy, s -> s * exp(i phi)."""
        return replace(self, s=self.s * cmath.exp(1j * phi))


def pulsation(point: MeanFieldPoint) -> tuple[float, float]:
    """Return (omega, nu) = (g sqrt(x^2 + 4y), 2 eps + g x)."""
    r2 = point.x**2 + 4 * point.y
    if r2 <= 0:
        raise DegeneratePointError("omega vanishes at x = y = 0")
    return point.g * math.sqrt(r2), 2 * point.epsilon_tilde + point.g * point.x


def resonance_frequencies(point: MeanFieldPoint, epsilon_p: float) -> tuple[float, float, float]:
    """nu_alpha(p) = nu - eps_p + alpha*omega for alpha = 0, +, -."""
    omega, nu = pulsation(point)
    base = nu - epsilon_p
    return base, base + omega, base - omega


def rho_operators(point: MeanFieldPoint) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three 2x2 operators (rho_0, rho_+, rho_-) splitting sigma^+(t) by frequency."""
    omega, _ = pulsation(point)
    if point.y == 0:
        raise DegeneratePointError("y = 0 makes omega -/+ g x vanish")
    g, x, s = point.g, point.x, point.s
    sb = s.conjugate()
    wp, wm = omega + g * x, omega - g * x
    if wp == 0 or wm == 0:
        raise DegeneratePointError("omega +/- g x vanishes")
    pre = g * s / omega**2
    rho0 = g * pre * (2 * sb * SIGMA_PLUS + x * SIGMA_ZERO + 2 * s * SIGMA_MINUS)
    rhop = pre * (g * sb * (wm / wp) * SIGMA_PLUS + 0.5 * wm * SIGMA_ZERO - g * s * SIGMA_MINUS)
    rhom = pre * (g * sb * (wp / wm) * SIGMA_PLUS - 0.5 * wp * SIGMA_ZERO - g * s * SIGMA_MINUS)
    return rho0, rhop, rhom


def _phases(point: MeanFieldPoint, t: float) -> tuple[complex, complex, complex]:
    omega, nu = pulsation(point)
    return (cmath.exp(1j * nu * t), cmath.exp(1j * (nu + omega) * t),
            cmath.exp(1j * (nu - omega) * t))


def sigma_plus_evolution(point: MeanFieldPoint, t: float) -> np.ndarray:
    """Semiclassical sigma^+(t) = sum_alpha exp(i(nu + alpha omega)t) rho_alpha."""
    rhos = rho_operators(point)
    return sum(ph * r for ph, r in zip(_phases(point, t), rhos))


def sigma_minus_evolution(point: MeanFieldPoint, t: float) -> np.ndarray:
    """sigma^-(t), written out from the conjugated frequency decomposition."""
    rhos = rho_operators(point)
    return sum(ph.conjugate() * r.conj().T for ph, r in zip(_phases(point, t), rhos))


def sigma_zero_evolution(point: MeanFieldPoint, t: float) -> np.ndarray:
    """sigma^0(t) integrated in closed form from its semiclassical equation.

    d sigma^0/dt = 2ig (sigma^+(t) S^-(t) - sigma^-(t) S^+(t)) with
    S^+(t) = s exp(i nu t); the nu phases cancel and each rho_alpha
    contributes int_0^t exp(i alpha omega t') dt'.
    """
    omega, _ = pulsation(point)
    rhos = rho_operators(point)
    s = point.s
    acc = np.zeros((2, 2), dtype=complex)
    for alpha, r in zip((0, 1, -1), rhos):
        if alpha == 0:
            e = complex(t)
        else:
            e = (cmath.exp(1j * alpha * omega * t) - 1) / (1j * alpha * omega)
        acc += s.conjugate() * e * r - s * e.conjugate() * r.conj().T
    return SIGMA_ZERO + 2j * point.g * acc


def classical_flow_residual(point: MeanFieldPoint, t: float, dt: float = 1e-4) -> float:
    """Max-entry mismatch between a central difference of sigma^+(t) and its ODE."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    _, nu = pulsation(point)
    deriv = (sigma_plus_evolution(point, t + dt) - sigma_plus_evolution(point, t - dt)) / (2 * dt)
    rhs = (2j * point.epsilon_tilde * sigma_plus_evolution(point, t)
           + 1j * point.g * point.s * cmath.exp(1j * nu * t) * sigma_zero_evolution(point, t))
    return float(np.max(np.abs(deriv - rhs)))


def meanfield_state(point: MeanFieldPoint) -> np.ndarray:
    """Single-site density matrix with <sigma^0> = x and <sigma^+> = s."""
    if not point.admissible:
        raise InadmissiblePointError(
            f"Bloch length sqrt(x^2+4y) = {point.bloch_length:.6g} exceeds 1"
        )
    s = point.s
    sx = SIGMA_PLUS + SIGMA_MINUS
    sy = -1j * (SIGMA_PLUS - SIGMA_MINUS)
    return 0.5 * (IDENTITY + 2 * s.real * sx + 2 * s.imag * sy + point.x * SIGMA_ZERO)
