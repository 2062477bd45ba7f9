"""Stochastic-limit generator on single-site observables and its closed forms.

The generator is evaluated per site with the intensive operators frozen to
their classical values. ``oracle_compare`` checks the closed expressions for
L(S^0) and L(S^+S^-) against traces of that first-principles evaluation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from openbcs.meanfield import (DegeneratePointError, MeanFieldPoint, meanfield_state,
                               pulsation, rho_operators)
from openbcs.reservoir import GammaSet
from openbcs.spin_algebra import SIGMA_PLUS, SIGMA_ZERO

REL_FLOOR = 1e-12
ABS_FLOOR = 1e-10


def _comm(a, b):
    return a @ b - b @ a


def lindblad_apply(point: MeanFieldPoint, gammas: GammaSet, x: np.ndarray) -> np.ndarray:
    """L(X) for a single-site operator X (no hermiticity assumed)."""
    x = np.asarray(x, dtype=complex)
    out = np.zeros((2, 2), dtype=complex)
    for r, ga, gb in zip(rho_operators(point), gammas.gamma_a, gammas.gamma_b):
        rd = r.conj().T
        out += (_comm(r, x) @ rd * ga + _comm(rd, x) @ r * gb
                - r @ _comm(rd, x) * ga.conjugate() - rd @ _comm(r, x) * gb.conjugate())
    return out


def lindblad_split(point: MeanFieldPoint, gammas: GammaSet,
                   x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(L1(X), L2(X)) for self-adjoint X: each a term plus its adjoint."""
    x = np.asarray(x, dtype=complex)
    l1 = np.zeros((2, 2), dtype=complex)
    l2 = np.zeros((2, 2), dtype=complex)
    for r, ga, gb in zip(rho_operators(point), gammas.gamma_a, gammas.gamma_b):
        rd = r.conj().T
        t1 = _comm(r, x) @ rd * ga
        t2 = _comm(rd, x) @ r * gb
        l1 += t1 + t1.conj().T
        l2 += t2 + t2.conj().T
    return l1, l2


def h_function(point: MeanFieldPoint, gammas: GammaSet) -> float:
    """The scalar whose zeros (with x, y != 0) are the stationary points of the flow."""
    omega, _ = pulsation(point)
    g, x = point.g, point.x
    wp, wm = omega + g * x, omega - g * x
    if wp == 0 or wm == 0:
        raise DegeneratePointError("omega +/- g x vanishes")
    a_p, a_m = gammas.a(1).real, gammas.a(-1).real
    b_p, b_m = gammas.b(1).real, gammas.b(-1).real
    return ((a_p * (omega - g) + b_p * (omega + g)) / wp**2
            + (a_m * (omega + g) + b_m * (omega - g)) / wm**2)


def generator_s0_closed(point: MeanFieldPoint, gammas: GammaSet) -> float:
    """L(S^0) = -8 g^4 x y^2 h / omega^3."""
    if point.y == 0:
        # every rho_alpha carries a factor S^+, so L vanishes identically
        return 0.0
    omega, _ = pulsation(point)
    if point.x == 0:
        return 0.0
    return -8 * point.g**4 * point.x * point.y**2 / omega**3 * h_function(point, gammas)


def generator_splus_sminus_closed(point: MeanFieldPoint, gammas: GammaSet) -> float:
    """L(S^+S^-) = -16 g^4 y^3 h / omega^3."""
    if point.y == 0:
        return 0.0
    omega, _ = pulsation(point)
    return -16 * point.g**4 * point.y**3 / omega**3 * h_function(point, gammas)


def f1_oracle(point: MeanFieldPoint, gammas: GammaSet) -> float:
    """tr(tau L(sigma^0)) in the product state tau realizing the point."""
    tau = meanfield_state(point)
    return float(np.trace(tau @ lindblad_apply(point, gammas, SIGMA_ZERO)).real)


def f2_oracle(point: MeanFieldPoint, gammas: GammaSet) -> float:
    """Limit of (1/N^2) sum_{j != k} <L(sigma_j^+ sigma_k^-)> in the product state.

    Only site j is moved by L in L(sigma_j^+) sigma_k^-; clustering turns the
    pair into <L(sigma^+)> conj(s) plus its conjugate partner. The j = k band
    is O(1/N) and drops out.
    """
    tau = meanfield_state(point)
    lp = complex(np.trace(tau @ lindblad_apply(point, gammas, SIGMA_PLUS)))
    return float(2 * (point.s.conjugate() * lp).real)


def _residual(closed: float, oracle: float) -> tuple[float, bool]:
    """Relative residual where |closed| > 1e-12, absolute otherwise."""
    diff = abs(closed - oracle)
    if abs(closed) > REL_FLOOR:
        return diff / abs(closed), True
    return diff, False


@dataclass(frozen=True)
class GeneratorReport:
    point: MeanFieldPoint
    gammas: GammaSet
    f1_closed: float
    f1_oracle: float
    f2_closed: float
    f2_oracle: float
    res1: float
    res2: float
    res1_relative: bool
    res2_relative: bool

    @property
    def abs1(self) -> float:
        return abs(self.f1_closed - self.f1_oracle)

    @property
    def abs2(self) -> float:
        return abs(self.f2_closed - self.f2_oracle)

    def passes(self, rel_tol: float = 1e-8, abs_floor: float = ABS_FLOOR) -> bool:
        """Relative residuals within ``rel_tol``; near-zero pairs within ``abs_floor``."""
        ok1 = self.res1 <= (rel_tol if self.res1_relative else abs_floor)
        ok2 = self.res2 <= (rel_tol if self.res2_relative else abs_floor)
        return ok1 and ok2


def oracle_compare(point: MeanFieldPoint, gammas: GammaSet) -> GeneratorReport:
    if point.y <= 0:
        raise DegeneratePointError("oracle comparison needs y > 0")
    c1 = generator_s0_closed(point, gammas)
    c2 = generator_splus_sminus_closed(point, gammas)
    o1 = f1_oracle(point, gammas)
    o2 = f2_oracle(point, gammas)
    r1, rel1 = _residual(c1, o1)
    r2, rel2 = _residual(c2, o2)
    return GeneratorReport(point, gammas, c1, o1, c2, o2, r1, r2, rel1, rel2)
