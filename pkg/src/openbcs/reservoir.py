"""Thermal bosonic reservoir: occupations, spectral density, damping coefficients.

Mode sums over the box momenta are replaced by the infinite-volume integral
over d^3p. All energy integrals are done in the radial momentum p, where the
Bose factor's 1/eps divergence is cancelled by the p^2 phase-space factor.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate, optimize

from openbcs.meanfield import MeanFieldPoint, pulsation, rho_operators

ALPHAS = (0, 1, -1)
ALPHA_LABELS = ("0", "+", "-")


class QuadratureError(RuntimeError):
    """An adaptive integral did not reach its tolerance."""


@dataclass(frozen=True)
class ReservoirSpec:
    """Bath parameters.

    ``test_function`` is ``"gaussian"`` (f = A exp(-p^2 / 2 w^2)) or
    ``"pwave"`` (f = A (p/w) exp(-p^2 / 2 w^2)). ``eta`` is the width of the
    Gaussian used in place of the resonance delta; ``eta = 0`` selects the
    exact delta. ``p_max = None`` picks the cutoff where |f|^2 has dropped to
    1e-12 of its peak.
    """

    beta: float
    mass: float = 1.0
    f_width: float = 1.0
    f_amplitude: float = 1.0
    test_function: str = "gaussian"
    eta: float = 0.05
    n_radial: int = 20001
    p_max: float | None = None
    k_B: float = 1.0
    quad_limit: int = 500
    points_per_radian: float = 8.0

    def __post_init__(self):
        for name in ("beta", "mass", "f_width", "f_amplitude", "k_B", "points_per_radian"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.eta < 0:
            raise ValueError(f"eta must be nonnegative, got {self.eta}")
        if self.test_function not in ("gaussian", "pwave"):
            raise ValueError(f"unknown test function {self.test_function!r}")
        if self.n_radial < 3:
            raise ValueError("n_radial must be at least 3")
        if self.p_max is None:
            object.__setattr__(self, "p_max", _auto_cutoff(self))
        elif not self.p_max > 0:
            raise ValueError("p_max must be positive")

    @property
    def temperature(self) -> float:
        return 1.0 / (self.k_B * self.beta)

    def energy(self, p):
        return np.asarray(p) ** 2 / (2 * self.mass)

    def momentum(self, eps):
        return np.sqrt(2 * self.mass * np.asarray(eps))


def _auto_cutoff(spec: ReservoirSpec) -> float:
    # |f|^2 / peak = exp(-u) (gaussian) or u exp(1 - u) (pwave), u = p^2 / w^2
    target = math.log(1e12)
    if spec.test_function == "gaussian":
        u = target
    else:
        u = optimize.brentq(lambda v: v - 1 - math.log(v) - target, 1.0, 200.0)
    return spec.f_width * math.sqrt(u)


def test_function(spec: ReservoirSpec, p):
    p = np.asarray(p, dtype=float)
    f = spec.f_amplitude * np.exp(-(p**2) / (2 * spec.f_width**2))
    if spec.test_function == "pwave":
        f = f * (p / spec.f_width)
    return f


test_function.__test__ = False  # keep pytest from collecting it


def occupation(spec: ReservoirSpec, epsilon):
    """Bose two-point functions (m, n) = (<a a*>, <a* a>) at energy epsilon."""
    eps = np.asarray(epsilon, dtype=float)
    if np.any(eps <= 0):
        raise ValueError("occupations are defined only for positive energy")
    denom = -np.expm1(-spec.beta * eps)
    m = 1.0 / denom
    n = np.exp(-spec.beta * eps) / denom
    if m.ndim == 0:
        return float(m), float(n)
    return m, n


def spectral_density(spec: ReservoirSpec, epsilon):
    """J(eps) = sum_p |f(p)|^2 delta(eps - eps_p) in the continuum, per unit d^3p.

    J = 4 pi p^2 |f(p)|^2 dp/deps = 4 pi m p |f(p)|^2.
    """
    eps = np.asarray(epsilon, dtype=float)
    out = np.zeros_like(eps)
    pos = eps > 0
    p = spec.momentum(eps[pos])
    out[pos] = 4 * np.pi * spec.mass * p * test_function(spec, p) ** 2
    return float(out) if out.ndim == 0 else out


def radial_weight(spec: ReservoirSpec, p, which: str):
    """Integrand G(p) with int deps J(eps) occ(eps) F(eps) = int dp G(p) F(eps_p).

    ``which`` is "m", "n" or "bare" (no Bose factor). The p -> 0 limit of
    p^2 m(eps_p) is 2 mass / beta and is taken explicitly.
    """
    p = np.asarray(p, dtype=float)
    base = 4 * np.pi * test_function(spec, p) ** 2
    if which == "bare":
        return base * p**2
    x = spec.beta * spec.energy(p)
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = -np.expm1(-x)
        p2m = np.where(p > 0, p**2 / np.where(p > 0, denom, 1.0), 2 * spec.mass / spec.beta)
    if which == "m":
        return base * p2m
    if which == "n":
        return base * p2m * np.exp(-x)
    raise ValueError(f"unknown weight {which!r}")


@dataclass(frozen=True)
class GammaSet:
    """Damping coefficients Gamma_alpha^(a), Gamma_alpha^(b), ordered (0, +, -)."""

    gamma_a: tuple[complex, complex, complex]
    gamma_b: tuple[complex, complex, complex]
    imag_convention: str = field(default="half-line", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "gamma_a", tuple(complex(v) for v in self.gamma_a))
        object.__setattr__(self, "gamma_b", tuple(complex(v) for v in self.gamma_b))
        if len(self.gamma_a) != 3 or len(self.gamma_b) != 3:
            raise ValueError("need three coefficients per channel")

    def a(self, alpha: int) -> complex:
        return self.gamma_a[ALPHAS.index(alpha)]

    def b(self, alpha: int) -> complex:
        return self.gamma_b[ALPHAS.index(alpha)]

    def real(self) -> GammaSet:
        return replace(self, gamma_a=tuple(complex(v.real) for v in self.gamma_a),
                       gamma_b=tuple(complex(v.real) for v in self.gamma_b))

    def scaled(self, c: float) -> GammaSet:
        return replace(self, gamma_a=tuple(c * v for v in self.gamma_a),
                       gamma_b=tuple(c * v for v in self.gamma_b))

    @classmethod
    def zeros(cls) -> GammaSet:
        return cls((0, 0, 0), (0, 0, 0))


def _resonance_energies(omega: float, nu: float) -> tuple[float, float, float]:
    return tuple(nu + alpha * omega for alpha in ALPHAS)


def gamma_resonant(spec: ReservoirSpec, omega: float, nu: float) -> GammaSet:
    """Real parts from the exact delta: pi J(Omega) m(Omega) and pi J(Omega) n(Omega).

    Omega_alpha = nu + alpha*omega; nonpositive resonance energies have no
    bath mode and give zero.
    """
    if not omega > 0:
        raise ValueError("omega must be positive")
    ga, gb = [], []
    for big_omega in _resonance_energies(omega, nu):
        if big_omega <= 0:
            ga.append(0.0)
            gb.append(0.0)
            continue
        # J occ = (mass / p) G(p), finite even where occ alone overflows
        p = float(spec.momentum(big_omega))
        scale = math.pi * spec.mass / p
        ga.append(scale * float(radial_weight(spec, p, "m")))
        gb.append(scale * float(radial_weight(spec, p, "n")))
    return GammaSet(tuple(ga), tuple(gb))


def spectral_weight(spec: ReservoirSpec, omega: float) -> float:
    """W = pi J(omega), the mode weight standing in for the resonant shell sum."""
    return math.pi * spectral_density(spec, omega)


def _quad(func, a, b, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        kw.setdefault("epsabs", 1e-12)
        kw.setdefault("epsrel", 1e-10)
        val, err, info = integrate.quad(func, a, b, full_output=True, **kw)[:3]
    if err > 1e-8 * max(1.0, abs(val)):
        raise QuadratureError(
            f"quad on [{a:.4g}, {b:.4g}] estimated error {err:.3g} for value {val:.6g} "
            f"after {info['neval']} evaluations"
        )
    return val


def principal_value(spec: ReservoirSpec, big_omega: float, which: str) -> float:
    """PV int deps J(eps) occ(eps) / (Omega - eps) over the bath band.

    At Omega = 0 with a Gaussian test function the integrand behaves like
    eps^(-3/2) and the integral diverges; NaN is returned.
    """
    pmax = spec.p_max
    m2 = 2 * spec.mass
    if big_omega > 0:
        p0 = math.sqrt(m2 * big_omega)
        if p0 < pmax:
            # 1/(Omega - p^2/2M) = -2M / ((p - p0)(p + p0))
            return _quad(lambda p: -m2 * radial_weight(spec, p, which) / (p + p0),
                         0.0, pmax, weight="cauchy", wvar=p0, limit=spec.quad_limit)
    elif big_omega == 0 and spec.test_function == "gaussian":
        return math.nan
    return _quad(lambda p: radial_weight(spec, p, which) / (big_omega - p * p / m2),
                 0.0, pmax, limit=spec.quad_limit)


def broadened_delta_integral(spec: ReservoirSpec, big_omega: float, which: str,
                             eta: float) -> float:
    """pi int deps J(eps) occ(eps) delta_eta(Omega - eps) with a Gaussian delta_eta."""
    norm = 1.0 / (eta * math.sqrt(2 * math.pi))
    m2 = 2 * spec.mass

    def integrand(p):
        d = big_omega - p * p / m2
        return radial_weight(spec, p, which) * norm * math.exp(-0.5 * (d / eta) ** 2)

    pts = []
    if big_omega > 0:
        p0 = math.sqrt(m2 * big_omega)
        # peak width in p is eta * mass / p0; bracket it so quad cannot step over it
        width = eta * spec.mass / p0
        cand = [p0] + [p0 + k * width for k in (-8, -4, -2, -1, 1, 2, 4, 8)]
        pts = sorted(q for q in cand if 0 < q < spec.p_max)
    return math.pi * _quad(integrand, 0.0, spec.p_max, points=pts or None,
                           limit=spec.quad_limit)


def gamma_full(spec: ReservoirSpec, point: MeanFieldPoint | None = None, *,
               omega: float | None = None, nu: float | None = None,
               eta: float | None = None) -> GammaSet:
    """Complex Gamma coefficients from the half-line time integrals.

    int_{-inf}^0 dtau exp(-i tau x) = pi delta(x) + i PV(1/x), so

        Gamma^(a) = int J m [pi delta(Omega - eps) + i PV 1/(Omega - eps)]
        Gamma^(b) = int J n [pi delta(Omega - eps) - i PV 1/(Omega - eps)]

    The delta is broadened to width ``eta`` (default ``spec.eta``); eta = 0
    uses the exact resonant value.
    """
    if point is not None:
        omega, nu = pulsation(point)
    if omega is None or nu is None:
        raise ValueError("give either a point or both omega and nu")
    eta = spec.eta if eta is None else eta
    exact = gamma_resonant(spec, omega, nu)
    ga, gb = [], []
    for k, big_omega in enumerate(_resonance_energies(omega, nu)):
        if eta > 0:
            re_a = broadened_delta_integral(spec, big_omega, "m", eta)
            re_b = broadened_delta_integral(spec, big_omega, "n", eta)
        else:
            re_a, re_b = exact.gamma_a[k].real, exact.gamma_b[k].real
        pv_a = principal_value(spec, big_omega, "m")
        pv_b = principal_value(spec, big_omega, "n")
        ga.append(complex(re_a, pv_a))
        gb.append(complex(re_b, -pv_b))
    return GammaSet(tuple(ga), tuple(gb))


def condition_integral(spec: ReservoirSpec, big_omega: float, which: str, tau_max: float,
                       n_tau: int = 4001) -> complex:
    """Truncated half-line integral int_{-tau_max}^0 dtau C(tau) of the bath correlation.

    C(tau) = int dp G(p) exp(-i tau (Omega - eps_p)); its convergence as
    tau_max grows is the integrability condition that makes Gamma finite.
    """
    p = np.linspace(0.0, spec.p_max, spec.n_radial)
    w = radial_weight(spec, p, which)
    eps = spec.energy(p)
    a = big_omega - eps
    # int_{-T}^0 exp(-i tau a) dtau = (exp(i T a) - 1) / (i a)
    u = a * tau_max
    with np.errstate(divide="ignore", invalid="ignore"):
        kern = np.where(np.abs(u) > 1e-8, np.expm1(1j * u) / (1j * np.where(a == 0, 1, a)),
                        tau_max * (1 + 0.5j * u))
    return complex(integrate.simpson(w * kern, x=p))


# --- finite-lambda second-order term -------------------------------------------------

def _phi1(z):
    """(exp(z) - 1)/z, stable near 0."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-8
    zs = np.where(small, 1.0, z)
    return np.where(small, 1 + z / 2, np.expm1(zs) / zs)


def _psi(z, k: int):
    """int_0^1 u^k exp(z u) du for k = 1, 2."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-2
    zs = np.where(small, 1.0, z)
    ez = np.exp(zs)
    if k == 1:
        closed = (ez * (zs - 1) + 1) / zs**2
    else:
        closed = (ez * (zs * zs - 2 * zs + 2) - 2) / zs**3
    series = np.zeros_like(z)
    term = np.ones_like(z)
    for j in range(12):
        if j:
            term = term * z / j
        series = series + term / (j + k + 1)
    return np.where(small, series, closed)


def double_time_integral(a, b, t: float, lam: float):
    """D(a, b) = int_0^t dt1 int_0^t1 dt2 exp(i a t1/lam^2) exp(-i b t2/lam^2).

    Closed form (E(A) - E(A - B)) / (iB) with E(C) = int_0^t exp(iCs) ds; when
    |B| t < 1e-6 the second-order expansion M1(A) - (iB/2) M2(A) in the moments
    M_k(A) = int_0^t s^k exp(iAs) ds is used instead.
    """
    big_a = np.asarray(a, dtype=float) / lam**2
    big_b = np.asarray(b, dtype=float) / lam**2
    small = np.abs(big_b) * t < 1e-6
    bs = np.where(small, 1.0, big_b)

    def e_int(c):
        return t * _phi1(1j * c * t)

    closed = (e_int(big_a) - e_int(big_a - bs)) / (1j * bs)
    za = 1j * big_a * t
    series = t**2 * _psi(za, 1) - 0.5j * big_b * t**3 * _psi(za, 2)
    return np.where(small, series, closed)


def _radial_grid(spec: ReservoirSpec, t: float, lam: float, omegas) -> np.ndarray:
    # resolve the fastest phase p*T/mass and the slowest resonance peak width
    big_t = t / lam**2
    span = spec.p_max**2 / (2 * spec.mass) + max(abs(o) for o in omegas)
    n_phase = int(math.ceil(spec.points_per_radian * span * big_t))
    n = max(spec.n_radial, n_phase)
    if n % 2 == 0:
        n += 1
    return np.linspace(0.0, spec.p_max, n)


def expectation(state: np.ndarray, op: np.ndarray) -> complex:
    return complex(np.trace(state @ op))


def second_order_matrix(spec: ReservoirSpec, point: MeanFieldPoint, system_state: np.ndarray,
                        lam: float, t: float, weights: str = "state") -> np.ndarray:
    """Per-site contributions to I_lambda(t), as a 3x3 array over (alpha, beta).

    Entry (alpha, beta) is

        -(1/lam^2) int dp [<rho_a rho_b*> G_m(p) D(nu_a, nu_b)
                           + <rho_a* rho_b> G_n(p) D(-nu_a, -nu_b)],

    nu_alpha(p) = nu - eps_p + alpha*omega. ``weights="unit"`` replaces both
    state expectations by 1, isolating the time-integral kernel.
    """
    if not lam > 0 or not t > 0:
        raise ValueError("lambda and t must be positive")
    omega, nu = pulsation(point)
    omegas = _resonance_energies(omega, nu)
    rhos = rho_operators(point)
    p = _radial_grid(spec, t, lam, omegas)
    eps = spec.energy(p)
    gm = radial_weight(spec, p, "m")
    gn = radial_weight(spec, p, "n")
    out = np.zeros((3, 3), dtype=complex)
    for i, (oa, ra) in enumerate(zip(omegas, rhos)):
        na = oa - eps
        for j, (ob, rb) in enumerate(zip(omegas, rhos)):
            nb = ob - eps
            if weights == "unit":
                ca = cb = 1.0
            else:
                ca = expectation(system_state, ra @ rb.conj().T)
                cb = expectation(system_state, ra.conj().T @ rb)
            fa = integrate.simpson(gm * double_time_integral(na, nb, t, lam), x=p)
            fb = integrate.simpson(gn * double_time_integral(-na, -nb, t, lam), x=p)
            val = -(ca * fa + cb * fb) / lam**2
            if not np.isfinite(val):
                raise QuadratureError(f"non-finite second-order term at lambda={lam}, t={t}")
            out[i, j] = val
    return out


def second_order_term(spec: ReservoirSpec, point: MeanFieldPoint, system_state: np.ndarray,
                      lam: float, t: float) -> complex:
    """I_lambda(t) for one site, whose lambda -> 0 limit grows linearly in t."""
    return complex(second_order_matrix(spec, point, system_state, lam, t).sum())


def stochastic_limit_rate(point: MeanFieldPoint, gammas: GammaSet,
                          system_state: np.ndarray) -> complex:
    """lim I_lambda(t)/t = -sum_alpha (<rho rho*> Gamma^(a) + <rho* rho> Gamma^(b))."""
    total = 0j
    for k, r in enumerate(rho_operators(point)):
        total -= (expectation(system_state, r @ r.conj().T) * gammas.gamma_a[k]
                  + expectation(system_state, r.conj().T @ r) * gammas.gamma_b[k])
    return total
