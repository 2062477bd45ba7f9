"""Dense finite-N representation of the BCS spin system.

Site 1 is the leftmost tensor factor: ``local_pauli("plus", 1, 2)`` is
``kron(sigma_plus, identity)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_SITES = 12

SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_ZERO = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

_PAULI = {"plus": SIGMA_PLUS, "minus": SIGMA_MINUS, "zero": SIGMA_ZERO}


class SiteLimitError(ValueError):
    """Requested system exceeds the dense-matrix memory cap."""


@dataclass(frozen=True, eq=False)
class ManyBodyOperator:
    """Operator on the 2**N dimensional spin space."""

    n_sites: int
    matrix: np.ndarray

    def __post_init__(self):
        dim = 2**self.n_sites
        if self.matrix.shape != (dim, dim):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match 2**{self.n_sites}"
            )

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dagger(self) -> ManyBodyOperator:
        return ManyBodyOperator(self.n_sites, self.matrix.conj().T)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return max_abs(self.matrix - self.matrix.conj().T) < tol

    def _check(self, other: ManyBodyOperator):
        if not isinstance(other, ManyBodyOperator):
            return NotImplemented
        if other.n_sites != self.n_sites:
            raise ValueError(f"size mismatch: N={self.n_sites} vs N={other.n_sites}")
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return ManyBodyOperator(self.n_sites, self.matrix + other.matrix)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return ManyBodyOperator(self.n_sites, self.matrix - other.matrix)

    def __matmul__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return ManyBodyOperator(self.n_sites, self.matrix @ other.matrix)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return ManyBodyOperator(self.n_sites, scalar * self.matrix)

    __rmul__ = __mul__

    def __neg__(self):
        return ManyBodyOperator(self.n_sites, -self.matrix)


def max_abs(a: np.ndarray) -> float:
    """Largest entry magnitude, the norm used for all "equals zero" checks."""
    return float(np.max(np.abs(a))) if a.size else 0.0


def _check_size(n_sites: int, max_sites: int = MAX_SITES):
    if n_sites < 1:
        raise ValueError(f"n_sites must be >= 1, got {n_sites}")
    if n_sites > max_sites:
        raise SiteLimitError(f"N={n_sites} exceeds the dense cap of {max_sites} sites")


def _embed(factors: dict[int, np.ndarray], n_sites: int) -> np.ndarray:
    # factors maps 1-based site -> 2x2 block; identities fill the rest
    out = np.ones((1, 1), dtype=complex)
    run = 0
    for site in range(1, n_sites + 1):
        if site in factors:
            if run:
                out = np.kron(out, np.eye(2**run, dtype=complex))
                run = 0
            out = np.kron(out, factors[site])
        else:
            run += 1
    if run:
        out = np.kron(out, np.eye(2**run, dtype=complex))
    return out


def local_pauli(kind: str, site: int, n_sites: int,
                max_sites: int = MAX_SITES) -> ManyBodyOperator:
    """sigma_j^kind acting on ``site`` (1-based) of an N-site chain."""
    _check_size(n_sites, max_sites)
    if kind not in _PAULI:
        raise ValueError(f"unknown Pauli kind {kind!r}")
    if not 1 <= site <= n_sites:
        raise ValueError(f"site {site} out of range 1..{n_sites}")
    return ManyBodyOperator(n_sites, _embed({site: _PAULI[kind]}, n_sites))


def intensive(kind: str, n_sites: int, max_sites: int = MAX_SITES) -> ManyBodyOperator:
    """Site average S_N^kind, or R_N = S_N^+ S_N^- for ``kind="R"``."""
    _check_size(n_sites, max_sites)
    if kind == "R":
        return intensive("plus", n_sites, max_sites) @ intensive("minus", n_sites, max_sites)
    if kind not in _PAULI:
        raise ValueError(f"unknown intensive kind {kind!r}")
    dim = 2**n_sites
    total = np.zeros((dim, dim), dtype=complex)
    for j in range(1, n_sites + 1):
        total += _embed({j: _PAULI[kind]}, n_sites)
    return ManyBodyOperator(n_sites, total / n_sites)


def bcs_hamiltonian(epsilon_tilde: float, g: float, n_sites: int,
                    route: str = "sum", max_sites: int = MAX_SITES) -> ManyBodyOperator:
    """Mean-field BCS Hamiltonian.

    ``route="sum"`` builds eps*sum_j sigma_j^0 - (g/N) sum_ij sigma_i^+ sigma_j^-
    term by term; ``route="intensive"`` builds N*(eps*S^0 - g*R). Both give
    the same matrix and are kept separate so one can check the other.
    """
    if g <= 0:
        raise ValueError(f"coupling g must be positive, got {g}")
    _check_size(n_sites, max_sites)
    if route == "intensive":
        h = (epsilon_tilde * intensive("zero", n_sites, max_sites)
             - g * intensive("R", n_sites, max_sites))
        return n_sites * h
    if route != "sum":
        raise ValueError(f"unknown route {route!r}")
    dim = 2**n_sites
    h = np.zeros((dim, dim), dtype=complex)
    for j in range(1, n_sites + 1):
        h += epsilon_tilde * _embed({j: SIGMA_ZERO}, n_sites)
    for i in range(1, n_sites + 1):
        for j in range(1, n_sites + 1):
            if i == j:
                block = {i: SIGMA_PLUS @ SIGMA_MINUS}
            else:
                block = {i: SIGMA_PLUS, j: SIGMA_MINUS}
            h -= (g / n_sites) * _embed(block, n_sites)
    return ManyBodyOperator(n_sites, h)


def commutator(a: ManyBodyOperator, b: ManyBodyOperator) -> ManyBodyOperator:
    return a @ b - b @ a


def operator_norm(a: ManyBodyOperator | np.ndarray) -> float:
    """Spectral norm (largest singular value)."""
    m = a.matrix if isinstance(a, ManyBodyOperator) else np.asarray(a)
    return float(np.linalg.norm(m, ord=2))


def heisenberg_evolve(h: ManyBodyOperator, x: ManyBodyOperator, t: float) -> ManyBodyOperator:
    """exp(iHt) X exp(-iHt) through the eigendecomposition of H."""
    if not h.is_hermitian(1e-10):
        raise np.linalg.LinAlgError("Heisenberg evolution needs a hermitian generator")
    if t == 0:
        return ManyBodyOperator(x.n_sites, x.matrix.copy())
    energies, vecs = np.linalg.eigh(h.matrix)
    phases = np.exp(1j * energies * t)
    # in the eigenbasis X_kl -> exp(i(E_k - E_l)t) X_kl
    xe = vecs.conj().T @ x.matrix @ vecs
    xe = phases[:, None] * xe * phases.conj()[None, :]
    return ManyBodyOperator(x.n_sites, vecs @ xe @ vecs.conj().T)


def commutator_decay_scan(alpha: str, beta: str, site: int,
                          n_list: Sequence[int]) -> list[tuple[int, float]]:
    """Rows (N, ||[S_N^alpha, sigma_site^beta]||), decaying like 1/N."""
    rows = []
    for n in n_list:
        c = commutator(intensive(alpha, n), local_pauli(beta, site, n))
        rows.append((n, operator_norm(c)))
    return rows
