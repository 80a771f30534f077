"""Thermal states, entropies and temperature recovery for identical pairs.

Sign conventions, fixed once for the whole package: the computational state
``|0>`` is the *excited* local level and ``|d-1>`` the ground level, i.e. the
local spectrum is ``E_k = omega * ((d-1)/2 - k)``.  For a qubit that means
``E_0 = +omega/2``, ``E_1 = -omega/2``, the pair Hamiltonian has diagonal
``(omega, 0, 0, -omega)`` and ``|11>`` is the joint ground state.  Positive
``beta`` therefore puts the largest population on the last basis state.

Inverse temperatures are plain floats; ``+inf`` and ``-inf`` are legal and
select the ground- or ceiling-state projector, ``nan`` is always rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    ATOL_ALGEBRAIC,
    ATOL_PHYSICAL,
    hermitian_eig,
    partial_trace,
)

__all__ = [
    "Hamiltonian",
    "build_hamiltonian",
    "gibbs_populations",
    "thermal_state",
    "von_neumann_entropy",
    "mutual_information",
    "fit_inverse_temperature",
    "local_inverse_temperature",
]

_LOG_DIVISORS = {"e": 1.0, "2": math.log(2.0)}


def _log_divisor(log_base: str) -> float:
    try:
        return _LOG_DIVISORS[log_base]
    except KeyError:
        raise ValueError(f"log_base must be 'e' or '2', got {log_base!r}") from None


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if math.isnan(beta):
        raise ValueError("inverse temperature is NaN")
    return beta


@dataclass(frozen=True)
class Hamiltonian:
    """Non-interacting Hamiltonian of two identical d-level systems.

    ``local_energies`` lists the single-system levels for basis states
    ``|0>..|d-1>``; ``global_energies`` are the lexicographically ordered
    pairwise sums ``E_i + E_j``.
    """

    omega: float
    dim: int
    local_energies: np.ndarray
    global_energies: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        if self.omega <= 0.0 or not math.isfinite(self.omega):
            raise ValueError(f"omega must be finite and positive, got {self.omega}")
        local = np.asarray(self.local_energies, dtype=float)
        if local.shape != (self.dim,):
            raise ValueError(
                f"expected {self.dim} local energies, got shape {local.shape}"
            )
        object.__setattr__(self, "local_energies", local)
        object.__setattr__(
            self, "global_energies", np.add.outer(local, local).reshape(-1)
        )

    def matrix(self) -> np.ndarray:
        """Diagonal pair Hamiltonian in the lexicographic product basis."""
        return np.diag(self.global_energies).astype(complex)


def build_hamiltonian(
    omega: float, dim: int = 2, local_energies: np.ndarray | None = None
) -> Hamiltonian:
    """Equally spaced local spectrum spanning ``(dim - 1) * omega``.

    Pass ``local_energies`` to override the spectrum, e.g. for unevenly
    spaced levels; ``omega`` then only sets the energy scale of tolerances.
    """
    if dim < 2:
        raise ValueError(f"dim must be at least 2, got {dim}")
    if local_energies is None:
        local_energies = omega * ((dim - 1) / 2.0 - np.arange(dim))
    return Hamiltonian(omega=omega, dim=dim, local_energies=local_energies)


def gibbs_populations(beta: float, energies: np.ndarray) -> np.ndarray:
    """Normalized Boltzmann weights ``exp(-beta * E_k) / Z``.

    The largest exponent is subtracted before exponentiating, so arbitrarily
    large ``|beta| * E`` never overflows.  Infinite ``beta`` returns the
    uniform mixture over the degenerate extremal level.
    """
    beta = _check_beta(beta)
    energies = np.asarray(energies, dtype=float)
    if math.isinf(beta):
        target = energies.min() if beta > 0 else energies.max()
        scale = max(1.0, float(np.max(np.abs(energies))))
        mask = np.abs(energies - target) <= ATOL_ALGEBRAIC * scale
        return mask / mask.sum()
    exponent = -beta * energies
    exponent -= exponent.max()
    weights = np.exp(exponent)
    return weights / weights.sum()


def thermal_state(beta: float, hamiltonian: Hamiltonian) -> np.ndarray:
    """Gibbs state of the pair, diagonal in the product basis."""
    return np.diag(gibbs_populations(beta, hamiltonian.global_energies)).astype(complex)


def von_neumann_entropy(rho: np.ndarray, log_base: str = "e") -> float:
    """Entropy ``-sum(lambda log lambda)`` over the eigenvalues of ``rho``.

    Eigenvalues within roundoff of zero contribute nothing; eigenvalues more
    negative than the physical tolerance raise, since entropy of a
    non-state is meaningless.
    """
    div = _log_divisor(log_base)
    lam = hermitian_eig(np.asarray(rho, dtype=complex)).eigenvalues
    if lam[0] < -ATOL_PHYSICAL:
        raise ValueError(f"matrix has negative eigenvalue {lam[0]:.3e}")
    lam = np.clip(lam, 0.0, None)
    nz = lam[lam > 0.0]
    return float(-np.sum(nz * np.log(nz)) / div)


def mutual_information(
    rho: np.ndarray, dims: tuple[int, int], log_base: str = "e"
) -> float:
    """``S(A) + S(B) - S(AB)`` of a bipartite density matrix."""
    s_a = von_neumann_entropy(partial_trace(rho, dims, "A"), log_base)
    s_b = von_neumann_entropy(partial_trace(rho, dims, "B"), log_base)
    return s_a + s_b - von_neumann_entropy(rho, log_base)


def fit_inverse_temperature(
    populations: np.ndarray, energies: np.ndarray
) -> tuple[float, float]:
    """Fit ``ln p_k = -beta E_k + const`` and report the worst residual.

    Returns ``(beta, residual)`` where the residual is the maximum absolute
    deviation of the refitted populations from the input ones.  A population
    concentrated entirely on the lowest (highest) level yields ``+inf``
    (``-inf``) with zero residual.  No feasibility judgement is made here;
    callers decide what residual they tolerate.
    """
    p = np.asarray(populations, dtype=float)
    e = np.asarray(energies, dtype=float)
    if p.shape != e.shape or p.ndim != 1:
        raise ValueError("populations and energies must be 1-D and congruent")
    # Zero populations are only Gibbs-like in the beta -> +-inf limit.
    floor = 1e-290
    if np.any(p < floor):
        support = p >= floor
        scale = max(1.0, float(np.max(np.abs(e))))
        if np.all(np.abs(e[support] - e.min()) <= ATOL_ALGEBRAIC * scale):
            return math.inf, float(np.max(np.abs(p - gibbs_populations(math.inf, e))))
        if np.all(np.abs(e[support] - e.max()) <= ATOL_ALGEBRAIC * scale):
            return -math.inf, float(np.max(np.abs(p - gibbs_populations(-math.inf, e))))
        return math.nan, math.inf
    log_p = np.log(p)
    design = np.stack([-e, np.ones_like(e)], axis=1)
    coeff, *_ = np.linalg.lstsq(design, log_p, rcond=None)
    beta = float(coeff[0])
    refit = gibbs_populations(beta, e)
    return beta, float(np.max(np.abs(refit - p)))


def local_inverse_temperature(
    rho_local: np.ndarray,
    omega: float,
    local_energies: np.ndarray | None = None,
    residual_tol: float = 1e-8,
) -> float:
    """Inverse temperature of a diagonal local state.

    For qubits this is ``(2/omega) * arctanh(p_ground - p_excited)``; for
    larger ``d`` a least-squares fit of the log-populations against the
    level energies.  Raises ``ValueError`` when the state carries coherences
    in the energy basis or its populations are not Gibbs within
    ``residual_tol``.
    """
    rho_local = np.asarray(rho_local, dtype=complex)
    d = rho_local.shape[0]
    if rho_local.shape != (d, d):
        raise ValueError(f"expected a square matrix, got shape {rho_local.shape}")
    off = float(np.max(np.abs(rho_local - np.diag(rho_local.diagonal()))))
    if off > ATOL_PHYSICAL:
        raise ValueError(f"local state is not diagonal: off-diagonal {off:.3e}")
    if local_energies is None:
        local_energies = build_hamiltonian(omega, d).local_energies
    p = rho_local.diagonal().real
    if d == 2 and np.allclose(
        local_energies, [omega / 2.0, -omega / 2.0], atol=ATOL_ALGEBRAIC
    ):
        x = float(p[1] - p[0])
        if x >= 1.0:
            return math.inf
        if x <= -1.0:
            return -math.inf
        return 2.0 / omega * math.atanh(x)
    beta, residual = fit_inverse_temperature(p, np.asarray(local_energies, float))
    if math.isnan(beta) or residual > residual_tol:
        raise ValueError(
            f"populations are not Gibbs: fit residual {residual:.3e} "
            f"exceeds {residual_tol:.1e}"
        )
    return beta
