"""Dense complex linear algebra for small bipartite systems.

Everything operates on row-major ``numpy`` arrays of ``complex128``.  The
matrices in this package never exceed 16 x 16, so simplicity and predictable
accuracy win over asymptotic speed: the Hermitian eigensolver is a cyclic
Jacobi sweep, which is exact to roundoff at these sizes and keeps the
eigenvector phases reproducible across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ATOL_ALGEBRAIC",
    "ATOL_PHYSICAL",
    "HermitianEigenResult",
    "UnitaryCheck",
    "dagger",
    "kron",
    "partial_trace",
    "is_hermitian",
    "hermitian_eig",
    "validate_unitary",
    "check_density_matrix",
]

# Default absolute tolerances: algebraic identities hold to near machine
# precision, physically derived quantities accumulate a little more error.
ATOL_ALGEBRAIC = 1e-12
ATOL_PHYSICAL = 1e-10

JACOBI_SWEEP_BUDGET = 100


def dagger(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.asarray(a).conj().T


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with the left factor owning the slow index."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def partial_trace(rho: np.ndarray, dims: tuple[int, int], keep: str) -> np.ndarray:
    """Trace out one subsystem of a bipartite matrix.

    Parameters
    ----------
    rho:
        Square matrix on the tensor product space, lexicographic basis
        ordering (``|i>|j>`` at index ``i * dims[1] + j``).
    dims:
        Dimensions ``(d_a, d_b)`` of the two factors.
    keep:
        ``"A"`` to return the first subsystem, ``"B"`` for the second.

    Returns
    -------
    The reduced matrix, e.g. for ``keep="A"`` the entries are
    ``sum_k rho[i*d_b + k, j*d_b + k]``.
    """
    da, db = dims
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (da * db, da * db):
        raise ValueError(f"matrix shape {rho.shape} does not match dims {dims}")
    r = rho.reshape(da, db, da, db)
    if keep == "A":
        return np.einsum("ikjk->ij", r)
    if keep == "B":
        return np.einsum("kikj->ij", r)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def is_hermitian(a: np.ndarray, atol: float = ATOL_ALGEBRAIC) -> bool:
    """True when ``a`` equals its conjugate transpose within ``atol``."""
    a = np.asarray(a)
    return bool(np.max(np.abs(a - a.conj().T)) <= atol)


@dataclass(frozen=True)
class HermitianEigenResult:
    """Spectral decomposition ``a = V diag(w) V^dagger``.

    ``eigenvalues`` are real and sorted ascending; column ``k`` of
    ``eigenvectors`` belongs to ``eigenvalues[k]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def hermitian_eig(a: np.ndarray, atol: float = ATOL_ALGEBRAIC) -> HermitianEigenResult:
    """Diagonalize a Hermitian matrix by cyclic complex Jacobi rotations.

    Sweeps over all off-diagonal pairs, annihilating each entry with a
    two-sided unitary rotation, until every off-diagonal magnitude falls
    below ``atol``.  Raises ``ValueError`` for non-Hermitian input and
    ``RuntimeError`` if the sweep budget is exhausted, which at these
    matrix sizes indicates corrupt input rather than a hard spectrum.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not is_hermitian(a, atol=max(atol, ATOL_ALGEBRAIC)):
        raise ValueError("matrix is not Hermitian within tolerance")

    n = a.shape[0]
    m = a.copy()
    vecs = np.eye(n, dtype=complex)
    # Scale-aware target: |off-diagonal| < atol relative to the matrix norm,
    # with an absolute floor so the zero matrix converges immediately.
    scale = max(1.0, float(np.max(np.abs(m))))
    target = atol * scale

    for _ in range(JACOBI_SWEEP_BUDGET):
        off = _max_offdiag(m)
        if off < target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                u = m[p, q]
                if abs(u) <= target / n:
                    continue
                phase = u / abs(u)
                tau = (m[q, q].real - m[p, p].real) / (2.0 * abs(u))
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # Right-multiply by the plane rotation, left by its dagger.
                col_p = m[:, p] * c - m[:, q] * s * np.conj(phase)
                col_q = m[:, p] * s * phase + m[:, q] * c
                m[:, p], m[:, q] = col_p, col_q
                row_p = m[p, :] * c - m[q, :] * s * phase
                row_q = m[p, :] * s * np.conj(phase) + m[q, :] * c
                m[p, :], m[q, :] = row_p, row_q
                m[p, q] = 0.0
                m[q, p] = 0.0
                vcol_p = vecs[:, p] * c - vecs[:, q] * s * np.conj(phase)
                vcol_q = vecs[:, p] * s * phase + vecs[:, q] * c
                vecs[:, p], vecs[:, q] = vcol_p, vcol_q
    else:
        if _max_offdiag(m) >= target:
            raise RuntimeError(
                f"Jacobi sweep budget {JACOBI_SWEEP_BUDGET} exhausted; "
                f"residual off-diagonal {_max_offdiag(m):.3e}"
            )

    order = np.argsort(m.diagonal().real, kind="stable")
    return HermitianEigenResult(
        eigenvalues=m.diagonal().real[order].copy(),
        eigenvectors=vecs[:, order].copy(),
    )


def _max_offdiag(m: np.ndarray) -> float:
    off = np.abs(m - np.diag(m.diagonal()))
    return float(off.max()) if off.size else 0.0


@dataclass(frozen=True)
class UnitaryCheck:
    """Outcome of a unitarity test: largest entry of ``|U^dagger U - I|``."""

    residual: float
    passed: bool


def validate_unitary(u: np.ndarray, atol: float = ATOL_ALGEBRAIC) -> UnitaryCheck:
    """Report how far ``u`` is from satisfying ``U^dagger U = I``."""
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {u.shape}")
    residual = float(np.max(np.abs(dagger(u) @ u - np.eye(u.shape[0]))))
    return UnitaryCheck(residual=residual, passed=residual <= atol)


def check_density_matrix(
    rho: np.ndarray,
    atol_algebraic: float = ATOL_ALGEBRAIC,
    atol_physical: float = ATOL_PHYSICAL,
) -> np.ndarray:
    """Validate Hermiticity, unit trace and positivity of a density matrix.

    Returns the matrix as ``complex128`` on success; raises ``ValueError``
    with the offending residual otherwise.  Positivity allows eigenvalues
    down to ``-atol_physical`` to absorb roundoff.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {rho.shape}")
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    if herm > atol_algebraic:
        raise ValueError(f"density matrix not Hermitian: residual {herm:.3e}")
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > atol_algebraic:
        raise ValueError(f"density matrix trace {tr} is not 1")
    lam = hermitian_eig(rho, atol=atol_algebraic).eigenvalues
    if lam[0] < -atol_physical:
        raise ValueError(f"density matrix has negative eigenvalue {lam[0]:.3e}")
    return rho
