"""Correlating unitaries for pairs of d-level systems.

The pair Hilbert space splits into ``d`` diagonal families
``S_j = span{ |k, k+j mod d> }``.  A unitary that rotates each family into
itself never creates local coherences, and when the rotation is circulant in
the computational labels its action on populations is a convex mixture of
cyclic permutations, i.e. a doubly stochastic circulant.  That reduces
temperature targeting to a small linear system for the mixture weights
``eta`` plus a phase search for a circulant with ``|r_i|^2 = eta_i``.

Index conventions, used consistently everywhere:

* clock operators ``X|n> = |n+1 mod d>``, ``Z|n> = exp(2 pi i n / d)|n>``;
* Fourier matrix ``F[k, m] = exp(+2 pi i k m / d) / sqrt(d)``;
* circulant ``R = F^dagger diag(exp(i phi)) F`` has ``R[m, n] = r[(n - m) mod d]``
  with ``r = ifft(exp(i phi))``, so the first row of the induced stochastic
  matrix ``|R[m, n]|^2`` reads off ``eta`` directly;
* the cyclic shift on population vectors is ``(Pi v)_m = v[(m+1) mod d]``,
  which turns the weight equation into
  ``exp(-beta_out E_j) / Z' = sum_i eta_i exp(-beta_in E_{i+j}) / Z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .linalg import ATOL_PHYSICAL, dagger, partial_trace
from .thermal import Hamiltonian, _check_beta, fit_inverse_temperature, gibbs_populations

__all__ = [
    "BellBasis",
    "SubspaceRotation",
    "CirculantTransform",
    "PhaseSearchResult",
    "LocalGibbsReport",
    "clock_operators",
    "fourier_matrix",
    "cyclic_shift_matrix",
    "bell_state",
    "bell_basis",
    "subspace_basis",
    "circulant_unitary",
    "solve_mixing_weights",
    "assemble_global_unitary",
    "extract_transfer_matrices",
    "subspace_leakage",
    "phases_for_weights",
    "find_phases_for_target",
    "validate_local_gibbs",
]

SUPPORTED_DIMS = (2, 3, 4)


def _check_dim(d: int) -> int:
    d = int(d)
    if d < 2:
        raise ValueError(f"dimension must be at least 2, got {d}")
    return d


def clock_operators(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Shift and clock matrices; they satisfy ``Z X = exp(2 pi i / d) X Z``."""
    d = _check_dim(d)
    x = np.zeros((d, d), dtype=complex)
    for n in range(d):
        x[(n + 1) % d, n] = 1.0
    z = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    return x, z


def fourier_matrix(d: int) -> np.ndarray:
    """Unitary Fourier matrix with the ``+2 pi i k m / d`` phase convention."""
    d = _check_dim(d)
    k = np.arange(d)
    return np.exp(2j * np.pi * np.outer(k, k) / d) / math.sqrt(d)


def cyclic_shift_matrix(d: int) -> np.ndarray:
    """Permutation acting on population vectors as ``(Pi v)_m = v[m+1 mod d]``."""
    d = _check_dim(d)
    pi = np.zeros((d, d))
    for m in range(d):
        pi[m, (m + 1) % d] = 1.0
    return pi


def bell_state(m: int, n: int, d: int) -> np.ndarray:
    """Maximally entangled state ``(Z^m x X^n)`` applied to ``sum_k |kk>/sqrt(d)``.

    Component form: ``d^{-1/2} sum_k exp(2 pi i k m / d) |k>|k+n mod d>``.
    """
    d = _check_dim(d)
    if not (0 <= m < d and 0 <= n < d):
        raise ValueError(f"indices (m={m}, n={n}) must lie in 0..{d - 1}")
    vec = np.zeros(d * d, dtype=complex)
    phases = np.exp(2j * np.pi * np.arange(d) * m / d)
    for k in range(d):
        vec[k * d + (k + n) % d] = phases[k] / math.sqrt(d)
    return vec


@dataclass(frozen=True)
class BellBasis:
    """All ``d^2`` generalized Bell states, keyed by their ``(m, n)`` labels."""

    dim: int
    clock_x: np.ndarray
    clock_z: np.ndarray
    states: dict[tuple[int, int], np.ndarray]


def bell_basis(d: int) -> BellBasis:
    """Complete orthonormal Bell family for the given local dimension."""
    d = _check_dim(d)
    x, z = clock_operators(d)
    states = {(m, n): bell_state(m, n, d) for m in range(d) for n in range(d)}
    return BellBasis(dim=d, clock_x=x, clock_z=z, states=states)


def subspace_basis(j: int, d: int) -> np.ndarray:
    """Rows are the ``d`` Bell states spanning the diagonal family ``S_j``."""
    d = _check_dim(d)
    return np.stack([bell_state(m, j % d, d) for m in range(d)])


@dataclass(frozen=True)
class SubspaceRotation:
    """Circulant rotation of one diagonal family.

    ``rotation`` is written in the computational labels ``k -> |k, k+j>``;
    ``coefficients`` are its circulant entries and ``weights`` their squared
    magnitudes, the row of the induced doubly stochastic matrix.
    """

    phases: np.ndarray
    rotation: np.ndarray
    coefficients: np.ndarray
    weights: np.ndarray


def circulant_unitary(phases: np.ndarray) -> SubspaceRotation:
    """Circulant unitary with the given eigenphases.

    ``R = F^dagger diag(exp(i phases)) F`` is unitary, circulant, and
    diagonal in the Bell basis of whichever family it is embedded into.
    """
    phases = np.asarray(phases, dtype=float)
    if phases.ndim != 1 or phases.size < 2:
        raise ValueError(f"need a 1-D phase vector of length >= 2, got {phases.shape}")
    d = phases.size
    f = fourier_matrix(d)
    gains = np.exp(1j * phases)
    rotation = dagger(f) @ np.diag(gains) @ f
    coefficients = np.fft.ifft(gains)
    return SubspaceRotation(
        phases=phases.copy(),
        rotation=rotation,
        coefficients=coefficients,
        weights=np.abs(coefficients) ** 2,
    )


@dataclass(frozen=True)
class CirculantTransform:
    """Solution of the weight equation for a temperature target.

    ``weights`` solves ``b = M eta`` where ``M[j, i] = a[(i+j) mod d]`` and
    ``a``, ``b`` are the initial and target Gibbs populations.  ``feasible``
    records whether the solution is a genuine convex combination; the raw
    (possibly negative) weights are kept so infeasibility stays visible.
    ``underdetermined`` marks the minimum-norm choice for singular systems.
    """

    beta_in: float
    beta_out: float
    weights: np.ndarray
    transfer: np.ndarray
    feasible: bool
    residual: float
    underdetermined: bool


def solve_mixing_weights(
    beta_in: float, beta_out: float, hamiltonian: Hamiltonian
) -> CirculantTransform:
    """Cyclic-mixture weights that map local ``beta_in`` Gibbs to ``beta_out``.

    Feasibility requires every weight to be nonnegative; targets with
    ``|beta_out| > |beta_in|`` always fail this, and for ``d > 2`` part of
    the negative-temperature side of the band is unreachable as well.
    """
    beta_in = _check_beta(beta_in)
    beta_out = _check_beta(beta_out)
    d = hamiltonian.dim
    a = gibbs_populations(beta_in, hamiltonian.local_energies)
    b = gibbs_populations(beta_out, hamiltonian.local_energies)
    m = np.empty((d, d))
    for j in range(d):
        for i in range(d):
            m[j, i] = a[(i + j) % d]
    weights, _, rank, _ = np.linalg.lstsq(m, b, rcond=None)
    residual = float(np.max(np.abs(m @ weights - b)))
    pi = cyclic_shift_matrix(d)
    transfer = np.zeros((d, d))
    power = np.eye(d)
    for i in range(d):
        transfer += weights[i] * power
        power = power @ pi
    return CirculantTransform(
        beta_in=beta_in,
        beta_out=beta_out,
        weights=weights,
        transfer=transfer,
        feasible=bool(weights.min() >= -ATOL_PHYSICAL and residual <= 1e-9),
        residual=residual,
        underdetermined=rank < d,
    )


def assemble_global_unitary(rotations: list, d: int) -> np.ndarray:
    """Embed one rotation per diagonal family into the pair space.

    ``rotations[j]`` (a ``SubspaceRotation`` or a plain unitary matrix in
    the computational labels of ``S_j``) contributes the entries
    ``U[m d + (m+j), n d + (n+j)] = R_j[m, n]``.
    """
    d = _check_dim(d)
    if len(rotations) != d:
        raise ValueError(f"need exactly {d} rotations, got {len(rotations)}")
    u = np.zeros((d * d, d * d), dtype=complex)
    for j, item in enumerate(rotations):
        r = item.rotation if isinstance(item, SubspaceRotation) else np.asarray(item)
        if r.shape != (d, d):
            raise ValueError(f"rotation {j} has shape {r.shape}, expected {(d, d)}")
        for mm in range(d):
            for nn in range(d):
                u[mm * d + (mm + j) % d, nn * d + (nn + j) % d] = r[mm, nn]
    return u


def extract_transfer_matrices(u: np.ndarray, d: int) -> list[np.ndarray]:
    """Per-family stochastic matrices ``T_j[m, n] = |U restricted to S_j|^2``."""
    d = _check_dim(d)
    u = np.asarray(u)
    out = []
    for j in range(d):
        t = np.empty((d, d))
        for mm in range(d):
            for nn in range(d):
                t[mm, nn] = abs(u[mm * d + (mm + j) % d, nn * d + (nn + j) % d]) ** 2
        out.append(t)
    return out


def subspace_leakage(u: np.ndarray, d: int) -> float:
    """Largest matrix element of ``u`` connecting two different families."""
    d = _check_dim(d)
    u = np.asarray(u)
    mask = np.ones((d * d, d * d), dtype=bool)
    for j in range(d):
        for mm in range(d):
            for nn in range(d):
                mask[mm * d + (mm + j) % d, nn * d + (nn + j) % d] = False
    return float(np.max(np.abs(u[mask]))) if mask.any() else 0.0


def _weights_of_phases(phases: np.ndarray) -> np.ndarray:
    return np.abs(np.fft.ifft(np.exp(1j * phases))) ** 2


def _chirp_phases(d: int) -> np.ndarray:
    # Quadratic chirps give perfectly flat |ifft|^2; odd d needs the full-turn
    # quadratic, even d the half-turn one.
    k = np.arange(d, dtype=float)
    return (2.0 * np.pi if d % 2 else np.pi) * k**2 / d


def _batch_objective(phase_rows: np.ndarray, target: np.ndarray) -> np.ndarray:
    weights = np.abs(np.fft.ifft(np.exp(1j * phase_rows), axis=-1)) ** 2
    return np.sum((weights - target) ** 2, axis=-1)


def _line_minimize(f, batch_f, x0: float, span: float = math.pi, coarse: int = 17) -> float:
    """Deterministic 1-D minimizer: batched coarse scan, then golden section."""
    xs = x0 + np.linspace(-span, span, coarse, endpoint=False)
    vals = batch_f(xs)
    best = int(np.argmin(vals))
    step = 2.0 * span / coarse
    a, b = xs[best] - step, xs[best] + step
    ratio = (math.sqrt(5.0) - 1.0) / 2.0
    c1, c2 = b - ratio * (b - a), a + ratio * (b - a)
    f1, f2 = f(c1), f(c2)
    for _ in range(48):
        if b - a < 1e-12:
            break
        if f1 < f2:
            b, c2, f2 = c2, c1, f1
            c1 = b - ratio * (b - a)
            f1 = f(c1)
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + ratio * (b - a)
            f2 = f(c2)
    mid = 0.5 * (a + b)
    return mid if f(mid) <= vals[best] else float(xs[best])


def phases_for_weights(
    target: np.ndarray, tol: float = 1e-10, max_sweeps: int = 40
) -> tuple[np.ndarray, float]:
    """Search eigenphases whose circulant realizes the target weights.

    Deterministic coordinate descent (first phase pinned to zero) started
    from a fixed grid: the zero vector, the flat-spectrum chirp, all linear
    ramps, and the best corners of a coarse lattice, most promising starts
    first.  Returns the best phases found and the max-norm residual
    ``max_i |eta_i - target_i|``; callers decide whether the residual is
    acceptable, since not every doubly stochastic circulant is realizable
    for ``d > 2``.
    """
    target = np.asarray(target, dtype=float)
    d = target.size

    def objective(ph: np.ndarray) -> float:
        return float(np.sum((_weights_of_phases(ph) - target) ** 2))

    candidates: list[np.ndarray] = [np.zeros(d), _chirp_phases(d)]
    for m in range(1, d):
        candidates.append(2.0 * np.pi * m * np.arange(d, dtype=float) / d)
    candidates.extend(
        np.array((0.0,) + combo)
        for combo in product((0.0, math.pi / 2.0, math.pi, 1.5 * math.pi), repeat=d - 1)
    )
    # Rank once by initial objective, descend only the most promising few.
    candidates.sort(key=objective)
    starts = candidates[:6]

    best_phases = starts[0].copy()
    best_obj = objective(best_phases)
    for start in starts:
        ph = np.array(start, dtype=float)
        ph[0] = 0.0
        current = objective(ph)
        for _ in range(max_sweeps):
            previous = current
            for i in range(1, d):
                def slice_obj(x: float, i: int = i) -> float:
                    trial = ph.copy()
                    trial[i] = x
                    return objective(trial)

                def slice_batch(xs: np.ndarray, i: int = i) -> np.ndarray:
                    trials = np.tile(ph, (xs.size, 1))
                    trials[:, i] = xs
                    return _batch_objective(trials, target)

                ph[i] = _line_minimize(slice_obj, slice_batch, ph[i])
            current = objective(ph)
            if previous - current < 1e-18:
                break
        if current < best_obj:
            best_obj = current
            best_phases = ph.copy()
        if math.sqrt(best_obj) < 0.1 * tol:
            break
    residual = float(np.max(np.abs(_weights_of_phases(best_phases) - target)))
    return best_phases, residual


@dataclass(frozen=True)
class PhaseSearchResult:
    """Outcome of temperature targeting through the circulant construction."""

    phases: np.ndarray
    rotation: SubspaceRotation
    target_weights: np.ndarray
    achieved_weights: np.ndarray
    residual: float


def find_phases_for_target(
    beta_in: float,
    beta_out: float,
    hamiltonian: Hamiltonian,
    tol: float = 1e-8,
) -> PhaseSearchResult:
    """Phases whose circulant drives local Gibbs states to ``beta_out``.

    Raises ``ValueError`` when the weight system itself is infeasible and
    ``RuntimeError`` when the bounded phase search cannot realize a feasible
    weight vector within ``tol``.
    """
    transform = solve_mixing_weights(beta_in, beta_out, hamiltonian)
    if not transform.feasible:
        raise ValueError(
            f"target beta_out={beta_out} is infeasible for beta_in={beta_in}: "
            f"min weight {transform.weights.min():.3e}"
        )
    target = np.clip(transform.weights, 0.0, None)
    target = target / target.sum()
    phases, residual = phases_for_weights(target, tol=tol)
    if residual > tol:
        raise RuntimeError(
            f"phase search residual {residual:.3e} exceeds tol {tol:.1e}; "
            "this weight vector appears unreachable by a single circulant"
        )
    rotation = circulant_unitary(phases)
    return PhaseSearchResult(
        phases=phases,
        rotation=rotation,
        target_weights=target,
        achieved_weights=rotation.weights,
        residual=residual,
    )


@dataclass(frozen=True)
class LocalGibbsReport:
    """Structural diagnostics of a candidate output state.

    ``passed`` covers what every family-preserving unitary must deliver:
    diagonal marginals and, when the unitary is supplied, doubly stochastic
    family transfers with no leakage.  Temperature fields are best-effort
    descriptions; random-phase protocols legitimately produce diagonal
    non-Gibbs marginals, so Gibbs-ness is reported, not enforced.
    """

    dim: int
    max_offdiag_a: float
    max_offdiag_b: float
    beta_a: float
    beta_b: float
    fit_residual_a: float
    fit_residual_b: float
    marginal_asymmetry: float
    stochastic_residual: float | None
    leakage: float | None
    passed: bool


def validate_local_gibbs(
    rho_out: np.ndarray,
    hamiltonian: Hamiltonian,
    unitary: np.ndarray | None = None,
    atol: float = ATOL_PHYSICAL,
) -> LocalGibbsReport:
    """Check the structural guarantees of the qudit correlator output."""
    d = hamiltonian.dim
    rho_out = np.asarray(rho_out, dtype=complex)
    if rho_out.shape != (d * d, d * d):
        raise ValueError(f"state shape {rho_out.shape} does not match dim {d}")
    marg_a = partial_trace(rho_out, (d, d), "A")
    marg_b = partial_trace(rho_out, (d, d), "B")
    off_a = float(np.max(np.abs(marg_a - np.diag(marg_a.diagonal()))))
    off_b = float(np.max(np.abs(marg_b - np.diag(marg_b.diagonal()))))
    beta_a, res_a = fit_inverse_temperature(
        marg_a.diagonal().real, hamiltonian.local_energies
    )
    beta_b, res_b = fit_inverse_temperature(
        marg_b.diagonal().real, hamiltonian.local_energies
    )
    asymmetry = float(np.max(np.abs(marg_a.diagonal().real - marg_b.diagonal().real)))

    stochastic_residual = None
    leakage = None
    if unitary is not None:
        leakage = subspace_leakage(unitary, d)
        worst = 0.0
        for t in extract_transfer_matrices(unitary, d):
            worst = max(
                worst,
                float(np.max(np.abs(t.sum(axis=0) - 1.0))),
                float(np.max(np.abs(t.sum(axis=1) - 1.0))),
                float(max(0.0, -t.min())),
            )
        stochastic_residual = max(worst, leakage)

    passed = off_a <= atol and off_b <= atol
    if stochastic_residual is not None:
        passed = passed and stochastic_residual <= atol
    return LocalGibbsReport(
        dim=d,
        max_offdiag_a=off_a,
        max_offdiag_b=off_b,
        beta_a=beta_a,
        beta_b=beta_b,
        fit_residual_a=res_a,
        fit_residual_b=res_b,
        marginal_asymmetry=asymmetry,
        stochastic_residual=stochastic_residual,
        leakage=leakage,
        passed=passed,
    )
