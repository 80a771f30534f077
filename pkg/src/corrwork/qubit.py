"""Correlation-creating unitaries on a thermal qubit pair.

The unitary family is block diagonal on the even subspace
``span{|00>, |11>}`` and the odd subspace ``span{|01>, |10>}``.  Angles
``(theta, delta)`` parametrize the even block, ``(phi, gamma)`` the odd one.
Acting on a thermal input, only the even block moves populations: the odd
block sees two equal weights, so ``phi`` and ``gamma`` change nothing
downstream.  Closed forms below are expressed through the even-block angles
and the inverse temperatures they induce.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import ATOL_ALGEBRAIC, check_density_matrix, dagger, validate_unitary
from .thermal import _check_beta, _log_divisor

__all__ = [
    "UnitaryParams",
    "TwoQubitFinalState",
    "correlating_unitary",
    "apply_unitary",
    "final_state_closed_form",
    "final_inverse_temperature",
    "work_cost",
    "work_cost_from_temperatures",
    "iso_work_theta",
    "mutual_information_from_temperatures",
    "max_correlations",
]


def _wrap_angle(x: float) -> float:
    """Map to the canonical interval [-pi, pi)."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"angle must be finite, got {x}")
    wrapped = math.fmod(x + math.pi, 2.0 * math.pi)
    if wrapped < 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


@dataclass(frozen=True)
class UnitaryParams:
    """Rotation angles of the two-qubit correlating unitary.

    All four angles are canonicalized to ``[-pi, pi)`` on construction.
    """

    theta: float
    delta: float
    phi: float = 0.0
    gamma: float = 0.0

    def __post_init__(self) -> None:
        for name in ("theta", "delta", "phi", "gamma"):
            object.__setattr__(self, name, _wrap_angle(getattr(self, name)))


def correlating_unitary(params: UnitaryParams) -> np.ndarray:
    """Build the 4x4 block unitary for the given angles.

    Basis order is lexicographic ``|00>, |01>, |10>, |11>``.  Each block is
    an SU(2) rotation; the even block mixes ``|00>`` with ``|11>`` and
    carries the thermodynamically relevant angles.
    """
    a = math.cos(params.theta) + 1j * math.sin(params.delta) * math.sin(params.theta)
    b = math.cos(params.delta) * math.sin(params.theta)
    c = math.cos(params.phi) + 1j * math.sin(params.gamma) * math.sin(params.phi)
    d = math.cos(params.gamma) * math.sin(params.phi)
    u = np.zeros((4, 4), dtype=complex)
    u[0, 0], u[0, 3] = a, b
    u[3, 0], u[3, 3] = -b, np.conj(a)
    u[1, 1], u[1, 2] = c, d
    u[2, 1], u[2, 2] = -d, np.conj(c)
    return u


def apply_unitary(rho: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Conjugate ``rho`` by ``u`` and revalidate the result as a state."""
    rho = np.asarray(rho, dtype=complex)
    u = np.asarray(u, dtype=complex)
    if rho.shape != u.shape:
        raise ValueError(f"shape mismatch: state {rho.shape} vs unitary {u.shape}")
    report = validate_unitary(u)
    if not report.passed:
        raise ValueError(f"matrix is not unitary: residual {report.residual:.3e}")
    return check_density_matrix(u @ rho @ dagger(u))


@dataclass(frozen=True)
class TwoQubitFinalState:
    """Closed-form image of the thermal pair under the even-block rotation.

    The populations of ``|00>`` and ``|11>`` are ``a_minus / z`` and
    ``a_plus / z``; the only coherence sits between those two states with
    amplitude ``b_plus / z`` (and its conjugate ``b_minus / z``).  The odd
    subspace keeps its two equal weights ``1 / z``.
    """

    beta_in: float
    omega: float
    a_plus: float
    a_minus: float
    b_plus: complex
    b_minus: complex
    z: float

    def matrix(self) -> np.ndarray:
        m = np.diag([self.a_minus, 1.0, 1.0, self.a_plus]).astype(complex)
        m[0, 3] = self.b_plus
        m[3, 0] = self.b_minus
        return m / self.z


def final_state_closed_form(
    beta_in: float, omega: float, params: UnitaryParams
) -> TwoQubitFinalState:
    """Analytic final state of the protocol on a thermal input.

    Valid for finite ``beta_in``; the exponentials are genuine
    ``exp(+-beta omega)`` factors, normalized by the pair partition function
    ``z = (exp(-beta omega / 2) + exp(beta omega / 2))^2``.
    """
    beta_in = _check_beta(beta_in)
    if math.isinf(beta_in):
        raise ValueError("closed form requires finite beta_in")
    x = beta_in * omega
    mixing = math.cos(params.delta) ** 2 * math.sin(params.theta) ** 2
    a_plus = math.exp(x) - 2.0 * math.sinh(x) * mixing
    a_minus = math.exp(-x) + 2.0 * math.sinh(x) * mixing
    b_amp = 2.0 * math.sinh(x) * math.cos(params.delta) * math.sin(params.theta)
    b_plus = b_amp * (
        math.cos(params.theta) + 1j * math.sin(params.delta) * math.sin(params.theta)
    )
    z = (math.exp(-x / 2.0) + math.exp(x / 2.0)) ** 2
    return TwoQubitFinalState(
        beta_in=beta_in,
        omega=omega,
        a_plus=a_plus,
        a_minus=a_minus,
        b_plus=b_plus,
        b_minus=np.conj(b_plus),
        z=z,
    )


def _tanh_half(beta: float, omega: float) -> float:
    if math.isinf(beta):
        return 1.0 if beta > 0 else -1.0
    return math.tanh(beta * omega / 2.0)


def final_inverse_temperature(
    beta_in: float, omega: float, params: UnitaryParams
) -> float:
    """Local inverse temperature after the protocol.

    Both qubits end at the same ``beta_out``, fixed by
    ``tanh(beta_out omega / 2) =
    tanh(beta_in omega / 2) * (1 - 2 cos^2(delta) sin^2(theta))``.
    The image always lies in ``[-beta_in, beta_in]``.
    """
    beta_in = _check_beta(beta_in)
    mixing = math.cos(params.delta) ** 2 * math.sin(params.theta) ** 2
    t_out = _tanh_half(beta_in, omega) * (1.0 - 2.0 * mixing)
    if t_out >= 1.0:
        return math.inf
    if t_out <= -1.0:
        return -math.inf
    return 2.0 / omega * math.atanh(t_out)


def work_cost(beta_in: float, omega: float, params: UnitaryParams) -> float:
    """Average work cost ``2 omega tanh(beta_in omega / 2) cos^2(delta) sin^2(theta)``."""
    beta_in = _check_beta(beta_in)
    mixing = math.cos(params.delta) ** 2 * math.sin(params.theta) ** 2
    return 2.0 * omega * _tanh_half(beta_in, omega) * mixing


def work_cost_from_temperatures(beta_in: float, beta_out: float, omega: float) -> float:
    """Work cost ``omega * (tanh(beta_in omega/2) - tanh(beta_out omega/2))``.

    ``beta_out`` must lie in the reachable band ``[-|beta_in|, |beta_in|]``;
    anything outside is rejected because no protocol unitary produces it.
    """
    beta_in = _check_beta(beta_in)
    beta_out = _check_beta(beta_out)
    t_in = _tanh_half(beta_in, omega)
    t_out = _tanh_half(beta_out, omega)
    if abs(t_out) > abs(t_in) + ATOL_ALGEBRAIC:
        raise ValueError(
            f"beta_out={beta_out} outside the reachable band for beta_in={beta_in}"
        )
    return omega * (t_in - t_out)


def iso_work_theta(delta: float, work: float, beta_in: float, omega: float) -> float:
    """Angle ``theta`` on the constant-work contour at the given ``delta``.

    Returns the principal branch
    ``arcsin(sqrt(W coth(beta_in omega / 2) / (2 omega)) / cos(delta))``.
    Raises ``ValueError`` when the contour does not reach this ``delta``.
    Solutions come in mirror families (``pi - theta``, ``-delta``); no
    preferred representative is chosen beyond the principal branch.
    """
    beta_in = _check_beta(beta_in)
    t_in = _tanh_half(beta_in, omega)
    if work < 0.0 or t_in <= 0.0:
        raise ValueError("iso-work contour needs work >= 0 and beta_in > 0")
    cos_d = math.cos(delta)
    if cos_d == 0.0:
        raise ValueError(f"no theta at delta={delta}: the contour never reaches it")
    arg = math.sqrt(work / (2.0 * omega * t_in)) / abs(cos_d)
    if arg > 1.0 + ATOL_ALGEBRAIC:
        raise ValueError(
            f"no theta at delta={delta} for work={work}: arcsin argument {arg:.6f} > 1"
        )
    return math.asin(min(arg, 1.0))


def _neg_free_entropy(beta: float, omega: float) -> float:
    # beta*omega*tanh(beta*omega/2) - 2*ln(cosh(beta*omega/2)); even in beta,
    # grows from 0 at beta=0 to 2 ln 2 as |beta| -> inf.  The log-cosh term
    # uses logaddexp so large |beta*omega| cannot overflow.
    if math.isinf(beta):
        return 2.0 * math.log(2.0)
    y = beta * omega / 2.0
    log_cosh = float(np.logaddexp(y, -y)) - math.log(2.0)
    return 2.0 * y * math.tanh(y) - 2.0 * log_cosh


def mutual_information_from_temperatures(
    beta_in: float, beta_out: float, omega: float, log_base: str = "e"
) -> float:
    """Mutual information created when locals move from ``beta_in`` to ``beta_out``.

    Symmetric in ``beta_out -> -beta_out`` and zero at ``|beta_out| =
    |beta_in|``; the maximum over reachable outputs sits at ``beta_out = 0``.
    """
    div = _log_divisor(log_base)
    beta_in = _check_beta(beta_in)
    beta_out = _check_beta(beta_out)
    return (
        _neg_free_entropy(beta_in, omega) - _neg_free_entropy(beta_out, omega)
    ) / div


def max_correlations(
    beta_in: float, omega: float, log_base: str = "e"
) -> tuple[float, float]:
    """Largest reachable mutual information and the work that buys it.

    At ``beta_out = 0`` the mutual information peaks at
    ``beta_in omega tanh(beta_in omega/2) - 2 ln cosh(beta_in omega/2)``
    (which tends to ``ln 4`` for cold inputs) and costs
    ``W = omega tanh(beta_in omega / 2)``, half the global work bound.
    """
    beta_in = _check_beta(beta_in)
    if beta_in <= 0.0:
        raise ValueError(f"beta_in must be positive, got {beta_in}")
    i_max = _neg_free_entropy(beta_in, omega) / _log_divisor(log_base)
    return i_max, omega * _tanh_half(beta_in, omega)
