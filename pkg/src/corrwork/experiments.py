"""Deterministic figure datasets and validation reports behind the CLI.

Every experiment produces a ``CsvDataset``: provenance comments echoing the
effective configuration, a header, and rows of plain numbers.  Serialization
is pinned down hard (12 significant digits, LF endings, booleans as
``true``/``false``), so the same configuration always yields byte-identical
output; nothing here reads clocks, hostnames or RNGs.

Output-temperature sweeps are sampled uniformly in ``tanh(beta_out omega/2)``
rather than in ``beta_out`` itself: work is linear in that variable, so the
curves are traced with even coverage instead of bunching near the endpoints.
"""

from __future__ import annotations

import argparse
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence, TextIO

import numpy as np

from . import __version__
from .qubit import (
    UnitaryParams,
    correlating_unitary,
    mutual_information_from_temperatures,
    work_cost_from_temperatures,
)
from .qudit import (
    assemble_global_unitary,
    circulant_unitary,
    phases_for_weights,
    solve_mixing_weights,
    validate_local_gibbs,
)
from .thermal import build_hamiltonian, thermal_state
from .workstats import (
    distribution_moments,
    two_time_work_distribution,
    work_variance_angles_closed_form,
    work_variance_from_temperatures,
)

__all__ = [
    "ExperimentConfig",
    "CsvDataset",
    "ValidationError",
    "EXPERIMENTS",
    "parse_config",
    "run_experiment",
    "write_csv",
    "render_csv",
]


class ValidationError(RuntimeError):
    """An internal numerical invariant failed while building a dataset."""


_DEFAULT_BETAS = {
    "fig1": (1.0,),
    "fig2": (4.0,),
    "fig3": (100.0, 1.0, 0.1),
    "fig4": (100.0, 1.0, 0.1),
    "fig5": (100.0, 1.0, 0.1),
    "dist": (1.0,),
    "qudit": (1.0,),
    "errata": (1.0,),
}

_DEFAULT_GRIDS = {
    "fig1": 201,
    "fig2": 101,
    "fig3": 201,
    "fig4": 201,
    "fig5": 201,
    "dist": 201,
    "qudit": 21,
    "errata": 5,
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Effective settings of one experiment run."""

    experiment: str
    omega: float = 1.0
    beta_in: tuple[float, ...] = ()
    grid: int = 0
    log_base: str = "e"
    theta: float = math.pi / 4.0
    delta: float = 0.0
    dim: int = 2
    beta_out: float | None = None
    out: str = "-"
    plot: bool = False

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ValueError(
                f"unknown experiment {self.experiment!r}; "
                f"choose from {', '.join(sorted(EXPERIMENTS))}"
            )
        if not (math.isfinite(self.omega) and self.omega > 0.0):
            raise ValueError(f"omega must be finite and positive, got {self.omega}")
        betas = tuple(self.beta_in) or _DEFAULT_BETAS[self.experiment]
        for b in betas:
            if not (math.isfinite(b) and b > 0.0):
                raise ValueError(f"beta_in entries must be finite and positive, got {b}")
        object.__setattr__(self, "beta_in", betas)
        grid = self.grid or _DEFAULT_GRIDS[self.experiment]
        if grid < 2:
            raise ValueError(f"grid must be at least 2, got {grid}")
        object.__setattr__(self, "grid", int(grid))
        if self.log_base not in ("e", "2"):
            raise ValueError(f"log_base must be 'e' or '2', got {self.log_base!r}")
        if self.dim not in (2, 3, 4):
            raise ValueError(f"d must be 2, 3 or 4, got {self.dim}")
        if self.beta_out is not None and not math.isfinite(self.beta_out):
            raise ValueError(f"beta_out must be finite, got {self.beta_out}")


@dataclass
class CsvDataset:
    """Comment lines, header, and rows ready for serialization."""

    comments: list[str]
    header: list[str]
    rows: list[tuple] = field(default_factory=list)


def _worker_count() -> int:
    raw = os.environ.get("CORRWORK_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _ordered_map(fn: Callable, items: Sequence) -> list:
    """Map preserving order; threads only when CORRWORK_THREADS asks for them."""
    workers = _worker_count()
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _base_comments(cfg: ExperimentConfig) -> list[str]:
    return [
        f"corrwork {__version__}",
        f"experiment = {cfg.experiment}",
        f"omega = {_fmt(cfg.omega)}",
        "beta_in = " + ",".join(_fmt(b) for b in cfg.beta_in),
        f"grid = {cfg.grid}",
        f"log_base = {cfg.log_base}",
    ]


def _tanh_half(beta: float, omega: float) -> float:
    return math.tanh(beta * omega / 2.0)


def _beta_of_tanh(u: float, omega: float) -> float:
    if u >= 1.0:
        return math.inf
    if u <= -1.0:
        return -math.inf
    return 2.0 / omega * math.atanh(u)


def _beta_out_sweep(beta_in: float, omega: float, n: int, descending: bool) -> list[float]:
    t_in = _tanh_half(beta_in, omega)
    grid = np.linspace(t_in, -t_in, n) if descending else np.linspace(-t_in, t_in, n)
    return [_beta_of_tanh(float(u), omega) for u in grid]


def _check_bound(beta_in: float, work: float, mi_nats: float, omega: float) -> None:
    if beta_in * work - mi_nats < -1e-9:
        raise ValidationError(
            f"correlation bound violated: beta_in*W - I = "
            f"{beta_in * work - mi_nats:.3e} at beta_in={beta_in}"
        )
    bound = 2.0 * omega * _tanh_half(beta_in, omega)
    if work > bound + 1e-12:
        raise ValidationError(f"work {work} exceeds bound {bound} at beta_in={beta_in}")


def _fig1(cfg: ExperimentConfig) -> CsvDataset:
    comments = _base_comments(cfg)
    for b in cfg.beta_in:
        bound = 2.0 * cfg.omega * _tanh_half(b, cfg.omega)
        comments.append(f"work_bound[beta_in={_fmt(b)}] = {_fmt(bound)}")

    def curve(b: float) -> list[tuple]:
        rows = []
        for b_out in _beta_out_sweep(b, cfg.omega, cfg.grid, descending=False):
            work = work_cost_from_temperatures(b, b_out, cfg.omega)
            mi_nats = mutual_information_from_temperatures(b, b_out, cfg.omega)
            _check_bound(b, work, mi_nats, cfg.omega)
            mi = mutual_information_from_temperatures(b, b_out, cfg.omega, cfg.log_base)
            rows.append((b, b_out, mi, work))
        return rows

    dataset = CsvDataset(comments, ["beta_in", "beta_out", "mutual_information", "work"])
    for rows in _ordered_map(curve, cfg.beta_in):
        dataset.rows.extend(rows)
    return dataset


def _fig2(cfg: ExperimentConfig) -> CsvDataset:
    comments = _base_comments(cfg)
    for b in cfg.beta_in:
        plane = cfg.omega * _tanh_half(b, cfg.omega)
        comments.append(f"max_mi_work_plane[beta_in={_fmt(b)}] = {_fmt(plane)}")
    angles = np.linspace(-math.pi / 2.0, math.pi / 2.0, cfg.grid)

    def surface(b: float) -> list[tuple]:
        t_in = _tanh_half(b, cfg.omega)
        bound = 2.0 * cfg.omega * t_in
        rows = []
        for delta in angles:
            cos_sq = math.cos(delta) ** 2
            for theta in angles:
                work = 2.0 * cfg.omega * t_in * cos_sq * math.sin(theta) ** 2
                if not -1e-12 <= work <= bound + 1e-12:
                    raise ValidationError(f"work {work} outside [0, {bound}]")
                rows.append((b, float(delta), float(theta), work))
        return rows

    dataset = CsvDataset(comments, ["beta_in", "delta", "theta", "work"])
    for rows in _ordered_map(surface, cfg.beta_in):
        dataset.rows.extend(rows)
    return dataset


def _ratio_curve(cfg: ExperimentConfig, kind: str) -> CsvDataset:
    """Shared builder for the two curves parametrized by increasing work.

    ``kind`` selects the second observable: the fluctuation ratio
    ``sigma_W / W`` or the energy-spread change per unit work.  Both are
    singular 0/0 at the zero-work endpoint, so that row is dropped (noted in
    the comments).
    """
    comments = _base_comments(cfg)
    comments.append("zero-work endpoint omitted: both numerator and work vanish there")
    if kind == "ratio":
        header = ["beta_in", "work", "delta_mi", "sigma_w_over_w"]
    else:
        header = ["beta_in", "work", "delta_mi", "spread_change_over_work"]

    def curve(b: float) -> list[tuple]:
        rows = []
        sweep = _beta_out_sweep(b, cfg.omega, cfg.grid, descending=True)[1:]
        for b_out in sweep:
            work = work_cost_from_temperatures(b, b_out, cfg.omega)
            mi_nats = mutual_information_from_temperatures(b, b_out, cfg.omega)
            _check_bound(b, work, mi_nats, cfg.omega)
            mi = mutual_information_from_temperatures(b, b_out, cfg.omega, cfg.log_base)
            if kind == "ratio":
                variance = work_variance_from_temperatures(b, b_out, cfg.omega)
                if variance < -1e-12:
                    raise ValidationError(f"negative work variance {variance}")
                value = math.sqrt(max(variance, 0.0)) / work
            else:
                value = _spread_change(b, b_out, cfg.omega) / work
            rows.append((b, work, mi, value))
        return rows

    dataset = CsvDataset(comments, header)
    for rows in _ordered_map(curve, cfg.beta_in):
        dataset.rows.extend(rows)
    return dataset


def _spread_change(beta_in: float, beta_out: float, omega: float) -> float:
    # sigma_Ei^2 = (omega^2/2) sech^2(beta_in omega/2); sigma_Ef^2 follows
    # from the closed-form final state.  np.cosh saturates to inf instead of
    # raising, which the 1/(1+cosh) forms absorb cleanly.
    x = beta_in * omega
    sigma_i = math.sqrt(0.5) * omega / float(np.cosh(x / 2.0))
    final_sq = 1.0 - 1.0 / (1.0 + float(np.cosh(x))) - _tanh_half(beta_out, omega) ** 2
    return omega * math.sqrt(max(final_sq, 0.0)) - sigma_i


def _fig3(cfg: ExperimentConfig) -> CsvDataset:
    return _ratio_curve(cfg, "ratio")


def _fig4(cfg: ExperimentConfig) -> CsvDataset:
    comments = _base_comments(cfg)

    def curve(b: float) -> list[tuple]:
        rows = []
        for b_out in _beta_out_sweep(b, cfg.omega, cfg.grid, descending=True):
            work = work_cost_from_temperatures(b, b_out, cfg.omega)
            variance = work_variance_from_temperatures(b, b_out, cfg.omega)
            if variance < -1e-12:
                raise ValidationError(f"negative work variance {variance}")
            rows.append((b, work, math.sqrt(max(variance, 0.0))))
        return rows

    dataset = CsvDataset(comments, ["beta_in", "work", "sigma_w"])
    for rows in _ordered_map(curve, cfg.beta_in):
        dataset.rows.extend(rows)
    return dataset


def _fig5(cfg: ExperimentConfig) -> CsvDataset:
    return _ratio_curve(cfg, "spread")


def _dist(cfg: ExperimentConfig) -> CsvDataset:
    beta = cfg.beta_in[0]
    hamiltonian = build_hamiltonian(cfg.omega, 2)
    rho = thermal_state(beta, hamiltonian)
    u = correlating_unitary(UnitaryParams(theta=cfg.theta, delta=cfg.delta))
    dist = two_time_work_distribution(rho, u, hamiltonian)
    mean, variance = distribution_moments(dist)
    comments = _base_comments(cfg)
    comments += [
        f"theta = {_fmt(cfg.theta)}",
        f"delta = {_fmt(cfg.delta)}",
        f"mean = {_fmt(mean)}",
        f"variance = {_fmt(variance)}",
    ]
    lookup = dict(zip(dist.support, dist.probabilities))
    up = lookup.get(2.0 * cfg.omega)
    down = lookup.get(-2.0 * cfg.omega)
    if up is not None and down is not None and down > 0.0:
        expected = math.exp(2.0 * beta * cfg.omega)
        if abs(up / down - expected) > 1e-10 * expected:
            raise ValidationError(
                f"detailed balance broken: P(+)/P(-) = {up / down}, expected {expected}"
            )
        comments.append(f"detailed_balance_ratio = {_fmt(up / down)}")
    dataset = CsvDataset(comments, ["work", "probability"])
    dataset.rows = [(float(w), float(p)) for w, p in zip(dist.support, dist.probabilities)]
    return dataset


def _qudit(cfg: ExperimentConfig) -> CsvDataset:
    d = cfg.dim
    hamiltonian = build_hamiltonian(cfg.omega, d)
    comments = _base_comments(cfg)
    comments += [
        f"d = {d}",
        "feasible means the weight system has a convex solution; "
        "search_residual reports how closely one circulant realizes it",
    ]
    header = ["d", "beta_in", "beta_out_target", "beta_out_achieved"]
    header += [f"eta_{i}" for i in range(d)]
    header += ["feasible", "search_residual"]

    def one_target(item: tuple[float, float]) -> tuple:
        b_in, b_target = item
        transform = solve_mixing_weights(b_in, b_target, hamiltonian)
        etas = tuple(float(w) for w in transform.weights)
        if not transform.feasible:
            return (d, b_in, b_target, math.nan) + etas + (False, math.nan)
        target = np.clip(transform.weights, 0.0, None)
        target = target / target.sum()
        phases, residual = phases_for_weights(target, tol=1e-8)
        rotation = circulant_unitary(phases)
        u = assemble_global_unitary([rotation] * d, d)
        rho_out = u @ thermal_state(b_in, hamiltonian) @ u.conj().T
        report = validate_local_gibbs(rho_out, hamiltonian, unitary=u, atol=1e-8)
        if not report.passed:
            raise ValidationError(
                f"structural check failed at beta_out={b_target}: "
                f"off-diagonals ({report.max_offdiag_a:.3e}, "
                f"{report.max_offdiag_b:.3e}), "
                f"stochastic residual {report.stochastic_residual}"
            )
        achieved = report.beta_a
        if residual <= 1e-8:
            gap = abs(
                _tanh_half(achieved, cfg.omega) - _tanh_half(b_target, cfg.omega)
            )
            if gap > 1e-6:
                raise ValidationError(
                    f"reached the target weights but not the temperature: "
                    f"target {b_target}, achieved {achieved}"
                )
        return (d, b_in, b_target, achieved) + etas + (True, residual)

    items: list[tuple[float, float]] = []
    for b_in in cfg.beta_in:
        if cfg.beta_out is not None:
            items.append((b_in, cfg.beta_out))
        else:
            targets = np.linspace(-1.25 * b_in, 1.25 * b_in, cfg.grid)
            items.extend((b_in, float(t)) for t in targets)
    dataset = CsvDataset(comments, header)
    dataset.rows = _ordered_map(one_target, items)
    return dataset


def _errata(cfg: ExperimentConfig) -> CsvDataset:
    comments = _base_comments(cfg)
    comments += [
        "printed_form is the angle-parametrized closed form evaluated verbatim;",
        "measured_variance is the two-time-measurement value; they disagree,",
        "most visibly at delta = 0 where printed_form is identically zero",
    ]
    angles = np.linspace(0.0, math.pi / 2.0, cfg.grid)
    hamiltonian = build_hamiltonian(cfg.omega, 2)
    rows = []
    for b in cfg.beta_in:
        rho = thermal_state(b, hamiltonian)
        for theta in angles:
            for delta in angles:
                params = UnitaryParams(theta=float(theta), delta=float(delta))
                printed = work_variance_angles_closed_form(b, cfg.omega, params)
                dist = two_time_work_distribution(
                    rho, correlating_unitary(params), hamiltonian
                )
                _, measured = distribution_moments(dist)
                rows.append(
                    (b, float(theta), float(delta), printed, measured,
                     abs(printed - measured))
                )
    dataset = CsvDataset(
        comments,
        ["beta_in", "theta", "delta", "printed_form", "measured_variance",
         "discrepancy"],
    )
    dataset.rows = rows
    return dataset


EXPERIMENTS: dict[str, Callable[[ExperimentConfig], CsvDataset]] = {
    "fig1": _fig1,
    "fig2": _fig2,
    "fig3": _fig3,
    "fig4": _fig4,
    "fig5": _fig5,
    "dist": _dist,
    "qudit": _qudit,
    "errata": _errata,
}


def run_experiment(cfg: ExperimentConfig) -> CsvDataset:
    """Build the dataset for ``cfg``; raises ``ValidationError`` on breaches."""
    return EXPERIMENTS[cfg.experiment](cfg)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    x = float(value)
    if x == 0.0:
        x = 0.0  # normalize -0.0 so output bytes never depend on sign tricks
    return format(x, ".12g")


def render_csv(dataset: CsvDataset) -> str:
    lines = [f"# {c}" for c in dataset.comments]
    lines.append(",".join(dataset.header))
    for row in dataset.rows:
        if len(row) != len(dataset.header):
            raise ValueError(f"row width {len(row)} != header width {len(dataset.header)}")
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(dataset: CsvDataset, stream: TextIO) -> None:
    stream.write(render_csv(dataset))


def parse_config(
    argv: Sequence[str] | None = None,
    config_file: str | None = None,
) -> ExperimentConfig:
    """Build an ``ExperimentConfig`` from CLI-style arguments.

    A JSON config file (``--config`` or the ``config_file`` argument) may
    provide any of the same settings; explicit flags override file values.
    """
    parser = argparse.ArgumentParser(
        prog="corrwork",
        description=(
            "Datasets for the work cost and work fluctuations of "
            "correlation-creating unitaries on thermal pairs"
        ),
    )
    parser.add_argument("experiment", choices=sorted(EXPERIMENTS))
    parser.add_argument(
        "--beta-in", help="comma-separated inverse temperatures, e.g. 100,1,0.1"
    )
    parser.add_argument("--omega", type=float, help="level spacing (default 1)")
    parser.add_argument("--grid", type=int, help="points per sweep axis")
    parser.add_argument("--log-base", choices=("e", "2"), dest="log_base")
    parser.add_argument("--theta", type=float, help="dist experiment rotation angle")
    parser.add_argument("--delta", type=float, help="dist experiment phase angle")
    parser.add_argument("--d", type=int, choices=(2, 3, 4), dest="dim",
                        help="local dimension for the qudit experiment")
    parser.add_argument("--beta-out", type=float, dest="beta_out",
                        help="single qudit target instead of a sweep")
    parser.add_argument("--out", help="output path, or - for stdout (default)")
    parser.add_argument("--plot", action="store_true", default=None,
                        help="render a figure next to the CSV output")
    parser.add_argument("--config", help="JSON file with the same settings")
    args = parser.parse_args(argv)

    file_values: dict = {}
    path = args.config or config_file
    if path:
        with open(path, "r", encoding="utf-8") as fh:
            file_values = json.load(fh)
        if not isinstance(file_values, dict):
            raise ValueError(f"config file {path} must hold a JSON object")

    def pick(flag, key: str, fallback):
        if flag is not None:
            return flag
        return file_values.get(key, fallback)

    beta_raw = pick(args.beta_in, "beta_in", None)
    if beta_raw is None:
        betas: tuple[float, ...] = ()
    elif isinstance(beta_raw, str):
        betas = tuple(float(part) for part in beta_raw.split(","))
    else:
        betas = tuple(float(b) for b in beta_raw)

    return ExperimentConfig(
        experiment=args.experiment,
        omega=float(pick(args.omega, "omega", 1.0)),
        beta_in=betas,
        grid=int(pick(args.grid, "grid", 0)),
        log_base=str(pick(args.log_base, "log_base", "e")),
        theta=float(pick(args.theta, "theta", math.pi / 4.0)),
        delta=float(pick(args.delta, "delta", 0.0)),
        dim=int(pick(args.dim, "d", 2)),
        beta_out=pick(args.beta_out, "beta_out", None),
        out=str(pick(args.out, "out", "-")),
        plot=bool(pick(args.plot, "plot", False)),
    )
