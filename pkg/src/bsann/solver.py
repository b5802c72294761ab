"""Marching orchestration: per-step training, metrics, comparisons, sweeps.

One network is trained per time step. Step k starts from step k-1's
parameters (warm start), so only the first step pays the full epoch budget.
Option problems march in remaining time tau = T - t with the payoff as row 0;
the fractional benchmark marches forward in t. The stored surface row k is
exactly the trained network evaluated on the collocation grid after step k.

Under the arctan map the grid's x = 1 entry is replaced by the map's
right_eval_point. That surrogate column is evaluated and reported but kept
out of the residual sum and, by default, out of error metrics; the far-field
boundary condition is imposed at the outermost finite grid point.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from .mapping import ARCTAN, DomainMap, from_x
from .network import IDENTITY, NetworkParams, eval_batch, init_params, save_params_csv
from .problems import TERMINAL_PAYOFF, CollocationSet, ProblemSpec, collocation_points
from .stepper import StepHistory, TimeGrid, make_time_grid, spatial_rhs
from .trainer import TrainConfig, TrainingDiverged, train_step_network


def build_collocation(dmap: DomainMap, n_points: int) -> CollocationSet:
    """Equidistant working grid; arctan grids get the x=1 surrogate substituted."""
    if dmap.kind == ARCTAN:
        if n_points < 3:
            raise ValueError("arctan grids need at least 3 points")
        base = collocation_points(0.0, 1.0, n_points).points.copy()
        if dmap.right_eval_point <= base[-2]:
            raise ValueError(
                f"right_eval_point {dmap.right_eval_point} must exceed the last interior "
                f"abscissa {base[-2]}"
            )
        base[-1] = dmap.right_eval_point
        return CollocationSet(points=base)
    return collocation_points(0.0, dmap.s_max, n_points)


def price_points(dmap: DomainMap, colloc: CollocationSet) -> np.ndarray:
    """Collocation abscissae in price coordinates."""
    if dmap.kind == ARCTAN:
        return np.asarray(from_x(dmap, colloc.points), dtype=float)
    return colloc.points.copy()


@dataclass(frozen=True)
class SolveResult:
    problem: ProblemSpec
    dmap: DomainMap
    grid: TimeGrid
    colloc: CollocationSet
    s_points: np.ndarray
    surface: np.ndarray                      # (n_steps+1, r); row 0 is the data
    params_per_step: Tuple[NetworkParams, ...]
    breakdowns: Tuple[np.ndarray, ...]       # per step, (epochs+1, 4)
    wall_times: np.ndarray                   # seconds per step
    surrogate_index: Optional[int]
    theta: float = 1.0
    output_activation: str = IDENTITY

    @property
    def march_times(self) -> np.ndarray:
        return self.grid.times()

    @property
    def natural_times(self) -> np.ndarray:
        """Calendar times per surface row (maturity - tau for option problems)."""
        t = self.grid.times()
        if self.problem.data_kind == TERMINAL_PAYOFF:
            return self.problem.maturity - t
        return t

    def final_row(self) -> np.ndarray:
        return self.surface[-1]


def history_at(result: SolveResult, step_index: int) -> StepHistory:
    """Rebuild the training history as it stood before step step_index + 1."""
    hist = StepHistory(result.surface[0])
    for k in range(1, step_index + 1):
        hist.append(result.surface[k])
    return hist


def _rhs_from_params(
    params: NetworkParams,
    problem: ProblemSpec,
    dmap: DomainMap,
    colloc: CollocationSet,
    s_vals: np.ndarray,
    t: float,
    output_activation: str,
) -> np.ndarray:
    val, d1, d2 = eval_batch(params, colloc.points, output_activation)
    if dmap.kind == ARCTAN:
        half = 0.5 * np.pi * colloc.points
        cos_half = np.cos(half)
        ups = dmap.length * np.pi / (2.0 * cos_half * cos_half)
        th = -2.0 * cos_half * np.sin(half) / dmap.length
        d1, d2 = d1 / ups, d2 / (ups * ups) + th * d1 / ups
    return spatial_rhs(problem.operator, s_vals, t, val, d1, d2)


def _rhs_from_data(
    problem: ProblemSpec, s_vals: np.ndarray, t: float
) -> np.ndarray:
    # spatial rhs of the data row for theta < 1 starts; the data function is
    # a training constant, so finite differences are acceptable here
    h = 1e-6 * np.maximum(1.0, np.abs(s_vals))
    up = problem.data(s_vals + h)
    down = problem.data(np.maximum(s_vals - h, 0.0))
    mid = problem.data(s_vals)
    span = s_vals + h - np.maximum(s_vals - h, 0.0)
    d1 = (up - down) / span
    d2 = (up - 2.0 * mid + down) / (0.5 * span) ** 2
    return spatial_rhs(problem.operator, s_vals, t, mid, d1, d2)


def solve(
    problem: ProblemSpec,
    dmap: DomainMap,
    grid: TimeGrid,
    n_hidden: int,
    n_points: int,
    cfg: TrainConfig,
    theta: float = 1.0,
    init_scale: float = 0.01,
    output_activation: str = IDENTITY,
) -> SolveResult:
    """March all time steps, one trained network per step.

    Raises TrainingDiverged with the failing step index and the partial
    result (completed rows) attached when a step's cost blows up.
    """
    if grid.alpha != problem.alpha:
        raise ValueError(
            f"grid alpha {grid.alpha} does not match problem alpha {problem.alpha}"
        )
    colloc = build_collocation(dmap, n_points)
    s_vals = price_points(dmap, colloc)
    surrogate = colloc.count - 1 if dmap.kind == ARCTAN else None
    history = StepHistory(problem.data(s_vals))
    params = init_params(n_hidden, cfg.seed, init_scale)

    need_rhs_old = grid.alpha == 1.0 and theta < 1.0
    rhs_old = _rhs_from_data(problem, s_vals, 0.0) if need_rhs_old else None

    snapshots = []
    breakdowns = []
    walls = []
    for k in range(1, grid.n_steps + 1):
        t0 = time.perf_counter()
        try:
            res = train_step_network(
                params,
                problem,
                dmap,
                grid,
                colloc,
                history,
                k - 1,
                cfg,
                theta,
                rhs_old,
                output_activation,
            )
        except TrainingDiverged as exc:
            err = TrainingDiverged(
                epoch=exc.epoch, cost=exc.cost, step_index=k - 1, breakdown=exc.breakdown
            )
            err.partial = SolveResult(
                problem=problem,
                dmap=dmap,
                grid=grid,
                colloc=colloc,
                s_points=s_vals,
                surface=history.values(),
                params_per_step=tuple(snapshots),
                breakdowns=tuple(breakdowns),
                wall_times=np.asarray(walls),
                surrogate_index=surrogate,
                theta=theta,
                output_activation=output_activation,
            )
            raise err from exc
        walls.append(time.perf_counter() - t0)
        params = res.params
        history.append(eval_batch(params, colloc.points, output_activation)[0])
        snapshots.append(params)
        breakdowns.append(res.breakdown)
        if need_rhs_old:
            rhs_old = _rhs_from_params(
                params, problem, dmap, colloc, s_vals, k * grid.dt, output_activation
            )
    return SolveResult(
        problem=problem,
        dmap=dmap,
        grid=grid,
        colloc=colloc,
        s_points=s_vals,
        surface=history.values(),
        params_per_step=tuple(snapshots),
        breakdowns=tuple(breakdowns),
        wall_times=np.asarray(walls),
        surrogate_index=surrogate,
        theta=theta,
        output_activation=output_activation,
    )


@dataclass(frozen=True)
class ErrorSummary:
    abs_errors: np.ndarray      # per collocation point at the reporting time
    log10_abs: np.ndarray
    used: np.ndarray            # boolean mask of points entering the maxima
    max_abs: float
    mean_abs: float


def error_metrics(result: SolveResult, exclude_surrogate: bool = True) -> ErrorSummary:
    """Pointwise errors against the problem's exact solution at the final time."""
    if result.problem.exact is None:
        raise ValueError(f"problem {result.problem.name!r} has no exact solution")
    t_final = result.grid.horizon
    exact = np.asarray(result.problem.exact(result.s_points, t_final), dtype=float)
    abs_err = np.abs(exact - result.final_row())
    used = np.ones(abs_err.size, dtype=bool)
    if exclude_surrogate and result.surrogate_index is not None:
        used[result.surrogate_index] = False
    log10 = np.log10(np.maximum(abs_err, 1e-300))
    return ErrorSummary(
        abs_errors=abs_err,
        log10_abs=log10,
        used=used,
        max_abs=float(abs_err[used].max()),
        mean_abs=float(abs_err[used].mean()),
    )


@dataclass(frozen=True)
class OptimizerRun:
    name: str
    breakdown: np.ndarray
    diverged_epoch: Optional[int]
    seconds: float
    seconds_per_epoch: float

    @property
    def trace(self) -> np.ndarray:
        return self.breakdown[:, 3]


@dataclass(frozen=True)
class OptimizerComparison:
    runs: Dict[str, OptimizerRun]
    s_points: np.ndarray


def compare_optimizers(
    problem: ProblemSpec,
    dmap: DomainMap,
    grid: TimeGrid,
    n_hidden: int,
    n_points: int,
    cfg: TrainConfig,
    optimizers: Sequence[str] = ("adam", "sgd", "rmsprop"),
    theta: float = 1.0,
    init_scale: float = 0.01,
    output_activation: str = IDENTITY,
) -> OptimizerComparison:
    """Train the first marching step under each optimizer from one shared start.

    Divergence of an optimizer is recorded as a truncated trace, never raised.
    """
    colloc = build_collocation(dmap, n_points)
    s_vals = price_points(dmap, colloc)
    history = StepHistory(problem.data(s_vals))
    initial = init_params(n_hidden, cfg.seed, init_scale)
    runs: Dict[str, OptimizerRun] = {}
    for name in optimizers:
        run_cfg = replace(cfg, optimizer=name)
        t0 = time.perf_counter()
        diverged_epoch = None
        try:
            res = train_step_network(
                initial, problem, dmap, grid, colloc, history, 0, run_cfg,
                theta, None, output_activation,
            )
            breakdown = res.breakdown
        except TrainingDiverged as exc:
            breakdown = exc.breakdown
            diverged_epoch = exc.epoch
        seconds = time.perf_counter() - t0
        epochs_run = max(1, breakdown.shape[0] - 1)
        runs[name] = OptimizerRun(
            name=name,
            breakdown=breakdown,
            diverged_epoch=diverged_epoch,
            seconds=seconds,
            seconds_per_epoch=seconds / epochs_run,
        )
    return OptimizerComparison(runs=runs, s_points=s_vals)


@dataclass(frozen=True)
class SweepEntry:
    alpha: float
    final_row: Optional[np.ndarray]
    max_abs_error: Optional[float]
    failure: Optional[str] = None


@dataclass(frozen=True)
class SweepResult:
    s_points: np.ndarray
    entries: Tuple[SweepEntry, ...]


def sweep_alpha(
    problem_family: Callable[[float], ProblemSpec],
    alphas: Sequence[float],
    dmap: DomainMap,
    n_steps: int,
    n_hidden: int,
    n_points: int,
    cfg: TrainConfig,
    init_scale: float = 0.01,
    output_activation: str = IDENTITY,
) -> SweepResult:
    """Solve one problem per alpha under a shared schedule and seed.

    A diverging alpha is recorded as a failure entry; the sweep continues.
    """
    if len(alphas) == 0:
        raise ValueError("need at least one alpha")
    entries = []
    s_pts = None
    for alpha in alphas:
        problem = problem_family(float(alpha))
        grid = make_time_grid(n_steps, problem.maturity, problem.alpha)
        try:
            result = solve(
                problem, dmap, grid, n_hidden, n_points, cfg,
                1.0, init_scale, output_activation,
            )
            if s_pts is None:
                s_pts = result.s_points
            max_err = None
            if problem.exact is not None:
                max_err = error_metrics(result).max_abs
            entries.append(
                SweepEntry(alpha=float(alpha), final_row=result.final_row(), max_abs_error=max_err)
            )
        except TrainingDiverged as exc:
            if s_pts is None and exc.partial is not None:
                s_pts = exc.partial.s_points
            entries.append(
                SweepEntry(
                    alpha=float(alpha),
                    final_row=None,
                    max_abs_error=None,
                    failure=f"diverged at step {exc.step_index}, epoch {exc.epoch}",
                )
            )
    if s_pts is None:
        s_pts = price_points(dmap, build_collocation(dmap, n_points))
    return SweepResult(s_points=s_pts, entries=tuple(entries))


def _fmt(x: float) -> str:
    return repr(float(x))


def write_surface_csv(path, result: SolveResult) -> None:
    """Rows (t, S, U) over every stored step; t is calendar time."""
    times = result.natural_times
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,S,U\n")
        for k in range(result.surface.shape[0]):
            tk = times[k]
            for j in range(result.s_points.size):
                fh.write(f"{_fmt(tk)},{_fmt(result.s_points[j])},{_fmt(result.surface[k, j])}\n")


def write_errors_csv(path, result: SolveResult) -> None:
    """Rows (S, abs_err, log10_abs_err) at the reporting time."""
    summary = error_metrics(result, exclude_surrogate=False)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("S,abs_err,log10_abs_err\n")
        for j in range(result.s_points.size):
            fh.write(
                f"{_fmt(result.s_points[j])},{_fmt(summary.abs_errors[j])},"
                f"{_fmt(summary.log10_abs[j])}\n"
            )


def write_cost_csv(path, breakdown: np.ndarray) -> None:
    """Rows (epoch, pde_term, left_bc_term, right_bc_term, total)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("epoch,pde_term,left_bc_term,right_bc_term,total\n")
        for e in range(breakdown.shape[0]):
            row = breakdown[e]
            fh.write(
                f"{e},{_fmt(row[0])},{_fmt(row[1])},{_fmt(row[2])},{_fmt(row[3])}\n"
            )


def write_timing_csv(path, result: SolveResult) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("step,seconds,epochs,seconds_per_epoch\n")
        for i, sec in enumerate(result.wall_times):
            epochs = result.breakdowns[i].shape[0] - 1
            fh.write(f"{i + 1},{_fmt(sec)},{epochs},{_fmt(sec / max(1, epochs))}\n")


def write_solution_outputs(out_dir, result: SolveResult) -> None:
    """surface.csv, errors.csv (when exact), cost_step_k.csv, params_step_k.csv, timing.csv."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    write_surface_csv(os.path.join(out_dir, "surface.csv"), result)
    if result.problem.exact is not None and result.surface.shape[0] == result.grid.n_steps + 1:
        write_errors_csv(os.path.join(out_dir, "errors.csv"), result)
    for i, breakdown in enumerate(result.breakdowns):
        write_cost_csv(os.path.join(out_dir, f"cost_step_{i + 1}.csv"), breakdown)
    for i, params in enumerate(result.params_per_step):
        save_params_csv(params, os.path.join(out_dir, f"params_step_{i + 1}.csv"))
    write_timing_csv(os.path.join(out_dir, "timing.csv"), result)


def read_csv(path) -> Tuple[Tuple[str, ...], Tuple[Tuple[str, ...], ...]]:
    """Header and string rows of any CSV this package writes."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path} is empty")
    header = tuple(lines[0].split(","))
    rows = []
    for ln in lines[1:]:
        cells = tuple(ln.split(","))
        if len(cells) != len(header):
            raise ValueError(f"{path}: row width {len(cells)} != header width {len(header)}")
        rows.append(cells)
    return header, tuple(rows)


def read_numeric_csv(path) -> Tuple[Tuple[str, ...], np.ndarray]:
    """Header and float matrix for the all-numeric CSV formats."""
    header, rows = read_csv(path)
    return header, np.array([[float(c) for c in row] for row in rows], dtype=float)
