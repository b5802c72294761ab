"""Command-line front end.

Subcommands:
    solve        march a configured problem and write the CSV/SVG artifact set
    compare      train the first step under adam, sgd and rmsprop
    sweep-alpha  solve the fractional benchmark across several alpha values
    lr-search    grid-search the learning rate on truncated probe runs
    selftest     run a fast invariant suite and print PASS/FAIL lines

Exit statuses: 0 success, 2 configuration error, 3 training diverged
(partial outputs are still written), 1 selftest failure. No other nonzero
codes escape.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from typing import Optional

import numpy as np

from .config import (
    ConfigError,
    RunConfig,
    build_grid,
    build_map,
    build_problem,
    build_train_config,
    load_config,
)
from .plots import LineSeries, write_line_plot
from .solver import (
    SolveResult,
    build_collocation,
    compare_optimizers,
    error_metrics,
    solve,
    sweep_alpha,
    write_cost_csv,
    write_solution_outputs,
)
from .trainer import LrSearchFailed, TrainingDiverged, lr_grid_search

EXIT_OK = 0
EXIT_SELFTEST = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


def _fmt(x: float) -> str:
    return repr(float(x))


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.out is not None:
        cfg = replace(cfg, out_dir=args.out)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("network.seed", f"must be >= 0, got {args.seed}")
        cfg = replace(cfg, seed=args.seed)
    if args.no_plots:
        cfg = replace(cfg, plots=False)
    return cfg


def _solution_plots(out_dir: str, result: SolveResult) -> None:
    final = result.final_row()
    series = [LineSeries(result.s_points, result.surface[0], "data row")]
    t_final = result.grid.horizon
    if result.problem.exact is not None:
        series.append(
            LineSeries(result.s_points, result.problem.exact(result.s_points, t_final), "exact")
        )
    series.append(LineSeries(result.s_points, final, "network"))
    write_line_plot(
        os.path.join(out_dir, "solution.svg"), series,
        title=f"{result.problem.name}: solution after {result.grid.n_steps} steps",
        x_label="S", y_label="U",
    )
    if result.problem.exact is not None:
        summary = error_metrics(result, exclude_surrogate=False)
        write_line_plot(
            os.path.join(out_dir, "error.svg"),
            [LineSeries(result.s_points, summary.abs_errors, "abs error")],
            title=f"{result.problem.name}: pointwise error", x_label="S",
            y_label="abs error", log_y=True,
        )
    cost_series = []
    for idx in (0, len(result.breakdowns) - 1):
        if 0 <= idx < len(result.breakdowns):
            trace = result.breakdowns[idx][:, 3]
            cost_series.append(LineSeries(np.arange(trace.size), trace, f"step {idx + 1}"))
            if len(result.breakdowns) == 1:
                break
    if cost_series:
        write_line_plot(
            os.path.join(out_dir, "cost.svg"), cost_series,
            title="training cost", x_label="epoch", y_label="cost", log_y=True,
        )


def cmd_solve(args) -> int:
    cfg = _load(args)
    problem = build_problem(cfg)
    dmap = build_map(cfg)
    grid = build_grid(cfg)
    tcfg = build_train_config(cfg)
    os.makedirs(cfg.out_dir, exist_ok=True)
    try:
        result = solve(
            problem, dmap, grid, cfg.n_hidden, cfg.n_points, tcfg,
            cfg.theta, cfg.init_scale, cfg.output_activation,
        )
    except TrainingDiverged as exc:
        if exc.partial is not None:
            write_solution_outputs(cfg.out_dir, exc.partial)
            if cfg.plots and exc.partial.breakdowns:
                _solution_plots(cfg.out_dir, exc.partial)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    write_solution_outputs(cfg.out_dir, result)
    if cfg.plots:
        _solution_plots(cfg.out_dir, result)
    if problem.exact is not None:
        summary = error_metrics(result)
        print(f"max abs error {summary.max_abs:.6e}, mean {summary.mean_abs:.6e}")
    print(f"wrote {cfg.out_dir}/surface.csv ({grid.n_steps} steps, {cfg.n_points} points)")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _load(args)
    problem = build_problem(cfg)
    dmap = build_map(cfg)
    grid = build_grid(cfg)
    tcfg = build_train_config(cfg)
    comparison = compare_optimizers(
        problem, dmap, grid, cfg.n_hidden, cfg.n_points, tcfg,
        cfg.compare_optimizers, cfg.theta, cfg.init_scale, cfg.output_activation,
    )
    os.makedirs(cfg.out_dir, exist_ok=True)
    series = []
    with open(os.path.join(cfg.out_dir, "compare.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("optimizer,status,epochs_recorded,diverged_epoch,final_cost,seconds,seconds_per_epoch\n")
        for name, run in comparison.runs.items():
            write_cost_csv(os.path.join(cfg.out_dir, f"cost_{name}.csv"), run.breakdown)
            status = "diverged" if run.diverged_epoch is not None else "completed"
            div = "" if run.diverged_epoch is None else str(run.diverged_epoch)
            fh.write(
                f"{name},{status},{run.breakdown.shape[0] - 1},{div},"
                f"{_fmt(run.trace[-1])},{_fmt(run.seconds)},{_fmt(run.seconds_per_epoch)}\n"
            )
            series.append(LineSeries(np.arange(run.trace.size), run.trace, f"{name} ({status})"))
            print(f"{name}: {status}, final cost {run.trace[-1]:.6e}")
    if cfg.plots:
        write_line_plot(
            os.path.join(cfg.out_dir, "compare.svg"), series,
            title=f"{problem.name}: first-step cost by optimizer",
            x_label="epoch", y_label="cost", log_y=True,
        )
    if all(run.diverged_epoch is not None for run in comparison.runs.values()):
        print("error: every optimizer diverged", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_sweep_alpha(args) -> int:
    cfg = _load(args)
    if cfg.sweep_alphas is None:
        raise ConfigError("sweep.alphas", "required key is missing")
    if cfg.problem_name != "fractional_manufactured":
        raise ConfigError("problem.name", "sweep-alpha applies to the fractional benchmark")
    dmap = build_map(cfg)
    tcfg = build_train_config(cfg)

    def family(alpha: float):
        return build_problem(cfg, alpha=alpha)

    result = sweep_alpha(
        family, cfg.sweep_alphas, dmap, cfg.n_steps, cfg.n_hidden, cfg.n_points,
        tcfg, cfg.init_scale, cfg.output_activation,
    )
    os.makedirs(cfg.out_dir, exist_ok=True)
    ok_entries = [e for e in result.entries if e.final_row is not None]
    with open(os.path.join(cfg.out_dir, "sweep.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("S," + ",".join(f"alpha_{e.alpha:g}" for e in ok_entries) + "\n")
        for j in range(result.s_points.size):
            cells = [_fmt(result.s_points[j])] + [_fmt(e.final_row[j]) for e in ok_entries]
            fh.write(",".join(cells) + "\n")
    with open(os.path.join(cfg.out_dir, "sweep_status.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("alpha,status,max_abs_error\n")
        for e in result.entries:
            status = e.failure if e.failure else "completed"
            err = "" if e.max_abs_error is None else _fmt(e.max_abs_error)
            fh.write(f"{_fmt(e.alpha)},{status},{err}\n")
    for e in result.entries:
        note = e.failure if e.failure else f"max abs error {e.max_abs_error:.6e}"
        print(f"alpha={e.alpha:g}: {note}")
    if cfg.plots and ok_entries:
        series = [
            LineSeries(result.s_points, e.final_row, f"alpha={e.alpha:g}") for e in ok_entries
        ]
        write_line_plot(
            os.path.join(cfg.out_dir, "sweep.svg"), series,
            title="final-time solution by alpha", x_label="S", y_label="U",
        )
    if any(e.failure for e in result.entries):
        print("error: at least one alpha diverged", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_lr_search(args) -> int:
    cfg = _load(args)
    if cfg.lr_candidates is None:
        raise ConfigError("lr.candidates", "required key is missing")
    problem = build_problem(cfg)
    dmap = build_map(cfg)
    grid = build_grid(cfg)
    tcfg = build_train_config(cfg)
    colloc = build_collocation(dmap, cfg.n_points)
    try:
        search = lr_grid_search(
            problem, dmap, grid, colloc, cfg.n_hidden, tcfg, cfg.lr_candidates,
            cfg.lr_probe_epochs, cfg.init_scale, cfg.theta, cfg.output_activation,
        )
    except LrSearchFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    os.makedirs(cfg.out_dir, exist_ok=True)
    with open(os.path.join(cfg.out_dir, "lr_search.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("eta,status,final_cost,diverged_epoch\n")
        for outcome in search.outcomes:
            status = "diverged" if outcome.diverged_epoch is not None else "completed"
            div = "" if outcome.diverged_epoch is None else str(outcome.diverged_epoch)
            fh.write(f"{_fmt(outcome.eta)},{status},{_fmt(outcome.final_cost)},{div}\n")
    if cfg.plots:
        done = [o for o in search.outcomes if o.diverged_epoch is None]
        if done:
            write_line_plot(
                os.path.join(cfg.out_dir, "lr_search.svg"),
                [LineSeries(
                    np.array([o.eta for o in done]),
                    np.array([o.final_cost for o in done]),
                    f"cost after {cfg.lr_probe_epochs} epochs",
                )],
                title=f"{problem.name}: learning-rate probe", x_label="eta",
                y_label="cost", log_y=True,
            )
    print(f"chosen eta = {search.best_eta:g}")
    return EXIT_OK


def _selftest_checks():
    import math as _math

    from .mapping import jacobians, make_arctan_map, to_x, truncated_map
    from .network import forward, init_params, load_params_csv, save_params_csv
    from .problems import european_call, european_put
    from .special import gamma_fn, normal_cdf, sigmoid, sigmoid_deriv
    from .stepper import StepHistory, b_weights, caputo_residual, make_time_grid
    from .trainer import OptimizerState, TrainConfig, adam_step

    def check_special():
        assert abs(sigmoid(0.0) - 0.5) < 1e-15
        assert abs(sigmoid_deriv(1.0) - 0.19661193324148185) < 1e-12
        for z in (0.5, 1.0, 2.5, 4.0, 7.5):
            assert abs(gamma_fn(z) - _math.gamma(z)) <= 1e-12 * _math.gamma(z)
        assert abs(normal_cdf(1.96) - 0.9750021048517795) < 1e-12
        assert abs(normal_cdf(0.7) + normal_cdf(-0.7) - 1.0) < 1e-14

    def check_network():
        params = init_params(7, 3)
        assert params.size == 22
        tmp = os.path.join(os.getcwd(), ".selftest_params.csv")
        save_params_csv(params, tmp)
        back = load_params_csv(tmp)
        os.remove(tmp)
        assert np.array_equal(params.to_flat(), back.to_flat())
        x = 0.37
        h = 1e-5
        net = forward(params, x)
        vp = forward(params, x + h).value
        vm = forward(params, x - h).value
        assert abs((vp - vm) / (2 * h) - net.d1) < 1e-6

    def check_stepper():
        b = b_weights(0.5, 3)
        assert abs(b[0] - 1.0) < 1e-15
        assert abs(b[1] - (2 ** 0.5 - 1.0)) < 1e-12
        grid = make_time_grid(4, 1.0, 1.0)
        hist = StepHistory(np.array([1.0, 2.0]))
        rhs = np.array([0.5, -0.5])
        new = np.array([1.25, 1.875])
        res = caputo_residual(grid, hist, new, rhs, 0)
        euler = (new - hist.row(0)) / grid.dt - rhs
        assert np.all(np.abs(res - euler) < 1e-12)

    def check_adam():
        cfg = TrainConfig(eta=0.1)
        state = OptimizerState.zeros(2)
        grad = np.array([1.0, -2.0])
        _, out = adam_step(state, np.zeros(2), grad, cfg)
        expect = -cfg.eta * grad / (np.abs(grad) + cfg.epsilon)
        assert np.all(np.abs(out - expect) < 1e-12)

    def check_mapping():
        dmap = make_arctan_map(10.0, 0.6)
        assert abs(to_x(dmap, 10.0) - 0.6) < 1e-12
        jac = jacobians(dmap, 0.5)
        assert abs(jac.upsilon - dmap.length * _math.pi) < 1e-9
        flat = truncated_map(15.0)
        assert jacobians(flat, 3.0).upsilon == 1.0

    def check_pricing():
        call = european_call(0.05, 0.2, 10.0, 1.0)
        put = european_put(0.05, 0.2, 10.0, 1.0)
        assert abs(call.exact(10.0, 1.0) - 1.0450583572185567) < 1e-6
        rng = np.random.default_rng(0)
        s = rng.uniform(0.5, 25.0, 20)
        parity = call.exact(s, 0.7) - put.exact(s, 0.7) - (s - 10.0 * np.exp(-0.05 * 0.7))
        assert np.max(np.abs(parity)) < 1e-9

    def check_determinism():
        from .solver import solve as _solve

        problem = european_call(0.05, 0.2, 10.0, 1.0)
        grid = make_time_grid(2, 1.0, 1.0)
        cfg = TrainConfig(eta=0.03, epochs_first=40, epochs_rest=20, seed=5)
        a = _solve(problem, truncated_map(15.0), grid, 4, 12, cfg)
        b = _solve(problem, truncated_map(15.0), grid, 4, 12, cfg)
        assert np.array_equal(a.surface, b.surface)

    return [
        ("special functions", check_special),
        ("network evaluation and round-trip", check_network),
        ("marching weights and residual", check_stepper),
        ("adam first update", check_adam),
        ("domain maps", check_mapping),
        ("closed-form prices", check_pricing),
        ("deterministic solve", check_determinism),
    ]


def cmd_selftest(_args) -> int:
    failures = 0
    for name, fn in _selftest_checks():
        try:
            fn()
        except Exception as exc:  # report every failure, keep going
            failures += 1
            print(f"FAIL {name}: {type(exc).__name__}: {exc}")
        else:
            print(f"PASS {name}")
    if failures:
        print(f"{failures} check(s) failed")
        return EXIT_SELFTEST
    print("all checks passed")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bsann",
        description="Collocation-network solver for ordinary and time-fractional "
        "Black-Scholes problems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="path to a key=value config file")
        p.add_argument("--out", default=None, help="output directory (overrides output.dir)")
        p.add_argument("--seed", type=int, default=None, help="seed override (network.seed)")
        p.add_argument("--no-plots", action="store_true", help="skip SVG plot emission")

    p_solve = sub.add_parser("solve", help="march a configured problem")
    add_common(p_solve)
    p_solve.set_defaults(fn=cmd_solve)

    p_cmp = sub.add_parser("compare", help="first-step optimizer comparison")
    add_common(p_cmp)
    p_cmp.set_defaults(fn=cmd_compare)

    p_sweep = sub.add_parser("sweep-alpha", help="fractional benchmark across alphas")
    add_common(p_sweep)
    p_sweep.set_defaults(fn=cmd_sweep_alpha)

    p_lr = sub.add_parser("lr-search", help="learning-rate grid search")
    add_common(p_lr)
    p_lr.set_defaults(fn=cmd_lr_search)

    p_self = sub.add_parser("selftest", help="run the fast invariant suite")
    p_self.set_defaults(fn=cmd_selftest)

    return parser


def main(argv: Optional[list] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
