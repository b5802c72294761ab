"""Run configuration: flat key=value files with dotted keys.

A config file is plain text, one `section.key = value` per line, `#`
comments and blank lines ignored. Every range rule of the underlying types
is checked here before any computation starts; violations raise ConfigError
carrying the offending field path, which the CLI turns into exit status 2.

The four shipped problems cover the built-in catalog; `problem.name =
custom` builds an operator from expression strings (see exprs) so other
linear parabolic problems fit without code changes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

from .exprs import ExpressionError, compile_expression
from .mapping import ARCTAN, TRUNCATED, DomainMap, make_arctan_map, truncated_map
from .network import IDENTITY, SIGMOID
from .problems import (
    INITIAL_DATA,
    TERMINAL_PAYOFF,
    ProblemSpec,
    european_call,
    european_put,
    fractional_manufactured,
)
from .stepper import SpatialOperator, TimeGrid, make_time_grid
from .trainer import OPTIMIZERS, TrainConfig

PROBLEM_NAMES = ("european_call", "european_put", "fractional_manufactured", "custom")


class ConfigError(ValueError):
    """Invalid configuration; `field` is the dotted key path at fault."""

    def __init__(self, field_path: str, message: str):
        self.field = field_path
        super().__init__(f"{field_path}: {message}")


def parse_kv_text(text: str) -> Dict[str, str]:
    """Parse `key = value` lines; duplicates and malformed lines are errors."""
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key = value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}", "empty key")
        if key in out:
            raise ConfigError(key, "duplicate key")
        out[key] = value
    return out


# every key the schema understands; None marks "required depends on context"
_KNOWN_KEYS = {
    "problem.name", "problem.rate", "problem.sigma", "problem.strike", "problem.maturity",
    "problem.gamma1", "problem.gamma2", "problem.gamma3", "problem.forcing",
    "problem.data", "problem.data_kind", "problem.left_bc", "problem.right_bc",
    "problem.exact",
    "map.kind", "map.s_max", "map.l", "map.right_eval_point", "map.reference_price",
    "grid.n_steps", "grid.alpha", "grid.theta",
    "points.count",
    "network.n_hidden", "network.seed", "network.init_scale", "network.output_activation",
    "training.optimizer", "training.eta", "training.beta1", "training.beta2",
    "training.epsilon", "training.epochs_first", "training.epochs_rest",
    "output.dir", "output.plots",
    "compare.optimizers",
    "sweep.alphas",
    "lr.candidates", "lr.probe_epochs",
}


def _as_float(raw: Dict[str, str], key: str, default: Optional[float] = None) -> Optional[float]:
    if key not in raw:
        return default
    try:
        return float(raw[key])
    except ValueError:
        raise ConfigError(key, f"not a number: {raw[key]!r}") from None


def _as_int(raw: Dict[str, str], key: str, default: Optional[int] = None) -> Optional[int]:
    if key not in raw:
        return default
    try:
        return int(raw[key])
    except ValueError:
        raise ConfigError(key, f"not an integer: {raw[key]!r}") from None


def _as_bool(raw: Dict[str, str], key: str, default: bool) -> bool:
    if key not in raw:
        return default
    val = raw[key].lower()
    if val in ("true", "1", "yes", "on"):
        return True
    if val in ("false", "0", "no", "off"):
        return False
    raise ConfigError(key, f"not a boolean: {raw[key]!r}")


def _as_floats(raw: Dict[str, str], key: str) -> Optional[Tuple[float, ...]]:
    if key not in raw:
        return None
    items = [piece.strip() for piece in raw[key].split(",") if piece.strip()]
    if not items:
        raise ConfigError(key, "empty list")
    try:
        return tuple(float(piece) for piece in items)
    except ValueError:
        raise ConfigError(key, f"not a number list: {raw[key]!r}") from None


def _require(raw: Dict[str, str], key: str) -> str:
    if key not in raw:
        raise ConfigError(key, "required key is missing")
    return raw[key]


def _expr(raw: Dict[str, str], key: str, variables) -> Callable:
    text = _require(raw, key)
    try:
        return compile_expression(text, variables)
    except ExpressionError as exc:
        raise ConfigError(key, str(exc)) from None


@dataclass(frozen=True)
class RunConfig:
    """Validated run description; builders below turn it into solver objects."""

    problem_name: str
    rate: float
    sigma: float
    strike: Optional[float]
    maturity: float
    custom: Dict[str, str]            # raw expression strings for custom problems
    map_kind: str
    s_max: float
    quantile: float
    right_eval_point: float
    reference_price: Optional[float]
    n_steps: int
    alpha: float
    theta: float
    n_points: int
    n_hidden: int
    seed: int
    init_scale: float
    output_activation: str
    optimizer: str
    eta: float
    beta1: float
    beta2: float
    epsilon: float
    epochs_first: int
    epochs_rest: int
    out_dir: str
    plots: bool
    compare_optimizers: Tuple[str, ...]
    sweep_alphas: Optional[Tuple[float, ...]]
    lr_candidates: Optional[Tuple[float, ...]]
    lr_probe_epochs: int
    raw: Dict[str, str] = field(default_factory=dict, repr=False)


def config_from_mapping(raw: Dict[str, str]) -> RunConfig:
    """Validate a parsed key map into a RunConfig; ConfigError names the field."""
    for key in raw:
        if key not in _KNOWN_KEYS:
            raise ConfigError(key, "unknown key")

    name = _require(raw, "problem.name")
    if name not in PROBLEM_NAMES:
        raise ConfigError("problem.name", f"must be one of {PROBLEM_NAMES}, got {name!r}")

    rate = _as_float(raw, "problem.rate", 0.05)
    default_sigma = 0.25 if name == "fractional_manufactured" else 0.2
    sigma = _as_float(raw, "problem.sigma", default_sigma)
    strike = _as_float(raw, "problem.strike", 10.0 if name in ("european_call", "european_put") else None)
    maturity = _as_float(raw, "problem.maturity", 1.0)
    if not maturity > 0.0:
        raise ConfigError("problem.maturity", f"must be positive, got {maturity}")
    if name in ("european_call", "european_put"):
        if not sigma > 0.0:
            raise ConfigError("problem.sigma", f"must be positive, got {sigma}")
        if strike is None or not strike > 0.0:
            raise ConfigError("problem.strike", f"must be positive, got {strike}")

    custom: Dict[str, str] = {}
    if name == "custom":
        for key in ("problem.gamma1", "problem.gamma2", "problem.gamma3",
                    "problem.data", "problem.data_kind", "problem.left_bc",
                    "problem.right_bc"):
            custom[key] = _require(raw, key)
        for key in ("problem.forcing", "problem.exact"):
            if key in raw:
                custom[key] = raw[key]
        if custom["problem.data_kind"] not in (TERMINAL_PAYOFF, INITIAL_DATA):
            raise ConfigError(
                "problem.data_kind",
                f"must be {TERMINAL_PAYOFF!r} or {INITIAL_DATA!r}, got {custom['problem.data_kind']!r}",
            )
        _as_float(raw, "problem.gamma3")  # numeric check up front
    else:
        for key in ("problem.gamma1", "problem.gamma2", "problem.gamma3",
                    "problem.forcing", "problem.data", "problem.data_kind",
                    "problem.left_bc", "problem.right_bc", "problem.exact"):
            if key in raw:
                raise ConfigError(key, f"only valid when problem.name = custom, not {name!r}")

    map_kind = _require(raw, "map.kind")
    if map_kind not in (TRUNCATED, ARCTAN):
        raise ConfigError("map.kind", f"must be {TRUNCATED!r} or {ARCTAN!r}, got {map_kind!r}")
    s_max = _as_float(raw, "map.s_max", 0.0)
    if map_kind == TRUNCATED and not s_max > 0.0:
        raise ConfigError("map.s_max", f"must be positive for truncated maps, got {s_max}")
    quantile = _as_float(raw, "map.l", 0.6)
    if not 0.0 < quantile < 1.0:
        raise ConfigError("map.l", f"must lie in (0, 1), got {quantile}")
    right_eval_point = _as_float(raw, "map.right_eval_point", 0.9999999)
    if map_kind == ARCTAN and not 0.99 < right_eval_point < 1.0:
        raise ConfigError(
            "map.right_eval_point", f"must lie in (0.99, 1), got {right_eval_point}"
        )
    reference_price = _as_float(raw, "map.reference_price", None)
    if map_kind == ARCTAN:
        anchor = reference_price if reference_price is not None else strike
        if anchor is None or not anchor > 0.0:
            raise ConfigError(
                "map.reference_price",
                "arctan maps need a positive reference price (or problem.strike)",
            )

    n_steps = _as_int(raw, "grid.n_steps")
    if n_steps is None or n_steps < 1:
        raise ConfigError("grid.n_steps", f"must be an integer >= 1, got {raw.get('grid.n_steps')!r}")
    alpha = _as_float(raw, "grid.alpha", 1.0)
    if not 0.0 < alpha <= 1.0:
        raise ConfigError("grid.alpha", f"must lie in (0, 1], got {alpha}")
    theta = _as_float(raw, "grid.theta", 1.0)
    if not 0.0 <= theta <= 1.0:
        raise ConfigError("grid.theta", f"must lie in [0, 1], got {theta}")
    if alpha < 1.0 and theta != 1.0:
        raise ConfigError("grid.theta", "fractional marching is implicit only; set theta = 1")
    if name in ("european_call", "european_put") and alpha != 1.0:
        raise ConfigError("grid.alpha", f"{name} is an ordinary problem; set grid.alpha = 1")
    if name == "fractional_manufactured":
        if not 0.0 < alpha < 1.0:
            raise ConfigError("grid.alpha", "fractional benchmark needs alpha in (0, 1)")
        if map_kind != TRUNCATED or s_max != 1.0:
            raise ConfigError("map.s_max", "fractional benchmark lives on [0, 1]; use truncated s_max = 1")

    n_points = _as_int(raw, "points.count")
    if n_points is None or n_points < 2:
        raise ConfigError("points.count", f"must be an integer >= 2, got {raw.get('points.count')!r}")
    if map_kind == ARCTAN and n_points < 3:
        raise ConfigError("points.count", "arctan grids need at least 3 points")

    n_hidden = _as_int(raw, "network.n_hidden")
    if n_hidden is None or n_hidden < 1:
        raise ConfigError("network.n_hidden", f"must be an integer >= 1, got {raw.get('network.n_hidden')!r}")
    seed = _as_int(raw, "network.seed", 0)
    if seed < 0:
        raise ConfigError("network.seed", f"must be >= 0, got {seed}")
    init_scale = _as_float(raw, "network.init_scale", 0.01)
    if not init_scale > 0.0:
        raise ConfigError("network.init_scale", f"must be positive, got {init_scale}")
    output_activation = raw.get("network.output_activation", IDENTITY)
    if output_activation not in (IDENTITY, SIGMOID):
        raise ConfigError(
            "network.output_activation",
            f"must be {IDENTITY!r} or {SIGMOID!r}, got {output_activation!r}",
        )

    optimizer = raw.get("training.optimizer", "adam")
    if optimizer not in OPTIMIZERS:
        raise ConfigError("training.optimizer", f"must be one of {OPTIMIZERS}, got {optimizer!r}")
    eta = _as_float(raw, "training.eta", 0.03)
    if not 0.0 < eta < 1.0:
        raise ConfigError("training.eta", f"must lie in (0, 1), got {eta}")
    beta1 = _as_float(raw, "training.beta1", 0.9)
    beta2 = _as_float(raw, "training.beta2", 0.999)
    if not 0.0 <= beta1 < 1.0:
        raise ConfigError("training.beta1", f"must lie in [0, 1), got {beta1}")
    if not 0.0 <= beta2 < 1.0:
        raise ConfigError("training.beta2", f"must lie in [0, 1), got {beta2}")
    epsilon = _as_float(raw, "training.epsilon", 1e-8)
    if not epsilon > 0.0:
        raise ConfigError("training.epsilon", f"must be positive, got {epsilon}")
    epochs_first = _as_int(raw, "training.epochs_first", 5000)
    epochs_rest = _as_int(raw, "training.epochs_rest", 1200)
    if epochs_first < 1:
        raise ConfigError("training.epochs_first", f"must be >= 1, got {epochs_first}")
    if epochs_rest < 1:
        raise ConfigError("training.epochs_rest", f"must be >= 1, got {epochs_rest}")

    out_dir = raw.get("output.dir", "out")
    plots = _as_bool(raw, "output.plots", True)

    compare_raw = raw.get("compare.optimizers", "adam,sgd,rmsprop")
    compare = tuple(piece.strip() for piece in compare_raw.split(",") if piece.strip())
    if not compare:
        raise ConfigError("compare.optimizers", "empty list")
    for piece in compare:
        if piece not in OPTIMIZERS:
            raise ConfigError("compare.optimizers", f"unknown optimizer {piece!r}")

    sweep_alphas = _as_floats(raw, "sweep.alphas")
    if sweep_alphas is not None:
        for a in sweep_alphas:
            if not 0.0 < a < 1.0:
                raise ConfigError("sweep.alphas", f"each alpha must lie in (0, 1), got {a}")

    lr_candidates = _as_floats(raw, "lr.candidates")
    if lr_candidates is not None:
        for cand in lr_candidates:
            if not 0.0 < cand < 1.0:
                raise ConfigError("lr.candidates", f"each candidate must lie in (0, 1), got {cand}")
    lr_probe_epochs = _as_int(raw, "lr.probe_epochs", 800)
    if lr_probe_epochs < 1:
        raise ConfigError("lr.probe_epochs", f"must be >= 1, got {lr_probe_epochs}")

    return RunConfig(
        problem_name=name,
        rate=rate,
        sigma=sigma,
        strike=strike,
        maturity=maturity,
        custom=custom,
        map_kind=map_kind,
        s_max=s_max,
        quantile=quantile,
        right_eval_point=right_eval_point,
        reference_price=reference_price,
        n_steps=n_steps,
        alpha=alpha,
        theta=theta,
        n_points=n_points,
        n_hidden=n_hidden,
        seed=seed,
        init_scale=init_scale,
        output_activation=output_activation,
        optimizer=optimizer,
        eta=eta,
        beta1=beta1,
        beta2=beta2,
        epsilon=epsilon,
        epochs_first=epochs_first,
        epochs_rest=epochs_rest,
        out_dir=out_dir,
        plots=plots,
        compare_optimizers=compare,
        sweep_alphas=sweep_alphas,
        lr_candidates=lr_candidates,
        lr_probe_epochs=lr_probe_epochs,
        raw=dict(raw),
    )


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from None
    return config_from_mapping(parse_kv_text(text))


def _build_custom_problem(cfg: RunConfig) -> ProblemSpec:
    raw = dict(cfg.custom)
    raw.setdefault("problem.forcing", "0")
    gamma1 = _expr(raw, "problem.gamma1", ["S"])
    gamma2 = _expr(raw, "problem.gamma2", ["S"])
    gamma3 = float(raw["problem.gamma3"])
    forcing = _expr(raw, "problem.forcing", ["S", "t"])
    data = _expr(raw, "problem.data", ["S"])
    left = _expr(raw, "problem.left_bc", ["S", "t"])
    right = _expr(raw, "problem.right_bc", ["S", "t"])
    exact = None
    if "problem.exact" in raw:
        exact = _expr(raw, "problem.exact", ["S", "t"])
    operator = SpatialOperator(gamma1=gamma1, gamma2=gamma2, gamma3=gamma3, forcing=forcing)
    return ProblemSpec(
        name="custom",
        alpha=cfg.alpha,
        rate=cfg.rate,
        sigma=cfg.sigma,
        maturity=cfg.maturity,
        operator=operator,
        data_kind=raw["problem.data_kind"],
        data=data,
        left_bc=lambda s, t: float(left(s, t)),
        right_bc=lambda s, t: float(right(s, t)),
        exact=exact,
        strike=cfg.strike,
    )


def build_problem(cfg: RunConfig, alpha: Optional[float] = None) -> ProblemSpec:
    """Instantiate the configured problem; alpha overrides for sweeps."""
    a = cfg.alpha if alpha is None else alpha
    if cfg.problem_name == "european_call":
        return european_call(cfg.rate, cfg.sigma, cfg.strike, cfg.maturity)
    if cfg.problem_name == "european_put":
        return european_put(cfg.rate, cfg.sigma, cfg.strike, cfg.maturity)
    if cfg.problem_name == "fractional_manufactured":
        return fractional_manufactured(a, cfg.rate, cfg.sigma, cfg.maturity)
    return _build_custom_problem(cfg)


def build_map(cfg: RunConfig) -> DomainMap:
    if cfg.map_kind == TRUNCATED:
        return truncated_map(cfg.s_max)
    anchor = cfg.reference_price if cfg.reference_price is not None else cfg.strike
    return make_arctan_map(anchor, cfg.quantile, cfg.right_eval_point)


def build_grid(cfg: RunConfig, alpha: Optional[float] = None) -> TimeGrid:
    return make_time_grid(cfg.n_steps, cfg.maturity, cfg.alpha if alpha is None else alpha)


def build_train_config(cfg: RunConfig) -> TrainConfig:
    return TrainConfig(
        optimizer=cfg.optimizer,
        eta=cfg.eta,
        beta1=cfg.beta1,
        beta2=cfg.beta2,
        epsilon=cfg.epsilon,
        epochs_first=cfg.epochs_first,
        epochs_rest=cfg.epochs_rest,
        seed=cfg.seed,
    )
