"""Single-input, single-output collocation network with one hidden layer.

The network is N(x) = psi(sum_i v_i * sigmoid(w_i x + b_i) + beta) with a
scalar input. Both derivatives with respect to the input and gradients of
(value, d1, d2) with respect to every parameter are exact closed forms; the
trainer never uses finite differences of the candidate network.

Flat parameter layout (fixed order, length 3n+1):
    hidden_weights[0:n], hidden_biases[n:2n], output_weights[2n:3n], output_bias
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

IDENTITY = "identity"
SIGMOID = "sigmoid"
_ACTIVATIONS = (IDENTITY, SIGMOID)


def _check_activation(name: str) -> None:
    if name not in _ACTIVATIONS:
        raise ValueError(f"unknown output activation {name!r}; expected one of {_ACTIVATIONS}")


@dataclass(frozen=True)
class NetworkParams:
    """Parameters of a 1-n-1 network."""

    hidden_weights: np.ndarray
    hidden_biases: np.ndarray
    output_weights: np.ndarray
    output_bias: float

    def __post_init__(self):
        w = np.asarray(self.hidden_weights, dtype=float)
        b = np.asarray(self.hidden_biases, dtype=float)
        v = np.asarray(self.output_weights, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("hidden_weights must be a non-empty 1-d array")
        if b.shape != w.shape or v.shape != w.shape:
            raise ValueError("hidden_biases and output_weights must match hidden_weights in shape")
        object.__setattr__(self, "hidden_weights", w)
        object.__setattr__(self, "hidden_biases", b)
        object.__setattr__(self, "output_weights", v)
        object.__setattr__(self, "output_bias", float(self.output_bias))

    @property
    def n_hidden(self) -> int:
        return self.hidden_weights.size

    @property
    def size(self) -> int:
        return 3 * self.n_hidden + 1

    def to_flat(self) -> np.ndarray:
        return np.concatenate(
            [self.hidden_weights, self.hidden_biases, self.output_weights, [self.output_bias]]
        )

    @classmethod
    def from_flat(cls, flat: np.ndarray, n_hidden: int) -> "NetworkParams":
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (3 * n_hidden + 1,):
            raise ValueError(f"flat vector must have length {3 * n_hidden + 1}, got {flat.shape}")
        return cls(
            hidden_weights=flat[:n_hidden].copy(),
            hidden_biases=flat[n_hidden : 2 * n_hidden].copy(),
            output_weights=flat[2 * n_hidden : 3 * n_hidden].copy(),
            output_bias=float(flat[-1]),
        )


@dataclass(frozen=True)
class NetEval:
    """Network output and its first two derivatives with respect to the input."""

    value: float
    d1: float
    d2: float


@dataclass(frozen=True)
class ParamGradient:
    """Gradient of one scalar target with respect to every parameter."""

    hidden_weights: np.ndarray
    hidden_biases: np.ndarray
    output_weights: np.ndarray
    output_bias: float

    def to_flat(self) -> np.ndarray:
        return np.concatenate(
            [self.hidden_weights, self.hidden_biases, self.output_weights, [self.output_bias]]
        )

    @classmethod
    def from_flat(cls, flat: np.ndarray, n_hidden: int) -> "ParamGradient":
        flat = np.asarray(flat, dtype=float)
        return cls(
            hidden_weights=flat[:n_hidden].copy(),
            hidden_biases=flat[n_hidden : 2 * n_hidden].copy(),
            output_weights=flat[2 * n_hidden : 3 * n_hidden].copy(),
            output_bias=float(flat[-1]),
        )


def init_params(n_hidden: int, seed: int, scale: float = 0.01) -> NetworkParams:
    """Draw every parameter independently from U[-scale, scale], deterministically."""
    if n_hidden < 1:
        raise ValueError(f"n_hidden must be >= 1, got {n_hidden}")
    if not scale > 0.0:
        raise ValueError(f"scale must be positive, got {scale}")
    rng = np.random.default_rng(seed)
    flat = rng.uniform(-scale, scale, size=3 * n_hidden + 1)
    return NetworkParams.from_flat(flat, n_hidden)


def _sigmoid_arr(z: np.ndarray) -> np.ndarray:
    # exp is only ever taken of a non-positive argument, so no overflow
    pos = z >= 0
    ez = np.exp(np.where(pos, -z, z))
    return np.where(pos, 1.0 / (1.0 + ez), ez / (1.0 + ez))


def _raw_eval(w, b, v, beta, x, output_activation=IDENTITY):
    """value/d1/d2 arrays at a vector of inputs. Internal, array-based."""
    z = np.outer(x, w) + b
    s = _sigmoid_arr(z)
    s1 = s * (1.0 - s)
    s2 = s1 * (1.0 - 2.0 * s)
    p = s @ v + beta
    px = (s1 * w) @ v
    pxx = (s2 * (w * w)) @ v
    if output_activation == IDENTITY:
        return p, px, pxx
    q = _sigmoid_arr(p)
    q1 = q * (1.0 - q)
    q2 = q1 * (1.0 - 2.0 * q)
    return q, q1 * px, q2 * px * px + q1 * pxx


def _raw_eval_grads(w, b, v, beta, x, output_activation=IDENTITY):
    """As _raw_eval, plus parameter gradients of value, d1 and d2.

    Returns (value, d1, d2, g_value, g_d1, g_d2) where each g_* has shape
    (len(x), 3n+1) in the flat layout order.
    """
    r = x.shape[0]
    z = np.outer(x, w) + b
    s = _sigmoid_arr(z)
    s1 = s * (1.0 - s)
    s2 = s1 * (1.0 - 2.0 * s)
    s3 = s1 * (1.0 - 6.0 * s + 6.0 * s * s)
    ww = w * w
    xs = x[:, None]

    p = s @ v + beta
    px = (s1 * w) @ v
    pxx = (s2 * ww) @ v

    ones = np.ones((r, 1))
    zeros = np.zeros((r, 1))
    # gradients of the pre-activation head P and its input derivatives
    g_p = np.concatenate([v * s1 * xs, v * s1, s, ones], axis=1)
    g_px = np.concatenate([v * (s2 * w * xs + s1), v * s2 * w, s1 * w, zeros], axis=1)
    g_pxx = np.concatenate(
        [v * (s3 * ww * xs + 2.0 * w * s2), v * s3 * ww, s2 * ww, zeros], axis=1
    )

    if output_activation == IDENTITY:
        return p, px, pxx, g_p, g_px, g_pxx

    q = _sigmoid_arr(p)
    q1 = q * (1.0 - q)
    q2 = q1 * (1.0 - 2.0 * q)
    q3 = q1 * (1.0 - 6.0 * q + 6.0 * q * q)
    value = q
    d1 = q1 * px
    d2 = q2 * px * px + q1 * pxx
    qc = q1[:, None]
    g_value = qc * g_p
    g_d1 = q2[:, None] * g_p * px[:, None] + qc * g_px
    g_d2 = (
        q3[:, None] * g_p * (px * px)[:, None]
        + q2[:, None] * (2.0 * px[:, None] * g_px + pxx[:, None] * g_p)
        + qc * g_pxx
    )
    return value, d1, d2, g_value, g_d1, g_d2


def eval_batch(params: NetworkParams, x: np.ndarray, output_activation: str = IDENTITY):
    """Vectorized (value, d1, d2) arrays over a vector of inputs."""
    _check_activation(output_activation)
    x = np.asarray(x, dtype=float)
    return _raw_eval(
        params.hidden_weights,
        params.hidden_biases,
        params.output_weights,
        params.output_bias,
        x,
        output_activation,
    )


def forward(params: NetworkParams, x: float, output_activation: str = IDENTITY) -> NetEval:
    """Evaluate the network and its first two input derivatives at one point."""
    val, d1, d2 = eval_batch(params, np.array([float(x)]), output_activation)
    return NetEval(value=float(val[0]), d1=float(d1[0]), d2=float(d2[0]))


def param_grad(
    params: NetworkParams, x: float, target: str = "value", output_activation: str = IDENTITY
) -> ParamGradient:
    """Exact gradient of value, d1 or d2 at one input point w.r.t. all parameters."""
    _check_activation(output_activation)
    if target not in ("value", "d1", "d2"):
        raise ValueError(f"target must be 'value', 'd1' or 'd2', got {target!r}")
    out = _raw_eval_grads(
        params.hidden_weights,
        params.hidden_biases,
        params.output_weights,
        params.output_bias,
        np.array([float(x)]),
        output_activation,
    )
    g = out[{"value": 3, "d1": 4, "d2": 5}[target]][0]
    return ParamGradient.from_flat(g, params.n_hidden)


def save_params_csv(params: NetworkParams, path) -> None:
    """One named value per line; the header names the flat layout."""
    n = params.n_hidden
    names = (
        [f"hidden_weights[{i}]" for i in range(n)]
        + [f"hidden_biases[{i}]" for i in range(n)]
        + [f"output_weights[{i}]" for i in range(n)]
        + ["output_bias"]
    )
    flat = params.to_flat()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("name,value\n")
        for name, val in zip(names, flat):
            fh.write(f"{name},{float(val)!r}\n")


def load_params_csv(path) -> NetworkParams:
    """Inverse of save_params_csv; round-trips bit-exactly."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "name,value":
            raise ValueError(f"unexpected parameter CSV header: {header!r}")
        names, values = [], []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            name, val = line.split(",")
            names.append(name)
            values.append(float(val))
    if not names or names[-1] != "output_bias" or (len(names) - 1) % 3 != 0:
        raise ValueError("parameter CSV does not match the flat layout")
    n = (len(names) - 1) // 3
    return NetworkParams.from_flat(np.array(values), n)
