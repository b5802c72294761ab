"""Tiny arithmetic expression compiler for config-defined problems.

Coefficient, forcing, data and boundary functions can be written as plain
text like "0.5*sigma**2*S**2" or "max(S - 10, 0)". The grammar is a strict
whitelist over Python expression syntax: numbers, the declared variable
names, +, -, *, /, **, unary minus, and a handful of math calls. Anything
else (attributes, subscripts, comprehensions, names outside the whitelist)
is rejected at compile time, so config files cannot smuggle code.

Compiled callables broadcast over numpy arrays.
"""

from __future__ import annotations

import ast
import math
from typing import Callable, Sequence

import numpy as np


class ExpressionError(ValueError):
    """Raised when an expression fails to parse or uses unknown syntax."""


_FUNCTIONS = {
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "abs": np.abs,
    "max": np.maximum,
    "min": np.minimum,
}

_CONSTANTS = {"pi": math.pi, "e": math.e}

_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: a ** b,
}


def _check(node: ast.AST, variables: Sequence[str]) -> None:
    if isinstance(node, ast.Expression):
        _check(node.body, variables)
    elif isinstance(node, ast.BinOp):
        if type(node.op) not in _BINOPS:
            raise ExpressionError(f"operator {type(node.op).__name__} is not allowed")
        _check(node.left, variables)
        _check(node.right, variables)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.UAdd, ast.USub)):
            raise ExpressionError(f"operator {type(node.op).__name__} is not allowed")
        _check(node.operand, variables)
    elif isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)):
            raise ExpressionError(f"constant {node.value!r} is not a number")
    elif isinstance(node, ast.Name):
        if node.id not in variables and node.id not in _CONSTANTS:
            raise ExpressionError(
                f"unknown name {node.id!r}; variables here are {tuple(variables)}"
            )
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
            raise ExpressionError("only calls to " + ", ".join(sorted(_FUNCTIONS)) + " are allowed")
        if node.keywords:
            raise ExpressionError("keyword arguments are not allowed")
        arity = 2 if node.func.id in ("max", "min") else 1
        if len(node.args) != arity:
            raise ExpressionError(f"{node.func.id} takes exactly {arity} argument(s)")
        for arg in node.args:
            _check(arg, variables)
    else:
        raise ExpressionError(f"syntax {type(node).__name__} is not allowed")


def _evaluate(node: ast.AST, env: dict):
    if isinstance(node, ast.Expression):
        return _evaluate(node.body, env)
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_evaluate(node.left, env), _evaluate(node.right, env))
    if isinstance(node, ast.UnaryOp):
        val = _evaluate(node.operand, env)
        return -val if isinstance(node.op, ast.USub) else +val
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        return env[node.id] if node.id in env else _CONSTANTS[node.id]
    if isinstance(node, ast.Call):
        fn = _FUNCTIONS[node.func.id]
        return fn(*[_evaluate(a, env) for a in node.args])
    raise ExpressionError(f"syntax {type(node).__name__} is not allowed")


def compile_expression(text: str, variables: Sequence[str]) -> Callable:
    """Compile text into f(*variable_values); broadcasts over arrays.

    Raises ExpressionError with the offending token named when the text
    does not fit the grammar.
    """
    if not isinstance(text, str) or not text.strip():
        raise ExpressionError("empty expression")
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from exc
    _check(tree, variables)

    def fn(*args):
        if len(args) != len(variables):
            raise TypeError(f"expected {len(variables)} argument(s), got {len(args)}")
        env = {name: np.asarray(val, dtype=float) if np.ndim(val) else float(val)
               for name, val in zip(variables, args)}
        return _evaluate(tree, env)

    fn.__doc__ = f"compiled expression: {text!r} over {tuple(variables)}"
    return fn
