"""Benchmark objective functions and their registry."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


def f_sphere(x) -> float:
    """Sum of squares; global minimum 0 at the origin."""
    x = np.asarray(x, dtype=float)
    return float(np.dot(x, x))


def f_summation_cancellation(x) -> float:
    """Prefix-sum cancellation objective, stored negated for minimization.

    With y_1 = x_1 and y_i = y_{i-1} + x_i the value is
    -1 / (1e-5 + sum |y_i|); the global minimum is -1e5 at the origin.
    """
    x = np.asarray(x, dtype=float)
    y = np.cumsum(x)
    return float(-1.0 / (1e-5 + np.sum(np.abs(y))))


@dataclass(frozen=True)
class BenchmarkSpec:
    name: str
    func: Callable[[np.ndarray], float]
    default_lower: float
    default_upper: float
    target_eval: float


REGISTRY = {
    "sphere": BenchmarkSpec("sphere", f_sphere, -600.0, 600.0, 0.0),
    "summation-cancellation": BenchmarkSpec(
        "summation-cancellation", f_summation_cancellation, -0.16, 0.16, -1e5),
}


class UnknownBenchmarkError(KeyError):
    pass


def get_benchmark(name: str) -> BenchmarkSpec:
    try:
        return REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted(REGISTRY))
        raise UnknownBenchmarkError(
            f"unknown function {name!r}; registry: {known}") from None
