"""Log-domain helpers.

Everything downstream funnels -inf ("impossible") through these functions so
that IEEE infinities never reach exp-domain arithmetic: the all-impossible
case is detected and short-circuited before any subtraction of infinities.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

NEG_INF = float("-inf")


def logsumexp(values: Iterable[float]) -> float:
    """Max-shifted log(sum(exp(values))); -inf entries contribute zero."""
    vals = [v for v in values if v != NEG_INF]
    if not vals:
        return NEG_INF
    m = max(vals)
    return m + math.log(sum(math.exp(v - m) for v in vals))


def logsumexp_array(values: np.ndarray) -> float:
    finite = values[values != NEG_INF]
    if finite.size == 0:
        return NEG_INF
    m = float(finite.max())
    return m + math.log(float(np.exp(finite - m).sum()))


def softmax_masked(values) -> np.ndarray:
    """exp(v - logsumexp(v)) with -inf entries mapped to exact zeros."""
    values = np.asarray(values, dtype=float)
    lse = logsumexp_array(values)
    if lse == NEG_INF:
        raise ValueError("softmax over an all -inf vector")
    out = np.zeros_like(values, dtype=float)
    mask = values != NEG_INF
    out[mask] = np.exp(values[mask] - lse)
    return out


def log1pexp(x: float) -> float:
    """log(1 + exp(x)), stable for large |x|."""
    if x == NEG_INF:
        return 0.0
    if x > 0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


def sigmoid(x: float) -> float:
    if x == NEG_INF:
        return 0.0
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def safe_log(p: float) -> float:
    """log(p) with log(0) = -inf instead of a math domain error."""
    return math.log(p) if p > 0.0 else NEG_INF
