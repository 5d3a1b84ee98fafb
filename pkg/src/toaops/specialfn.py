"""Confluent hypergeometric limit function and Gauss-Legendre quadrature."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _backend
from .errors import DomainError


def hyp0f1(b, z):
    """Evaluate ``0F1(;b;z)`` for real ``b > 0`` and real ``z``.

    Uses the ascending series for ``|z| <= 4`` and the Bessel-function
    representations beyond that, where the alternating series would lose
    digits to cancellation. Arrays are evaluated elementwise.
    """
    b = float(b)
    if not b > 0.0:
        raise DomainError(f"hyp0f1 requires b > 0, got {b}")
    if np.ndim(z) == 0:
        return _backend.hyp0f1_scalar(b, float(z))
    return _backend.hyp0f1_array(b, np.asarray(z, dtype=float))


def hyp0f1_recurrence_check(b, z):
    """Residual of ``0F1(;b;z) = 0F1(;b+1;z) + z/(b(b+1)) 0F1(;b+2;z)``."""
    lhs = hyp0f1(b, z)
    rhs = hyp0f1(b + 1, z) + z / (b * (b + 1)) * hyp0f1(b + 2, z)
    return abs(lhs - rhs)


@dataclass(frozen=True)
class QuadRule:
    nodes: np.ndarray
    weights: np.ndarray
    a: float
    b: float

    def __len__(self):
        return len(self.nodes)

    def integrate(self, values):
        return float(np.dot(self.weights, values))


def _legendre_and_derivative(n, x):
    p0 = np.ones_like(x)
    p1 = x.copy()
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    return p1, dp


@lru_cache(maxsize=64)
def _reference_rule(n):
    """Nodes and weights on [-1, 1], ascending, exactly mirror-symmetric."""
    m = (n + 1) // 2
    i = np.arange(1, m + 1)
    # Chebyshev-like initial guesses for the largest m roots, descending.
    x = np.cos(np.pi * (i - 0.25) / (n + 0.5))
    for _ in range(100):
        p, dp = _legendre_and_derivative(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    p, dp = _legendre_and_derivative(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    if n % 2:
        x[-1] = 0.0
    nodes = np.concatenate([-x, x[::-1][n % 2:]])
    if n % 2:
        nodes[m - 1] = 0.0
    weights = np.concatenate([w, w[::-1][n % 2:]])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre(n, a=-1.0, b=1.0):
    """Gauss-Legendre rule of order ``n`` on ``[a, b]``."""
    if int(n) != n or n < 1:
        raise DomainError(f"quadrature order must be a positive integer, got {n}")
    a, b = float(a), float(b)
    if not a < b:
        raise DomainError(f"need a < b, got [{a}, {b}]")
    x, w = _reference_rule(int(n))
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    return QuadRule(nodes=mid + half * x, weights=half * w, a=a, b=b)


def barycentric_weights(n):
    """Barycentric interpolation weights for the order-``n`` Gauss-Legendre nodes.

    Closed form ``(-1)^j sqrt((1 - x_j^2) w_j)``, up to a common factor.
    """
    x, w = _reference_rule(int(n))
    bw = np.sqrt((1.0 - x * x) * w)
    bw[1::2] *= -1.0
    return bw
