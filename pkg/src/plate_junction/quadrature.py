"""Quadrature on the reference triangle (0,0)-(1,0)-(0,1) and on [0, 1]."""

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .errors import QuadratureError

MAX_ORDER = 40


@lru_cache(maxsize=None)
def triangle_rule(order):
    """Collapsed Gauss rule exact for polynomials of total degree <= ``order``.

    Returns ``(points, weights)`` with points of shape (n, 2); the weights
    sum to the reference area 1/2.
    """
    if not 0 <= order <= MAX_ORDER:
        raise QuadratureError(f"unsupported quadrature order {order}")
    n = order // 2 + 1
    s, ws = roots_legendre(n)
    t, wt = roots_jacobi(n, 1.0, 0.0)
    s = 0.5 * (s + 1.0)
    t = 0.5 * (t + 1.0)
    ws = 0.5 * ws
    wt = 0.25 * wt
    tt, ss = np.meshgrid(t, s, indexing="ij")
    pts = np.column_stack([((1.0 - tt) * ss).ravel(), tt.ravel()])
    w = np.outer(wt, ws).ravel()
    pts.setflags(write=False)
    w.setflags(write=False)
    return pts, w


@lru_cache(maxsize=None)
def line_rule(order):
    """Gauss-Legendre rule on [0, 1] exact up to degree ``order``."""
    if not 0 <= order <= MAX_ORDER:
        raise QuadratureError(f"unsupported quadrature order {order}")
    x, w = roots_legendre(order // 2 + 1)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def reference_monomial_integral(a, b):
    """Exact value of the integral of x**a * y**b over the reference triangle."""
    from math import factorial

    return factorial(a) * factorial(b) / factorial(a + b + 2)
