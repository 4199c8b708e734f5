"""
Polynomial special functions with complex parameters.

scipy's evaluators take real orders only; the Jacobi states of the
trigonometric classes need complex a, b and z.
"""

from math import factorial

import numpy as np


class SpecialFunctionError(ValueError):
    """Invalid order or parameter for a special function."""


def _check_degree(n: int):
    if not isinstance(n, (int, np.integer)) or n < 0:
        raise SpecialFunctionError(f"degree must be a non-negative integer, got {n!r}")


def _binomial(u, k: int):
    """Generalized binomial coefficient C(u, k) for any complex u."""
    out = 1
    for j in range(k):
        out = out * (u - j)
    return out / factorial(k)


def laguerre(n: int, a, x):
    """
    Generalized Laguerre polynomial L_n^(a)(x) by upward recurrence.

    Args:
        n: Degree
        a: Order, real or complex
        x: Argument, scalar or array

    Returns:
        L_n^(a) at x, same shape as x
    """
    _check_degree(n)
    x = np.asarray(x)
    prev = np.ones_like(x, dtype=np.result_type(x, a, float))
    if n == 0:
        return prev
    cur = 1 + a - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + a - x) * cur - (k + a) * prev) / (k + 1)
    return cur


def jacobi(n: int, a, b, z):
    """
    Jacobi polynomial P_n^(a,b)(z) from its finite binomial series.

    The series is polynomial in a and b, so it stays defined where the
    hypergeometric form divides by (a+1)_n.
    """
    _check_degree(n)
    z = np.asarray(z)
    lower = (z - 1) / 2
    upper = (z + 1) / 2
    total = np.zeros_like(z, dtype=np.result_type(z, a, b, float))
    for s in range(n + 1):
        total = total + _binomial(n + a, n - s) * _binomial(n + b, s) * lower**s * upper ** (n - s)
    return total


def chf_poly(n: int, b, z):
    """
    Terminating confluent hypergeometric function 1F1(-n; b; z).

    Raises:
        SpecialFunctionError: If n < 0 or b is a non-positive integer
    """
    _check_degree(n)
    if np.isreal(b) and float(np.real(b)) <= 0 and float(np.real(b)).is_integer():
        raise SpecialFunctionError(f"1F1(-n; b; z) is undefined for b = {b}")
    z = np.asarray(z)
    term = np.ones_like(z, dtype=np.result_type(z, b, float))
    total = term.copy()
    for k in range(n):
        term = term * (k - n) / ((b + k) * (k + 1)) * z
        total = total + term
    return total


def pochhammer(u, k: int):
    """Rising factorial (u)_k."""
    out = 1
    for j in range(k):
        out = out * (u + j)
    return out
