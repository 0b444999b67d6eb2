"""Dyadic level structure and the nine index functions.

Basis indices are natural numbers ``j >= 2``.  The level of ``j`` is the
unique ``n`` with ``2**n <= j < 2**(n+1)``; the level block is
``sigma(n) = range(2**n, 2**(n+1))``.

Every ``j >= 4`` is written ``j = 4*i + l`` with ``i >= 1`` and
``l in {0, 1, 2, 3}``.  The nine functions ``f(k, j)`` and signed
coefficients ``lambda_coeff(k, j)`` describe the vector

    y_j = sum_k lambda_coeff(k, j) * e_{f(k, j)}

which appears in the telescoped difference of consecutive trace-one
operators.  ``y_j`` always lies in the span of the ``z_i``::

    y_{4i+l} = (-1)**l * z_{2i + l//2} - z_i
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

__all__ = [
    "K_RANGE",
    "level",
    "sigma_range",
    "f",
    "lambda_coeff",
    "expand_y",
    "y_as_z_combination",
    "f_array",
    "lambda_array",
    "target_level_shift",
]

K_RANGE = range(1, 10)

# level offset of f_k(j) relative to level(j)
_LEVEL_SHIFT = {1: -1, 2: -1, 3: 0, 4: 0, 5: 0, 6: 1, 7: 1, 8: 1, 9: 1}


def level(j: int) -> int:
    """Return the dyadic level ``floor(log2(j))`` of a basis index ``j >= 2``."""
    j = int(j)
    if j < 2:
        raise ValueError(f"basis index must be >= 2, got {j}")
    return j.bit_length() - 1


def sigma_range(n: int) -> range:
    """Return the level block ``{2**n, ..., 2**(n+1) - 1}`` as a half-open range."""
    n = int(n)
    if n < 1:
        raise ValueError(f"level must be >= 1, got {n}")
    return range(1 << n, 1 << (n + 1))


def target_level_shift(k: int) -> int:
    """Level offset of ``f(k, j)`` relative to ``level(j)`` (-1, 0 or +1)."""
    _check_k(k)
    return _LEVEL_SHIFT[k]


def _check_k(k: int) -> None:
    if k not in K_RANGE:
        raise ValueError(f"index function number must be in 1..9, got {k}")


def _split(j: int) -> tuple[int, int]:
    j = int(j)
    if j < 4:
        raise ValueError(f"index functions need j >= 4, got {j}")
    return j >> 2, j & 3


def f(k: int, j: int) -> int:
    """Target index of the ``k``-th index function at ``j``."""
    _check_k(k)
    i, l = _split(j)
    if k == 1:
        return 2 * i
    if k == 2:
        return 2 * i + 1
    if k <= 5:
        return 4 * i + (l + k - 2) % 4
    return 8 * i + 4 * (l >> 1) + (k - 6)


def lambda_coeff(k: int, j: int) -> int:
    """Signed coefficient of ``e_{f(k, j)}`` in ``y_j``."""
    _check_k(k)
    i, l = _split(j)
    if k == 1:
        return -1
    if k == 2:
        return 1
    if k <= 5:
        # the pair partner j ^ 1 is hit twice in the cancellation
        return -2 if f(k, j) == (int(j) ^ 1) else -1
    return 1 if l % 2 == 0 else -1


def expand_y(j: int) -> dict[int, Fraction]:
    """Return ``y_j`` as a sparse ``{index: coefficient}`` mapping (nine entries)."""
    _split(j)
    return {f(k, j): Fraction(lambda_coeff(k, j)) for k in K_RANGE}


def y_as_z_combination(j: int) -> tuple[int, int, int]:
    """Express ``y_j`` through the ``z`` vectors.

    Returns
    -------
    (sign, p, q) : tuple of int
        Such that ``y_j = sign * z_p - z_q``.
    """
    i, l = _split(j)
    sign = -1 if l % 2 else 1
    return sign, 2 * i + (l >> 1), i


def f_array(k: int, j: np.ndarray) -> np.ndarray:
    """Vectorised :func:`f` over an integer array of indices ``>= 4``."""
    _check_k(k)
    j = np.asarray(j, dtype=np.int64)
    if j.size and j.min() < 4:
        raise ValueError("index functions need j >= 4")
    i, l = j >> 2, j & 3
    if k == 1:
        return 2 * i
    if k == 2:
        return 2 * i + 1
    if k <= 5:
        return 4 * i + (l + k - 2) % 4
    return 8 * i + 4 * (l >> 1) + (k - 6)


def lambda_array(k: int, j: np.ndarray) -> np.ndarray:
    """Vectorised :func:`lambda_coeff`."""
    _check_k(k)
    j = np.asarray(j, dtype=np.int64)
    if k == 1:
        return -np.ones_like(j)
    if k == 2:
        return np.ones_like(j)
    if k <= 5:
        return np.where(f_array(k, j) == (j ^ 1), -2, -1)
    return np.where(j % 2 == 0, 1, -1)
