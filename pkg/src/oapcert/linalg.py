"""Exact dyadic vectors and floating-point singular value machinery.

Everything the construction produces has coefficients of the form
``p / 2**q``.  Those are kept exact with :class:`fractions.Fraction`;
floating point only enters when a dense matrix is handed to the SVD
routines below.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from fractions import Fraction
from numbers import Rational

import numpy as np

__all__ = [
    "as_dyadic",
    "dyadic_str",
    "DyadicVector",
    "singular_values",
    "jacobi_singular_values",
    "operator_norm",
    "schatten_norm",
    "row_min_norm",
]


def as_dyadic(x) -> Fraction:
    """Convert ``x`` to a Fraction, rejecting non-dyadic denominators."""
    if isinstance(x, float):
        if not np.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        v = Fraction(x)
    elif isinstance(x, (int, Rational, np.integer)):
        v = Fraction(int(x)) if isinstance(x, np.integer) else Fraction(x)
    else:
        raise TypeError(f"cannot interpret {type(x).__name__} as a dyadic rational")
    d = v.denominator
    if d & (d - 1):
        raise ValueError(f"{v} is not a dyadic rational")
    return v


def dyadic_str(x) -> str:
    """Render a dyadic rational as ``"p/2^q"`` (``p`` odd, or ``0/2^0``)."""
    v = as_dyadic(x)
    return f"{v.numerator}/2^{v.denominator.bit_length() - 1}"


class DyadicVector:
    """Sparse vector over basis indices with exact dyadic coefficients.

    Zero coefficients are never stored, so two vectors are equal iff their
    ``entries`` dicts are equal.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: Mapping[int, object] | Iterable[tuple[int, object]] = ()):
        items = entries.items() if isinstance(entries, Mapping) else entries
        acc: dict[int, Fraction] = {}
        for idx, c in items:
            idx = int(idx)
            acc[idx] = acc.get(idx, Fraction(0)) + as_dyadic(c)
        self._entries = {i: c for i, c in sorted(acc.items()) if c != 0}

    @property
    def entries(self) -> dict[int, Fraction]:
        return dict(self._entries)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(self._entries)

    def __getitem__(self, idx: int) -> Fraction:
        return self._entries.get(int(idx), Fraction(0))

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries.items())

    def __eq__(self, other) -> bool:
        if not isinstance(other, DyadicVector):
            return NotImplemented
        return self._entries == other._entries

    def __hash__(self):
        return hash(tuple(self._entries.items()))

    def __repr__(self) -> str:
        body = ", ".join(f"{i}: {c}" for i, c in self._entries.items())
        return f"DyadicVector({{{body}}})"

    def __add__(self, other: DyadicVector) -> DyadicVector:
        return DyadicVector(list(self) + list(other))

    def __neg__(self) -> DyadicVector:
        return DyadicVector({i: -c for i, c in self})

    def __sub__(self, other: DyadicVector) -> DyadicVector:
        return self + (-other)

    def __mul__(self, s) -> DyadicVector:
        s = as_dyadic(s)
        return DyadicVector({i: s * c for i, c in self})

    __rmul__ = __mul__

    def dot(self, other: DyadicVector) -> Fraction:
        """Exact bilinear pairing ``sum_i self[i] * other[i]``."""
        small, big = (self, other) if len(self) <= len(other) else (other, self)
        return sum((c * big[i] for i, c in small), Fraction(0))

    def norm2_sq(self) -> Fraction:
        return self.dot(self)

    def to_dense(self, window: range | list[int]) -> np.ndarray:
        """Float coordinates on ``window``; raises if the support leaves it."""
        pos = {j: k for k, j in enumerate(window)}
        out = np.zeros(len(pos))
        for i, c in self:
            if i not in pos:
                raise ValueError(f"index {i} outside the declared window")
            out[pos[i]] = float(c)
        return out


def _as_matrix(M) -> np.ndarray:
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.size == 0:
        raise ValueError("expected a nonempty 2-d matrix")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def singular_values(M, check: bool = True) -> np.ndarray:
    """All ``min(rows, cols)`` singular values of ``M``, descending.

    With ``check`` the thin decomposition is recomposed and the relative
    residual must stay below 1e-10.
    """
    A = _as_matrix(M)
    if not check:
        return np.linalg.svd(A, compute_uv=False)
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    scale = max(np.linalg.norm(A), np.finfo(float).tiny)
    resid = np.linalg.norm(A - (U * s) @ Vt) / scale
    if resid > 1e-10:
        raise ArithmeticError(f"SVD reconstruction residual {resid:.3e} exceeds 1e-10")
    return s


def jacobi_singular_values(M, tol: float = 1e-12, max_sweeps: int = 60) -> np.ndarray:
    """One-sided Jacobi singular values (Hestenes), descending.

    Kept independent of LAPACK so it can cross-check :func:`singular_values`.
    Sweeps stop once every normalised column inner product is below ``tol``.
    """
    A = _as_matrix(M)
    if A.shape[0] < A.shape[1]:
        A = A.T
    U = A.copy()
    n = U.shape[1]
    # columns below this norm count as converged zeros
    floor = np.finfo(float).eps * max(np.linalg.norm(A), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                a = np.linalg.norm(U[:, p])
                b = np.linalg.norm(U[:, q])
                if a <= floor or b <= floor:
                    continue
                g = U[:, p] @ U[:, q]
                c_rel = abs(g) / a / b
                off = max(off, c_rel)
                if c_rel <= tol:
                    continue
                zeta = (b - a) * (b + a) / (2.0 * g)
                t = np.copysign(1.0, zeta) / (abs(zeta) + np.hypot(1.0, zeta))
                c = 1.0 / np.hypot(1.0, t)
                s = c * t
                up = U[:, p].copy()
                U[:, p] = c * up - s * U[:, q]
                U[:, q] = s * up + c * U[:, q]
        if off <= tol:
            break
    else:
        raise ArithmeticError("Jacobi SVD did not converge")
    return np.sort(np.linalg.norm(U, axis=0))[::-1]


def operator_norm(M) -> float:
    """Largest singular value."""
    return float(singular_values(M, check=False)[0])


def schatten_norm(M, p: float) -> float:
    """Schatten ``p``-norm ``(sum sigma_i**p)**(1/p)``; ``p = inf`` gives the operator norm."""
    if not p >= 1:
        raise ValueError(f"Schatten exponent must be >= 1, got {p}")
    s = singular_values(M)
    if np.isinf(p):
        return float(s[0])
    smax = s[0]
    if smax == 0.0:
        return 0.0
    # rescale to avoid overflow for large p
    return float(smax * np.sum((s / smax) ** p) ** (1.0 / p))


def row_min_norm(a) -> float:
    """Norm of ``sum_j a_j (x) delta_j`` in ``B(H) (x)_min R``: ``||sum_j a_j a_j^T||**(1/2)``."""
    mats = [np.asarray(x, dtype=float) for x in a]
    if not mats:
        raise ValueError("empty family")
    shape = mats[0].shape
    if len(shape) != 2 or shape[0] != shape[1]:
        raise ValueError("row_min_norm expects square matrices")
    if any(x.shape != shape for x in mats):
        raise ValueError("mismatched matrix sizes in family")
    G = sum(x @ x.T for x in mats)
    lam = np.linalg.eigvalsh((G + G.T) / 2.0)[-1]
    return float(np.sqrt(max(lam, 0.0)))
