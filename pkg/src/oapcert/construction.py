"""The vectors z_i, their dual functionals and the trace-one operators beta_n.

Conventions
-----------
* ``z_i = e_{2i} - e_{2i+1} + e_{4i} + e_{4i+1} + e_{4i+2} + e_{4i+3}``.
* ``z_star(i, "pair") = (e*_{2i} - e*_{2i+1}) / 2`` and
  ``z_star(i, "quad") = (e*_{4i} + ... + e*_{4i+3}) / 4``.  Both are
  biorthogonal to the z's, so they agree on the span Z of the z's.
* ``beta(n) = 2**-n * sum_{i in sigma_n} z*_i (x) z_i``.

Operators are finite sums of rank-one terms stored with a common dyadic
scale.  A matrix realization uses rows indexed by the range window and
columns indexed by the domain window.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .indexing import expand_y, sigma_range
from .linalg import DyadicVector, as_dyadic, dyadic_str

__all__ = [
    "FORMS",
    "FiniteRankOperator",
    "z_vector",
    "z_star",
    "e_star",
    "beta",
    "beta_tilde",
    "beta_diff",
    "group_by_nabla",
    "levels_window",
    "exact_difference",
]

FORMS = ("pair", "quad")


def levels_window(lo: int, hi: int) -> range:
    """Contiguous index window ``sigma_lo u ... u sigma_hi``."""
    return range(sigma_range(lo).start, sigma_range(hi).stop)


def z_vector(i: int) -> DyadicVector:
    i = int(i)
    if i < 1:
        raise ValueError(f"z index must be >= 1, got {i}")
    return DyadicVector({2 * i: 1, 2 * i + 1: -1, 4 * i: 1, 4 * i + 1: 1, 4 * i + 2: 1, 4 * i + 3: 1})


def z_star(i: int, form: str = "pair") -> DyadicVector:
    """Coefficient vector of the functional dual to ``z_i``."""
    i = int(i)
    if i < 1:
        raise ValueError(f"z index must be >= 1, got {i}")
    if form == "pair":
        h = Fraction(1, 2)
        return DyadicVector({2 * i: h, 2 * i + 1: -h})
    if form == "quad":
        q = Fraction(1, 4)
        return DyadicVector({4 * i + t: q for t in range(4)})
    raise ValueError(f"unknown functional form {form!r}; expected one of {FORMS}")


def e_star(j: int) -> DyadicVector:
    return DyadicVector({int(j): 1})


@dataclass(frozen=True)
class FiniteRankOperator:
    """``scale * sum_t functional_t (x) vector_t`` acting ``x -> sum_t <functional_t, x> vector_t``.

    ``structure`` records which operator space structure the windows carry
    (``"X"`` for the interpolated space, ``"row"`` for row Hilbert spaces);
    it never changes the numbers.
    """

    scale: Fraction
    terms: tuple[tuple[DyadicVector, DyadicVector], ...]
    domain_window: range
    range_window: range
    structure: str = "X"
    labels: tuple[int, ...] = field(default=(), compare=False)
    # domain coordinate -> positions of the terms whose functional touches it
    _touching: dict[int, list[int]] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "scale", as_dyadic(self.scale))
        dom, rng = self.domain_window, self.range_window
        for t, (phi, v) in enumerate(self.terms):
            for i in phi.support:
                if i not in dom:
                    raise ValueError(f"functional index {i} outside domain window {dom}")
                self._touching.setdefault(i, []).append(t)
            for i in v.support:
                if i not in rng:
                    raise ValueError(f"vector index {i} outside range window {rng}")

    @property
    def rank_bound(self) -> int:
        return len(self.terms)

    def exact_matrix(self) -> dict[tuple[int, int], Fraction]:
        """Sparse exact matrix ``{(row index, column index): entry}`` without zeros."""
        acc: dict[tuple[int, int], Fraction] = {}
        for phi, v in self.terms:
            for c, a in phi:
                for r, b in v:
                    acc[(r, c)] = acc.get((r, c), Fraction(0)) + a * b
        s = self.scale
        return {k: s * x for k, x in sorted(acc.items()) if x != 0}

    def dense(self, domain_window: range | None = None, range_window: range | None = None) -> np.ndarray:
        dom = self.domain_window if domain_window is None else domain_window
        rng = self.range_window if range_window is None else range_window
        M = np.zeros((len(rng), len(dom)))
        r0, c0 = rng.start, dom.start
        for (r, c), x in self.exact_matrix().items():
            if r not in rng or c not in dom:
                raise ValueError(f"entry ({r}, {c}) outside the requested windows")
            M[r - r0, c - c0] = float(x)
        return M

    def trace(self) -> Fraction:
        """Exact trace against the biorthogonal system ``e*_j``."""
        return self.scale * sum((phi.dot(v) for phi, v in self.terms), Fraction(0))

    def apply(self, x: DyadicVector) -> DyadicVector:
        out = DyadicVector()
        hit = sorted({t for i in x.support for t in self._touching.get(i, ())})
        for phi, v in (self.terms[t] for t in hit):
            c = phi.dot(x)
            if c:
                out = out + v * c
        return out * self.scale

    def to_dict(self) -> dict:
        def vec(v: DyadicVector) -> dict:
            return {"support": list(v.support), "coeffs": [dyadic_str(c) for _, c in v]}

        return {
            "scale": dyadic_str(self.scale),
            "structure": self.structure,
            "domain_window": [self.domain_window.start, self.domain_window.stop],
            "range_window": [self.range_window.start, self.range_window.stop],
            "terms": [{"functional": vec(p), "vector": vec(v)} for p, v in self.terms],
        }


def exact_difference(a: FiniteRankOperator, b: FiniteRankOperator) -> dict[tuple[int, int], Fraction]:
    """Exact sparse matrix of ``a - b`` (entries only where nonzero)."""
    out = dict(a.exact_matrix())
    for k, x in b.exact_matrix().items():
        out[k] = out.get(k, Fraction(0)) - x
    return {k: x for k, x in out.items() if x != 0}


def beta(n: int, form: str = "pair") -> FiniteRankOperator:
    """``2**-n * sum_{i in sigma_n} z_star(i, form) (x) z_i``."""
    if n < 2:
        raise ValueError(f"beta_n is defined for n >= 2, got {n}")
    dom = sigma_range(n + 1) if form == "pair" else sigma_range(n + 2)
    terms = tuple((z_star(i, form), z_vector(i)) for i in sigma_range(n))
    return FiniteRankOperator(Fraction(1, 2**n), terms, dom, levels_window(n + 1, n + 2))


def beta_tilde(n: int) -> FiniteRankOperator:
    """Same matrix as ``beta(n)`` but read between row Hilbert spaces."""
    return replace(beta(n, "pair"), structure="row")


def beta_diff(n: int) -> FiniteRankOperator:
    """``2**-(n+1) * sum_{j in sigma_{n+1}} e*_j (x) y_j``."""
    if n < 3:
        raise ValueError(f"beta_n - beta_(n-1) needs n >= 3, got {n}")
    dom = sigma_range(n + 1)
    terms = tuple((e_star(j), DyadicVector(expand_y(j))) for j in dom)
    return FiniteRankOperator(Fraction(1, 2 ** (n + 1)), terms, dom, levels_window(n, n + 2), labels=tuple(dom))


def group_by_nabla(d: FiniteRankOperator, nabla) -> list[tuple[tuple[int, ...], FiniteRankOperator]]:
    """Split an operator whose functionals are ``e*_j`` into one piece per block of ``nabla``.

    ``nabla`` must partition the domain window exactly.
    """
    dom = d.domain_window
    by_index: dict[int, tuple[DyadicVector, DyadicVector]] = {}
    for phi, v in d.terms:
        sup = phi.support
        if len(sup) != 1 or phi[sup[0]] != 1:
            raise ValueError("group_by_nabla needs coordinate functionals e*_j")
        by_index[sup[0]] = (phi, v)
    seen: set[int] = set()
    out = []
    for block in nabla:
        block = tuple(int(j) for j in block)
        for j in block:
            if j not in dom or j in seen:
                raise ValueError(f"nabla is not a partition of {dom}: bad index {j}")
            seen.add(j)
        terms = tuple(by_index[j] for j in block if j in by_index)
        out.append((block, FiniteRankOperator(d.scale, terms, dom, d.range_window, labels=block)))
    if len(seen) != len(dom):
        raise ValueError(f"nabla does not cover {dom}")
    return out
