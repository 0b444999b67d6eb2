"""Norm bounds behind the three trace-one conditions.

Only quantities that admit a finite computation are evaluated: Hilbertian
operator norms through the SVD, Schatten norms, row-space minimal norms,
and the closed-form interpolation bounds.  Completely bounded and
projective norms on the interpolated space are bounded from above by the
factorization calculus, never computed directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .construction import beta_tilde, levels_window, z_star, z_vector
from .indexing import K_RANGE, expand_y, f, lambda_coeff, level, target_level_shift, y_as_z_combination
from .linalg import DyadicVector, row_min_norm, schatten_norm, singular_values
from .partitions import PartitionSet, verify_partition_level

__all__ = [
    "PSI_CONSTANT",
    "beta_tilde_closed_form",
    "beta_tilde_stated",
    "beta_tilde_spectrum",
    "beta_tilde_norm",
    "identity_interp_bound",
    "condition_ii_bound",
    "oh_row_proj_norm",
    "block_norm_bound",
    "psi_groups",
    "PsiSampleReport",
    "psi_sample_check",
    "iota_z_matrix",
    "FactorizationCertificate",
    "factorization_check",
    "ConditionIIIBound",
    "condition_iii_bound",
]

PSI_CONSTANT = 18


def beta_tilde_closed_form(n: int) -> float:
    """Norm of one rank-one piece: ``2**-n * ||z*_i||_2 * ||z_i||_2 = sqrt(3) / 2**n``."""
    return 2.0**-n * (np.sqrt(2) / 2) * np.sqrt(6)


def beta_tilde_stated(n: int) -> float:
    """Reference value ``sqrt(3) / 2**(n+1)``; the computed norm is twice this."""
    return np.sqrt(3) / 2.0 ** (n + 1)


def beta_tilde_spectrum(n: int) -> np.ndarray:
    """Singular values of the dense window matrix of ``beta_tilde(n)``."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    return singular_values(beta_tilde(n).dense())


def beta_tilde_norm(n: int, dense: bool = True) -> float:
    """Operator norm of ``beta_tilde(n)``.

    With ``dense`` the full window matrix goes through the SVD.  Otherwise
    the operator is split into its rank-one terms, which have pairwise
    disjoint row and column supports, and the largest of their norms is
    returned.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if dense:
        return float(beta_tilde_spectrum(n)[0])
    op = beta_tilde(n)
    s = float(op.scale)
    return max(s * np.sqrt(float(phi.norm2_sq()) * float(v.norm2_sq())) for phi, v in op.terms)


def identity_interp_bound(delta_counts) -> float:
    """cb bound ``(sum of counts)**(1/4)`` for a formal identity between the l2-sum and a row space.

    Geometric mean of the endpoint bounds ``sqrt(count)`` (infinity-sum)
    and ``1`` (one-sum).
    """
    counts = [int(c) for c in delta_counts]
    if not counts:
        raise ValueError("no block counts given")
    if min(counts) < 1:
        raise ValueError("block counts must be >= 1")
    return float(sum(counts)) ** 0.25


def condition_ii_bound(n: int, partitions: PartitionSet, tilde_norm: float | None = None) -> float:
    """Upper bound ``||I_1||_cb * ||beta_tilde_n|| * ||I_2||_cb`` for ``||beta_n||_cb``."""
    for k in (n + 1, n + 2):
        if k not in partitions:
            raise ValueError(f"condition (ii) at level {n} needs partitions for level {k}")
    d1, d2 = partitions[n + 1].delta_count, partitions[n + 2].delta_count
    if tilde_norm is None:
        tilde_norm = beta_tilde_norm(n, dense=False)
    return identity_interp_bound([d1]) * tilde_norm * identity_interp_bound([d1, d2])


def oh_row_proj_norm(M) -> float:
    """Projective norm in ``OH_n (x) R_n`` of a square matrix, i.e. its Schatten 4/3 norm."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("oh_row_proj_norm expects a square matrix")
    return schatten_norm(M, 4 / 3)


def block_norm_bound(A) -> float:
    """``18 * card(A)**(3/4)``."""
    card = len(set(A))
    if card == 0:
        raise ValueError("empty block")
    return PSI_CONSTANT * card**0.75


def psi_groups(A) -> list[dict[int, list[tuple[int, int]]]]:
    """For each ``k = 1..9``: target index -> ``[(j, lambda_{j,k}), ...]`` over ``j in A``."""
    groups = []
    for k in K_RANGE:
        g: dict[int, list[tuple[int, int]]] = {}
        for j in sorted(A):
            g.setdefault(f(k, j), []).append((j, lambda_coeff(k, j)))
        groups.append(g)
    return groups


def _block_level(A) -> int:
    levels = {level(j) for j in A}
    if len(levels) != 1:
        raise ValueError(f"block {sorted(A)} spans several levels")
    return levels.pop()


def _check_images(A, partitions: PartitionSet) -> None:
    lv = _block_level(A)
    for k in K_RANGE:
        t = lv + target_level_shift(k)
        if t not in partitions:
            raise ValueError(f"no Delta partition for level {t}")
        pair = partitions[t]
        labels = {int(pair.delta_labels[f(k, j) - (1 << t)]) for j in A}
        if len(labels) > 1:
            raise ValueError(f"f_{k}({sorted(A)}) is not inside one Delta_{t} block")


@dataclass
class PsiSampleReport:
    block: tuple[int, ...]
    ratios: np.ndarray
    samples: int
    dim: int
    seed: int

    @property
    def max_ratio(self) -> float:
        return float(self.ratios.max()) if self.ratios.size else 0.0

    @property
    def ok(self) -> bool:
        return self.max_ratio <= PSI_CONSTANT


def _row_norms(stack: np.ndarray) -> np.ndarray:
    """Row minimal norm for a batch: ``stack`` has shape (samples, members, d, d)."""
    G = np.einsum("sjab,sjcb->sac", stack, stack)
    lam = np.linalg.eigvalsh((G + np.swapaxes(G, 1, 2)) / 2)[:, -1]
    return np.sqrt(np.clip(lam, 0.0, None))


def psi_sample_check(A, partitions: PartitionSet, dim: int = 4, samples: int = 200, seed: int = 0, families=None) -> PsiSampleReport:
    """Sample ``||sum_j a_j (x) y_j|| / ||sum_j a_j (x) delta_j||`` over random families.

    The numerator is evaluated as the sum over ``k`` of row-space norms of
    the ``k``-th regrouped family, which is legitimate only when every
    ``f_k(A)`` lies in one Delta block.  A zero family gets ratio 0.

    ``families`` may supply explicit samples of shape
    ``(samples, card(A), dim, dim)`` instead of Gaussian draws.
    """
    A = tuple(sorted(int(j) for j in A))
    if not A:
        raise ValueError("empty block")
    _check_images(A, partitions)
    pos = {j: t for t, j in enumerate(A)}
    if families is None:
        rng = np.random.default_rng(seed)
        fam = rng.standard_normal((samples, len(A), dim, dim))
    else:
        fam = np.asarray(families, dtype=float)
        samples, _, dim, _ = fam.shape
    den = _row_norms(fam)
    num = np.zeros(samples)
    for g in psi_groups(A):
        combined = np.stack(
            [sum(lam * fam[:, pos[j]] for j, lam in members) for members in g.values()],
            axis=1,
        )
        num += _row_norms(combined)
    ratios = np.divide(num, den, out=np.zeros(samples), where=den > 0)
    return PsiSampleReport(A, ratios, samples, dim, seed)


@dataclass
class FactorizationCertificate:
    """Matrices of ``alpha = Psi . I . P_A . iota_Z`` in z-coordinates.

    ``z_window`` indexes the z-basis columns/rows, ``x_window`` the
    coordinates of the ambient space.
    """

    block: tuple[int, ...]
    n: int
    z_window: range
    x_window: range
    iota_z: np.ndarray
    p_a: np.ndarray
    identity: np.ndarray
    psi: np.ndarray
    composite: np.ndarray
    target: np.ndarray
    ambient_ok: bool
    trace_residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    support_ok: bool = True

    @property
    def exact_ok(self) -> bool:
        return np.array_equal(self.composite, self.target) and self.ambient_ok and self.support_ok

    @property
    def max_trace_residual(self) -> float:
        return float(self.trace_residuals.max()) if self.trace_residuals.size else 0.0

    @property
    def ok(self) -> bool:
        return self.exact_ok and self.max_trace_residual < 1e-10


def iota_z_matrix(zw: range, xw: range) -> np.ndarray:
    """Inclusion of Z: column ``k`` holds the coordinates of ``z_k`` on ``xw``."""
    M = np.zeros((len(xw), len(zw)), dtype=np.int64)
    for c, k in enumerate(zw):
        for j, v in z_vector(k):
            M[j - xw.start, c] = int(v)
    return M


def _z_coordinates(v: DyadicVector, zw: range) -> dict[int, Fraction]:
    """Coordinates of ``v`` in the z-basis, verified by reconstruction."""
    coords = {}
    for p in sorted({j >> 1 for j in v.support} | {j >> 2 for j in v.support}):
        if p in zw:
            c = z_star(p, "pair").dot(v)
            if c:
                coords[p] = c
    rebuilt = DyadicVector()
    for p, c in coords.items():
        rebuilt = rebuilt + z_vector(p) * c
    if rebuilt != v:
        raise ArithmeticError(f"vector {v} is not in the span of z_k, k in {zw}")
    return coords


def factorization_check(A, n: int, partitions: PartitionSet, seed: int = 0, n_random: int = 20, iota=None) -> FactorizationCertificate:
    """Build and verify the factorization for a block ``A`` of ``Nabla_{n+1}``.

    The composite ``Psi . I . P_A . iota_Z`` is compared entrywise with the
    matrix of ``alpha`` obtained independently: apply
    ``sum_{j in A} e*_j (x) y_j`` (``y_j`` from the index-function table) to
    every ``z_k`` and read off z-coordinates.  In addition
    ``iota_Z . composite`` must equal the ambient map composed with
    ``iota_Z``.  Random ``T`` with uniform ``[-1, 1]`` entries test
    ``tr(T^T alpha) = tr(P_A iota_Z T^T Psi I)``; ``T`` is drawn on the
    rows hit by ``Psi`` and the columns hit by ``P_A iota_Z``, outside of
    which ``alpha`` is verified to vanish.
    """
    A = tuple(sorted(int(j) for j in A))
    if not A:
        raise ValueError("empty block")
    if _block_level(A) != n + 1:
        raise ValueError(f"block {A} is not inside sigma_{n + 1}")
    if n < 2:
        raise ValueError("factorization needs n >= 2")
    if n + 1 not in partitions:
        raise ValueError(f"no partitions for level {n + 1}")
    dl = partitions[n + 1].delta_labels[np.array(A) - (1 << (n + 1))]
    if len(set(dl.tolist())) != len(A):
        raise ValueError(f"block {A} meets a Delta_{n + 1} block twice; X_A is not OH_A")

    zw = levels_window(n - 1, n)
    xw = levels_window(n, n + 2)
    iota_z = iota_z_matrix(zw, xw) if iota is None else iota
    p_a = np.zeros((len(A), len(xw)), dtype=np.int64)
    p_a[np.arange(len(A)), np.array(A) - xw.start] = 1
    ident = np.eye(len(A), dtype=np.int64)
    psi = np.zeros((len(zw), len(A)), dtype=np.int64)
    for c, j in enumerate(A):
        sign, p, q = y_as_z_combination(j)
        psi[p - zw.start, c] += sign
        psi[q - zw.start, c] -= 1
    composite = psi @ (ident @ (p_a @ iota_z))

    # independent route through the coordinate expansion of y_j
    ys = {j: DyadicVector(expand_y(j)) for j in A}
    target = np.zeros((len(zw), len(zw)), dtype=np.int64)
    ambient = np.zeros((len(xw), len(zw)), dtype=np.int64)
    touched = sorted({j >> 1 for j in A} | {j >> 2 for j in A})
    for k in touched:
        zk = z_vector(k)
        image = DyadicVector()
        for j in A:
            if zk[j]:
                image = image + ys[j] * zk[j]
        for p, c in _z_coordinates(image, zw).items():
            target[p - zw.start, k - zw.start] = int(c)
        for i, c in image:
            ambient[i - xw.start, k - zw.start] = int(c)
    # small integers: float64 products are exact and use BLAS
    cols = np.array([k - zw.start for k in touched])
    ambient_ok = np.array_equal(iota_z.astype(float) @ composite[:, cols].astype(float), ambient[:, cols].astype(float))

    # both sides of the trace identity only read T on rows hit by Psi and on
    # the touched columns; entries elsewhere meet exact zeros, which is
    # checked here so the random T can be drawn on that submatrix
    rows = np.flatnonzero(psi.any(axis=1))
    outside = target.copy()
    outside[np.ix_(rows, cols)] = 0
    support_ok = not outside.any()

    rng = np.random.default_rng(seed)
    comp_f = target[np.ix_(rows, cols)].astype(float)
    left = (p_a @ iota_z)[:, cols].astype(float)
    right = (psi @ ident)[rows].astype(float)
    res = np.empty(n_random)
    for t in range(n_random):
        T = rng.uniform(-1.0, 1.0, size=(len(rows), len(cols)))
        lhs = np.sum(T * comp_f)
        rhs = np.trace(left @ T.T @ right)
        res[t] = abs(lhs - rhs) / max(1.0, abs(lhs))
    return FactorizationCertificate(A, n, zw, xw, iota_z, p_a, ident, psi, composite, target, ambient_ok, res, support_ok)


@dataclass
class ConditionIIIBound:
    n: int
    middle: float
    final: float
    m: int
    nabla_count: int
    max_card: int

    @property
    def ok(self) -> bool:
        return self.middle <= self.final


def condition_iii_bound(n: int, partitions: PartitionSet, certify: bool = True) -> ConditionIIIBound:
    """Bound on the projective norm of ``beta_n - beta_{n-1}`` from the blocks of ``Nabla_{n+1}``.

    ``middle = 2**-(n+1) * card(Nabla) * 18 * max card(A)**(3/4)`` and
    ``final = 36 / m**(1/4)``.
    """
    if n < 3:
        raise ValueError(f"condition (iii) needs n >= 3, got {n}")
    pair = partitions[n + 1]
    if certify:
        if n + 2 not in partitions:
            raise ValueError(f"certifying Nabla_{n + 1} needs partitions for level {n + 2}")
        rep = verify_partition_level(partitions[n], pair, partitions[n + 2])
        if not rep.ok:
            raise ValueError(f"uncertified partition: {rep.first_failure()}")
    sizes = pair.nabla_sizes()
    middle = 2.0 ** -(n + 1) * len(sizes) * PSI_CONSTANT * float(sizes.max()) ** 0.75
    final = 2 * PSI_CONSTANT / pair.m**0.25
    return ConditionIIIBound(n, middle, final, pair.m, len(sizes), int(sizes.max()))
