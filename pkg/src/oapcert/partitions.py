"""Per-level partition pairs (Delta_n, Nabla_n) of sigma_n and their certification.

A partition of ``sigma_n`` is stored as an integer label array of length
``2**n``: position ``r`` holds the block number of index ``2**n + r``.
Labels are canonical (blocks numbered in order of their smallest member),
so two partitions are equal iff their label arrays are equal.

The three certified properties for a level ``n``:

1. every Nabla block ``A`` has ``m <= card(A) <= 2m``;
2. every Nabla block meets every Delta_n block in at most one point;
3. for every Nabla block ``A`` and ``k = 1..9`` the image ``f_k(A)`` lies
   inside a single block of Delta_{n-1} (k = 1, 2), Delta_n (k = 3, 4, 5)
   or Delta_{n+1} (k = 6..9).

Strategies
----------
``singleton``
    All blocks are singletons, ``m = 1``.
``greedy``
    Bit-coset construction.  Write ``j = 2**n + r`` and read the low two bits
    of ``r`` as the offset ``l``.  The even bit positions ``4, 6, ...,``
    below ``n`` are dealt round-robin (lowest position first) to the four
    offsets; a Nabla block is a coset of the positions owned by its
    offset.  Delta_n is then the coarsest coset partition compatible with
    property 2, built from the positions owned by the *other* offsets plus
    the odd positions that the images of the neighbouring levels' Nabla
    blocks occupy.  Since even positions shift to odd ones under every
    level-changing index function, property 3 holds without conflicts and
    ``m_n = 2**floor(#positions / 4)``, roughly ``2**(n/8 - 1/2)``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .indexing import K_RANGE, f_array, target_level_shift

__all__ = [
    "STRATEGIES",
    "GenerationError",
    "PartitionPair",
    "PartitionSet",
    "PartitionLevelReport",
    "verify_partition_level",
    "verify_partition_set",
    "generate_partitions",
    "m_lower_bound",
    "required_m",
    "canonical_labels",
]

STRATEGIES = ("singleton", "greedy")
FILE_FORMAT = "oapcert-partitions"
FILE_VERSION = 1


class GenerationError(RuntimeError):
    """A strategy could not produce a certified pair at some level."""

    def __init__(self, n: int, reason: str):
        super().__init__(f"level {n}: {reason}")
        self.level = n


def m_lower_bound(n: int) -> float:
    """Asymptotic floor ``2**(n/8 - 2)`` for the Nabla block size."""
    return 2.0 ** (n / 8 - 2)


def required_m(n: int) -> int:
    """Smallest admissible integer block parameter at level ``n``."""
    return max(1, math.ceil(m_lower_bound(n)))


def canonical_labels(labels: np.ndarray) -> np.ndarray:
    """Renumber block labels in order of first appearance."""
    labels = np.asarray(labels)
    _, first, inv = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    return rank[inv.ravel()]


def _labels_from_blocks(n: int, blocks) -> np.ndarray:
    base, size = 1 << n, 1 << n
    lab = np.full(size, -1, dtype=np.int64)
    for b, block in enumerate(blocks):
        if len(block) == 0:
            raise ValueError(f"level {n}: empty block")
        for j in block:
            if isinstance(j, bool) or not isinstance(j, (int, np.integer)):
                raise ValueError(f"level {n}: non-integer index {j!r}")
            r = int(j) - base
            if not 0 <= r < size:
                raise ValueError(f"level {n}: index {j} outside sigma_{n}")
            if lab[r] >= 0:
                raise ValueError(f"level {n}: index {j} appears in two blocks")
            lab[r] = b
    if (lab < 0).any():
        missing = int(np.flatnonzero(lab < 0)[0]) + base
        raise ValueError(f"level {n}: index {missing} not covered")
    return canonical_labels(lab)


def _blocks_from_labels(n: int, labels: np.ndarray) -> list[list[int]]:
    order = np.argsort(labels, kind="stable")
    cuts = np.flatnonzero(np.diff(labels[order])) + 1
    return [(part + (1 << n)).tolist() for part in np.split(order, cuts)]


@dataclass(eq=False)
class PartitionPair:
    """Delta_n and Nabla_n for one level, with the recorded parameter ``m``."""

    n: int
    delta_labels: np.ndarray
    nabla_labels: np.ndarray
    m: int

    def __post_init__(self):
        size = 1 << self.n
        for name in ("delta_labels", "nabla_labels"):
            lab = np.asarray(getattr(self, name), dtype=np.int64)
            if lab.shape != (size,):
                raise ValueError(f"level {self.n}: {name} must have length {size}")
            setattr(self, name, canonical_labels(lab))
        if int(self.m) < 1:
            raise ValueError(f"level {self.n}: m must be positive")
        self.m = int(self.m)

    @classmethod
    def from_blocks(cls, n: int, delta, nabla, m: int) -> PartitionPair:
        return cls(n, _labels_from_blocks(n, delta), _labels_from_blocks(n, nabla), m)

    @property
    def delta(self) -> list[list[int]]:
        return _blocks_from_labels(self.n, self.delta_labels)

    @property
    def nabla(self) -> list[list[int]]:
        return _blocks_from_labels(self.n, self.nabla_labels)

    @property
    def delta_count(self) -> int:
        return int(self.delta_labels.max()) + 1

    @property
    def nabla_count(self) -> int:
        return int(self.nabla_labels.max()) + 1

    def nabla_sizes(self) -> np.ndarray:
        return np.bincount(self.nabla_labels)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PartitionPair):
            return NotImplemented
        return (
            self.n == other.n
            and self.m == other.m
            and np.array_equal(self.delta_labels, other.delta_labels)
            and np.array_equal(self.nabla_labels, other.nabla_labels)
        )

    def to_dict(self) -> dict:
        return {"n": self.n, "m": self.m, "delta": self.delta, "nabla": self.nabla}


@dataclass
class PartitionSet:
    """Partition pairs for a run of consecutive levels (normally ``1..n_max``).

    ``pairs`` maps level to pair; a plain sequence of pairs is also accepted.
    """

    pairs: dict[int, PartitionPair]
    strategy: str = "custom"
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.pairs, dict):
            self.pairs = {p.n: p for p in self.pairs}
        if any(k != p.n for k, p in self.pairs.items()):
            raise ValueError("partition pairs stored under the wrong level")
        levels = sorted(self.pairs)
        if levels and levels != list(range(levels[0], levels[-1] + 1)):
            raise ValueError(f"partition levels must be consecutive, got {levels}")

    @property
    def n_max(self) -> int:
        return max(self.pairs, default=0)

    @property
    def n_min(self) -> int:
        return min(self.pairs, default=0)

    def __getitem__(self, n: int) -> PartitionPair:
        try:
            return self.pairs[n]
        except KeyError:
            raise KeyError(f"no partitions stored for level {n}") from None

    def __contains__(self, n: int) -> bool:
        return n in self.pairs

    def __eq__(self, other) -> bool:
        if not isinstance(other, PartitionSet):
            return NotImplemented
        return self.pairs.keys() == other.pairs.keys() and all(self.pairs[n] == other.pairs[n] for n in self.pairs)

    def to_dict(self) -> dict:
        return {
            "format": FILE_FORMAT,
            "version": FILE_VERSION,
            "strategy": self.strategy,
            "seed": self.seed,
            "levels": [self.pairs[n].to_dict() for n in sorted(self.pairs)],
        }

    def dumps(self) -> str:
        head = {"format": FILE_FORMAT, "version": FILE_VERSION, "strategy": self.strategy, "seed": self.seed}
        # one level per line keeps large files diffable
        body = ",\n".join(json.dumps(self.pairs[n].to_dict(), separators=(",", ":")) for n in sorted(self.pairs))
        return json.dumps(head, separators=(",", ":"))[:-1] + ',"levels":[\n' + body + "\n]}\n"

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def loads(cls, text: str) -> PartitionSet:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"partition file is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict) or doc.get("format") != FILE_FORMAT:
            raise ValueError("not a partition file")
        pairs = {}
        for entry in doc.get("levels", []):
            try:
                n, m = entry["n"], entry["m"]
                pairs[n] = PartitionPair.from_blocks(n, entry["delta"], entry["nabla"], m)
            except (KeyError, TypeError) as exc:
                raise ValueError(f"malformed level entry: {exc}") from exc
        return cls(pairs, strategy=str(doc.get("strategy", "custom")), seed=int(doc.get("seed", 0)))

    @classmethod
    def load(cls, path) -> PartitionSet:
        return cls.loads(Path(path).read_text())


@dataclass
class PartitionLevelReport:
    n: int
    size_ok: bool = True
    transversal_ok: bool = True
    images_ok: bool = True
    witnesses: dict[str, dict] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.size_ok and self.transversal_ok and self.images_ok

    def first_failure(self) -> str | None:
        for key, flag in (("1", self.size_ok), ("2", self.transversal_ok), ("3", self.images_ok)):
            if not flag:
                return f"level {self.n} property ({key}): {self.witnesses[key]}"
        return None


def _first_bad_block(nabla: np.ndarray, values: np.ndarray) -> int | None:
    """Smallest Nabla label whose members do not share one ``values`` entry."""
    order = np.argsort(nabla, kind="stable")
    lab, val = nabla[order], values[order]
    starts = np.flatnonzero(np.r_[True, lab[1:] != lab[:-1]])
    lo = np.minimum.reduceat(val, starts)
    hi = np.maximum.reduceat(val, starts)
    bad = np.flatnonzero(lo != hi)
    return int(lab[starts[bad[0]]]) if bad.size else None


def verify_partition_level(prev: PartitionPair | None, cur: PartitionPair, nxt: PartitionPair | None) -> PartitionLevelReport:
    """Check properties (1)-(3) for ``cur`` against its neighbouring levels.

    ``prev`` may be ``None`` only at level 1, where the index functions are
    not defined.  ``nxt`` is always required.
    """
    n = cur.n
    if n >= 2 and (prev is None or prev.n != n - 1):
        raise ValueError(f"level {n}: partitions for level {n - 1} are required")
    if nxt is None or nxt.n != n + 1:
        raise ValueError(f"level {n}: partitions for level {n + 1} are required")
    rep = PartitionLevelReport(n)
    nabla = cur.nabla_labels

    def block(label: int) -> list[int]:
        return (np.flatnonzero(nabla == label) + (1 << n)).tolist()

    sizes = np.bincount(nabla)
    bad = np.flatnonzero((sizes < cur.m) | (sizes > 2 * cur.m))
    if bad.size:
        rep.size_ok = False
        rep.witnesses["1"] = {"block": block(int(bad[0])), "size": int(sizes[bad[0]]), "m": cur.m}

    key = nabla * (cur.delta_count + 1) + cur.delta_labels
    uniq, counts = np.unique(key, return_counts=True)
    if (counts > 1).any():
        rep.transversal_ok = False
        k0 = uniq[np.flatnonzero(counts > 1)[0]]
        lab = int(k0 // (cur.delta_count + 1))
        hits = (np.flatnonzero(key == k0) + (1 << n)).tolist()
        rep.witnesses["2"] = {"block": block(lab), "shared_delta_members": hits}

    if n >= 2:
        js = np.arange(1 << n, 1 << (n + 1), dtype=np.int64)
        by_level = {n - 1: prev, n: cur, n + 1: nxt}
        for k in K_RANGE:
            t = n + target_level_shift(k)
            img = f_array(k, js)
            dl = by_level[t].delta_labels[img - (1 << t)]
            lab = _first_bad_block(nabla, dl)
            if lab is not None:
                rep.images_ok = False
                A = block(lab)
                rep.witnesses["3"] = {"block": A, "k": k, "image": sorted({int(x) for x in f_array(k, np.array(A))}), "delta_level": t}
                break
    return rep


def verify_partition_set(pset: PartitionSet, levels=None) -> dict[int, PartitionLevelReport]:
    """Verify every level that has both neighbours stored (or the given ``levels``)."""
    if levels is None:
        levels = [n for n in sorted(pset.pairs) if n + 1 in pset]
    return {n: verify_partition_level(pset.pairs.get(n - 1), pset[n], pset.pairs.get(n + 1)) for n in levels}


def _greedy_positions(n: int, seed: int) -> list[list[int]]:
    """Bit positions owned by each offset at level ``n``."""
    positions = list(range(4, n, 2))
    order = np.random.default_rng([seed, n]).permutation(4)
    owned: list[list[int]] = [[] for _ in range(4)]
    for t, p in enumerate(positions):
        owned[int(order[t % 4])].append(p)
    return owned


def _mask(bits) -> int:
    return sum(1 << p for p in bits)


def _coset_labels(n: int, free_masks: list[int]) -> np.ndarray:
    r = np.arange(1 << n, dtype=np.int64)
    masks = np.array(free_masks, dtype=np.int64)
    return canonical_labels(r & ~masks[r & 3])


def _greedy_level(n: int, seed: int) -> PartitionPair:
    owned = _greedy_positions(n, seed)
    nabla = _coset_labels(n, [_mask(g) for g in owned])
    used_above = [p - 1 for g in _greedy_positions(n + 1, seed) for p in g]
    used_below = [p + 1 for g in _greedy_positions(n - 1, seed) for p in g] if n > 1 else []
    shared = set(used_above) | set(used_below)
    delta_masks = [_mask(shared.union(*(owned[l] for l in range(4) if l != c))) for c in range(4)]
    delta = _coset_labels(n, delta_masks)
    m = int(np.bincount(nabla).min())
    return PartitionPair(n, delta, nabla, m)


def _singleton_level(n: int) -> PartitionPair:
    ids = np.arange(1 << n, dtype=np.int64)
    return PartitionPair(n, ids, ids.copy(), 1)


def generate_partitions(n_max: int, strategy: str = "greedy", seed: int = 0) -> PartitionSet:
    """Certified partition pairs for levels ``1..n_max``.

    Level ``n_max`` is certified against an extra level ``n_max + 1`` that
    is generated internally and then dropped, so the output for a smaller
    ``n_max`` is always a prefix of the output for a larger one.

    Raises
    ------
    GenerationError
        If some level fails certification or its ``m`` is below
        ``required_m(n)``.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    build = (lambda n: _singleton_level(n)) if strategy == "singleton" else (lambda n: _greedy_level(n, seed))
    pairs = {n: build(n) for n in range(1, n_max + 2)}
    for n in range(1, n_max + 1):
        rep = verify_partition_level(pairs.get(n - 1), pairs[n], pairs[n + 1])
        if not rep.ok:
            raise GenerationError(n, rep.first_failure())
        if pairs[n].m < required_m(n):
            raise GenerationError(n, f"m = {pairs[n].m} below the required {required_m(n)}")
    del pairs[n_max + 1]
    return PartitionSet(pairs, strategy=strategy, seed=seed)
