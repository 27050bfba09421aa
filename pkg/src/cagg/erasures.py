"""Erasure patterns, erasure matrices, and their classification for pyramid codes.

A pattern of weight s is split by a pyramid code into its code-erasure
pattern f (erasures per local code, then erasures in the global parities),
its type (u, v) (which locals are overwhelmed, and the 0/1 counts in the
unaffected ones) and finally its equivalence class inside the type.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from itertools import combinations
from math import comb, prod
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .codes import PyramidCode
from .exceptions import ParameterError

ENUMERATION_GUARD = 10**7


@dataclass(frozen=True)
class ErasurePattern:
    n: int
    support: frozenset[int]

    def __post_init__(self):
        if any(not 0 <= j < self.n for j in self.support):
            raise ParameterError(f"support {sorted(self.support)} out of range for length {self.n}")

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "ErasurePattern":
        return cls(len(bits), frozenset(j for j, x in enumerate(bits) if x))

    @classmethod
    def of(cls, n: int, support: Iterable[int]) -> "ErasurePattern":
        return cls(n, frozenset(support))

    @property
    def weight(self) -> int:
        return len(self.support)

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple(int(j in self.support) for j in range(self.n))

    @property
    def mask(self) -> int:
        return sum(1 << j for j in self.support)

    def sort_key(self) -> tuple[int, ...]:
        return tuple(sorted(self.support))


class ErasureMatrix:
    """n_e x n_h binary straggler table; entry 1 means the link is erased."""

    __slots__ = ("_data",)

    def __init__(self, data):
        arr = np.array(data, dtype=bool, copy=True)
        if arr.ndim != 2:
            raise ParameterError("erasure matrix must be two-dimensional")
        arr.flags.writeable = False
        self._data = arr

    @classmethod
    def from_supports(cls, n_h: int, supports: Iterable[Iterable[int]]) -> "ErasureMatrix":
        rows = []
        for sup in supports:
            row = np.zeros(n_h, dtype=bool)
            row[list(sup)] = True
            rows.append(row)
        return cls(np.array(rows, dtype=bool).reshape(len(rows), n_h))

    @property
    def array(self) -> np.ndarray:
        return self._data

    @property
    def n_e(self) -> int:
        return self._data.shape[0]

    @property
    def n_h(self) -> int:
        return self._data.shape[1]

    @property
    def weights(self) -> np.ndarray:
        return self._data.sum(axis=1)

    def row(self, i: int) -> ErasurePattern:
        return ErasurePattern(self.n_h, frozenset(np.flatnonzero(self._data[i]).tolist()))

    @property
    def rows(self) -> list[ErasurePattern]:
        return [self.row(i) for i in range(self.n_e)]

    def masks(self) -> np.ndarray:
        return self._data.astype(np.int64) @ (np.int64(1) << np.arange(self.n_h, dtype=np.int64))

    def unerased(self, i: int) -> list[int]:
        return np.flatnonzero(~self._data[i]).tolist()

    def check_weight(self, s: int, exact: bool = True) -> None:
        w = self.weights
        bad = np.flatnonzero(w != s) if exact else np.flatnonzero(w > s)
        if bad.size:
            rel = "exactly" if exact else "at most"
            raise ParameterError(
                f"row {int(bad[0])} has {int(w[bad[0]])} erasures, expected {rel} {s}"
            )

    def __eq__(self, other):
        if not isinstance(other, ErasureMatrix):
            return NotImplemented
        return np.array_equal(self._data, other._data)

    def __hash__(self):
        return hash((self._data.shape, self._data.tobytes()))

    def __repr__(self):
        return f"ErasureMatrix({self._data.astype(int).tolist()})"

    def to_json(self) -> str:
        return json.dumps({"n_h": self.n_h, "rows": self._data.astype(int).tolist()})

    @classmethod
    def from_json(cls, text: str) -> "ErasureMatrix":
        d = json.loads(text)
        return cls(np.array(d["rows"], dtype=bool).reshape(len(d["rows"]), d["n_h"]))


class PatternType(NamedTuple):
    u: tuple[int, ...]
    v: tuple[int, ...]

    def label(self) -> tuple[str, str]:
        return "".join(map(str, self.u)), ("".join(map(str, self.v)) or "-")

    @property
    def overwhelmed(self) -> tuple[int, ...]:
        return tuple(i for i, x in enumerate(self.u) if x)

    @property
    def unaffected(self) -> tuple[int, ...]:
        return tuple(i for i, x in enumerate(self.u) if not x)


ClassKey = tuple  # (u, v, sorted support restricted to A(u) or B(u))


def _support(e) -> frozenset[int]:
    return e.support if isinstance(e, ErasurePattern) else frozenset(e)


def code_erasure_pattern(code: PyramidCode, e) -> tuple[int, ...]:
    sup = _support(e)
    if isinstance(e, ErasurePattern) and e.n != code.n_h:
        raise ParameterError(f"pattern length {e.n} differs from n_h={code.n_h}")
    f = [len(sup.intersection(L)) for L in code.locals_]
    f.append(len(sup.intersection(code.global_)))
    return tuple(f)


def _type_from_f(t: int, f: Sequence[int]) -> PatternType:
    u = tuple(int(x > 1) for x in f[:t])
    v = tuple(x for x in f[:t] if x <= 1)
    return PatternType(u, v)


def type_of(code: PyramidCode, e) -> PatternType:
    return _type_from_f(code.t, code_erasure_pattern(code, e))


def overwhelmed_support(code: PyramidCode, u: Sequence[int]) -> frozenset[int]:
    """A(u): overwhelmed local supports together with Q."""
    cols = set(code.global_)
    for i, x in enumerate(u):
        if x:
            cols.update(code.locals_[i])
    return frozenset(cols)


def unaffected_support(code: PyramidCode, u: Sequence[int]) -> frozenset[int]:
    """B(u): union of the unaffected local supports."""
    cols = set()
    for i, x in enumerate(u):
        if not x:
            cols.update(code.locals_[i])
    return frozenset(cols)


def aggregation_columns(code: PyramidCode, u: Sequence[int]) -> frozenset[int]:
    return overwhelmed_support(code, u) if any(u) else unaffected_support(code, u)


def class_key(code: PyramidCode, e) -> ClassKey:
    typ = type_of(code, e)
    cols = aggregation_columns(code, typ.u)
    return (typ.u, typ.v, tuple(sorted(_support(e) & cols)))


def bunching_factor(code: PyramidCode, typ: PatternType, f: Sequence[int]) -> int:
    lam = code.sizes
    t = code.t
    if _type_from_f(t, f) != typ:
        raise ParameterError(f"code-erasure pattern {tuple(f)} is not of type {typ}")
    if any(typ.u):
        return prod(comb(lam[i], f[i]) for i in typ.unaffected)
    return comb(lam[t], f[t])


def pattern_count(code: PyramidCode, f: Sequence[int]) -> int:
    """N(f): number of weight-|f| patterns with code-erasure pattern f."""
    return prod(comb(l, x) for l, x in zip(code.sizes, f))


@dataclass(frozen=True)
class PatternClass:
    """One row group of the classification table."""

    type: PatternType
    patterns: tuple[tuple[tuple[int, ...], int], ...]  # (f, N(f)) in lexicographic f order
    size: int
    beta: int

    @property
    def mu(self) -> int:
        return self.size // self.beta


def _check_enumerable(code: PyramidCode, guard: int) -> None:
    total = comb(code.n_h, code.s)
    if total > guard:
        raise ParameterError(
            f"C({code.n_h},{code.s}) = {total} patterns exceeds the enumeration guard "
            f"{guard}; use Monte Carlo estimation instead"
        )


def all_patterns(n_h: int, s: int) -> Iterable[tuple[int, ...]]:
    return combinations(range(n_h), s)


def class_table(code: PyramidCode, guard: int = ENUMERATION_GUARD) -> list[PatternClass]:
    """Enumerate every weight-s pattern and tabulate types, N(f), |S|, beta, mu."""
    _check_enumerable(code, guard)
    by_type: dict[PatternType, dict[tuple[int, ...], int]] = {}
    classes: dict[PatternType, dict[ClassKey, int]] = {}
    for sup in all_patterns(code.n_h, code.s):
        sup = frozenset(sup)
        f = code_erasure_pattern(code, sup)
        typ = _type_from_f(code.t, f)
        fs = by_type.setdefault(typ, {})
        fs[f] = fs.get(f, 0) + 1
        key = class_key(code, sup)
        cs = classes.setdefault(typ, {})
        cs[key] = cs.get(key, 0) + 1

    table = []
    for typ in sorted(by_type):
        fs = by_type[typ]
        rows = tuple(sorted(fs.items()))
        for f, n in rows:
            if n != pattern_count(code, f):
                raise AssertionError(f"N{f} enumerated {n}, product formula {pattern_count(code, f)}")
        size = sum(fs.values())
        betas = {bunching_factor(code, typ, f) for f in fs}
        if len(betas) != 1:
            raise AssertionError(f"type {typ} has non-constant bunching factor {betas}")
        beta = betas.pop()
        sizes = set(classes[typ].values())
        if sizes != {beta} or size % beta:
            raise AssertionError(f"type {typ}: class sizes {sizes} disagree with beta={beta}")
        table.append(PatternClass(typ, rows, size, beta))
    return table


def all_types(t: int) -> list[PatternType]:
    out = []
    for u in np.ndindex(*(2,) * t):
        tau = t - sum(u)
        for v in np.ndindex(*(2,) * tau):
            out.append(PatternType(tuple(int(x) for x in u), tuple(int(x) for x in v)))
    return sorted(out)


def count_classes(code: PyramidCode, typ: PatternType, table: list[PatternClass] | None = None) -> int:
    table = class_table(code) if table is None else table
    for pc in table:
        if pc.type == typ:
            return pc.mu
    return 0


CSV_HEADER = ("type_u", "type_v", "f", "N_f", "S_size", "beta", "mu")


def _f_label(f) -> str:
    return "(" + ",".join(map(str, f)) + ")"


def class_table_rows(table: list[PatternClass]) -> list[tuple]:
    rows = []
    for pc in table:
        u, v = pc.type.label()
        for f, n in pc.patterns:
            rows.append((u, v, _f_label(f), n, pc.size, pc.beta, pc.mu))
    return rows


def class_table_csv(table: list[PatternClass]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerows(class_table_rows(table))
    return buf.getvalue()


def class_table_json(table: list[PatternClass]) -> str:
    return json.dumps([dict(zip(CSV_HEADER, r)) for r in class_table_rows(table)])


class ClassIndex:
    """Lookup from pattern bitmask to (type, class) for fast per-matrix work.

    Classes are numbered in sorted key order, so the lowest class id within
    a type is its lexicographically smallest key.
    """

    def __init__(self, code: PyramidCode, guard: int = ENUMERATION_GUARD):
        _check_enumerable(code, guard)
        self.code = code
        keys = {}
        for sup in all_patterns(code.n_h, code.s):
            mask = sum(1 << j for j in sup)
            keys[mask] = class_key(code, frozenset(sup))
        ordered = sorted(set(keys.values()))
        cid = {k: i for i, k in enumerate(ordered)}
        self.keys: list[ClassKey] = ordered
        self.types: list[PatternType] = sorted({PatternType(k[0], k[1]) for k in ordered})
        tid = {typ: i for i, typ in enumerate(self.types)}
        self.class_type = np.array([tid[PatternType(k[0], k[1])] for k in ordered], dtype=np.int64)
        if code.n_h <= 20:
            lut = np.full(1 << code.n_h, -1, dtype=np.int64)
            for mask, key in keys.items():
                lut[mask] = cid[key]
            self._lut = lut
            self._map = None
        else:
            self._lut = None
            self._map = {mask: cid[key] for mask, key in keys.items()}
        dims = code.local_dims
        self.unaffected_dim = np.array(
            [sum(dims[i] for i in typ.unaffected) for typ in self.types], dtype=np.int64
        )
        self.overwhelmed_dim = code.k - self.unaffected_dim
        self.is_u0 = np.array([not any(typ.u) for typ in self.types])

    @property
    def n_classes(self) -> int:
        return len(self.keys)

    def classes_of(self, masks: np.ndarray) -> np.ndarray:
        if self._lut is not None:
            out = self._lut[masks]
        else:
            out = np.array([self._map.get(int(m), -1) for m in masks], dtype=np.int64)
        if np.any(out < 0):
            raise ParameterError("erasure matrix has a row whose weight differs from s")
        return out

    def max_per_type(self, class_ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(M per type, argmax class id per type; -1 when the type is absent)."""
        counts = np.bincount(class_ids, minlength=self.n_classes)
        M = np.zeros(len(self.types), dtype=np.int64)
        np.maximum.at(M, self.class_type, counts)
        best = np.full(len(self.types), -1, dtype=np.int64)
        # first (= smallest key) class achieving the max in each type
        for c in np.flatnonzero(counts):
            ty = self.class_type[c]
            if counts[c] == M[ty] and best[ty] < 0:
                best[ty] = c
        return M, best
