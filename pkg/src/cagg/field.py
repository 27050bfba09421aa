"""Arithmetic over GF(2^w) and dense matrix algebra on top of it.

Elements are plain ints in ``range(q)``. Multiplication is table driven
(exp/log over a primitive element), which is why the reduction polynomial
must be primitive rather than merely irreducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from typing import Sequence

import numba
import numpy as np

from .exceptions import FieldDomainError, ParameterError

# Primitive polynomials (bitmask, including the x^w term) for w = 1..16.
PRIMITIVE_POLYS = {
    1: 0x3,
    2: 0x7,
    3: 0xB,
    4: 0x13,
    5: 0x25,
    6: 0x43,
    7: 0x89,
    8: 0x11D,  # x^8 + x^4 + x^3 + x^2 + 1
    9: 0x211,
    10: 0x409,
    11: 0x805,
    12: 0x1053,
    13: 0x201B,
    14: 0x4443,
    15: 0x8003,
    16: 0x1100B,
}

DEFAULT_WIDTH = 8


def _build_tables(w: int, poly: int) -> tuple[np.ndarray, np.ndarray]:
    q = 1 << w
    order = q - 1
    exp = np.zeros(2 * order + 1, dtype=np.int64)
    log = np.full(q, -1, dtype=np.int64)
    x = 1
    for i in range(order):
        if log[x] != -1:
            raise ParameterError(
                f"polynomial {poly:#x} is not primitive for GF(2^{w})"
            )
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & q:
            x ^= poly
    if x != 1:
        raise ParameterError(f"polynomial {poly:#x} is not primitive for GF(2^{w})")
    exp[order : 2 * order] = exp[:order]
    exp[2 * order] = exp[0]
    return exp, log


@dataclass(frozen=True)
class FieldSpec:
    """GF(2^width) defined by a primitive polynomial.

    Construction walks the powers of x through all q-1 nonzero elements,
    which certifies the polynomial is primitive (hence irreducible).
    """

    width: int = DEFAULT_WIDTH
    poly: int | None = None
    exp: np.ndarray = dc_field(init=False, repr=False, compare=False)
    log: np.ndarray = dc_field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 1 <= self.width <= 16:
            raise ParameterError(f"field width must be in 1..16, got {self.width}")
        poly = PRIMITIVE_POLYS[self.width] if self.poly is None else self.poly
        if poly >> self.width != 1:
            raise ParameterError(f"polynomial {poly:#x} does not have degree {self.width}")
        exp, log = _build_tables(self.width, poly)
        exp.flags.writeable = False
        log.flags.writeable = False
        object.__setattr__(self, "poly", poly)
        object.__setattr__(self, "exp", exp)
        object.__setattr__(self, "log", log)

    @property
    def q(self) -> int:
        return 1 << self.width

    @property
    def order(self) -> int:
        """Size of the multiplicative group."""
        return self.q - 1

    def _check(self, a: int) -> None:
        if not 0 <= a < self.q:
            raise ParameterError(f"{a} is not an element of GF({self.q})")

    def add(self, a: int, b: int) -> int:
        self._check(a)
        self._check(b)
        return a ^ b

    sub = add

    def mul(self, a: int, b: int) -> int:
        self._check(a)
        self._check(b)
        if a == 0 or b == 0:
            return 0
        return int(self.exp[self.log[a] + self.log[b]])

    def inv(self, a: int) -> int:
        self._check(a)
        if a == 0:
            raise FieldDomainError("zero has no multiplicative inverse")
        return int(self.exp[(self.order - self.log[a]) % self.order])

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def power_order(self) -> list[int]:
        """All q elements: 1, x, x^2, ..., x^(q-2), then 0."""
        return [int(v) for v in self.exp[: self.order]] + [0]


@lru_cache(maxsize=None)
def gf(width: int = DEFAULT_WIDTH, poly: int | None = None) -> FieldSpec:
    """Shared FieldSpec instance (tables are built once per field)."""
    return FieldSpec(width, poly)


def min_width(n_elements: int) -> int:
    """Smallest w with 2^w >= n_elements."""
    return max(1, (n_elements - 1).bit_length())


def field_arith(spec: FieldSpec, a: int, b: int, op: str) -> int:
    """Dispatch one of add/mul/inv/div. ``b`` is ignored for inv."""
    if op == "add":
        return spec.add(a, b)
    if op == "mul":
        return spec.mul(a, b)
    if op == "inv":
        return spec.inv(a)
    if op == "div":
        return spec.div(a, b)
    raise ParameterError(f"unknown field operation {op!r}")


class FieldMatrix:
    """Immutable dense matrix over a FieldSpec."""

    __slots__ = ("spec", "_data")

    def __init__(self, spec: FieldSpec, data):
        arr = np.array(data, dtype=np.int64, copy=True)
        if arr.ndim == 1 and arr.size == 0:
            arr = arr.reshape(0, 0)
        if arr.ndim != 2:
            raise ParameterError("FieldMatrix data must be two-dimensional")
        if arr.size and (arr.min() < 0 or arr.max() >= spec.q):
            raise ParameterError(f"entries out of range for GF({spec.q})")
        arr.flags.writeable = False
        self.spec = spec
        self._data = arr

    @classmethod
    def identity(cls, spec: FieldSpec, n: int) -> "FieldMatrix":
        return cls(spec, np.eye(n, dtype=np.int64))

    @classmethod
    def zeros(cls, spec: FieldSpec, rows: int, cols: int) -> "FieldMatrix":
        return cls(spec, np.zeros((rows, cols), dtype=np.int64))

    @property
    def rows(self) -> int:
        return self._data.shape[0]

    @property
    def cols(self) -> int:
        return self._data.shape[1]

    @property
    def entries(self) -> tuple[int, ...]:
        return tuple(int(v) for v in self._data.ravel())

    @property
    def array(self) -> np.ndarray:
        """Read-only view of the entries."""
        return self._data

    def __getitem__(self, idx):
        out = self._data[idx]
        return int(out) if np.ndim(out) == 0 else out

    def __eq__(self, other):
        if not isinstance(other, FieldMatrix):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(self._data, other._data)

    def __hash__(self):
        return hash((self.spec, self._data.shape, self._data.tobytes()))

    def __repr__(self):
        return f"FieldMatrix(GF({self.spec.q}), {self._data.tolist()})"

    def columns(self, idx: Sequence[int]) -> "FieldMatrix":
        return FieldMatrix(self.spec, self._data[:, list(idx)].reshape(self.rows, len(idx)))

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "FieldMatrix":
        sub = self._data[np.ix_(list(rows), list(cols))]
        return FieldMatrix(self.spec, sub)

    def hstack(self, other: "FieldMatrix") -> "FieldMatrix":
        return FieldMatrix(self.spec, np.hstack([self._data, other._data]))

    def tolist(self) -> list[list[int]]:
        return self._data.tolist()


def cauchy_matrix(spec: FieldSpec, k: int, s: int) -> FieldMatrix:
    """k x s Cauchy matrix with entries 1/(x_i + y_j).

    The points are consecutive elements of ``spec.power_order()``: x takes
    the first k, y the next s.
    """
    if k < 1 or s < 1:
        raise ParameterError(f"Cauchy matrix needs k >= 1 and s >= 1, got k={k}, s={s}")
    if k + s > spec.q:
        raise ParameterError(
            f"k + s = {k + s} distinct points do not fit in GF({spec.q}); "
            f"use a field of width >= {min_width(k + s)}"
        )
    pts = spec.power_order()
    xs, ys = pts[:k], pts[k : k + s]
    return FieldMatrix(spec, [[spec.inv(x ^ y) for y in ys] for x in xs])


@numba.njit(cache=True)
def _row_reduce(a, npiv, exp, log, order):
    """In-place reduced row echelon form over the first ``npiv`` columns.

    Returns (rank, pivot columns). Columns past ``npiv`` are carried along
    (augmented right-hand sides).
    """
    rows, cols = a.shape
    pivots = np.empty(min(rows, npiv), np.int64)
    rank = 0
    for c in range(npiv):
        if rank == rows:
            break
        p = -1
        for r in range(rank, rows):
            if a[r, c] != 0:
                p = r
                break
        if p < 0:
            continue
        if p != rank:
            for cc in range(cols):
                tmp = a[p, cc]
                a[p, cc] = a[rank, cc]
                a[rank, cc] = tmp
        linv = (order - log[a[rank, c]]) % order
        for cc in range(c, cols):
            v = a[rank, cc]
            if v != 0:
                a[rank, cc] = exp[log[v] + linv]
        for r in range(rows):
            f = a[r, c]
            if r != rank and f != 0:
                lf = log[f]
                for cc in range(c, cols):
                    v = a[rank, cc]
                    if v != 0:
                        a[r, cc] ^= exp[lf + log[v]]
        pivots[rank] = c
        rank += 1
    return rank, pivots[:rank]


def _reduce(spec: FieldSpec, a: np.ndarray, npiv: int | None = None):
    if npiv is None:
        npiv = a.shape[1]
    if a.shape[0] == 0 or npiv == 0:
        return 0, np.empty(0, dtype=np.int64)
    return _row_reduce(a, npiv, spec.exp, spec.log, spec.order)


def rank(M: FieldMatrix) -> int:
    work = np.array(M.array, dtype=np.int64)
    return int(_reduce(M.spec, work)[0])


def rank_and_solve(M: FieldMatrix, targets: FieldMatrix | None = None):
    """Rank of M and, optionally, row-span membership of each target row.

    Returns ``(rank, solutions)``. ``solutions`` is None without targets,
    otherwise a list with one entry per target row: a coefficient list x
    with x @ M == target, or None when the target is outside the row span.
    """
    if targets is None:
        return rank(M), None
    if targets.spec != M.spec:
        raise ParameterError("matrix and targets live in different fields")
    if targets.cols != M.cols:
        raise ParameterError(
            f"targets have {targets.cols} columns, matrix has {M.cols}"
        )
    # x M = t  <=>  M^T x^T = t^T: reduce [M^T | T^T] over the first M.rows columns.
    aug = np.hstack([M.array.T, targets.array.T]).astype(np.int64)
    r, piv = _reduce(M.spec, aug, M.rows)
    sols = []
    for j in range(targets.rows):
        rhs = aug[:, M.rows + j]
        if np.any(rhs[r:]):
            sols.append(None)
            continue
        x = [0] * M.rows
        for row, col in enumerate(piv):
            x[int(col)] = int(rhs[row])
        sols.append(x)
    return int(r), sols


def in_row_span(spec: FieldSpec, basis: np.ndarray, targets: np.ndarray) -> bool:
    """True iff every row of ``targets`` lies in the row span of ``basis``."""
    if targets.shape[0] == 0:
        return True
    aug = np.hstack([basis.T, targets.T]).astype(np.int64)
    r, _ = _reduce(spec, aug, basis.shape[0])
    return not np.any(aug[r:, basis.shape[0] :])


def matmul(A: FieldMatrix, B: FieldMatrix) -> FieldMatrix:
    if A.cols != B.rows:
        raise ParameterError(f"cannot multiply {A.rows}x{A.cols} by {B.rows}x{B.cols}")
    spec = A.spec
    out = np.zeros((A.rows, B.cols), dtype=np.int64)
    a, b = A.array, B.array
    for i in range(A.rows):
        for t in range(A.cols):
            x = int(a[i, t])
            if x == 0:
                continue
            lx = spec.log[x]
            row = b[t]
            nz = row != 0
            out[i, nz] ^= spec.exp[lx + spec.log[row[nz]]]
    return FieldMatrix(spec, out)


class IncrementalBasis:
    """Echelon basis that grows one vector at a time.

    ``try_add`` reports whether a vector was independent of everything
    added so far; it is the workhorse of greedy information-set selection.
    """

    def __init__(self, spec: FieldSpec, dim: int):
        self.spec = spec
        self.dim = dim
        self._rows: list[list[int]] = []
        self._lead: list[int] = []

    def __len__(self):
        return len(self._rows)

    @property
    def full(self) -> bool:
        return len(self._rows) == self.dim

    def _reduced(self, vec) -> list[int]:
        exp, log = self.spec.exp, self.spec.log
        v = [int(x) for x in vec]
        for row, lead in zip(self._rows, self._lead):
            f = v[lead]
            if f:
                lf = log[f]
                for c in range(lead, self.dim):
                    x = row[c]
                    if x:
                        v[c] ^= int(exp[lf + log[x]])
        return v

    def try_add(self, vec) -> bool:
        v = self._reduced(vec)
        lead = next((c for c, x in enumerate(v) if x), None)
        if lead is None:
            return False
        spec = self.spec
        linv = (spec.order - spec.log[v[lead]]) % spec.order
        v = [int(spec.exp[spec.log[x] + linv]) if x else 0 for x in v]
        self._rows.append(v)
        self._lead.append(lead)
        return True
