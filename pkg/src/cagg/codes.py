"""Client codes: systematic MDS, pyramid (t local parities), and repetition.

Coordinates are 0-based throughout: column j is the symbol sent to helper j.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .exceptions import ParameterError
from .field import FieldMatrix, FieldSpec, cauchy_matrix, gf, min_width, rank


@dataclass(frozen=True)
class MdsCode:
    n: int
    k: int
    generator: FieldMatrix

    @property
    def spec(self) -> FieldSpec:
        return self.generator.spec

    @property
    def s(self) -> int:
        return self.n - self.k


@dataclass(frozen=True)
class PyramidCode:
    """Pyramid code over n_h coordinates with t single-parity local codes.

    ``locals_`` holds the supports L_1..L_t, ``global_`` the support Q of the
    s-1 global parities. Both are sorted tuples of 0-based column indices.
    """

    n_h: int
    s: int
    t: int
    k: int
    a: int
    b: int
    locals_: tuple[tuple[int, ...], ...]
    global_: tuple[int, ...]
    generator: FieldMatrix

    @property
    def spec(self) -> FieldSpec:
        return self.generator.spec

    @property
    def n(self) -> int:
        return self.n_h

    @property
    def sizes(self) -> tuple[int, ...]:
        """(lambda_1, ..., lambda_t, lambda_{t+1}) with the last entry |Q|."""
        return tuple(len(L) for L in self.locals_) + (len(self.global_),)

    @property
    def local_dims(self) -> tuple[int, ...]:
        return tuple(len(L) - 1 for L in self.locals_)

    def local_info(self, i: int) -> tuple[int, ...]:
        """Systematic (information) coordinates inside L_i."""
        return tuple(j for j in self.locals_[i] if j < self.k)

    @property
    def locality_profile(self) -> tuple[int, ...]:
        """kappa_1..kappa_r: number of information symbols with locality j."""
        r = max(self.local_dims)
        kappa = [0] * r
        for i, d in enumerate(self.local_dims):
            kappa[d - 1] += len(self.local_info(i))
        return tuple(kappa)


@dataclass(frozen=True)
class RepetitionCode:
    """The ARC client code [I_k ... I_k] with s+1 copies."""

    n_h: int
    s: int
    k: int
    generator: FieldMatrix

    @property
    def spec(self) -> FieldSpec:
        return self.generator.spec

    @property
    def n(self) -> int:
        return self.n_h

    def component(self, j: int) -> int:
        """Message coordinate stored at column j."""
        return j % self.k

    def holders(self, r: int) -> tuple[int, ...]:
        return tuple(range(r, self.n_h, self.k))


Code = Union[MdsCode, PyramidCode, RepetitionCode]


def _default_spec(spec: FieldSpec | None) -> FieldSpec:
    return gf() if spec is None else spec


def build_mds(spec: FieldSpec | None, k: int, s: int) -> MdsCode:
    """Systematic [k+s, k] MDS code with generator [I_k | Cauchy(k, s)]."""
    spec = _default_spec(spec)
    if k < 1 or s < 1:
        raise ParameterError(f"MDS code needs k >= 1 and s >= 1, got k={k}, s={s}")
    P = cauchy_matrix(spec, k, s)
    G = FieldMatrix(spec, np.hstack([np.eye(k, dtype=np.int64), P.array]))
    return MdsCode(n=k + s, k=k, generator=G)


def max_locals(n_h: int, s: int) -> int:
    return (n_h - s + 1) // 3


def build_pyramid(spec: FieldSpec | None, n_h: int, s: int, t: int) -> PyramidCode:
    """Split the first parity of a [k_t+s, k_t] MDS code into t local parities."""
    spec = _default_spec(spec)
    if s < 1 or s >= n_h:
        raise ParameterError(f"need 1 <= s <= n_h - 1, got s={s}, n_h={n_h}")
    tmax = max_locals(n_h, s)
    if not 2 <= t <= tmax:
        raise ParameterError(
            f"t={t} outside the admissible interval [2, {tmax}] for n_h={n_h}, s={s}"
        )
    k = n_h - s - t + 1
    a, b = divmod(k, t)
    # a >= 2 is implied by t <= floor((n_h - s + 1) / 3)
    assert a >= 2
    if k + s > spec.q:
        raise ParameterError(
            f"underlying [{k + s}, {k}] MDS code needs GF(2^{min_width(k + s)}) or larger"
        )
    mds = build_mds(spec, k, s)
    p = mds.generator.array[:, k:]
    G = np.zeros((k, n_h), dtype=np.int64)
    G[:, :k] = np.eye(k, dtype=np.int64)
    locals_ = []
    start = 0
    for i in range(t):
        size = a + 1 if i < b else a
        rows = range(start, start + size)
        G[list(rows), k + i] = p[list(rows), 0]
        locals_.append(tuple(rows) + (k + i,))
        start += size
    G[:, k + t :] = p[:, 1:]
    global_ = tuple(range(k + t, n_h))
    return PyramidCode(
        n_h=n_h,
        s=s,
        t=t,
        k=k,
        a=a,
        b=b,
        locals_=tuple(locals_),
        global_=global_,
        generator=FieldMatrix(spec, G),
    )


def build_arc(n_h: int, s: int, spec: FieldSpec | None = None) -> RepetitionCode:
    spec = _default_spec(spec)
    if s < 0 or (n_h % (s + 1)) != 0:
        raise ParameterError(f"ARC needs (s+1) | n_h, got n_h={n_h}, s={s}")
    k = n_h // (s + 1)
    G = np.hstack([np.eye(k, dtype=np.int64)] * (s + 1))
    return RepetitionCode(n_h=n_h, s=s, k=k, generator=FieldMatrix(spec, G))


def encode(generator: FieldMatrix, message: Sequence[int]) -> list[int]:
    """Codeword message @ generator over the generator's field."""
    if len(message) != generator.rows:
        raise ParameterError(
            f"message has length {len(message)}, generator has {generator.rows} rows"
        )
    spec = generator.spec
    out = np.zeros(generator.cols, dtype=np.int64)
    for x, row in zip(message, generator.array):
        if x:
            lx = spec.log[int(x)]
            nz = row != 0
            out[nz] ^= spec.exp[lx + spec.log[row[nz]]]
    return [int(v) for v in out]


def erasure_decodable(code: Code, erased: Iterable[int]) -> bool:
    erased = set(erased)
    if not erased <= set(range(code.n)):
        raise ParameterError("erased positions out of range")
    keep = [j for j in range(code.n) if j not in erased]
    if len(keep) < code.generator.rows:
        return False
    return rank(code.generator.columns(keep)) == code.generator.rows


def local_parity_relations(code: PyramidCode, i: int) -> int:
    """Dimension of the parity-check space of the code punctured to L_i.

    Equals 1 for a single-parity-check local code.
    """
    L = code.locals_[i]
    return len(L) - rank(code.generator.columns(L))


def is_information_set(code: Code, cols: Iterable[int]) -> bool:
    cols = list(cols)
    return len(cols) == code.generator.rows and rank(code.generator.columns(cols)) == len(cols)


def to_json(code: Code) -> str:
    if isinstance(code, PyramidCode):
        d = {
            "kind": "pyramid",
            "n_h": code.n_h,
            "s": code.s,
            "t": code.t,
            "k": code.k,
            "locals": [list(L) for L in code.locals_],
            "global": list(code.global_),
        }
    elif isinstance(code, MdsCode):
        d = {
            "kind": "mds",
            "n_h": code.n,
            "s": code.s,
            "t": None,
            "k": code.k,
            "locals": [],
            "global": list(range(code.k, code.n)),
        }
    else:
        d = {
            "kind": "repetition",
            "n_h": code.n_h,
            "s": code.s,
            "t": None,
            "k": code.k,
            "locals": [],
            "global": [],
        }
    d["generator"] = code.generator.tolist()
    return json.dumps(d)


def from_json(text: str, spec: FieldSpec | None = None) -> Code:
    d = json.loads(text)
    spec = _default_spec(spec)
    G = FieldMatrix(spec, d["generator"])
    kind = d["kind"]
    if kind == "pyramid":
        a, b = divmod(d["k"], d["t"])
        return PyramidCode(
            n_h=d["n_h"],
            s=d["s"],
            t=d["t"],
            k=d["k"],
            a=a,
            b=b,
            locals_=tuple(tuple(L) for L in d["locals"]),
            global_=tuple(d["global"]),
            generator=G,
        )
    if kind == "mds":
        return MdsCode(n=d["n_h"], k=d["k"], generator=G)
    if kind == "repetition":
        return RepetitionCode(n_h=d["n_h"], s=d["s"], k=d["k"], generator=G)
    raise ParameterError(f"unknown code kind {kind!r}")


__all__ = [
    "Code",
    "MdsCode",
    "PyramidCode",
    "RepetitionCode",
    "build_arc",
    "build_mds",
    "build_pyramid",
    "encode",
    "erasure_decodable",
    "from_json",
    "is_information_set",
    "local_parity_relations",
    "max_locals",
    "to_json",
]
