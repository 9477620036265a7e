"""Quasi-Newton pair history, incremental Gram caches and the pair file format.

The pair file is plain text::

    n m gamma
    phi <float>|sr1
    <n floats: s_0>
    <n floats: y_0>
    phi ...

Floats are written with ``repr`` so a save/load round trip is bit exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import CurvatureTooSmall, DimensionMismatch, ParseError, SchemaError

CURVATURE_FLOOR = 1e-12


class Sr1:
    """Marker for a step that uses the symmetric rank-one update."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "SR1"

    def __reduce__(self):
        return (Sr1, ())


SR1 = Sr1()

PhiEntry = Union[float, Sr1]


@dataclass(frozen=True)
class PhiSchedule:
    """Per-step Broyden parameter: a real phi or the ``SR1`` marker."""

    entries: tuple = ()

    def __post_init__(self):
        cleaned = []
        for e in self.entries:
            if isinstance(e, Sr1):
                cleaned.append(SR1)
            elif isinstance(e, str):
                cleaned.append(parse_phi_token(e))
            else:
                cleaned.append(float(e))
        object.__setattr__(self, "entries", tuple(cleaned))

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, j):
        if isinstance(j, slice):
            return PhiSchedule(self.entries[j])
        return self.entries[j]

    def __iter__(self):
        return iter(self.entries)

    def is_sr1(self, j: int) -> bool:
        return isinstance(self.entries[j], Sr1)

    @property
    def n_sr1(self) -> int:
        return sum(isinstance(e, Sr1) for e in self.entries)

    def tokens(self) -> list[str]:
        return [format_phi_token(e) for e in self.entries]

    @classmethod
    def constant(cls, phi, m: int) -> "PhiSchedule":
        return cls((phi,) * m)


def parse_phi_token(token: str) -> PhiEntry:
    if token.strip().lower() == "sr1":
        return SR1
    return float(token)


def format_phi_token(entry: PhiEntry) -> str:
    return "sr1" if isinstance(entry, Sr1) else repr(float(entry))


def _as_vector(v, n=None) -> np.ndarray:
    arr = np.array(v, dtype=float).reshape(-1)
    if n is not None and arr.shape[0] != n:
        raise DimensionMismatch(f"expected vector of length {n}, got {arr.shape[0]}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class PairSequence:
    """Stored pairs ``(s_i, y_i)`` with ``B_0 = gamma * I``.

    Vectors are kept read-only; appending returns a new sequence sharing them.
    """

    n: int
    gamma: float
    S: tuple = ()
    Y: tuple = ()

    def __post_init__(self):
        if self.n < 1:
            raise DimensionMismatch("dimension n must be positive")
        if not np.isfinite(self.gamma) or self.gamma == 0:
            raise ValueError("gamma must be a nonzero finite real")
        if len(self.S) != len(self.Y):
            raise DimensionMismatch("S and Y must hold the same number of vectors")
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "S", tuple(_as_vector(s, self.n) for s in self.S))
        object.__setattr__(self, "Y", tuple(_as_vector(y, self.n) for y in self.Y))

    @classmethod
    def empty(cls, n: int, gamma: float = 1.0) -> "PairSequence":
        return cls(n=n, gamma=gamma)

    @property
    def m(self) -> int:
        return len(self.S)

    @cached_property
    def S_mat(self) -> np.ndarray:
        """``n x m`` array with the ``s_i`` as columns."""
        if self.m == 0:
            return np.zeros((self.n, 0))
        return np.column_stack(self.S)

    @cached_property
    def Y_mat(self) -> np.ndarray:
        if self.m == 0:
            return np.zeros((self.n, 0))
        return np.column_stack(self.Y)

    def __len__(self):
        return self.m


def _mirror_upper(a: np.ndarray) -> np.ndarray:
    return np.triu(a) + np.triu(a, 1).T


@dataclass(frozen=True)
class GramCache:
    """Inner products ``S^T S``, ``S^T Y`` and ``Y^T Y`` of the stored pairs."""

    StS: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    StY: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    YtY: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    @property
    def m(self) -> int:
        return self.StS.shape[0]

    @classmethod
    def from_pairs(cls, seq: PairSequence) -> "GramCache":
        """Recompute all three Gram matrices from scratch in ``O(m^2 n)``."""
        S, Y = seq.S_mat, seq.Y_mat
        return cls(StS=_mirror_upper(S.T @ S), StY=S.T @ Y, YtY=_mirror_upper(Y.T @ Y))


def check_curvature(s: np.ndarray, y: np.ndarray, floor: float = CURVATURE_FLOOR) -> float:
    yts = float(y @ s)
    if not abs(yts) > floor * np.linalg.norm(y) * np.linalg.norm(s):
        raise CurvatureTooSmall(
            f"|y^T s| = {abs(yts):.3e} is below {floor:g} * ||y|| ||s||")
    return yts


def append_pair(seq: PairSequence, cache: GramCache, s, y,
                floor: float = CURVATURE_FLOOR) -> tuple[PairSequence, GramCache]:
    """Append ``(s, y)`` and border each Gram matrix by one row and column.

    Existing cache entries are copied, never recomputed.
    """
    if cache.m != seq.m:
        raise DimensionMismatch(f"cache holds {cache.m} pairs, sequence holds {seq.m}")
    s = _as_vector(s, seq.n)
    y = _as_vector(y, seq.n)
    yts = check_curvature(s, y, floor)

    m = seq.m
    S, Y = seq.S_mat, seq.Y_mat
    Sts = S.T @ s   # s_i^T s
    Sty = S.T @ y   # s_i^T y
    Yts = Y.T @ s   # y_i^T s = s^T y_i
    Yty = Y.T @ y   # y_i^T y

    StS = np.empty((m + 1, m + 1))
    StS[:m, :m] = cache.StS
    StS[:m, m] = StS[m, :m] = Sts
    StS[m, m] = s @ s

    StY = np.empty((m + 1, m + 1))
    StY[:m, :m] = cache.StY
    StY[:m, m] = Sty
    StY[m, :m] = Yts
    StY[m, m] = yts

    YtY = np.empty((m + 1, m + 1))
    YtY[:m, :m] = cache.YtY
    YtY[:m, m] = YtY[m, :m] = Yty
    YtY[m, m] = y @ y

    new_seq = PairSequence(n=seq.n, gamma=seq.gamma, S=seq.S + (s,), Y=seq.Y + (y,))
    return new_seq, GramCache(StS=StS, StY=StY, YtY=YtY)


def build_pairs(n: int, gamma: float, S: Iterable, Y: Iterable,
                floor: float = CURVATURE_FLOOR) -> tuple[PairSequence, GramCache]:
    """Append the pairs one at a time, validating each."""
    seq, cache = PairSequence.empty(n, gamma), GramCache()
    for s, y in zip(S, Y, strict=True):
        seq, cache = append_pair(seq, cache, s, y, floor)
    return seq, cache


def drop_oldest(seq: PairSequence) -> tuple[PairSequence, GramCache]:
    """Slide the limited-memory window by one; caches are rebuilt."""
    if seq.m == 0:
        raise ValueError("cannot drop from an empty sequence")
    new_seq = PairSequence(n=seq.n, gamma=seq.gamma, S=seq.S[1:], Y=seq.Y[1:])
    return new_seq, GramCache.from_pairs(new_seq)


def ldr_split(cache: GramCache) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split ``S^T Y`` into strictly lower, diagonal and strictly upper parts."""
    if cache.m == 0:
        raise ValueError("empty cache")
    StY = cache.StY
    return np.tril(StY, -1), np.diag(np.diag(StY)), np.triu(StY, 1)


# -- pair files ---------------------------------------------------------------

def _fmt(values: Sequence[float]) -> str:
    return " ".join(repr(float(v)) for v in values)


def save_pairs(seq: PairSequence, schedule: PhiSchedule, path) -> None:
    if len(schedule) != seq.m:
        raise SchemaError(f"schedule has {len(schedule)} entries for {seq.m} pairs")
    lines = [f"{seq.n} {seq.m} {repr(seq.gamma)}"]
    for j in range(seq.m):
        lines.append(f"phi {format_phi_token(schedule[j])}")
        lines.append(_fmt(seq.S[j]))
        lines.append(_fmt(seq.Y[j]))
    Path(path).write_text("\n".join(lines) + "\n")


def _floats(tokens, lineno):
    try:
        return [float(t) for t in tokens]
    except ValueError as exc:
        raise ParseError(str(exc), lineno) from None


def parse_pairs(text: str, floor: float = CURVATURE_FLOOR) -> tuple[PairSequence, PhiSchedule]:
    lines = [(i + 1, ln.split()) for i, ln in enumerate(text.splitlines())]
    lines = [(i, toks) for i, toks in lines if toks]
    if not lines:
        raise ParseError("empty pair file", 1)

    lineno, header = lines[0]
    if len(header) != 3:
        raise ParseError("header must read 'n m gamma'", lineno)
    try:
        n, m = int(header[0]), int(header[1])
    except ValueError:
        raise ParseError("n and m must be integers", lineno) from None
    (gamma,) = _floats(header[2:], lineno)
    if n < 1 or m < 0:
        raise SchemaError(f"invalid header n={n} m={m}")
    if len(lines) - 1 != 3 * m:
        raise SchemaError(f"header announces {m} pairs but body has {len(lines) - 1} lines "
                          f"(expected {3 * m})")

    entries, S, Y = [], [], []
    body = lines[1:]
    for j in range(m):
        (lp, phi), (ls, s), (ly, y) = body[3 * j: 3 * j + 3]
        if len(phi) != 2 or phi[0] != "phi":
            raise ParseError("expected 'phi <float>' or 'phi sr1'", lp)
        try:
            entries.append(parse_phi_token(phi[1]))
        except ValueError:
            raise ParseError(f"bad phi token {phi[1]!r}", lp) from None
        for ln, toks, dest in ((ls, s, S), (ly, y, Y)):
            if len(toks) != n:
                raise ParseError(f"expected {n} floats, found {len(toks)}", ln)
            dest.append(_floats(toks, ln))

    seq, _ = build_pairs(n, gamma, S, Y, floor)
    return seq, PhiSchedule(tuple(entries))


def load_pairs(path, floor: float = CURVATURE_FLOOR) -> tuple[PairSequence, PhiSchedule]:
    return parse_pairs(Path(path).read_text(), floor)
