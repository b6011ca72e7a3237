"""
Finite-alphabet probability primitives.

All information quantities are in bits. Distributions over length-n
sequences use a single lexicographic codec: position 0 is the most
significant digit, so for a binary alphabet the sequence (0, 1, 1) has
index 3. Every module (engine, typicality, brute-force oracles) shares
:func:`sequence_table` and :func:`sequence_index`, which keeps their
results comparable element by element.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CapExceededError, ValidationError

SIMPLEX_TOL = 1e-9
MAX_STATES = 2**24


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _check_simplex(a: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{what}: entries must be finite")
    if np.any(a < 0):
        raise ValidationError(f"{what}: entries must be non-negative")
    total = a.sum(axis=-1)
    bad = np.abs(total - 1.0) > SIMPLEX_TOL
    if np.any(bad):
        raise ValidationError(
            f"{what}: total mass {np.atleast_1d(total)[np.atleast_1d(bad)][0]!r} "
            f"differs from 1 by more than {SIMPLEX_TOL}"
        )
    return a / np.expand_dims(total, -1) if a.ndim > 1 else a / total


@dataclass(frozen=True, eq=False)
class Pmf:
    """Probability vector over the alphabet ``{0, ..., k-1}``."""

    probs: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.probs, dtype=float)
        if a.ndim != 1 or a.size == 0:
            raise ValidationError("Pmf: probs must be a non-empty vector")
        object.__setattr__(self, "probs", _frozen(_check_simplex(a, "Pmf")))

    @classmethod
    def uniform(cls, k: int) -> "Pmf":
        return cls(np.full(k, 1.0 / k))

    @classmethod
    def point(cls, k: int, at: int) -> "Pmf":
        a = np.zeros(k)
        a[at] = 1.0
        return cls(a)

    @property
    def size(self) -> int:
        return self.probs.size

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.probs > 0)

    def min_positive(self) -> float:
        return float(self.probs[self.probs > 0].min())

    def to_json(self) -> dict:
        return {"probs": self.probs.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "Pmf":
        return cls(obj["probs"])

    def __len__(self):
        return self.size

    def __repr__(self):
        return f"Pmf({np.array2string(self.probs, precision=6)})"


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    """Row-stochastic matrix ``rows[u, v] = W(v|u)``."""

    rows: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.rows, dtype=float)
        if a.ndim != 2 or a.size == 0:
            raise ValidationError("ChannelMatrix: rows must be a non-empty matrix")
        object.__setattr__(self, "rows", _frozen(_check_simplex(a, "ChannelMatrix row")))

    @property
    def n_inputs(self) -> int:
        return self.rows.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.rows.shape[1]

    def row(self, u: int) -> Pmf:
        return Pmf(self.rows[u])

    @classmethod
    def identity(cls, k: int) -> "ChannelMatrix":
        return cls(np.eye(k))

    @classmethod
    def bsc(cls, flip: float) -> "ChannelMatrix":
        return cls([[1 - flip, flip], [flip, 1 - flip]])

    def to_json(self) -> dict:
        return {"rows": self.rows.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "ChannelMatrix":
        return cls(obj["rows"])


@dataclass(frozen=True, eq=False)
class JointPmf:
    """Joint distribution ``table[u, v]`` over U x V."""

    table: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.table, dtype=float)
        if a.ndim != 2 or a.size == 0:
            raise ValidationError("JointPmf: table must be a non-empty matrix")
        flat = _check_simplex(a.ravel(), "JointPmf")
        object.__setattr__(self, "table", _frozen(flat.reshape(a.shape)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.table.shape

    @property
    def marginal_u(self) -> Pmf:
        return Pmf(self.table.sum(axis=1))

    @property
    def marginal_v(self) -> Pmf:
        return Pmf(self.table.sum(axis=0))

    @property
    def channel(self) -> ChannelMatrix:
        """Conditional W(v|u); rows with zero input mass are set uniform."""
        qu = self.table.sum(axis=1)
        rows = np.full(self.table.shape, 1.0 / self.table.shape[1])
        pos = qu > 0
        rows[pos] = self.table[pos] / qu[pos, None]
        return ChannelMatrix(rows)

    def flat(self) -> Pmf:
        """The joint as a Pmf over the product alphabet, index ``u*|V| + v``."""
        return Pmf(self.table.ravel())

    def to_json(self) -> dict:
        return {"table": self.table.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "JointPmf":
        return cls(obj["table"])


def _xlog2x_sum(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(np.sum(p * np.log2(p)))


def entropy(P: Pmf) -> float:
    return max(0.0, -_xlog2x_sum(P.probs))


def binary_entropy(p: float) -> float:
    """H2(p) in bits for ``0 < p <= 1/2``."""
    if not (0.0 < p <= 0.5):
        raise ValidationError(f"binary_entropy: p={p!r} outside (0, 1/2]")
    if p == 0.5:
        return 1.0
    return float(-p * math.log2(p) - (1 - p) * math.log2(1 - p))


def conditional_entropy(J: JointPmf) -> float:
    """H(V|U) computed from the joint and its U-marginal."""
    return max(0.0, _xlog2x_sum(J.marginal_u.probs) - _xlog2x_sum(J.table.ravel()))


def mutual_information(J: JointPmf) -> float:
    t = J.table
    prod = np.outer(t.sum(axis=1), t.sum(axis=0))
    mask = t > 0
    val = float(np.sum(t[mask] * (np.log2(t[mask]) - np.log2(prod[mask]))))
    return max(0.0, val)


def _same_alphabet(P: Pmf, Q: Pmf):
    if P.size != Q.size:
        raise ValidationError(f"alphabet mismatch: {P.size} vs {Q.size}")


def kl_divergence(P: Pmf, Q: Pmf) -> float:
    """D(P||Q) in bits; ``math.inf`` when supp(P) is not inside supp(Q)."""
    _same_alphabet(P, Q)
    return kl_divergence_arrays(P.probs, Q.probs)


def kl_divergence_arrays(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    if np.any(q[mask] <= 0):
        return math.inf
    pm = p[mask]
    val = float(np.sum(pm * (np.log2(pm) - np.log2(q[mask]))))
    return max(0.0, val)


def total_variation(P: Pmf, Q: Pmf) -> float:
    """Un-halved variational distance, sum of absolute differences, in [0, 2]."""
    _same_alphabet(P, Q)
    return float(np.abs(P.probs - Q.probs).sum())


def _check_dims(Q_U: Pmf, W: ChannelMatrix):
    if Q_U.size != W.n_inputs:
        raise ValidationError(
            f"input alphabet {Q_U.size} does not match channel inputs {W.n_inputs}"
        )


def output_marginal(Q_U: Pmf, W: ChannelMatrix) -> Pmf:
    _check_dims(Q_U, W)
    return Pmf(Q_U.probs @ W.rows)


def joint_from(Q_U: Pmf, W: ChannelMatrix) -> JointPmf:
    _check_dims(Q_U, W)
    return JointPmf(Q_U.probs[:, None] * W.rows)


def check_cap(k: int, n: int, cap: int = MAX_STATES, what: str = "sequence space") -> int:
    size = k**n
    if size > cap:
        raise CapExceededError(
            f"{what} has {k}^{n} = {size} states, above the cap of {cap}",
            size=size,
            cap=cap,
        )
    return size


def sequence_table(k: int, n: int) -> np.ndarray:
    """All length-n sequences over ``{0..k-1}`` in lexicographic order, shape (k**n, n)."""
    check_cap(k, n)
    idx = np.arange(k**n)
    powers = k ** np.arange(n - 1, -1, -1)
    return (idx[:, None] // powers) % k


def sequence_index(x: Sequence[int], k: int) -> int:
    out = 0
    for s in x:
        out = out * k + int(s)
    return out


def product_vector(p: np.ndarray, n: int) -> np.ndarray:
    out = np.ones(1)
    for _ in range(n):
        out = np.multiply.outer(out, p).ravel()
    return out


def product_extension(P: Pmf, n: int) -> Pmf:
    if n < 1:
        raise ValidationError("product_extension: n must be positive")
    check_cap(P.size, n)
    return Pmf(product_vector(P.probs, n))


def product_channel(W: ChannelMatrix, n: int) -> ChannelMatrix:
    """The memoryless extension, indexed by sequence codec on both sides."""
    check_cap(W.n_inputs * W.n_outputs, n, what="product channel")
    out = np.ones((1, 1))
    for _ in range(n):
        out = np.einsum("ab,cd->acbd", out, W.rows).reshape(
            out.shape[0] * W.n_inputs, out.shape[1] * W.n_outputs
        )
    return ChannelMatrix(out)
