"""
Letter-typical sets and exact typical masses.

A sequence x of length n is letter-typical for P with parameter eps when
every letter count N(a|x) satisfies ``|N(a|x)/n - P(a)| <= eps * P(a)``.
Masses are computed by summing over types (compositions of n) weighted by
multinomial coefficients, so binary instances with n around 20 stay cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import ValidationError
from .prob import JointPmf, Pmf, check_cap

# Absorbs float noise in eps*P(a) at exact boundaries such as 0.3*0.1.
BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class TypicalityParams:
    epsilon: float
    n: int

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ValidationError(f"epsilon must be >= 0, got {self.epsilon!r}")
        if int(self.n) != self.n or self.n < 1:
            raise ValidationError(f"n must be a positive integer, got {self.n!r}")


def counts_typical(counts: np.ndarray, probs: np.ndarray, epsilon: float) -> np.ndarray:
    """Typicality test on count vectors; ``counts`` has the alphabet on its last axis."""
    counts = np.asarray(counts)
    n = counts.sum(axis=-1, keepdims=True)
    dev = np.abs(counts / n - probs)
    return np.all(dev <= epsilon * probs + BOUNDARY_TOL, axis=-1)


def _letter_counts(x: Sequence[int], k: int, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=int)
    if x.ndim != 1 or x.size != n:
        raise ValidationError(f"sequence length {x.size} does not match n={n}")
    if x.size and (x.min() < 0 or x.max() >= k):
        raise ValidationError(f"sequence symbols must lie in 0..{k - 1}")
    return np.bincount(x, minlength=k)


def is_letter_typical(x: Sequence[int], P: Pmf, params: TypicalityParams) -> bool:
    counts = _letter_counts(x, P.size, params.n)
    return bool(counts_typical(counts, P.probs, params.epsilon))


def jointly_typical(
    u: Sequence[int], v: Sequence[int], J: JointPmf, params: TypicalityParams
) -> bool:
    u = np.asarray(u, dtype=int)
    v = np.asarray(v, dtype=int)
    if u.shape != v.shape:
        raise ValidationError(f"length mismatch: {u.size} vs {v.size}")
    nu, nv = J.shape
    if u.size and (u.min() < 0 or u.max() >= nu or v.min() < 0 or v.max() >= nv):
        raise ValidationError("paired sequence has symbols outside the joint alphabet")
    return is_letter_typical(u * nv + v, J.flat(), params)


@lru_cache(maxsize=64)
def _compositions(n: int, k: int) -> np.ndarray:
    if k == 1:
        return np.array([[n]], dtype=np.int64)
    parts = []
    for first in range(n, -1, -1):
        rest = _compositions(n - first, k - 1)
        parts.append(np.column_stack([np.full(len(rest), first), rest]))
    out = np.vstack(parts)
    out.setflags(write=False)
    return out


def compositions(n: int, k: int) -> np.ndarray:
    """All count vectors of length k summing to n, shape (C(n+k-1, k-1), k)."""
    return _compositions(int(n), int(k))


def iter_types(n: int, k: int) -> Iterator[np.ndarray]:
    yield from compositions(n, k)


def log_multinomial(counts: np.ndarray) -> np.ndarray:
    """Natural log of n! / prod(N_a!) row-wise."""
    counts = np.asarray(counts, dtype=float)
    n = counts.sum(axis=-1)
    return gammaln(n + 1) - gammaln(counts + 1).sum(axis=-1)


def type_log_probability(counts: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """Natural log of the probability of one sequence with the given type; -inf off support."""
    counts = np.asarray(counts, dtype=float)
    with np.errstate(divide="ignore"):
        logp = np.log(probs)
    terms = np.where(counts > 0, counts * logp, 0.0)
    return terms.sum(axis=-1)


def typical_mass(P: Pmf, params: TypicalityParams) -> float:
    """Exact P^n-mass of the letter-typical set, accumulated in type order."""
    check_cap(P.size, params.n)
    types = compositions(params.n, P.size)
    typ = counts_typical(types, P.probs, params.epsilon)
    if not typ.any():
        return 0.0
    logw = log_multinomial(types[typ]) + type_log_probability(types[typ], P.probs)
    return float(np.sum(np.exp(logw)))


def mu_constants(J: JointPmf) -> tuple[float, float]:
    """Smallest positive output mass and smallest positive joint mass."""
    return J.marginal_v.min_positive(), float(J.table[J.table > 0].min())


def hoeffding_atypical_bound(alphabet_size: int, n: int, epsilon: float, mu: float) -> float:
    """``2|X| exp(-2 n eps^2 mu^2)``, the union-Hoeffding bound on atypical mass."""
    return 2.0 * alphabet_size * float(np.exp(-2.0 * n * epsilon**2 * mu**2))
