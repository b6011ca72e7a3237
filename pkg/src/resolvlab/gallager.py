"""
Gallager-type exponents for resolvability, on -1/2 <= rho <= 0.

    E0(rho)   = log2 sum_v { sum_u Q(u) W(v|u)^(1/(1+rho)) }^(1+rho)
    E0n(rho)  = log2 sum_{v^n} { E_C[ P(v^n)^(1/(1+rho)) ] }^(1+rho)
    E_G(R)    = inf_{-1/2 <= rho < 0} E0(rho) + rho R

E0n averages over the random codebook C and is computed by enumeration.
Both curves vanish at rho = 0, have slope -I(V;U) (resp. -E[D]) there, and
are convex; E_G is negative exactly when R exceeds I(V;U).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .engine import MessageSource, enumerate_codebooks
from .errors import ValidationError
from .prob import ChannelMatrix, JointPmf, Pmf

RHO_MIN = -0.5
RHO_EDGE = -1e-9
LN2 = math.log(2)
_GOLDEN = (math.sqrt(5) - 1) / 2


def _check_rho(rho: float):
    if not (RHO_MIN <= rho <= 0.0):
        raise ValidationError(f"rho={rho!r} outside [-1/2, 0]")


def _pow(x: np.ndarray, a: float) -> np.ndarray:
    """x**a through the log domain with 0**a = 0 for a > 0."""
    with np.errstate(divide="ignore"):
        lx = np.log(x)
    return np.where(x > 0, np.exp(a * lx), 0.0)


def e0_single_letter(rho: float, J: JointPmf) -> float:
    _check_rho(rho)
    qu = J.marginal_u.probs
    W = J.channel.rows
    inner = qu @ _pow(W, 1.0 / (1.0 + rho))
    return float(math.log2(np.sum(_pow(inner, 1.0 + rho))))


def e0_single_letter_slope(rho: float, J: JointPmf) -> float:
    """Analytic d E0 / d rho in bits."""
    _check_rho(rho)
    qu = J.marginal_u.probs
    W = J.channel.rows
    a = 1.0 / (1.0 + rho)
    Wa = _pow(W, a)
    with np.errstate(divide="ignore", invalid="ignore"):
        WlnW = np.where(W > 0, Wa * np.log(np.where(W > 0, W, 1.0)), 0.0)
    A = qu @ Wa
    dA = qu @ WlnW
    pos = A > 0
    A, dA = A[pos], dA[pos]
    Ap = A ** (1.0 + rho)
    S = Ap.sum()
    dS = np.sum(Ap * (np.log(A) - a * dA / A))
    return float(dS / (S * LN2))


def e0_blocklength(
    rho: float, Q_U: Pmf, W: ChannelMatrix, n: int, M: int,
    src: Optional[MessageSource] = None,
) -> float:
    _check_rho(rho)
    a = 1.0 / (1.0 + rho)
    acc = np.zeros(W.n_outputs**n)
    for prob, P in enumerate_codebooks(Q_U, W, n, M, src):
        acc += prob @ _pow(P, a)
    return float(math.log2(np.sum(_pow(acc, 1.0 + rho))))


def e0_blocklength_curve(
    rho_grid: Sequence[float], Q_U: Pmf, W: ChannelMatrix, n: int, M: int,
    src: Optional[MessageSource] = None,
) -> np.ndarray:
    """E0n on a whole grid with a single pass over the codebook ensemble."""
    grid = np.asarray(rho_grid, dtype=float)
    for r in grid:
        _check_rho(r)
    acc = np.zeros((grid.size, W.n_outputs**n))
    with np.errstate(divide="ignore"):
        for prob, P in enumerate_codebooks(Q_U, W, n, M, src):
            lp = np.log(P)
            for i, r in enumerate(grid):
                acc[i] += prob @ np.where(P > 0, np.exp(lp / (1.0 + r)), 0.0)
    return np.array([math.log2(np.sum(_pow(acc[i], 1.0 + r))) for i, r in enumerate(grid)])


@dataclass(frozen=True, eq=False)
class ExponentCurve:
    rho_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.rho_grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.shape != v.shape or g.ndim != 1:
            raise ValidationError("ExponentCurve: grid and values must be matching vectors")
        if np.any(np.diff(g) <= 0):
            raise ValidationError("ExponentCurve: grid must be strictly increasing")
        if g[0] < RHO_MIN or g[-1] > 0:
            raise ValidationError("ExponentCurve: grid must lie in [-1/2, 0]")
        if g[-1] == 0 and abs(v[-1]) > 1e-12:
            raise ValidationError(f"ExponentCurve: value {v[-1]!r} at rho=0 is not 0")
        object.__setattr__(self, "rho_grid", g)
        object.__setattr__(self, "values", v)

    def second_differences(self) -> np.ndarray:
        return np.diff(self.values, 2)

    @staticmethod
    def to_s(rho: float) -> float:
        """Reparameterization s = -rho / (1 + rho), mapping [-1/2, 0] onto [0, 1]."""
        return -rho / (1.0 + rho)


def single_letter_curve(J: JointPmf, rho_grid: Sequence[float]) -> ExponentCurve:
    g = np.asarray(rho_grid, dtype=float)
    return ExponentCurve(g, np.array([e0_single_letter(r, J) for r in g]))


def blocklength_curve(
    rho_grid: Sequence[float], Q_U: Pmf, W: ChannelMatrix, n: int, M: int,
    src: Optional[MessageSource] = None,
) -> ExponentCurve:
    g = np.asarray(rho_grid, dtype=float)
    return ExponentCurve(g, e0_blocklength_curve(g, Q_U, W, n, M, src))


def one_sided_slope(f: Callable[[float], float], h: float = 1e-4) -> float:
    """Backward difference (f(0) - f(-h)) / h."""
    return (f(0.0) - f(-h)) / h


@dataclass(frozen=True)
class GallagerExponent:
    E_G: float
    rho_star: float


def _golden_min(f: Callable[[float], float], lo: float, hi: float, tol: float) -> tuple[float, float]:
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def gallager_exponent(R: float, J: JointPmf, tol: float = 1e-10) -> GallagerExponent:
    """Minimize E0(rho) + rho R over [-1/2, 0).

    The objective is convex. If its slope just left of 0 is not positive
    (R <= I(V;U)) it decreases toward the open end, so the infimum is the
    limit value 0 and ``rho_star`` is reported as 0.0.
    """
    if R < 0:
        raise ValidationError(f"rate must be non-negative, got {R!r}")

    def f(rho: float) -> float:
        return e0_single_letter(rho, J) + rho * R

    if e0_single_letter_slope(RHO_EDGE, J) + R <= 0:
        return GallagerExponent(0.0, 0.0)

    grid = np.linspace(RHO_MIN, RHO_EDGE, 64)
    vals = np.array([f(r) for r in grid])
    k = int(np.argmin(vals))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, grid.size - 1)]
    rho, val = _golden_min(f, lo, hi, tol)
    if vals[k] < val:
        rho, val = float(grid[k]), float(vals[k])
    return GallagerExponent(min(val, 0.0), float(rho))


def lemma2_bound(R: float, J: JointPmf, n: int) -> float:
    """log2(1 + 2^(n E_G(R)))."""
    if n < 1:
        raise ValidationError("n must be positive")
    return float(np.logaddexp2(0.0, n * gallager_exponent(R, J).E_G))


def lemma2_pointwise_bound(rho: float, R: float, J: JointPmf, n: int) -> float:
    """log2(1 + 2^(n (E0(rho) + rho R))), the bound on E0n at this same rho."""
    return float(np.logaddexp2(0.0, n * (e0_single_letter(rho, J) + rho * R)))


def divergence_bound_via_exponent(R: float, J: JointPmf, n: int, rho: float) -> float:
    """log2(1 + 2^(n E_G(R))) / (-rho), an upper bound on E[D] at rho = rho_star."""
    _check_rho(rho)
    if rho == 0:
        raise ValidationError("rho must be strictly negative")
    return lemma2_bound(R, J, n) / (-rho)
