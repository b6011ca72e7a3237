"""
Minimal resolvability rate for a fixed channel, and decay-rate fitting.

For a fixed channel W and target Q_V the feasible inputs form the polytope
{x >= 0, sum x = 1, x W = Q_V}. On that polytope

    I(x; W) = H(Q_V) - sum_u x_u H(W_u)

so the minimum sits at a vertex. Vertices are enumerated through column
bases for small input alphabets; larger ones fall back to a linear program
over the same objective.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.optimize import linprog

from .engine import MessageSource
from .errors import InfeasibleTargetError, ValidationError
from .prob import ChannelMatrix, Pmf, binary_entropy, joint_from, mutual_information

FEAS_TOL = 1e-9
BOUNDARY_BAND = 1e-6
VERTEX_ENUM_MAX_INPUTS = 12
TIE_TOL = 1e-10


@dataclass
class Feasibility:
    feasible: bool
    witness: Optional[Pmf]
    residual: float
    worst_output: Optional[int] = None

    def __bool__(self):
        return self.feasible


def _constraints(W: ChannelMatrix, Q_V: Pmf):
    if Q_V.size != W.n_outputs:
        raise ValidationError(
            f"target has {Q_V.size} letters but channel has {W.n_outputs} outputs"
        )
    A = np.vstack([W.rows.T, np.ones(W.n_inputs)])
    b = np.concatenate([Q_V.probs, [1.0]])
    return A, b


def feasibility(W: ChannelMatrix, Q_V: Pmf) -> Feasibility:
    """Is there an input x with x W = Q_V? Minimizes the L1 residual by LP."""
    A, b = _constraints(W, Q_V)
    nu, nv = W.n_inputs, W.n_outputs
    # x (nu), slack+ (nv), slack- (nv); sum x = 1 kept exact
    c = np.concatenate([np.zeros(nu), np.ones(2 * nv)])
    A_eq = np.block([
        [W.rows.T, np.eye(nv), -np.eye(nv)],
        [np.ones((1, nu)), np.zeros((1, 2 * nv))],
    ])
    res = linprog(c, A_eq=A_eq, b_eq=b, bounds=(0, None), method="highs")
    if res.status != 0:
        return Feasibility(False, None, math.inf)
    x = np.clip(res.x[:nu], 0, None)
    x = x / x.sum()
    gap = x @ W.rows - Q_V.probs
    residual = float(np.abs(gap).max())
    if residual <= FEAS_TOL:
        return Feasibility(True, Pmf(x), residual)
    return Feasibility(False, Pmf(x), residual, int(np.argmax(np.abs(gap))))


@dataclass
class RateCertificate:
    min_mutual_information: float
    argmin_input: Optional[Pmf]
    feasible: bool
    support_size: int
    method: str = "vertex"

    def to_json(self) -> dict:
        return {
            "min_I_bits": self.min_mutual_information,
            "input_pmf": None if self.argmin_input is None else self.argmin_input.probs.tolist(),
            "support_size": self.support_size,
            "feasible": self.feasible,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RateCertificate":
        pmf = obj.get("input_pmf")
        return cls(
            float(obj["min_I_bits"]),
            None if pmf is None else Pmf(pmf),
            bool(obj["feasible"]),
            int(obj["support_size"]),
        )


def _row_entropies(W: ChannelMatrix) -> np.ndarray:
    r = W.rows
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(r > 0, r * np.log2(np.where(r > 0, r, 1.0)), 0.0)
    return -t.sum(axis=1)


def polytope_vertices(W: ChannelMatrix, Q_V: Pmf) -> list[np.ndarray]:
    """Basic feasible solutions of {x >= 0, x W = Q_V, sum x = 1}, deduplicated."""
    A, b = _constraints(W, Q_V)
    rank = np.linalg.matrix_rank(A)
    nu = W.n_inputs
    found: list[np.ndarray] = []
    for cols in itertools.combinations(range(nu), min(rank, nu)):
        sub = A[:, cols]
        if np.linalg.matrix_rank(sub) < len(cols):
            continue
        xs, *_ = np.linalg.lstsq(sub, b, rcond=None)
        if np.any(xs < -FEAS_TOL) or np.abs(sub @ xs - b).max() > FEAS_TOL:
            continue
        x = np.zeros(nu)
        x[list(cols)] = np.clip(xs, 0, None)
        x /= x.sum()
        if not any(np.abs(x - y).max() <= 1e-12 for y in found):
            found.append(x)
    return found


def _certificate(x: np.ndarray, W: ChannelMatrix, method: str) -> RateCertificate:
    x = np.where(x > 1e-15, x, 0.0)
    pmf = Pmf(x)
    I = mutual_information(joint_from(pmf, W))
    return RateCertificate(I, pmf, True, int(np.count_nonzero(pmf.probs)), method)


def min_rate(W: ChannelMatrix, Q_V: Pmf) -> RateCertificate:
    feas = feasibility(W, Q_V)
    if not feas:
        raise InfeasibleTargetError(
            f"no input reproduces the target: output letter {feas.worst_output} "
            f"misses by {feas.residual:.3g}",
            residual=feas.residual,
            worst_output=feas.worst_output,
        )
    if W.n_inputs <= VERTEX_ENUM_MAX_INPUTS:
        verts = polytope_vertices(W, Q_V)
        if verts:
            scored = [(mutual_information(joint_from(Pmf(v), W)), v) for v in verts]
            best = min(s for s, _ in scored)
            ties = [v for s, v in scored if s <= best + TIE_TOL]
            return _certificate(min(ties, key=tuple), W, "vertex")
    # linear objective on the polytope: maximize sum x_u H(W_u)
    A, b = _constraints(W, Q_V)
    res = linprog(-_row_entropies(W), A_eq=A, b_eq=b, bounds=(0, None), method="highs-ds")
    if res.status != 0:
        raise InfeasibleTargetError("linear program failed on a feasible target")
    return _certificate(np.clip(res.x, 0, None), W, "lp")


class Verdict(str, enum.Enum):
    ACHIEVABLE = "ACHIEVABLE"
    NOT_ACHIEVABLE = "NOT_ACHIEVABLE"
    BOUNDARY = "BOUNDARY"


@dataclass
class AchievabilityReport:
    verdict: Verdict
    margin: float
    threshold: float
    rate: float

    @property
    def achievable(self) -> Verdict:
        return self.verdict


def classify(rate: float, threshold: float, band: float = BOUNDARY_BAND) -> Verdict:
    if rate > threshold + band:
        return Verdict.ACHIEVABLE
    if rate < threshold - band:
        return Verdict.NOT_ACHIEVABLE
    return Verdict.BOUNDARY


def achievability_report(
    W: ChannelMatrix, Q_V: Pmf, R: float, src: Optional[MessageSource] = None,
    band: float = BOUNDARY_BAND, certificate: Optional[RateCertificate] = None,
) -> AchievabilityReport:
    """Compare R with the minimal rate, divided by H2(p) for bit-stream sources."""
    cert = certificate or min_rate(W, Q_V)
    threshold = cert.min_mutual_information
    if src is not None and src.kind == "bitstream":
        threshold /= binary_entropy(src.p)
    return AchievabilityReport(classify(R, threshold, band), R - threshold, threshold, R)


# ------------------------------------------------------------- decay fits

DEFAULT_RESIDUAL_THRESHOLD = 0.25


@dataclass
class DecayFit:
    """``mean_D ~ c_hat * 2**(-beta_hat * n)`` fitted in the log2 domain."""

    beta_hat: Optional[float]
    c_hat: Optional[float]
    residual: float
    alpha_family: str
    alpha_scaled: list[float] = field(default_factory=list)
    alpha_scaled_decreasing: bool = False
    reliable: bool = False


def parse_alpha(family: Union[str, int, Callable[[float], float]]) -> tuple[str, Callable[[float], float]]:
    """``"poly:m"`` (n**m), ``"exp:gamma"`` (e**(gamma n)), an int m, or a callable."""
    if callable(family):
        return getattr(family, "__name__", "custom"), family
    if isinstance(family, int):
        family = f"poly:{family}"
    kind, _, arg = str(family).partition(":")
    if kind == "poly":
        m = int(arg)
        return f"poly:{m}", lambda n: float(n) ** m
    if kind == "exp":
        g = float(arg)
        return f"exp:{g}", lambda n: math.exp(g * n)
    raise ValidationError(f"unknown scaling family {family!r}")


def fit_decay(
    points: Sequence[tuple[float, float, float]],
    alpha: Union[str, int, Callable[[float], float]] = "poly:2",
    residual_threshold: float = DEFAULT_RESIDUAL_THRESHOLD,
) -> DecayFit:
    """Least-squares slope of log2(mean_D) against n.

    ``points`` are (n, mean_D, stderr_D). The fit is only flagged reliable
    when the RMS residual in log2 units is at most ``residual_threshold``;
    otherwise ``beta_hat`` is reported but carries no claim.
    """
    pts = sorted(points)
    if len(pts) < 4:
        raise ValidationError("fit_decay needs at least 4 points")
    ns = np.array([p[0] for p in pts], dtype=float)
    means = np.array([p[1] for p in pts], dtype=float)
    name, fn = parse_alpha(alpha)
    if np.any(means <= 0):
        zero = [int(n) for n, m in zip(ns, means) if m <= 0]
        raise ValidationError(
            f"non-positive mean divergence at n={zero}: exact achievement, nothing to fit"
        )
    y = np.log2(means)
    slope, intercept = np.polyfit(ns, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * ns + intercept)) ** 2)))
    scaled = [fn(n) * m for n, m in zip(ns, means)]
    return DecayFit(
        beta_hat=float(-slope),
        c_hat=float(2.0**intercept),
        residual=resid,
        alpha_family=name,
        alpha_scaled=scaled,
        alpha_scaled_decreasing=bool(np.all(np.diff(scaled) < 0)),
        reliable=resid <= residual_threshold,
    )
