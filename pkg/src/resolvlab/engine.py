"""
Random-coding resolvability experiment.

M codewords of length n are drawn i.i.d. from Q_U^n, a message W picks one
of them (uniformly, or through a biased bit-stream source), and the chosen
word is sent through a memoryless channel. The induced output law

    P(v^n) = sum_w P(w) * W^n(v^n | u^n(w))

is compared with the product target Q_V^n in unnormalized divergence.
Everything here is exact over the sequence alphabet; the codebook ensemble
is either enumerated (oracles) or sampled (Monte Carlo).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

import numpy as np

from .errors import CapExceededError, InfiniteDivergenceError, ValidationError
from .prob import (
    MAX_STATES,
    ChannelMatrix,
    JointPmf,
    Pmf,
    binary_entropy,
    check_cap,
    entropy,
    kl_divergence_arrays,
    mutual_information,
    product_channel,
    product_vector,
)
from .typicality import compositions, counts_typical, log_multinomial, mu_constants

LOG2E = math.log2(math.e)
EXACT_CODEBOOK_CAP = 10**6
GENERATOR = "numpy.PCG64 via SeedSequence(entropy=seed, spawn_key=(trial,)), v1"


# ---------------------------------------------------------------- sources


@dataclass(frozen=True)
class UniformSource:
    M: int

    kind = "uniform"
    p = None

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValidationError(f"M must be a positive integer, got {self.M!r}")

    def weights(self) -> np.ndarray:
        return np.full(self.M, 1.0 / self.M)


@dataclass(frozen=True)
class BitStreamSource:
    """Message made of ``bits`` i.i.d. bits, each equal to 0 with probability p.

    Message index w carries the bit pattern of w written with ``bits`` binary
    digits, most significant first.
    """

    bits: int
    p: float

    kind = "bitstream"

    def __post_init__(self):
        if int(self.bits) != self.bits or self.bits < 0:
            raise ValidationError(f"bits must be a non-negative integer, got {self.bits!r}")
        if not (0.0 < self.p <= 0.5):
            raise ValidationError(f"bit-stream p={self.p!r} outside (0, 1/2]")
        check_cap(2, self.bits, what="bit-stream message set")

    @property
    def M(self) -> int:
        return 2**self.bits

    def zero_counts(self) -> np.ndarray:
        w = np.arange(self.M)
        ones = np.zeros(self.M, dtype=np.int64)
        for i in range(self.bits):
            ones += (w >> i) & 1
        return self.bits - ones

    def weights(self) -> np.ndarray:
        z = self.zero_counts()
        return self.p**z * (1.0 - self.p) ** (self.bits - z)


MessageSource = Union[UniformSource, BitStreamSource]


def _source(src: Optional[MessageSource], M: int) -> MessageSource:
    if src is None:
        return UniformSource(M)
    if src.M != M:
        raise ValidationError(f"source has {src.M} messages but codebook has M={M}")
    return src


# --------------------------------------------------------------- codebooks


@dataclass(frozen=True, eq=False)
class Codebook:
    words: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.words)
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise ValidationError("Codebook: words must have shape (M >= 1, n >= 1)")
        if not np.issubdtype(w.dtype, np.integer):
            if not np.all(w == np.round(w)):
                raise ValidationError("Codebook: symbols must be integers")
        w = w.astype(np.int64)
        if w.min() < 0:
            raise ValidationError("Codebook: negative symbol")
        w.setflags(write=False)
        object.__setattr__(self, "words", w)

    @property
    def M(self) -> int:
        return self.words.shape[0]

    @property
    def n(self) -> int:
        return self.words.shape[1]

    @property
    def rate(self) -> float:
        return math.log2(self.M) / self.n

    def encode(self, w: int) -> np.ndarray:
        return self.words[w]


def trial_generator(seed: int, trial: Optional[int] = None) -> np.random.Generator:
    """Deterministic stream for (master seed, trial index); see ``GENERATOR``."""
    key = () if trial is None else (int(trial),)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=key)))


def sample_codebook(
    Q_U: Pmf, n: int, M: int, seed: Union[int, np.random.Generator]
) -> Codebook:
    if n < 1 or M < 1:
        raise ValidationError("sample_codebook: n and M must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else trial_generator(seed)
    # inverse-CDF draw keeps the mapping from uniforms to symbols explicit
    cdf = np.cumsum(Q_U.probs)
    cdf[-1] = 1.0
    words = np.searchsorted(cdf, rng.random((M, n)), side="right")
    return Codebook(np.minimum(words, Q_U.size - 1))


# ---------------------------------------------------------- induced output


def codeword_likelihoods(words: np.ndarray, W: ChannelMatrix) -> np.ndarray:
    """``out[m, idx(v^n)] = W^n(v^n | words[m])``, shape (M, |V|^n)."""
    words = np.asarray(words)
    M, n = words.shape
    check_cap(W.n_outputs, n, what="output sequence space")
    if words.max() >= W.n_inputs:
        raise ValidationError("codeword symbol outside the channel input alphabet")
    out = W.rows[words[:, 0]]
    for i in range(1, n):
        out = (out[:, :, None] * W.rows[words[:, i]][:, None, :]).reshape(M, -1)
    return out


def _prefix_starts(words: np.ndarray, d: int) -> np.ndarray:
    if d == 0:
        return np.zeros(1, dtype=np.int64)
    change = np.any(words[1:, :d] != words[:-1, :d], axis=1)
    return np.concatenate([[0], 1 + np.flatnonzero(change)])


def mixture_output(words: np.ndarray, weights: np.ndarray, W: ChannelMatrix) -> np.ndarray:
    """``sum_m weights[m] * W^n(. | words[m])`` over V^n.

    Codewords are merged along their common prefixes (a trie folded from the
    leaves up), so the cost scales with the number of distinct prefixes
    rather than with M * |V|^n.
    """
    words = np.asarray(words)
    M, n = words.shape
    check_cap(W.n_outputs, n, what="output sequence space")
    if words.max() >= W.n_inputs:
        raise ValidationError("codeword symbol outside the channel input alphabet")
    order = np.lexsort(words.T[::-1])
    words = words[order]
    rep = _prefix_starts(words, n)
    vals = np.add.reduceat(np.asarray(weights, dtype=float)[order], rep)[:, None]
    for d in range(n - 1, -1, -1):
        rows = W.rows[words[rep, d]]
        vals = (rows[:, :, None] * vals[:, None, :]).reshape(rep.size, -1)
        parent = _prefix_starts(words, d)
        vals = np.add.reduceat(vals, np.searchsorted(rep, parent), axis=0)
        rep = parent
    return vals[0]


def induced_output_probs(C: Codebook, W: ChannelMatrix, src: Optional[MessageSource] = None) -> np.ndarray:
    src = _source(src, C.M)
    return mixture_output(C.words, src.weights(), W)


def induced_output_distribution(
    C: Codebook, W: ChannelMatrix, src: Optional[MessageSource] = None
) -> Pmf:
    return Pmf(induced_output_probs(C, W, src))


def divergence_to_target(
    C: Codebook, W: ChannelMatrix, src: Optional[MessageSource], Q_V: Pmf
) -> float:
    if Q_V.size != W.n_outputs:
        raise ValidationError("target alphabet does not match channel outputs")
    p = induced_output_probs(C, W, src)
    return kl_divergence_arrays(p, product_vector(Q_V.probs, C.n))


# ------------------------------------------------------ exact enumeration


def _row_divergence(P: np.ndarray, logq: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(P > 0, P * (np.log2(np.where(P > 0, P, 1.0)) - logq), 0.0)
    return terms.sum(axis=1)


def enumerate_codebooks(
    Q_U: Pmf, W: ChannelMatrix, n: int, M: int, src: Optional[MessageSource] = None,
    cap: int = EXACT_CODEBOOK_CAP,
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(prob, P)`` chunks over every positive-probability codebook.

    ``prob[c]`` is Q_U^n-probability of codebook c (product over its words),
    ``P[c]`` its induced output distribution over V^n. Codebooks are ordered
    with word 1 as the most significant digit.
    """
    src = _source(src, M)
    K = Q_U.size**n
    total = K**M
    if total > cap:
        raise CapExceededError(
            f"{Q_U.size}^({n}*{M}) = {total} codebooks exceeds the enumeration cap {cap}",
            size=total,
            cap=cap,
        )
    L = product_channel(W, n).rows
    q = product_vector(Q_U.probs, n)
    wts = src.weights()
    V = L.shape[1]
    chunk = max(1, min(total, (1 << 22) // max(1, M * V)))
    powers = K ** np.arange(M - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, chunk):
        ids = np.arange(start, min(total, start + chunk), dtype=np.int64)
        idx = (ids[:, None] // powers) % K
        prob = np.prod(q[idx], axis=1)
        keep = prob > 0
        if not keep.any():
            continue
        idx, prob = idx[keep], prob[keep]
        P = np.einsum("m,cmv->cv", wts, L[idx])
        yield prob, P


def exact_expected_divergence(
    Q_U: Pmf, W: ChannelMatrix, Q_V: Pmf, n: int, M: int, src: Optional[MessageSource] = None
) -> float:
    """E over codebooks of D(P_{V^n} || Q_V^n), by full enumeration."""
    with np.errstate(divide="ignore"):
        logq = np.log2(product_vector(Q_V.probs, n))
    total = 0.0
    for prob, P in enumerate_codebooks(Q_U, W, n, M, src):
        bad = np.any((P > 0) & ~np.isfinite(logq), axis=1)
        if bad.any():
            return math.inf
        total += float(prob @ _row_divergence(P, logq))
    return max(0.0, total)


def codebook_output_mutual_information(
    Q_U: Pmf, W: ChannelMatrix, Q_V: Pmf, n: int, M: int, src: Optional[MessageSource] = None
) -> float:
    """I(C; V^n) = H(V^n) - H(V^n | C) with the V^n marginal taken from the ensemble.

    ``Q_V`` only fixes the output alphabet; the marginal is recomputed from the
    enumeration so this path never consults the product target.
    """
    if Q_V.size != W.n_outputs:
        raise ValidationError("target alphabet does not match channel outputs")
    marginal = np.zeros(W.n_outputs**n)
    cond = 0.0
    for prob, P in enumerate_codebooks(Q_U, W, n, M, src):
        marginal += prob @ P
        with np.errstate(divide="ignore", invalid="ignore"):
            h = -np.where(P > 0, P * np.log2(np.where(P > 0, P, 1.0)), 0.0).sum(axis=1)
        cond += float(prob @ h)
    m = marginal[marginal > 0]
    return max(0.0, float(-(m * np.log2(m)).sum()) - cond)


# ------------------------------------------------------------ Monte Carlo


@dataclass
class MonteCarloEstimate:
    mean: float
    stderr: float
    trials: int
    seed: int
    samples: Optional[np.ndarray] = field(default=None, repr=False)


def monte_carlo_expected_divergence(
    Q_U: Pmf,
    W: ChannelMatrix,
    Q_V: Pmf,
    n: int,
    M: int,
    src: Optional[MessageSource] = None,
    trials: int = 1000,
    seed: int = 0,
    *,
    workers: int = 1,
    keep_samples: bool = False,
) -> MonteCarloEstimate:
    """Sample mean and standard error of D over independently seeded codebooks.

    Trial t draws its codebook from ``trial_generator(seed, t)``; results are
    collected in trial order, so the estimate does not depend on ``workers``.
    """
    if trials < 1:
        raise ValidationError("trials must be at least 1")
    src = _source(src, M)
    check_cap(W.n_outputs, n, what="output sequence space")
    with np.errstate(divide="ignore"):
        logq = np.log2(product_vector(Q_V.probs, n))
    wts = src.weights()

    def one(t: int) -> float:
        C = sample_codebook(Q_U, n, M, trial_generator(seed, t))
        P = mixture_output(C.words, wts, W)
        if np.any((P > 0) & ~np.isfinite(logq)):
            return math.inf
        return max(0.0, float(_row_divergence(P[None, :], logq)[0]))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            samples = np.fromiter(pool.map(one, range(trials)), float, count=trials)
    else:
        samples = np.fromiter((one(t) for t in range(trials)), float, count=trials)

    bad = np.flatnonzero(~np.isfinite(samples))
    if bad.size:
        raise InfiniteDivergenceError(
            f"trial {bad[0]} drew a codeword outside the support of the target; "
            "the induced distribution is not absolutely continuous w.r.t. Q_V^n",
            trial=int(bad[0]),
        )
    mean = float(samples.mean())
    stderr = float(samples.std(ddof=1) / math.sqrt(trials)) if trials > 1 else math.nan
    return MonteCarloEstimate(mean, stderr, trials, int(seed), samples if keep_samples else None)


# ------------------------------------------------------ d-term decomposition


@dataclass
class DivergenceDecomposition:
    """Typical/atypical split of the upper-bound integrand log2(P(w) r + 1).

    Exact terms are None when the type enumeration is over its cap.
    ``total`` bounds E[D] from above; it is not equal to it.
    """

    d1: Optional[float]
    d2: Optional[float]
    d3: Optional[float]
    total: Optional[float]
    d1_bound: float
    d2_bound: float
    d3_bound: float
    rate: float
    delta_eps: float
    rate_condition: bool

    @property
    def bounds(self) -> dict:
        return {"d1_bound": self.d1_bound, "d2_bound": self.d2_bound, "d3_bound": self.d3_bound}


def _log2_one_plus_pow2(x: float) -> float:
    """log2(1 + 2**x) without overflow."""
    return float(np.logaddexp2(0.0, x))


def _bit_types(src: MessageSource, epsilon: float):
    """(log P(w), log count, typical flag) per number of zero bits; uniform is one class."""
    if src.kind == "uniform":
        return np.array([-math.log(src.M)]), np.array([math.log(src.M)]), np.array([True])
    b, p = src.bits, src.p
    z = np.arange(b + 1)
    logp = z * math.log(p) + (b - z) * math.log1p(-p)
    logc = log_multinomial(np.column_stack([z, b - z]))
    typ = counts_typical(np.column_stack([z, b - z]), np.array([p, 1 - p]), epsilon) if b else np.array([True])
    return logp, logc, typ


def decompose_divergence_bound(
    J: JointPmf, n: int, M: int, epsilon: float, src: Optional[MessageSource] = None,
    cap: int = MAX_STATES, exact: bool = True,
) -> DivergenceDecomposition:
    """Exact d-terms by type enumeration plus their closed-form bounds.

    The bit-stream d3 bound counts Hoeffding trials over the ``bits`` message
    bits rather than over n symbols.
    """
    src = _source(src, M)
    nu, nv = J.shape
    I = mutual_information(J)
    HV = entropy(J.marginal_v)
    mu_v, mu_uv = mu_constants(J)
    log2_inv_mu_n = n * math.log2(1.0 / mu_v) + math.log2(1.0 + mu_v**n)

    d2_bound = 2 * nv * nu * math.exp(-2 * n * epsilon**2 * mu_uv**2) * n * math.log2(1 / mu_v + 1)
    if src.kind == "uniform":
        R = math.log2(M) / n
        eff = R
        delta = 2 * epsilon * HV
        d3_bound = 0.0
    else:
        R = src.bits / n
        h2 = binary_entropy(src.p)
        eff = R * h2
        delta = epsilon * (2 * HV + R * h2)
        d3_bound = 4 * math.exp(-2 * src.bits * epsilon**2 * src.p**2) * log2_inv_mu_n
    d1_bound = LOG2E * 2.0 ** (-n * (eff - I - delta))

    exact = _exact_d_terms(J, n, epsilon, src, cap) if exact else None
    d1, d2, d3 = exact if exact is not None else (None, None, None)
    return DivergenceDecomposition(
        d1=d1,
        d2=d2,
        d3=d3,
        total=None if exact is None else d1 + d2 + d3,
        d1_bound=d1_bound,
        d2_bound=d2_bound,
        d3_bound=d3_bound,
        rate=R,
        delta_eps=delta,
        rate_condition=eff > I + delta,
    )


def _exact_d_terms(J: JointPmf, n: int, epsilon: float, src: MessageSource, cap: int):
    nu, nv = J.shape
    K = nu * nv
    n_types = math.comb(n + K - 1, K - 1)
    n_msg = 1 if src.kind == "uniform" else src.bits + 1
    if n_types * n_msg > cap:
        return None
    types = compositions(n, K)
    cells = J.table.ravel()
    in_supp = np.all((types == 0) | (cells > 0), axis=1)
    types = types[in_supp]
    typ = counts_typical(types, cells, epsilon)

    with np.errstate(divide="ignore", invalid="ignore"):
        log_cells = np.where(cells > 0, np.log(np.where(cells > 0, cells, 1.0)), 0.0)
        log_cond = np.where(cells > 0, np.log(J.channel.rows).ravel(), 0.0)
        log_qv = np.log(J.marginal_v.probs)
        v_counts = types.reshape(-1, nu, nv).sum(axis=1)
        log_qvn = np.where(v_counts > 0, v_counts * log_qv, 0.0).sum(axis=1)
    log_ratio = types @ log_cond - log_qvn
    log_weight = log_multinomial(types) + types @ log_cells
    weight = np.exp(log_weight)

    log_pw, log_cnt, w_typ = _bit_types(src, epsilon)
    d = np.zeros(3)
    for lp, lc, wt in zip(log_pw, log_cnt, w_typ):
        integrand = np.logaddexp(lp + log_ratio, 0.0) / math.log(2)
        mass = math.exp(lp + lc)
        in_typ = float(weight[typ] @ integrand[typ])
        out_typ = float(weight[~typ] @ integrand[~typ])
        if wt:
            d[0] += mass * in_typ
            d[1] += mass * out_typ
        else:
            d[2] += mass * (in_typ + out_typ)
    return float(d[0]), float(d[1]), float(d[2])


def achievability_threshold(J: JointPmf, src: Optional[MessageSource] = None) -> float:
    """I(V;U) for uniform messages, I(V;U)/H2(p) for a bit-stream source."""
    I = mutual_information(J)
    if src is None or src.kind == "uniform":
        return I
    return I / binary_entropy(src.p)
