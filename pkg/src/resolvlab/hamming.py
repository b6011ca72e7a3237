"""The (7,4) Hamming code driven through the radius-1 ball channel.

The channel acts on 7-bit tuples (integers 0..127): each input goes to
itself or to one of its 7 single-bit flips with probability 1/8. The code
is perfect, so the balls around its 16 codewords tile all 128 outputs and
a uniformly chosen codeword produces an exactly uniform output.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np

from .engine import Codebook, UniformSource, divergence_to_target, induced_output_probs
from .prob import ChannelMatrix, Pmf, joint_from, mutual_information

N_BITS = 7
N_TUPLES = 2**N_BITS

# systematic generator, rows are the images of the 4 data bits
GENERATOR = np.array(
    [
        [1, 0, 0, 0, 1, 1, 0],
        [0, 1, 0, 0, 1, 0, 1],
        [0, 0, 1, 0, 0, 1, 1],
        [0, 0, 0, 1, 1, 1, 1],
    ],
    dtype=np.int64,
)


def bits_to_int(bits) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def hamming_codewords() -> np.ndarray:
    """The 16 codewords as 7-bit integers, in data-word order."""
    data = np.array([[(d >> (3 - i)) & 1 for i in range(4)] for d in range(16)])
    words = data @ GENERATOR % 2
    return np.array([bits_to_int(w) for w in words])


def minimum_distance(words) -> int:
    words = list(words)
    return min(
        bin(a ^ b).count("1") for i, a in enumerate(words) for b in words[i + 1:]
    )


def ball_channel() -> ChannelMatrix:
    rows = np.zeros((N_TUPLES, N_TUPLES))
    for u in range(N_TUPLES):
        rows[u, u] = 1 / 8
        for i in range(N_BITS):
            rows[u, u ^ (1 << i)] = 1 / 8
    return ChannelMatrix(rows)


@dataclass
class HammingReport:
    n_codewords: int
    min_distance: int
    n_outputs: int
    max_deviation: float
    max_min_gap: float
    divergence_bits: float
    mutual_information_bits: float
    threshold_bits: float
    rate_bits_per_bit: float
    uniform: bool
    seconds: float

    def to_json(self) -> dict:
        return asdict(self)


def hamming_report() -> HammingReport:
    t0 = time.perf_counter()
    words = hamming_codewords()
    W = ball_channel()
    C = Codebook(words[:, None])
    p = induced_output_probs(C, W, UniformSource(16))
    target = Pmf.uniform(N_TUPLES)
    D = divergence_to_target(C, W, UniformSource(16), target)
    q_u = np.zeros(N_TUPLES)
    q_u[words] = 1 / 16
    I = mutual_information(joint_from(Pmf(q_u), W))
    dev = float(np.abs(p - 1 / N_TUPLES).max())
    return HammingReport(
        n_codewords=len(words),
        min_distance=minimum_distance(words),
        n_outputs=N_TUPLES,
        max_deviation=dev,
        max_min_gap=float(p.max() - p.min()),
        divergence_bits=D,
        mutual_information_bits=I,
        threshold_bits=I,
        rate_bits_per_bit=I / N_BITS,
        uniform=dev < 1e-12,
        seconds=time.perf_counter() - t0,
    )
