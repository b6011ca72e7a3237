import math

import numpy as np
import pytest

from resolvlab.prob import ChannelMatrix, JointPmf, Pmf, joint_from

H2_011 = 0.49991595816452799564  # -p log2 p - (1-p) log2(1-p) at p=0.11, 40-digit mpmath
ONE_MINUS_H2_01 = 0.53100440641071877875  # 1 - H2(0.1), 40-digit mpmath


def random_joints(count, seed=20240601, shape=(2, 2)):
    """Seeded Dirichlet(1) joints over a small product alphabet."""
    rng = np.random.default_rng(seed)
    return [JointPmf(rng.dirichlet(np.ones(shape[0] * shape[1])).reshape(shape)) for _ in range(count)]


def fixed_channels():
    return {
        "identity": ChannelMatrix.identity(2),
        "bsc": ChannelMatrix.bsc(0.1),
        "ignoring": ChannelMatrix([[0.3, 0.7], [0.3, 0.7]]),
    }


def brute_force_expected_divergence(Q_U, W, Q_V, n, M, weights=None):
    """Literal nested-loop E[D]: every codebook, every output sequence, no numpy shortcuts."""
    import itertools

    k, kv = Q_U.size, W.n_outputs
    seqs = list(itertools.product(range(k), repeat=n))
    outs = list(itertools.product(range(kv), repeat=n))
    weights = [1.0 / M] * M if weights is None else list(weights)

    def lik(v, u):
        return math.prod(W.rows[a, b] for a, b in zip(u, v))

    def qv(v):
        return math.prod(Q_V.probs[b] for b in v)

    total = 0.0
    for book in itertools.product(seqs, repeat=M):
        pc = math.prod(math.prod(Q_U.probs[a] for a in u) for u in book)
        if pc == 0:
            continue
        d = 0.0
        for v in outs:
            p = sum(wt * lik(v, u) for wt, u in zip(weights, book))
            if p > 0:
                d += p * math.log2(p / qv(v))
        total += pc * d
    return total


@pytest.fixture
def bsc01_uniform():
    W = ChannelMatrix.bsc(0.1)
    return Pmf.uniform(2), W, joint_from(Pmf.uniform(2), W)
