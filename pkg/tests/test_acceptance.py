"""Acceptance criteria 1-10, each at its stated tolerance.

Every test prints one ``criterion N: PASS|FAIL`` line with the measured
numbers before asserting, so ``pytest -s`` (or running this file directly)
gives the summary table.
"""

import math
import time

import numpy as np
import pytest
from scipy.optimize import brentq

from resolvlab.commands import cmd_hamming
from resolvlab.engine import (
    BitStreamSource,
    UniformSource,
    achievability_threshold,
    codebook_output_mutual_information,
    decompose_divergence_bound,
    exact_expected_divergence,
    induced_output_probs,
    monte_carlo_expected_divergence,
    sample_codebook,
)
from resolvlab.gallager import (
    divergence_bound_via_exponent,
    e0_blocklength,
    e0_blocklength_curve,
    e0_single_letter,
    gallager_exponent,
    lemma2_bound,
    one_sided_slope,
    single_letter_curve,
)
from resolvlab.optimizer import achievability_report, fit_decay, min_rate
from resolvlab.prob import (
    ChannelMatrix,
    Pmf,
    binary_entropy,
    entropy,
    joint_from,
    kl_divergence,
    mutual_information,
    total_variation,
)

from conftest import ONE_MINUS_H2_01, fixed_channels, random_joints

GRID21 = np.linspace(-0.5, 0.0, 21)
NM = [(n, M) for n in (1, 2, 3) for M in (1, 2, 3)]


def report(number, ok, detail):
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"criterion {number}: {detail}"


def relative_gap(got, want, floor=1e-9):
    """Relative error, or 0/inf against an absolute floor when ``want`` is 0."""
    if abs(want) > floor:
        return abs(got - want) / abs(want)
    return 0.0 if abs(got - want) <= floor else math.inf


def fixed_joints():
    return {name: joint_from(Pmf.uniform(2), W) for name, W in fixed_channels().items()}


def all_joints():
    return list(fixed_joints().values()) + random_joints(50)


def bsc_with_information(target_I):
    """Uniform-input BSC whose mutual information is ``target_I`` bits."""
    q = brentq(lambda x: 1 - binary_entropy(x) - target_I, 1e-9, 0.5)
    W = ChannelMatrix.bsc(q)
    return Pmf.uniform(2), W, joint_from(Pmf.uniform(2), W)


def decay_sweep(Q_U, W, ns, source_for, trials=2000, seed=20240601):
    pts = []
    for n in ns:
        src = source_for(n)
        est = monte_carlo_expected_divergence(Q_U, W, Pmf.uniform(2), n, src.M, src, trials, seed)
        pts.append((n, est.mean, est.stderr))
    return pts


def decay_checks(pts):
    by_n = {n: (m, s) for n, m, s in pts}
    (m4, s4), (m12, s12) = by_n[4], by_n[12]
    gap = (m4 - m12) / math.hypot(s4, s12)
    fit = fit_decay(pts, alpha="poly:2")
    scaled = {n: n**2 * by_n[n][0] for n in (4, 8, 12)}
    decreasing = scaled[4] > scaled[8] > scaled[12]
    return gap, fit, scaled, decreasing


def test_criterion_1_hamming_exactness():
    t0 = time.perf_counter()
    rep = cmd_hamming()
    secs = time.perf_counter() - t0
    ok = (
        rep["n_outputs"] == 128
        and rep["max_deviation"] < 1e-12
        and rep["divergence_bits"] < 1e-12
        and abs(rep["mutual_information_bits"] - 4.0) <= 1e-10
        and secs < 1.0
    )
    report(1, ok, f"max_dev={rep['max_deviation']:.2e} D={rep['divergence_bits']:.2e} "
                  f"I={rep['mutual_information_bits']!r} t={secs:.3f}s")


def test_criterion_2_oracle_identity():
    t0 = time.perf_counter()
    worst, count = 0.0, 0
    for W in fixed_channels().values():
        for Q_U in (Pmf.uniform(2), Pmf([0.35, 0.65])):
            Q_V = Pmf(Q_U.probs @ W.rows)
            for n, M in NM:
                if 2 ** (n * M) > 10**4:
                    continue
                args = (Q_U, W, Q_V, n, M)
                worst = max(worst, abs(exact_expected_divergence(*args) - codebook_output_mutual_information(*args)))
                count += 1
    secs = time.perf_counter() - t0
    report(2, worst <= 1e-10 and secs < 10, f"instances={count} max|E[D]-I(C;V)|={worst:.2e} t={secs:.2f}s")


def test_criterion_3_gallager_properties():
    zero_err = slope_err = 0.0
    min_second = math.inf
    for J in all_joints():
        Q_U, W = J.marginal_u, J.channel
        zero_err = max(zero_err, abs(e0_single_letter(0.0, J)))
        I = mutual_information(J)
        s = one_sided_slope(lambda r: e0_single_letter(r, J))
        slope_err = max(slope_err, relative_gap(s, -I))
        min_second = min(min_second, single_letter_curve(J, GRID21).second_differences().min())
        for n, M in [(1, 2), (2, 2), (3, 2), (2, 3)]:
            zero_err = max(zero_err, abs(e0_blocklength(0.0, Q_U, W, n, M)))
            ed = exact_expected_divergence(Q_U, W, J.marginal_v, n, M)
            sb = one_sided_slope(lambda r: e0_blocklength(r, Q_U, W, n, M))
            slope_err = max(slope_err, relative_gap(sb, -ed))
            curve = e0_blocklength_curve(GRID21, Q_U, W, n, M)
            min_second = min(min_second, np.diff(curve, 2).min())
    ok = zero_err <= 1e-12 and slope_err <= 1e-3 and min_second >= -1e-8
    report(3, ok, f"|E0(0)|max={zero_err:.1e} slope_rel_err={slope_err:.2e} min_2nd_diff={min_second:.2e}")


def test_criterion_4_lemma2_bound():
    worst_lemma = math.inf
    for J in random_joints(50):
        for n, M in NM:
            R = math.log2(M) / n
            curve = e0_blocklength_curve(GRID21, J.marginal_u, J.channel, n, M)
            worst_lemma = min(worst_lemma, (lemma2_bound(R, J, n) - curve).min())
    worst_div, where = math.inf, None
    for name, J in list(fixed_joints().items()) + [(f"rand{i}", J) for i, J in enumerate(random_joints(50))]:
        for n, M in NM:
            R = math.log2(M) / n
            ed = exact_expected_divergence(J.marginal_u, J.channel, J.marginal_v, n, M)
            slack = divergence_bound_via_exponent(R, J, n, -0.5) - ed
            if slack < worst_div:
                worst_div, where = slack, (name, n, M, ed)
    ok = worst_lemma >= -1e-9 and worst_div >= -1e-9
    report(4, ok, f"lemma2 min slack={worst_lemma:.3e}; E[D] bound min slack={worst_div:.3e} "
                  f"at (channel, n, M, E[D])={where}")


def test_criterion_5_sign_dichotomy():
    worst_below, worst_above = 0.0, -math.inf
    for J in random_joints(50):
        I = mutual_information(J)
        worst_below = max(worst_below, abs(gallager_exponent(max(I - 0.1, 0.0), J).E_G))
        worst_above = max(worst_above, gallager_exponent(I + 0.1, J).E_G)
    ok = worst_below <= 1e-9 and worst_above < -1e-6
    report(5, ok, f"max|E_G(I-0.1)|={worst_below:.1e} max E_G(I+0.1)={worst_above:.3e}")


@pytest.mark.slow
def test_criterion_6_decay_trend():
    t0 = time.perf_counter()
    Q_U, W, J = bsc_with_information(0.2)
    R = mutual_information(J) + 0.3
    pts = decay_sweep(Q_U, W, (4, 6, 8, 10, 12), lambda n: UniformSource(2 ** round(n * R)))
    gap, fit, scaled, decreasing = decay_checks(pts)
    secs = time.perf_counter() - t0
    ok = gap > 3 and fit.beta_hat > 0 and decreasing and secs < 120
    means = ", ".join(f"n={n}:{m:.4f}±{s:.4f}" for n, m, s in pts)
    report(6, ok, f"R={R:.3f} {means}; gap={gap:.1f} sigma beta_hat={fit.beta_hat:.4f} "
                  f"resid={fit.residual:.3f} n^2*mean={[round(v, 3) for v in scaled.values()]} "
                  f"decreasing={decreasing} t={secs:.1f}s")


@pytest.mark.slow
def test_criterion_7_nonuniform_source():
    W = ChannelMatrix.bsc(0.1)
    identical = all(
        np.array_equal(
            induced_output_probs(C, W, UniformSource(2**b)),
            induced_output_probs(C, W, BitStreamSource(b, 0.5)),
        )
        for b in (1, 2, 3, 5)
        for C in (sample_codebook(Pmf.uniform(2), 6, 2**b, seed=s) for s in range(5))
    )
    p = 0.11
    Q_U, W, J = bsc_with_information(0.2 * binary_entropy(p))
    threshold = achievability_threshold(J, BitStreamSource(4, p))
    rep_threshold = achievability_report(W, Pmf.uniform(2), 0.5, BitStreamSource(4, p)).threshold
    thr_err = max(abs(threshold - mutual_information(J) / binary_entropy(p)),
                  abs(rep_threshold - mutual_information(J) / binary_entropy(p)))
    R = threshold + 0.3
    pts = decay_sweep(Q_U, W, (4, 6, 8, 10, 12), lambda n: BitStreamSource(round(n * R), p))
    gap, fit, scaled, decreasing = decay_checks(pts)
    ok = identical and thr_err <= 1e-9 and gap > 3 and fit.beta_hat > 0 and decreasing
    means = ", ".join(f"n={n}:{m:.4f}" for n, m, _ in pts)
    report(7, ok, f"bitwise={identical} threshold_err={thr_err:.1e} R={R:.3f} {means}; gap={gap:.1f} sigma "
                  f"beta_hat={fit.beta_hat:.4f} n^2*mean={[round(v, 3) for v in scaled.values()]} "
                  f"decreasing={decreasing}")


def test_criterion_8_pinsker():
    rng = np.random.default_rng(8)
    worst = math.inf
    for _ in range(1000):
        k = int(rng.integers(2, 8))
        P, Q = Pmf(rng.dirichlet(np.ones(k))), Pmf(rng.dirichlet(np.ones(k)))
        worst = min(worst, kl_divergence(P, Q) - total_variation(P, Q) ** 2 / (2 * math.log(2)))
    report(8, worst >= -1e-12, f"min slack over 1000 pairs={worst:.3e}")


def test_criterion_9_optimizer():
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(20):
        q = Pmf(rng.dirichlet(np.ones(int(rng.integers(2, 7)))))
        worst = max(worst, abs(min_rate(ChannelMatrix.identity(q.size), q).min_mutual_information - entropy(q)))
    bsc = min_rate(ChannelMatrix.bsc(0.1), Pmf.uniform(2)).min_mutual_information
    ok = worst <= 1e-10 and abs(bsc - ONE_MINUS_H2_01) <= 1e-9
    report(9, ok, f"identity max err={worst:.1e} BSC err={abs(bsc - ONE_MINUS_H2_01):.1e}")


def test_criterion_10_bound_domination():
    worst1 = worst2 = math.inf
    count = 0
    for J in all_joints():
        for n in range(1, 9):
            for bits in range(1, 3 * n + 1):
                for eps in (0.02, 0.05, 0.1, 0.2):
                    dec = decompose_divergence_bound(J, n, 2**bits, eps)
                    if not dec.rate_condition:
                        continue
                    count += 1
                    worst1 = min(worst1, dec.d1_bound - dec.d1)
                    worst2 = min(worst2, dec.d2_bound - dec.d2)
    ok = count > 0 and worst1 >= -1e-9 and worst2 >= -1e-9
    report(10, ok, f"instances={count} min(d1_bound-d1)={worst1:.3e} min(d2_bound-d2)={worst2:.3e}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-s", "-q", "-p", "no:cacheprovider"]))
