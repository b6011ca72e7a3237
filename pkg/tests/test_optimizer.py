import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from resolvlab.engine import BitStreamSource, UniformSource
from resolvlab.errors import InfeasibleTargetError, ValidationError
from resolvlab.hamming import ball_channel
from resolvlab.optimizer import (
    RateCertificate,
    Verdict,
    achievability_report,
    classify,
    feasibility,
    fit_decay,
    min_rate,
    parse_alpha,
    polytope_vertices,
)
from resolvlab import optimizer
from resolvlab.prob import ChannelMatrix, Pmf, entropy, joint_from, mutual_information, output_marginal

from conftest import H2_011, ONE_MINUS_H2_01


def random_channel(rng, nu, nv):
    return ChannelMatrix(rng.dirichlet(np.ones(nv) * 0.6, size=nu))


def lp_oracle(W, Q_V):
    """I = H(Q_V) - sum x_u H(W_u) is linear on the polytope; solve it directly."""
    rows = W.rows
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.where(rows > 0, rows * np.log2(np.where(rows > 0, rows, 1)), 0).sum(axis=1)
    A = np.vstack([rows.T, np.ones(W.n_inputs)])
    b = np.concatenate([Q_V.probs, [1.0]])
    res = linprog(-h, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    assert res.status == 0
    return entropy(Q_V) + res.fun


class TestFeasibility:
    def test_identity(self):
        f = feasibility(ChannelMatrix.identity(3), Pmf([0.2, 0.3, 0.5]))
        assert f.feasible
        np.testing.assert_allclose(f.witness.probs, [0.2, 0.3, 0.5], atol=1e-9)

    def test_constant_rows(self):
        W = ChannelMatrix([[0.3, 0.7], [0.3, 0.7]])
        f = feasibility(W, Pmf([0.5, 0.5]))
        assert not f.feasible
        assert f.residual == pytest.approx(0.2, abs=1e-9)
        assert f.worst_output in (0, 1)

    def test_bsc_uniform(self):
        f = feasibility(ChannelMatrix.bsc(0.1), Pmf.uniform(2))
        assert f
        np.testing.assert_allclose(f.witness.probs, 0.5, atol=1e-9)

    def test_bsc_outside_range(self):
        # x W has first coordinate in [0.1, 0.9]
        assert not feasibility(ChannelMatrix.bsc(0.1), Pmf([0.95, 0.05]))

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            feasibility(ChannelMatrix.identity(3), Pmf.uniform(2))


class TestMinRate:
    def test_identity_gives_entropy(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            q = Pmf(rng.dirichlet(np.ones(4)))
            cert = min_rate(ChannelMatrix.identity(4), q)
            assert cert.min_mutual_information == pytest.approx(entropy(q), abs=1e-10)

    def test_constant_rows_zero(self):
        r = [0.2, 0.5, 0.3]
        cert = min_rate(ChannelMatrix([r, r]), Pmf(r))
        assert cert.min_mutual_information == pytest.approx(0.0, abs=1e-12)

    def test_bsc_singleton(self):
        W = ChannelMatrix.bsc(0.1)
        assert len(polytope_vertices(W, Pmf.uniform(2))) == 1
        cert = min_rate(W, Pmf.uniform(2))
        assert cert.min_mutual_information == pytest.approx(ONE_MINUS_H2_01, abs=1e-9)
        np.testing.assert_allclose(cert.argmin_input.probs, 0.5, atol=1e-12)

    def test_infeasible(self):
        with pytest.raises(InfeasibleTargetError) as err:
            min_rate(ChannelMatrix([[0.3, 0.7], [0.3, 0.7]]), Pmf.uniform(2))
        assert err.value.residual > 0

    def test_picks_deterministic_vertex(self):
        # two identical inputs: both vertices score the same, smaller tuple wins
        W = ChannelMatrix([[1, 0], [1, 0], [0, 1]])
        cert = min_rate(W, Pmf([0.4, 0.6]))
        np.testing.assert_allclose(cert.argmin_input.probs, [0.0, 0.4, 0.6], atol=1e-12)

    @given(st.integers(0, 10**6), st.integers(2, 6), st.integers(2, 4))
    @settings(max_examples=60, deadline=None)
    def test_matches_lp_oracle(self, seed, nu, nv):
        rng = np.random.default_rng(seed)
        W = random_channel(rng, nu, nv)
        Q_V = output_marginal(Pmf(rng.dirichlet(np.ones(nu))), W)
        cert = min_rate(W, Q_V)
        assert cert.min_mutual_information == pytest.approx(lp_oracle(W, Q_V), abs=1e-8)
        np.testing.assert_allclose(cert.argmin_input.probs @ W.rows, Q_V.probs, atol=1e-8)
        assert cert.support_size <= nv
        assert cert.min_mutual_information >= 0

    @pytest.mark.parametrize("seed", range(5))
    def test_beats_random_feasible_inputs(self, seed):
        rng = np.random.default_rng(seed)
        W = random_channel(rng, 5, 3)
        Q_V = output_marginal(Pmf(rng.dirichlet(np.ones(5))), W)
        cert = min_rate(W, Q_V)
        verts = polytope_vertices(W, Q_V)
        for _ in range(100):
            lam = rng.dirichlet(np.ones(len(verts)))
            x = Pmf(np.clip(lam @ np.array(verts), 0, None))
            assert cert.min_mutual_information <= mutual_information(joint_from(x, W)) + 1e-12

    def test_invertible_square(self):
        rng = np.random.default_rng(7)
        W = random_channel(rng, 3, 3)
        x = Pmf(rng.dirichlet(np.ones(3)))
        cert = min_rate(W, output_marginal(x, W))
        assert cert.min_mutual_information == pytest.approx(mutual_information(joint_from(x, W)), abs=1e-12)

    def test_large_alphabet_uses_lp(self):
        rng = np.random.default_rng(3)
        W = random_channel(rng, 14, 3)
        Q_V = output_marginal(Pmf(rng.dirichlet(np.ones(14))), W)
        cert = min_rate(W, Q_V)
        assert cert.method == "lp"
        assert cert.support_size <= 3
        # same instance by brute vertex enumeration
        best = min(mutual_information(joint_from(Pmf(v), W)) for v in polytope_vertices(W, Q_V))
        assert cert.min_mutual_information == pytest.approx(best, abs=1e-9)

    def test_vertex_path_under_limit(self, monkeypatch):
        rng = np.random.default_rng(4)
        W = random_channel(rng, 6, 3)
        Q_V = output_marginal(Pmf.uniform(6), W)
        vertex = min_rate(W, Q_V)
        monkeypatch.setattr(optimizer, "VERTEX_ENUM_MAX_INPUTS", 0)
        lp = min_rate(W, Q_V)
        assert vertex.method == "vertex" and lp.method == "lp"
        assert vertex.min_mutual_information == pytest.approx(lp.min_mutual_information, abs=1e-9)

    def test_certificate_json(self):
        cert = min_rate(ChannelMatrix.bsc(0.1), Pmf.uniform(2))
        obj = cert.to_json()
        assert set(obj) == {"min_I_bits", "input_pmf", "support_size", "feasible"}
        back = RateCertificate.from_json(obj)
        assert back.min_mutual_information == cert.min_mutual_information
        assert back.argmin_input.probs.tolist() == cert.argmin_input.probs.tolist()


class TestAchievability:
    def test_classify(self):
        assert classify(1.0, 0.5) is Verdict.ACHIEVABLE
        assert classify(0.2, 0.5) is Verdict.NOT_ACHIEVABLE
        assert classify(0.5 + 1e-7, 0.5) is Verdict.BOUNDARY

    def test_hamming_boundary(self):
        rep = achievability_report(ball_channel(), Pmf.uniform(128), 4.0)
        assert rep.threshold == pytest.approx(4.0, abs=1e-9)
        assert rep.verdict is Verdict.BOUNDARY

    def test_zero_rate(self):
        rep = achievability_report(ChannelMatrix.bsc(0.1), Pmf.uniform(2), 0.0)
        assert rep.verdict is Verdict.NOT_ACHIEVABLE
        assert rep.margin == pytest.approx(-ONE_MINUS_H2_01, abs=1e-9)

    @pytest.mark.parametrize("R", [0.0, 0.3, 0.531, ONE_MINUS_H2_01, 0.6, 1.0])
    def test_half_bitstream_matches_uniform(self, R):
        W, q = ChannelMatrix.bsc(0.1), Pmf.uniform(2)
        u = achievability_report(W, q, R, UniformSource(4))
        b = achievability_report(W, q, R, BitStreamSource(2, 0.5))
        assert u.verdict is b.verdict and u.threshold == b.threshold

    @pytest.mark.parametrize("R", [0.5, 1.0, 1.0621, 1.2, 2.0])
    def test_bitstream_scaling(self, R):
        W, q = ChannelMatrix.bsc(0.1), Pmf.uniform(2)
        b = achievability_report(W, q, R, BitStreamSource(2, 0.11))
        u = achievability_report(W, q, R * H2_011)
        assert b.threshold == pytest.approx(ONE_MINUS_H2_01 / H2_011, abs=1e-9)
        if abs(R * H2_011 - ONE_MINUS_H2_01) > 1e-5:
            assert b.verdict is u.verdict

    def test_infeasible_propagates(self):
        with pytest.raises(InfeasibleTargetError):
            achievability_report(ChannelMatrix([[0.3, 0.7], [0.3, 0.7]]), Pmf.uniform(2), 1.0)


class TestFitDecay:
    def test_recovers_exact_exponent(self):
        pts = [(n, 3.0 * 2 ** (-0.37 * n), 0.0) for n in (4, 6, 8, 10, 12)]
        fit = fit_decay(pts)
        assert fit.beta_hat == pytest.approx(0.37, abs=1e-6)
        assert fit.c_hat == pytest.approx(3.0, rel=1e-6)
        assert fit.residual < 1e-9 and fit.reliable

    def test_alpha_scaled(self):
        pts = [(n, 2.0 ** (-n), 0.0) for n in (4, 8, 12, 16)]
        fit = fit_decay(pts, alpha="poly:2")
        assert fit.alpha_scaled == pytest.approx([n**2 * 2.0 ** (-n) for n in (4, 8, 12, 16)])
        assert fit.alpha_scaled_decreasing
        slow = [(n, 2.0 ** (-0.1 * n), 0.0) for n in (4, 8, 12, 16)]
        assert not fit_decay(slow, alpha=2).alpha_scaled_decreasing

    def test_unreliable_when_noisy(self):
        pts = [(4, 1.0, 0), (5, 0.01, 0), (6, 1.0, 0), (7, 0.01, 0)]
        assert not fit_decay(pts).reliable

    def test_rejects(self):
        with pytest.raises(ValidationError):
            fit_decay([(1, 0.5, 0), (2, 0.25, 0), (3, 0.1, 0)])
        with pytest.raises(ValidationError):
            fit_decay([(1, 0.5, 0), (2, 0.25, 0), (3, 0.0, 0), (4, 0.1, 0)])

    def test_parse_alpha(self):
        assert parse_alpha("poly:3")[1](2) == 8.0
        assert parse_alpha(2)[0] == "poly:2"
        assert parse_alpha("exp:0.5")[1](2) == pytest.approx(math.e)
        with pytest.raises(ValidationError):
            parse_alpha("log:2")
