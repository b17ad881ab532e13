import math

import numpy as np
import pytest

from swiptrb import altbeams as ab
from swiptrb import analytic as an
from swiptrb.analytic import Source, SwitchPolicy
from swiptrb.channel import (BeamKind, BeamScheme, ChannelRealization, RngStream, SystemParams,
                             draw_subblock_power, stream_id_for)
from swiptrb.mcsim import (Estimate, McConfig, block_power_given_channel, estimate_avg_re,
                           estimate_block_re, estimate_power_outage, estimate_rate_scaling)
from swiptrb.specfun import DomainError

P2 = SystemParams(1.0, 2, 1e-4, 1e-7, 0.5)
P4 = SystemParams(1.0, 4, 1e-4, 1e-7, 0.5)
GAUSS1 = BeamScheme(BeamKind.GAUSSIAN, 1)
GAUSS2 = BeamScheme(BeamKind.GAUSSIAN, 2)


def within(est_mean, stderr, ref, k=3.0):
    return abs(est_mean - ref) <= k * stderr


class TestConfig:
    def test_defaults(self):
        cfg = McConfig()
        assert cfg.n_subblock_draws == 1 and cfg.worker_count == 1

    @pytest.mark.parametrize("field", ["n_channel_draws", "n_subblock_draws", "worker_count", "chunk_size"])
    def test_rejects_zero(self, field):
        with pytest.raises(DomainError):
            McConfig(**{field: 0})

    def test_rows_per_chunk(self):
        assert McConfig(n_subblock_draws=16, chunk_size=1024).rows_per_chunk() == 64


class TestEstimate:
    def test_from_samples(self):
        x = np.array([1.0, 2.0, 3.0, 6.0])
        e = Estimate.from_samples(x)
        assert e.mean == pytest.approx(3.0)
        assert e.stderr == pytest.approx(x.std(ddof=1) / 2)
        assert e.n == 4

    def test_stderr_consistent_with_sums(self):
        x = np.random.default_rng(1).normal(size=1000)
        e = Estimate.from_samples(x)
        var = (e.total_sq - e.total ** 2 / e.n) / (e.n - 1)
        assert e.stderr == pytest.approx(math.sqrt(var / e.n), rel=1e-9)

    def test_merge(self):
        x = np.random.default_rng(2).normal(size=300)
        whole = Estimate.from_samples(x)
        parts = Estimate.from_samples(x[:100]).merge(Estimate.from_samples(x[100:]))
        assert parts.mean == pytest.approx(whole.mean, rel=1e-12)
        assert parts.stderr == pytest.approx(whole.stderr, rel=1e-9)

    def test_single_sample(self):
        assert Estimate.from_samples([2.0]).stderr == math.inf

    def test_empty(self):
        with pytest.raises(DomainError):
            Estimate.from_sums(0.0, 0.0, 0)

    def test_zscore(self):
        e = Estimate.from_sums(10.0, 30.0, 5)
        assert e.zscore(e.mean + 2 * e.stderr) == pytest.approx(2.0)


class TestBlockEstimates:
    chan = ChannelRealization.from_h([math.sqrt(4 * 0.7), 0, 0, 0])   # h = 0.7

    def test_zero_threshold(self):
        cfg = McConfig(n_subblock_draws=200_000)
        r = estimate_block_re(P4, GAUSS2, SwitchPolicy.ts(0.0), self.chan, cfg)
        assert r.rate == 0.0
        assert within(r.power, r.stderr_power, 0.5e-4 * 0.7)
        assert r.source is Source.MONTE_CARLO

    def test_gaussian_matches_analytic(self):
        cfg = McConfig(n_subblock_draws=1_000_000, base_seed=3)
        r = estimate_block_re(P4, GAUSS2, SwitchPolicy.ts(0.5), self.chan, cfg)
        assert within(r.rate, r.stderr_rate, an.ts_rate_quadrature(P4, 0.7, 2, 0.5))
        assert within(r.power, r.stderr_power, an.ts_power(P4, 0.7, 2, 0.5))

    def test_ps_exact(self):
        r = estimate_block_re(P4, GAUSS1, SwitchPolicy.ps(0.3), self.chan, McConfig())
        assert r.rate == pytest.approx(an.ps_rate(P4, 0.7, 0.3), rel=1e-14)
        assert r.power == pytest.approx(an.ps_power(P4, 0.7, 0.3), rel=1e-14)

    def test_conservation(self):
        # Sub-block powers split between the two modes without loss.
        cfg = McConfig(n_subblock_draws=50_000, base_seed=4)
        full = estimate_block_re(P4, GAUSS1, SwitchPolicy.ts(0.0), self.chan, cfg).power
        part = estimate_block_re(P4, GAUSS1, SwitchPolicy.ts(0.6), self.chan, cfg).power
        a = draw_subblock_power(GAUSS1, self.chan, RngStream(4, stream_id_for("block", "gaussian", 1)),
                                size=50_000)
        decoded = 0.5e-4 * np.where(a <= 0.6, a, 0.0).mean()
        assert part + decoded == pytest.approx(full, rel=1e-12)

    def test_stderr_halves_when_samples_quadruple(self):
        pol = SwitchPolicy.ts(0.5)
        s1 = estimate_block_re(P4, GAUSS2, pol, self.chan, McConfig(n_subblock_draws=40_000)).stderr_power
        s4 = estimate_block_re(P4, GAUSS2, pol, self.chan, McConfig(n_subblock_draws=160_000)).stderr_power
        assert s1 / s4 == pytest.approx(2.0, rel=0.2)


class TestAverages:
    def test_gaussian_power_scaling(self):
        cfg = McConfig(n_channel_draws=400_000, base_seed=5)
        r = estimate_avg_re(P4, GAUSS1, SwitchPolicy.ts(1.0), cfg)
        assert within(r.power / 0.5e-4, r.stderr_power / 0.5e-4, an.ts_power_scaling(4, 1, 1.0))
        assert within(r.rate, r.stderr_rate, an.ts_avg_rate(P4, 1, 1.0))

    def test_unitary(self):
        cfg = McConfig(n_channel_draws=400_000, base_seed=6)
        r = estimate_avg_re(P2, BeamScheme(BeamKind.UNITARY, 1), SwitchPolicy.ts(0.5), cfg)
        assert within(r.rate, r.stderr_rate, ab.urb_avg_rate(P2, 0.5))
        assert within(r.power, r.stderr_power, ab.urb_avg_power(P2, 0.5))

    def test_ps(self):
        cfg = McConfig(n_channel_draws=400_000, base_seed=7)
        r = estimate_avg_re(P2, GAUSS1, SwitchPolicy.ps(0.5), cfg)
        assert within(r.rate, r.stderr_rate, an.ps_avg_rate(P2, 0.5))
        assert within(r.power, r.stderr_power, an.ps_avg_power(P2, 0.5))

    def test_many_subblocks(self):
        cfg = McConfig(n_channel_draws=50_000, n_subblock_draws=8, base_seed=8)
        r = estimate_avg_re(P4, GAUSS2, SwitchPolicy.ts(0.8), cfg)
        assert within(r.power, r.stderr_power, an.ts_avg_power(P4, 2, 0.8))

    def test_worker_count_invariance(self):
        base = dict(n_channel_draws=200_000, base_seed=9, chunk_size=1 << 14)
        ref = estimate_avg_re(P4, GAUSS2, SwitchPolicy.ts(0.5), McConfig(worker_count=1, **base))
        for w in (4, 16):
            got = estimate_avg_re(P4, GAUSS2, SwitchPolicy.ts(0.5), McConfig(worker_count=w, **base))
            assert got == ref

    def test_seed_changes_result(self):
        a = estimate_avg_re(P4, GAUSS1, SwitchPolicy.ts(0.5), McConfig(n_channel_draws=1000, base_seed=1))
        b = estimate_avg_re(P4, GAUSS1, SwitchPolicy.ts(0.5), McConfig(n_channel_draws=1000, base_seed=2))
        assert a.rate != b.rate

    def test_scheme_mismatch(self):
        with pytest.raises(DomainError):
            estimate_avg_re(P2, BeamScheme(BeamKind.GAUSSIAN, 3), SwitchPolicy.ts(0.5), McConfig())


class TestOutage:
    def test_zero_requirement(self):
        est = estimate_power_outage(P4, GAUSS1, SwitchPolicy.ts(0.5), 0.0, McConfig(n_channel_draws=10))
        assert est.mean == 0.0

    def test_gaussian(self):
        cfg = McConfig(n_channel_draws=400_000, base_seed=10)
        est = estimate_power_outage(P4, GAUSS2, SwitchPolicy.ts(1.0), 1e-5, cfg)
        assert within(est.mean, est.stderr, an.ts_outage_exact(P4, 2, 1.0, 1e-5))

    def test_binary(self):
        cfg = McConfig(n_channel_draws=400_000, base_seed=11)
        est = estimate_power_outage(P2, BeamScheme(BeamKind.BINARY, 1), SwitchPolicy.ts(0.3), 2e-5, cfg)
        assert within(est.mean, est.stderr, ab.brb_outage(P2, 0.3, 2e-5))

    def test_sampling_fallback_close_to_exact(self):
        # Four-antenna unit beams have no closed form; sub-block averaging stands in.
        g = np.random.default_rng(12)
        h = (g.normal(size=(200, 4)) + 1j * g.normal(size=(200, 4))) / math.sqrt(2)
        q = block_power_given_channel(P4, BeamScheme(BeamKind.UNITARY, 1), SwitchPolicy.ts(0.0), h, g, 4000)
        cap = (np.abs(h) ** 2).sum(axis=1) / 4
        np.testing.assert_allclose(q, 0.5e-4 * cap, rtol=0.1)

    def test_fallback_needs_generator(self):
        h = np.ones((3, 4), dtype=complex)
        with pytest.raises(DomainError):
            block_power_given_channel(P4, BeamScheme(BeamKind.UNITARY, 1), SwitchPolicy.ts(0.5), h)


class TestRateScaling:
    grid = [10.0 ** k for k in range(0, 9)]
    cfg = McConfig(n_channel_draws=100_000, base_seed=13)

    def test_ps(self):
        s = estimate_rate_scaling(P4, GAUSS1, SwitchPolicy.ps(0.4), self.cfg, self.grid)
        assert s == pytest.approx(0.4, abs=0.02)

    def test_ts_gaussian(self):
        s = estimate_rate_scaling(P4, GAUSS1, SwitchPolicy.ts(1.0), self.cfg, self.grid)
        assert s == pytest.approx(an.ts_rate_scaling(4, 1, 1.0), abs=0.02)

    def test_all_information(self):
        s = estimate_rate_scaling(P4, GAUSS1, SwitchPolicy.ts(math.inf), self.cfg, self.grid)
        assert s == pytest.approx(1.0, abs=0.02)

    def test_grid_too_narrow(self):
        with pytest.raises(DomainError):
            estimate_rate_scaling(P4, GAUSS1, SwitchPolicy.ps(0.4), self.cfg, [1.0, 10.0, 100.0])
