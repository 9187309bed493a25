import math

import numpy as np
import pytest
from scipy.stats import norm

from trissm.analysis import abep_union_bound
from trissm.channel import REFERENCE_H_2X2
from trissm.constellation import make_psk, make_qam
from trissm.core import SystemConfig
from trissm.montecarlo import (
    CHUNK_TRIALS,
    SimResult,
    StopRule,
    _chunk_sizes,
    default_workers,
    simulate_ber,
    simulate_fixed_channel_ber,
)

SMALL = StopRule(min_bit_errors=10**9, max_trials=CHUNK_TRIALS, max_bits=None)


class TestStopRule:
    @pytest.mark.parametrize("kwargs", [dict(min_bit_errors=0), dict(max_trials=0), dict(max_bits=0), dict(max_bits=None)])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            StopRule(**kwargs)

    def test_done(self):
        s = StopRule(min_bit_errors=10, max_trials=100, max_bits=1000)
        assert not s.done(50, 9, 999)
        assert s.done(50, 10, 0) and s.done(100, 0, 0) and s.done(1, 0, 1000)

    def test_partial_last_chunk(self):
        sizes = list(_chunk_sizes(StopRule(max_trials=CHUNK_TRIALS + 5, max_bits=None)))
        assert sizes == [(0, CHUNK_TRIALS), (1, 5)]


class TestSimResult:
    def test_ci(self):
        r = SimResult.from_counts(0.0, 10, 25, 10_000)
        assert r.ber == 0.0025
        assert r.ci95_half_width == pytest.approx(1.96 * math.sqrt(0.0025 * 0.9975 / 10_000))

    def test_empty(self):
        assert SimResult.from_counts(0.0, 0, 0, 0).ber == 0.0


class TestWorkers:
    def test_env(self, monkeypatch):
        monkeypatch.setenv("TRISSM_WORKERS", "3")
        assert default_workers() == 3
        monkeypatch.delenv("TRISSM_WORKERS")
        assert default_workers() == 1

    def test_env_garbage(self, monkeypatch):
        monkeypatch.setenv("TRISSM_WORKERS", "many")
        with pytest.raises(ValueError):
            default_workers()


class TestSimulateBer:
    def test_guessing_floor(self):
        cfg = SystemConfig(2, 4, 1, 1)
        (r,) = simulate_ber(cfg, snr_grid=[-40.0], stop=SMALL, seed=3)
        assert r.ber == pytest.approx(0.5, abs=0.02)
        assert r.bits_total == CHUNK_TRIALS

    def test_worker_count_independent(self):
        cfg = SystemConfig(4, 2, 2, 4)
        stop = StopRule(min_bit_errors=300, max_trials=5 * CHUNK_TRIALS, max_bits=None)
        a = simulate_ber(cfg, snr_grid=[4.0, 8.0], stop=stop, seed=11, workers=1)
        b = simulate_ber(cfg, snr_grid=[4.0, 8.0], stop=stop, seed=11, workers=2)
        c = simulate_ber(cfg, snr_grid=[4.0, 8.0], stop=stop, seed=11, workers=8)
        assert a == b == c

    def test_seed_matters(self):
        cfg = SystemConfig(2, 2, 1, 2)
        a = simulate_ber(cfg, snr_grid=[0.0], stop=SMALL, seed=1)
        b = simulate_ber(cfg, snr_grid=[0.0], stop=SMALL, seed=2)
        assert a != b

    def test_stops_on_errors(self):
        cfg = SystemConfig(2, 2, 1, 2)
        (r,) = simulate_ber(cfg, snr_grid=[0.0], stop=StopRule(min_bit_errors=100), seed=1)
        assert r.trials == CHUNK_TRIALS and r.bit_errors >= 100

    def test_below_union_bound(self):
        cfg = SystemConfig(2, 2, 2, 4)
        res = simulate_ber(cfg, snr_grid=[0.0, 6.0], stop=SMALL, seed=5)
        for r in res:
            bound = abep_union_bound(cfg, rho=10 ** (r.snr_db / 10))
            assert r.ber <= bound + 3 * r.ci95_half_width


class TestFixedChannel:
    def test_single_column_is_coherent_bpsk(self):
        h = np.array([[0.8 - 0.3j], [0.2 + 0.5j]])
        snr_db = 3.0
        (r,) = simulate_fixed_channel_ber(h, [make_psk(2)], [snr_db], SMALL, seed=2)
        p = norm.sf(math.sqrt(2 * np.sum(np.abs(h) ** 2) * 10 ** (snr_db / 10)))
        assert abs(r.ber - p) < 4 * math.sqrt(p * (1 - p) / r.bits_total)

    def test_noiseless_limit(self):
        (r,) = simulate_fixed_channel_ber(REFERENCE_H_2X2, [make_psk(2), make_qam(8)], [150.0], SMALL, seed=0)
        assert r.bit_errors == 0

    def test_variable_rate_bit_count(self):
        (r,) = simulate_fixed_channel_ber(REFERENCE_H_2X2, [make_psk(2), make_qam(8)], [150.0], SMALL, seed=0)
        # 1 spatial bit plus 1 or 3 symbol bits, each column half the time
        assert r.bits_total / r.trials == pytest.approx(3.0, abs=0.02)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            simulate_fixed_channel_ber(REFERENCE_H_2X2, [make_psk(2)] * 3, [0.0], SMALL)
        with pytest.raises(ValueError):
            simulate_fixed_channel_ber(np.ones((2, 3)), make_psk(2), [0.0], SMALL)

    def test_deterministic(self):
        args = (REFERENCE_H_2X2, make_psk(4), [0.0, 10.0], StopRule(min_bit_errors=50, max_trials=3 * CHUNK_TRIALS, max_bits=None))
        assert simulate_fixed_channel_ber(*args, seed=4, workers=1) == simulate_fixed_channel_ber(*args, seed=4, workers=3)


class TestChannelDraw:
    def test_per_unit_draw_agrees(self):
        cfg = SystemConfig(4, 4, 2, 2)
        stop = StopRule(min_bit_errors=10**9, max_trials=2 * CHUNK_TRIALS, max_bits=None)
        (a,) = simulate_ber(cfg, snr_grid=[2.0], stop=stop, seed=8)
        (b,) = simulate_ber(cfg, snr_grid=[2.0], stop=stop, seed=8, per_unit=True)
        assert a != b
        assert abs(a.ber - b.ber) < 1.5 * (a.ci95_half_width + b.ci95_half_width)
