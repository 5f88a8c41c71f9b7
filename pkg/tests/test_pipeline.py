from datetime import datetime, timedelta

import numpy as np
import pytest

from evhc.pipeline import (
    ChargingTransaction,
    CleaningRules,
    SLOTS_PER_DAY,
    SynthSpec,
    aggregate,
    base_profile,
    clean_transactions,
    denormalize,
    metrics,
    normalize,
    spatial_noise,
    synth_generate,
    window_and_split,
)

T0 = datetime(2023, 1, 2)


class TestSynth:
    def test_zero_noise_gives_pure_profile(self):
        spec = SynthSpec(n_stations=3, days=2, seed=1, noise_sigma=0.0,
                         spike_prob=0.0, invalid_rate=0.0)
        _, series = synth_generate(spec)
        expect = base_profile(spec) * spec.scales()[:, None]
        for s in range(3):
            assert np.allclose(series[s + 1], expect[s], atol=1e-12)

    def test_perfect_correlation_duplicates_noise(self):
        corr = np.array([[1.0, 1.0], [1.0, 1.0]])
        spec = SynthSpec(n_stations=2, days=1, seed=3, correlation=corr)
        rng = np.random.default_rng(0)
        noise = spatial_noise(spec, rng)
        assert np.allclose(noise[0], noise[1], atol=1e-12)

    def test_noise_correlation_matches_target(self):
        corr = np.array([
            [1.0, 0.6, 0.2],
            [0.6, 1.0, 0.4],
            [0.2, 0.4, 1.0],
        ])
        spec = SynthSpec(n_stations=3, days=365, correlation=corr)
        noise = spatial_noise(spec, np.random.default_rng(11))
        emp = np.corrcoef(noise)
        assert np.max(np.abs(emp - corr)) < 0.05

    def test_deterministic_under_seed(self):
        spec = SynthSpec(n_stations=2, days=2, seed=9)
        tx1, s1 = synth_generate(spec)
        tx2, s2 = synth_generate(spec)
        assert tx1 == tx2
        for k in s1:
            assert np.array_equal(s1[k], s2[k])

    def test_invalid_days(self):
        with pytest.raises(ValueError):
            synth_generate(SynthSpec(days=0))


class TestCleaning:
    def test_low_energy_rejected(self):
        tr = ChargingTransaction(1, T0, T0 + timedelta(minutes=30), 0.5, 1.0)
        valid, rejected = clean_transactions([tr])
        assert not valid
        assert rejected[0][1] == "energy"

    def test_long_duration_rejected(self):
        tr = ChargingTransaction(1, T0, T0 + timedelta(hours=25), 30.0, 1.2)
        _, rejected = clean_transactions([tr])
        assert rejected[0][1] == "duration"

    def test_short_duration_rejected(self):
        tr = ChargingTransaction(1, T0, T0 + timedelta(seconds=30), 2.0, 240.0)
        _, rejected = clean_transactions([tr])
        assert rejected[0][1] == "duration"

    def test_plausible_transaction_accepted(self):
        tr = ChargingTransaction(1, T0, T0 + timedelta(minutes=30), 10.0, 20.0)
        valid, rejected = clean_transactions([tr], CleaningRules(p_max_kw=150.0))
        assert valid == [tr] and not rejected

    def test_abnormal_power_rejected(self):
        tr = ChargingTransaction(1, T0, T0 + timedelta(minutes=30), 10.0, 400.0)
        _, rejected = clean_transactions([tr], CleaningRules(p_max_kw=150.0))
        assert rejected[0][1] == "power"


class TestAggregate:
    def test_aligned_transaction_lands_in_one_slot(self):
        tr = ChargingTransaction(1, T0, T0 + timedelta(minutes=15), 5.0, 20.0)
        out = aggregate([tr], T0, 4)
        assert out[1][0] == pytest.approx(20.0)
        assert np.all(out[1][1:] == 0)

    def test_straddling_transaction_splits_evenly(self):
        start = T0 + timedelta(minutes=7, seconds=30)
        tr = ChargingTransaction(1, start, start + timedelta(minutes=15), 5.0, 20.0)
        out = aggregate([tr], T0, 4)
        assert out[1][0] == pytest.approx(10.0)
        assert out[1][1] == pytest.approx(10.0)

    def test_energy_conserved(self):
        spec = SynthSpec(n_stations=2, days=1, seed=5, invalid_rate=0.0)
        txs, _ = synth_generate(spec)
        out = aggregate(txs, T0, SLOTS_PER_DAY)
        total_slot = sum(v.sum() for v in out.values()) * 0.25
        total_tx = sum(t.energy_kwh for t in txs)
        assert total_slot == pytest.approx(total_tx, abs=1e-9)


class TestNormalize:
    def test_scale_is_peak(self):
        vals = np.array([10.0, 80.0, 40.0])
        out, scale = normalize(vals)
        assert scale == 80.0
        assert out.max() == pytest.approx(1.0)

    def test_all_zero_guard(self):
        vals = np.zeros(5)
        out, scale = normalize(vals)
        assert scale == 1.0
        assert np.array_equal(out, vals)

    def test_round_trip(self):
        vals = np.array([3.0, 9.0, 6.0])
        out, scale = normalize(vals)
        assert np.max(np.abs(denormalize(out, scale) - vals)) < 1e-12

    def test_test_split_clipped(self, caplog):
        vals = np.array([1.0, 2.0, 5.0])
        mask = np.array([True, True, False])
        with caplog.at_level("WARNING"):
            out, scale = normalize(vals, mask)
        assert scale == 2.0
        assert out[2] == 1.0
        assert any("clipping" in r.message for r in caplog.records)


class TestWindowing:
    def _series(self, n_slots, n_stations=2):
        rng = np.random.default_rng(0)
        return {s + 1: rng.random(n_slots) * 50 for s in range(n_stations)}

    def test_window_count(self):
        ds = window_and_split(self._series(100), T0, t_window=8, seed=0)
        assert len(ds.window_starts) == 92

    def test_split_sizes(self):
        ds = window_and_split(self._series(1008), T0, t_window=8, seed=0)
        n = len(ds.window_starts)
        assert n == 1000
        assert len(ds.splits["train"]) == 600
        assert len(ds.splits["val"]) == 200
        assert len(ds.splits["test"]) == 200

    def test_partition_is_disjoint_and_complete(self):
        ds = window_and_split(self._series(300), T0, seed=4)
        allidx = np.concatenate([ds.splits[k] for k in ("train", "val", "test")])
        assert len(np.unique(allidx)) == len(ds.window_starts)

    def test_same_seed_same_partition(self):
        a = window_and_split(self._series(300), T0, seed=7)
        b = window_and_split(self._series(300), T0, seed=7)
        for k in a.splits:
            assert np.array_equal(a.splits[k], b.splits[k])

    def test_gaps_not_spanned(self):
        ds = window_and_split(self._series(50), T0, t_window=8, seed=0, gaps=[20])
        for w in ds.window_starts:
            assert not (w < 20 <= w + 8)

    def test_feature_channels(self):
        ds = window_and_split(self._series(60), T0, t_window=8, seed=0)
        assert ds.features.shape[1] == 3
        # all demand features within [0,1]; codes in range
        assert ds.features[:, 0].min() >= 0 and ds.features[:, 0].max() <= 1
        assert set(np.unique(ds.features[:, 2])) <= set(range(7))


class TestMetrics:
    def test_perfect_forecast(self):
        x = np.array([[0.5, 0.2]])
        assert metrics(x, x) == (0.0, 0.0, 0.0)

    def test_single_entry_arithmetic(self):
        mae, rmse, wape = metrics(np.array([[0.4]]), np.array([[0.5]]))
        assert mae == pytest.approx(0.1)
        assert rmse == pytest.approx(0.1)
        assert wape == pytest.approx(0.2)

    def test_streaming_equals_batch(self):
        rng = np.random.default_rng(3)
        pred = rng.random((40, 5))
        true = rng.random((40, 5))
        mae, rmse, wape = metrics(pred, true)
        # independent accumulation, one sample at a time
        abs_sum = sq_sum = err_sum = true_sum = 0.0
        for i in range(40):
            e = pred[i] - true[i]
            abs_sum += np.abs(e).sum()
            sq_sum += (e ** 2).sum()
            err_sum += np.abs(e).sum()
            true_sum += true[i].sum()
        assert mae == pytest.approx(abs_sum / 40, abs=1e-12)
        assert rmse == pytest.approx(np.sqrt(sq_sum / 40), abs=1e-12)
        assert wape == pytest.approx(err_sum / true_sum, abs=1e-12)

    def test_wape_mae_relation(self):
        rng = np.random.default_rng(8)
        pred = rng.random((30, 4))
        true = rng.random((30, 4)) + 0.1
        mae, _, wape = metrics(pred, true)
        assert wape == pytest.approx(mae * 30 / true.sum(), abs=1e-12)

    def test_all_zero_truth_errors(self):
        with pytest.raises(ValueError):
            metrics(np.array([[0.1]]), np.array([[0.0]]))
