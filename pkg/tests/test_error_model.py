import numpy as np
import pytest

from evhc.mixtures import STD_FLOOR, gmm_cdf, gmm_quantile
from evhc.pipeline import (
    IntervalErrorModel,
    SynthSpec,
    build_interval_error_model,
    fit_error_model_from_dataset,
    interval_index,
    probabilistic_forecast,
    synth_generate,
    window_and_split,
)
from evhc.forecast import TrainConfig, predict, train


class TestIntervalIndex:
    def test_mid_interval(self):
        assert interval_index(0.395, 100) == 40

    def test_zero_clamped_to_first(self):
        assert interval_index(0.0, 100) == 1

    def test_one_maps_to_last(self):
        assert interval_index(1.0, 100) == 100

    def test_partition_covers_unit_interval(self):
        rng = np.random.default_rng(0)
        for p in rng.random(500):
            j = interval_index(p, 100)
            assert 1 <= j <= 100
            # right-closed bins [ (j-1)/N, j/N ]
            assert (j - 1) / 100 <= p <= j / 100 + 1e-12


class TestBuildModel:
    def _pairs(self, n=4000, n_stations=2, seed=1):
        rng = np.random.default_rng(seed)
        forecasts = rng.random((n, n_stations))
        errors = rng.normal(0.0, 0.05, (n, n_stations))
        return forecasts, np.clip(forecasts + errors, 0, None)

    def test_perfect_forecaster_degenerate_errors(self):
        rng = np.random.default_rng(2)
        truth = rng.random((3000, 2))
        em = build_interval_error_model(truth, truth, (1, 2), n_intervals=10)
        for sid in (1, 2):
            for g in em.per_station[sid]:
                if g is not None:
                    assert abs(g.mean()) < 1e-6
                    assert np.all(g.stds == STD_FLOOR)

    def test_sparse_intervals_fall_back_to_pooled(self):
        forecasts, truths = self._pairs(n=200)
        em = build_interval_error_model(forecasts, truths, (1, 2),
                                        n_intervals=100, min_samples=30)
        # 200 samples over 100 bins: every bin is sparse
        assert all(g is None for g in em.per_station[1])
        g = em.mixture_for(1, 0.5)
        assert g is em.pooled[1]

    def test_counts_partition_population(self):
        forecasts, truths = self._pairs(n=4000)
        em = build_interval_error_model(forecasts, truths, (1, 2),
                                        n_intervals=20)
        for sid in (1, 2):
            assert sum(em.counts[sid]) == 4000

    def test_json_round_trip(self, tmp_path):
        forecasts, truths = self._pairs(n=1500)
        em = build_interval_error_model(forecasts, truths, (1, 2),
                                        n_intervals=10)
        path = tmp_path / "errors.json"
        em.save(path)
        em2 = IntervalErrorModel.load(path)
        assert em2.n_intervals == em.n_intervals
        assert em2.counts == em.counts
        for sid in em.station_ids:
            for a, b in zip(em.per_station[sid], em2.per_station[sid]):
                assert (a is None) == (b is None)
                if a is not None:
                    assert np.allclose(a.means, b.means)

    def test_empty_history_rejected(self):
        with pytest.raises(ValueError):
            build_interval_error_model(np.empty((0, 2)), np.empty((0, 2)), (1, 2))


@pytest.fixture(scope="module")
def trained_setup():
    spec = SynthSpec(n_stations=3, days=24, seed=23,
                     scale_kw=(150.0, 210.0, 180.0), invalid_rate=0.0)
    _, series = synth_generate(spec)
    ds = window_and_split(series, spec.start, t_window=8, seed=23)
    cfg = TrainConfig(n_stations=3, t_window=8, hidden=8, k_t=2, k_s=2,
                      n_e=4, n_blocks=2, z_prime=4, mlp_hidden=16,
                      embed_dim=3, epochs=4, seed=23)
    model, _ = train(cfg, ds)
    em = fit_error_model_from_dataset(model, ds, n_intervals=20, seed=23)
    return model, ds, em


class TestProbabilisticForecast:
    def test_mixture_mean_is_forecast_plus_error_mean(self, trained_setup):
        model, ds, em = trained_setup
        feats, _ = ds.subset("test")
        p_hat = predict(model, feats[:1])[0]
        gmms = probabilistic_forecast(model, em, feats[0])
        for col, sid in enumerate(em.station_ids):
            base = em.mixture_for(sid, float(p_hat[col]))
            assert gmms[sid].mean() == pytest.approx(
                float(p_hat[col]) + base.mean(), abs=1e-12)

    def test_point_mass_error_keeps_forecast(self):
        # degenerate error model: all errors zero
        rng = np.random.default_rng(5)
        truth = rng.random((2000, 1))
        em = build_interval_error_model(truth, truth, (1,), n_intervals=5)

        class _Fake:
            def __call__(self, feats):
                raise NotImplementedError

        # bypass the model by using mixture_for + shift directly
        g = em.mixture_for(1, 0.4)
        from evhc.mixtures import gmm_shift
        shifted = gmm_shift(g, 0.4)
        assert shifted.mean() == pytest.approx(0.4, abs=1e-6)

    def test_central_interval_coverage(self, trained_setup):
        model, ds, em = trained_setup
        feats, truths = ds.subset("test")
        p_hat = predict(model, feats)
        hits, total = 0, 0
        for i in range(feats.shape[0]):
            for col, sid in enumerate(em.station_ids):
                g = em.mixture_for(sid, float(p_hat[i, col]))
                lo = gmm_quantile(g, 0.1) + p_hat[i, col]
                hi = gmm_quantile(g, 0.9) + p_hat[i, col]
                hits += int(lo <= truths[i, col] <= hi)
                total += 1
        coverage = hits / total
        assert abs(coverage - 0.80) <= 0.03
