import numpy as np
import pytest

from evhc.grid import base_injections, ieee33, solve_power_flow
from evhc.mixtures import GaussianMixture, gmm_cdf, gmm_shift
from evhc.ppf import gmm_ppf, identify_boundary, mc_ppf
from evhc.scenario import load_scenario
from oracles import ks_distance


@pytest.fixture(scope="module")
def net():
    return ieee33()


@pytest.fixture(scope="module")
def scenario():
    return load_scenario()


@pytest.fixture(scope="module")
def bundled_ppf(net, scenario):
    return gmm_ppf(net, scenario["station_gmms"])


class TestGmmPpf:
    def test_point_mass_inputs_collapse_to_base(self, net, scenario):
        gmms = {sid: GaussianMixture.point_mass(g.mean())
                for sid, g in scenario["station_gmms"].items()}
        ppf = gmm_ppf(net, gmms)
        for bus, g in ppf.voltage.items():
            assert g.mean() == pytest.approx(float(ppf.base.v_mag[bus - 1]),
                                             abs=1e-9)
            assert g.std() < 5e-6

    def test_single_station_gaussian_closure(self, net):
        from evhc.grid import compute_sensitivity
        g = GaussianMixture.single(0.003, 0.0008)
        ppf = gmm_ppf(net, {7: g})  # station 7 sits at bus 18
        sens = compute_sensitivity(net, ppf.base)
        col = sens.p_column_of_bus(18)
        for bus, mix in ppf.voltage.items():
            s = float(sens.entries[sens.v_rows.index(bus), col])
            assert mix.k == 1
            assert mix.std() == pytest.approx(abs(s) * 0.0008, rel=1e-6)

    def test_mixture_mean_matches_base_voltage(self, net, scenario, bundled_ppf):
        # zero-mean disturbances leave the mean at the base operating point
        for bus, g in bundled_ppf.voltage.items():
            assert g.mean() == pytest.approx(
                float(bundled_ppf.base.v_mag[bus - 1]), abs=1e-12)

    def test_reduction_keeps_cdf_close(self, net, scenario):
        gmms = scenario["station_gmms"]
        exact = gmm_ppf(net, gmms, input_cap=4, output_cap=10 ** 6)
        reduced = gmm_ppf(net, gmms)
        assert exact.components_kept == 4096
        g_big, g_small = exact.voltage[18], reduced.voltage[18]
        lo = g_big.mean() - 6 * g_big.std()
        hi = g_big.mean() + 6 * g_big.std()
        grid = np.linspace(lo, hi, 1500)
        sup = np.max(np.abs(gmm_cdf(g_big, grid) - gmm_cdf(g_small, grid)))
        assert sup < 0.005

    def test_demand_increase_never_raises_voltage(self, net, scenario):
        gmms = dict(scenario["station_gmms"])
        base = gmm_ppf(net, gmms)
        bumped = dict(gmms)
        bumped[5] = gmm_shift(gmms[5], 0.002)
        after = gmm_ppf(net, bumped)
        for bus in base.voltage:
            assert after.voltage[bus].mean() <= base.voltage[bus].mean() + 1e-12

    def test_no_ev_base_mode(self, net, scenario):
        ppf = gmm_ppf(net, scenario["station_gmms"], no_ev_base=True)
        p, q = base_injections(net)
        flat = solve_power_flow(net, p, q)
        for bus, g in ppf.voltage.items():
            # base point carries no EV load; the mixture mean sits below it
            assert g.mean() <= float(flat.v_mag[bus - 1]) + 1e-12


class TestMcPpf:
    def test_point_mass_reproduces_deterministic(self, net, scenario):
        gmms = {sid: GaussianMixture.point_mass(g.mean())
                for sid, g in scenario["station_gmms"].items()}
        mc = mc_ppf(net, gmms, n=50, seed=3)
        p, q = base_injections(net, {sid: g.mean() for sid, g in gmms.items()})
        op = solve_power_flow(net, p, q)
        for bus, samples in mc.samples.items():
            assert np.max(np.abs(samples - op.v_mag[bus - 1])) < 1e-4

    def test_seeded_prefix(self, net, scenario):
        gmms = scenario["station_gmms"]
        a = mc_ppf(net, gmms, n=10, seed=11)
        b = mc_ppf(net, gmms, n=200, seed=11)
        # same seed: the short run's draws are a prefix of the long run's,
        # so every short-run voltage appears in the long run
        for bus in a.samples:
            assert np.all(np.isin(np.round(a.samples[bus], 12),
                                  np.round(b.samples[bus], 12)))

    def test_mc_mean_matches_analytical(self, net, scenario):
        gmms = scenario["station_gmms"]
        ppf = gmm_ppf(net, gmms)
        mc = mc_ppf(net, gmms, n=4000, seed=5)
        for bus in (18, 33, 25):
            samples = mc.samples[bus]
            tol = 3 * samples.std() / np.sqrt(len(samples))
            assert abs(samples.mean() - ppf.voltage[bus].mean()) < tol + 1e-6

    def test_ks_against_analytical(self, net, scenario):
        gmms = scenario["station_gmms"]
        ppf = gmm_ppf(net, gmms)
        mc = mc_ppf(net, gmms, n=8000, seed=9)
        d = ks_distance(mc.samples[18], lambda x: gmm_cdf(ppf.voltage[18], x))
        assert d < 0.02

    def test_invalid_n(self, net, scenario):
        with pytest.raises(ValueError):
            mc_ppf(net, scenario["station_gmms"], n=0, seed=0)


class TestBoundary:
    def test_median_of_symmetric_voltage(self):
        ppf = _fake_ppf({18: GaussianMixture.single(0.95, 0.01)})
        rep = identify_boundary(ppf, 0.5)
        assert rep.boundary[18] == pytest.approx(0.95, abs=1e-6)

    def test_normal_quantile_0001(self):
        ppf = _fake_ppf({18: GaussianMixture.single(0.95, 0.01)})
        rep = identify_boundary(ppf, 0.001)
        assert rep.boundary[18] == pytest.approx(0.95 - 3.0902 * 0.01, abs=1e-4)

    def test_point_mass_voltage(self):
        ppf = _fake_ppf({7: GaussianMixture.point_mass(0.93)})
        for vs in (0.001, 0.2, 0.9):
            rep = identify_boundary(ppf, vs)
            assert rep.boundary[7] == pytest.approx(0.93, abs=1e-4)

    def test_invalid_varsigma(self):
        ppf = _fake_ppf({2: GaussianMixture.single(0.95, 0.01)})
        for vs in (0.0, 1.0, -0.5):
            with pytest.raises(ValueError):
                identify_boundary(ppf, vs)

    def test_consistency_on_bundled(self, bundled_ppf):
        for vs in (0.001, 0.01, 0.1):
            rep = identify_boundary(bundled_ppf, vs, limit=0.9)
            for bus, vlow in rep.boundary.items():
                assert gmm_cdf(bundled_ppf.voltage[bus], vlow) == pytest.approx(
                    vs, abs=1e-6)
            assert rep.network_boundary == pytest.approx(
                min(rep.boundary.values()))


def _fake_ppf(voltage):
    from evhc.ppf import PpfResult
    return PpfResult(voltage=voltage, base=None, base_demands={},
                     components_exact=1, components_kept=1, elapsed_s=0.0)
