import math
from dataclasses import replace

import numpy as np
import pytest

from contraction_lab.config import ExperimentConfig, ExperimentSection, SpaceSection, parse_config
from contraction_lab.coupling import CouplingConfig
from contraction_lab.experiments import (
    build_setup,
    empirical_w1_marginal,
    estimate_decay,
    run_contraction_experiment,
    run_dimension_sweep,
    write_experiment_outputs,
)


def small_cfg(**experiment):
    ex = dict(name="small", n_pairs=200)
    ex.update(experiment)
    return ExperimentConfig(coupling=CouplingConfig(T=4.0, dt=1e-3, record_stride=50),
                            experiment=ExperimentSection(**ex))


class TestDecayEstimate:
    def test_exact_exponential(self):
        t = np.linspace(0, 10, 51)
        est = estimate_decay(t, np.exp(-0.3 * t), (2.0, 8.0))
        assert est.c_hat == pytest.approx(0.3, abs=1e-12)
        assert est.se == pytest.approx(0.0, abs=1e-12)
        assert est.n_points == 31

    def test_constant_series(self):
        t = np.linspace(0, 1, 11)
        est = estimate_decay(t, np.full(11, 2.5), (0.0, 1.0))
        assert abs(est.c_hat) < 1e-14

    def test_noisy_series_with_known_slope(self):
        rng = np.random.default_rng(2024)
        t = np.linspace(0, 4, 41)
        v = np.exp(-0.5 * t)[:, None] * rng.exponential(1.0, (41, 10_000))
        est = estimate_decay(t, v.mean(axis=1), (0.8, 3.2), per_trajectory=v)
        assert abs(est.c_hat - 0.5) <= 2 * est.se
        assert est.se_mc is not None and est.se == est.se_mc

    def test_mc_standard_error_is_calibrated(self):
        # spread of c_hat over independent replicas agrees with the delta-method SE
        t = np.linspace(0, 4, 21)
        hats, ses = [], []
        for seed in range(200):
            rng = np.random.default_rng(seed)
            v = np.exp(-0.5 * t)[:, None] * rng.exponential(1.0, (21, 500))
            est = estimate_decay(t, v.mean(axis=1), (0.8, 3.2), per_trajectory=v)
            hats.append(est.c_hat)
            ses.append(est.se)
        assert np.std(hats) == pytest.approx(np.mean(ses), rel=0.15)

    def test_window_too_small(self):
        with pytest.raises(ValueError):
            estimate_decay([0.0, 1.0], [1.0, 0.5], (0.4, 0.6))

    def test_non_positive_mean(self):
        with pytest.raises(ValueError):
            estimate_decay([0.0, 1.0, 2.0], [1.0, 0.0, 0.0], (0.0, 2.0))


class TestW1:
    def test_identical(self):
        assert empirical_w1_marginal([1.0, 2.0, 3.0], [3.0, 1.0, 2.0]) == 0.0

    def test_two_points(self):
        assert empirical_w1_marginal([0.0, 0.0], [1.0, 1.0]) == 1.0

    def test_translated_gaussians(self):
        m = 0.7
        vals = []
        for seed in range(10):
            rng = np.random.default_rng(seed)
            vals.append(empirical_w1_marginal(rng.standard_normal(10**5), m + rng.standard_normal(10**5)))
        vals = np.asarray(vals)
        se = vals.std(ddof=1)
        assert np.all(np.abs(vals - m) <= 3 * se + 1e-3)
        assert abs(vals.mean() - m) <= 3 * se / math.sqrt(10) + 1e-3

    def test_unequal_sizes(self):
        with pytest.raises(ValueError):
            empirical_w1_marginal([0.0], [1.0, 2.0])


class TestSetup:
    def test_default_setup(self):
        s = build_setup(ExperimentConfig())
        assert (s.geom.alpha, s.geom.beta, s.space.split_index) == (4.0, 2.0, 1)
        assert s.variant == "large_distance"
        assert s.M == 0.75
        assert s.rate.c == pytest.approx(0.0523526, rel=1e-5)

    def test_negative_defect_switches_to_synchronous(self):
        cfg = parse_config({"drift": {"preset": "gaussian_bump", "amplitude": 0.5, "constants": "structural"}})
        s = build_setup(cfg)
        assert s.geom.beta < 0 and s.variant == "synchronous"
        assert s.rate.c == pytest.approx(min(1 / s.geom.alpha, -s.geom.beta), rel=1e-15)

    def test_lyapunov_setup(self):
        cfg = parse_config({"theory": {"variant": "lyapunov"}, "lyapunov": {"eta": 0.9}})
        s = build_setup(cfg)
        assert s.lyap is not None and s.R == s.lyap.R_S
        assert s.rate.log_epsilon == pytest.approx(
            min(s.rate.log_components["diffusion"], s.rate.log_components["weight"]) - math.log(2 * s.lyap.C), abs=0)

    def test_tps_setup(self):
        cfg = parse_config({"drift": {"preset": "tps_quadratic", "a": 1.0}, "theory": {"variant": "lyapunov"},
                            "lyapunov": {"eta": 0.5}, "coupling": {"kind": "synchronous"}})
        s = build_setup(cfg)
        assert s.drift.name == "tps_quadratic"


class TestExperiments:
    def test_ou_decays_faster_than_theory(self):
        cfg = replace(small_cfg(), drift=replace(ExperimentConfig().drift, preset="ou"))
        rep = run_contraction_experiment(cfg)
        assert rep.passed
        assert rep.estimate.c_hat > rep.c_theory

    def test_zero_horizon(self):
        cfg = replace(small_cfg(), coupling=CouplingConfig(T=0.0))
        rep = run_contraction_experiment(cfg)
        assert rep.estimate is None
        assert rep.times.tolist() == [0.0]
        assert rep.as_dict()["estimate"] is None

    def test_synchronous_pathwise(self):
        cfg = parse_config({"drift": {"amplitude": 0.5, "constants": "structural"},
                            "coupling": {"kind": "synchronous", "T": 2.0},
                            "experiment": {"n_pairs": 20}})
        rep = run_contraction_experiment(cfg)
        assert rep.pathwise["n_violating"] == 0 and rep.passed

    def test_outputs_are_byte_reproducible(self, tmp_path):
        cfg = small_cfg(n_pairs=30)
        a = write_experiment_outputs(run_contraction_experiment(cfg), tmp_path / "a")
        b = write_experiment_outputs(run_contraction_experiment(cfg), tmp_path / "b")
        for key in a:
            assert a[key].read_bytes() == b[key].read_bytes(), key
        header = a["long"].read_text().splitlines()[0]
        assert header == "experiment,d,t,quantity,value"


class TestSweep:
    def test_single_entry_equals_single_experiment(self):
        cfg = small_cfg(n_pairs=50, dims=(16,))
        sweep = run_dimension_sweep(cfg)
        single = run_contraction_experiment(cfg)
        assert sweep.reports[0].estimate.c_hat == single.estimate.c_hat
        assert sweep.passed

    def test_theory_is_dimension_free(self):
        cfg = small_cfg(n_pairs=50)
        sweep = run_dimension_sweep(cfg, [8, 16, 32])
        assert sweep.theory_identical
        assert len({r.c_theory for r in sweep.reports}) == 1

    def test_truncation_below_split_rejected(self):
        cfg = replace(small_cfg(), space=SpaceSection(d=4, split=3))
        with pytest.raises(ValueError):
            run_dimension_sweep(cfg, [2])
