import io
import math

import numpy as np
import pytest

from panelclust.exceptions import InvalidConfig
from panelclust.simulation import (
    DgpConfig,
    ExperimentConfig,
    generate,
    run_experiment,
    run_recovery,
    run_size_power,
    write_table,
)


def test_variance_without_autocorrelation():
    panel, truth = generate(DgpConfig(10, 200, 500, rho=0.0, phi=0.0, seed=1))
    assert np.var(panel.y - 1.0) == pytest.approx(0.5, abs=0.01)
    np.testing.assert_array_equal(truth.sizes, [20] * 10)
    assert np.all(panel.x == 1.0)


def test_within_cluster_correlation():
    panel, _ = generate(DgpConfig(1, 2, 100_000, seed=2))
    assert np.corrcoef(panel.y[0], panel.y[1])[0, 1] == pytest.approx(0.5, abs=0.01)


def test_stationary_start():
    # the first period already has the stationary variance of 1/4 + 1/4 scaled by 1/(1 - 0.04)
    panel, _ = generate(DgpConfig(20_000, 20_000, 2, seed=3))
    assert np.var(panel.y[:, 0]) == pytest.approx(0.5 / (1 - 0.04), rel=0.03)


def test_same_seed_same_panel():
    a, _ = generate(DgpConfig(5, 50, 30, seed=9))
    b, _ = generate(DgpConfig(5, 50, 30, seed=9))
    np.testing.assert_array_equal(a.y, b.y)


def test_config_validation():
    with pytest.raises(InvalidConfig):
        DgpConfig(3, 50, 100)
    with pytest.raises(InvalidConfig):
        DgpConfig(5, 50, 100, rho=1.0)
    dgp = DgpConfig(5, 50, 100)
    with pytest.raises(InvalidConfig):
        ExperimentConfig(dgp, 0)
    with pytest.raises(InvalidConfig):
        ExperimentConfig(dgp, 5, methods=("wild",))
    with pytest.raises(InvalidConfig):
        ExperimentConfig(dgp, 5, tuning="fixed")
    with pytest.raises(InvalidConfig):
        run_size_power(ExperimentConfig(dgp, 5, methods=()))


def test_fixed_threshold_one_gives_singletons():
    exp = ExperimentConfig(DgpConfig(5, 20, 50, seed=4), 3, tuning="fixed", bandwidth=2, eta_tilde=1.0)
    s = run_recovery(exp)
    assert s.q_hat_mean == 20 and s.min_purity_mean == 1.0 and s.avg_purity_mean == 1.0
    assert s.perfect_recovery_rate == 0.0


def test_rates_and_standard_errors():
    exp = ExperimentConfig(DgpConfig(5, 20, 50, seed=5), 12, methods=("art_oracle", "cce_oracle", "bcl"))
    s = run_size_power(exp)
    for m in exp.methods:
        p = s.rejection_rate[m]
        assert 0 <= p <= 1
        assert s.mc_standard_error[m] == pytest.approx(math.sqrt(p * (1 - p) / 12))
    assert s.q_hat_mean is None


def test_undefined_tests_counted():
    exp = ExperimentConfig(
        DgpConfig(2, 10, 50, seed=6), 4, methods=("cce_discovered",), tuning="fixed", bandwidth=1, eta_tilde=0.0
    )
    s = run_experiment(exp)
    assert s.undefined["cce_discovered"] == 4 and s.rejection_rate["cce_discovered"] == 0.0


def test_workers_do_not_change_output():
    exp = ExperimentConfig(DgpConfig(2, 10, 60, seed=7), 6, methods=("art_oracle", "art_discovered", "bcl"),
                           deterministic=False)
    outs = []
    for workers in (1, 2):
        buf = io.StringIO()
        write_table([run_experiment(exp, workers)], buf)
        outs.append(buf.getvalue())
    assert outs[0] == outs[1]


def test_table_layout():
    exp = ExperimentConfig(DgpConfig(2, 10, 60, seed=8), 3, methods=("bcl",), recovery=True)
    buf = io.StringIO()
    write_table([run_experiment(exp)], buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "q,n,t,reps,alpha,beta0,method,estimate,mc_se"
    assert [line.split(",")[6] for line in lines[1:]] == ["bcl", "min_purity", "avg_purity", "q_hat", "perfect_recovery"]
