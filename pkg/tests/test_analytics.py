"""Tests for the closed-form predictions, checked against mpmath where possible."""

import math

import mpmath
import numpy as np
import pytest
from pydantic import ValidationError

from weakisingsim.analytics import (
    CURVES,
    CURVE_EQUATIONS,
    ReplicaParams,
    c_eff_biased_prediction,
    c_eff_forced_prediction,
    c_eff_uniform,
    curve,
    defect_strength_t,
    delta_z,
    dilog,
    effective_lambda_biased,
    effective_lambda_forced,
    optimal_bias,
    parse_grid,
    predicted_c_eff,
    replica_A,
    replica_A_tilde,
    replica_g,
    replica_g_tilde,
    replica_g_tilde_limit,
    s_parameter,
)
from weakisingsim.errors import InvalidArgumentError, OutOfValidityError

mpmath.mp.dps = 30


def _c_eff_mpmath(lam: float) -> float:
    lam = mpmath.mpf(lam)
    s = (1 - lam**2) ** 2 / (lam**4 + 6 * lam**2 + 1)
    bracket = ((1 + s) * mpmath.log(1 + s) + (1 - s) * mpmath.log(1 - s)) * mpmath.log(s)
    total = bracket + (1 + s) * mpmath.polylog(2, -s) + (1 - s) * mpmath.polylog(2, s)
    return float(-3 / mpmath.pi**2 * total)


def test_dilog_matches_mpmath():
    for z in (-1.0, -0.37, 0.0, 0.25, 0.9, 1.0):
        expected = float(mpmath.polylog(2, z))
        assert dilog(z) == pytest.approx(expected, abs=1e-12), f"Li2({z})"
    with pytest.raises(InvalidArgumentError):
        dilog(1.5)


def test_c_eff_uniform_endpoints():
    assert c_eff_uniform(0.0) == 0.5
    assert c_eff_uniform(1.0) == 0.0


def test_c_eff_uniform_matches_high_precision():
    for lam in (0.1, 0.3, 0.5, 0.8, 0.95):
        assert c_eff_uniform(lam) == pytest.approx(_c_eff_mpmath(lam), abs=1e-10), f"lambda={lam}"


def test_c_eff_uniform_is_monotone():
    values = [c_eff_uniform(lam) for lam in np.linspace(0.0, 1.0, 101)]
    steps = np.diff(values)
    assert np.all(steps <= 1e-12), f"c_eff increases somewhere: max step {steps.max()}"


def test_s_parameter_and_defect_strength():
    assert s_parameter(0.0) == 1.0
    assert s_parameter(1.0) == 0.0
    assert defect_strength_t(0.5) == pytest.approx(1.0 / 9.0, rel=1e-14)
    for lam in (0.2, 0.5, 0.9):
        t = defect_strength_t(lam)
        assert s_parameter(lam) == pytest.approx(2.0 / (t + 1.0 / t), rel=1e-12)


def test_delta_z_limits():
    assert delta_z(0.0, 1) == pytest.approx(0.125, abs=1e-15)
    assert delta_z(0.0, -1) == pytest.approx(0.125, abs=1e-15)
    assert delta_z(1.0, "+") == pytest.approx(0.5, abs=1e-14)
    assert delta_z(1.0, "-") == pytest.approx(0.0, abs=1e-15)
    expected = float(2 / mpmath.pi**2 * mpmath.atan(9) ** 2)
    assert delta_z(0.5, 1) == pytest.approx(expected, abs=1e-12)
    with pytest.raises(InvalidArgumentError):
        delta_z(0.5, 0)


def test_replica_limits():
    for lam in (0.2, 0.5, 0.8):
        t = 2 * lam / (1 + lam**2)
        assert replica_g(ReplicaParams(lam=lam, R=1.0)) == 0.0
        assert replica_g_tilde_limit(lam, 1) == 0.0
        near_zero = replica_g_tilde(ReplicaParams(lam=lam, R=1e-9))
        assert near_zero == pytest.approx(-t**2 * 2 / math.pi, abs=1e-7), f"lambda={lam}"
        assert replica_g_tilde_limit(lam, 0) == pytest.approx(-t**2 * 2 / math.pi, rel=1e-15)
    with pytest.raises(InvalidArgumentError):
        replica_g_tilde_limit(0.5, 2)
    with pytest.raises(ValidationError):
        ReplicaParams(lam=1.0, R=0.5)


def test_replica_prefactor_limits():
    for lam in (0.2, 0.5, 0.8):
        born = ReplicaParams(lam=lam, R=1.0)
        # no renormalization when g vanishes
        assert replica_A_tilde(born) == pytest.approx(replica_A(born), rel=1e-14)
        assert replica_A(born) == pytest.approx((1 + lam**2) / (1 - lam**2), rel=1e-14)
        forced = ReplicaParams(lam=lam, R=1e-9)
        assert replica_A_tilde(forced) == pytest.approx(1.0, abs=1e-6), f"lambda={lam}"
    assert replica_A_tilde(ReplicaParams(lam=0.0, R=2.0)) == pytest.approx(1.0, rel=1e-14)


def test_effective_lambda_forced():
    expected = float(mpmath.tanh(mpmath.atanh(2 / mpmath.pi) / 2))
    assert effective_lambda_forced(1.0) == pytest.approx(expected, abs=1e-12)
    assert effective_lambda_forced(1.0) == pytest.approx(0.3594, abs=1e-4)
    assert effective_lambda_forced(0.0) == 0.0


def test_forced_prediction_warns_beyond_validity():
    with pytest.warns(RuntimeWarning):
        c_eff_forced_prediction(0.8)
    value = c_eff_forced_prediction(0.5)
    assert 0.0 < value < 0.5


def test_optimal_bias_and_biased_prediction():
    assert optimal_bias(0.5) == pytest.approx(0.5 + 0.4 * 2 / math.pi, rel=1e-15)
    assert optimal_bias(0.0) == 0.5
    for lam in (0.3, 0.6, 0.9):
        # at the optimal bias the linearized coupling vanishes
        assert c_eff_biased_prediction(lam, optimal_bias(lam)) == pytest.approx(0.5, abs=1e-15)
    assert c_eff_biased_prediction(0.5, optimal_bias(0.5) - 0.05) < 0.5
    with pytest.raises(OutOfValidityError):
        effective_lambda_biased(0.9, 0.2)
    with pytest.raises(InvalidArgumentError):
        c_eff_biased_prediction(0.5, 1.5)


def test_curve_registry():
    table = curve("c_eff_uniform", parse_grid("0:1:11"))
    assert len(table.points) == 11
    assert table.points[0] == (0.0, 0.5)
    assert table.points[-1] == (1.0, 0.0)
    assert table.header()[0] == "lambda"
    assert table.header()[1].startswith("c_eff_uniform = ")
    assert table.header()[1].endswith("(eq. 1)")
    assert sorted(CURVE_EQUATIONS.values()) == list(range(1, len(CURVES) + 1))
    for name in CURVES:
        if name == "c_eff_biased":
            values = curve(name, [0.0, 0.3], delta_p=0.01).values
        else:
            values = curve(name, [0.0, 0.3, 0.6]).values
        assert np.all(np.isfinite(values)), f"Curve {name} is not finite"
    with pytest.raises(InvalidArgumentError):
        curve("nonexistent", [0.1])


def test_curve_table_is_write_once(tmp_path):
    table = curve("s_parameter", [0.0, 0.5, 1.0])
    path = table.to_csv(tmp_path / "s.csv")
    assert path.read_text().splitlines()[0].startswith("lambda,")
    with pytest.raises(InvalidArgumentError):
        table.to_csv(path)


def test_parse_grid():
    grid = parse_grid("0:0.9:10")
    assert grid.size == 10
    assert grid[0] == 0.0 and grid[-1] == pytest.approx(0.9)
    assert parse_grid("0.2, 0.5,0.8").tolist() == [0.2, 0.5, 0.8]
    assert parse_grid("0.4:0.4:1").tolist() == [0.4]
    for bad in ("0.5,0.2", "0:1.5:4", "a:b:c", "", "0:1:0"):
        with pytest.raises(InvalidArgumentError):
            parse_grid(bad)


def test_predicted_c_eff_per_scheme():
    assert predicted_c_eff("born", 0.3) == 0.5
    assert predicted_c_eff("uniform-minus", 0.3) == c_eff_uniform(0.3)
    assert predicted_c_eff("biased", 0.3, optimal_bias(0.3)) == pytest.approx(0.5)
    with pytest.raises(InvalidArgumentError):
        predicted_c_eff("sideways", 0.3)
