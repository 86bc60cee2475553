import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tbent.analysis import (CHSH_THRESHOLD, FringeScan, bootstrap_visibility, chsh_check, fit_fringe,
                            predict_fringe)
from tbent.detection import run_experiment
from tbent.errors import ConfigError, FitError
from tbent.optics import AnalyzerSetting
from tbent.rng import stream
from tbent.state import ideal_bell, ideal_bell_pair_product, werner_state

GRID = np.linspace(0, math.pi, 37)


def test_fourfold_closed_form_examples():
    phi4 = ideal_bell_pair_product()
    assert predict_fringe(phi4, 0.3, 0.3, "fourfold") == pytest.approx(0.25, abs=1e-12)
    theta_s = 0.1
    assert predict_fringe(phi4, theta_s, theta_s + math.pi / 8, "fourfold") == pytest.approx(1 / 16, abs=1e-12)


def test_fourfold_matches_cos4_on_grid():
    phi4 = ideal_bell_pair_product()
    theta_s = math.radians(22.5)
    grid = np.linspace(0, math.pi, 100)
    expected = 0.25 * np.cos(2 * grid - 2 * theta_s) ** 4
    assert np.allclose(predict_fringe(phi4, theta_s, grid, "fourfold"), expected, atol=1e-12)


def test_twofold_pm_basis_shape():
    theta_s = math.radians(22.5)
    grid = np.linspace(0, math.pi, 64)
    p = predict_fringe(ideal_bell(), theta_s, grid)
    assert np.allclose(p, 0.5 * np.cos(2 * grid - math.pi / 4) ** 2, atol=1e-12)
    # period pi/2 in theta_i
    assert np.allclose(predict_fringe(ideal_bell(), theta_s, grid + math.pi / 2), p, atol=1e-12)


def test_predict_fringe_rejects_wrong_arity():
    with pytest.raises(ConfigError):
        predict_fringe(ideal_bell(), 0.0, 0.0, "fourfold")
    with pytest.raises(ConfigError):
        predict_fringe(ideal_bell(), 0.0, 0.0, "threefold")


@pytest.mark.parametrize("order, power", [("twofold", 2), ("fourfold", 4)])
def test_noiseless_fit_is_perfect(order, power):
    y = 100 * np.cos(2 * GRID - 0.4) ** power
    fit = fit_fringe(FringeScan(0.0, GRID, y, order))
    assert fit.visibility == pytest.approx(1.0, abs=1e-6)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-6)


@given(st.floats(0.05, 1.0), st.floats(0, math.pi), st.sampled_from([2, 4]))
def test_fit_recovers_injected_parameters(vis, phase, power):
    # c_max = a + b and c_min = b give the injected visibility
    a = 1.0
    b = a * (1 - vis) / (2 * vis)
    y = a * np.cos(2 * GRID - phase) ** power + b
    fit = fit_fringe(FringeScan(0.0, GRID, y, "twofold" if power == 2 else "fourfold"))
    assert fit.visibility == pytest.approx(vis, abs=1e-3)
    d = abs(fit.phase - phase % math.pi)
    assert min(d, math.pi - d) < 1e-3


def test_fit_needs_eight_points():
    t = np.linspace(0, math.pi, 7)
    with pytest.raises(FitError) as err:
        fit_fringe(FringeScan(0.0, t, np.cos(2 * t) ** 2))
    assert err.value.diagnostics["n_points"] == 7


def test_scan_validation():
    with pytest.raises(ConfigError):
        FringeScan(0.0, np.linspace(0, 1, 10), np.zeros(10))
    with pytest.raises(ConfigError):
        FringeScan(0.0, GRID[::-1], np.zeros(37))
    with pytest.raises(ConfigError):
        FringeScan(0.0, GRID, np.zeros(36))


def test_werner_visibility_from_exact_fringe():
    rho = werner_state(0.84)
    y = predict_fringe(rho, math.radians(22.5), GRID)
    assert fit_fringe(FringeScan(math.radians(22.5), GRID, y)).visibility == pytest.approx(0.84, abs=1e-9)


def test_werner_visibility_from_monte_carlo(noiseless):
    src = dataclasses.replace(noiseless.source, white_noise=0.16)
    theta_s = math.radians(22.5)
    counts = []
    for k, t in enumerate(GRID):
        settings = (AnalyzerSetting(theta_s), AnalyzerSetting(t), AnalyzerSetting(), AnalyzerSetting())
        rec = run_experiment(src, noiseless.optics, noiseless.losses, noiseless.detectors, 40_000, settings,
                             setting_id=k)
        counts.append(rec.coincidences(0, 0, (0, 0)))
    scan = FringeScan.from_counts(theta_s, GRID, counts)
    fit = fit_fringe(scan)
    _, err = bootstrap_visibility(scan, 60, stream(1, "boot"))
    assert abs(fit.visibility - 0.84) < 3 * err
    assert err < 0.01


def test_chsh_examples():
    r = chsh_check(0.84)
    assert r.violated and r.margin == pytest.approx(0.133, abs=1e-3)
    assert not chsh_check(0.70).violated
    assert not chsh_check(CHSH_THRESHOLD).violated
    with pytest.raises(ConfigError):
        chsh_check(1.2)
