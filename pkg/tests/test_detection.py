import dataclasses
import json
import math

import numpy as np
import pytest

from tbent.detection import (DELAYS, CountsRecord, DetectorModel, LossBudget, acquire, estimate_car,
                             estimate_pgr, expected_counts, fourfold_rate_oracle, run_experiment,
                             singles_rate_oracle)
from tbent.errors import ConfigError, UndefinedEstimateError
from tbent.optics import PAULI_SETTINGS, AnalyzerSetting
from tbent.source import mean_pairs

DARKLESS = DetectorModel(dark_count_rate=0.0)


def at_mu(cfg, mu, **extra):
    """Source whose first channel pair emits ``mu`` pairs per pulse."""
    power = mu * cfg.source.rep_rate / (cfg.source.pgr_slope_mhz_per_mw[0] * 1e6)
    return dataclasses.replace(cfg.source, pump_power_mw=power, white_noise=0.0, **extra)


def test_loss_budget_totals():
    b = LossBudget()
    assert b.total_db() == pytest.approx(15.5)
    assert b.total_db(include_dof=False) == pytest.approx(12.5)
    assert b.transmission() == pytest.approx(10 ** -1.55)
    with pytest.raises(ConfigError):
        LossBudget(coupling=-1)
    with pytest.raises(ConfigError):
        LossBudget(channel_scale=(1, 1, 1, 0))


def test_post_selection_accounted_once(defaults):
    # explicit projection (no conversion line) matches the table with the line
    src = at_mu(defaults, 0.001)
    rec = expected_counts(src, defaults.optics, defaults.losses, DARKLESS, 10**6)
    mu = mean_pairs(src, 0)
    with_line = 1e6 * mu * defaults.losses.transmission(include_dof=True)
    without_line = 1e6 * mu * defaults.losses.transmission(include_dof=False) * 0.5
    assert rec.channel_singles("s1") == pytest.approx(without_line, rel=1e-3)
    # 3 dB is 0.5012, not exactly one half
    assert rec.channel_singles("s1") == pytest.approx(with_line, rel=3e-3)


def test_window_must_fit_in_period(defaults):
    with pytest.raises(ConfigError):
        DetectorModel(coincidence_window=1e-8).validate(1e8)
    with pytest.raises(ConfigError):
        run_experiment(defaults.source, defaults.optics, defaults.losses,
                       DetectorModel(coincidence_window=2e-8), 10)
    with pytest.raises(ConfigError):
        run_experiment(defaults.source, defaults.optics, defaults.losses, defaults.detectors, 0)


def test_noiseless_hh_twofold_probability(noiseless):
    rec = expected_counts(noiseless.source, noiseless.optics, noiseless.losses, noiseless.detectors, 1)
    assert rec.coincidences(0, 0, (0, 0)) == pytest.approx(0.125, abs=1e-12)
    assert rec.fourfold[0, 0, 0, 0] == pytest.approx(1 / 64, abs=1e-12)


def test_noiseless_mc_matches_expectation(noiseless):
    n = 200_000
    mc = run_experiment(noiseless.source, noiseless.optics, noiseless.losses, noiseless.detectors, n)
    p = mc.coincidences(0, 0, (0, 0)) / n
    assert abs(p - 0.125) < 3 * math.sqrt(0.125 * 0.875 / n)


def test_zero_mu_zero_counts(defaults):
    src = dataclasses.replace(defaults.source, pump_power_mw=0.0)
    rec = run_experiment(src, defaults.optics, defaults.losses, DARKLESS, 50_000)
    assert not rec.singles.any() and not rec.twofold.any() and not rec.fourfold.any()


def test_klyshko_exact_arithmetic():
    rec = CountsRecord.empty(10**8, 1e8, dtype=float)
    rate, eta_s, eta_i = 1e6, 0.1, 0.2
    rec.singles[0, 0] = rate * eta_s
    rec.singles[1, 0] = rate * eta_i
    rec.twofold[0, 0, 0, DELAYS.index(0)] = rate * eta_s * eta_i
    assert estimate_pgr(rec).value == pytest.approx(1e6, rel=1e-12)


def test_klyshko_symmetric_unit_efficiency():
    rec = CountsRecord.empty(100, 1.0, dtype=float)
    rec.singles[0, 0] = rec.singles[1, 1] = 7
    rec.twofold[0, 0, 1, DELAYS.index(0)] = 7
    assert estimate_pgr(rec).value == pytest.approx(7 / 100)


def test_estimators_undefined_without_data():
    rec = CountsRecord.empty(100, 1e8)
    with pytest.raises(UndefinedEstimateError):
        estimate_pgr(rec)
    with pytest.raises(UndefinedEstimateError):
        estimate_car(rec)


def test_car_zero_when_no_excess():
    rec = CountsRecord.empty(10**6, 1e8, dtype=float)
    for d in DELAYS:
        rec.twofold[0, 0, 0, DELAYS.index(d)] = 50.0 * (10**6 - abs(d)) / 10**6
    assert estimate_car(rec).value == pytest.approx(0.0, abs=1e-9)


def test_car_lower_bound_without_accidentals():
    rec = CountsRecord.empty(1000, 1e8)
    rec.twofold[0, 0, 0, DELAYS.index(0)] = 40
    est = estimate_car(rec)
    assert est.lower_bound and est.value > 0


def test_pgr_at_small_mu_matches_configuration(defaults):
    src = at_mu(defaults, 0.01)
    rec = run_experiment(src, defaults.optics, defaults.losses, defaults.detectors, 10**7)
    est = estimate_pgr(rec)
    assert abs(est.value - 0.01 * src.rep_rate) < 3 * est.stderr


def test_singles_rate_matches_oracle(defaults):
    rec = run_experiment(defaults.source, defaults.optics, defaults.losses, defaults.detectors, 5 * 10**6)
    for ch in range(4):
        expected = singles_rate_oracle(defaults.source, defaults.losses, defaults.detectors, ch) * rec.duration
        assert abs(rec.channel_singles(ch) - expected) < 3 * math.sqrt(expected)


def test_fourfold_quadratic_in_power(defaults):
    lossless = LossBudget.lossless()
    rates = []
    for power in (0.04, 0.08):
        src = dataclasses.replace(defaults.source, pump_power_mw=power, white_noise=0.0)
        rec = run_experiment(src, defaults.optics, lossless, DARKLESS, 2 * 10**6)
        rates.append(rec.fourfold_total())
    ratio = rates[1] / rates[0]
    assert 3.4 <= ratio <= 4.6


def test_fourfold_rate_against_oracle(defaults):
    exp = expected_counts(defaults.source, defaults.optics, defaults.losses, defaults.detectors, 10**8)
    rate = exp.fourfold_total() / exp.duration
    oracle = fourfold_rate_oracle(defaults.source, defaults.losses)
    # oracle counts only the leading two-pair term; the engine adds multi-pair
    # events, which raise the rate by roughly one extra mu per channel pair
    mu = mean_pairs(defaults.source, 0) + mean_pairs(defaults.source, 1)
    assert oracle < rate < oracle * (1 + 2 * mu)
    assert 1 / 3 <= rate <= 3


def test_engines_agree(defaults):
    src = at_mu(defaults, 0.1)
    losses = LossBudget.lossless((0.8, 0.7, 0.9, 0.6))
    det = DetectorModel(dark_count_rate=5e4)
    n = 400_000
    mc = run_experiment(src, defaults.optics, losses, det, n, seed=2)
    exp = expected_counts(src, defaults.optics, losses, det, n)
    assert np.all(np.abs(mc.singles - exp.singles) < 4 * np.sqrt(exp.singles) + 1)
    assert np.all(np.abs(mc.twofold - exp.twofold) < 4 * np.sqrt(exp.twofold) + 1)
    assert abs(mc.fourfold_total() - exp.fourfold_total()) < 4 * math.sqrt(exp.fourfold_total()) + 1


def test_delayed_coincidences_cross_chunk_boundaries(noiseless):
    src = at_mu(noiseless, 0.3, statistics="poisson")
    n = 5000
    small = run_experiment(src, noiseless.optics, noiseless.losses, noiseless.detectors, n, chunk_size=64)
    exp = expected_counts(src, noiseless.optics, noiseless.losses, noiseless.detectors, n)
    for d in (-5, -1, 1, 5):
        got, want = small.coincidences(0, d), exp.coincidences(0, d)
        assert abs(got - want) < 4 * math.sqrt(want)


def test_thread_count_does_not_change_results(defaults):
    src = at_mu(defaults, 0.2)
    kw = dict(n_pulses=30_000, seed=99, chunk_size=4096)
    one = run_experiment(src, defaults.optics, LossBudget.lossless(), DARKLESS, threads=1, **kw)
    three = run_experiment(src, defaults.optics, LossBudget.lossless(), DARKLESS, threads=3, **kw)
    assert one.to_csv() == three.to_csv()
    assert json.dumps(one.to_dict()) == json.dumps(three.to_dict())


def test_seed_changes_results(defaults):
    src = at_mu(defaults, 0.2)
    a = run_experiment(src, defaults.optics, LossBudget.lossless(), DARKLESS, 20_000, seed=1)
    b = run_experiment(src, defaults.optics, LossBudget.lossless(), DARKLESS, 20_000, seed=2)
    assert not np.array_equal(a.twofold, b.twofold)


def test_counts_record_round_trip_and_merge(defaults):
    settings = (PAULI_SETTINGS["D"], AnalyzerSetting.from_degrees(10, 5), PAULI_SETTINGS["H"], PAULI_SETTINGS["L"])
    rec = acquire(at_mu(defaults, 0.1), defaults.optics, LossBudget.lossless(), DARKLESS, 10_000, settings,
                  engine="sampled", setting_id=3)
    back = CountsRecord.from_dict(json.loads(json.dumps(rec.to_dict())))
    assert np.array_equal(back.twofold, rec.twofold)
    assert back.setting_id == 3 and back.engine == "sampled"
    assert np.allclose([s.hwp for s in back.settings], [s.hwp for s in settings])
    merged = rec + rec
    assert merged.n_pulses == 20_000 and merged.fourfold_total() == 2 * rec.fourfold_total()
    lines = rec.to_csv().splitlines()
    assert len(lines) == 1 + len(DELAYS)
    with pytest.raises(ConfigError):
        acquire(defaults.source, defaults.optics, defaults.losses, defaults.detectors, 10, engine="analog")
