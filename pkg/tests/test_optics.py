import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tbent.errors import ArityError, ConfigError
from tbent.optics import (BASIS_SETTINGS, PAULI_KETS, PAULI_SETTINGS, POLARIZATION_FLIP, AnalyzerSetting,
                          OpticsConfig, UmziConfig, WaveplateSetting, analyzer_setting_for, apply_jones,
                          check_matched_delays, dof_convert, jones_hwp, jones_qwp, measure_projector, pbs_route,
                          pump_modulator, settings_from_json, settings_to_json)
from tbent.source import ideal_pair_state
from tbent.state import ModeLabel, PureState, fidelity, ideal_bell, inner, polarization_vector, to_density

angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)


def is_unitary(m):
    return np.allclose(m @ m.conj().T, np.eye(len(m)), atol=1e-12)


def equal_up_to_phase(a, b):
    return abs(abs(np.vdot(a, b)) - np.linalg.norm(a) * np.linalg.norm(b)) < 1e-12


H = PureState.basis(ModeLabel("s1", "m", "H"))


def test_hwp_examples():
    assert np.allclose(jones_hwp(0), [[1, 0], [0, -1]])
    assert np.allclose(jones_hwp(math.radians(22.5)) @ [1, 0], np.array([1, 1]) / math.sqrt(2))
    assert np.allclose(jones_hwp(math.radians(45)) @ [1, 0], [0, 1])


def test_qwp_examples():
    double = jones_qwp(math.pi / 4) @ jones_qwp(math.pi / 4)
    assert equal_up_to_phase(double @ [1, 0], [0, 1])
    assert equal_up_to_phase(jones_qwp(0) @ [1, 0], [1, 0])


def test_qwp_convention_golden():
    # fast axis at 30 deg, worked by hand: c^2 = 3/4, s^2 = 1/4, (1-i)^2 = -2i
    r = 1 / math.sqrt(2)
    expected = np.array([[r * (1 - 0.5j), -1j * math.sqrt(3) / (2 * math.sqrt(2))],
                         [-1j * math.sqrt(3) / (2 * math.sqrt(2)), r * (1 + 0.5j)]])
    assert np.allclose(jones_qwp(math.radians(30)), expected, atol=1e-12)


def test_polarization_flip_is_pure_swap():
    assert np.allclose(POLARIZATION_FLIP, [[0, 1], [1, 0]])


@given(angles)
def test_waveplates_unitary(theta):
    h = jones_hwp(theta)
    assert is_unitary(h)
    assert np.allclose(h, h.conj().T)
    assert abs(np.linalg.det(h) + 1) < 1e-12
    assert is_unitary(jones_qwp(theta))
    assert is_unitary(WaveplateSetting("QWP", theta).matrix())


@given(angles)
def test_qwp_fourth_power_is_identity_up_to_phase(theta):
    m = np.linalg.matrix_power(jones_qwp(theta), 4)
    assert np.allclose(m, m[0, 0] * np.eye(2), atol=1e-12)
    assert abs(abs(m[0, 0]) - 1) < 1e-12


def test_waveplate_kind_validated():
    with pytest.raises(ValueError):
        WaveplateSetting("λ/8", 0.0)


def test_pbs_route_tags_and_norm():
    d = apply_jones(H, jones_hwp(math.radians(22.5)))
    routed = pbs_route(d)
    paths = {key[0].polarization: key[0].path for key in routed.terms}
    assert paths == {"H": "long", "V": "short"}
    assert routed.norm() == pytest.approx(1.0)
    ports = pbs_route(d, tags=("t", "r"))
    assert {key[0].path for key in ports.terms} == {"t", "r"}
    with pytest.raises(ArityError):
        pbs_route(routed)


@pytest.mark.parametrize("phi, expected", [(0.0, (0.5, 0.5)), (math.pi, (0.5, -0.5))])
def test_pump_modulator(phi, expected):
    out = pump_modulator(phi)
    e = out.transmitted.amplitude(ModeLabel("pump", "e", "H"))
    l = out.transmitted.amplitude(ModeLabel("pump", "l", "H"))
    assert np.allclose([e, l], expected, atol=1e-12)
    assert out.transmitted.norm_squared() == pytest.approx(0.5)
    assert out.transmitted.norm_squared() + out.reflected.norm_squared() == pytest.approx(1.0, abs=1e-12)
    re = out.reflected.amplitude(ModeLabel("pump", "e", "V"))
    rl = out.reflected.amplitude(ModeLabel("pump", "l", "V"))
    assert abs(abs(re) - 0.5) < 1e-12 and abs(rl + re * np.exp(1j * phi)) < 1e-12


def test_dof_convert_ideal_pair():
    out = dof_convert(ideal_pair_state(0.0))
    assert out.success_probability == pytest.approx(0.25, abs=1e-12)
    assert fidelity(to_density(out.state), ideal_bell(0.0)) == pytest.approx(1.0, abs=1e-10)


def test_dof_convert_phases_cancel():
    out = dof_convert(ideal_pair_state(math.pi / 2), math.pi / 4, math.pi / 4)
    assert fidelity(to_density(out.state), ideal_bell(0.0)) == pytest.approx(1.0, abs=1e-10)


def test_dof_convert_early_only_input():
    # the early-only term lands on VV in this convention; the polarization
    # weight is still a single product term and p = 1/4
    pair = PureState({(ModeLabel("s1", "e", "V"), ModeLabel("i1", "e", "V")): 1.0})
    out = dof_convert(pair)
    assert out.success_probability == pytest.approx(0.25, abs=1e-12)
    assert len(out.state) == 1
    (key,) = out.state.terms
    assert {m.polarization for m in key} == {"V"}
    assert {m.timebin for m in key} == {"m"}


def test_dof_convert_rejects_non_pairs():
    with pytest.raises(ArityError):
        dof_convert(ideal_pair_state(0.0) @ ideal_pair_state(0.0, ("s2", "i2")))
    with pytest.raises(ArityError):
        dof_convert(ideal_bell())  # already on the middle bin
    with pytest.raises(ArityError):
        dof_convert(PureState({(ModeLabel("s1", "e", "V"), ModeLabel("i2", "e", "V")): 1.0}))


def test_dof_convert_phase_grid():
    grid = np.linspace(0, 2 * math.pi, 5, endpoint=False)
    for pp, ps, pi in itertools.product(grid, repeat=3):
        out = dof_convert(ideal_pair_state(pp), ps, pi)
        assert out.success_probability == pytest.approx(0.25, abs=1e-12)
        f = fidelity(to_density(out.state), ideal_bell(ps + pi - pp))
        assert f == pytest.approx(1.0, abs=1e-10)


@given(st.complex_numbers(max_magnitude=1), st.complex_numbers(max_magnitude=1), angles, angles)
def test_dof_convert_success_probability_amplitude_independent(a, b, ps, pi):
    if abs(a) + abs(b) < 1e-3:
        return
    pair = PureState({
        (ModeLabel("s1", "e", "V"), ModeLabel("i1", "e", "V")): a,
        (ModeLabel("s1", "l", "V"), ModeLabel("i1", "l", "V")): b,
    }).normalized()
    assert dof_convert(pair, ps, pi).success_probability == pytest.approx(0.25, abs=1e-12)


def test_measure_projector_examples():
    p = measure_projector([AnalyzerSetting(0, 0)], ["H"])
    assert p.isclose(H, up_to_phase=True)
    p = measure_projector([AnalyzerSetting.from_degrees(22.5, 0)], ["H"])
    assert equal_up_to_phase(polarization_vector(p), np.array([1, 1]) / math.sqrt(2))
    with pytest.raises(ArityError):
        measure_projector([AnalyzerSetting()], ["H", "V"])


@pytest.mark.parametrize("name", sorted(PAULI_KETS))
def test_pauli_setting_round_trip(name):
    ket = PAULI_KETS[name]
    assert equal_up_to_phase(PAULI_SETTINGS[name].projector_ket("H"), ket)
    again = analyzer_setting_for(ket).projector_ket("H")
    assert equal_up_to_phase(again, ket)


@given(st.complex_numbers(max_magnitude=1), st.complex_numbers(max_magnitude=1))
def test_analyzer_setting_for_any_ket(a, b):
    ket = np.array([a, b])
    if np.linalg.norm(ket) < 1e-3:
        return
    ket = ket / np.linalg.norm(ket)
    assert equal_up_to_phase(analyzer_setting_for(ket).projector_ket("t"), ket)


def test_basis_settings_reflected_port_is_orthogonal():
    for setting in BASIS_SETTINGS.values():
        t, r = setting.projector_ket("H"), setting.projector_ket("V")
        assert abs(np.vdot(t, r)) < 1e-12


def test_settings_json_round_trip():
    rows = settings_to_json([PAULI_SETTINGS["D"], PAULI_SETTINGS["R"]], ["s1", "i1"])
    back = settings_from_json(rows)
    assert back["s1"].hwp == pytest.approx(PAULI_SETTINGS["D"].hwp)
    assert back["i1"].qwp == pytest.approx(PAULI_SETTINGS["R"].qwp)
    with pytest.raises(ConfigError):
        settings_from_json([{"photon": "s1", "hwp_deg": 0, "extra": 1}])


def test_delays_must_match():
    check_matched_delays(UmziConfig("pump_modulator"), UmziConfig("dof_converter"))
    with pytest.raises(ConfigError):
        OpticsConfig(converter_delay=650e-12).validate()
    with pytest.raises(ConfigError):
        UmziConfig("splitter")


@given(st.floats(0, math.pi))
def test_twofold_fringe_shape(theta_i):
    phi2 = ideal_bell()
    setting_s = AnalyzerSetting.from_degrees(22.5)
    prob = abs(inner(measure_projector([setting_s, AnalyzerSetting(theta_i)], ["H", "H"]), phi2)) ** 2
    # (1 + sin 4 theta_i) / 4 for the H port with the signal at 22.5 deg
    assert prob == pytest.approx((1 + math.sin(4 * theta_i)) / 4, abs=1e-12)
