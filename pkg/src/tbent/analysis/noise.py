"""Effective post-selected polarization state under multi-pair noise.

Per channel pair the coincidence-conditioned state is

    rho = (W_true * rho_pair + W_acc * I/4) / (W_true + W_acc)

with the per-pulse weights of a genuine pair coincidence and of accidental
ones (two independent pairs, or a dark click with a photon or another
dark), to leading order in mu and the dark probability. ``rho_pair`` is the
white-noise-admixed Bell state with its coherence dephased by the pump
phase jitter. Four-photon states average rho_1 (x) rho_2 over a common
phase draw, since both pairs share one pump pulse.
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
from scipy.optimize import brentq

from ..detection import DetectorModel, LossBudget
from ..errors import ConfigError
from ..optics import OpticsConfig
from ..source import SourceConfig, mean_pairs
from ..state import DensityMatrix, fidelity, ideal_bell, ideal_bell_pair_product, polarization_vector

_QUADRATURE = 40


def _pair_state(white: float, phase: float) -> np.ndarray:
    v = polarization_vector(ideal_bell(phase))
    return (1 - white) * np.outer(v, v.conj()) + white * np.eye(4) / 4


def _mixture_weights(mu: float, eta_s: float, eta_i: float, dark: float) -> tuple[float, float]:
    true = mu * eta_s * eta_i / 4
    acc = mu * mu * eta_s * eta_i / 4 + dark * mu * (eta_s + eta_i) + 4 * dark * dark
    return true, acc


def _group_state(source, losses, detectors, optics, group, delta) -> np.ndarray:
    mu = mean_pairs(source, group)
    eta = losses.channel_transmissions()
    true, acc = _mixture_weights(mu, eta[2 * group], eta[2 * group + 1], detectors.dark_probability())
    phase = optics.phase_s[group] + optics.phase_i[group] - source.phase_p - delta
    rho = _pair_state(source.white_noise, phase)
    if true + acc == 0:
        return rho
    return (true * rho + acc * np.eye(4) / 4) / (true + acc)


def predict_state_under_noise(source: SourceConfig, losses: LossBudget | None = None,
                              detectors: DetectorModel | None = None, optics: OpticsConfig | None = None,
                              photons: int = 2, group: int = 0) -> DensityMatrix:
    """Effective 2-qubit (one channel pair) or 4-qubit post-selected state.

    Qubit order is (s, i) or (s1, i1, s2, i2)."""
    losses = losses or LossBudget()
    detectors = detectors or DetectorModel()
    optics = optics or OpticsConfig()
    if photons not in (2, 4):
        raise ConfigError("photons must be 2 or 4")
    for g in (0, 1) if photons == 4 else (group,):
        mean_pairs(source, g)  # raises outside the perturbative regime
    sigma = source.phase_jitter_std
    if sigma > 0:
        x, w = np.polynomial.hermite_e.hermegauss(_QUADRATURE)
        nodes, weights = sigma * x, w / w.sum()
    else:
        nodes, weights = np.array([0.0]), np.array([1.0])
    dim = 2 ** photons
    rho = np.zeros((dim, dim), dtype=complex)
    for d, wt in zip(nodes, weights):
        if photons == 2:
            rho += wt * _group_state(source, losses, detectors, optics, group, d)
        else:
            rho += wt * np.kron(_group_state(source, losses, detectors, optics, 0, d),
                                _group_state(source, losses, detectors, optics, 1, d))
    qubits = ("s1", "i1", "s2", "i2") if photons == 4 else (f"s{group + 1}", f"i{group + 1}")
    return DensityMatrix(rho, qubits)


def ideal_target(source: SourceConfig, optics: OpticsConfig | None = None, photons: int = 2, group: int = 0):
    """Bell state (or pair product) with the configured interferometer phases."""
    optics = optics or OpticsConfig()
    phases = [optics.phase_s[g] + optics.phase_i[g] - source.phase_p for g in (0, 1)]
    if photons == 4:
        return ideal_bell_pair_product(phases)
    return ideal_bell(phases[group], (f"s{group + 1}", f"i{group + 1}"))


def calibrate_white_noise(target_fidelity: float, source: SourceConfig | None = None,
                          losses: LossBudget | None = None, detectors: DetectorModel | None = None,
                          group: int = 0) -> float:
    """White-noise fraction at which the predicted pair fidelity hits the target."""
    source = source or SourceConfig()

    def gap(w):
        rho = predict_state_under_noise(replace(source, white_noise=w), losses, detectors, group=group)
        return fidelity(rho, ideal_target(source, group=group)) - target_fidelity

    if gap(0.0) < 0 or gap(1.0) > 0:
        raise ConfigError(f"fidelity {target_fidelity} unreachable by white noise alone")
    return brentq(gap, 0.0, 1.0, xtol=1e-12)


def jitter_fidelity(sigma: float) -> float:
    """Bell fidelity of a pair dephased by Gaussian phase noise of width sigma."""
    return (1 + math.exp(-sigma * sigma / 2)) / 2
