"""Probabilistic multi-pair SPDC emission per pump pulse."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigError, OutOfModelError
from .state import ModeLabel, PureState

GROUPS = (("s1", "i1"), ("s2", "i2"))
STATISTICS = ("poisson", "thermal", "deterministic")

# Fraction of pairs whose post-selected polarization state is white noise.
# Chosen so the predicted (s1, i1) fidelity at 0.12 mW, multi-pair
# contamination included, is 0.874; see tbent.analysis.noise.
CALIBRATED_WHITE_NOISE = 0.04818


def _assumption(text):
    return {"assumption": text}


@dataclass(frozen=True)
class SourceConfig:
    rep_rate: float = 1e8  # Hz
    pump_power_mw: float = 0.08
    pgr_slope_mhz_per_mw: tuple[float, float] = (120.0, 90.0)
    phase_p: float = 0.0  # rad
    phase_jitter_std: float = field(default=0.0, metadata=_assumption(
        "interferometer phase noise enters as Gaussian jitter on phi_p, per pulse"))
    max_pairs_per_pulse: int = field(default=3, metadata=_assumption(
        "pair-number distribution truncated and renormalized at this order"))
    statistics: str = field(default="poisson", metadata=_assumption(
        "multimode broadband emission treated as Poissonian pair statistics"))
    white_noise: float = field(default=CALIBRATED_WHITE_NOISE, metadata=_assumption(
        "per-pair white-noise fraction calibrated to F=0.874 at 0.12 mW"))
    seed: int = 12345

    def __post_init__(self):
        if self.rep_rate <= 0:
            raise ConfigError("rep_rate must be positive")
        if self.pump_power_mw < 0:
            raise ConfigError("pump power must be non-negative")
        if len(self.pgr_slope_mhz_per_mw) != len(GROUPS):
            raise ConfigError("need one PGR slope per channel pair")
        if any(s < 0 for s in self.pgr_slope_mhz_per_mw):
            raise ConfigError("PGR slopes must be non-negative")
        if self.phase_jitter_std < 0:
            raise ConfigError("phase_jitter_std must be non-negative")
        if self.max_pairs_per_pulse < 2:
            raise ConfigError("max_pairs_per_pulse must be at least 2")
        if self.statistics not in STATISTICS:
            raise ConfigError(f"statistics must be one of {STATISTICS}")
        if not 0 <= self.white_noise <= 1:
            raise ConfigError("white_noise must lie in [0, 1]")


def mean_pairs(config: SourceConfig, channel_pair: int) -> float:
    """Mean pairs per pulse: slope * power / rep_rate."""
    mu = config.pgr_slope_mhz_per_mw[channel_pair] * 1e6 * config.pump_power_mw / config.rep_rate
    if mu >= 1:
        raise OutOfModelError(
            f"mean pair number {mu:.3g} >= 1 for channel pair {channel_pair}: outside perturbative regime")
    return mu


def pair_number_distribution(mu: float, statistics: str = "poisson", max_pairs: int = 3) -> np.ndarray:
    """P(k) for k = 0..max_pairs, truncated and renormalized."""
    k = np.arange(max_pairs + 1)
    if statistics == "poisson":
        fact = np.array([math.factorial(j) for j in k], dtype=float)
        p = math.exp(-mu) * mu ** k / fact
    elif statistics == "thermal":
        p = mu ** k / (1 + mu) ** (k + 1)
    elif statistics == "deterministic":
        p = (k == (1 if mu > 0 else 0)).astype(float)
    else:
        raise ConfigError(f"unknown statistics {statistics!r}")
    return p / p.sum()


def pair_distributions(config: SourceConfig) -> list[np.ndarray]:
    return [pair_number_distribution(mean_pairs(config, g), config.statistics, config.max_pairs_per_pulse)
            for g in range(len(GROUPS))]


def sample_pair_numbers(dists: Sequence[np.ndarray], rng: np.random.Generator, n: int) -> np.ndarray:
    """Independent pair counts per channel pair, shape (groups, n)."""
    u = rng.random((len(dists), n))
    out = np.empty((len(dists), n), dtype=np.int64)
    for g, p in enumerate(dists):
        cdf = np.cumsum(p)
        cdf[-1] = 1.0
        out[g] = np.searchsorted(cdf, u[g], side="right")
    return out


def ideal_pair_state(phase_p: float, channels: Sequence[str] = GROUPS[0], replica: int = 0) -> PureState:
    """(|e_s e_i> + e^{i phase_p}|l_s l_i>)/sqrt(2) (x) |V_s V_i>."""
    s, i = channels
    return PureState({
        (ModeLabel(s, "e", "V", replica=replica), ModeLabel(i, "e", "V", replica=replica)): 1 / math.sqrt(2),
        (ModeLabel(s, "l", "V", replica=replica), ModeLabel(i, "l", "V", replica=replica)):
            cmath.exp(1j * phase_p) / math.sqrt(2),
    })


class PulseEmission(NamedTuple):
    pair_counts: tuple[int, ...]
    phase_p: float
    state: PureState


def sample_pulse(config: SourceConfig, rng: np.random.Generator) -> PulseEmission:
    """One pump pulse: pair counts per channel pair and the emitted product state.

    Multiple pairs in one channel pair are distinguishable replicas."""
    counts = tuple(int(k) for k in sample_pair_numbers(pair_distributions(config), rng, 1)[:, 0])
    phase = config.phase_p
    if config.phase_jitter_std > 0:
        phase += rng.normal(0.0, config.phase_jitter_std)
    state = PureState.vacuum()
    for chans, k in zip(GROUPS, counts):
        for r in range(k):
            state = state.tensor(ideal_pair_state(phase, chans, replica=r))
    return PulseEmission(counts, phase, state)
