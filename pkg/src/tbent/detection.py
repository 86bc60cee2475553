"""Loss, detection and coincidence counting.

Two engines produce a :class:`CountsRecord` for one analyzer setting:

``mc``
    Pulse-by-pulse Monte Carlo. Pair numbers are drawn per channel pair,
    each pair's post-selection/analyzer outcome is drawn from exact
    projector probabilities, photons are thinned by the line transmission
    and darks are added per detector gate. Delayed twofolds pair clicks
    across neighbouring pulses, like a TCSPC delay histogram.
``expected``
    The same model evaluated in closed form (threshold-detector click
    probabilities averaged over the pair-number distribution and the phase
    jitter). ``sample_counts`` turns it into Poisson-distributed counts,
    which is what long acquisitions of rare fourfold events use.

The time-bin-to-polarization projection is simulated explicitly, so the
``dof_conversion`` line of the loss budget is left out of the per-photon
transmission (see :meth:`LossBudget.transmission`).
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .errors import ConfigError, UndefinedEstimateError
from .optics import (AnalyzerSetting, OpticsConfig, apply_jones, convert_timebin_to_polarization,
                     merge_middle, pbs_route)
from .rng import stream
from .source import GROUPS, SourceConfig, mean_pairs, pair_distributions, sample_pair_numbers
from .state import ModeLabel, PureState

SCHEMA_VERSION = 1
DETECTOR_CHANNELS = ("s1", "i1", "s2", "i2")
PORTS = ("H", "V")
DELAYS = tuple(range(-5, 6))
CHUNK_SIZE = 1 << 20
_HALO = max(abs(d) for d in DELAYS)
# white noise: each photon independently lands in the middle bin with
# probability 1/2 and then on either port with probability 1/2
_WHITE_PHOTON = np.array([0.25, 0.25, 0.5])


def _assumption(text):
    return {"assumption": text}


@dataclass(frozen=True)
class LossBudget:
    """Per-stage losses in dB, applied identically to all four channels."""

    coupling: float = 4.0
    umzi_insertion: float = 2.7
    dof_conversion: float = 3.0
    cwdm: float = 1.5
    analyzer: float = 2.5
    fiber_to_detector: float = 0.8
    detector: float = 1.0
    # extra transmission factor per detector channel (s1, i1, s2, i2)
    channel_scale: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)

    _STAGES = ("coupling", "umzi_insertion", "dof_conversion", "cwdm", "analyzer",
               "fiber_to_detector", "detector")

    def __post_init__(self):
        for name in self._STAGES:
            if getattr(self, name) < 0:
                raise ConfigError(f"loss stage {name} must be non-negative dB")
        if len(self.channel_scale) != 4 or not all(0 < c <= 1 for c in self.channel_scale):
            raise ConfigError("channel_scale needs four factors in (0, 1]")

    @classmethod
    def lossless(cls, channel_scale=(1.0, 1.0, 1.0, 1.0)) -> LossBudget:
        return cls(*(0.0,) * 7, channel_scale=tuple(channel_scale))

    def stages(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in self._STAGES}

    def total_db(self, include_dof: bool = True) -> float:
        return sum(v for k, v in self.stages().items() if include_dof or k != "dof_conversion")

    def transmission(self, include_dof: bool = True) -> float:
        return 10 ** (-self.total_db(include_dof) / 10)

    def channel_transmissions(self) -> np.ndarray:
        """Per-photon transmission used when the projection is simulated."""
        return self.transmission(include_dof=False) * np.asarray(self.channel_scale, dtype=float)


@dataclass(frozen=True)
class DetectorModel:
    dark_count_rate: float = field(default=100.0, metadata=_assumption(
        "typical SNSPD dark count rate per detector"))
    coincidence_window: float = field(default=1e-9, metadata=_assumption(
        "one gate per pulse of this width"))
    dead_time: float = field(default=0.0, metadata=_assumption(
        "accepted only below one pulse period, where it has no effect"))

    def __post_init__(self):
        if self.dark_count_rate < 0 or self.coincidence_window <= 0 or self.dead_time < 0:
            raise ConfigError("detector parameters must be non-negative (window positive)")

    def validate(self, rep_rate: float) -> None:
        period = 1.0 / rep_rate
        if self.coincidence_window >= period:
            raise ConfigError(
                f"coincidence window {self.coincidence_window:g} s is not shorter than the pulse period {period:g} s")
        if self.dead_time >= period:
            raise ConfigError("dead time spanning more than one pulse period is not modeled")

    def dark_probability(self) -> float:
        """Probability of a dark click in one gate."""
        return -math.expm1(-self.dark_count_rate * self.coincidence_window)


# ---------------------------------------------------------------------------
# counts
# ---------------------------------------------------------------------------

@dataclass
class CountsRecord:
    """Tallies for one analyzer setting.

    ``singles[c, p]``: clicks on detector port ``p`` of channel ``c``.
    ``twofold[g, a, b, k]``: signal port ``a`` at pulse t and idler port ``b``
    at pulse t + DELAYS[k], channel pair ``g``.
    ``fourfold[a, b, c, d]``: all four channels click in the same pulse.
    """

    n_pulses: int
    rep_rate: float
    singles: np.ndarray
    twofold: np.ndarray
    fourfold: np.ndarray
    settings: tuple[AnalyzerSetting, ...] = ()
    setting_id: int = 0
    engine: str = "mc"

    @classmethod
    def empty(cls, n_pulses, rep_rate, settings=(), setting_id=0, engine="mc", dtype=np.int64):
        return cls(n_pulses, rep_rate, np.zeros((4, 2), dtype), np.zeros((2, 2, 2, len(DELAYS)), dtype),
                   np.zeros((2, 2, 2, 2), dtype), tuple(settings), setting_id, engine)

    @property
    def duration(self) -> float:
        return self.n_pulses / self.rep_rate

    def channel_singles(self, channel: str | int) -> float:
        c = DETECTOR_CHANNELS.index(channel) if isinstance(channel, str) else channel
        return self.singles[c].sum()

    def coincidences(self, group: int = 0, delay: int = 0, ports: tuple[int, int] | None = None) -> float:
        block = self.twofold[group, :, :, DELAYS.index(delay)]
        return block.sum() if ports is None else block[ports]

    def fourfold_total(self) -> float:
        return self.fourfold.sum()

    def __add__(self, other: CountsRecord) -> CountsRecord:
        if other.settings != self.settings or other.rep_rate != self.rep_rate:
            raise ConfigError("can only merge records taken with the same setting and rep rate")
        return CountsRecord(self.n_pulses + other.n_pulses, self.rep_rate, self.singles + other.singles,
                            self.twofold + other.twofold, self.fourfold + other.fourfold,
                            self.settings, self.setting_id, self.engine)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "engine": self.engine,
            "setting_id": self.setting_id,
            "settings": [{"photon": ch, "hwp_deg": s.hwp_deg, "qwp_deg": s.qwp_deg}
                         for ch, s in zip(DETECTOR_CHANNELS, self.settings)],
            "n_pulses": self.n_pulses,
            "rep_rate": self.rep_rate,
            "duration": self.duration,
            "delays": list(DELAYS),
            "singles": self.singles.tolist(),
            "twofold": self.twofold.tolist(),
            "fourfold": self.fourfold.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> CountsRecord:
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError(f"unsupported counts schema {data.get('schema_version')!r}")
        settings = tuple(AnalyzerSetting.from_degrees(r["hwp_deg"], r["qwp_deg"]) for r in data["settings"])
        return cls(int(data["n_pulses"]), float(data["rep_rate"]), np.array(data["singles"]),
                   np.array(data["twofold"]), np.array(data["fourfold"]), settings,
                   int(data["setting_id"]), data["engine"])

    def csv_rows(self) -> list[dict]:
        rows = []
        for k, d in enumerate(DELAYS):
            row = {"setting_id": self.setting_id, "delay": d}
            for g, (s, i) in enumerate(GROUPS):
                for a, pa in enumerate(PORTS):
                    for b, pb in enumerate(PORTS):
                        row[f"{s}{i}_{pa}{pb}"] = self.twofold[g, a, b, k]
            row["fourfold"] = self.fourfold_total() if d == 0 else ""
            rows.append(row)
        return rows

    def to_csv(self) -> str:
        rows = self.csv_rows()
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue()


# ---------------------------------------------------------------------------
# per-pair outcome model
# ---------------------------------------------------------------------------

def _photon_class(label: ModeLabel) -> int:
    """0/1: middle bin on port H/V; 2: outside the detection gate."""
    if label.timebin != "m":
        return 2
    return 0 if label.path == "t" else 1


class PairOutcomeModel:
    """Outcome probabilities of one pair through conversion and analyzers.

    Classes per photon are (port H, port V, rejected); ``probabilities``
    returns the joint 3x3 table flattened to 9 entries, signal-major."""

    def __init__(self, group: int, setting_s: AnalyzerSetting, setting_i: AnalyzerSetting,
                 phase_s: float = 0.0, phase_i: float = 0.0, white_noise: float = 0.0):
        s, i = GROUPS[group]
        tables = []
        for tb in ("e", "l"):
            pair = PureState.basis(ModeLabel(s, tb, "V"), ModeLabel(i, tb, "V"))
            out = merge_middle(convert_timebin_to_polarization(pair, {s: phase_s, i: phase_i}))
            out = apply_jones(out, setting_s.unitary(), s)
            out = apply_jones(out, setting_i.unitary(), i)
            tables.append(pbs_route(out, tags=("t", "r")).terms)
        keys = sorted(set(tables[0]) | set(tables[1]), key=lambda k: tuple(m.sort_key() for m in k))
        self.amp_early = np.array([tables[0].get(k, 0j) for k in keys])
        self.amp_late = np.array([tables[1].get(k, 0j) for k in keys])
        self.indicator = np.zeros((len(keys), 9))
        for n, (ls, li) in enumerate(keys):
            self.indicator[n, 3 * _photon_class(ls) + _photon_class(li)] = 1.0
        self.white_noise = white_noise
        self._white = np.outer(_WHITE_PHOTON, _WHITE_PHOTON).ravel()

    def probabilities(self, phase_p) -> np.ndarray:
        phase = np.asarray(phase_p, dtype=float)
        amp = (self.amp_early + np.exp(1j * phase)[..., None] * self.amp_late) / math.sqrt(2)
        p = (np.abs(amp) ** 2) @ self.indicator
        w = self.white_noise
        return (1 - w) * p + w * self._white if w else p


def outcome_models(source: SourceConfig, optics: OpticsConfig,
                   settings: Sequence[AnalyzerSetting]) -> list[PairOutcomeModel]:
    return [PairOutcomeModel(g, settings[2 * g], settings[2 * g + 1], optics.phase_s[g], optics.phase_i[g],
                             source.white_noise) for g in range(len(GROUPS))]


def _check_settings(settings) -> tuple[AnalyzerSetting, ...]:
    if settings is None:
        return (AnalyzerSetting(),) * 4
    settings = tuple(settings)
    if len(settings) != 4:
        raise ConfigError("need one analyzer setting per channel (s1, i1, s2, i2)")
    return settings


# ---------------------------------------------------------------------------
# Monte Carlo engine
# ---------------------------------------------------------------------------

@dataclass
class _Context:
    source: SourceConfig
    models: list
    dists: list
    eta: np.ndarray
    dark: float
    seed: int
    setting_id: int


class _ChunkTally(NamedTuple):
    singles: np.ndarray
    twofold: np.ndarray
    fourfold: np.ndarray
    head: np.ndarray
    tail: np.ndarray


def _simulate_chunk(ctx: _Context, index: int, n: int) -> _ChunkTally:
    rng = stream(ctx.seed, "mc", ctx.setting_id, index)
    k = sample_pair_numbers(ctx.dists, rng, n)
    sigma = ctx.source.phase_jitter_std
    delta = rng.normal(0.0, sigma, n) if sigma > 0 else None
    click = np.zeros((4, 2, n), dtype=bool)

    for g, model in enumerate(ctx.models):
        kg = k[g]
        pulse = np.repeat(np.arange(n), kg)
        npairs = pulse.size
        u = rng.random(npairs)
        if delta is None:
            cdf = np.cumsum(model.probabilities(ctx.source.phase_p))
            outcome = np.searchsorted(cdf, u * cdf[-1], side="right")
        else:
            cdf = np.cumsum(model.probabilities(ctx.source.phase_p + delta[pulse]), axis=1)
            outcome = (u[:, None] * cdf[:, -1:] >= cdf).sum(axis=1)
        outcome = np.minimum(outcome, 8)
        survive = rng.random((2, npairs)) < ctx.eta[[2 * g, 2 * g + 1]][:, None]
        for j, cls in enumerate((outcome // 3, outcome % 3)):
            ok = survive[j] & (cls < 2)
            click[2 * g + j, cls[ok], pulse[ok]] = True

    if ctx.dark > 0:
        for c in range(4):
            for p in range(2):
                m = rng.binomial(n, ctx.dark)
                if m:
                    click[c, p, rng.choice(n, m, replace=False)] = True

    singles = click.sum(axis=2, dtype=np.int64)
    twofold = np.zeros((2, 2, 2, len(DELAYS)), dtype=np.int64)
    for g in range(2):
        for a in range(2):
            idx_s = np.flatnonzero(click[2 * g, a])
            for b in range(2):
                row_i = click[2 * g + 1, b]
                for kd, d in enumerate(DELAYS):
                    t = idx_s + d
                    t = t[(t >= 0) & (t < n)]
                    twofold[g, a, b, kd] = np.count_nonzero(row_i[t])

    all4 = click.any(axis=1).all(axis=0)
    sub = click[:, :, all4].astype(np.int64)
    fourfold = np.einsum("at,bt,ct,dt->abcd", sub[0], sub[1], sub[2], sub[3])
    return _ChunkTally(singles, twofold, fourfold,
                       click[:, :, :_HALO].copy(), click[:, :, -_HALO:].copy())


def _boundary_twofold(tail: np.ndarray, head: np.ndarray) -> np.ndarray:
    """Delayed coincidences with one click in each of two neighbouring chunks."""
    out = np.zeros((2, 2, 2, len(DELAYS)), dtype=np.int64)
    w = np.concatenate([tail, head], axis=2)
    m, length = tail.shape[2], w.shape[2]
    for kd, d in enumerate(DELAYS):
        for t in range(length):
            u = t + d
            if 0 <= u < length and (t < m) != (u < m):
                for g in range(2):
                    out[g, :, :, kd] += np.outer(w[2 * g, :, t], w[2 * g + 1, :, u])
    return out


def _chunks(n_pulses: int, chunk_size: int) -> list[tuple[int, int]]:
    return [(i, min(chunk_size, n_pulses - start)) for i, start in enumerate(range(0, n_pulses, chunk_size))]


def run_experiment(source: SourceConfig, optics: OpticsConfig, losses: LossBudget, detectors: DetectorModel,
                   n_pulses: int, settings: Sequence[AnalyzerSetting] | None = None, *,
                   seed: int | None = None, setting_id: int = 0, threads: int = 1,
                   chunk_size: int = CHUNK_SIZE) -> CountsRecord:
    """Monte Carlo acquisition of ``n_pulses`` pump pulses at one setting.

    Results depend only on (seed, setting_id, chunk_size), never on
    ``threads``."""
    if n_pulses < 1:
        raise ConfigError("n_pulses must be at least 1")
    if chunk_size < 4 * _HALO:
        raise ConfigError(f"chunk_size must be at least {4 * _HALO}")
    settings = _check_settings(settings)
    detectors.validate(source.rep_rate)
    optics.validate()
    ctx = _Context(source, outcome_models(source, optics, settings), pair_distributions(source),
                   losses.channel_transmissions(), detectors.dark_probability(),
                   source.seed if seed is None else seed, setting_id)
    chunks = _chunks(n_pulses, chunk_size)
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            tallies = list(pool.map(lambda c: _simulate_chunk(ctx, *c), chunks))
    else:
        tallies = [_simulate_chunk(ctx, *c) for c in chunks]

    rec = CountsRecord.empty(n_pulses, source.rep_rate, settings, setting_id, "mc")
    for n, t in enumerate(tallies):
        rec.singles += t.singles
        rec.twofold += t.twofold
        rec.fourfold += t.fourfold
        if n:
            rec.twofold += _boundary_twofold(tallies[n - 1].tail, t.head)
    return rec


# ---------------------------------------------------------------------------
# expectation engine
# ---------------------------------------------------------------------------

def _jitter_nodes(source: SourceConfig, order: int = 40) -> tuple[np.ndarray, np.ndarray]:
    if source.phase_jitter_std == 0:
        return np.array([0.0]), np.array([1.0])
    x, w = np.polynomial.hermite_e.hermegauss(order)
    return source.phase_jitter_std * x, w / w.sum()


def _generating(dist: np.ndarray, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    return sum(p * z ** k for k, p in enumerate(dist))


def _click_tables(model: PairOutcomeModel, dist, eta_s, eta_i, dark, phase):
    """Single and joint click probabilities of one channel pair in one pulse."""
    p = model.probabilities(phase).reshape(3, 3)
    ps = eta_s * p[:2, :].sum(axis=1)
    pi = eta_i * p[:, :2].sum(axis=0)
    psi = eta_s * eta_i * p[:2, :2]
    q = 1 - dark
    single_s = 1 - q * _generating(dist, 1 - ps)
    single_i = 1 - q * _generating(dist, 1 - pi)
    none_both = q * q * _generating(dist, 1 - ps[:, None] - pi[None, :] + psi)
    joint = 1 - q * _generating(dist, 1 - ps)[:, None] - q * _generating(dist, 1 - pi)[None, :] + none_both
    return single_s, single_i, joint


def expected_counts(source: SourceConfig, optics: OpticsConfig, losses: LossBudget, detectors: DetectorModel,
                    n_pulses: int, settings: Sequence[AnalyzerSetting] | None = None, *,
                    setting_id: int = 0) -> CountsRecord:
    """Expectation values of every tally of :func:`run_experiment`."""
    if n_pulses < 1:
        raise ConfigError("n_pulses must be at least 1")
    settings = _check_settings(settings)
    detectors.validate(source.rep_rate)
    optics.validate()
    models = outcome_models(source, optics, settings)
    dists = pair_distributions(source)
    eta = losses.channel_transmissions()
    dark = detectors.dark_probability()
    nodes, weights = _jitter_nodes(source)

    rec = CountsRecord.empty(n_pulses, source.rep_rate, settings, setting_id, "expected", dtype=float)
    joints = []
    for g, model in enumerate(models):
        tables = [_click_tables(model, dists[g], eta[2 * g], eta[2 * g + 1], dark, source.phase_p + x)
                  for x in nodes]
        ss, si, jj = (np.array(v) for v in zip(*tables))
        joints.append(jj)
        ss, si, j0 = (np.tensordot(weights, v, axes=1) for v in (ss, si, jj))
        rec.singles[2 * g] = n_pulses * ss
        rec.singles[2 * g + 1] = n_pulses * si
        for kd, d in enumerate(DELAYS):
            if d == 0:
                rec.twofold[g, :, :, kd] = n_pulses * j0
            else:
                rec.twofold[g, :, :, kd] = max(n_pulses - abs(d), 0) * np.outer(ss, si)
    rec.fourfold = n_pulses * np.einsum("n,nab,ncd->abcd", weights, joints[0], joints[1])
    return rec


def sample_counts(expected: CountsRecord, rng: np.random.Generator) -> CountsRecord:
    """Independent Poisson draws around every expected tally."""
    return CountsRecord(expected.n_pulses, expected.rep_rate, rng.poisson(expected.singles),
                        rng.poisson(expected.twofold), rng.poisson(expected.fourfold),
                        expected.settings, expected.setting_id, "sampled")


def acquire(source: SourceConfig, optics: OpticsConfig, losses: LossBudget, detectors: DetectorModel,
            n_pulses: int, settings: Sequence[AnalyzerSetting] | None = None, *, engine: str = "mc",
            seed: int | None = None, setting_id: int = 0, threads: int = 1) -> CountsRecord:
    """Dispatch to the Monte Carlo or the sampled-expectation engine."""
    seed = source.seed if seed is None else seed
    if engine == "mc":
        return run_experiment(source, optics, losses, detectors, n_pulses, settings,
                              seed=seed, setting_id=setting_id, threads=threads)
    if engine == "sampled":
        exp = expected_counts(source, optics, losses, detectors, n_pulses, settings, setting_id=setting_id)
        return sample_counts(exp, stream(seed, "sampled", setting_id))
    if engine == "expected":
        return expected_counts(source, optics, losses, detectors, n_pulses, settings, setting_id=setting_id)
    raise ConfigError(f"unknown engine {engine!r}")


# ---------------------------------------------------------------------------
# oracles and estimators
# ---------------------------------------------------------------------------

def fourfold_rate_oracle(source: SourceConfig, losses: LossBudget) -> float:
    """Leading-order fourfold rate summed over analyzer ports, in Hz:
    rep * mu1 * mu2 * (1/4)^2 * eta^4 with the loss table including its
    conversion line (equivalently, 1/4 post-selection per pair)."""
    eta = losses.transmission(include_dof=False)
    return source.rep_rate * mean_pairs(source, 0) * mean_pairs(source, 1) * (0.25 * eta * eta) ** 2


def singles_rate_oracle(source: SourceConfig, losses: LossBudget, detectors: DetectorModel,
                        channel: int = 0) -> float:
    """rep * mu * eta / 2 + darks on both detector ports."""
    mu = mean_pairs(source, channel // 2)
    eta = losses.channel_transmissions()[channel]
    return source.rep_rate * (mu * eta / 2 + 2 * detectors.dark_probability())


class Estimate(NamedTuple):
    value: float
    stderr: float
    lower_bound: bool = False


def estimate_pgr(counts: CountsRecord, group: int = 0, subtract_accidentals: bool = False) -> Estimate:
    """Klyshko pair-rate estimate C_s C_i / C_si in Hz."""
    # float: products of integer tallies overflow int64 on long runs
    cs = float(counts.channel_singles(2 * group))
    ci = float(counts.channel_singles(2 * group + 1))
    raw = float(counts.coincidences(group, 0))
    acc = _accidentals(counts, group) if subtract_accidentals else 0.0
    cc = raw - acc
    if cc <= 0 or cs <= 0 or ci <= 0:
        raise UndefinedEstimateError("PGR undefined: no coincidences at zero delay")
    value = cs * ci / cc / counts.duration
    # delta method with the raw coincidences shared by both singles counts:
    # Cs = A + C0, Ci = B + C0 with A, B, C0 independent Poisson; the
    # accidental estimate averages two side bins
    a, b = max(cs - raw, 0.0), max(ci - raw, 0.0)
    rel_var = a / cs**2 + b / ci**2 + raw * (1 / cs + 1 / ci - 1 / cc) ** 2 + acc / 2 / cc**2
    return Estimate(value, value * math.sqrt(rel_var))


def _accidentals(counts: CountsRecord, group: int) -> float:
    n = counts.n_pulses
    side = [float(counts.coincidences(group, d)) / max(n - abs(d), 1) for d in (-1, 1)]
    return n * sum(side) / 2


# 95% Poisson upper limit on a mean given zero observed events
_ZERO_EVENT_LIMIT = -math.log(0.05)


def estimate_car(counts: CountsRecord, group: int = 0) -> Estimate:
    """(C(0) - C(dt)) / C(dt), with C(dt) the mean of the n = +-1 bins.

    With no accidentals at all the value is a lower bound computed from the
    95% upper limit on C(dt)."""
    c0 = float(counts.coincidences(group, 0))
    side = float(counts.coincidences(group, -1) + counts.coincidences(group, 1))
    acc = _accidentals(counts, group)
    if side == 0:
        if c0 == 0:
            raise UndefinedEstimateError("CAR undefined: no coincidences at all")
        limit = counts.n_pulses * _ZERO_EVENT_LIMIT / (2 * (counts.n_pulses - 1))
        return Estimate((c0 - limit) / limit, math.nan, lower_bound=True)
    value = (c0 - acc) / acc
    ratio = c0 / acc
    stderr = ratio * math.sqrt((1 / c0 if c0 else 0.0) + 1 / side)
    return Estimate(value, stderr)
