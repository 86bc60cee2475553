"""Jones-calculus elements and the two unbalanced interferometers.

Polarization basis is (H, V). Angles are radians unless a name says ``_deg``.
Path tags ride on :class:`~tbent.state.ModeLabel` while a photon is inside an
interferometer or leaving an analysis PBS; recombination clears them.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .errors import ArityError, ConfigError
from .state import ModeLabel, PureState

UMZI_DELAY = 645e-12  # s

_POL = {"H": 0, "V": 1}


def jones_hwp(theta: float) -> np.ndarray:
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    return np.array([[c, s], [s, -c]], dtype=complex)


def jones_qwp(theta: float) -> np.ndarray:
    """Quarter-wave plate, fast axis at ``theta``."""
    c, s = math.cos(theta), math.sin(theta)
    m = np.array([[c * c + 1j * s * s, (1 - 1j) * s * c],
                  [(1 - 1j) * s * c, s * s + 1j * c * c]])
    return cmath.exp(-1j * math.pi / 4) * m


# Double pass through QWP@45 deg with the common -i stripped: both arms carry it.
POLARIZATION_FLIP = np.round(1j * jones_qwp(math.pi / 4) @ jones_qwp(math.pi / 4), 12)
# Fiber polarization controller set to swap H and V.
PC_SWAP = np.array([[0, 1], [1, 0]], dtype=complex)


@dataclass(frozen=True)
class WaveplateSetting:
    kind: str  # "HWP" | "QWP"
    angle: float

    def __post_init__(self):
        if self.kind not in ("HWP", "QWP"):
            raise ValueError(f"unknown waveplate kind {self.kind!r}")

    def matrix(self) -> np.ndarray:
        return jones_hwp(self.angle) if self.kind == "HWP" else jones_qwp(self.angle)


@dataclass(frozen=True)
class AnalyzerSetting:
    """HWP then QWP in front of a PBS (light meets the HWP first)."""

    hwp: float = 0.0
    qwp: float = 0.0

    @classmethod
    def from_degrees(cls, hwp_deg: float, qwp_deg: float = 0.0) -> AnalyzerSetting:
        return cls(math.radians(hwp_deg), math.radians(qwp_deg))

    @property
    def hwp_deg(self) -> float:
        return math.degrees(self.hwp)

    @property
    def qwp_deg(self) -> float:
        return math.degrees(self.qwp)

    def unitary(self) -> np.ndarray:
        return jones_qwp(self.qwp) @ jones_hwp(self.hwp)

    def projector_ket(self, port: str) -> np.ndarray:
        """Polarization state sent to ``port`` ('H'/'t' transmitted, 'V'/'r' reflected)."""
        e = np.zeros(2, dtype=complex)
        e[_port_index(port)] = 1.0
        return self.unitary().conj().T @ e


def _port_index(port: str) -> int:
    try:
        return {"H": 0, "t": 0, "V": 1, "r": 1}[port]
    except KeyError:
        raise ValueError(f"unknown analyzer port {port!r}") from None


# the six Pauli eigenstates, each reached on the transmitted port
PAULI_SETTINGS: dict[str, AnalyzerSetting] = {
    "H": AnalyzerSetting.from_degrees(0.0, 0.0),
    "V": AnalyzerSetting.from_degrees(45.0, 0.0),
    "D": AnalyzerSetting.from_degrees(22.5, 0.0),
    "A": AnalyzerSetting.from_degrees(-22.5, 0.0),
    "R": AnalyzerSetting.from_degrees(0.0, -45.0),
    "L": AnalyzerSetting.from_degrees(0.0, 45.0),
}
PAULI_KETS: dict[str, np.ndarray] = {
    "H": np.array([1, 0], complex),
    "V": np.array([0, 1], complex),
    "D": np.array([1, 1], complex) / math.sqrt(2),
    "A": np.array([1, -1], complex) / math.sqrt(2),
    "R": np.array([1, 1j], complex) / math.sqrt(2),
    "L": np.array([1, -1j], complex) / math.sqrt(2),
}
# one analyzer setting per Pauli basis; both ports read out
BASIS_SETTINGS: dict[str, AnalyzerSetting] = {
    "Z": PAULI_SETTINGS["H"],
    "X": PAULI_SETTINGS["D"],
    "Y": PAULI_SETTINGS["L"],
}


def analyzer_setting_for(ket) -> AnalyzerSetting:
    """Waveplate angles whose transmitted port projects onto ``ket``.

    Closed form from the Stokes vector: the QWP fixes the ellipticity, the
    HWP the orientation."""
    a, b = np.asarray(ket, dtype=complex) / np.linalg.norm(ket)
    s1 = abs(a) ** 2 - abs(b) ** 2
    ab = np.conj(a) * b
    s2, s3 = 2 * ab.real, 2 * ab.imag
    q = -0.5 * math.asin(max(-1.0, min(1.0, s3)))
    orient = math.atan2(s2, s1) if abs(s3) < 1 - 1e-15 else 0.0
    return AnalyzerSetting(hwp=(orient + 2 * q) / 4, qwp=q)


def settings_to_json(settings: Sequence[AnalyzerSetting], photons: Sequence[str]) -> list[dict]:
    return [{"photon": p, "hwp_deg": s.hwp_deg, "qwp_deg": s.qwp_deg}
            for p, s in zip(photons, settings)]


def settings_from_json(rows: Sequence[Mapping]) -> dict[str, AnalyzerSetting]:
    out = {}
    for row in rows:
        extra = set(row) - {"photon", "hwp_deg", "qwp_deg"}
        if extra:
            raise ConfigError(f"unknown setting keys {sorted(extra)}")
        out[row["photon"]] = AnalyzerSetting.from_degrees(float(row["hwp_deg"]), float(row.get("qwp_deg", 0.0)))
    return out


# ---------------------------------------------------------------------------
# state-level elements
# ---------------------------------------------------------------------------

def _selected(state: PureState, channels) -> list[tuple[str, int]]:
    if channels is None:
        return list(state.photons)
    chans = {channels} if isinstance(channels, str) else set(channels)
    return [p for p in state.photons if p[0] in chans]


def apply_jones(state: PureState, matrix: np.ndarray, channels=None) -> PureState:
    m = np.asarray(matrix, dtype=complex)

    def act(label: ModeLabel):
        col = _POL[label.polarization]
        for row, pol in enumerate("HV"):
            if m[row, col] != 0:
                yield label.replace(polarization=pol), m[row, col]

    for photon in _selected(state, channels):
        state = state.map_photon(photon, act)
    return state


def pbs_route(state: PureState, channels=None, tags: tuple[str, str] = ("long", "short")) -> PureState:
    """Tag H components with ``tags[0]`` and V components with ``tags[1]``."""

    def act(label: ModeLabel):
        if label.path is not None:
            raise ArityError(f"photon {label.photon} already routed ({label.path})")
        yield label.replace(path=tags[0] if label.polarization == "H" else tags[1]), 1.0

    for photon in _selected(state, channels):
        state = state.map_photon(photon, act)
    return state


def _delayed_bin(timebin: str, arm: str, composite: bool) -> str:
    step = "l" if arm == "long" else "e"
    if composite:
        if timebin not in ("e", "l"):
            raise ArityError(f"second interferometer expects e/l input, got {timebin!r}")
        return timebin + step
    if timebin != "e":
        raise ArityError(f"pump interferometer expects the early pulse, got {timebin!r}")
    return step


def umzi_arms(state: PureState, phases: Mapping[str, float], composite: bool) -> PureState:
    """Propagate routed photons through both arms and recombine.

    Long arm: one time-bin delay and phase ``phases[channel]``; both arms
    flip polarization (double pass through QWP@45)."""

    flip = POLARIZATION_FLIP

    def act_for(phase):
        def act(label: ModeLabel):
            if label.path not in ("long", "short"):
                raise ArityError(f"photon {label.photon} is not inside an interferometer")
            tb = _delayed_bin(label.timebin, label.path, composite)
            amp = cmath.exp(1j * phase) if label.path == "long" else 1.0
            col = _POL[label.polarization]
            for row, pol in enumerate("HV"):
                if flip[row, col] != 0:
                    yield label.replace(timebin=tb, polarization=pol, path=None), amp * flip[row, col]
        return act

    for photon in state.photons:
        if photon[0] in phases:
            state = state.map_photon(photon, act_for(phases[photon[0]]))
    return state


@dataclass(frozen=True)
class UmziConfig:
    role: str  # "pump_modulator" | "dof_converter"
    phases: Mapping[str, float] = field(default_factory=dict)
    delay: float = UMZI_DELAY

    def __post_init__(self):
        if self.role not in ("pump_modulator", "dof_converter"):
            raise ConfigError(f"unknown interferometer role {self.role!r}")
        if self.delay <= 0:
            raise ConfigError("interferometer delay must be positive")


def check_matched_delays(pump: UmziConfig, converter: UmziConfig, tol: float = 1e-15) -> None:
    if abs(pump.delay - converter.delay) > tol:
        raise ConfigError(
            f"interferometer delays differ ({pump.delay:g} s vs {converter.delay:g} s); "
            "the middle bin requires path-length-matched interferometers")


@dataclass(frozen=True)
class OpticsConfig:
    """Interferometer phases per channel pair and the two arm delays."""

    phase_s: tuple[float, float] = (0.0, 0.0)  # (s1, s2) rad
    phase_i: tuple[float, float] = (0.0, 0.0)  # (i1, i2) rad
    pump_delay: float = UMZI_DELAY
    converter_delay: float = UMZI_DELAY

    def __post_init__(self):
        if len(self.phase_s) != 2 or len(self.phase_i) != 2:
            raise ConfigError("need one signal and one idler phase per channel pair")

    def interferometers(self, phase_p: float = 0.0) -> tuple[UmziConfig, UmziConfig]:
        pump = UmziConfig("pump_modulator", {"pump": phase_p}, self.pump_delay)
        phases = {"s1": self.phase_s[0], "i1": self.phase_i[0], "s2": self.phase_s[1], "i2": self.phase_i[1]}
        return pump, UmziConfig("dof_converter", phases, self.converter_delay)

    def validate(self) -> None:
        check_matched_delays(*self.interferometers())


class PumpOutput(NamedTuple):
    transmitted: PureState
    reflected: PureState


def pump_modulator(phase_p: float) -> PumpOutput:
    """Pulse preparation through the first interferometer and the output PBS.

    Returns the transmitted pump ``(|e>+e^{i phi}|l>)|H>/2`` and the
    reflected reference ``(|e>-e^{i phi}|l>)|V>/2`` (unnormalized: the squared
    norms are the split ratios)."""
    s = PureState.basis(ModeLabel("pump", "e", "H"))
    hwp = jones_hwp(math.radians(22.5))
    s = apply_jones(s, hwp)
    s = pbs_route(s)
    s = umzi_arms(s, {"pump": phase_p}, composite=False)
    s = apply_jones(s, hwp)
    s = pbs_route(s, tags=("t", "r"))
    t = s.filter(lambda m: m[0].path == "t").map_labels(lambda m: m.replace(path=None))
    r = s.filter(lambda m: m[0].path == "r").map_labels(lambda m: m.replace(path=None))
    return PumpOutput(t, r)


class PostSelectionOutcome(NamedTuple):
    state: PureState
    success_probability: float


MIDDLE_BINS = ("el", "le")


def convert_timebin_to_polarization(state: PureState, phases: Mapping[str, float]) -> PureState:
    """Second interferometer without post-selection.

    Each photon: polarization controller (V->H), PBS filter (keeps H), HWP
    at 22.5 deg, PBS routing into the arms, arm propagation. The result lives
    on composite bins ee/el/le/ll."""
    hwp = jones_hwp(math.radians(22.5))
    s = apply_jones(state, PC_SWAP)

    def pbs_filter(label: ModeLabel):
        if label.polarization == "H":
            yield label, 1.0

    for photon in s.photons:
        s = s.map_photon(photon, pbs_filter)
    s = apply_jones(s, hwp)
    s = pbs_route(s)
    return umzi_arms(s, {ch: phases.get(ch, 0.0) for ch in s.channels}, composite=True)


def merge_middle(state: PureState) -> PureState:
    """Relabel the indistinguishable el/le bins as the middle bin m."""
    return state.map_labels(lambda m: m.replace(timebin="m") if m.timebin in MIDDLE_BINS else m)


def postselect_middle(converted: PureState, input_norm_squared: float = 1.0) -> PostSelectionOutcome:
    kept = converted.filter(lambda modes: all(m.timebin in MIDDLE_BINS for m in modes))
    p = kept.norm_squared() / input_norm_squared
    if p == 0:
        return PostSelectionOutcome(kept, 0.0)
    return PostSelectionOutcome(merge_middle(kept).normalized().canonicalize(), p)


def _check_pair(pair: PureState) -> tuple[str, str]:
    if pair.photon_count != 2:
        raise ArityError(f"expected a two-photon pair, got {pair.photon_count} photons")
    (a, ra), (b, rb) = pair.photons
    if not (a[0] == "s" and b[0] == "i" and a[1:] == b[1:] and ra == rb):
        raise ArityError(f"photons {pair.photons} are not one signal-idler channel pair")
    for modes in pair.terms:
        for m in modes:
            if m.timebin not in ("e", "l") or m.path is not None:
                raise ArityError("pair must be a time-bin state on early/late bins")
    return a, b


def dof_convert(pair: PureState, phase_s: float = 0.0, phase_i: float = 0.0) -> PostSelectionOutcome:
    """Time-bin -> polarization conversion of one pair with middle-bin post-selection.

    The renormalized output is ``(|HH> + e^{i(phase_s + phase_i - phi_p)}|VV>)/sqrt(2)``
    for the ideal pair; ``success_probability`` is 1/4 for any normalized
    early/late input."""
    s, i = _check_pair(pair)
    converted = convert_timebin_to_polarization(pair, {s: phase_s, i: phase_i})
    return postselect_middle(converted, pair.norm_squared())


def measure_projector(settings: Sequence[AnalyzerSetting], ports: Sequence[str],
                      channels: Sequence[str] | None = None, timebin: str = "m") -> PureState:
    """Product ket selected by the analyzers: each photon U^dagger|port>."""
    if channels is None:
        channels = ("s1", "i1", "s2", "i2")[:len(settings)]
    if not (len(settings) == len(ports) == len(channels)):
        raise ArityError("need one setting and one port per photon")
    out = PureState.vacuum()
    for ch, st, port in zip(channels, settings, ports):
        k = st.projector_ket(port)
        out = out.tensor(PureState({
            (ModeLabel(ch, timebin, "H"),): k[0],
            (ModeLabel(ch, timebin, "V"),): k[1],
        }))
    return out
