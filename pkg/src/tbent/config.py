"""Top-level JSON experiment configuration."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .detection import DetectorModel, LossBudget
from .errors import ConfigError
from .optics import OpticsConfig
from .phasematch import DispersionTable, ShgParams
from .source import SourceConfig

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class AnalysisConfig:
    pulses: int = 10**6
    fringe_points: int = 37
    tomography_scheme: str = field(default="full", metadata={
        "assumption": "four-qubit runs default to all 6^4 projectors; 'pauli' uses 81 basis settings"})
    bootstrap_resamples: int = 250

    def __post_init__(self):
        if self.pulses < 1 or self.fringe_points < 1 or self.bootstrap_resamples < 0:
            raise ConfigError("analysis counts must be positive")
        if self.tomography_scheme not in ("full", "pauli"):
            raise ConfigError("tomography_scheme must be 'full' or 'pauli'")


@dataclass(frozen=True)
class PhasematchConfig:
    pump_nm: float = 775.0
    length_mm: float = 12.0
    duty_cycle: float = 0.68
    dispersion_tables: tuple[str, ...] = field(default=(), metadata={
        "assumption": "empty selects the shipped synthetic tables pinned to the two published indices"})
    d33_pm_per_v: float = 27.0
    a_eff_um2: float = ShgParams.__dataclass_fields__["a_eff_um2"].default
    zeta: float = 1.0
    # device geometry, recorded for traceability only
    waveguide_width_um: float = 4.5
    etch_depth_um: float = 0.58
    film_thickness_um: float = 3.0

    def table(self) -> DispersionTable:
        if not self.dispersion_tables:
            return DispersionTable.fixtures()
        return DispersionTable.from_csv(*self.dispersion_tables)

    def shg(self, table: DispersionTable | None = None) -> ShgParams:
        table = table or self.table()
        return ShgParams(self.d33_pm_per_v, 2 * self.pump_nm, table.n_eff(2 * self.pump_nm),
                         table.n_eff(self.pump_nm), self.a_eff_um2, self.zeta)


SECTIONS = {
    "source": SourceConfig,
    "optics": OpticsConfig,
    "losses": LossBudget,
    "detectors": DetectorModel,
    "analysis": AnalysisConfig,
    "phasematch": PhasematchConfig,
}
# metadata-bearing fields on other classes that surface in --explain
_INHERITED = {("phasematch", "a_eff_um2"): ShgParams.__dataclass_fields__["a_eff_um2"],
              ("phasematch", "zeta"): ShgParams.__dataclass_fields__["zeta"]}


def _public_fields(cls):
    return [f for f in dataclasses.fields(cls) if not f.name.startswith("_")]


def _build(cls, data: Mapping[str, Any], section: str):
    if not isinstance(data, Mapping):
        raise ConfigError(f"section {section!r} must be an object")
    names = {f.name for f in _public_fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown keys in {section!r}: {sorted(unknown)}")
    kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad value in {section!r}: {exc}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    source: SourceConfig = field(default_factory=SourceConfig)
    optics: OpticsConfig = field(default_factory=OpticsConfig)
    losses: LossBudget = field(default_factory=LossBudget)
    detectors: DetectorModel = field(default_factory=DetectorModel)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    phasematch: PhasematchConfig = field(default_factory=PhasematchConfig)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ExperimentConfig:
        if not isinstance(data, Mapping):
            raise ConfigError("configuration must be a JSON object")
        version = data.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {version!r}")
        unknown = set(data) - set(SECTIONS) - {"schema_version"}
        if unknown:
            raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
        return cls(**{name: _build(kind, data.get(name, {}), name) for name, kind in SECTIONS.items()})

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"schema_version": SCHEMA_VERSION}
        for name in SECTIONS:
            obj = getattr(self, name)
            out[name] = {f.name: _jsonable(getattr(obj, f.name)) for f in _public_fields(type(obj))}
        return out

    def with_seed(self, seed: int) -> ExperimentConfig:
        return dataclasses.replace(self, source=dataclasses.replace(self.source, seed=seed))

    def noiseless(self) -> ExperimentConfig:
        """One pair per channel pair per pulse, no loss, no darks, no noise."""
        return dataclasses.replace(
            self,
            source=dataclasses.replace(self.source, statistics="deterministic", white_noise=0.0,
                                       phase_jitter_std=0.0),
            losses=LossBudget.lossless(),
            detectors=dataclasses.replace(self.detectors, dark_count_rate=0.0),
        )


def _jsonable(value):
    return list(value) if isinstance(value, tuple) else value


def explain(config: ExperimentConfig | None = None) -> list[tuple[str, Any, str]]:
    """Every default that is a modeling assumption: (key, value, note)."""
    config = config or ExperimentConfig()
    rows = []
    for name, kind in SECTIONS.items():
        obj = getattr(config, name)
        for f in _public_fields(kind):
            meta = _INHERITED.get((name, f.name), f).metadata
            if "assumption" in meta:
                rows.append((f"{name}.{f.name}", _jsonable(getattr(obj, f.name)), meta["assumption"]))
    return rows
