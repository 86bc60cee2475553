"""Quasi-phase-matching design math for a uniformly poled waveguide.

Wavelengths are in nm, propagation constants in rad/um, poling periods in
um, waveguide lengths in mm and optical frequencies in THz.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import ConfigError, DataRangeError, NoQPMSolutionError

C = 299792458.0  # m/s
EPS0 = 8.8541878128e-12  # F/m
C_NM_THZ = C * 1e-3  # nu[THz] = C_NM_THZ / lambda[nm]
FIXTURES = ("neff_pump_band.csv", "neff_telecom_band.csv")
# Gaussian time-bandwidth product (intensity FWHM)
GAUSSIAN_TBP = 2 * math.log(2) / math.pi

# root of sinc^2(x) = 1/2
HALF_MAX_ARG = brentq(lambda x: (math.sin(x) / x) ** 2 - 0.5, 1.0, 2.0, xtol=1e-15)


def nm_to_thz(lam_nm):
    return C_NM_THZ / np.asarray(lam_nm, dtype=float)


def thz_to_nm(nu_thz):
    return C_NM_THZ / np.asarray(nu_thz, dtype=float)


# ---------------------------------------------------------------------------
# dispersion data
# ---------------------------------------------------------------------------

class DispersionBand:
    """Cubic-spline n_eff(lambda) over one sampled band, no extrapolation."""

    def __init__(self, wavelength_nm: Sequence[float], n_eff: Sequence[float], name: str = ""):
        lam = np.asarray(wavelength_nm, dtype=float)
        n = np.asarray(n_eff, dtype=float)
        if lam.ndim != 1 or lam.shape != n.shape:
            raise ConfigError("dispersion samples must be two equal-length 1-d columns")
        if lam.size < 4:
            raise ConfigError(f"dispersion band {name!r} needs at least 4 samples")
        if np.any(np.diff(lam) <= 0):
            raise ConfigError(f"dispersion band {name!r} wavelengths must be strictly increasing")
        self.wavelength_nm, self.n_eff, self.name = lam, n, name
        self._spline = CubicSpline(lam, n, extrapolate=False)

    @property
    def span(self) -> tuple[float, float]:
        return float(self.wavelength_nm[0]), float(self.wavelength_nm[-1])

    def contains(self, lam_nm) -> bool:
        lo, hi = self.span
        lam = np.asarray(lam_nm)
        return bool(np.all((lam >= lo) & (lam <= hi)))

    def __call__(self, lam_nm):
        if not self.contains(lam_nm):
            raise DataRangeError(f"wavelength outside dispersion band {self.name!r} {self.span} nm")
        out = self._spline(np.asarray(lam_nm, dtype=float))
        return float(out) if np.ndim(out) == 0 else out

    @classmethod
    def from_csv(cls, path) -> DispersionBand:
        with open(path, newline="") as fh:
            return cls._parse(fh, Path(path).name)

    @classmethod
    def _parse(cls, fh, name) -> DispersionBand:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(reader.fieldnames) != {"wavelength_nm", "n_eff"}:
            raise ConfigError(f"{name}: expected columns wavelength_nm,n_eff")
        rows = [(float(r["wavelength_nm"]), float(r["n_eff"])) for r in reader]
        if not rows:
            raise ConfigError(f"{name}: empty dispersion table")
        lam, n = zip(*rows)
        return cls(lam, n, name)


@dataclass
class DispersionTable:
    bands: list[DispersionBand]

    def band_for(self, lam_nm) -> DispersionBand:
        for band in self.bands:
            if band.contains(lam_nm):
                return band
        spans = [b.span for b in self.bands]
        raise DataRangeError(f"wavelength {np.min(lam_nm):g}-{np.max(lam_nm):g} nm outside tables {spans}")

    def n_eff(self, lam_nm):
        return self.band_for(lam_nm)(lam_nm)

    def beta(self, lam_nm):
        """Propagation constant 2*pi*n/lambda in rad/um."""
        lam = np.asarray(lam_nm, dtype=float)
        return 2 * np.pi * self.n_eff(lam) / (lam * 1e-3)

    @classmethod
    def from_csv(cls, *paths) -> DispersionTable:
        return cls([DispersionBand.from_csv(p) for p in paths])

    @classmethod
    def fixtures(cls) -> DispersionTable:
        """The shipped synthetic pump-band and telecom-band tables."""
        bands = []
        for name in FIXTURES:
            with resources.files("tbent.data").joinpath(name).open("r", newline="") as fh:
                bands.append(DispersionBand._parse(fh, name))
        return cls(bands)


# ---------------------------------------------------------------------------
# phase matching
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolingSpec:
    period_um: float
    length_mm: float = 12.0
    duty_cycle: float = 0.5

    def __post_init__(self):
        if self.period_um <= 0 or self.length_mm <= 0:
            raise ConfigError("poling period and length must be positive")
        if not 0 < self.duty_cycle < 1:
            raise ConfigError("duty cycle must lie in (0, 1)")

    @property
    def grating_beta(self) -> float:
        return 2 * math.pi / self.period_um


def qpm_period(table: DispersionTable, lam_p_nm: float) -> float:
    """Degenerate type-0 period lambda_p / (n(lambda_p) - n(2 lambda_p)), in um."""
    dn = table.n_eff(lam_p_nm) - table.n_eff(2 * lam_p_nm)
    if dn <= 0:
        raise NoQPMSolutionError(f"index difference {dn:.3g} <= 0: no first-order QPM period")
    return lam_p_nm * 1e-3 / dn


def delta_beta(table: DispersionTable, poling: PolingSpec, lam_p_nm, lam_s_nm, lam_i_nm):
    """beta_p - beta_s - beta_i - 2*pi/Lambda in rad/um (zero when matched).

    Energy conservation between the three wavelengths is the caller's job."""
    return table.beta(lam_p_nm) - table.beta(lam_s_nm) - table.beta(lam_i_nm) - poling.grating_beta


def pm_intensity(dbeta, length_mm: float):
    """sinc^2(dbeta * L / 2) with dbeta in rad/um."""
    x = np.asarray(dbeta, dtype=float) * length_mm * 1e3 / 2
    out = np.sinc(x / np.pi) ** 2
    return float(out) if np.ndim(out) == 0 else out


CRITERIA = {"first_zero": math.pi, "half_max": HALF_MAX_ARG}


def _signal_idler(nu_p: float, detune: float) -> tuple[float, float]:
    return float(thz_to_nm(nu_p / 2 + detune)), float(thz_to_nm(nu_p / 2 - detune))


def bandwidth(table: DispersionTable, poling: PolingSpec, lam_p_nm: float, criterion: str = "first_zero",
              steps: int = 4000) -> float:
    """Full signal-frequency span (THz) where |dbeta| L / 2 stays below the criterion.

    Signal and idler sit symmetrically about half the pump frequency; the
    mismatch is even in the detuning, so the span is twice the first root."""
    if criterion not in CRITERIA:
        raise ConfigError(f"criterion must be one of {tuple(CRITERIA)}")
    target = CRITERIA[criterion]
    nu_p = float(nm_to_thz(lam_p_nm))
    lo, hi = table.band_for(2 * lam_p_nm).span
    max_detune = min(nu_p / 2 - float(nm_to_thz(hi)), float(nm_to_thz(lo)) - nu_p / 2)
    beta_p = table.beta(lam_p_nm)
    half_l = poling.length_mm * 1e3 / 2

    def excess(detune):
        ls, li = _signal_idler(nu_p, detune)
        db = beta_p - table.beta(ls) - table.beta(li) - poling.grating_beta
        return abs(db) * half_l - target

    grid = np.linspace(0.0, max_detune * (1 - 1e-12), steps)
    if excess(grid[0]) >= 0:
        raise NoQPMSolutionError("not phase matched at degeneracy; use the matched period")
    for a, b in zip(grid[:-1], grid[1:]):
        cur = excess(b)
        if cur >= 0:
            return 2 * brentq(excess, a, b, xtol=1e-10)
    raise DataRangeError(f"{criterion} not reached within the dispersion table range")


# ---------------------------------------------------------------------------
# second-harmonic generation
# ---------------------------------------------------------------------------

# A_eff / zeta^2 (um^2) at which the theory formula gives 260 %/W for a
# 12 mm waveguide with duty cycle 0.68; mode areas are not published.
CALIBRATED_AREA_UM2 = 14.8975


@dataclass(frozen=True)
class ShgParams:
    d33_pm_per_v: float = 27.0
    lambda_fh_nm: float = 1550.0
    n_fh: float = 2.1152
    n_sh: float = 2.1669
    a_eff_um2: float = field(default=CALIBRATED_AREA_UM2, metadata={
        "assumption": "effective mode area calibrated to the quoted 260 %/W theory value"})
    zeta: float = field(default=1.0, metadata={
        "assumption": "mode overlap folded into a_eff_um2"})

    def __post_init__(self):
        if min(self.d33_pm_per_v, self.lambda_fh_nm, self.n_fh, self.n_sh, self.a_eff_um2) <= 0:
            raise ConfigError("SHG parameters must be positive")
        if not 0 < self.zeta <= 1:
            raise ConfigError("overlap zeta must lie in (0, 1]")


def shg_efficiency_theory(params: ShgParams, poling: PolingSpec) -> float:
    """Normalized low-conversion SHG efficiency in %/W."""
    d = params.d33_pm_per_v * 1e-12
    length = poling.length_mm * 1e-3
    lam = params.lambda_fh_nm * 1e-9
    area = params.a_eff_um2 * 1e-12
    eta = (32 * d * d * length * length / (EPS0 * C * params.n_fh ** 2 * params.n_sh * lam * lam)
           * params.zeta ** 2 / area * math.sin(math.pi * poling.duty_cycle) ** 2)
    return 100 * eta


def calibrate_area(target_pct_per_w: float, params: ShgParams, poling: PolingSpec) -> float:
    """A_eff (um^2) that makes the theory formula hit the target efficiency."""
    return params.a_eff_um2 * shg_efficiency_theory(params, poling) / target_pct_per_w


def shg_efficiency_measured(p_fh_w, p_sh_w, eta_fh: float = 1.0, eta_sh: float = 1.0) -> float:
    """Loss-corrected (P_SH/eta_SH) / (P_FH/eta_FH)^2 in %/W.

    Arrays of powers are reduced by a least-squares fit of P_SH = eta P_FH^2."""
    p_fh = np.asarray(p_fh_w, dtype=float)
    p_sh = np.asarray(p_sh_w, dtype=float)
    if np.any(p_fh <= 0) or np.any(p_sh <= 0):
        raise ConfigError("powers must be positive")
    if not (0 < eta_fh <= 1 and 0 < eta_sh <= 1):
        raise ConfigError("transmission efficiencies must lie in (0, 1]")
    x = (p_fh / eta_fh) ** 2
    y = p_sh / eta_sh
    return 100 * float(np.dot(x, y) / np.dot(x, x))


# ---------------------------------------------------------------------------
# joint spectral intensity
# ---------------------------------------------------------------------------

@dataclass
class JsiMap:
    lam_s_nm: np.ndarray
    lam_i_nm: np.ndarray
    intensity: np.ndarray  # [signal, idler], unit peak

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["lambda_s_nm"] + [f"{x:.6f}" for x in self.lam_i_nm])
        for ls, row in zip(self.lam_s_nm, self.intensity):
            w.writerow([f"{ls:.6f}"] + [f"{v:.6e}" for v in row])
        return buf.getvalue()


def pump_bandwidth_thz(pulse_duration_ps: float) -> float:
    """Transform-limited Gaussian spectral intensity FWHM."""
    return GAUSSIAN_TBP / pulse_duration_ps


def jsi(table: DispersionTable, poling: PolingSpec, lam_p_nm: float, lam_s_nm, lam_i_nm,
        pulse_duration_ps: float | None = 10.0) -> JsiMap:
    """|pump envelope(nu_s + nu_i)|^2 * sinc^2(dbeta L / 2) on a wavelength grid.

    The pump component at nu_s + nu_i sets the pump propagation constant.
    ``pulse_duration_ps=None`` is the monochromatic limit: only grid points
    within half a grid step of exact energy conservation survive."""
    ls = np.asarray(lam_s_nm, dtype=float)
    li = np.asarray(lam_i_nm, dtype=float)
    nu_s, nu_i = nm_to_thz(ls)[:, None], nm_to_thz(li)[None, :]
    total = nu_s + nu_i
    detune = total - float(nm_to_thz(lam_p_nm))
    if pulse_duration_ps is None:
        step = np.min(np.abs(np.diff(nm_to_thz(li)))) if li.size > 1 else 0.0
        envelope = (np.abs(detune) <= step / 2 + 1e-12).astype(float)
    else:
        fwhm = pump_bandwidth_thz(pulse_duration_ps)
        envelope = np.exp(-4 * math.log(2) * (detune / fwhm) ** 2)
    db = (table.beta(thz_to_nm(total)) - table.beta(ls)[:, None] - table.beta(li)[None, :]
          - poling.grating_beta)
    out = envelope * pm_intensity(db, poling.length_mm)
    peak = out.max()
    if peak > 0:
        out = out / peak
    return JsiMap(ls, li, out)


def qpm_design(table: DispersionTable, lam_p_nm: float = 775.0, length_mm: float = 12.0,
               duty_cycle: float = 0.68, shg: ShgParams | None = None) -> dict:
    """Matched period, both bandwidths and the SHG theory value."""
    period = qpm_period(table, lam_p_nm)
    poling = PolingSpec(period, length_mm, duty_cycle)
    shg = shg or ShgParams()
    return {
        "pump_nm": lam_p_nm,
        "period_um": period,
        "length_mm": length_mm,
        "duty_cycle": duty_cycle,
        "bandwidth_first_zero_thz": bandwidth(table, poling, lam_p_nm, "first_zero"),
        "bandwidth_half_max_thz": bandwidth(table, poling, lam_p_nm, "half_max"),
        "shg_theory_pct_per_w": shg_efficiency_theory(shg, poling),
    }
