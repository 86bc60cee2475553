"""Polarization interference fringes: prediction, fitting, CHSH threshold."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import NamedTuple

import numpy as np
from scipy.optimize import least_squares

from ..errors import ConfigError, FitError
from ..optics import AnalyzerSetting
from ..state import DensityMatrix, PureState, polarization_vector

ORDERS = {"twofold": 2, "fourfold": 4}
CHSH_THRESHOLD = 1 / math.sqrt(2)
MIN_POINTS = 8


def _linear_ket(theta: float) -> np.ndarray:
    return AnalyzerSetting(hwp=theta).projector_ket("H")


def predict_fringe(state: PureState | DensityMatrix, theta_s: float, theta_i, photon_order: str = "twofold"):
    """Probability that every photon leaves the transmitted analyzer port.

    Signal analyzers sit at HWP angle ``theta_s``, idler analyzers at
    ``theta_i`` (scalar or array). Photons are ordered (s1, i1[, s2, i2])."""
    n = ORDERS.get(photon_order)
    if n is None:
        raise ConfigError(f"photon_order must be one of {tuple(ORDERS)}")
    if isinstance(state, DensityMatrix):
        rho = state.elements
    else:
        v = polarization_vector(state)
        rho = np.outer(v, v.conj())
    if rho.shape != (2 ** n, 2 ** n):
        raise ConfigError(f"{photon_order} fringe needs a {n}-photon state")
    ks = _linear_ket(theta_s)
    thetas = np.atleast_1d(np.asarray(theta_i, dtype=float))
    out = np.empty(thetas.shape)
    for j, t in enumerate(thetas.flat):
        ki = _linear_ket(t)
        ket = reduce(np.kron, [ks, ki] * (n // 2))
        out.flat[j] = np.real(np.vdot(ket, rho @ ket))
    return out if np.ndim(theta_i) else float(out[0])


@dataclass(frozen=True)
class FringeScan:
    theta_s: float
    theta_i: np.ndarray
    values: np.ndarray
    photon_order: str = "twofold"
    sigma: np.ndarray | None = None  # per-point uncertainty; None fits unweighted

    @classmethod
    def from_counts(cls, theta_s, theta_i, counts, photon_order="twofold") -> FringeScan:
        """Scan of Poisson counts, weighted by sqrt(max(counts, 1))."""
        c = np.asarray(counts, dtype=float)
        return cls(theta_s, theta_i, c, photon_order, np.sqrt(np.maximum(c, 1.0)))

    def __post_init__(self):
        t = np.asarray(self.theta_i, dtype=float)
        y = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "theta_i", t)
        object.__setattr__(self, "values", y)
        if self.sigma is not None:
            sig = np.asarray(self.sigma, dtype=float)
            if sig.shape != y.shape or np.any(sig <= 0):
                raise ConfigError("sigma must be positive and match the values")
            object.__setattr__(self, "sigma", sig)
        if self.photon_order not in ORDERS:
            raise ConfigError(f"photon_order must be one of {tuple(ORDERS)}")
        if t.shape != y.shape or t.ndim != 1:
            raise ConfigError("theta grid and values must be 1-d and the same length")
        if np.any(np.diff(t) <= 0):
            raise ConfigError("theta grid must be strictly increasing")
        if t[-1] - t[0] < math.pi - 1e-9:
            raise ConfigError("theta grid must span at least pi")


@dataclass(frozen=True)
class FringeFit:
    amplitude: float
    offset: float
    phase: float  # rad, model argument is 2*theta - phase
    visibility: float
    r_squared: float
    model: str

    @property
    def c_max(self) -> float:
        return self.amplitude + self.offset

    @property
    def c_min(self) -> float:
        return self.offset


def _shape(x, power):
    return np.cos(x) ** power


def fit_fringe(scan: FringeScan, restarts: int = 4) -> FringeFit:
    """Least-squares fit of A*cos^p(2*theta - phase) + B with A, B >= 0.

    p = 2 for twofold and 4 for fourfold scans. The phase is seeded from the
    4*theta Fourier component, which both models share."""
    t, y = scan.theta_i, scan.values
    if t.size < MIN_POINTS:
        raise FitError(f"need at least {MIN_POINTS} points, got {t.size}", {"n_points": int(t.size)})
    power = ORDERS[scan.photon_order]
    weight = 1.0 if scan.sigma is None else 1.0 / scan.sigma

    def resid(p):
        a, b, ph = p
        return (a * _shape(2 * t - ph, power) + b - y) * weight

    c, s = np.dot(y, np.cos(4 * t)), np.dot(y, np.sin(4 * t))
    phase0 = 0.5 * math.atan2(s, c)
    span = float(np.ptp(y))
    scale = max(span, float(np.max(np.abs(y))), 1e-300)
    best, tried = None, []
    for k in range(restarts):
        x0 = [span, max(float(y.min()), 0.0), phase0 + k * math.pi / (2 * restarts)]
        try:
            res = least_squares(resid, x0, bounds=([0, 0, -np.inf], [np.inf, np.inf, np.inf]),
                                x_scale=[scale, scale, 1.0], xtol=1e-14, ftol=1e-14, gtol=1e-14)
        except ValueError as exc:
            tried.append(str(exc))
            continue
        tried.append(res.status)
        if res.status > 0 and (best is None or res.cost < best.cost):
            best = res
    if best is None:
        raise FitError("fringe fit did not converge", {"attempts": tried})
    a, b, ph = best.x
    ss_res = float(np.sum((a * _shape(2 * t - ph, power) + b - y) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)
    vis = a / (a + 2 * b) if a + b > 0 else 0.0
    return FringeFit(float(a), float(b), float(ph % math.pi), float(vis), float(r2), f"cos{power}")


def bootstrap_visibility(scan: FringeScan, n_resamples: int = 250,
                         rng: np.random.Generator | None = None) -> tuple[float, float]:
    """Mean and standard deviation of V over Poisson resamples of the counts."""
    rng = rng or np.random.default_rng()
    fit = fit_fringe(scan)
    model = fit.amplitude * _shape(2 * scan.theta_i - fit.phase, ORDERS[scan.photon_order]) + fit.offset
    vs = []
    for _ in range(n_resamples):
        counts = rng.poisson(np.maximum(model, 0))
        sample = (FringeScan(scan.theta_s, scan.theta_i, counts, scan.photon_order) if scan.sigma is None
                  else FringeScan.from_counts(scan.theta_s, scan.theta_i, counts, scan.photon_order))
        try:
            vs.append(fit_fringe(sample).visibility)
        except FitError:
            continue
    if len(vs) < 2:
        raise FitError("bootstrap produced fewer than two successful fits")
    return float(np.mean(vs)), float(np.std(vs, ddof=1))


class ChshResult(NamedTuple):
    violated: bool
    margin: float


def chsh_check(visibility: float) -> ChshResult:
    """Strict V > 1/sqrt(2) test."""
    if not 0 <= visibility <= 1:
        raise ConfigError("visibility must lie in [0, 1]")
    margin = visibility - CHSH_THRESHOLD
    return ChshResult(margin > 0, margin)
