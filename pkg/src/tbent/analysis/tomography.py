"""Maximum-likelihood polarization state tomography.

The likelihood treats the counts as Poisson with an unknown overall rate
and known relative exposure ``totals`` per projector. Profiling out the
rate leaves a multinomial likelihood that only depends on rho up to scale,
so the Cholesky-style factor ``T`` with ``A = T T^dagger`` needs no trace
constraint: rho = A / tr(A) is PSD and unit-trace by construction.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Mapping, NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize

from ..errors import ConfigError, DegenerateDataError, DimensionError, UnidentifiableError
from ..optics import BASIS_SETTINGS, PAULI_SETTINGS, AnalyzerSetting
from ..state import DensityMatrix, PureState, fidelity

SCHEMA_VERSION = 1
SCHEMES = ("full", "pauli")
_FLOOR = 1e-300


class SettingPlan(NamedTuple):
    label: str
    settings: tuple[AnalyzerSetting, ...]  # one per photon
    ports: tuple[tuple[int, ...], ...]  # port tuples read out (0 = H, 1 = V)


def measurement_plan(n_qubits: int, scheme: str = "full") -> list[SettingPlan]:
    """Analyzer settings for a tomography run.

    ``full``: 6^n product projectors from {H,V,D,A,R,L}, transmitted ports
    only. ``pauli``: 3^n basis settings with all 2^n port combinations."""
    if scheme == "full":
        names = PAULI_SETTINGS
        ports = ((0,) * n_qubits,)
    elif scheme == "pauli":
        names = BASIS_SETTINGS
        ports = tuple(itertools.product((0, 1), repeat=n_qubits))
    else:
        raise ConfigError(f"scheme must be one of {SCHEMES}")
    return [SettingPlan("".join(combo), tuple(names[c] for c in combo), ports)
            for combo in itertools.product(names, repeat=n_qubits)]


def tomography_settings(n_qubits: int, scheme: str = "full") -> tuple[np.ndarray, list[str]]:
    """Projector kets (rows) and labels like ``"HD"`` or ``"ZX:01"``."""
    kets, labels = [], []
    for plan in measurement_plan(n_qubits, scheme):
        for ports in plan.ports:
            kets.append(reduce(np.kron, [s.projector_ket("HV"[p]) for s, p in zip(plan.settings, ports)]))
            labels.append(plan.label if scheme == "full" else f"{plan.label}:{''.join(map(str, ports))}")
    return np.array(kets), labels


def _gram_rank(kets: np.ndarray) -> int:
    rows = np.einsum("ki,kj->kij", kets.conj(), kets).reshape(len(kets), -1)
    return int(np.linalg.matrix_rank(rows, tol=1e-9))


@dataclass
class TomographyInput:
    kets: np.ndarray
    counts: np.ndarray
    totals: np.ndarray | None = None
    qubits: tuple[str, ...] = ("s1", "i1")
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        self.kets = np.asarray(self.kets, dtype=complex)
        self.counts = np.asarray(self.counts, dtype=float)
        self.totals = np.ones(len(self.counts)) if self.totals is None else np.asarray(self.totals, dtype=float)
        self.qubits = tuple(self.qubits)
        if self.kets.ndim != 2 or self.kets.shape[1] != 2 ** len(self.qubits):
            raise DimensionError(f"kets must have dimension {2 ** len(self.qubits)}")
        if not (len(self.kets) == len(self.counts) == len(self.totals)):
            raise DimensionError("need one count and one total per projector")
        if np.any(self.counts < 0) or np.any(self.totals <= 0):
            raise ConfigError("counts must be non-negative and totals positive")

    @property
    def dim(self) -> int:
        return self.kets.shape[1]

    def check_identifiable(self) -> None:
        rank = _gram_rank(self.kets)
        if rank < self.dim ** 2:
            raise UnidentifiableError(f"projectors span rank {rank} of {self.dim ** 2}")

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "qubits": list(self.qubits),
            "labels": list(self.labels),
            "kets": [{"re": k.real.tolist(), "im": k.imag.tolist()} for k in self.kets],
            "counts": self.counts.tolist(),
            "totals": self.totals.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> TomographyInput:
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError(f"unsupported tomography schema {data.get('schema_version')!r}")
        kets = np.array([np.asarray(k["re"]) + 1j * np.asarray(k["im"]) for k in data["kets"]])
        return cls(kets, data["counts"], data.get("totals"), tuple(data["qubits"]), tuple(data.get("labels", ())))


def exact_input(rho: DensityMatrix | np.ndarray, scheme: str = "full", total: float = 1e6,
                qubits: Sequence[str] | None = None) -> TomographyInput:
    """Noise-free expected counts ``total * <psi|rho|psi>`` per projector."""
    r = rho.elements if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    n = int(round(math.log2(r.shape[0])))
    kets, labels = tomography_settings(n, scheme)
    p = np.real(np.einsum("ki,ij,kj->k", kets.conj(), r, kets))
    qubits = tuple(qubits) if qubits else ("s1", "i1", "s2", "i2")[:n]
    return TomographyInput(kets, total * np.clip(p, 0, None), None, qubits, tuple(labels))


def input_from_records(records: Sequence, scheme: str = "full", group: int | None = 0) -> TomographyInput:
    """Assemble counts from one CountsRecord per plan entry.

    ``group`` selects a channel pair's zero-delay twofolds; ``None`` uses
    the fourfolds."""
    from ..detection import DELAYS

    n = 2 if group is not None else 4
    plan = measurement_plan(n, scheme)
    if len(records) != len(plan):
        raise ConfigError(f"expected {len(plan)} records for the {scheme} scheme, got {len(records)}")
    kets, labels = tomography_settings(n, scheme)
    counts, totals = [], []
    for rec, entry in zip(records, plan):
        for ports in entry.ports:
            if group is not None:
                counts.append(rec.twofold[group][ports][DELAYS.index(0)])
            else:
                counts.append(rec.fourfold[ports])
            totals.append(rec.n_pulses)
    qubits = ("s1", "i1", "s2", "i2") if group is None else (f"s{group + 1}", f"i{group + 1}")
    return TomographyInput(kets, counts, totals, qubits, tuple(labels))


# ---------------------------------------------------------------------------
# likelihood
# ---------------------------------------------------------------------------

class _Problem:
    def __init__(self, data: TomographyInput):
        self.psi_conj = data.kets.conj()
        self.n = data.counts
        self.t = data.totals
        self.total = data.counts.sum()
        self.d = data.dim
        self.tril = np.tril_indices(self.d)

    def unpack(self, x: np.ndarray) -> np.ndarray:
        m = len(self.tril[0])
        tmat = np.zeros((self.d, self.d), dtype=complex)
        tmat[self.tril] = x[:m] + 1j * x[m:]
        return tmat

    def pack(self, tmat: np.ndarray) -> np.ndarray:
        v = tmat[self.tril]
        return np.concatenate([v.real, v.imag])

    def probabilities(self, rho: np.ndarray) -> np.ndarray:
        return np.maximum(np.real(np.einsum("ki,ij,kj->k", self.psi_conj, rho, self.psi_conj.conj())), _FLOOR)

    def loglik(self, rho: np.ndarray) -> float:
        a = self.probabilities(rho)
        mask = self.n > 0
        return float(np.dot(self.n[mask], np.log(a[mask])) - self.total * math.log(np.dot(self.t, a)))

    def objective(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        tmat = self.unpack(x)
        b = self.psi_conj @ tmat
        a = np.maximum(np.sum(np.abs(b) ** 2, axis=1), _FLOOR)
        ta = float(np.dot(self.t, a))
        mask = self.n > 0
        ll = float(np.dot(self.n[mask], np.log(a[mask])) - self.total * math.log(ta))
        w = self.n / a - self.total * self.t / ta
        m = self.psi_conj.conj().T @ (w[:, None] * b)
        grad = 2 * m[self.tril]
        g = np.concatenate([grad.real, grad.imag])
        return -ll / self.total, -g / self.total


def _linear_inversion(data: TomographyInput) -> np.ndarray:
    rows = np.einsum("ki,kj->kij", data.kets.conj(), data.kets).reshape(len(data.kets), -1)
    freq = data.counts / data.totals
    vec, *_ = np.linalg.lstsq(rows, freq.astype(complex), rcond=None)
    rho = vec.reshape(data.dim, data.dim).T
    rho = (rho + rho.conj().T) / 2
    w, v = np.linalg.eigh(rho)
    w = np.clip(w, 0, None)
    if w.sum() <= 0:
        return np.eye(data.dim) / data.dim
    rho = (v * w) @ v.conj().T / w.sum()
    return 0.9 * rho + 0.1 * np.eye(data.dim) / data.dim


@dataclass
class TomographyResult:
    rho: DensityMatrix
    log_likelihood: float
    fidelity: float | None
    iterations: int
    converged: bool
    method: str
    history: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "rho": self.rho.to_dict(),
            "log_likelihood": self.log_likelihood,
            "fidelity": self.fidelity,
            "iterations": self.iterations,
            "converged": self.converged,
            "method": self.method,
        }


def _rrho(problem: _Problem, rho: np.ndarray, max_iter: int, tol: float) -> tuple[np.ndarray, list[float], bool]:
    """Diluted R-rho-R iteration, step halved whenever the likelihood drops."""
    history = [problem.loglik(rho)]
    eps = 0.5
    proj = np.einsum("ki,kj->kij", problem.psi_conj.conj(), problem.psi_conj)
    for _ in range(max_iter):
        a = problem.probabilities(rho)
        w = problem.n / (problem.total * a) - problem.t / np.dot(problem.t, a)
        r = np.einsum("k,kij->ij", w, proj)
        while eps > 1e-12:
            g = np.eye(problem.d) + eps * r
            cand = g @ rho @ g.conj().T
            cand /= np.trace(cand).real
            ll = problem.loglik(cand)
            if ll >= history[-1]:
                break
            eps /= 2
        else:
            return rho, history, True
        gain = ll - history[-1]
        rho = cand
        history.append(ll)
        if gain < tol * max(1.0, problem.total):
            return rho, history, True
    return rho, history, False


def tomography_mle(data: TomographyInput, target: PureState | np.ndarray | None = None, *,
                   max_iter: int = 5000, tol: float = 1e-10) -> TomographyResult:
    """Maximum-likelihood density matrix with optional fidelity to ``target``.

    Quasi-Newton (L-BFGS) ascent on the factor T; falls back to the diluted
    iterative scheme if the line search stalls."""
    data.check_identifiable()
    if data.counts.sum() <= 0:
        raise DegenerateDataError("all counts are zero")
    problem = _Problem(data)
    seed = _linear_inversion(data)
    tmat = np.linalg.cholesky(seed + 1e-12 * np.eye(data.dim))
    x0 = problem.pack(tmat)
    history = [problem.loglik(seed)]

    def record(xk):
        history.append(-problem.objective(xk)[0] * problem.total)

    res = minimize(problem.objective, x0, jac=True, method="L-BFGS-B", callback=record,
                   options={"maxiter": max_iter, "ftol": tol, "gtol": 1e-12, "maxcor": 30})
    tmat = problem.unpack(res.x)
    a = tmat @ tmat.conj().T
    rho = a / np.trace(a).real
    converged, method, iterations = bool(res.success), "lbfgs", int(res.nit)
    if not converged:
        rho, extra, converged = _rrho(problem, rho, max_iter, tol)
        history.extend(extra[1:])
        method, iterations = "lbfgs+rrho", iterations + len(extra) - 1
    dm = DensityMatrix.from_psd_projection(rho, data.qubits)
    ll = problem.loglik(dm.elements)
    f = fidelity(dm, target) if target is not None else None
    return TomographyResult(dm, ll, f, iterations, converged, method, history)


def bootstrap_fidelity(data: TomographyInput, target, n_resamples: int = 250,
                       rng: np.random.Generator | None = None, fit: TomographyResult | None = None
                       ) -> tuple[float, float]:
    """Parametric bootstrap: multinomial resampling from the fitted state.

    Returns the mean and standard deviation of the fidelity."""
    rng = rng or np.random.default_rng()
    fit = fit or tomography_mle(data, target)
    problem = _Problem(data)
    cell = data.totals * problem.probabilities(fit.rho.elements)
    cell /= cell.sum()
    total = int(round(data.counts.sum()))
    fs = []
    for _ in range(n_resamples):
        sample = TomographyInput(data.kets, rng.multinomial(total, cell), data.totals, data.qubits, data.labels)
        try:
            fs.append(tomography_mle(sample, target, max_iter=2000).fidelity)
        except DegenerateDataError:
            continue
    return float(np.mean(fs)), float(np.std(fs, ddof=1))
