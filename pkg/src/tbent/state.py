"""Sparse photonic states over labeled modes and qubit-register density matrices.

A :class:`PureState` maps ordered tuples of :class:`ModeLabel` (one label per
photon) to complex amplitudes. Photons are identified by ``(channel,
replica)``; every term of a state carries the same photons in the same
canonical order (s1, i1, s2, i2, pump; then replica index).
"""

from __future__ import annotations

import cmath
import dataclasses
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import ArityError, DimensionError, LabelCollisionError, UnresolvedDOFError

SCHEMA_VERSION = 1

CHANNELS = ("s1", "i1", "s2", "i2", "pump")
TIMEBINS = ("e", "l", "m", "ee", "el", "le", "ll")
POLARIZATIONS = ("H", "V")
PATHS = (None, "long", "short", "t", "r")

_CH_INDEX = {c: k for k, c in enumerate(CHANNELS)}
_TB_INDEX = {t: k for k, t in enumerate(TIMEBINS)}
_PATH_INDEX = {p: k for k, p in enumerate(PATHS)}

PURE_TOL = 1e-12
DENSITY_TOL = 1e-10
EIG_FLOOR = -1e-8
_PRUNE = 1e-15


@dataclass(frozen=True)
class ModeLabel:
    channel: str
    timebin: str
    polarization: str
    path: str | None = None
    replica: int = 0

    def __post_init__(self):
        if self.channel not in _CH_INDEX:
            raise ValueError(f"unknown channel {self.channel!r}")
        if self.timebin not in _TB_INDEX:
            raise ValueError(f"unknown time bin {self.timebin!r}")
        if self.polarization not in POLARIZATIONS:
            raise ValueError(f"unknown polarization {self.polarization!r}")
        if self.path not in _PATH_INDEX:
            raise ValueError(f"unknown path tag {self.path!r}")
        if self.replica < 0:
            raise ValueError("replica index must be non-negative")

    @property
    def photon(self) -> tuple[str, int]:
        return (self.channel, self.replica)

    def replace(self, **changes) -> ModeLabel:
        return dataclasses.replace(self, **changes)

    def sort_key(self):
        return (_CH_INDEX[self.channel], self.replica, _TB_INDEX[self.timebin],
                POLARIZATIONS.index(self.polarization), _PATH_INDEX[self.path])

    def to_dict(self) -> dict:
        return {"channel": self.channel, "timebin": self.timebin,
                "polarization": self.polarization, "path": self.path,
                "replica": self.replica}

    def __str__(self):
        tag = f"{self.channel}" + (f"#{self.replica}" if self.replica else "")
        path = f",{self.path}" if self.path else ""
        return f"{self.timebin}{self.polarization}{path}_{tag}"


def _photon_key(photon: tuple[str, int]):
    return (_CH_INDEX[photon[0]], photon[1])


def _term_key(modes: tuple[ModeLabel, ...]):
    return tuple(m.sort_key() for m in modes)


class PureState:
    """Immutable sparse superposition of multi-photon mode configurations."""

    __slots__ = ("_terms", "_photons")

    def __init__(self, terms: Mapping[Sequence[ModeLabel], complex] | Iterable,
                 photons: Sequence[tuple[str, int]] | None = None):
        items = terms.items() if isinstance(terms, Mapping) else terms
        merged: dict[tuple[ModeLabel, ...], complex] = {}
        ref = None
        for modes, amp in items:
            modes = tuple(sorted(modes, key=lambda m: _photon_key(m.photon)))
            who = tuple(m.photon for m in modes)
            if len(set(who)) != len(who):
                raise LabelCollisionError(f"photon label used twice in {who}")
            if ref is None:
                ref = who
            elif who != ref:
                raise ArityError(f"inconsistent photons in state: {ref} vs {who}")
            merged[modes] = merged.get(modes, 0j) + complex(amp)
        if ref is None:
            ref = tuple(photons) if photons is not None else ()
        elif photons is not None and tuple(photons) != ref:
            raise ArityError("explicit photon list disagrees with terms")
        kept = {k: v for k, v in merged.items() if abs(v) > _PRUNE}
        self._terms = MappingProxyType(dict(sorted(kept.items(), key=lambda kv: _term_key(kv[0]))))
        self._photons = ref

    # -- constructors -------------------------------------------------
    @classmethod
    def vacuum(cls) -> PureState:
        return cls({(): 1.0})

    @classmethod
    def basis(cls, *labels: ModeLabel, amplitude: complex = 1.0) -> PureState:
        return cls({tuple(labels): amplitude})

    @classmethod
    def from_polarization_vector(cls, vector, channels: Sequence[str],
                                 timebin: str = "m") -> PureState:
        """Build a state from a dense vector over the H/V register (H=0, V=1,
        first channel most significant)."""
        vec = np.asarray(vector, dtype=complex).ravel()
        n = len(channels)
        if vec.size != 2 ** n:
            raise DimensionError(f"vector of size {vec.size} does not fit {n} qubits")
        terms = {}
        for idx, amp in enumerate(vec):
            if amp == 0:
                continue
            bits = [(idx >> (n - 1 - j)) & 1 for j in range(n)]
            terms[tuple(ModeLabel(ch, timebin, POLARIZATIONS[b]) for ch, b in zip(channels, bits))] = amp
        return cls(terms, photons=tuple((ch, 0) for ch in channels) if not terms else None)

    # -- basic properties ----------------------------------------------
    @property
    def terms(self) -> Mapping[tuple[ModeLabel, ...], complex]:
        return self._terms

    @property
    def photons(self) -> tuple[tuple[str, int], ...]:
        return self._photons

    @property
    def photon_count(self) -> int:
        return len(self._photons)

    @property
    def channels(self) -> tuple[str, ...]:
        return tuple(p[0] for p in self._photons)

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    def amplitude(self, *labels: ModeLabel) -> complex:
        key = tuple(sorted(labels, key=lambda m: _photon_key(m.photon)))
        return self._terms.get(key, 0j)

    def norm_squared(self) -> float:
        return float(sum(abs(a) ** 2 for a in self._terms.values()))

    def norm(self) -> float:
        return math.sqrt(self.norm_squared())

    # -- algebra -------------------------------------------------------
    def scaled(self, factor: complex) -> PureState:
        return PureState({k: factor * v for k, v in self._terms.items()}, photons=self._photons)

    def normalized(self) -> PureState:
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("cannot normalize the zero vector")
        return self.scaled(1.0 / n)

    def canonicalize(self) -> PureState:
        """Fix the global phase: first nonzero amplitude becomes real-positive."""
        for amp in self._terms.values():
            return self.scaled(abs(amp) / amp)
        return self

    def __add__(self, other: PureState) -> PureState:
        if other.photons != self.photons:
            raise ArityError("cannot superpose states of different photons")
        terms = dict(self._terms)
        for k, v in other.items():
            terms[k] = terms.get(k, 0j) + v
        return PureState(terms, photons=self._photons)

    def tensor(self, other: PureState) -> PureState:
        clash = set(self.photons) & set(other.photons)
        if clash:
            raise LabelCollisionError(f"photon labels shared by both factors: {sorted(clash)}")
        photons = tuple(sorted(self.photons + other.photons, key=_photon_key))
        terms = {}
        for ka, va in self.items():
            for kb, vb in other.items():
                terms[ka + kb] = va * vb
        return PureState(terms, photons=photons)

    __matmul__ = tensor

    def inner(self, other: PureState) -> complex:
        """<self|other>, conjugate-linear in ``self``."""
        if self.photon_count != other.photon_count:
            raise DimensionError(
                f"arity mismatch: {self.photon_count} vs {other.photon_count} photons")
        small, big = (self, other) if len(self) <= len(other) else (other, self)
        acc = 0j
        for k, v in small.items():
            w = big._terms.get(k)
            if w is not None:
                acc += v.conjugate() * w if small is self else w.conjugate() * v
        return acc

    def map_photon(self, photon: tuple[str, int] | str,
                   fn: Callable[[ModeLabel], Iterable[tuple[ModeLabel, complex]]]) -> PureState:
        """Apply a single-photon linear map given by its action on basis labels."""
        if isinstance(photon, str):
            photon = (photon, 0)
        try:
            j = self._photons.index(photon)
        except ValueError:
            raise ArityError(f"state has no photon {photon}") from None
        terms: dict = {}
        for modes, amp in self._terms.items():
            for new, c in fn(modes[j]):
                if new.photon != photon:
                    raise LabelCollisionError("single-photon map changed photon identity")
                key = modes[:j] + (new,) + modes[j + 1:]
                terms[key] = terms.get(key, 0j) + amp * c
        return PureState(terms, photons=self._photons)

    def map_labels(self, fn: Callable[[ModeLabel], ModeLabel]) -> PureState:
        """Relabel every mode (amplitudes of colliding terms add coherently)."""
        terms: dict = {}
        for modes, amp in self._terms.items():
            key = tuple(fn(m) for m in modes)
            terms[key] = terms.get(key, 0j) + amp
        return PureState(terms, photons=self._photons)

    def filter(self, keep: Callable[[tuple[ModeLabel, ...]], bool]) -> PureState:
        return PureState({k: v for k, v in self._terms.items() if keep(k)}, photons=self._photons)

    def isclose(self, other: PureState, tol: float = PURE_TOL, up_to_phase: bool = False) -> bool:
        if other.photons != self.photons:
            return False
        if up_to_phase:
            return abs(abs(self.inner(other)) - self.norm() * other.norm()) <= tol and \
                abs(self.norm() - other.norm()) <= tol
        keys = set(self._terms) | set(other.terms)
        return all(abs(self._terms.get(k, 0j) - other.terms.get(k, 0j)) <= tol for k in keys)

    # -- serialization -------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "photons": [list(p) for p in self._photons],
            "terms": [{"modes": [m.to_dict() for m in k], "re": v.real, "im": v.imag}
                      for k, v in self._terms.items()],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> PureState:
        if data.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise ValueError(f"unsupported state schema version {data.get('schema_version')}")
        terms = {}
        for t in data["terms"]:
            modes = tuple(ModeLabel(**m) for m in t["modes"])
            terms[modes] = complex(t["re"], t.get("im", 0.0))
        photons = data.get("photons")
        return cls(terms, photons=[tuple(p) for p in photons] if photons is not None else None)

    def __repr__(self):
        if not self._terms:
            return "PureState(0)"
        parts = []
        for k, v in self._terms.items():
            parts.append(f"({v.real:+.4g}{v.imag:+.4g}j)|" + " ".join(map(str, k)) + ">")
        return "PureState(" + " ".join(parts) + ")"


def tensor(a: PureState, b: PureState) -> PureState:
    return a.tensor(b)


def inner(a: PureState, b: PureState) -> complex:
    return a.inner(b)


def ideal_bell(phase: float = 0.0, channels: Sequence[str] = ("s1", "i1")) -> PureState:
    """(|HH> + e^{i phase}|VV>)/sqrt(2) on the middle bin."""
    s, i = channels
    return PureState({
        (ModeLabel(s, "m", "H"), ModeLabel(i, "m", "H")): 1 / math.sqrt(2),
        (ModeLabel(s, "m", "V"), ModeLabel(i, "m", "V")): cmath.exp(1j * phase) / math.sqrt(2),
    })


def ideal_bell_pair_product(phases: Sequence[float] = (0.0, 0.0)) -> PureState:
    """Two simultaneous Bell pairs on (s1, i1) and (s2, i2)."""
    return ideal_bell(phases[0], ("s1", "i1")).tensor(ideal_bell(phases[1], ("s2", "i2")))


# ---------------------------------------------------------------------------
# qubit register
# ---------------------------------------------------------------------------

def polarization_vector(s: PureState) -> np.ndarray:
    """Dense H/V register amplitudes of a state with resolved time bins."""
    n = s.photon_count
    bins: dict[int, str] = {}
    vec = np.zeros(2 ** n, dtype=complex)
    for modes, amp in s.items():
        idx = 0
        for j, m in enumerate(modes):
            if m.path is not None:
                raise UnresolvedDOFError(f"photon {m.photon} still carries path tag {m.path!r}")
            if bins.setdefault(j, m.timebin) != m.timebin:
                raise UnresolvedDOFError(
                    f"photon {m.photon} spans several time bins; post-select first")
            idx = (idx << 1) | (m.polarization == "V")
        vec[idx] += amp
    return vec


class DensityMatrix:
    """Hermitian, PSD, unit-trace operator on 2 or 4 polarization qubits.

    Qubit order is carried in ``qubits`` (default s1, i1, s2, i2 prefix)."""

    __slots__ = ("_rho", "qubits")

    def __init__(self, elements, qubits: Sequence[str] | None = None, *, check: bool = True):
        rho = np.array(elements, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise DimensionError(f"density matrix must be square, got {rho.shape}")
        dim = rho.shape[0]
        n = dim.bit_length() - 1
        if dim < 2 or 2 ** n != dim:
            raise DimensionError(f"dimension {dim} is not a qubit register")
        if qubits is None:
            qubits = CHANNELS[:n] if n <= 4 else tuple(f"q{k}" for k in range(n))
        if len(qubits) != n:
            raise DimensionError("qubit labels do not match dimension")
        if check:
            if np.max(np.abs(rho - rho.conj().T)) > DENSITY_TOL:
                raise ValueError("density matrix is not Hermitian")
            if abs(np.trace(rho) - 1) > DENSITY_TOL:
                raise ValueError(f"density matrix trace {np.trace(rho).real:.12g} != 1")
            if np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() < EIG_FLOOR:
                raise ValueError("density matrix is not positive semidefinite")
        rho.setflags(write=False)
        self._rho = rho
        self.qubits = tuple(qubits)

    @classmethod
    def from_psd_projection(cls, elements, qubits=None) -> DensityMatrix:
        """Hermitize, truncate negative eigenvalues and renormalize."""
        a = np.asarray(elements, dtype=complex)
        a = (a + a.conj().T) / 2
        w, v = np.linalg.eigh(a)
        w = np.clip(w, 0.0, None)
        if w.sum() <= 0:
            raise ValueError("no positive part to project onto")
        rho = (v * (w / w.sum())) @ v.conj().T
        return cls((rho + rho.conj().T) / 2, qubits)

    @classmethod
    def maximally_mixed(cls, n_qubits: int) -> DensityMatrix:
        d = 2 ** n_qubits
        return cls(np.eye(d) / d)

    @property
    def elements(self) -> np.ndarray:
        return self._rho

    @property
    def dim(self) -> int:
        return self._rho.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self._rho)

    def purity(self) -> float:
        return float(np.real(np.trace(self._rho @ self._rho)))

    def expectation(self, op) -> complex:
        return complex(np.trace(self._rho @ np.asarray(op)))

    def permute(self, order: Sequence[int]) -> DensityMatrix:
        """Reorder qubits: new qubit k is old qubit ``order[k]``."""
        n = self.n_qubits
        t = self._rho.reshape([2] * (2 * n))
        perm = list(order) + [n + k for k in order]
        out = t.transpose(perm).reshape(self.dim, self.dim)
        return DensityMatrix(out, [self.qubits[k] for k in order], check=False)

    def mix(self, other: DensityMatrix, weight: float) -> DensityMatrix:
        """(1 - weight)*self + weight*other."""
        return DensityMatrix((1 - weight) * self._rho + weight * other.elements, self.qubits)

    def kron(self, other: DensityMatrix) -> DensityMatrix:
        return DensityMatrix(np.kron(self._rho, other.elements), self.qubits + other.qubits)

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "qubits": list(self.qubits),
                "ordering": "row-major", "re": self._rho.real.tolist(),
                "im": self._rho.imag.tolist()}

    @classmethod
    def from_dict(cls, data: Mapping) -> DensityMatrix:
        rho = np.asarray(data["re"], float) + 1j * np.asarray(data["im"], float)
        return cls(rho, data.get("qubits"))

    def __repr__(self):
        return f"DensityMatrix(qubits={self.qubits}, purity={self.purity():.4f})"


def to_density(s: PureState) -> DensityMatrix:
    """Rank-1 density matrix of a post-selected polarization state.

    Time-bin labels are dropped; each photon must sit in a single bin."""
    if s.photon_count == 0:
        raise DimensionError("vacuum has no qubit register")
    v = polarization_vector(s)
    nrm = np.vdot(v, v).real
    if nrm == 0:
        raise ZeroDivisionError("zero state")
    v = v / math.sqrt(nrm)
    return DensityMatrix(np.outer(v, v.conj()), s.channels)


def _as_vector(target) -> np.ndarray:
    if isinstance(target, PureState):
        v = polarization_vector(target)
    else:
        v = np.asarray(target, dtype=complex).ravel()
    return v / np.linalg.norm(v)


def fidelity(rho: DensityMatrix | np.ndarray, target: PureState | np.ndarray) -> float:
    """Tr(rho |target><target|)."""
    r = rho.elements if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    v = _as_vector(target)
    if r.shape != (v.size, v.size):
        raise DimensionError(f"rho is {r.shape}, target has dimension {v.size}")
    f = float(np.real(np.vdot(v, r @ v)))
    return min(max(f, 0.0), 1.0)


def werner_state(visibility: float, target: PureState | np.ndarray | None = None) -> DensityMatrix:
    """visibility*|target><target| + (1 - visibility)*I/d (default target: |Phi+>)."""
    v = _as_vector(target if target is not None else ideal_bell())
    d = v.size
    rho = visibility * np.outer(v, v.conj()) + (1 - visibility) * np.eye(d) / d
    return DensityMatrix(rho)
