"""Exact time evolution and stroboscopic schedule execution.

Propagators come from the Hermitian eigendecomposition of each segment
Hamiltonian, U = V exp(-i E t) V^dagger. A :class:`ScheduleRunner` keeps
one :class:`PropagatorCache`, so a schedule that alternates two segments n
times diagonalizes each segment Hamiltonian once.

Global pulses are ideal and instantaneous: exp(-i theta sum_k I_k^axis).
A 2*pi rotation therefore multiplies the state by (-1)^N.
"""
from __future__ import annotations

import functools
import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import linalg

from ..config import logging_config  # pylint: disable=unused-import
from ..config.settings import CACHE_SIZE
from .errors import BasisMismatchError, ScheduleError
from .hamiltonian import Basis, HamiltonianRecipe, OperatorMatrix, assemble, is_hermitian
from .network import SpinNetwork

logger = logging.getLogger("pst.propagation")

NORM_TOL = 1e-10
Sampling = Literal["per_segment", "per_repetition"]
Axis = Literal["x", "y", "z"]

# single-spin Pauli matrices in the (down, up) order of the full basis
_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, 1j], [-1j, 0]], dtype=complex),
    "z": np.array([[-1, 0], [0, 1]], dtype=complex),
}


@dataclass(frozen=True, eq=False)
class QuantumState:
    amplitudes: np.ndarray
    basis: Basis

    def __post_init__(self):
        if self.amplitudes.shape != (self.basis.dim,):
            raise BasisMismatchError(
                f"state of length {self.amplitudes.shape} does not match basis dimension {self.basis.dim}"
            )
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm={norm!r})")

    @classmethod
    def excitation(cls, site: int, basis: Basis) -> "QuantumState":
        """Only ``site`` up, every other spin down."""
        amps = np.zeros(basis.dim, dtype=complex)
        amps[basis.site_state(site)] = 1.0
        return cls(amps, basis)

    @classmethod
    def superposition(cls, site: int, alpha: complex, beta: complex, basis: Basis) -> "QuantumState":
        """Source qubit alpha|0> + beta|1> on ``site``, the rest in |0>."""
        norm = np.hypot(abs(alpha), abs(beta))
        if norm == 0:
            raise ValueError("alpha and beta cannot both be zero")
        amps = np.zeros(basis.dim, dtype=complex)
        amps[0] = alpha / norm
        amps[basis.site_state(site)] = beta / norm
        return cls(amps, basis)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: "QuantumState") -> complex:
        if other.basis != self.basis:
            raise BasisMismatchError("states live in different bases")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "QuantumState") -> float:
        return abs(self.overlap(other)) ** 2


def site_probabilities(state: QuantumState | np.ndarray, basis: Basis | None = None) -> np.ndarray:
    """Probability of each site being up."""
    if isinstance(state, QuantumState):
        amps, basis = state.amplitudes, state.basis
    else:
        amps = state
    weights = np.abs(amps) ** 2
    if basis.is_full:
        return weights @ (basis.z_table() + 0.5)
    return weights[1:].copy()


def excitation_number(state: QuantumState) -> float:
    return float(site_probabilities(state).sum())


class Pulse(BaseModel):
    axis: Axis
    angle: float
    model_config = ConfigDict(frozen=True)

    def inverse(self) -> "Pulse":
        return Pulse(axis=self.axis, angle=-self.angle)


class Segment(BaseModel):
    recipe: HamiltonianRecipe
    duration: float = Field(ge=0.0)
    pre_pulse: Pulse | None = None
    model_config = ConfigDict(frozen=True)


class Schedule(BaseModel):
    """Segments applied in order, the whole block repeated ``repetitions`` times.

    An ``inverse`` schedule undoes its forward counterpart: segments run in
    reverse order with conjugate propagators and inverted pulses.
    """

    segments: tuple[Segment, ...] = Field(min_length=1)
    repetitions: int = Field(default=1, ge=1)
    inverse: bool = False
    model_config = ConfigDict(frozen=True)

    @property
    def cycle_time(self) -> float:
        return float(sum(seg.duration for seg in self.segments))

    @property
    def total_time(self) -> float:
        return self.cycle_time * self.repetitions

    def describe(self) -> str:
        parts = []
        for seg in self.segments:
            text = f"{seg.recipe.describe()} for {seg.duration:.6g} s"
            if seg.pre_pulse is not None:
                text = f"pulse {seg.pre_pulse.axis}({seg.pre_pulse.angle:.6g}); " + text
            parts.append(text)
        prefix = "inverse of " if self.inverse else ""
        return f"{prefix}[{' | '.join(parts)}] x {self.repetitions}"


def reverse_schedule(sched: Schedule) -> Schedule:
    return sched.model_copy(update={"inverse": not sched.inverse})


@dataclass(eq=False)
class TransferTrace:
    """Per-site up probabilities sampled along a run.

    There is no t = 0 row; each row is taken after a sampled segment or
    repetition.
    """

    times: np.ndarray
    site_probabilities: np.ndarray
    labels: tuple[str, ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float).reshape(-1)
        n = len(self.labels)
        self.site_probabilities = np.asarray(self.site_probabilities, dtype=float).reshape(len(self.times), n)
        if np.any(np.diff(self.times) < 0):
            raise ValueError("trace times must be non-decreasing")
        probs = self.site_probabilities
        if probs.size and (probs.min() < -NORM_TOL or probs.max() > 1 + NORM_TOL):
            raise ValueError("trace probabilities must lie in [0, 1]")

    @classmethod
    def empty(cls, labels, metadata: dict | None = None) -> "TransferTrace":
        return cls(np.zeros(0), np.zeros((0, len(labels))), tuple(labels), dict(metadata or {}))

    def __len__(self) -> int:
        return len(self.times)

    def total_excitation(self) -> np.ndarray:
        return self.site_probabilities.sum(axis=1)

    def column(self, site: int) -> np.ndarray:
        return self.site_probabilities[:, site]

    def peak(self, site: int) -> tuple[float, float]:
        """(largest probability on ``site``, earliest time it occurs)."""
        if not len(self):
            return 0.0, 0.0
        col = self.column(site)
        k = int(np.argmax(col))
        return float(col[k]), float(self.times[k])

    def final(self, site: int) -> float:
        return float(self.site_probabilities[-1, site]) if len(self) else 0.0

    def concat(self, other: "TransferTrace") -> "TransferTrace":
        """Append ``other`` with its times shifted to start after this trace."""
        if tuple(other.labels) != tuple(self.labels):
            raise ValueError("cannot join traces of different networks")
        offset = float(self.metadata.get("duration", self.times[-1] if len(self) else 0.0))
        meta = dict(self.metadata)
        meta["duration"] = offset + float(other.metadata.get("duration", other.times[-1] if len(other) else 0.0))
        return TransferTrace(
            np.concatenate([self.times, other.times + offset]),
            np.vstack([self.site_probabilities, other.site_probabilities]),
            self.labels,
            meta,
        )


def _require_hermitian(H: OperatorMatrix) -> None:
    if not (H.hermitian or is_hermitian(H.data)):
        logger.error("refusing to exponentiate a non-Hermitian operator")
        raise ValueError("propagator needs a Hermitian operator")


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    energies: np.ndarray
    vectors: np.ndarray

    @classmethod
    def of(cls, H: OperatorMatrix) -> "EigenDecomposition":
        _require_hermitian(H)
        energies, vectors = linalg.eigh(H.data)
        return cls(energies, vectors)

    def unitary(self, t: float) -> np.ndarray:
        phases = np.exp(-1j * self.energies * t)
        return (self.vectors * phases) @ self.vectors.conj().T


def propagator(H: OperatorMatrix, t: float) -> OperatorMatrix:
    """U = exp(-i H t) via eigendecomposition."""
    return OperatorMatrix(EigenDecomposition.of(H).unitary(t), H.basis)


def evolve(state: QuantumState, H: OperatorMatrix, t: float) -> QuantumState:
    if state.basis != H.basis:
        raise BasisMismatchError(f"state basis {state.basis} does not match operator basis {H.basis}")
    return QuantumState(propagator(H, t).data @ state.amplitudes, state.basis)


@functools.lru_cache(maxsize=64)
def _rotation_cached(axis: str, angle: float, kind: str, n_sites: int) -> np.ndarray:
    basis = Basis.parse(kind, n_sites)
    if axis == "z":
        m = basis.z_table().sum(axis=1)
        return np.diag(np.exp(-1j * angle * m))
    if not basis.is_full:
        raise BasisMismatchError(f"{axis} pulses leave the single-excitation sector; use the full basis")
    single = np.cos(angle / 2) * np.eye(2) - 1j * np.sin(angle / 2) * _PAULI[axis]
    return functools.reduce(np.kron, [single] * n_sites)


def rotation_matrix(axis: Axis, angle: float, basis: Basis) -> np.ndarray:
    """exp(-i angle sum_k I_k^axis) in ``basis``."""
    if axis not in _PAULI:
        raise ValueError(f"unknown pulse axis {axis!r}")
    return _rotation_cached(axis, float(angle), basis.kind.value, basis.n_sites).copy()


def global_pulse(state: QuantumState, axis: Axis, angle: float) -> QuantumState:
    return QuantumState(rotation_matrix(axis, angle, state.basis) @ state.amplitudes, state.basis)


class PropagatorCache:
    """LRU cache of eigendecompositions and propagators for one worker."""

    def __init__(self, net: SpinNetwork, basis: Basis, maxsize: int = CACHE_SIZE):
        self.net = net
        self.basis = basis
        self.maxsize = maxsize
        self._eigen: dict[HamiltonianRecipe, EigenDecomposition] = {}
        self._unitaries: OrderedDict = OrderedDict()
        self.hits = 0
        self.misses = 0

    def decomposition(self, recipe: HamiltonianRecipe) -> EigenDecomposition:
        eig = self._eigen.get(recipe)
        if eig is None:
            eig = EigenDecomposition.of(assemble(recipe, self.net, self.basis))
            self._eigen[recipe] = eig
        return eig

    def unitary(self, recipe: HamiltonianRecipe, duration: float) -> np.ndarray:
        key = (recipe, float(duration).hex())
        U = self._unitaries.get(key)
        if U is not None:
            self.hits += 1
            self._unitaries.move_to_end(key)
            return U
        self.misses += 1
        U = self.decomposition(recipe).unitary(duration)
        self._unitaries[key] = U
        if len(self._unitaries) > self.maxsize:
            self._unitaries.popitem(last=False)
        return U


class ScheduleRunner:
    """Executes schedules on one network in one basis."""

    def __init__(self, net: SpinNetwork, basis: Basis | str = "single_excitation", cache: PropagatorCache | None = None):
        self.net = net
        self.basis = Basis.parse(basis, net.n_sites)
        self.cache = cache if cache is not None else PropagatorCache(net, self.basis)

    def _segment_ops(self, seg: Segment, inverse: bool) -> list[np.ndarray]:
        U = self.cache.unitary(seg.recipe, seg.duration)
        ops = []
        if not inverse:
            if seg.pre_pulse is not None:
                ops.append(rotation_matrix(seg.pre_pulse.axis, seg.pre_pulse.angle, self.basis))
            ops.append(U)
        else:
            ops.append(U.conj().T)
            if seg.pre_pulse is not None:
                inv = seg.pre_pulse.inverse()
                ops.append(rotation_matrix(inv.axis, inv.angle, self.basis))
        return ops

    def _ordered_segments(self, sched: Schedule) -> tuple[Segment, ...]:
        return tuple(reversed(sched.segments)) if sched.inverse else sched.segments

    def cycle_unitary(self, sched: Schedule) -> np.ndarray:
        """Propagator of one repetition."""
        U = np.eye(self.basis.dim, dtype=complex)
        for seg in self._ordered_segments(sched):
            for op in self._segment_ops(seg, sched.inverse):
                U = op @ U
        return U

    def total_unitary(self, sched: Schedule) -> np.ndarray:
        return np.linalg.matrix_power(self.cycle_unitary(sched), sched.repetitions)

    def run(self, state: QuantumState, sched: Schedule, sample: Sampling = "per_repetition") -> tuple[QuantumState, TransferTrace]:
        """Apply the schedule and record per-site probabilities."""
        if state.basis != self.basis:
            raise BasisMismatchError(f"state basis {state.basis} does not match runner basis {self.basis}")
        if sample not in ("per_segment", "per_repetition"):
            raise ScheduleError(f"unknown sampling convention {sample!r}")
        for seg in sched.segments:
            seg.recipe.validate_for(self.net)
        logger.info("running %s in %s basis, sampling %s", sched.describe(), self.basis.kind.value, sample)

        psi = state.amplitudes.copy()
        times, rows = [], []
        t = 0.0
        if sample == "per_repetition":
            cycle = self.cycle_unitary(sched)
            step = sched.cycle_time
            for _ in range(sched.repetitions):
                psi = cycle @ psi
                t += step
                times.append(t)
                rows.append(site_probabilities(psi, self.basis))
        else:
            segments = self._ordered_segments(sched)
            for _ in range(sched.repetitions):
                for seg in segments:
                    for op in self._segment_ops(seg, sched.inverse):
                        psi = op @ psi
                    if seg.duration > 0:
                        t += seg.duration
                        times.append(t)
                        rows.append(site_probabilities(psi, self.basis))
        logger.debug("cache hits=%d misses=%d", self.cache.hits, self.cache.misses)

        meta = {"schedule": sched.describe(), "sampling": sample, "basis": self.basis.kind.value, "duration": sched.total_time}
        trace = TransferTrace(np.array(times), np.array(rows).reshape(len(times), self.net.n_sites), self.net.labels, meta)
        return QuantumState(psi, self.basis), trace


def run_schedule(state: QuantumState, sched: Schedule, net: SpinNetwork, sample: Sampling = "per_repetition") -> TransferTrace:
    _, trace = ScheduleRunner(net, state.basis).run(state, sched, sample)
    return trace


def transfer_amplitude(sched: Schedule, net: SpinNetwork, source: int, target: int, basis: Basis | str = "single_excitation") -> complex:
    """Amplitude <target|U|source> with the vacuum phase divided out."""
    runner = ScheduleRunner(net, basis)
    U = runner.total_unitary(sched)
    b = runner.basis
    vac = U[0, 0]
    f = U[b.site_state(target), b.site_state(source)]
    if abs(vac) > 0:
        f = f * np.conj(vac) / abs(vac)
    return complex(f)


def average_qubit_fidelity(amplitude: complex) -> float:
    """Average fidelity of the qubit channel with transition amplitude f."""
    f = abs(amplitude)
    return 0.5 + f / 3.0 + f * f / 6.0
