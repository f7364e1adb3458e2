"""Toggling-frame compilation of Ising couplings into flip-flop couplings.

A :class:`TogglingSequence` is a list of frames. In frame k the spins are
rotated by R_k = exp(-i theta_k sum I^axis_k) and the base Hamiltonian acts
for a fraction f_k of the cycle, so the frame contributes R_k^dagger H R_k.
The zeroth-order average Hamiltonian is the dwell-weighted sum of these
contributions; it becomes exact as the cycle time goes to zero.

In the lab each frame is realized as: pulse R_k, free evolution under H
for f_k * T, pulse R_k^dagger. Rotating the quantization axis to x in one
half of the cycle and to y in the other turns sum J I^z I^z into
(1/2) sum J (I^x I^x + I^y I^y).
"""
from __future__ import annotations

import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..config import logging_config  # pylint: disable=unused-import
from .hamiltonian import Basis, HamiltonianRecipe, OperatorMatrix, assemble, hermitize
from .network import SpinNetwork
from .propagation import Axis, Pulse, Schedule, ScheduleRunner, Segment, propagator, rotation_matrix

logger = logging.getLogger("pst.toggling")

DWELL_TOL = 1e-12


class Frame(BaseModel):
    """One toggling frame: a global rotation and the fraction of the cycle spent in it.

    ``recipe`` overrides the sequence's base recipe for this frame, which is
    how a mix/free cycle with two different Hamiltonians is expressed.
    """

    axis: Axis = "z"
    angle: float = 0.0
    dwell: float = Field(gt=0.0)
    recipe: HamiltonianRecipe | None = None
    model_config = ConfigDict(frozen=True)

    @property
    def is_identity(self) -> bool:
        return self.angle == 0.0


class TogglingSequence(BaseModel):
    frames: tuple[Frame, ...] = Field(min_length=1)
    loops: int = Field(default=1, ge=1)
    base_recipe: HamiltonianRecipe
    # factor by which the compiled coupling is weaker than the ideal XY one
    xy_scale: float = 1.0
    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_dwells(self):
        total = sum(frame.dwell for frame in self.frames)
        if abs(total - 1.0) > DWELL_TOL:
            raise ValueError(f"dwell fractions must sum to 1, got {total!r}")
        return self

    def recipe_for(self, frame: Frame) -> HamiltonianRecipe:
        return frame.recipe if frame.recipe is not None else self.base_recipe

    def needs_full_basis(self) -> bool:
        return any(frame.axis != "z" and not frame.is_identity for frame in self.frames)

    def cycle_schedule(self, cycle_time: float, repetitions: int = 1) -> Schedule:
        """One loop as pulses and dwells, ready for the propagation engine."""
        segments = []
        for frame in self.frames:
            recipe = self.recipe_for(frame)
            if frame.is_identity:
                segments.append(Segment(recipe=recipe, duration=frame.dwell * cycle_time))
                continue
            pulse = Pulse(axis=frame.axis, angle=frame.angle)
            segments.append(Segment(recipe=recipe, duration=frame.dwell * cycle_time, pre_pulse=pulse))
            segments.append(Segment(recipe=recipe, duration=0.0, pre_pulse=pulse.inverse()))
        return Schedule(segments=tuple(segments), repetitions=repetitions)

    def loop_schedule(self, total_time: float) -> Schedule:
        """``loops`` cycles filling ``total_time``."""
        return self.cycle_schedule(total_time / self.loops, repetitions=self.loops)


def _default_basis(seq: TogglingSequence, net: SpinNetwork, basis) -> Basis:
    if basis is None:
        return Basis.full(net.n_sites) if seq.needs_full_basis() else Basis.single_excitation(net.n_sites)
    return Basis.parse(basis, net.n_sites)


def average_hamiltonian_zero_order(seq: TogglingSequence, net: SpinNetwork, basis: Basis | str | None = None) -> OperatorMatrix:
    """Dwell-weighted sum of the toggled frame Hamiltonians."""
    basis = _default_basis(seq, net, basis)
    data = np.zeros((basis.dim, basis.dim), dtype=complex)
    for frame in seq.frames:
        H = assemble(seq.recipe_for(frame), net, basis).data
        if not frame.is_identity:
            R = rotation_matrix(frame.axis, frame.angle, basis)
            H = R.conj().T @ H @ R
        data += frame.dwell * H
    logger.debug("zero-order average over %d frames in %s basis", len(seq.frames), basis.kind.value)
    return OperatorMatrix(hermitize(data), basis, hermitian=True)


def compile_xy_from_ising(net: SpinNetwork, loops: int = 1) -> TogglingSequence:
    """Two-frame sequence whose average turns H_ZZ into (1/2) H_XY."""
    if not net.couplings_hz:
        logger.warning("network has no couplings; the compiled sequence averages to zero")
    return TogglingSequence(
        frames=(
            Frame(axis="y", angle=math.pi / 2, dwell=0.5),
            Frame(axis="x", angle=math.pi / 2, dwell=0.5),
        ),
        loops=loops,
        base_recipe=HamiltonianRecipe.zz(),
        xy_scale=0.5,
    )


def mix_free_sequence(i: int, j: int, tau_mix: float, tau_free: float) -> TogglingSequence:
    """The stroboscopic mix/free cycle written as a two-frame sequence."""
    total = tau_mix + tau_free
    return TogglingSequence(
        frames=(
            Frame(dwell=tau_mix / total, recipe=HamiltonianRecipe.xy()),
            Frame(dwell=tau_free / total, recipe=HamiltonianRecipe.zeeman(excluded=(i, j))),
        ),
        base_recipe=HamiltonianRecipe.xy(),
    )


def exact_cycle_propagator(seq: TogglingSequence, net: SpinNetwork, cycle_time: float, basis: Basis | str | None = None) -> np.ndarray:
    basis = _default_basis(seq, net, basis)
    return ScheduleRunner(net, basis).cycle_unitary(seq.cycle_schedule(cycle_time))


def truncation_error(
    seq: TogglingSequence,
    cycle_time: float,
    net: SpinNetwork,
    normalize: bool = True,
    basis: Basis | str | None = None,
) -> float:
    """Operator-norm distance between the exact cycle and exp(-i H_avg T).

    With ``normalize`` the distance is divided by the cycle time.
    """
    if cycle_time <= 0:
        raise ValueError("cycle_time must be positive")
    basis = _default_basis(seq, net, basis)
    exact = exact_cycle_propagator(seq, net, cycle_time, basis)
    avg = propagator(average_hamiltonian_zero_order(seq, net, basis), cycle_time).data
    distance = float(np.linalg.norm(exact - avg, ord=2))
    logger.debug("truncation distance %.3e at cycle time %.3e s", distance, cycle_time)
    return distance / cycle_time if normalize else distance


def loop_deviation(seq: TogglingSequence, net: SpinNetwork, total_time: float, basis: Basis | str | None = None) -> float:
    """Distance between ``seq.loops`` exact cycles and the averaged evolution over ``total_time``."""
    basis = _default_basis(seq, net, basis)
    exact = ScheduleRunner(net, basis).total_unitary(seq.loop_schedule(total_time))
    avg = propagator(average_hamiltonian_zero_order(seq, net, basis), total_time).data
    return float(np.linalg.norm(exact - avg, ord=2))


def fit_scaling_exponent(cycle_times, errors) -> float:
    """Slope of log(error) against log(cycle time)."""
    x = np.log(np.asarray(cycle_times, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def ideal_xy_distance(seq: TogglingSequence, net: SpinNetwork) -> float:
    """Max elementwise distance between the sequence average and xy_scale * H_XY."""
    avg = average_hamiltonian_zero_order(seq, net, "full")
    target = assemble(HamiltonianRecipe.xy(scale=seq.xy_scale), net, "full")
    return float(np.max(np.abs(avg.data - target.data)))
