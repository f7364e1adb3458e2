"""Commensurate timing, selectivity scoring and relay planning.

A pair (i, j) stays coupled under the stroboscopic mix/free cycle when the
free period is a whole number of its relative-precession periods,
tau_free = n * 2 pi / Delta_ij. Every other coupled pair (k, l) then
advances by a relative phase Delta_kl * tau_free per cycle; the distance of
Delta_kl * tau_free / 2 pi from the nearest integer (its residual) says how
well that pair is dephased: 0 means accidentally recoupled, 0.5 means
maximally dephased.
"""
from __future__ import annotations

import logging
import math
from itertools import product
from typing import Literal, Sequence

import numpy as np
from pathos.pools import ThreadPool
from pydantic import BaseModel, ConfigDict

from ..config import logging_config  # pylint: disable=unused-import
from ..config.settings import HARMONIC_MAX, N_MAX, TIE_TOLERANCE, TRIAD_TOLERANCE, WORKERS
from .errors import DegenerateShiftError, ScheduleError
from .hamiltonian import HamiltonianRecipe, assemble
from .network import TWO_PI, SpinNetwork, shift_difference
from .propagation import QuantumState, Schedule, ScheduleRunner, Segment, TransferTrace, site_probabilities
from .toggling import compile_xy_from_ising

logger = logging.getLogger("pst.scheduler")

Completion = Literal["budget", "peak"]
HopMode = Literal["pair", "triad"]
Mixing = Literal["xy", "ising"]


class PairResidual(BaseModel):
    pair: tuple[int, int]
    residual: float
    model_config = ConfigDict(frozen=True)


class PairTiming(BaseModel):
    pair: tuple[int, int]
    tau_free: float
    harmonic: int
    residuals: tuple[PairResidual, ...] = ()
    degenerate_pairs: tuple[tuple[int, int], ...] = ()
    model_config = ConfigDict(frozen=True)

    def residual_for(self, k: int, l: int) -> float:
        key = (min(k, l), max(k, l))
        for item in self.residuals:
            if item.pair == key:
                return item.residual
        raise KeyError(f"no residual recorded for pair {key}")


def _residual(delta: float, tau: float) -> float:
    x = delta * tau / TWO_PI
    return abs(x - round(x))


def resonant_tau(net: SpinNetwork, i: int | str, j: int | str, n_ij: int = 1) -> PairTiming:
    """Free period that recouples (i, j) at harmonic ``n_ij``."""
    a, b = sorted((net.index(i), net.index(j)))
    if n_ij < 1:
        raise ScheduleError("harmonic n_ij must be a positive integer")
    delta = shift_difference(net, a, b)
    if delta == 0:
        logger.error("pair %s has no shift difference", net.pair_label(a, b))
        raise DegenerateShiftError((a, b), (net.labels[a], net.labels[b]))
    tau = n_ij * TWO_PI / delta

    residuals, degenerate = [], []
    for k, l in net.coupled_pairs():
        if (k, l) == (a, b):
            continue
        d = shift_difference(net, k, l)
        if d == 0:
            logger.warning("pair %s has equal shifts and cannot be decoupled", net.pair_label(k, l))
            degenerate.append((k, l))
        residuals.append(PairResidual(pair=(k, l), residual=_residual(d, tau)))
    logger.info("resonant tau_free for %s at n=%d: %.6g s", net.pair_label(a, b), n_ij, tau)
    return PairTiming(pair=(a, b), tau_free=tau, harmonic=n_ij, residuals=tuple(residuals), degenerate_pairs=tuple(degenerate))


def leakage_score(net: SpinNetwork, timing: PairTiming, tau_mix: float) -> float:
    """Largest off-target coupling-to-detuning ratio in the averaged Hamiltonian.

    The average is (tau_free H_Z^{!=i!=j} + tau_mix H_XY) / (tau_free + tau_mix)
    in the frame rotating with the target pair, where both targets sit at zero.
    """
    if tau_mix <= 0:
        raise ScheduleError("tau_mix must be positive")
    i, j = timing.pair
    total = timing.tau_free + tau_mix
    recipe = HamiltonianRecipe.zeeman(
        excluded=(i, j), scale=timing.tau_free / total, reference=float(net.shifts[i])
    ) + HamiltonianRecipe.xy(scale=tau_mix / total)
    H = assemble(recipe, net, "single_excitation").data

    score = 0.0
    for k, l in net.coupled_pairs():
        if (k, l) == (i, j):
            continue
        coupling = abs(H[k + 1, l + 1])
        detuning = abs(H[k + 1, k + 1] - H[l + 1, l + 1])
        if detuning == 0:
            logger.warning("off-target pair %s is not detuned", net.pair_label(k, l))
            return math.inf
        score = max(score, coupling / detuning)
    return float(score)


class PairSchedule(BaseModel):
    """A mix/free schedule for one pair transfer and what it is expected to do."""

    source: int
    target: int
    timing: PairTiming
    tau_mix: float
    cycles: int
    mixing_time: float
    target_mixing_time: float
    predicted_fidelity: float
    rounding_loss: float
    completion: Completion = "budget"
    schedule: Schedule
    model_config = ConfigDict(frozen=True)

    @property
    def transfer_time(self) -> float:
        return self.schedule.total_time


def _mix_free_schedule(tau_mix: float, tau_free: float, cycles: int) -> Schedule:
    return Schedule(
        segments=(
            Segment(recipe=HamiltonianRecipe.xy(), duration=tau_mix),
            Segment(recipe=HamiltonianRecipe.zeeman(), duration=tau_free),
        ),
        repetitions=cycles,
    )


def _peak_cycles(net: SpinNetwork, source: int, target: int, sched: Schedule, max_cycles: int) -> tuple[int, float]:
    """Cycle count at the first local maximum of the target probability."""
    runner = ScheduleRunner(net, "single_excitation")
    cycle = runner.cycle_unitary(sched)
    psi = QuantumState.excitation(source, runner.basis).amplitudes
    best = 0.0
    for k in range(1, max_cycles + 1):
        psi = cycle @ psi
        p = float(site_probabilities(psi, runner.basis)[target])
        if p < best:
            return k - 1, best
        best = p
    return max_cycles, best


def pair_transfer_schedule(
    net: SpinNetwork,
    i: int | str,
    j: int | str,
    tau_mix: float,
    n_ij: int = 1,
    completion: Completion = "budget",
) -> PairSchedule:
    """Alternating {XY, tau_mix} / {Zeeman, tau_free} schedule moving i to j.

    The budget mode repeats the cycle until the accumulated mixing time is
    closest to the isolated-pair transfer time 1 / (2 J_ij).
    """
    source, target = net.index(i), net.index(j)
    if tau_mix <= 0:
        raise ScheduleError("tau_mix must be positive")
    if not net.is_coupled(source, target):
        raise ScheduleError(f"sites {net.labels[source]} and {net.labels[target]} are not coupled")
    timing = resonant_tau(net, source, target, n_ij)
    coupling = abs(net.coupling(source, target))
    target_mixing = 1.0 / (2.0 * coupling)
    cycles = max(1, round(target_mixing / tau_mix))

    if completion == "peak":
        one_cycle = _mix_free_schedule(tau_mix, timing.tau_free, 1)
        cycles, predicted = _peak_cycles(net, source, target, one_cycle, 4 * cycles)
        cycles = max(1, cycles)
    elif completion == "budget":
        predicted = math.sin(math.pi * coupling * cycles * tau_mix) ** 2
    else:
        raise ScheduleError(f"unknown completion mode {completion!r}")

    logger.info(
        "pair %s: %d cycles of %.3g s mix + %.3g s free, predicted fidelity %.6f",
        net.pair_label(source, target), cycles, tau_mix, timing.tau_free, predicted,
    )
    return PairSchedule(
        source=source,
        target=target,
        timing=timing,
        tau_mix=tau_mix,
        cycles=cycles,
        mixing_time=cycles * tau_mix,
        target_mixing_time=target_mixing,
        predicted_fidelity=predicted,
        rounding_loss=1.0 - predicted,
        completion=completion,
        schedule=_mix_free_schedule(tau_mix, timing.tau_free, cycles),
    )


def choose_harmonic(net: SpinNetwork, i: int | str, j: int | str, n_max: int = HARMONIC_MAX) -> int:
    """Harmonic in 1..n_max that best dephases the pairs touching i or j."""
    a, b = sorted((net.index(i), net.index(j)))
    channels = [
        (k, l) for k, l in net.coupled_pairs()
        if (k, l) != (a, b) and ({k, l} & {a, b}) and shift_difference(net, k, l) > 0
    ]
    best_n, best_score = 1, -1.0
    for n in range(1, n_max + 1):
        timing = resonant_tau(net, a, b, n)
        score = min((timing.residual_for(k, l) for k, l in channels), default=0.5)
        if score > best_score + 1e-12:
            best_n, best_score = n, score
    logger.debug("harmonic %d chosen for %s (worst residual %.3f)", best_n, net.pair_label(a, b), best_score)
    return best_n


def _triad_cycles(net: SpinNetwork, i: int, k: int, j: int, tau_mix: float) -> int:
    """Cycles whose mixing time is closest to the end-to-end time 1 / Omega of the chain."""
    omega = math.hypot(abs(net.coupling(i, k)), abs(net.coupling(k, j)))
    return max(1, round((1.0 / omega) / tau_mix))


def _triad_schedule(net: SpinNetwork, i: int, k: int, j: int, tau_mix: float, timing: PairTiming) -> tuple[Schedule, int]:
    cycles = _triad_cycles(net, i, k, j, tau_mix)
    return _mix_free_schedule(tau_mix, timing.tau_free, cycles), cycles


def _isolated_triad_fidelity(net: SpinNetwork, sites: tuple[int, int, int], sched: Schedule) -> float:
    """P(last site) after ``sched`` on the three sites alone, starting from the first."""
    couplings = {
        (a, b): net.coupling(sites[a], sites[b])
        for a, b in ((0, 1), (1, 2), (0, 2))
        if net.is_coupled(sites[a], sites[b])
    }
    sub = SpinNetwork.build([net.labels[s] for s in sites], [net.shifts_hz[s] for s in sites], couplings)
    runner = ScheduleRunner(sub, "single_excitation")
    amplitude = runner.total_unitary(sched)[runner.basis.site_state(2), runner.basis.site_state(0)]
    return min(1.0, float(abs(amplitude) ** 2))


class TriadSchedule(BaseModel):
    """Three-spin hop i -> k -> j driven by one free period.

    ``drift`` is the phase, in turns, that the (k, j) pair gains over the
    whole hop from its per-cycle residual. ``predicted_fidelity`` is the
    simulated transfer on the three sites alone, so it includes that drift.
    """

    sites: tuple[int, int, int]
    timing: PairTiming
    tau_mix: float
    cycles: int
    drift: float
    predicted_fidelity: float
    schedule: Schedule
    model_config = ConfigDict(frozen=True)

    @property
    def source(self) -> int:
        return self.sites[0]

    @property
    def target(self) -> int:
        return self.sites[2]

    @property
    def transfer_time(self) -> float:
        return self.schedule.total_time


def triad_transfer_schedule(
    net: SpinNetwork,
    i: int | str,
    k: int | str,
    j: int | str,
    tau_mix: float,
    n_max: int = N_MAX,
    n_ij: int | None = None,
) -> TriadSchedule:
    """Three-spin hop i -> k -> j with one free period recoupling both pairs.

    The free period is a harmonic of the (i, k) pair. The first harmonic
    whose drift on (k, j) over the hop stays within ``TRIAD_TOLERANCE`` is
    used. An explicit ``n_ij`` skips the search and is used as given.
    """
    i, k, j = net.index(i), net.index(k), net.index(j)
    if tau_mix <= 0:
        raise ScheduleError("tau_mix must be positive")
    for a, b in ((i, k), (k, j)):
        if not net.is_coupled(a, b):
            raise ScheduleError(f"sites {net.labels[a]} and {net.labels[b]} are not coupled")
    if shift_difference(net, k, j) == 0:
        raise DegenerateShiftError((k, j), (net.labels[k], net.labels[j]))
    names = "-".join(net.labels[s] for s in (i, k, j))
    cycles = _triad_cycles(net, i, k, j, tau_mix)

    harmonics = range(1, n_max + 1) if n_ij is None else (n_ij,)
    for n in harmonics:
        timing = resonant_tau(net, i, k, n)
        drift = cycles * timing.residual_for(k, j)
        if n_ij is None and drift > TRIAD_TOLERANCE:
            continue
        if drift > TRIAD_TOLERANCE:
            logger.warning("triad %s at n=%d drifts %.3f turns over the hop", names, n, drift)
        sched, _ = _triad_schedule(net, i, k, j, tau_mix, timing)
        predicted = _isolated_triad_fidelity(net, (i, k, j), sched)
        logger.info("triad %s at n=%d: %d cycles, drift %.4f turns, predicted %.6f", names, n, cycles, drift, predicted)
        return TriadSchedule(
            sites=(i, k, j), timing=timing, tau_mix=tau_mix, cycles=cycles, drift=drift,
            predicted_fidelity=predicted, schedule=sched,
        )
    logger.warning("no common multiple within n <= %d for triad %s", n_max, names)
    raise ScheduleError(f"no free period within n <= {n_max} keeps the triad {names} in phase")


def ising_pair_transfer_schedule(
    net: SpinNetwork,
    i: int | str,
    j: int | str,
    tau_mix: float,
    n_ij: int = 1,
    loops: int = 4,
) -> PairSchedule:
    """Pair transfer driven by toggled Ising couplings interleaved with Zeeman periods.

    Each mixing block is ``loops`` cycles of the two-frame ZZ sequence. The
    compiled coupling is weaker by ``xy_scale``, so more cycles are needed.
    Runs in the full basis only.
    """
    source, target = net.index(i), net.index(j)
    if tau_mix <= 0:
        raise ScheduleError("tau_mix must be positive")
    if not net.is_coupled(source, target):
        raise ScheduleError(f"sites {net.labels[source]} and {net.labels[target]} are not coupled")
    timing = resonant_tau(net, source, target, n_ij)
    seq = compile_xy_from_ising(net, loops=loops)
    coupling = abs(net.coupling(source, target))
    target_mixing = 1.0 / (2.0 * coupling * seq.xy_scale)
    cycles = max(1, round(target_mixing / tau_mix))
    block = seq.loop_schedule(tau_mix).segments * loops
    segments = block + (Segment(recipe=HamiltonianRecipe.zeeman(), duration=timing.tau_free),)
    predicted = math.sin(math.pi * coupling * seq.xy_scale * cycles * tau_mix) ** 2
    return PairSchedule(
        source=source,
        target=target,
        timing=timing,
        tau_mix=tau_mix,
        cycles=cycles,
        mixing_time=cycles * tau_mix,
        target_mixing_time=target_mixing,
        predicted_fidelity=predicted,
        rounding_loss=1.0 - predicted,
        schedule=Schedule(segments=segments, repetitions=cycles),
    )


def compile_pair_schedule(
    net: SpinNetwork,
    i: int | str,
    j: int | str,
    tau_mix: float,
    n_ij: int = 1,
    completion: Completion = "budget",
    mixing: Mixing = "xy",
    loops: int = 4,
) -> PairSchedule:
    """Pair schedule with flip-flop mixing, or with toggled Ising mixing."""
    if mixing == "xy":
        return pair_transfer_schedule(net, i, j, tau_mix, n_ij, completion)
    if mixing != "ising":
        raise ScheduleError(f"unknown mixing {mixing!r}")
    if completion != "budget":
        raise ScheduleError("ising mixing supports only the budget completion mode")
    return ising_pair_transfer_schedule(net, i, j, tau_mix, n_ij, loops)


class RelayPlan(BaseModel):
    pathway: tuple[int, ...]
    labels: tuple[str, ...]
    hops: tuple[PairSchedule | TriadSchedule, ...]
    hop_mode: HopMode = "pair"
    model_config = ConfigDict(frozen=True)

    @property
    def predicted_fidelity(self) -> float:
        return float(np.prod([hop.predicted_fidelity for hop in self.hops]))

    @property
    def total_time(self) -> float:
        return float(sum(hop.transfer_time for hop in self.hops))


def relay_plan(
    net: SpinNetwork,
    pathway: Sequence[int | str],
    tau_mix: float,
    harmonics: Sequence[int] | None = None,
    n_max: int | None = None,
    completion: Completion = "budget",
    hop_mode: HopMode = "pair",
) -> RelayPlan:
    """One schedule per hop along ``pathway``.

    In ``pair`` mode every consecutive pair is a hop and, without explicit
    ``harmonics``, each hop uses :func:`choose_harmonic` up to ``n_max``
    (default ``HARMONIC_MAX``). In ``triad`` mode the pathway is walked three
    sites at a time, sharing the middle-to-end site between triads, so it
    must have an odd number of sites; each triad searches up to ``n_max``
    (default ``N_MAX``).
    """
    path = [net.index(s) for s in pathway]
    if len(path) < 2:
        raise ScheduleError("a relay pathway needs at least two sites")
    if hop_mode == "pair":
        legs = [tuple(path[h:h + 2]) for h in range(len(path) - 1)]
    elif hop_mode == "triad":
        if len(path) < 3 or len(path) % 2 == 0:
            raise ScheduleError("a triad relay needs an odd number of sites, at least three")
        legs = [tuple(path[h:h + 3]) for h in range(0, len(path) - 1, 2)]
    else:
        raise ScheduleError(f"unknown hop mode {hop_mode!r}")
    if harmonics is not None and len(harmonics) != len(legs):
        raise ScheduleError(f"expected {len(legs)} harmonics, got {len(harmonics)}")
    for a, b in zip(path, path[1:]):
        if not net.is_coupled(a, b):
            raise ScheduleError(f"broken pathway: {net.labels[a]} and {net.labels[b]} are not coupled")
        if shift_difference(net, a, b) == 0:
            raise DegenerateShiftError((a, b), (net.labels[a], net.labels[b]))

    hops = []
    for h, leg in enumerate(legs):
        n = None if harmonics is None else harmonics[h]
        if hop_mode == "triad":
            hops.append(triad_transfer_schedule(net, *leg, tau_mix, n_max or N_MAX, n))
        else:
            a, b = leg
            n = n if n is not None else choose_harmonic(net, a, b, n_max or HARMONIC_MAX)
            hops.append(pair_transfer_schedule(net, a, b, tau_mix, n, completion))
    plan = RelayPlan(pathway=tuple(path), labels=tuple(net.labels[s] for s in path), hops=tuple(hops), hop_mode=hop_mode)
    logger.info("relay %s: %d %s hops, predicted %.4f", "->".join(plan.labels), len(hops), hop_mode, plan.predicted_fidelity)
    return plan


class RelayRun(BaseModel):
    """Outcome of :func:`execute_relay`.

    ``hop_efficiencies`` are clean-start transfer probabilities, each in
    [0, 1], and ``fidelity`` is their product. ``end_to_end`` is the
    probability actually found on the last site after the chained run.
    """

    plan: RelayPlan
    hop_efficiencies: tuple[float, ...]
    fidelity: float
    end_to_end: float
    model_config = ConfigDict(frozen=True)


def execute_relay(
    plan: RelayPlan,
    net: SpinNetwork,
    sample: str = "per_repetition",
) -> tuple[RelayRun, TransferTrace]:
    """Run the hops back to back on the whole network and stitch the traces.

    Each hop is also scored on its own: P(target) after the hop's schedule
    acting on the whole network with the excitation starting on the hop's
    source alone.
    """
    runner = ScheduleRunner(net, "single_excitation")
    basis = runner.basis
    state = QuantumState.excitation(plan.pathway[0], basis)
    trace = None
    efficiencies = []
    for hop in plan.hops:
        state, hop_trace = runner.run(state, hop.schedule, sample)
        U = runner.total_unitary(hop.schedule)
        clean = abs(U[basis.site_state(hop.target), basis.site_state(hop.source)]) ** 2
        efficiencies.append(min(1.0, float(clean)))
        trace = hop_trace if trace is None else trace.concat(hop_trace)
    end_to_end = float(site_probabilities(state)[plan.pathway[-1]])
    fidelity = float(np.prod(efficiencies))
    trace.metadata["schedule"] = "relay " + "->".join(plan.labels)
    logger.info("relay %s: hop product %.6f, reached %.6f", "->".join(plan.labels), fidelity, end_to_end)
    return RelayRun(plan=plan, hop_efficiencies=tuple(efficiencies), fidelity=fidelity, end_to_end=end_to_end), trace


class GridPoint(BaseModel):
    n_ij: int
    tau_mix: float
    fidelity: float
    wall_time: float
    model_config = ConfigDict(frozen=True)


class HopOptimum(BaseModel):
    best: GridPoint
    flat: bool
    grid: tuple[GridPoint, ...]
    model_config = ConfigDict(frozen=True)


def _score_point(net: SpinNetwork, i: int, j: int, n: int, tau_mix: float, then: int | None) -> GridPoint:
    if then is None:
        plan = pair_transfer_schedule(net, i, j, tau_mix, n)
        sched, goal = plan.schedule, j
    else:
        sched, _ = _triad_schedule(net, i, j, then, tau_mix, resonant_tau(net, i, j, n))
        goal = then
    runner = ScheduleRunner(net, "single_excitation")
    state, _ = runner.run(QuantumState.excitation(i, runner.basis), sched)
    fidelity = float(site_probabilities(state)[goal])
    return GridPoint(n_ij=n, tau_mix=tau_mix, fidelity=fidelity, wall_time=sched.total_time)


def optimize_hop(
    net: SpinNetwork,
    i: int | str,
    j: int | str,
    n_range: Sequence[int],
    tau_mix_range: Sequence[float],
    then: int | str | None = None,
    workers: int = WORKERS,
) -> HopOptimum:
    """Grid search over (n_ij, tau_mix) scored by exact simulation.

    The best fidelity wins; fidelities within ``TIE_TOLERANCE`` tie and the
    shorter wall time n * (tau_mix + tau_free) wins. The result does not
    depend on the order in which workers finish.
    """
    a, b = net.index(i), net.index(j)
    c = None if then is None else net.index(then)
    grid = list(product(sorted(set(n_range)), sorted(set(tau_mix_range))))
    if not grid:
        raise ScheduleError("optimize_hop needs non-empty search ranges")
    pool = ThreadPool(nodes=max(1, workers))
    try:
        points = pool.map(lambda p: _score_point(net, a, b, p[0], p[1], c), grid)
    finally:
        pool.close()
        pool.join()
        pool.clear()

    scores = [p.fidelity for p in points]
    if max(scores) - min(scores) <= TIE_TOLERANCE:
        logger.warning("flat fidelity landscape over %d grid points; returning the first", len(points))
        return HopOptimum(best=points[0], flat=True, grid=tuple(points))
    top = max(scores)
    contenders = [p for p in points if p.fidelity >= top - TIE_TOLERANCE]
    best = min(contenders, key=lambda p: (p.wall_time, p.n_ij, p.tau_mix))
    logger.info("best hop %s: n=%d tau_mix=%.3g fidelity=%.6f", net.pair_label(a, b), best.n_ij, best.tau_mix, best.fidelity)
    return HopOptimum(best=best, flat=False, grid=tuple(points))
