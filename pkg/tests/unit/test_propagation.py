"""Unit tests for exact evolution and schedule execution."""
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.core.errors import BasisMismatchError, NetworkValidationError, ScheduleError
from app.core.hamiltonian import Basis, HamiltonianRecipe, OperatorMatrix, assemble, total_z
from app.core.network import SpinNetwork
from app.core.propagation import (
    PropagatorCache,
    Pulse,
    QuantumState,
    Schedule,
    ScheduleRunner,
    Segment,
    TransferTrace,
    average_qubit_fidelity,
    evolve,
    excitation_number,
    global_pulse,
    propagator,
    reverse_schedule,
    rotation_matrix,
    run_schedule,
    site_probabilities,
    transfer_amplitude,
)

XY = HamiltonianRecipe.xy()
ZEEMAN = HamiltonianRecipe.zeeman()


def _mix_free(tau_mix, tau_free, n):
    return Schedule(segments=(Segment(recipe=XY, duration=tau_mix), Segment(recipe=ZEEMAN, duration=tau_free)), repetitions=n)


def test_propagator_at_zero_is_identity(leucine):
    U = propagator(assemble(XY + ZEEMAN, leucine), 0.0)
    assert_allclose(U.data, np.eye(U.dim), atol=1e-12)


def test_propagator_unitary_and_group_property(leucine):
    H = assemble(XY + ZEEMAN, leucine)
    U = propagator(H, 2.3e-3).data
    assert_allclose(U @ U.conj().T, np.eye(H.dim), atol=1e-10)
    assert_allclose(U @ propagator(H, -2.3e-3).data, np.eye(H.dim), atol=1e-10)


def test_propagator_rejects_non_hermitian():
    op = OperatorMatrix(np.array([[0, 1], [0, 0]], dtype=complex), Basis.full(1))
    with pytest.raises(ValueError):
        propagator(op, 1.0)


def test_two_spin_rabi_formula(two_spin):
    H = assemble(XY, two_spin)
    psi0 = QuantumState.excitation(0, H.basis)
    for t in (1e-3, 4e-3, 7.5e-3, 1 / (2 * 50.0)):
        p = site_probabilities(evolve(psi0, H, t))[1]
        assert p == pytest.approx(math.sin(math.pi * 50.0 * t) ** 2, abs=1e-12)


def test_three_chain_end_to_end_transfer(uniform_chain):
    H = assemble(XY, uniform_chain)
    psi0 = QuantumState.excitation(0, H.basis)
    t = 1 / (math.sqrt(2) * 50.0)
    assert site_probabilities(evolve(psi0, H, t))[2] == pytest.approx(1.0, abs=1e-9)
    # brute-force scan: nothing earlier reaches the end of the chain
    times = np.linspace(0, t, 400, endpoint=False)[1:]
    earlier = [site_probabilities(evolve(psi0, H, s))[2] for s in times]
    assert max(earlier) < 1.0 - 1e-6
    amp = evolve(psi0, H, 0.37 * t).amplitudes[3]
    expected = (math.cos(math.sqrt(2) * math.pi * 50.0 * 0.37 * t) - 1) / 2
    assert abs(amp) == pytest.approx(abs(expected), abs=1e-12)


def test_eigenstate_is_stationary(three_chain):
    H = assemble(XY + ZEEMAN, three_chain)
    _, vectors = np.linalg.eigh(H.data)
    psi = QuantumState(vectors[:, 2].astype(complex), H.basis)
    out = evolve(psi, H, 5e-3)
    assert psi.fidelity(out) == pytest.approx(1.0, abs=1e-10)


def test_zeeman_only_advances_phase(three_chain):
    H = assemble(ZEEMAN, three_chain)
    psi = QuantumState.excitation(1, H.basis)
    t = 1.3e-4
    out = evolve(psi, H, t)
    assert_allclose(site_probabilities(out), [0, 1, 0], atol=1e-12)
    expected = np.exp(-1j * H.data[2, 2] * t)
    assert out.amplitudes[2] == pytest.approx(expected)
    # relative to the vacuum the phase advance is the site's own shift
    vac = np.exp(-1j * H.data[0, 0] * t)
    assert np.angle(expected / vac) == pytest.approx(np.angle(np.exp(-1j * three_chain.shifts[1] * t)))


def test_evolve_basis_mismatch(two_spin):
    with pytest.raises(BasisMismatchError):
        evolve(QuantumState.excitation(0, Basis.full(2)), assemble(XY, two_spin), 1e-3)


def test_state_norm_checked():
    with pytest.raises(ValueError):
        QuantumState(np.array([1.0, 1.0, 0.0], dtype=complex), Basis.single_excitation(2))


def test_superposition_state():
    psi = QuantumState.superposition(1, 1.0, 1.0, Basis.single_excitation(3))
    assert psi.amplitudes[0] == pytest.approx(1 / math.sqrt(2))
    assert psi.amplitudes[2] == pytest.approx(1 / math.sqrt(2))
    assert excitation_number(psi) == pytest.approx(0.5)


def test_site_probabilities_agree_across_bases():
    full = QuantumState.excitation(2, Basis.full(4))
    sub = QuantumState.excitation(2, Basis.single_excitation(4))
    assert_allclose(site_probabilities(full), site_probabilities(sub))


def test_repeated_segment_equals_single_evolution(three_chain):
    runner = ScheduleRunner(three_chain)
    psi0 = QuantumState.excitation(0, runner.basis)
    repeated, _ = runner.run(psi0, Schedule(segments=(Segment(recipe=XY, duration=1e-3),), repetitions=7))
    single = evolve(psi0, assemble(XY, three_chain), 7e-3)
    assert_allclose(repeated.amplitudes, single.amplitudes, atol=1e-10)


def test_resonant_two_spin_matches_accumulated_mixing(two_spin):
    tau_mix, tau_free = 0.3e-3, 1 / 1000.0
    trace = run_schedule(QuantumState.excitation(0, Basis.single_excitation(2)), _mix_free(tau_mix, tau_free, 33), two_spin)
    k = np.arange(1, 34)
    assert_allclose(trace.column(1), np.sin(math.pi * 50.0 * k * tau_mix) ** 2, atol=1e-9)
    assert_allclose(trace.times, k * (tau_mix + tau_free), rtol=1e-12)


def test_per_segment_sampling_skips_zero_duration(two_spin):
    sched = Schedule(
        segments=(
            Segment(recipe=XY, duration=1e-3),
            Segment(recipe=ZEEMAN, duration=0.0, pre_pulse=Pulse(axis="z", angle=math.pi)),
            Segment(recipe=ZEEMAN, duration=2e-3),
        ),
        repetitions=3,
    )
    trace = run_schedule(QuantumState.excitation(0, Basis.single_excitation(2)), sched, two_spin, "per_segment")
    assert len(trace) == 6
    assert trace.times[-1] == pytest.approx(9e-3)
    assert trace.metadata["sampling"] == "per_segment"


def test_unknown_sampling_rejected(two_spin):
    with pytest.raises(ScheduleError):
        run_schedule(QuantumState.excitation(0, Basis.single_excitation(2)), _mix_free(1e-4, 1e-3, 1), two_spin, "sometimes")


def test_invalid_recipe_rejected_before_running(three_chain):
    sched = Schedule(segments=(Segment(recipe=HamiltonianRecipe.xy(pairs=[(0, 2)]), duration=1e-3),))
    with pytest.raises(NetworkValidationError):
        run_schedule(QuantumState.excitation(0, Basis.single_excitation(3)), sched, three_chain)


def test_schedule_validation():
    with pytest.raises(ValueError):
        Schedule(segments=(Segment(recipe=XY, duration=1e-3),), repetitions=0)
    with pytest.raises(ValueError):
        Segment(recipe=XY, duration=-1.0)
    with pytest.raises(ValueError):
        Schedule(segments=())


def test_norm_conserved_over_ten_thousand_segments(leucine):
    runner = ScheduleRunner(leucine)
    state, trace = runner.run(QuantumState.excitation(0, runner.basis), _mix_free(0.3e-3, 1 / 1408.0, 5000), "per_segment")
    assert len(trace) == 10_000
    assert abs(state.norm() - 1.0) < 1e-9
    assert np.max(np.abs(trace.total_excitation() - 1.0)) < 1e-9


def test_full_and_subspace_traces_agree(three_chain):
    sched = _mix_free(0.2e-3, 1 / 1000.0, 40)
    traces = []
    for basis in ("full", "single_excitation"):
        runner = ScheduleRunner(three_chain, basis)
        _, trace = runner.run(QuantumState.excitation(0, runner.basis), sched)
        traces.append(trace)
    assert_allclose(traces[0].site_probabilities, traces[1].site_probabilities, atol=1e-9)
    assert_allclose(traces[0].times, traces[1].times)


def test_total_excitation_conserved_in_full_basis(three_chain):
    runner = ScheduleRunner(three_chain, "full")
    psi = QuantumState.superposition(0, 0.6, 0.8, runner.basis)
    state, trace = runner.run(psi, _mix_free(0.2e-3, 1 / 1000.0, 25))
    Z = total_z(runner.basis).data
    assert np.vdot(state.amplitudes, Z @ state.amplitudes).real == pytest.approx(np.vdot(psi.amplitudes, Z @ psi.amplitudes).real, abs=1e-9)
    assert np.ptp(trace.total_excitation()) < 1e-9


def test_reverse_schedule_restores_state(leucine):
    runner = ScheduleRunner(leucine)
    psi0 = QuantumState.superposition(1, 0.3, 0.9, runner.basis)
    sched = _mix_free(0.3e-3, 1 / 1408.0, 20)
    forward, _ = runner.run(psi0, sched)
    back, _ = runner.run(forward, reverse_schedule(sched))
    assert back.fidelity(psi0) == pytest.approx(1.0, abs=1e-9)
    assert reverse_schedule(reverse_schedule(sched)) == sched


def test_reverse_with_pulses_restores_state(two_spin):
    runner = ScheduleRunner(two_spin, "full")
    psi0 = QuantumState.excitation(0, runner.basis)
    sched = Schedule(
        segments=(
            Segment(recipe=HamiltonianRecipe.zz(), duration=1e-3, pre_pulse=Pulse(axis="y", angle=math.pi / 2)),
            Segment(recipe=XY + ZEEMAN, duration=2e-3, pre_pulse=Pulse(axis="x", angle=0.7)),
        ),
        repetitions=3,
    )
    forward, _ = runner.run(psi0, sched)
    back, _ = runner.run(forward, reverse_schedule(sched))
    assert back.fidelity(psi0) == pytest.approx(1.0, abs=1e-9)


def test_full_rotation_gives_sign_per_spin():
    basis = Basis.full(3)
    psi = QuantumState.excitation(1, basis)
    for axis in ("x", "y", "z"):
        out = global_pulse(psi, axis, 2 * math.pi)
        assert_allclose(out.amplitudes, -psi.amplitudes, atol=1e-12)


def test_pi_pulse_about_x_flips_magnetization():
    basis = Basis.full(2)
    Z = total_z(basis).data
    psi = QuantumState.excitation(0, basis)
    before = np.vdot(psi.amplitudes, Z @ psi.amplitudes).real
    out = global_pulse(psi, "x", math.pi)
    after = np.vdot(out.amplitudes, Z @ out.amplitudes).real
    assert before == pytest.approx(0.0)
    up = QuantumState(np.array([0, 0, 0, 1], dtype=complex), basis)
    flipped = global_pulse(up, "x", math.pi)
    assert np.vdot(flipped.amplitudes, Z @ flipped.amplitudes).real == pytest.approx(-1.0)
    assert after == pytest.approx(-before, abs=1e-12)


def test_half_pi_about_y_tips_up_to_x():
    basis = Basis.full(2)
    up = QuantumState(np.array([0, 0, 0, 1], dtype=complex), basis)
    out = global_pulse(up, "y", math.pi / 2)
    assert_allclose(out.amplitudes, [0.5, 0.5, 0.5, 0.5], atol=1e-12)


def test_transverse_pulse_rejected_in_subspace():
    psi = QuantumState.excitation(0, Basis.single_excitation(3))
    with pytest.raises(BasisMismatchError):
        global_pulse(psi, "x", math.pi / 2)
    # z rotations keep the sector and are allowed
    out = global_pulse(psi, "z", 0.4)
    assert_allclose(site_probabilities(out), [1, 0, 0])


def test_z_rotation_same_in_both_bases():
    full = rotation_matrix("z", 0.9, Basis.full(3))
    sub = rotation_matrix("z", 0.9, Basis.single_excitation(3))
    idx = [0, 4, 2, 1]
    assert_allclose(full[np.ix_(idx, idx)], sub)


def test_cache_reuses_propagators(leucine):
    runner = ScheduleRunner(leucine)
    runner.run(QuantumState.excitation(0, runner.basis), _mix_free(0.3e-3, 1 / 1408.0, 10), "per_segment")
    assert runner.cache.misses == 2
    assert runner.cache.hits == 18


def test_cache_is_bounded(two_spin):
    cache = PropagatorCache(two_spin, Basis.single_excitation(2), maxsize=3)
    for k in range(5):
        cache.unitary(XY, 1e-3 * (k + 1))
    assert len(cache._unitaries) == 3
    cache.unitary(XY, 1e-3 * 5)
    assert cache.hits == 1


def test_transfer_amplitude_and_qubit_fidelity(two_spin):
    sched = Schedule(segments=(Segment(recipe=XY, duration=1 / (2 * 50.0)),))
    f = transfer_amplitude(sched, two_spin, 0, 1)
    assert abs(f) == pytest.approx(1.0, abs=1e-12)
    assert average_qubit_fidelity(f) == pytest.approx(1.0)
    assert average_qubit_fidelity(0.0) == pytest.approx(0.5)


def test_trace_invariants_checked():
    with pytest.raises(ValueError):
        TransferTrace(np.array([2.0, 1.0]), np.zeros((2, 2)), ("A", "B"))
    with pytest.raises(ValueError):
        TransferTrace(np.array([1.0]), np.array([[1.5, 0.0]]), ("A", "B"))


def test_trace_concat_offsets_times():
    a = TransferTrace(np.array([1.0, 2.0]), np.array([[1, 0], [0.5, 0.5]]), ("A", "B"), {"duration": 2.0})
    b = TransferTrace(np.array([0.5, 1.0]), np.array([[0.2, 0.8], [0, 1]]), ("A", "B"), {"duration": 1.0})
    joined = a.concat(b)
    assert joined.times.tolist() == [1.0, 2.0, 2.5, 3.0]
    assert joined.metadata["duration"] == 3.0
    assert joined.peak(1) == (1.0, 3.0)
    assert joined.final(0) == 0.0


def test_empty_trace():
    trace = TransferTrace.empty(("A", "B"))
    assert len(trace) == 0
    assert trace.peak(0) == (0.0, 0.0)


def _random_network(rng, n_sites):
    shifts = rng.uniform(-3000.0, 3000.0, n_sites)
    couplings = {(a, a + 1): float(rng.uniform(5.0, 80.0)) for a in range(n_sites - 1)}
    for a in range(n_sites):
        for b in range(a + 2, n_sites):
            if rng.random() < 0.25:
                couplings[(a, b)] = float(rng.uniform(5.0, 80.0))
    return SpinNetwork.build([f"S{k}" for k in range(n_sites)], shifts.tolist(), couplings)


def _random_z_preserving_schedule(rng, n_sites, max_segments=1000):
    recipes = [XY, ZEEMAN, XY + ZEEMAN, HamiltonianRecipe.zz(), HamiltonianRecipe.zeeman(excluded=(0, n_sites - 1))]
    segments = []
    for _ in range(int(rng.integers(1, 6))):
        pulse = Pulse(axis="z", angle=float(rng.uniform(0, 2 * math.pi))) if rng.random() < 0.3 else None
        recipe = recipes[int(rng.integers(len(recipes)))]
        segments.append(Segment(recipe=recipe, duration=float(rng.uniform(1e-5, 1e-3)), pre_pulse=pulse))
    repetitions = int(rng.integers(1, max_segments // len(segments) + 1))
    return Schedule(segments=tuple(segments), repetitions=repetitions)


@pytest.mark.parametrize("seed", range(100))
def test_random_schedules_conserve_norm_and_excitation(seed):
    rng = np.random.default_rng(seed)
    n_sites = 2 + seed % 7
    net = _random_network(rng, n_sites)
    sched = _random_z_preserving_schedule(rng, n_sites)
    assert len(sched.segments) * sched.repetitions <= 1000
    runner = ScheduleRunner(net, "full")
    amps = rng.normal(size=runner.basis.dim) + 1j * rng.normal(size=runner.basis.dim)
    psi = QuantumState(amps / np.linalg.norm(amps), runner.basis)
    state, trace = runner.run(psi, sched)
    assert abs(state.norm() - 1.0) < 1e-9
    assert np.max(np.abs(trace.total_excitation() - excitation_number(psi))) < 1e-9


@pytest.mark.parametrize("seed", range(20))
def test_random_schedules_agree_across_bases(seed):
    rng = np.random.default_rng(1000 + seed)
    n_sites = 2 + seed % 7
    net = _random_network(rng, n_sites)
    sched = _random_z_preserving_schedule(rng, n_sites, max_segments=200)
    source = int(rng.integers(n_sites))
    traces = []
    for basis in ("full", "single_excitation"):
        runner = ScheduleRunner(net, basis)
        _, trace = runner.run(QuantumState.excitation(source, runner.basis), sched)
        traces.append(trace)
    assert_allclose(traces[0].site_probabilities, traces[1].site_probabilities, atol=1e-9)
    assert_allclose(traces[0].times, traces[1].times)
