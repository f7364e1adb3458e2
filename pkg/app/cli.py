"""Command-line front end.

Every subcommand is first turned into a :class:`~app.api.schemas.RunSpec`,
so flags and recipe files go through the same validation before anything
is simulated. Exit codes: 0 success, 1 invalid input, 2 failure while
running.
"""
from __future__ import annotations

import argparse
import logging
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Sequence

from pydantic import ValidationError

from .api.schemas import (
    AverageParams,
    BaselineParams,
    OptimizeParams,
    RelayParams,
    RunSpec,
    ScheduleParams,
    SimulateParams,
    TimingParams,
)
from .config.logging_config import configure_logging
from .core.errors import ConfigError, PSTError
from .core.hamiltonian import HamiltonianRecipe, assemble
from .core.network import SpinNetwork, load_network_file
from .core.propagation import QuantumState, Schedule, ScheduleRunner, Segment, TransferTrace
from .core.scheduler import (
    compile_pair_schedule,
    execute_relay,
    leakage_score,
    optimize_hop,
    pair_transfer_schedule,
    relay_plan,
    resonant_tau,
)
from .core.toggling import average_hamiltonian_zero_order, compile_xy_from_ising, truncation_error
from .core.trace_io import dump_operator, trace_to_csv

logger = logging.getLogger("pst.cli")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FAILED = 2


class UsageError(PSTError):
    pass


class PSTArgumentParser(argparse.ArgumentParser):
    """Raises instead of exiting with status 2 on bad usage."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--network", required=True, help="Network TOML file.")
    parser.add_argument("--out", default=None, help="Where to write the trace CSV or schedule dump.")
    parser.add_argument("--sample", choices=["per_repetition", "per_segment"], default="per_repetition")
    parser.add_argument("--dump-operator", default=None, help="Write the command's Hamiltonian as plain text.")
    parser.add_argument("--verbose", action="store_true", help="Log at DEBUG level.")


def build_parser() -> argparse.ArgumentParser:
    parser = PSTArgumentParser(prog="pst", description="Selective spin-state transfer simulator and schedule compiler.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=PSTArgumentParser)

    p = sub.add_parser("simulate", help="Run a pair transfer and write its trace.")
    _common(p)
    p.add_argument("--pair", required=True, help="Source and target, e.g. Ca,Cb.")
    p.add_argument("--n", type=int, default=1, help="Harmonic of the resonant free period.")
    p.add_argument("--tau-mix", type=float, default=None)
    p.add_argument("--cycles", type=int, default=None, help="Override the number of mix/free cycles.")
    p.add_argument("--completion", choices=["budget", "peak"], default="budget")
    p.add_argument("--basis", choices=["single_excitation", "full"], default=None)
    p.add_argument("--mixing", choices=["xy", "ising"], default="xy", help="Drive mixing with flip-flop or toggled Ising couplings.")
    p.add_argument("--loops", type=int, default=None, help="Ising toggling loops per mixing period.")

    p = sub.add_parser("baseline", help="Evolve under uninterrupted flip-flop coupling.")
    _common(p)
    p.add_argument("--source", required=True)
    p.add_argument("--duration", type=float, required=True, help="Total time in seconds.")
    p.add_argument("--dt", type=float, default=1e-4, help="Sampling interval in seconds.")

    p = sub.add_parser("schedule", help="Compile a pair schedule and print it.")
    _common(p)
    p.add_argument("--pair", required=True)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--tau-mix", type=float, default=None)
    p.add_argument("--completion", choices=["budget", "peak"], default="budget")

    p = sub.add_parser("relay", help="Plan and run a hop-by-hop transfer along a path.")
    _common(p)
    p.add_argument("--path", required=True, help="Comma-separated sites, e.g. CO,Ca,Cb.")
    p.add_argument("--tau-mix", type=float, default=None)
    p.add_argument("--harmonics", default=None, help="Comma-separated harmonic per hop.")
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--hop-mode", choices=["pair", "triad"], default="pair", help="Hop over pairs or over three-site triads.")

    p = sub.add_parser("optimize", help="Grid search over harmonic and mixing period.")
    _common(p)
    p.add_argument("--pair", required=True)
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--tau-mix", default=None, help="One or more comma-separated mixing periods.")
    p.add_argument("--then", default=None, help="Score the onward hop to this site instead.")

    p = sub.add_parser("average-hamiltonian", help="Compile Ising couplings into flip-flop form.")
    _common(p)
    p.add_argument("--loops", type=int, default=1)
    p.add_argument("--cycle-time", type=float, default=None, help="Also report the truncation error at this cycle time.")

    p = sub.add_parser("timing", help="Report the resonant free period and residuals for a pair.")
    _common(p)
    p.add_argument("--pair", required=True)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--tau-mix", type=float, default=None)

    p = sub.add_parser("recipe", help="Run a RunSpec TOML file.")
    p.add_argument("file")
    p.add_argument("--out", default=None, help="Override the recipe's output path.")
    p.add_argument("--verbose", action="store_true")
    return parser


_PARAM_FLAGS = {
    "simulate": ("pair", "n", "tau_mix", "cycles", "completion", "basis", "mixing", "loops"),
    "baseline": ("source", "duration", "dt"),
    "schedule": ("pair", "n", "tau_mix", "completion"),
    "relay": ("path", "tau_mix", "harmonics", "n_max", "hop_mode"),
    "optimize": ("pair", "n_max", "tau_mix", "then"),
    "average-hamiltonian": ("loops", "cycle_time"),
    "timing": ("pair", "n", "tau_mix"),
}


def spec_from_args(args: argparse.Namespace) -> RunSpec:
    params = {}
    for name in _PARAM_FLAGS[args.command]:
        value = getattr(args, name)
        if value is not None:
            params[name] = value
    return RunSpec(
        command=args.command,
        network=Path(args.network),
        output=Path(args.out) if args.out else None,
        sample=args.sample,
        dump_operator=Path(args.dump_operator) if args.dump_operator else None,
        params=params,
    )


def load_run_spec(path: str | Path, out: str | None = None) -> RunSpec:
    """Read a recipe file; its network path is taken relative to the recipe."""
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read recipe {str(path)!r}: {exc.strerror or exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(
            f"cannot parse recipe {str(path)!r}: {exc}", getattr(exc, "lineno", None), getattr(exc, "colno", None)
        ) from exc
    if "network" in doc:
        doc["network"] = str(path.parent / doc["network"])
    if out is not None:
        doc["output"] = out
    return RunSpec.model_validate(doc)


def _write_output(spec: RunSpec, content: str) -> None:
    if spec.output is not None:
        spec.output.write_text(content, encoding="utf-8")
        logger.info("wrote %s", spec.output)


def _dump(spec: RunSpec, op) -> None:
    if spec.dump_operator is not None:
        dump_operator(op, spec.dump_operator)


def _pair(net: SpinNetwork, pair: tuple[str, str]) -> tuple[int, int]:
    return net.index(pair[0]), net.index(pair[1])


def cmd_simulate(spec: RunSpec, net: SpinNetwork, params: SimulateParams) -> TransferTrace:
    i, j = _pair(net, params.pair)
    plan = compile_pair_schedule(net, i, j, params.tau_mix, params.n, params.completion, params.mixing, params.loops)
    sched = plan.schedule
    if params.cycles is not None:
        sched = sched.model_copy(update={"repetitions": params.cycles})
    runner = ScheduleRunner(net, params.basis)
    coupling = HamiltonianRecipe.zz() if params.mixing == "ising" else HamiltonianRecipe.xy()
    _dump(spec, assemble(HamiltonianRecipe.zeeman() + coupling, net, runner.basis))
    _, trace = runner.run(QuantumState.excitation(i, runner.basis), sched, spec.sample)
    peak, at = trace.peak(j)
    print(f"peak P({net.labels[j]}) = {peak:.6f} at t = {at:.6g} s")
    _write_output(spec, trace_to_csv(trace))
    return trace


def cmd_baseline(spec: RunSpec, net: SpinNetwork, params: BaselineParams) -> TransferTrace:
    """Uninterrupted XY evolution sampled every ``dt``."""
    source = net.index(params.source)
    runner = ScheduleRunner(net, "single_excitation")
    _dump(spec, assemble(HamiltonianRecipe.xy(), net, runner.basis))
    state = QuantumState.excitation(source, runner.basis)
    steps = max(1, round(params.duration / params.dt)) if params.duration > 0 else 0
    if steps == 0:
        trace = TransferTrace.empty(net.labels, {"schedule": "baseline", "duration": 0.0})
    else:
        sched = Schedule(
            segments=(Segment(recipe=HamiltonianRecipe.xy(), duration=params.duration / steps),),
            repetitions=steps,
        )
        _, trace = runner.run(state, sched, "per_repetition")
        for k, label in enumerate(net.labels):
            peak, at = trace.peak(k)
            print(f"max P({label}) = {peak:.6f} at t = {at:.6g} s")
    _write_output(spec, trace_to_csv(trace))
    return trace


def cmd_schedule(spec: RunSpec, net: SpinNetwork, params: ScheduleParams):
    i, j = _pair(net, params.pair)
    plan = pair_transfer_schedule(net, i, j, params.tau_mix, params.n, params.completion)
    _dump(spec, assemble(HamiltonianRecipe.zeeman() + HamiltonianRecipe.xy(), net, "single_excitation"))
    print(f"pair {net.pair_label(i, j)}: n = {plan.timing.harmonic}, tau_free = {plan.timing.tau_free:.6g} s")
    print(f"{plan.cycles} cycles of tau_mix = {plan.tau_mix:.6g} s, total {plan.transfer_time:.6g} s")
    print(f"predicted fidelity {plan.predicted_fidelity:.6f} (rounding loss {plan.rounding_loss:.2e})")
    print(plan.schedule.describe())
    _write_output(spec, plan.model_dump_json(indent=2))
    return plan


def cmd_relay(spec: RunSpec, net: SpinNetwork, params: RelayParams) -> TransferTrace:
    kwargs = {"harmonics": params.harmonics, "n_max": params.n_max, "hop_mode": params.hop_mode}
    plan = relay_plan(net, params.path, params.tau_mix, **kwargs)
    _dump(spec, assemble(HamiltonianRecipe.zeeman() + HamiltonianRecipe.xy(), net, "single_excitation"))
    run, trace = execute_relay(plan, net, spec.sample)
    for hop, eff in zip(plan.hops, run.hop_efficiencies):
        route = " -> ".join(net.labels[s] for s in getattr(hop, "sites", (hop.source, hop.target)))
        print(
            f"{route}: n = {hop.timing.harmonic}, "
            f"tau_free = {hop.timing.tau_free:.6g} s, {hop.cycles} cycles, "
            f"predicted {hop.predicted_fidelity:.6f}, simulated {eff:.6f}"
        )
    print(f"total time {plan.total_time:.6g} s, hop product {run.fidelity:.6f}, end-to-end {run.end_to_end:.6f}")
    _write_output(spec, trace_to_csv(trace))
    return trace


def cmd_optimize(spec: RunSpec, net: SpinNetwork, params: OptimizeParams):
    i, j = _pair(net, params.pair)
    result = optimize_hop(net, i, j, range(1, params.n_max + 1), params.tau_mix, then=params.then)
    best = result.best
    if result.flat:
        print("fidelity landscape is flat; reporting the first grid point")
    print(f"best n = {best.n_ij}, tau_mix = {best.tau_mix:.6g} s, fidelity {best.fidelity:.6f}, wall time {best.wall_time:.6g} s")
    _write_output(spec, result.model_dump_json(indent=2))
    return result


def cmd_average_hamiltonian(spec: RunSpec, net: SpinNetwork, params: AverageParams):
    seq = compile_xy_from_ising(net, loops=params.loops)
    avg = average_hamiltonian_zero_order(seq, net, "full")
    _dump(spec, avg)
    ideal = assemble(HamiltonianRecipe.xy(scale=seq.xy_scale), net, "full")
    for row, col, value in avg.nonzero_elements():
        print(f"H[{row},{col}] = {value.real:.6g}{value.imag:+.6g}j")
    print(f"max distance to {seq.xy_scale:g} * H_XY: {(avg - ideal).max_abs():.3e}")
    if params.cycle_time is not None:
        err = truncation_error(seq, params.cycle_time, net, normalize=False)
        print(f"truncation error at T = {params.cycle_time:.3g} s: {err:.3e}")
    return avg


def cmd_timing(spec: RunSpec, net: SpinNetwork, params: TimingParams):
    i, j = _pair(net, params.pair)
    timing = resonant_tau(net, i, j, params.n)
    print(f"pair {net.pair_label(*timing.pair)}: n = {timing.harmonic}, tau_free = {timing.tau_free:.6g} s")
    for item in timing.residuals:
        print(f"  {net.pair_label(*item.pair)}: residual {item.residual:.4f}")
    for pair in timing.degenerate_pairs:
        print(f"  {net.pair_label(*pair)}: degenerate, cannot be dephased")
    print(f"leakage score {leakage_score(net, timing, params.tau_mix):.4f}")
    _write_output(spec, timing.model_dump_json(indent=2))
    return timing


COMMANDS = {
    "simulate": cmd_simulate,
    "baseline": cmd_baseline,
    "schedule": cmd_schedule,
    "relay": cmd_relay,
    "optimize": cmd_optimize,
    "average-hamiltonian": cmd_average_hamiltonian,
    "timing": cmd_timing,
}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        configure_logging("DEBUG" if args.verbose else None)
        if args.command == "recipe":
            spec = load_run_spec(args.file, args.out)
        else:
            spec = spec_from_args(args)
        net = load_network_file(spec.network)
        params = spec.command_params()
        for site in getattr(params, "pair", ()) or ():
            net.index(site)
    except (PSTError, ValidationError, OSError) as exc:
        logger.error("invalid input: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    try:
        COMMANDS[spec.command](spec, net, params)
    except PSTError as exc:
        logger.error("%s failed: %s", spec.command, exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        logger.exception("%s failed while running", spec.command)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK
