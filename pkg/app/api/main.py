"""FastAPI front end for the transfer simulator with centralized logging."""
import logging
import time

from fastapi import FastAPI, HTTPException, Request

from ..config.logging_config import configure_logging
from ..core.errors import ConfigError, NetworkValidationError, PSTError
from ..core.hamiltonian import HamiltonianRecipe, assemble
from ..core.network import SpinNetwork
from ..core.propagation import QuantumState, ScheduleRunner
from ..core.scheduler import (
    TriadSchedule,
    compile_pair_schedule,
    execute_relay,
    leakage_score,
    pair_transfer_schedule,
    relay_plan,
    resonant_tau,
)
from ..core.toggling import average_hamiltonian_zero_order, compile_xy_from_ising, truncation_error
from .schemas import (
    AverageRead,
    AverageRequest,
    ElementRead,
    HopRead,
    NetworkPayload,
    RelayRead,
    RelayRequest,
    ResidualRead,
    ScheduleRead,
    ScheduleRequest,
    SimulateRead,
    SimulateRequest,
    TimingRead,
    TimingRequest,
)

# ensure logging is configured (idempotent)
configure_logging()

logger = logging.getLogger("pst.api")

app = FastAPI(title="Selective spin transfer")


@app.on_event("startup")
async def startup_event():
    logger.info("Starting spin transfer API")


@app.middleware("http")
async def log_requests(request: Request, call_next):
    start = time.time()
    logger.info("Incoming request %s %s", request.method, request.url)
    try:
        response = await call_next(request)
    except Exception:
        logger.exception("Unhandled exception during request")
        raise
    duration = time.time() - start
    logger.info(
        "Completed %s %s with status=%s in %.3fs",
        request.method,
        request.url,
        response.status_code,
        duration,
    )
    return response


def _network(payload: NetworkPayload) -> SpinNetwork:
    try:
        return payload.to_network()
    except PSTError as exc:
        logger.warning("rejected network payload: %s", exc)
        raise HTTPException(status_code=400, detail=str(exc)) from exc


def _site(net: SpinNetwork, site: str) -> int:
    try:
        return net.index(site)
    except NetworkValidationError as exc:
        raise HTTPException(status_code=404, detail=str(exc)) from exc


def _fail(exc: PSTError):
    logger.warning("request failed: %s", exc)
    status = 400 if not isinstance(exc, ConfigError) else 422
    raise HTTPException(status_code=status, detail=str(exc)) from exc


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/timing", response_model=TimingRead)
def route_timing(data: TimingRequest):
    net = _network(data.network)
    i, j = (_site(net, s) for s in data.pair)
    try:
        timing = resonant_tau(net, i, j, data.n)
        score = leakage_score(net, timing, data.tau_mix)
    except PSTError as exc:
        _fail(exc)
    return TimingRead(
        pair=net.pair_label(*timing.pair),
        harmonic=timing.harmonic,
        tau_free=timing.tau_free,
        leakage_score=score,
        residuals=[ResidualRead(pair=net.pair_label(*r.pair), residual=r.residual) for r in timing.residuals],
        degenerate_pairs=[net.pair_label(*p) for p in timing.degenerate_pairs],
    )


@app.post("/schedule", response_model=ScheduleRead)
def route_schedule(data: ScheduleRequest):
    net = _network(data.network)
    i, j = (_site(net, s) for s in data.pair)
    try:
        plan = pair_transfer_schedule(net, i, j, data.tau_mix, data.n, data.completion)
    except PSTError as exc:
        _fail(exc)
    return ScheduleRead(
        pair=net.pair_label(i, j),
        harmonic=plan.timing.harmonic,
        tau_free=plan.timing.tau_free,
        tau_mix=plan.tau_mix,
        cycles=plan.cycles,
        transfer_time=plan.transfer_time,
        predicted_fidelity=plan.predicted_fidelity,
        rounding_loss=plan.rounding_loss,
        schedule=plan.schedule.describe(),
    )


@app.post("/simulate", response_model=SimulateRead)
def route_simulate(data: SimulateRequest):
    net = _network(data.network)
    i, j = (_site(net, s) for s in data.pair)
    try:
        plan = compile_pair_schedule(net, i, j, data.tau_mix, data.n, data.completion, data.mixing, data.loops)
        sched = plan.schedule
        if data.cycles is not None:
            sched = sched.model_copy(update={"repetitions": data.cycles})
        runner = ScheduleRunner(net, data.basis)
        _, trace = runner.run(QuantumState.excitation(i, runner.basis), sched)
    except PSTError as exc:
        _fail(exc)
    peak, peak_time = trace.peak(j)
    return SimulateRead(
        pair=net.pair_label(i, j),
        peak_probability=peak,
        peak_time=peak_time,
        final_probability=trace.final(j),
        times=trace.times.tolist(),
        site_probabilities=trace.site_probabilities.tolist(),
    )


@app.post("/relay", response_model=RelayRead)
def route_relay(data: RelayRequest):
    net = _network(data.network)
    path = [_site(net, s) for s in data.path]
    try:
        plan = relay_plan(net, path, data.tau_mix, data.harmonics, data.n_max, hop_mode=data.hop_mode)
        run, _ = execute_relay(plan, net)
    except PSTError as exc:
        _fail(exc)
    hops = [
        HopRead(
            source=net.labels[hop.source],
            via=net.labels[hop.sites[1]] if isinstance(hop, TriadSchedule) else None,
            target=net.labels[hop.target],
            harmonic=hop.timing.harmonic,
            tau_free=hop.timing.tau_free,
            cycles=hop.cycles,
            predicted_fidelity=hop.predicted_fidelity,
            efficiency=eff,
        )
        for hop, eff in zip(plan.hops, run.hop_efficiencies)
    ]
    return RelayRead(
        path=list(plan.labels),
        hop_mode=plan.hop_mode,
        hops=hops,
        predicted_fidelity=plan.predicted_fidelity,
        fidelity=run.fidelity,
        end_to_end=run.end_to_end,
        total_time=plan.total_time,
    )


@app.post("/average-hamiltonian", response_model=AverageRead)
def route_average_hamiltonian(data: AverageRequest):
    net = _network(data.network)
    try:
        seq = compile_xy_from_ising(net, loops=data.loops)
        avg = average_hamiltonian_zero_order(seq, net, "full")
        ideal = assemble(HamiltonianRecipe.xy(scale=seq.xy_scale), net, "full")
        err = None
        if data.cycle_time is not None:
            err = truncation_error(seq, data.cycle_time, net, normalize=False)
    except PSTError as exc:
        _fail(exc)
    return AverageRead(
        dim=avg.dim,
        xy_scale=seq.xy_scale,
        distance_to_ideal=(avg - ideal).max_abs(),
        elements=[ElementRead(row=r, col=c, real=v.real, imag=v.imag) for r, c, v in avg.nonzero_elements()],
        truncation_error=err,
    )
