"""Pydantic schemas for command parameters, API requests and run specs."""
from __future__ import annotations

import os
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..config.settings import DEFAULT_TAU_MIX
from ..core.network import SpinNetwork, network_from_mapping

Command = Literal["simulate", "schedule", "relay", "optimize", "average-hamiltonian", "baseline", "timing"]
COMMANDS = ("simulate", "schedule", "relay", "optimize", "average-hamiltonian", "baseline", "timing")
SampleMode = Literal["per_repetition", "per_segment"]


def _split(v) -> list[str]:
    if isinstance(v, str):
        return [s.strip() for s in v.split(",") if s.strip()]
    return [str(s) for s in v]


class PairParams(BaseModel):
    """A pair given as ``"i,j"`` or as a two-item list of labels or indices."""

    pair: tuple[str, str]
    model_config = ConfigDict(extra="forbid")

    @field_validator("pair", mode="before")
    @classmethod
    def parse_pair(cls, v):
        items = _split(v)
        if len(items) != 2:
            raise ValueError("pair must name exactly two sites, e.g. 'Ca,Cb'")
        if items[0] == items[1]:
            raise ValueError("pair must name two different sites")
        return tuple(items)


class TimingParams(PairParams):
    n: int = Field(default=1, ge=1)
    tau_mix: float = Field(default=DEFAULT_TAU_MIX, gt=0)


class ScheduleParams(PairParams):
    n: int = Field(default=1, ge=1)
    tau_mix: float = Field(default=DEFAULT_TAU_MIX, gt=0)
    completion: Literal["budget", "peak"] = "budget"


class SimulateParams(ScheduleParams):
    """``mixing="ising"`` drives the mixing periods with toggled ZZ couplings.

    That schedule uses x and y pulses, so it runs in the full basis; the
    basis defaults accordingly and the peak completion mode is not offered.
    """

    cycles: int | None = Field(default=None, ge=1)
    basis: Literal["single_excitation", "full"] | None = None
    mixing: Literal["xy", "ising"] = "xy"
    loops: int = Field(default=4, ge=1)

    @field_validator("mixing", mode="before")
    @classmethod
    def normalize_mixing(cls, v):
        return v.lower() if isinstance(v, str) else v

    @model_validator(mode="after")
    def resolve_basis(self):
        if self.mixing == "ising":
            if self.basis == "single_excitation":
                raise ValueError("ising mixing needs the full basis")
            if self.completion == "peak":
                raise ValueError("ising mixing supports only the budget completion mode")
            self.basis = "full"
        elif self.basis is None:
            self.basis = "single_excitation"
        return self


class BaselineParams(BaseModel):
    source: str
    duration: float = Field(ge=0)
    dt: float = Field(default=1e-4, gt=0)
    model_config = ConfigDict(extra="forbid")

    @field_validator("source", mode="before")
    @classmethod
    def source_as_text(cls, v):
        return str(v)


class RelayParams(BaseModel):
    """``n_max`` left unset means ``HARMONIC_MAX`` for pair hops and ``N_MAX`` for triads."""

    path: tuple[str, ...]
    tau_mix: float = Field(default=DEFAULT_TAU_MIX, gt=0)
    harmonics: tuple[int, ...] | None = None
    n_max: int | None = Field(default=None, ge=1)
    hop_mode: Literal["pair", "triad"] = "pair"
    model_config = ConfigDict(extra="forbid")

    @property
    def hop_count(self) -> int:
        return len(self.path) - 1 if self.hop_mode == "pair" else (len(self.path) - 1) // 2

    @field_validator("path", mode="before")
    @classmethod
    def parse_path(cls, v):
        items = _split(v)
        if len(items) < 2:
            raise ValueError("a relay path needs at least two sites")
        return tuple(items)

    @field_validator("harmonics", mode="before")
    @classmethod
    def parse_harmonics(cls, v):
        if v is None or isinstance(v, (list, tuple)):
            return v
        return tuple(int(s) for s in _split(v))

    @model_validator(mode="after")
    def check_harmonics(self):
        if self.hop_mode == "triad" and len(self.path) % 2 == 0:
            raise ValueError("a triad relay needs an odd number of sites")
        if self.harmonics is not None and len(self.harmonics) != self.hop_count:
            raise ValueError("give one harmonic per hop")
        return self


class OptimizeParams(PairParams):
    n_max: int = Field(default=8, ge=1)
    tau_mix: tuple[float, ...] = (DEFAULT_TAU_MIX,)
    then: str | None = None

    @field_validator("tau_mix", mode="before")
    @classmethod
    def parse_tau_mix(cls, v):
        if isinstance(v, (int, float)):
            v = (v,)
        values = tuple(float(s) for s in (_split(v) if isinstance(v, str) else v))
        if not values or any(t <= 0 for t in values):
            raise ValueError("tau_mix values must be positive")
        return values


class AverageParams(BaseModel):
    loops: int = Field(default=1, ge=1)
    cycle_time: float | None = Field(default=None, gt=0)
    model_config = ConfigDict(extra="forbid")


PARAMS_BY_COMMAND: dict[str, type[BaseModel]] = {
    "simulate": SimulateParams,
    "schedule": ScheduleParams,
    "relay": RelayParams,
    "optimize": OptimizeParams,
    "average-hamiltonian": AverageParams,
    "baseline": BaselineParams,
    "timing": TimingParams,
}


class RunSpec(BaseModel):
    """Everything one CLI run needs, validated before any simulation starts."""

    command: Command
    network: Path
    output: Path | None = None
    sample: SampleMode = "per_repetition"
    dump_operator: Path | None = None
    params: dict[str, Any] = Field(default_factory=dict)

    @field_validator("command", mode="before")
    @classmethod
    def normalize_command(cls, v) -> str:
        if not isinstance(v, str):
            raise ValueError("command must be a string")
        low = v.lower().replace("_", "-")
        if low not in COMMANDS:
            raise ValueError(f"unsupported command: {v!r}")
        return low

    @model_validator(mode="after")
    def check_outputs(self):
        for target in (self.output, self.dump_operator):
            if target is None:
                continue
            parent = target.parent if str(target.parent) else Path(".")
            if not parent.is_dir() or not os.access(parent, os.W_OK):
                raise ValueError(f"output directory {str(parent)!r} is not writable")
        PARAMS_BY_COMMAND[self.command].model_validate(self.params)
        return self

    def command_params(self) -> BaseModel:
        return PARAMS_BY_COMMAND[self.command].model_validate(self.params)


class NetworkPayload(BaseModel):
    sites: dict[str, float]
    couplings: dict[str, float] = Field(default_factory=dict)

    def to_network(self) -> SpinNetwork:
        return network_from_mapping({"sites": self.sites, "couplings": self.couplings})


class TimingRequest(TimingParams):
    network: NetworkPayload


class ScheduleRequest(ScheduleParams):
    network: NetworkPayload


class SimulateRequest(SimulateParams):
    network: NetworkPayload


class RelayRequest(RelayParams):
    network: NetworkPayload


class AverageRequest(AverageParams):
    network: NetworkPayload


class ResidualRead(BaseModel):
    pair: str
    residual: float


class TimingRead(BaseModel):
    pair: str
    harmonic: int
    tau_free: float
    leakage_score: float
    residuals: list[ResidualRead]
    degenerate_pairs: list[str] = []


class ScheduleRead(BaseModel):
    pair: str
    harmonic: int
    tau_free: float
    tau_mix: float
    cycles: int
    transfer_time: float
    predicted_fidelity: float
    rounding_loss: float
    schedule: str


class SimulateRead(BaseModel):
    pair: str
    peak_probability: float
    peak_time: float
    final_probability: float
    times: list[float]
    site_probabilities: list[list[float]]


class HopRead(BaseModel):
    source: str
    via: str | None = None
    target: str
    harmonic: int
    tau_free: float
    cycles: int
    predicted_fidelity: float
    efficiency: float


class RelayRead(BaseModel):
    path: list[str]
    hop_mode: str
    hops: list[HopRead]
    predicted_fidelity: float
    fidelity: float
    end_to_end: float
    total_time: float


class ElementRead(BaseModel):
    row: int
    col: int
    real: float
    imag: float


class AverageRead(BaseModel):
    dim: int
    xy_scale: float
    distance_to_ideal: float
    elements: list[ElementRead]
    truncation_error: float | None = None
