from pathlib import Path

import pytest
from pydantic import ValidationError

from app.api.schemas import (
    AverageParams,
    BaselineParams,
    OptimizeParams,
    RelayParams,
    RunSpec,
    SimulateParams,
    TimingParams,
)
from app.config.settings import DEFAULT_TAU_MIX


def _spec(**kwargs):
    base = {"command": "timing", "network": "net.toml", "params": {"pair": "A,B"}}
    base.update(kwargs)
    return RunSpec.model_validate(base)


def test_command_is_case_insensitive():
    assert _spec(command="Timing").command == "timing"


def test_command_accepts_underscores():
    spec = _spec(command="average_hamiltonian", params={})
    assert spec.command == "average-hamiltonian"


def test_unknown_command_rejected():
    with pytest.raises(ValidationError):
        _spec(command="teleport")


def test_non_string_command_rejected():
    with pytest.raises(ValidationError):
        _spec(command=3)


def test_defaults():
    spec = _spec()
    assert spec.network == Path("net.toml")
    assert spec.output is None
    assert spec.sample == "per_repetition"
    params = spec.command_params()
    assert isinstance(params, TimingParams)
    assert params.pair == ("A", "B")
    assert params.n == 1
    assert params.tau_mix == DEFAULT_TAU_MIX


def test_unknown_sampling_rejected():
    with pytest.raises(ValidationError):
        _spec(sample="per_cycle")


def test_output_in_missing_directory_rejected(tmp_path):
    with pytest.raises(ValidationError) as exc:
        _spec(output=str(tmp_path / "nowhere" / "out.csv"))
    assert "not writable" in str(exc.value)


def test_output_in_existing_directory_accepted(tmp_path):
    spec = _spec(output=str(tmp_path / "out.csv"), dump_operator=str(tmp_path / "h.txt"))
    assert spec.output == tmp_path / "out.csv"


def test_bare_output_name_uses_working_directory():
    assert _spec(output="out.csv").output == Path("out.csv")


def test_params_are_checked_against_command():
    with pytest.raises(ValidationError):
        _spec(params={"pair": "A,B", "bogus": 1})
    with pytest.raises(ValidationError):
        _spec(command="simulate", params={})


def test_pair_forms():
    assert SimulateParams(pair="Ca, Cb").pair == ("Ca", "Cb")
    assert SimulateParams(pair=["Ca", "Cb"]).pair == ("Ca", "Cb")
    assert SimulateParams(pair=[0, 1]).pair == ("0", "1")


@pytest.mark.parametrize("pair", ["A", "A,B,C", "A,A", ""])
def test_bad_pairs_rejected(pair):
    with pytest.raises(ValidationError):
        SimulateParams(pair=pair)


def test_simulate_limits():
    with pytest.raises(ValidationError):
        SimulateParams(pair="A,B", n=0)
    with pytest.raises(ValidationError):
        SimulateParams(pair="A,B", tau_mix=0)
    with pytest.raises(ValidationError):
        SimulateParams(pair="A,B", cycles=0)
    with pytest.raises(ValidationError):
        SimulateParams(pair="A,B", completion="eventually")
    with pytest.raises(ValidationError):
        SimulateParams(pair="A,B", basis="triplet")


def test_baseline_params():
    params = BaselineParams(source=0, duration=0)
    assert params.source == "0"
    assert params.dt == 1e-4
    with pytest.raises(ValidationError):
        BaselineParams(source="A", duration=-1)
    with pytest.raises(ValidationError):
        BaselineParams(source="A", duration=1, dt=0)


def test_relay_path_and_harmonics():
    params = RelayParams(path="CO,Ca,Cb", harmonics="5,1")
    assert params.path == ("CO", "Ca", "Cb")
    assert params.harmonics == (5, 1)
    assert params.n_max is None
    assert params.hop_mode == "pair"
    assert RelayParams(path=["A", "B"], harmonics=[2]).harmonics == (2,)


def test_relay_rejects_single_site_path():
    with pytest.raises(ValidationError):
        RelayParams(path="CO")


def test_relay_rejects_wrong_harmonic_count():
    with pytest.raises(ValidationError):
        RelayParams(path="CO,Ca,Cb", harmonics="5")


def test_triad_relay_params():
    params = RelayParams(path="CO,Ca,Cb,Cg,Cd1", hop_mode="triad", harmonics="3,8")
    assert params.hop_count == 2
    assert params.harmonics == (3, 8)
    with pytest.raises(ValidationError):
        RelayParams(path="Ca,Cb,Cg,Cd1", hop_mode="triad")
    with pytest.raises(ValidationError):
        RelayParams(path="Cb,Cg,Cd2", hop_mode="triad", harmonics="5,1")


def test_simulate_mixing_picks_basis():
    assert SimulateParams(pair="A,B").basis == "single_excitation"
    assert SimulateParams(pair="A,B", basis="full").basis == "full"
    ising = SimulateParams(pair="A,B", mixing="Ising")
    assert (ising.mixing, ising.basis, ising.loops) == ("ising", "full", 4)
    with pytest.raises(ValidationError):
        SimulateParams(pair="A,B", mixing="ising", basis="single_excitation")
    with pytest.raises(ValidationError):
        SimulateParams(pair="A,B", mixing="ising", completion="peak")
    with pytest.raises(ValidationError):
        SimulateParams(pair="A,B", loops=0)


def test_optimize_tau_mix_forms():
    assert OptimizeParams(pair="A,B").tau_mix == (DEFAULT_TAU_MIX,)
    assert OptimizeParams(pair="A,B", tau_mix=0.5e-3).tau_mix == (0.5e-3,)
    assert OptimizeParams(pair="A,B", tau_mix="1e-4, 2e-4").tau_mix == (1e-4, 2e-4)
    with pytest.raises(ValidationError):
        OptimizeParams(pair="A,B", tau_mix="1e-4,-1")
    with pytest.raises(ValidationError):
        OptimizeParams(pair="A,B", tau_mix=[])


def test_average_params():
    assert AverageParams().loops == 1
    with pytest.raises(ValidationError):
        AverageParams(loops=0)
    with pytest.raises(ValidationError):
        AverageParams(cycle_time=0)
