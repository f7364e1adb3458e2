import pytest
from pydantic import ValidationError

from app.api.schemas import NetworkPayload, RelayRequest, ScheduleRequest, SimulateRead
from app.core.errors import ConfigError, NetworkValidationError


PAYLOAD = {"sites": {"A": 0.0, "B": 1000.0}, "couplings": {"A-B": 50.0}}


def test_payload_builds_network():
    net = NetworkPayload(**PAYLOAD).to_network()
    assert net.labels == ("A", "B")
    assert net.coupling("A", "B") == 50.0


def test_payload_without_sites():
    with pytest.raises(ConfigError):
        NetworkPayload(sites={}).to_network()


def test_payload_with_unknown_coupling_site():
    with pytest.raises(NetworkValidationError):
        NetworkPayload(sites={"A": 0.0, "B": 1.0}, couplings={"A-C": 5.0}).to_network()


def test_payload_with_single_site():
    with pytest.raises(NetworkValidationError):
        NetworkPayload(sites={"A": 0.0}).to_network()


def test_schedule_request_defaults():
    req = ScheduleRequest(network=PAYLOAD, pair="A,B")
    assert req.completion == "budget"
    assert isinstance(req.network, NetworkPayload)


def test_requests_forbid_unknown_fields():
    with pytest.raises(ValidationError):
        ScheduleRequest(network=PAYLOAD, pair="A,B", i="A")


def test_relay_request_needs_path():
    with pytest.raises(ValidationError):
        RelayRequest(network=PAYLOAD, path=["A"])


def test_read_model_serializes():
    read = SimulateRead(
        pair="A-B",
        peak_probability=1.0,
        peak_time=0.01,
        final_probability=1.0,
        times=[0.01],
        site_probabilities=[[0.0, 1.0]],
    )
    assert read.model_dump()["site_probabilities"] == [[0.0, 1.0]]
