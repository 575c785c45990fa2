import pytest

from czquant import channel, dynamics


@pytest.fixture(scope="session")
def protocol_1e4():
    return dynamics.cz_cnot_protocol(1e4, 1e-14)


@pytest.fixture(scope="session")
def gate_1e4(protocol_1e4):
    return channel.gate_superop(protocol_1e4, channel.ALL_QUANTIZED)


@pytest.fixture(scope="session")
def gate_1e4_sideband(protocol_1e4):
    return channel.gate_superop(protocol_1e4, channel.SIDEBAND_LIMITED)


@pytest.fixture(scope="session")
def gate_ideal():
    return channel.gate_superop(dynamics.cz_cnot_protocol(), channel.ALL_IDEAL)


@pytest.fixture(scope="session")
def protocol_4():
    return dynamics.cz_cnot_protocol(4.0, 1e-14)
