import logging

import pytest

from cavitysta.logger import PACKAGE_LOGGER
from cavitysta.pulses import DetuningParams, EntanglePulseParams, PulseSet, TransferPulseParams
from cavitysta.statespace import build_basis


@pytest.fixture(autouse=True)
def reset_package_logger():
    yield
    # Log.init detaches the package logger from root, which would hide records from caplog
    logger = logging.getLogger(PACKAGE_LOGGER)
    for handler in list(logger.handlers):
        handler.close()
        logger.removeHandler(handler)
    logger.propagate = True
    logger.setLevel(logging.NOTSET)


@pytest.fixture
def basis():
    return build_basis(1, 1)


@pytest.fixture
def transfer_params():
    return TransferPulseParams.from_fraction(0.2, 50.0, 0.22)


@pytest.fixture
def transfer_pulses(transfer_params):
    return PulseSet.transfer(transfer_params)


@pytest.fixture
def entangle_params():
    return EntanglePulseParams(omega0p=0.3, big_t=30.0, theta=17 / 120, w=23 / 120)


@pytest.fixture
def entangle_pulses(entangle_params):
    return PulseSet.entangle(entangle_params)


@pytest.fixture
def detunings():
    return DetuningParams(delta1=6.0, delta2=7.0)


def transfer_pulses_at(omega0: float, big_t: float = 50.0) -> PulseSet:
    return PulseSet.transfer(TransferPulseParams.from_fraction(omega0, big_t, 0.22))


@pytest.fixture
def make_transfer_pulses():
    return transfer_pulses_at

