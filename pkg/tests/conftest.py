import pytest

from qtoa.physics_model import GaussianPacket


@pytest.fixture
def default_geometry():
    """Reference geometry: packet at -5, detector at 0, width 0.5."""
    return {"q0": -5.0, "X": 0.0, "sigma0": 0.5}


def packet(k0: float, sigma0: float = 0.5, q0: float = -5.0) -> GaussianPacket:
    return GaussianPacket(q0, sigma0, k0)
