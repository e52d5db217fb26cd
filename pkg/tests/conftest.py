import pytest

from curvematch.mesh import MeshGenConfig, generate_template_mesh


@pytest.fixture(scope="session")
def template():
    """Default template mesh and curve, shared across the suite."""
    return generate_template_mesh(MeshGenConfig())
