import numpy as np
import pytest

import elastisat as es

TRIAXIAL_AXES = (1.0, 0.85, 0.6)


@pytest.fixture(scope="session")
def triaxial():
    return es.build_ellipsoid_body(TRIAXIAL_AXES)


@pytest.fixture(scope="session")
def sphere():
    return es.build_ellipsoid_body((1.0, 1.0, 1.0))


@pytest.fixture(scope="session")
def material():
    return es.MaterialParams()


@pytest.fixture()
def random_state():
    """Factory for random regular states: rigid placement plus small noise."""

    def make(body, rng, radius=4.0, noise=0.05):
        from scipy.spatial.transform import Rotation

        R = Rotation.random(random_state=rng).as_matrix()
        u = rng.standard_normal(3)
        c = radius * u / np.linalg.norm(u)
        state = es.rigid_state(
            body,
            rotation=R,
            translation=c,
            velocity=0.2 * rng.standard_normal(3),
            spin=0.3 * rng.standard_normal(3),
        )
        state.q = state.q + noise * rng.standard_normal(state.q.size)
        state.qdot = state.qdot + noise * rng.standard_normal(state.qdot.size)
        return state

    return make
