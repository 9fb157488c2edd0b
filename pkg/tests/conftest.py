import numpy as np
import pytest

import softpbr as sp
from softpbr.ibl import Cubemap, bake_ibl


@pytest.fixture(scope="session")
def small_ibl():
    """Shared low-res bake of a constant gray environment."""
    env = Cubemap.constant((0.5, 0.5, 0.5), 16)
    return bake_ibl(env, face_size=16, num_mips=3, irradiance_size=8,
                    irradiance_samples=512, specular_samples=64, lut_size=16, seed=0)


@pytest.fixture(scope="session")
def white_furnace_ibl():
    """Unit-radiance constant environment, multiscatter on, modest bake sizes."""
    env = Cubemap.constant((1.0, 1.0, 1.0), 16)
    return bake_ibl(env, face_size=16, num_mips=4, irradiance_size=8,
                    irradiance_samples=1024, specular_samples=128, lut_size=32, seed=0)


def make_sphere_scene(width=96, height=72, radius=1.0, albedo=(0.7, 0.3, 0.2),
                      roughness=0.4, metalness=0.0):
    scene = sp.Scene(width=width, height=height)
    ball = sp.uv_sphere(n_lat=16, n_lon=32, radius=radius, name="ball")
    ball.material.albedo = np.asarray(albedo, dtype=np.float64)
    ball.material.roughness = roughness
    ball.material.metalness = metalness
    scene.add(ball)
    return scene


@pytest.fixture
def sphere_scene():
    scene = make_sphere_scene()
    scene.finalize()
    return scene
