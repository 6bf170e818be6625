import numpy as np
import pytest

from bnnkernel.network import LayerSpec, NetworkSpec
from bnnkernel.tensor_core import ConvGeometry


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)


def random_pm1(rng, shape):
    return np.where(rng.random(shape) < 0.5, -1.0, 1.0).astype(np.float32)


def small_spec(kernel="binary", seed=3):
    layers = [
        LayerSpec("conv", ConvGeometry.square(3, 8, 3, 1, 1), kernel=kernel),
        LayerSpec("maxpool"),
        LayerSpec("affine_norm"),
        LayerSpec("htanh_act"),
        LayerSpec("conv", ConvGeometry.square(8, 5, 3, 1, 0), kernel=kernel),
        LayerSpec("affine_norm"),
        LayerSpec("sign_act"),
        LayerSpec("linear", in_features=5 * 2 * 2, out_features=7, kernel=kernel),
        LayerSpec("affine_norm"),
    ]
    return NetworkSpec("small", (1, 3, 8, 8), tuple(layers), seed).validate()


@pytest.fixture
def small_spec_path(tmp_path):
    path = tmp_path / "small.yaml"
    small_spec().save(path)
    return path
