import numpy as np
import pytest
import torch


@pytest.fixture(autouse=True)
def fixed_torch_seed():
    torch.manual_seed(1234)


@pytest.fixture
def rng():
    return np.random.default_rng(555)
