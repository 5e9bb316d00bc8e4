"""测试共享的 fixture"""
import math

import numpy as np
import pytest

from src.core.boxes import pr_box, quantum_extremal_box, uniform_box
from src.core.hardy import TAU_INV3, TAU_INV4
from src.core.linsys import FreeSet, behavior_from_free_set
from src.services.optimizer import OptimizationConfig
from src.services.quantum import QuantumModel, bloch_direction, singlet_state

# Hardy 最优点的 𝒰
HARDY_OPTIMUM_FREE = {
    "p1": TAU_INV3,
    "p4": 0.0,
    "p5": 0.0,
    "p8": TAU_INV4,
    "p9": 0.0,
    "p12": TAU_INV4,
    "p14": TAU_INV4,
    "p15": TAU_INV4,
}


@pytest.fixture
def pr():
    return pr_box(1)


@pytest.fixture
def uniform():
    return uniform_box()


@pytest.fixture
def qextremal():
    return quantum_extremal_box(1)


@pytest.fixture
def hardy_free_set():
    return FreeSet.from_mapping(HARDY_OPTIMUM_FREE)


@pytest.fixture
def hardy_behavior(hardy_free_set):
    return behavior_from_free_set(hardy_free_set)


@pytest.fixture
def singlet_model():
    """单态，测量方向取 CHSH 最优的平面角"""
    angles = {"a1": 0.0, "a2": math.pi / 2, "b1": math.pi / 4, "b2": -math.pi / 4}
    return QuantumModel(singlet_state(), {name: bloch_direction(phi) for name, phi in angles.items()})


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fast_config():
    """少量重启，保证整个测试集在两分钟内跑完"""
    return OptimizationConfig(restarts=4, seed=7)


@pytest.fixture
def hardy_config():
    return OptimizationConfig(restarts=8, seed=20000924)
