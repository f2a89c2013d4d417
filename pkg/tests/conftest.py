import math

import numpy as np
import pytest
from hypothesis import strategies as st

from dissuade.model import GameParams

REF = GameParams(1.0, 0.75, 0.25)
LOW_ALPHA = GameParams(1.0, 0.5, 0.25)


@st.composite
def game_params(draw, min_alpha_g=0.02, max_alpha_g=0.98):
    alpha_g = draw(st.floats(min_alpha_g, max_alpha_g))
    alpha_l = draw(st.floats(0.01, 1.0)) * (alpha_g - 0.005)
    alpha_l = max(alpha_l, 0.005)
    c = math.exp(draw(st.floats(math.log(0.05), math.log(20.0))))
    return GameParams(c, alpha_g, alpha_l)


def random_params(rng: np.random.Generator) -> GameParams:
    alpha_g = float(rng.uniform(0.02, 0.98))
    alpha_l = float(rng.uniform(0.005, alpha_g - 0.005))
    c = float(np.exp(rng.uniform(np.log(0.05), np.log(20.0))))
    return GameParams(c, alpha_g, alpha_l)


@pytest.fixture
def ref():
    return REF


@pytest.fixture
def low_alpha():
    return LOW_ALPHA
