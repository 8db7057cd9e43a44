import os
import random

import pytest
from hypothesis import HealthCheck, settings

from ultrabroyden import Fpt, Qp

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("UB_HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(params=["padic", "series"], ids=["Q17", "F17t"])
def ctx(request):
    return Qp(17) if request.param == "padic" else Fpt(17)


@pytest.fixture
def rng():
    return random.Random(1234)
