import os
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


@pytest.fixture
def problem_path():
    return lambda name: PROBLEMS / f"{name}.pvs"


@pytest.fixture
def load():
    from pvsynth import load_problem

    return lambda name: load_problem(PROBLEMS / f"{name}.pvs")
