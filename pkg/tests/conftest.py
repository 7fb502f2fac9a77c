from __future__ import annotations

import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from slowfast.model import ModelParams, baseline_params

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def base() -> ModelParams:
    return baseline_params()


@pytest.fixture
def asym() -> ModelParams:
    """A valid parameter set with no symmetry between the two states."""
    return baseline_params().replace(
        alpha=0.8, beta=1.5, A_off=0.7, B_off=1.3, a_f=0.8, b_f=0.4, c_f=0.3, d_f=0.2,
        d_b=1.2, gamma_b=0.3, eta_a=1.3, eta_v2=0.5,
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


def small_doc(**solver):
    """A coarse, short baseline scenario document for fast integration tests."""
    from slowfast.scenario import baseline_scenario

    d = baseline_scenario().to_dict()
    d["grid"]["n"] = 16
    d["solver"].update(dict(dt=1e-3, t_end=0.02, eps=1e-2), **solver)
    d["experiments"].update(eps_list=[1e-1, 1e-2, 1e-3], layer_eps=1e-2)
    return d


def random_params(rng):
    al = rng.uniform(0.3, 2.0)
    be = al + rng.uniform(0.0, 2.0)
    a, b, c, d = rng.uniform(0.5, 2.0, 4)
    return baseline_params().replace(
        alpha=al, beta=be, A_off=rng.uniform(0.2, 2.0), B_off=rng.uniform(0.2, 2.0),
        a=a, b=b, c=c, d=d,
        a_f=a * rng.uniform(0.05, 1.0), b_f=b * rng.uniform(0.05, 1.0),
        c_f=c * rng.uniform(0.0, 1.0), d_f=d * rng.uniform(0.0, 1.0),
        d_a=1.0, d_b=1.0 + rng.uniform(0.01, 0.5),
    )
