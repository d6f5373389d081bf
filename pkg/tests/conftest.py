import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from risloc.array import build_planar_ris
from risloc.config import ScenarioConfig
from risloc.fim import ChannelGain, Scenario, SnrScale

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

LAM = 299_792_458.0 / 28e9
_criteria = []


def record_criterion(number, title, ok, detail=""):
    """Log one acceptance line; the list is printed in the terminal summary."""
    _criteria.append((number, title, bool(ok), detail))
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(_criteria, key=lambda c: c[0]):
        terminalreporter.write_line(
            f"{'PASS' if ok else 'FAIL'}  {number:>2}. {title}  {detail}"
        )


@pytest.fixture(scope="session")
def ref_cfg():
    return ScenarioConfig()


@pytest.fixture(scope="session")
def ref_arr(ref_cfg):
    return ref_cfg.build_array()


@pytest.fixture(scope="session")
def ref_scenario(ref_cfg, ref_arr):
    return ref_cfg.scenario(arr=ref_arr)


def toy_scenario(n_side, spacing_wl, p, beta=1.0 + 0j):
    """Small array with unit gain and ``2 Es/N0 = 1``."""
    arr = build_planar_ris(n_side, n_side, spacing_wl * LAM, LAM)
    return Scenario.build(arr, np.asarray(p, float), ChannelGain.from_complex(beta), SnrScale(0.5, 1.0))


@pytest.fixture(scope="session")
def toy16():
    return toy_scenario(4, 2.0, (0.05, 0.15, 0.05))


@pytest.fixture(scope="session")
def toy4():
    return toy_scenario(2, 2.0, (0.02, 0.05, 0.02))


SWEEP_DESIGNS = [
    "optimal", "optimal-diag", "otc", "cto",
    "random:40", "random:80", "random:160", "directional:0.5", "directional:2",
    "feasible-diag:40", "feasible-diag:200", "feasible-diag:1000",
    "timediv:40", "timediv:200", "timediv:1000",
]


@pytest.fixture(scope="session")
def ref_sweep(ref_cfg):
    from risloc.harness import run_peb_sweep

    return run_peb_sweep(ref_cfg, SWEEP_DESIGNS, range(1, 16))
