import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from risloc.array import build_planar_ris, steering
from risloc.design import (
    LambdaAllocation, SdpSolution, SolverStatus, build_beam_basis, solve_lambda_sdp,
)
from risloc.errors import InvalidBeam, ScheduleError
from risloc.fim import fim_from_schedule
from risloc.profiles import (
    ProfileSchedule, ProjectionParams, allocate_time, make_schedule, pattern_points,
    phase_only, project_basis, project_unit_modulus, quantize_phases,
)

REG = json.loads((Path(__file__).parent / "data" / "regression.json").read_text())
LAM = 299_792_458.0 / 28e9


@pytest.mark.parametrize("w, T, expected", [
    ((0.5, 0.3, 0.15, 0.05), 40, (20, 12, 6, 2)),
    ((0.97, 0.01, 0.01, 0.01), 10, (7, 1, 1, 1)),
    ((0.25, 0.25, 0.25, 0.25), 8, (2, 2, 2, 2)),
    ((1.0, 0.0, 0.0, 0.0), 40, (37, 1, 1, 1)),
    ((0.0, 0.0, 0.0, 1.0), 4, (1, 1, 1, 1)),
])
def test_allocate_time_examples(w, T, expected):
    assert tuple(allocate_time(w, T)) == expected


def test_allocate_time_ties_prefer_larger_weight_then_index():
    # shares 2.5, 2.5, 2.5, 2.5 -> two extra slots go to the lowest indices
    assert tuple(allocate_time([0.25] * 4, 10)) == (3, 3, 2, 2)
    # shares 1.5, 4.5, 2.5, 1.5: equal fractions, larger weights win
    assert tuple(allocate_time([0.15, 0.45, 0.25, 0.15], 10)) == (1, 5, 3, 1)


def test_allocate_time_errors():
    with pytest.raises(ScheduleError):
        allocate_time([0.25] * 4, 3)
    with pytest.raises(ValueError):
        allocate_time([0.5, 0.5, 0.5, -0.5], 10)
    with pytest.raises(ValueError):
        allocate_time([0.1, 0.1, 0.1, 0.1], 10)


weights = st.lists(st.floats(0, 1), min_size=4, max_size=4).filter(lambda w: sum(w) > 1e-6).map(
    lambda w: list(np.asarray(w) / sum(w)))


@given(weights, st.integers(4, 5000))
def test_allocate_time_properties(w, T):
    out = allocate_time(w, T)
    assert out.sum() == T
    assert out.min() >= 1
    # beams that were not pinned stay within one slot of their share of the rest
    free = out > 1
    if free.any():
        rest = T - (~free).sum()
        share = np.asarray(w) * rest / np.asarray(w)[free].sum()
        assert np.all(np.abs(out[free] - share[free]) < 1 + 1e-9)


def test_pattern_points_layout():
    p = np.array([1.0, 2.0, 1.0])
    pts = pattern_points(p, 64)
    assert pts.shape == (64, 3)
    r = np.linalg.norm(pts, axis=1)
    rho = np.linalg.norm(p)
    assert r.min() == pytest.approx(0.8 * rho) and r.max() == pytest.approx(1.2 * rho)
    np.testing.assert_allclose(pattern_points(p, 1), p[None, :])


def test_projection_fixed_point_for_unit_modulus():
    arr = build_planar_ris(4, 4, LAM / 2, LAM)
    p = np.array([0.1, 0.5, 0.2])
    u = np.exp(1j * np.random.default_rng(0).uniform(0, 2 * np.pi, 16))
    np.testing.assert_array_equal(project_unit_modulus(u, ProjectionParams(), arr, p), u)
    a = steering(arr, p)
    f = project_unit_modulus(np.conj(a), ProjectionParams(n_points=1), arr, p)
    assert abs(np.conj(a) @ np.conj(f)) == pytest.approx(16)


def test_projection_zero_beam():
    arr = build_planar_ris(2, 2, LAM / 2, LAM)
    with pytest.raises(InvalidBeam):
        project_unit_modulus(np.zeros(4), ProjectionParams(), arr, (0.1, 0.5, 0.1))


def test_zero_entry_gets_phase_zero():
    assert phase_only([0.0, -2.0])[0] == 1.0


@given(st.integers(0, 2**32 - 1))
def test_projection_never_regresses(seed):
    rng = np.random.default_rng(seed)
    arr = build_planar_ris(4, 4, LAM / 2, LAM)
    u = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    f, hist = project_unit_modulus(u, ProjectionParams(n_points=16, max_iters=50), arr,
                                   (0.05, 0.3, 0.1), return_history=True)
    np.testing.assert_allclose(np.abs(f), 1, atol=1e-12)
    assert all(b < a for a, b in zip(hist, hist[1:]))
    assert hist[-1] <= hist[0]


def test_projection_regression_range_beam(ref_scenario):
    b = build_beam_basis(ref_scenario.bundle)
    f, hist = project_unit_modulus(b.U[:, 1], ProjectionParams(), ref_scenario.arr,
                                   ref_scenario.p, return_history=True)
    ref = REG["projection_rho_beam"]
    assert hist[-1] <= hist[0]
    assert hist[0] == pytest.approx(ref["initial"], rel=1e-9)
    assert hist[-1] == pytest.approx(ref["final"], rel=1e-6)


def test_quantize_phases():
    f = np.exp(1j * np.array([0.1, 1.7, 3.0, -1.4]))
    np.testing.assert_allclose(quantize_phases(f, 4), [1, 1j, -1, -1j], atol=1e-15)
    with pytest.raises(ValueError):
        quantize_phases(f, 0)


def test_schedule_invariants():
    with pytest.raises(ScheduleError):
        ProfileSchedule(np.ones((4, 3)), [1, 1, 1, 1], 5)
    s = ProfileSchedule(np.ones((4, 3)), [2, 1, 1, 1], 5)
    assert s.profiles().shape == (3, 5)


@pytest.fixture(scope="module")
def ref_parts(ref_scenario):
    b = build_beam_basis(ref_scenario.bundle)
    proj = project_basis(b, ref_scenario)
    return b, proj


@pytest.mark.parametrize("pipeline", ["A", "B"])
def test_make_schedule_feasible(ref_scenario, ref_parts, pipeline):
    b, proj = ref_parts
    sol = solve_lambda_sdp(b, ref_scenario, 40.0, diagonal_only=True)
    s = make_schedule(sol, b, None, 40, scenario=ref_scenario, pipeline=pipeline, projected=proj)
    assert s.allocations.sum() == 40 and s.allocations.min() >= 1
    np.testing.assert_allclose(np.abs(s.beams), 1, atol=1e-12)
    assert np.isfinite(fim_from_schedule(s, ref_scenario).peb)


def test_make_schedule_forced_minimum(ref_scenario, ref_parts):
    b, proj = ref_parts
    sol = SdpSolution(LambdaAllocation(np.diag([40.0, 0, 0, 0]).astype(complex), True, 40.0),
                      1.0, 1.0, SolverStatus.OPTIMAL)
    s = make_schedule(sol, b, None, 40, scenario=ref_scenario, pipeline="A", projected=proj)
    assert tuple(s.allocations) == (37, 1, 1, 1)


def test_make_schedule_rejects_full_lambda(ref_scenario, ref_parts):
    b, proj = ref_parts
    sol = solve_lambda_sdp(b, ref_scenario, 40.0)
    with pytest.raises(ValueError):
        make_schedule(sol, b, None, 40, scenario=ref_scenario, projected=proj)


def test_scheduled_peb_monotone_in_T(ref_scenario, ref_parts):
    b, proj = ref_parts
    ratios = []
    for T in (40, 200, 1000):
        sol = solve_lambda_sdp(b, ref_scenario, T, diagonal_only=True)
        s = make_schedule(sol, b, None, T, scenario=ref_scenario, projected=proj)
        cont = solve_lambda_sdp(proj, ref_scenario, T, diagonal_only=True).peb_at_optimum
        ratios.append(fim_from_schedule(s, ref_scenario).peb / cont)
    assert ratios[1] <= ratios[0] * 1.01 and ratios[2] <= ratios[1] * 1.01
    assert ratios[2] < 1.05
