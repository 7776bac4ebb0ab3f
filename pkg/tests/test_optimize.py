import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sepsteer.errors import BracketError, InvalidArgument
from sepsteer.gaussian import TOL
from sepsteer.optimize import (
    AncillaPolicy,
    Criterion,
    LinearFamily,
    SteeringPolicy,
    ancilla_ok,
    bisect_predicate,
    bisect_threshold,
    db2_window_numeric,
    distributed_steering,
    expanding_bracket,
    get_split,
    maximize_collective_steering,
    nonsteerable_threshold_curve,
    separable_threshold_curve,
    split_state,
    steering_window_end,
    verify_window_db2,
)
from sepsteer.protocols import (
    Direction,
    ProtocolParams,
    Stage,
    analytic_threshold,
    closed_form_steering,
    optimal_displacements,
)


def test_bisect_predicate():
    assert bisect_predicate(lambda x: x < 0.3, 0, 1, 1e-10) == pytest.approx(0.3, abs=1e-10)
    with pytest.raises(BracketError) as err:
        bisect_predicate(lambda x: True, 0, 1, 1e-6)
    assert err.value.lo_value is True and err.value.hi_value is True
    with pytest.raises(InvalidArgument):
        bisect_predicate(lambda x: x < 0.3, 0, 1, 0)


def test_splits():
    assert get_split("C-AB").stage is Stage.STEP2
    with pytest.raises(InvalidArgument):
        get_split("C-XY")
    with pytest.raises(InvalidArgument):
        LinearFamily(ProtocolParams(0.3), "C-ABD")
    with pytest.raises(InvalidArgument):
        split_state(ProtocolParams(0.3), "C-ABD")


@given(st.floats(0.05, 1.5), st.floats(0.0, 4.0))
def test_linear_family_is_exact(t, x):
    p = ProtocolParams(t, x, np.tanh(2 * t) + 1, 1.7, Direction.A_TO_BD)
    fam = LinearFamily(p, "C-ABD")
    assert np.allclose(fam.at(x).data, split_state(p, "C-ABD").data, atol=1e-12)


@pytest.mark.parametrize("t", [0.1, 0.4, 0.9, 1.4])
def test_ppt_bisection_matches_formula(t):
    x = bisect_threshold(Criterion.PPT_BOUNDARY, "C-AB", t, (0.0, 10.0), tol=1e-8)
    assert x == pytest.approx(analytic_threshold("sep_C_AB", t), abs=1e-6)


def test_ppt_bisection_forward_four_mode():
    t = 0.7
    d_b = np.tanh(2 * t) + 1
    x = bisect_threshold("ppt_boundary", "C-ABD", t, (0.0, 10.0), d_b=d_b, d_d=math.sqrt(2) * d_b)
    assert x == pytest.approx(analytic_threshold("sep_C_ABD_forward", t), abs=1e-6)


@pytest.mark.parametrize("t", [0.96, 1.2, 1.5])
def test_ppt_boundary_reverse_direction(t):
    d_b, d_d = optimal_displacements("BDtoA", t)
    fam = LinearFamily(ProtocolParams(t, 0, d_b, d_d, "BDtoA"), "C-ABD")
    lo, hi = expanding_bracket(fam.entangled)
    assert fam.ppt_boundary(lo, hi) == pytest.approx(analytic_threshold("sep_C_ABD_reverse", t), abs=1e-6)


def test_bracket_errors():
    x0 = analytic_threshold("sep_C_AB", 0.4)
    with pytest.raises(BracketError):
        bisect_threshold("ppt_boundary", "C-AB", 0.4, (2 * x0, 3 * x0))


def test_monotone_feasibility():
    for t in np.linspace(0.1, 1.4, 8):
        fam = LinearFamily(ProtocolParams.optimal(t, 0.0), "C-AB")
        flags = [fam.entangled(x) for x in np.linspace(0, 3 * analytic_threshold("sep_C_AB", t), 40)]
        # entangled, then separable, never back
        assert flags == sorted(flags, reverse=True)


def test_threshold_curves():
    grid = [0.05, 0.2, 0.43, 0.8, 1.2]
    sep = separable_threshold_curve(grid)
    assert sep.criterion is Criterion.PPT_BOUNDARY
    assert np.allclose(sep.x, [analytic_threshold("sep_C_AB", t) for t in grid], atol=1e-6)
    both = nonsteerable_threshold_curve(grid)
    assert np.all(both.x <= sep.x)
    assert list(both.t) == sorted(both.t)
    for policy in (SteeringPolicy.TO_ANCILLA, SteeringPolicy.FROM_ANCILLA):
        one = nonsteerable_threshold_curve(grid, policy)
        assert np.all(one.x <= both.x + 1e-8)
    assert nonsteerable_threshold_curve([1e-3]).x[0] < 1e-3


def test_windows_at_half():
    assert steering_window_end(0.5, AncillaPolicy.SEPARABLE) == pytest.approx(0.4342, abs=1e-3)
    # direction-resolved: only (A'B) -> C' steering survives this long
    assert steering_window_end(0.5, AncillaPolicy.NONSTEERABLE) == pytest.approx(0.7917, abs=1e-3)


def test_distributed_steering_respects_policy():
    p = ProtocolParams.optimal(0.6, 0.5)
    assert not ancilla_ok(p, "separable")
    assert distributed_steering(p, "separable") == 0.0
    assert ancilla_ok(p, "nonsteerable")
    assert distributed_steering(p, "nonsteerable") == pytest.approx(
        closed_form_steering("AtoB", 0.6), abs=1e-9)


def test_db2_window():
    w = verify_window_db2(0.5)
    assert w.t_lo == pytest.approx(0.2406, abs=1e-3)
    assert w.t_hi == pytest.approx(0.3466, abs=1e-3)
    num = db2_window_numeric(0.5)
    assert num.t_lo == pytest.approx(w.t_lo, abs=1e-5)
    assert num.t_hi == pytest.approx(w.t_hi, abs=1e-5)
    assert verify_window_db2(0.2).empty
    assert db2_window_numeric(0.2).empty
    wide = verify_window_db2(10.0)
    assert not wide.empty and wide.t_hi == pytest.approx(math.log(2) / 2)
    small = verify_window_db2(1e-3)
    assert small.t_lo < 1e-2 or small.empty
    with pytest.raises(InvalidArgument):
        verify_window_db2(0.0)


def test_collective_search_reaches_closed_form():
    res = maximize_collective_steering(1.0)
    assert res.feasible
    assert res.value == pytest.approx(0.5971605418, abs=1e-6)
    p = ProtocolParams(1.0, res.x, res.d_b, res.d_d, Direction.BD_TO_A)
    for split in ("C-AB", "C-ABD"):
        fam = LinearFamily(p, split)
        assert fam.ppt_min(res.x) >= 1 - TOL
    mid = maximize_collective_steering(0.5)
    assert mid.value == pytest.approx(closed_form_steering("BDtoA", 0.5), abs=1e-6)


def test_collective_search_is_deterministic():
    assert maximize_collective_steering(0.4).to_dict() == maximize_collective_steering(0.4).to_dict()


def test_collective_search_short_below_regime():
    res = maximize_collective_steering(0.2)
    assert res.feasible and res.shortfall > 1e-4
    assert 0 < res.value < res.closed_form


def test_collective_search_infeasible_fixed_x():
    res = maximize_collective_steering(0.5, x_policy=0.0)
    assert not res.feasible and res.value == 0.0
    with pytest.raises(InvalidArgument):
        maximize_collective_steering(0.0)
    with pytest.raises(InvalidArgument):
        maximize_collective_steering(0.5, x_policy=-1.0)
