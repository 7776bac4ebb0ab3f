import numpy as np
import pytest
from hypothesis import given, strategies as st

from sepsteer import symbolic
from sepsteer.correlations import (
    ModePartition,
    epr_variance_product,
    gaussian_steering,
    is_entangled_across,
    is_fully_separable_by_construction,
    partial_transpose,
    ppt_min_eigenvalue,
    schur_complement,
    steering,
)
from sepsteer.errors import DegenerateInput, InvalidArgument
from sepsteer.gaussian import (
    SIGMA_Z,
    CovarianceMatrix,
    beam_splitter,
    random_physical_cm,
    tensor,
    vacuum,
)
from sepsteer.protocols import ThresholdKind, analytic_threshold

seeds = st.integers(0, 2**32 - 1)


def tmsv(t, labels=("a", "b")):
    c, s = np.cosh(2 * t), np.sinh(2 * t)
    return CovarianceMatrix(labels, np.block([[c * np.eye(2), s * SIGMA_Z], [s * SIGMA_Z, c * np.eye(2)]]))


def step3_cm(t, x, d_b):
    return CovarianceMatrix(("A'", "B'", "C''"), symbolic.step3(t, x, d_b))


def test_partition_validation():
    with pytest.raises(InvalidArgument):
        ModePartition((), ("b",))
    with pytest.raises(InvalidArgument):
        ModePartition(("a",), ("a", "b"))
    part = ModePartition.of("a", ["b", "c"])
    assert part.party_a == ("a",) and part.party_b == ("b", "c")
    assert part.reversed() == ModePartition(("b", "c"), ("a",))


def test_product_state_has_no_steering(rng):
    cm = tensor(random_physical_cm(1, rng, labels=["a"]), random_physical_cm(1, rng, labels=["b"]))
    rep = gaussian_steering(cm, ModePartition.of("a", "b"))
    assert rep.value == 0 and rep.sub_unity_eigenvalues == ()


def test_two_mode_squeezed_vacuum():
    t = 0.4
    rep = gaussian_steering(tmsv(t), ModePartition.of("a", "b"))
    nu = 1 / np.cosh(2 * t)
    assert rep.value == pytest.approx(-np.log(nu), abs=1e-12)
    assert np.allclose(rep.schur_complement, nu * np.eye(2))


def test_steering_closed_form_at_t_03():
    t = 0.3
    x = analytic_threshold(ThresholdKind.SEP_C_AB, t)
    cm = step3_cm(t, x, np.tanh(2 * t) + 1)
    c = np.cosh(2 * t)
    g = steering(cm, "A'", "B'")
    assert g == pytest.approx(np.log(2 * c / (c + 1)), abs=1e-12)
    assert g == pytest.approx(0.0814537469, abs=1e-9)
    assert steering(cm, "B'", "A'") == 0.0


@pytest.mark.parametrize("t", np.linspace(0.05, 1.5, 12))
def test_reverse_steering_vanishes_above_threshold(t):
    d_b = np.tanh(2 * t) + 1
    x0 = analytic_threshold(ThresholdKind.SEP_C_AB, t)
    for x in (x0, 1.5 * x0, 3 * x0):
        assert steering(step3_cm(t, x, d_b), "B'", "A'") == 0.0


def test_degenerate_block():
    cm = CovarianceMatrix(("a", "b"), np.diag([1e-14, 1e14, 1.0, 1.0]))
    with pytest.raises(DegenerateInput, match="a"):
        schur_complement(cm, ModePartition.of("a", "b"))


def test_epr_product():
    rep = epr_variance_product(vacuum(2, ["a", "b"]), ModePartition.of("a", "b"))
    assert rep.product == 1.0 and rep.gain_x == (0.0,) and rep.gain_p == (0.0,)
    t = 0.3
    cm = step3_cm(t, analytic_threshold(ThresholdKind.SEP_C_AB, t), np.tanh(2 * t) + 1)
    e = epr_variance_product(cm, ModePartition.of("A'", "B'"))
    c = np.cosh(2 * t)
    assert e.product == pytest.approx((c + 1) / (2 * c), abs=1e-12)
    assert e.product == pytest.approx(0.9217753438, abs=1e-9)
    assert e.product == pytest.approx(e.inferred_var_x ** 0.5 * e.inferred_var_p ** 0.5)
    with pytest.raises(InvalidArgument):
        epr_variance_product(cm, ModePartition.of("A'", ("B'", "C''")))


@given(seeds)
def test_standard_form_identity(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.uniform(1, 3, 2)
    cmax = np.sqrt((a - 1 / b) * (b - 1 / a)) * 0.99
    c1, c2 = rng.uniform(-cmax, cmax), rng.uniform(-cmax, cmax)
    data = np.array([[a, 0, c1, 0], [0, a, 0, c2], [c1, 0, b, 0], [0, c2, 0, b]])
    cm = CovarianceMatrix(("a", "b"), data)
    part = ModePartition.of("a", "b")
    try:
        g = gaussian_steering(cm, part).value
    except InvalidArgument:  # not every draw is a valid state
        return
    e = epr_variance_product(cm, part).product
    assert abs(g - max(0.0, -np.log(e))) < 1e-9


def test_partial_transpose_flips_momentum():
    pt = partial_transpose(tmsv(0.5), ["b"])
    assert np.allclose(pt.block("a", "b"), np.sinh(1.0) * np.eye(2))


def test_ppt():
    assert ppt_min_eigenvalue(vacuum(2, ["a", "b"]), "a") == pytest.approx(1.0)
    t = 0.5
    assert ppt_min_eigenvalue(tmsv(t), ["a"]) == pytest.approx(np.exp(-2 * t))
    assert is_entangled_across(tmsv(t), ["b"])
    with pytest.raises(InvalidArgument):
        ppt_min_eigenvalue(tmsv(t), [])
    with pytest.raises(InvalidArgument):
        ppt_min_eigenvalue(tmsv(t), ["a", "b"])


@pytest.mark.parametrize("t", [0.2, 0.4, 0.6])
def test_ppt_at_analytic_threshold(t):
    d_b = np.tanh(2 * t) + 1
    x = analytic_threshold(ThresholdKind.SEP_C_AB, t)
    cm = CovarianceMatrix(("A'", "B", "C'"), symbolic.step2(t, x, d_b))
    assert ppt_min_eigenvalue(cm, "C'") == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("t", [0.1, 0.5, 1.0, 1.4])
@pytest.mark.parametrize("x", [0.01, 0.5, 3.0])
@pytest.mark.parametrize("d_b", [0.5, 1.0, 2.0])
def test_b_is_separable_in_step2(t, x, d_b):
    cm = CovarianceMatrix(("A'", "B", "C'"), symbolic.step2(t, x, d_b))
    assert ppt_min_eigenvalue(cm, "B") >= 1 - 1e-9


def test_fully_separable_certificate():
    t = 0.4
    g_in = CovarianceMatrix(("A", "B", "C"), symbolic.initial(t))
    assert is_fully_separable_by_construction(g_in, np.zeros((6, 6)))
    for x in (0.1, 1.0, 5.0):
        for d_b in (0.3, 1.0, 2.0):
            assert is_fully_separable_by_construction(g_in, symbolic.displacement_noise(x, d_b))
    assert not is_fully_separable_by_construction(g_in, -np.eye(6))
    with pytest.raises(InvalidArgument):
        is_fully_separable_by_construction(tmsv(0.3), np.zeros((4, 4)))


@given(seeds)
def test_steering_implies_npt(seed):
    rng = np.random.default_rng(seed)
    cm = random_physical_cm(3, rng, max_squeeze=0.8, max_thermal=1.3, labels=["a", "b", "c"])
    for a, b in ((("a",), ("b", "c")), (("b", "c"), ("a",))):
        if gaussian_steering(cm, ModePartition(a, b)).value > 1e-9:
            assert ppt_min_eigenvalue(cm, ("a",)) < 1


@given(seeds, st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_local_beam_splitters_leave_steering_unchanged(seed, tau_a, tau_b):
    cm = random_physical_cm(4, np.random.default_rng(seed), labels=["a1", "a2", "b1", "b2"])
    part = ModePartition(("a1", "a2"), ("b1", "b2"))
    moved = beam_splitter(beam_splitter(cm, "a1", "a2", tau_a), "b2", "b1", tau_b, sign=-1)
    assert abs(gaussian_steering(moved, part).value - gaussian_steering(cm, part).value) < 1e-9


@given(seeds)
def test_noise_on_steered_party_is_monotone(seed):
    rng = np.random.default_rng(seed)
    cm = random_physical_cm(3, rng, labels=["a", "b1", "b2"])
    part = ModePartition(("a",), ("b1", "b2"))
    w = rng.normal(size=(4, 4))
    data = cm.data.copy()
    data[2:, 2:] += w @ w.T
    noisy = CovarianceMatrix(cm.modes, data)
    assert gaussian_steering(noisy, part).value <= gaussian_steering(cm, part).value + 1e-12


@given(seeds)
def test_relabeling_is_harmless(seed):
    cm = random_physical_cm(3, np.random.default_rng(seed), labels=["a", "b", "c"])
    renamed = cm.relabel({"a": "x", "b": "y", "c": "z"})
    assert gaussian_steering(cm, ModePartition.of("a", ("b", "c"))).value == \
        gaussian_steering(renamed, ModePartition.of("x", ("y", "z"))).value
    assert ppt_min_eigenvalue(cm, "b") == ppt_min_eigenvalue(renamed, "y")


def test_report_serializes():
    rep = gaussian_steering(tmsv(0.2), ModePartition.of("a", "b")).to_dict()
    assert set(rep) == {"value", "sub_unity_eigenvalues", "schur_complement"}
    e = epr_variance_product(tmsv(0.2), ModePartition.of("a", "b")).to_dict()
    assert e["product"] > 0
