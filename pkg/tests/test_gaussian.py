import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sepsteer.errors import InvalidArgument
from sepsteer.gaussian import (
    SIGMA_Z,
    CovarianceMatrix,
    NoiseMatrix,
    Quadrature,
    add_noise,
    beam_splitter,
    beam_splitter_matrix,
    is_physical,
    random_physical_cm,
    restrict,
    squeezed_vacuum,
    symplectic_eigenvalues,
    symplectic_form,
    tensor,
    vacuum,
)
from sepsteer import symbolic

seeds = st.integers(0, 2**32 - 1)


def test_symplectic_form_structure():
    om = symplectic_form(3)
    assert np.allclose(om @ om, -np.eye(6))
    assert np.allclose(om.T, -om)


def test_vacuum():
    assert np.array_equal(vacuum(1).data, np.eye(2))
    assert np.array_equal(vacuum(3).data, np.eye(6))
    assert np.allclose(symplectic_eigenvalues(vacuum(2)), [1, 1])
    with pytest.raises(InvalidArgument):
        vacuum(0)


def test_squeezed_vacuum():
    assert np.allclose(squeezed_vacuum(0, "momentum").data, np.eye(2))
    assert np.allclose(squeezed_vacuum(0.5, Quadrature.MOMENTUM).data, np.diag([np.e, 1 / np.e]))
    assert np.allclose(squeezed_vacuum(0.5, Quadrature.POSITION).data, np.diag([1 / np.e, np.e]))
    with pytest.raises(InvalidArgument):
        squeezed_vacuum(-0.1, "momentum")
    with pytest.raises(InvalidArgument):
        squeezed_vacuum(float("nan"), "momentum")


def test_product_input_matches_closed_form():
    t = 0.37
    cm = tensor(tensor(squeezed_vacuum(t, "momentum", "A"), vacuum(1, ["B"])),
                squeezed_vacuum(t, "position", "C"))
    assert cm.modes == ("A", "B", "C")
    assert np.allclose(cm.data, symbolic.initial(t))


def test_tensor(rng):
    assert np.array_equal(tensor(vacuum(1, ["a"]), vacuum(1, ["b"])).data, vacuum(2).data)
    with pytest.raises(InvalidArgument):
        tensor(vacuum(1, ["a"]), vacuum(1, ["a"]))
    a = random_physical_cm(2, rng, labels=["a", "b"])
    b = random_physical_cm(1, rng, labels=["c"])
    joint = tensor(a, b)
    assert joint.data.shape == (6, 6)
    union = np.sort(np.concatenate([symplectic_eigenvalues(a), symplectic_eigenvalues(b)]))[::-1]
    assert np.allclose(symplectic_eigenvalues(joint), union, atol=1e-9)


def test_beam_splitter_basics():
    assert np.allclose(beam_splitter(vacuum(2, ["a", "b"]), "a", "b").data, np.eye(4))
    t = 0.6
    two = tensor(squeezed_vacuum(t, "momentum", "a"), squeezed_vacuum(t, "position", "b"))
    out = beam_splitter(two, "a", "b")
    assert np.allclose(out.block("a"), np.cosh(2 * t) * np.eye(2))
    assert np.allclose(out.block("b"), np.cosh(2 * t) * np.eye(2))
    assert np.allclose(out.block("a", "b"), np.sinh(2 * t) * SIGMA_Z)
    assert np.allclose(symplectic_eigenvalues(out), [1, 1])
    with pytest.raises(InvalidArgument):
        beam_splitter(two, "a", "a")
    for tau in (0.0, 1.0, 1.5):
        with pytest.raises(InvalidArgument):
            beam_splitter(two, "a", "b", tau)


def test_beam_splitter_relabel():
    out = beam_splitter(vacuum(2, ["a", "b"]), "a", "b", out_labels=("a'", "b'"))
    assert out.modes == ("a'", "b'")


@given(st.floats(0.01, 0.99), st.integers(2, 4), st.sampled_from([1, -1]))
def test_beam_splitter_matrix_is_symplectic_and_orthogonal(tau, n, sign):
    u = beam_splitter_matrix(n, 0, n - 1, tau, sign)
    om = symplectic_form(n)
    assert np.allclose(u @ om @ u.T, om, atol=1e-12)
    assert np.allclose(u @ u.T, np.eye(2 * n), atol=1e-12)


@given(seeds, st.floats(0.05, 0.95))
def test_symplectic_spectrum_invariant_under_beam_splitters(seed, tau):
    cm = random_physical_cm(3, np.random.default_rng(seed), labels=["a", "b", "c"])
    out = beam_splitter(beam_splitter(cm, "a", "c", tau), "b", "c", 1 - tau, sign=-1)
    assert np.allclose(symplectic_eigenvalues(out), symplectic_eigenvalues(cm), atol=1e-9)
    assert is_physical(out)[0]


def test_add_noise():
    v = vacuum(1)
    assert np.array_equal(add_noise(v, np.zeros((2, 2))).data, v.data)
    thermal = add_noise(v, np.eye(2))
    assert np.allclose(thermal.data, 2 * np.eye(2))
    assert np.isclose(is_physical(thermal)[1], 2.0)
    with pytest.raises(InvalidArgument):
        add_noise(v, -np.eye(2))
    with pytest.raises(InvalidArgument):
        add_noise(v, np.eye(4))


def test_noise_matrix_validation():
    NoiseMatrix(np.zeros((2, 2)))
    with pytest.raises(InvalidArgument):
        NoiseMatrix(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(InvalidArgument):
        NoiseMatrix(np.eye(3))


def test_displaced_input_is_product_plus_noise():
    t, x, d_b = 0.3, 0.7, 1.4
    step1 = symbolic.initial(t) + symbolic.displacement_noise(x, d_b)
    assert is_physical(step1)[0]


def test_symplectic_eigenvalues_examples():
    assert np.allclose(symplectic_eigenvalues(np.eye(6)), [1, 1, 1])
    assert np.allclose(symplectic_eigenvalues(np.diag([3.0, 1 / 3])), [1])
    ev = symplectic_eigenvalues(np.diag([2.0, 2.0, 5.0, 5.0]))
    assert np.allclose(ev, [5, 2])
    with pytest.raises(InvalidArgument):
        symplectic_eigenvalues(np.eye(3))


def test_is_physical():
    assert is_physical(vacuum(1)) == (True, 1.0)
    ok, nu = is_physical(CovarianceMatrix(("a",), np.diag([0.5, 0.5])))
    assert not ok and np.isclose(nu, 0.5)
    assert not is_physical(np.diag([1.0, -1.0]))[0]


def test_covariance_validation():
    with pytest.raises(InvalidArgument):
        CovarianceMatrix(("a", "a"), np.eye(4))
    with pytest.raises(InvalidArgument):
        CovarianceMatrix(("a",), np.eye(4))
    with pytest.raises(InvalidArgument):
        CovarianceMatrix(("a",), np.array([[1.0, 0.1], [0.0, 1.0]]))
    cm = vacuum(1)
    with pytest.raises(ValueError):
        cm.data[0, 0] = 5.0


def test_restrict(rng):
    t, x, d_b = 0.4, 0.3, 1.2
    m = np.cosh(2 * t) + x
    step2 = CovarianceMatrix(("A'", "B", "C'"), symbolic.step2(t, x, d_b))
    assert np.allclose(restrict(step2, ["A'"]).data, m * np.eye(2))
    assert restrict(step2, ["C'", "A'"]).modes == ("A'", "C'")
    assert np.array_equal(restrict(step2, step2.modes).data, step2.data)
    step3 = CovarianceMatrix(("A'", "B'", "C''"), symbolic.step3(t, x, d_b))
    expected = (1 + m + d_b * x * (d_b - 2)) / 2
    assert np.allclose(restrict(step3, ["B'"]).data, expected * np.eye(2))
    with pytest.raises(InvalidArgument):
        restrict(step3, [])
    with pytest.raises(InvalidArgument):
        restrict(step3, ["Z"])
    cm = random_physical_cm(4, rng, labels=list("abcd"))
    twice = restrict(restrict(cm, ["a", "b", "c"]), ["b", "c"])
    assert np.array_equal(twice.data, restrict(cm, ["b", "c"]).data)


def test_json_round_trip(rng):
    cm = random_physical_cm(3, rng, labels=["A", "B", "C"])
    back = CovarianceMatrix.from_json(cm.to_json())
    assert back.modes == cm.modes
    assert np.array_equal(back.data, cm.data)
    flat = {"modes": list(cm.modes), "data": cm.data.ravel().tolist()}
    assert np.array_equal(CovarianceMatrix.from_dict(json.loads(json.dumps(flat))).data, cm.data)


@given(seeds, st.integers(1, 4))
def test_random_cms_are_physical(seed, n):
    cm = random_physical_cm(n, np.random.default_rng(seed))
    ok, nu = is_physical(cm)
    assert ok and nu >= 1 - 1e-9
