"""Index algebra and differentiation backend tests."""
import math

import numpy as np
import pytest

from tractorlab.tensors import (ArrayField, DiffBackend, FieldHandle,
                                JetOrderError, TensorValue, alt, contract,
                                jet, outer, sym, tangent_down, tangent_up,
                                tractor_down, tractor_up, trace)


def test_jet_constant_field():
    f = ArrayField(lambda x: np.array(3.7), backend=DiffBackend())
    h = FieldHandle(f, (), 0)
    val, d1, d2 = jet(h, np.array([0.1, 0.2]), 2)
    assert np.allclose(d1.data, 0.0)
    assert np.allclose(d2.data, 0.0)


def test_jet_quadratic_exact():
    f = ArrayField(lambda x: np.array(x[0] ** 2), backend=DiffBackend())
    h = FieldHandle(f, (), 0)
    val, d1, d2 = jet(h, np.zeros(3), 2)
    expected = np.diag([2.0, 0.0, 0.0])
    assert np.abs(d2.data - expected).max() < 1e-8


def test_jet_sin_third_order():
    f = ArrayField(lambda x: np.array(math.sin(x[0])),
                   backend=DiffBackend(step=1e-3, step3=1e-3))
    h = FieldHandle(f, (), 0)
    x = np.array([0.3])
    val, d1, d2, d3 = jet(h, x, 3)
    assert abs(d1.data[0] - math.cos(0.3)) < 1e-5
    assert abs(d2.data[0, 0] + math.sin(0.3)) < 1e-5
    assert abs(d3.data[0, 0, 0] + math.cos(0.3)) < 1e-5


def test_jet_order_exceeds_backend():
    f = ArrayField(lambda x: np.array(x[0]),
                   backend=DiffBackend(max_order=1))
    h = FieldHandle(f, (), 0)
    with pytest.raises(JetOrderError):
        jet(h, np.zeros(2), 2)


def test_fd_convergence_second_order():
    # halving the step reduces the first-derivative error by >= 3.5
    x = np.array([0.3])
    errs = []
    for h in (2e-2, 1e-2):
        f = ArrayField(lambda x: np.array(math.sin(x[0])),
                       backend=DiffBackend(step=h))
        _, d1 = jet(FieldHandle(f, (), 0), x, 1)
        errs.append(abs(d1.data[0] - math.cos(0.3)))
    assert errs[0] / errs[1] >= 3.5


def test_contract_identity():
    n = 3
    delta = TensorValue(np.eye(n), (tangent_up(n), tangent_down(n)))
    v = TensorValue(np.array([1.0, 2.0, -0.5]), (tangent_up(n),))
    out = contract(delta, v, [(1, 0)])
    assert np.allclose(out.data, v.data)


def test_contract_inverse_metric_pair():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((3, 3))
    g = A @ A.T + 3 * np.eye(3)
    gt = TensorValue(g, (tangent_down(3), tangent_down(3)), weight=2)
    gi = TensorValue(np.linalg.inv(g), (tangent_up(3), tangent_up(3)),
                     weight=-2)
    out = contract(gt, gi, [(1, 0)])
    assert np.abs(out.data - np.eye(3)).max() < 1e-12
    assert out.weight == 0


def test_epsilon_full_contraction():
    # direct sum over permutations in flat R^3
    from tractorlab.riemann import levi_civita_symbol
    eps = levi_civita_symbol(3)
    lo = TensorValue(eps, tuple(tangent_down(3) for _ in range(3)))
    hi = TensorValue(eps, tuple(tangent_up(3) for _ in range(3)))
    out = contract(lo, hi, [(0, 0), (1, 1), (2, 2)])
    assert out.data == pytest.approx(math.factorial(3))


def test_alt_of_symmetric_is_zero():
    rng = np.random.default_rng(1)
    S = rng.standard_normal((4, 4))
    S = S + S.T
    t = TensorValue(S, (tangent_down(4), tangent_down(4)))
    assert np.abs(alt(t).data).max() < 1e-14


def test_alt_idempotent_and_basis_example():
    rng = np.random.default_rng(2)
    T = TensorValue(rng.standard_normal((3, 3)),
                    (tangent_down(3), tangent_down(3)))
    once = alt(T)
    twice = alt(once)
    assert np.abs(once.data - twice.data).max() < 1e-14
    e = np.zeros((3, 3))
    e[0, 1] = 1.0
    out = alt(TensorValue(e, (tangent_down(3), tangent_down(3))))
    expected = np.zeros((3, 3))
    expected[0, 1], expected[1, 0] = 0.5, -0.5
    assert np.abs(out.data - expected).max() < 1e-15


def test_alt_after_sym_vanishes():
    rng = np.random.default_rng(3)
    T = TensorValue(rng.standard_normal((3, 3, 3)),
                    tuple(tangent_down(3) for _ in range(3)))
    out = alt(sym(T, (0, 1)), (0, 1))
    assert np.abs(out.data).max() < 1e-14


def test_contract_associative_disjoint_pairs():
    rng = np.random.default_rng(4)
    A = TensorValue(rng.standard_normal((3, 3)),
                    (tangent_up(3), tangent_up(3)))
    B = TensorValue(rng.standard_normal((3, 3)),
                    (tangent_down(3), tangent_down(3)))
    both = contract(A, B, [(0, 0), (1, 1)])
    stepwise = trace(contract(A, B, [(0, 0)]), 0, 1)
    assert np.allclose(both.data, stepwise.data)


def test_weight_bookkeeping():
    g = TensorValue(np.eye(2), (tangent_down(2), tangent_down(2)), weight=2)
    gi = TensorValue(np.eye(2), (tangent_up(2), tangent_up(2)), weight=-2)
    out = contract(g, gi, [(0, 0), (1, 1)])
    assert out.weight == 0


def test_tractor_pairing_swaps_sigma_rho():
    n = 2
    up = TensorValue(np.array([1.0, 0, 0, 0.0]), (tractor_up(n),))
    dn = TensorValue(np.array([0.0, 0, 0, 5.0]), (tractor_down(n),))
    # sigma slot of up pairs against rho slot of down
    out = contract(up, dn, [(0, 0)])
    assert out.data == pytest.approx(5.0)


def test_kind_mismatch_rejected():
    a = TensorValue(np.zeros(3), (tangent_up(3),))
    b = TensorValue(np.zeros(5), (tractor_down(3),))
    with pytest.raises(Exception):
        contract(a, b, [(0, 0)])


def test_symmetry_flags():
    anti = np.zeros((3, 3))
    anti[0, 1], anti[1, 0] = 1.0, -1.0
    t = TensorValue(anti, (tangent_down(3), tangent_down(3)))
    assert t.is_antisymmetric()
    assert not t.is_symmetric((0, 1))
