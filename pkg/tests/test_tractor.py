"""Tractor bundle tests: metric, connection, Thomas operator, curvature,
volume form, Hodge star, parallel transport, conformal bookkeeping."""
import math

import numpy as np
import pytest

from tractorlab import geolib
from tractorlab import tractor as tr
from tractorlab.riemann import curvature_pack, rescale
from tractorlab.tensors import (ANALYTIC, ArrayField, DiffBackend,
                                FieldHandle, TensorValue, alt_array, contract,
                                tractor_down, tractor_up)


def _hpair(geo, x):
    lo, hi = tr.tractor_metric(geo, x)
    def dot(u, v):
        return float(contract(contract(
            lo.value, TensorValue(u, (tractor_up(geo.n),)), [(0, 0)]),
            TensorValue(v, (tractor_up(geo.n),)), [(0, 0)]).data)
    return dot, lo, hi


def test_tractor_metric_blocks():
    geo = geolib.sphere(3)
    x = np.array([0.2, -0.1, 0.3])
    dot, lo, hi = _hpair(geo, x)
    X = tr.canonical_X(3)
    assert dot(X, X) == 0.0
    ev = np.linalg.eigvalsh(lo.data)
    assert (ev > 0).sum() == 4 and (ev < 0).sum() == 1
    # h h^-1 acts as the identity
    v = np.array([0.3, -0.2, 0.7, 1.1, 0.05])
    lowered = contract(lo.value, TensorValue(v, (tractor_up(3),)), [(0, 0)])
    raised = contract(hi.value, lowered, [(0, 0)])
    assert np.abs(raised.data - v).max() < 1e-12


def test_connection_flat_slot_identities():
    geo = geolib.euclidean(3)
    x = np.array([0.1, 0.2, -0.1])
    Xf = FieldHandle(ArrayField(lambda y: tr.canonical_X(3),
                                backend=DiffBackend()), (tractor_up(3),), 0)
    nab = tr.tractor_connection_apply(geo, Xf, x)
    expected = np.zeros((5, 3))
    expected[1:4] = np.eye(3)   # nabla_a X = Z_a
    assert np.abs(nab.data - expected).max() < 1e-10
    # the constant sigma-slot tractor has flat derivative in the middle
    # slot only through the g rho-coupling, which vanishes when rho = 0
    Yf = FieldHandle(ArrayField(lambda y: tr.make_tractor(3, sigma=1.0),
                                backend=DiffBackend()), (tractor_up(3),), 0)
    nab = tr.tractor_connection_apply(geo, Yf, x)
    assert np.abs(nab.data).max() < 1e-10


def test_connection_metric_preservation():
    geo = geolib.sphere(3)
    x = np.array([0.2, -0.1, 0.3])
    rng = np.random.default_rng(0)
    c1 = rng.standard_normal(5)
    c2 = rng.standard_normal((5, 3))
    d1 = rng.standard_normal(5)
    d2 = rng.standard_normal((5, 3))

    def tf(y):
        return c1 + c2 @ y

    def sf(y):
        return d1 + d2 @ y

    T = FieldHandle(ArrayField(tf, backend=DiffBackend()), (tractor_up(3),), 0)
    S = FieldHandle(ArrayField(sf, backend=DiffBackend()), (tractor_up(3),), 0)
    nT = tr.tractor_connection_apply(geo, T, x).data
    nS = tr.tractor_connection_apply(geo, S, x).data
    h = 1e-6
    worst = 0.0
    for a in range(3):
        e = np.zeros(3)
        e[a] = h
        dp, _, _ = _hpair(geo, x + e)
        dm, _, _ = _hpair(geo, x - e)
        lhs = (dp(tf(x + e), sf(x + e)) - dm(tf(x - e), sf(x - e))) / (2 * h)
        dot, _, _ = _hpair(geo, x)
        rhs = dot(nT[:, a], sf(x)) + dot(tf(x), nS[:, a])
        worst = max(worst, abs(lhs - rhs))
    assert worst < 1e-8


def test_scale_tractor_parallel_on_sphere():
    geo = geolib.sphere(4)
    If = tr.scale_tractor_field(geo)
    for x in (np.zeros(4), np.array([0.3, -0.2, 0.1, 0.4])):
        nab = tr.tractor_connection_apply(geo, If, x)
        assert np.abs(nab.data).max() < 1e-6


def test_scale_tractor_squared_constant():
    # the recorded value on the unit round sphere is -1 in these conventions
    geo = geolib.sphere(4)
    rng = np.random.default_rng(1)
    vals = []
    for _ in range(10):
        x = rng.uniform(-0.5, 0.5, size=4)
        I = tr.scale_tractor(geo, x)
        dot, _, _ = _hpair(geo, x)
        vals.append(dot(I.data, I.data))
    assert max(vals) - min(vals) < 1e-6
    assert vals[0] == pytest.approx(-1.0, abs=1e-8)


def test_thomas_d_flat_unit_density():
    geo = geolib.euclidean(4)
    one = FieldHandle(geolib.constant_scalar(4, 1.0), (), 1)
    D = tr.thomas_D(geo, one, 1, np.array([0.1, 0.2, 0.3, -0.1]))
    assert np.abs(D.data / 4 - tr.make_tractor(4, sigma=1.0)).max() < 1e-12


def test_thomas_d_sphere_unit_density():
    geo = geolib.sphere(4)
    x = np.zeros(4)
    pk = curvature_pack(geo, x)
    one = FieldHandle(geolib.constant_scalar(4, 1.0), (), 1)
    D = tr.thomas_D(geo, one, 1, x).data / 4
    assert D[0] == pytest.approx(1.0)
    assert np.abs(D[1:5]).max() < 1e-9
    assert D[5] == pytest.approx(-pk.J / 4, abs=1e-9)
    assert pk.J == pytest.approx(pk.Scal / (2 * 3), abs=1e-9)


def test_tractor_curvature_conformally_flat():
    geo = geolib.sphere(4)
    Om = tr.tractor_curvature(geo, np.array([0.2, -0.1, 0.4, 0.25]))
    assert np.abs(Om.data).max() < 1e-5


def test_tractor_curvature_commutator_oracle():
    geo = geolib.random_metric(4, seed=3)
    x = np.array([0.1, -0.05, 0.2, 0.15])
    rng = np.random.default_rng(5)
    e1 = rng.standard_normal(6)
    e2 = rng.standard_normal((6, 4))
    e3 = rng.standard_normal((6, 4, 4))
    e3 = e3 + e3.transpose(0, 2, 1)

    def phif(y):
        return e1 + e2 @ y + 0.5 * np.einsum("iab,a,b->i", e3, y, y)

    Phi = FieldHandle(ArrayField(phif, backend=DiffBackend()),
                      (tractor_up(4),), 0)
    pk = curvature_pack(geo, x, order=3)
    conn = tr.ConnData.from_pack(pk)
    jets = Phi.field.jets(x, 2)
    _, nab2 = tr.covariant_jet(conn, jets, Phi.indices, order=2)
    lhs = np.einsum("Cba->abC", nab2) - np.einsum("Cab->abC", nab2)
    Om = tr.tractor_curvature(geo, x).data
    R = tr.raise_mat(pk)
    Om_up = np.einsum("CE,abED->abCD", R, Om)
    rhs = np.einsum("abCD,D->abC", Om_up, tr.pair_flip(phif(x), 0))
    assert np.abs(lhs - rhs).max() < 1e-4


def test_tractor_curvature_s2s2_weyl_block():
    # tangent-slot part equals the Kulkarni-Nomizu Weyl expression
    geo = geolib.s2s2()
    x = np.array([0.15, -0.2, 0.3, 0.1])
    pk = curvature_pack(geo, x, order=3)
    Om = tr.tractor_curvature(geo, x).data
    g1 = np.zeros((4, 4))
    g1[:2, :2] = pk.g[:2, :2]
    g2 = np.zeros((4, 4))
    g2[2:, 2:] = pk.g[2:, 2:]

    def kn(A, B):
        return (np.einsum("ac,bd->abcd", A, B) - np.einsum("ad,bc->abcd", A, B)
                + np.einsum("ac,bd->abcd", B, A) - np.einsum("ad,bc->abcd", B, A))

    W_expected = (kn(g1, g1) - kn(g1, g2) + kn(g2, g2)) / 3.0
    assert np.abs(Om[:, :, 1:5, 1:5] - W_expected).max() < 1e-5
    assert np.abs(pk.W4 - W_expected).max() < 1e-8


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_hodge_star_double(k):
    n = 3
    geo = geolib.sphere(n)
    x = np.array([0.2, -0.1, 0.3])
    rng = np.random.default_rng(k)
    F = alt_array(rng.standard_normal((n + 2,) * k))
    Fo = tr.TractorFormObject(
        TensorValue(F, tuple(tractor_down(n) for _ in range(k))), geo)
    ss = tr.hodge_star(tr.hodge_star(Fo, x), x)
    sign = -(-1) ** (k * (n - k))
    assert np.abs(ss.data - sign * F).max() < 1e-12


def test_volume_form_normalisation():
    geo = geolib.sphere(3)
    x = np.array([0.2, -0.1, 0.3])
    pk = curvature_pack(geo, x)
    eps = tr.tractor_volume_form(geo, x).data
    R = tr.raise_mat(pk)
    up = eps
    for ax in range(5):
        up = np.moveaxis(np.tensordot(R, up, axes=([1], [ax])), 0, ax)
    dn = eps
    for ax in range(5):
        dn = tr.pair_flip(dn, ax)
    total = np.tensordot(up, dn, axes=(range(5), range(5)))
    assert total == pytest.approx(-math.factorial(5), rel=1e-12)


def test_volume_form_parallel():
    geo = geolib.sphere(3)
    x = np.array([0.2, -0.1, 0.3])
    Ef = tr.tractor_volume_form_field(geo)
    nab = tr.tractor_connection_apply(geo, Ef, x)
    assert np.abs(nab.data).max() < 1e-8


def test_wedge_leibniz():
    geo = geolib.sphere(3)
    x = np.array([0.1, -0.2, 0.25])
    rng = np.random.default_rng(7)
    A1 = alt_array(rng.standard_normal((5, 5)))
    A2 = rng.standard_normal((5, 5, 3))
    B1 = rng.standard_normal(5)
    B2 = rng.standard_normal((5, 3))

    def Ff(y):
        return A1 + alt_array(np.einsum("ABa,a->AB", A2, y - x), (0, 1))

    def Gf(y):
        return B1 + B2 @ (y - x)

    FG = FieldHandle(ArrayField(
        lambda y: tr.wedge(Ff(y), Gf(y)), backend=DiffBackend()),
        tuple(tractor_down(3) for _ in range(3)), 0)
    F = FieldHandle(ArrayField(Ff, backend=DiffBackend()),
                    (tractor_down(3), tractor_down(3)), 0)
    G = FieldHandle(ArrayField(Gf, backend=DiffBackend()),
                    (tractor_down(3),), 0)
    nFG = tr.tractor_connection_apply(geo, FG, x).data
    nF = tr.tractor_connection_apply(geo, F, x).data
    nG = tr.tractor_connection_apply(geo, G, x).data
    for a in range(3):
        rhs = tr.wedge(nF[..., a], Gf(x)) + tr.wedge(Ff(x), nG[..., a])
        assert np.abs(nFG[..., a] - rhs).max() < 1e-8


def test_parallel_transport_flat_closed_loop():
    geo = geolib.euclidean(3)

    def loop(t):
        s = 2 * np.pi * t
        return 0.5 * np.array([np.cos(s) - 1, np.sin(s), 0.0])

    rng = np.random.default_rng(3)
    T0 = tr.TractorObject(TensorValue(rng.standard_normal(5),
                                      (tractor_up(3),)), geo)
    T1 = tr.parallel_transport(geo, loop, T0, 0.0, 1.0, steps=300)
    assert np.abs(T1.data - T0.data).max() < 1e-8


def test_parallel_transport_norm_and_holonomy():
    geo = geolib.sphere(3)

    def loop(t):
        s = 2 * np.pi * t
        return 0.4 * np.array([np.cos(s) - 1.0, np.sin(s), 0.3 * np.sin(2 * s)])

    rng = np.random.default_rng(4)
    dot0, lo, _ = _hpair(geo, loop(0.0))
    v = rng.standard_normal(5)
    T1 = tr.parallel_transport(
        geo, loop, tr.TractorObject(TensorValue(v, (tractor_up(3),)), geo),
        0.0, 1.0, steps=800)
    assert abs(dot0(T1.data, T1.data) - dot0(v, v)) < 1e-8
    M = np.zeros((5, 5))
    for i in range(5):
        e = np.zeros(5)
        e[i] = 1.0
        M[:, i] = tr.parallel_transport(
            geo, loop, tr.TractorObject(TensorValue(e, (tractor_up(3),)),
                                        geo), 0.0, 1.0, steps=800).data
    H = lo.data
    assert np.abs(M.T @ H @ M - H).max() < 1e-7


def test_rescale_triple_relation():
    geo = geolib.random_metric(4, seed=11)
    omega = geolib.random_conformal_factor(4, seed=12)
    sig = geolib.random_conformal_factor(4, seed=13)
    x = np.array([0.1, -0.2, 0.15, 0.05])
    geoh, upsilon = rescale(geo, omega)
    pk = curvature_pack(geo, x, order=3)
    from tractorlab.jets import Jet3

    def to_jet(f, order):
        pads = [np.zeros((4,) * k) for k in range(order + 1, 4)]
        return Jet3(4, f[0], *(list(f[1:]) + pads))

    class Prod(ArrayField):
        def __init__(self):
            super().__init__(lambda y: sig.value(y) * omega.value(y),
                             backend=DiffBackend(mode=ANALYTIC, max_order=3))

        def jets(self, y, order):
            Q = to_jet(sig.jets(y, order), order) * to_jet(
                omega.jets(y, order), order)
            return [np.asarray(Q.f), Q.g, Q.h, Q.t][:order + 1]

    I_g = tr.thomas_D(geo, FieldHandle(sig, (), 1), 1, x).data / 4
    I_h = tr.thomas_D(geoh, FieldHandle(Prod(), (), 1), 1, x).data / 4
    M = tr.rescale_triple_matrix(pk, upsilon(x), variance="down")
    w0 = float(omega.value(x))
    pred = tr.rescale_component_weights(
        w0, tr.slot_weights(4, "down")) * (M @ I_g)
    assert np.abs(I_h - pred).max() < 1e-6


def test_canonical_tractor_invariant():
    # X carries weight 1; its trivialised components never change
    w = tr.slot_weights(4, "up") + 1.0
    factors = tr.rescale_component_weights(1.7, w)
    X = tr.canonical_X(4)
    assert np.abs(factors * X - X).max() == 0.0


def test_mobius_error_without_schouten():
    from tractorlab.riemann import GeometrySpec
    geo2 = GeometrySpec(n=2, metric=geolib.euclidean(2).metric,
                        backend=DiffBackend())
    with pytest.raises(tr.MobiusStructureError):
        tr.scale_tractor(geo2, np.zeros(2))
