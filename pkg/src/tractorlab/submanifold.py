"""Riemannian and conformal submanifold calculus.

An embedding is a chart map from an m-dimensional parameter chart into the
ambient chart, with derivative access to order 3.  The pack collects induced
metric, projectors, second fundamental form, mean curvature, the oriented
normal frame and normal form, and an intrinsic geometry built from the
pulled-back metric field (so intrinsic curvature is computed independently
rather than through the Gauss equation).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .riemann import (CurvaturePack, GeometrySpec, curvature_pack,
                      rescale)
from .tensors import ArrayField, DiffBackend, alt_array

__all__ = ["EmbeddingSpec", "SubmanifoldPack", "submanifold_pack",
           "gauss_codazzi_ricci_residuals", "conformal_transform_check",
           "pullback_metric_field", "SigmaField"]


class RankDeficientError(RuntimeError):
    pass


@dataclass
class EmbeddingSpec:
    """Chart map of an m-dimensional submanifold into the ambient chart."""
    m: int
    n: int
    phi: ArrayField
    orientation: int = 1

    def jets(self, y, order=3):
        return self.phi.jets(np.asarray(y, dtype=float), order)


class PullbackMetricField(ArrayField):
    """Induced metric on the parameter chart of an embedding.

    First and second derivatives come from the chain rule (embedding 3-jet,
    ambient metric 2-jet); third derivatives fall back to central differences
    of the chain-rule second derivative.
    """

    def __init__(self, geo: GeometrySpec, emb: EmbeddingSpec, step3=1e-2):
        self.geo = geo
        self.emb = emb
        self.step3 = step3
        super().__init__(self._value,
                         backend=DiffBackend(mode="analytic", max_order=3))

    def _value(self, y):
        ph = self.emb.jets(y, 1)
        g = self.geo.metric.value(ph[0])
        return np.einsum("ai,bj,ab->ij", ph[1], ph[1], g)

    def jets(self, y, order):
        y = np.asarray(y, dtype=float)
        if order <= 2:
            return self._chain_jets(y, order)
        out = self._chain_jets(y, 2)
        m = self.emb.m
        h = self.step3
        d3 = np.empty((m, m, m, m, m))
        for c in range(m):
            e = np.zeros(m)
            e[c] = h
            d3[..., c] = (self._chain_jets(y + e, 2)[2]
                          - self._chain_jets(y - e, 2)[2]) / (2 * h)
        return out + [d3]

    def _chain_jets(self, y, order):
        emb, geo = self.emb, self.geo
        ph = emb.jets(y, min(3, order + 1))
        x = ph[0]
        dphi = ph[1]
        gj = geo.metric.jets(x, order)
        g = gj[0]
        G = np.einsum("ai,bj,ab->ij", dphi, dphi, g)
        out = [G]
        if order >= 1:
            d2phi = ph[2]
            dg = gj[1]
            dG = (np.einsum("aik,bj,ab->ijk", d2phi, dphi, g)
                  + np.einsum("ai,bjk,ab->ijk", dphi, d2phi, g)
                  + np.einsum("ai,bj,abc,ck->ijk", dphi, dphi, dg, dphi))
            out.append(dG)
        if order >= 2:
            d3phi = ph[3]
            d2g = gj[2]
            t = (np.einsum("aikl,bj,ab->ijkl", d3phi, dphi, g)
                 + np.einsum("aik,bjl,ab->ijkl", d2phi, d2phi, g)
                 + np.einsum("ail,bjk,ab->ijkl", d2phi, d2phi, g)
                 + np.einsum("ai,bjkl,ab->ijkl", dphi, d3phi, g)
                 + np.einsum("aik,bj,abc,cl->ijkl", d2phi, dphi, dg, dphi)
                 + np.einsum("ai,bjk,abc,cl->ijkl", dphi, d2phi, dg, dphi)
                 + np.einsum("ail,bj,abc,ck->ijkl", d2phi, dphi, dg, dphi)
                 + np.einsum("ai,bjl,abc,ck->ijkl", dphi, d2phi, dg, dphi)
                 + np.einsum("ai,bj,abcd,ck,dl->ijkl", dphi, dphi, d2g,
                             dphi, dphi)
                 + np.einsum("ai,bj,abc,ckl->ijkl", dphi, dphi, dg, d2phi))
            out.append(t)
        return out


def pullback_metric_field(geo, emb):
    return PullbackMetricField(geo, emb)


@dataclass
class SubmanifoldPack:
    """Riemannian submanifold data at one parameter point."""
    q: np.ndarray
    x: np.ndarray
    m: int
    n: int
    d: int
    dphi: np.ndarray            # Pi^a_i
    pack: CurvaturePack         # ambient curvature at x
    g_s: np.ndarray             # induced metric
    gi_s: np.ndarray
    Pi_ia: np.ndarray           # Pi^i_a (orthogonal projection onto T Sigma)
    Nab: np.ndarray             # N^a_b
    II: np.ndarray              # II_ij^c -> [i, j, c]
    IIo: np.ndarray
    H: np.ndarray
    conormals: np.ndarray       # [alpha, a] orthonormal, oriented
    normals: np.ndarray         # raised conormals
    Nform: np.ndarray           # Riemannian normal form, d down indices
    seeds: tuple
    intrinsic: GeometrySpec | None = None

    def tangential(self, v):
        return self.dphi @ (self.Pi_ia @ v)


def _conormal_seeds(g, gi, dphi, d):
    """Coordinate conormals least aligned with the tangent space."""
    n = g.shape[0]
    gs = dphi.T @ g @ dphi
    gsi = np.linalg.inv(gs)
    # tangential projector acting on covectors: (omega Pi)_b
    Pi_ia = gsi @ dphi.T @ g
    Nmat = np.eye(n) - dphi @ Pi_ia
    # residual of dx^a after tangential projection, measured with g^-1
    scores = []
    for a in range(n):
        w = Nmat[a, :]  # row a of N^a_b = components of dx^a . N
        scores.append((-float(w @ gi @ w), a))
    scores.sort()
    return tuple(a for _, a in scores[:d])


def submanifold_pack(geo: GeometrySpec, emb: EmbeddingSpec, q,
                     seeds=None, with_intrinsic=True) -> SubmanifoldPack:
    q = np.asarray(q, dtype=float)
    m, n = emb.m, emb.n
    d = n - m
    ph = emb.jets(q, 2)
    x, dphi, d2phi = ph[0], ph[1], ph[2]
    pack = curvature_pack(geo, x, order=min(3, geo.backend.max_order))
    g, gi = pack.g, pack.gi

    g_s = dphi.T @ g @ dphi
    if np.linalg.matrix_rank(dphi, tol=1e-10) < m:
        raise RankDeficientError(f"embedding differential rank-deficient at {q}")
    gi_s = np.linalg.inv(g_s)
    Pi_ia = gi_s @ dphi.T @ g
    Nab = np.eye(n) - dphi @ Pi_ia

    # second fundamental form: normal part of the ambient Hessian of phi
    hess = d2phi + np.einsum("cde,di,ej->cij", pack.Gamma, dphi, dphi)
    II = np.einsum("cb,bij->ijc", Nab, hess)
    H = np.einsum("ij,ijc->c", gi_s, II) / m
    IIo = II - np.einsum("ij,c->ijc", g_s, H)
    if m == 1:
        IIo = np.zeros_like(II)

    if seeds is None:
        seeds = _conormal_seeds(g, gi, dphi, d)
    raw = [Nab[a, :] for a in seeds]
    conormals = []
    for w in raw:
        for prev in conormals:
            w = w - (prev @ gi @ w) * prev
        nw = math.sqrt(max(w @ gi @ w, 0.0))
        if nw < 1e-12:
            raise RankDeficientError("degenerate conormal seeds")
        conormals.append(w / nw)
    conormals = np.array(conormals)
    normals = conormals @ gi

    # orientation: oriented tangent frame followed by normals must be
    # positively oriented in the ambient chart
    B = np.hstack([dphi, normals.T])
    s = np.sign(np.linalg.det(B)) * geo.orientation * emb.orientation
    if s < 0:
        conormals[-1] = -conormals[-1]
        normals[-1] = -normals[-1]

    Nform = _wedge_rows(conormals)

    intrinsic = None
    if with_intrinsic:
        intrinsic = GeometrySpec(n=m, metric=pullback_metric_field(geo, emb),
                                 backend=DiffBackend(mode="analytic",
                                                     max_order=3),
                                 orientation=emb.orientation)

    return SubmanifoldPack(q=q, x=x, m=m, n=n, d=d, dphi=dphi, pack=pack,
                           g_s=g_s, gi_s=gi_s, Pi_ia=Pi_ia, Nab=Nab, II=II,
                           IIo=IIo, H=H, conormals=conormals, normals=normals,
                           Nform=Nform, seeds=tuple(seeds),
                           intrinsic=intrinsic)


def _wedge_rows(rows):
    """d! Alt(w_1 x ... x w_d) for an array of row covectors."""
    d = rows.shape[0]
    out = rows[0]
    for k in range(1, d):
        p = out.ndim
        coef = math.factorial(p + 1) / math.factorial(p)
        out = coef * alt_array(np.multiply.outer(out, rows[k]))
    return out


# --------------------------------------------------------------------------
# derivatives of pack-derived quantities along the submanifold
# --------------------------------------------------------------------------

class SigmaField:
    """A quantity built from the pack, as a field over the parameter chart.

    ``builder(pack)`` maps a SubmanifoldPack to an array.  Derivatives use
    Richardson-extrapolated central differences with the normal-frame seeds
    frozen at the base point, so frame-dependent quantities stay smooth.
    """

    def __init__(self, geo, emb, builder, with_intrinsic=False):
        self.geo = geo
        self.emb = emb
        self.builder = builder
        self.with_intrinsic = with_intrinsic
        self._seeds = None

    def value(self, q, seeds=None):
        pk = submanifold_pack(self.geo, self.emb, q,
                              seeds=seeds if seeds is not None else self._seeds,
                              with_intrinsic=self.with_intrinsic)
        return np.asarray(self.builder(pk), dtype=float)

    def jet1(self, q, h=1e-2, richardson=True):
        q = np.asarray(q, dtype=float)
        m = self.emb.m
        base = submanifold_pack(self.geo, self.emb, q, with_intrinsic=self.with_intrinsic)
        self._seeds = base.seeds
        v0 = np.asarray(self.builder(base), dtype=float)
        d1 = np.empty(v0.shape + (m,))
        for i in range(m):
            e = np.zeros(m)
            e[i] = h
            big = (self.value(q + e) - self.value(q - e)) / (2 * h)
            if richardson:
                small = (self.value(q + e / 2) - self.value(q - e / 2)) / h
                d1[..., i] = (4 * small - big) / 3
            else:
                d1[..., i] = big
        return v0, d1, base


def gauss_codazzi_ricci_residuals(geo: GeometrySpec, emb: EmbeddingSpec, q):
    """Max-norm residuals of the Gauss, Codazzi and Ricci equations.

    All curvatures are computed independently: the intrinsic one from the
    pulled-back metric field, the normal one from derivatives of the
    orthonormal normal frame.
    """
    sub = submanifold_pack(geo, emb, q)
    m, n, d = sub.m, sub.n, sub.d
    pack = sub.pack
    g = pack.g

    # ambient curvature restricted to Sigma
    R_tttt = np.einsum("abcd,ai,bj,ck,dl->ijkl", pack.R4, sub.dphi, sub.dphi,
                       sub.dphi, sub.dphi)
    if m >= 2:
        ipack = curvature_pack(sub.intrinsic, q, order=2)
        RS = ipack.R4
    else:
        RS = np.zeros((m, m, m, m))
    # R_ijkl = R^S_ijkl + g_cd (II_li^c II_jk^d - II_lj^c II_ik^d)
    gauss_rhs = RS + (np.einsum("cd,lic,jkd->ijkl", g, sub.II, sub.II)
                      - np.einsum("cd,ljc,ikd->ijkl", g, sub.II, sub.II))
    res_gauss = _maxabs(R_tttt - gauss_rhs)

    # Codazzi: Pi Pi Pi R_ab^c_e N^d_c = 2 D_[i II_j]k^d
    lhs_cod = np.einsum("abce,ai,bj,ek,dc->ijkd", pack.Rud, sub.dphi,
                        sub.dphi, sub.dphi, sub.Nab)
    DII = _coupled_derivative_II(geo, emb, q, sub)  # [i, j, k, d]
    rhs_cod = DII - DII.transpose(1, 0, 2, 3)
    res_codazzi = _maxabs(lhs_cod - rhs_cod)

    # Ricci: Pi Pi R_ab^e_f N^c_e N^f_d = Rperp_ij^c_d - 2 g^kl II_k[i^c II_j]ld
    lhs_ric = np.einsum("abef,ai,bj,ce,fd->ijcd", pack.Rud, sub.dphi,
                        sub.dphi, sub.Nab, sub.Nab)
    Rperp = _normal_curvature(geo, emb, q, sub)
    IIdn = np.einsum("ijc,cd->ijd", sub.II, g)
    cross = np.einsum("kl,kic,jld->ijcd", sub.gi_s, sub.II, IIdn)
    rhs_ric = Rperp - (cross - cross.transpose(1, 0, 2, 3))
    res_ricci = _maxabs(lhs_ric - rhs_ric)
    return res_gauss, res_codazzi, res_ricci


def _maxabs(arr):
    return float(np.abs(arr).max()) if arr.size else 0.0


def _coupled_derivative_II(geo, emb, q, sub):
    """D_i II_jk^d with intrinsic Levi-Civita coupled to the normal
    connection on the ambient index."""
    sf = SigmaField(geo, emb, lambda pk: pk.II, with_intrinsic=False)
    II0, dII, _ = sf.jet1(q)
    ipack = curvature_pack(sub.intrinsic, q, order=2)
    GamS = ipack.Gamma
    out = np.moveaxis(dII, -1, 0)  # [i, j, k, d] = partial_i II_jk^d
    # pullback ambient connection acting on the normal-valued index
    out = out + np.einsum("dfe,fi,jke->ijkd", sub.pack.Gamma, sub.dphi, II0)
    out = out - np.einsum("lij,lkd->ijkd", GamS, II0) \
              - np.einsum("lik,jld->ijkd", GamS, II0)
    # project the ambient index back to the normal bundle
    return np.einsum("dc,ijkc->ijkd", sub.Nab, out)


def _omega_at(geo, emb, y, seeds, h_inner=1e-4):
    """Normal-connection coefficients omega_i^{alpha}{}_{beta} at y, using a
    plain central difference of the normal frame with frozen seeds."""
    pk = submanifold_pack(geo, emb, y, seeds=seeds, with_intrinsic=False)
    m = emb.m
    dV = np.empty(pk.normals.shape + (m,))
    for i in range(m):
        e = np.zeros(m)
        e[i] = h_inner
        vp = submanifold_pack(geo, emb, y + e, seeds=seeds,
                              with_intrinsic=False).normals
        vm = submanifold_pack(geo, emb, y - e, seeds=seeds,
                              with_intrinsic=False).normals
        dV[..., i] = (vp - vm) / (2 * h_inner)
    nab = np.moveaxis(dV, -1, 0) + np.einsum("cae,ai,be->ibc",
                                             pk.pack.Gamma, pk.dphi,
                                             pk.normals)
    return np.einsum("ac,ibc->iab", pk.conormals, nab)


def _normal_curvature(geo, emb, q, sub):
    """Curvature of the normal connection from the orthonormal normal frame,
    returned as Rperp_ij^c_d."""
    q = np.asarray(q, dtype=float)
    m = sub.m
    seeds = sub.seeds
    om0 = _omega_at(geo, emb, q, seeds)
    h = 1e-2
    dw = np.empty((m,) + om0.shape)  # dw[j, i, a, b] = partial_j omega_i
    for j in range(m):
        e = np.zeros(m)
        e[j] = h
        big = (_omega_at(geo, emb, q + e, seeds)
               - _omega_at(geo, emb, q - e, seeds)) / (2 * h)
        small = (_omega_at(geo, emb, q + e / 2, seeds)
                 - _omega_at(geo, emb, q - e / 2, seeds)) / h
        dw[j] = (4 * small - big) / 3
    # dw[p, q, ., .] = partial_p omega_q;
    # R^perp frame: partial_i omega_j - partial_j omega_i + [omega_i, omega_j]
    Rfr = (dw - dw.transpose(1, 0, 2, 3)
           + np.einsum("iae,jeb->ijab", om0, om0)
           - np.einsum("jae,ieb->ijab", om0, om0))
    Rperp = np.einsum("ec,ijef,fd->ijcd", sub.normals, Rfr, sub.conormals)
    return Rperp


def conformal_transform_check(geo, emb, omega, q):
    """Residuals of the second-fundamental-form transformation laws.

    II has weight 0 so its trivialised components transform directly; the
    weighted mean curvature has weight -2, so the hatted trivialisation
    carries a factor Omega^-2.
    """
    sub = submanifold_pack(geo, emb, q)
    geo2, upsilon = rescale(geo, omega)
    sub2 = submanifold_pack(geo2, emb, q, seeds=sub.seeds)
    w = float(omega.value(sub.x))
    ups = upsilon(sub.x)
    ups_up = sub.pack.gi @ ups
    Nups = sub.Nab @ ups_up
    II_pred = sub.II - np.einsum("ij,c->ijc", sub.g_s, Nups)
    H_pred = w ** (-2) * (sub.H - Nups)
    r_II = _maxabs(sub2.II - II_pred)
    r_H = _maxabs(sub2.H - H_pred)
    r_IIo = _maxabs(sub2.IIo - sub.IIo)
    return {"II": r_II, "H": r_H, "IIo_invariance": r_IIo}
