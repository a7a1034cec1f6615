"""Conformal Killing-Yano forms, their tractor splitting, conserved
quantities along distinguished submanifolds, and zero-locus scanning."""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .riemann import curvature_pack
from .submanifold import EmbeddingSpec, SigmaField
from .subtractor import SubTractorContext, _hup, _pairJ
from .tensors import alt_array, sym_array, tractor_down, tangent_down
from . import tractor as tr

__all__ = ["SplitTractor", "ky_residual", "bgg_split", "conserved_quantity",
           "zero_locus_scan", "ScanReport"]


def _cov_jets(geo, kspec, x, order):
    """Covariant derivative arrays of the (trivialised) form components."""
    pack = curvature_pack(geo, x, order=2)
    jets = kspec.field.jets(x, order)
    idxs = tuple(tangent_down(geo.n) for _ in range(kspec.degree - 1))
    conn = tr.ConnData.from_pack(pack)
    covs = tr.covariant_jet(conn, jets, idxs, order=order) if order >= 1 else []
    return pack, jets[0], covs


def _trace_embed_constant(n, p, g, gi):
    """Proportionality constant of lambda -> trace(g wedge lambda)."""
    if p == 1:
        return float(n)
    rng = np.random.default_rng(12345)
    lam = alt_array(rng.standard_normal((n,) * (p - 1)))
    emb = _trace_embed(g, lam)
    tr_emb = np.einsum("ab,ab...->...", gi, emb)
    denom = float(np.tensordot(lam, lam, axes=(range(p - 1), range(p - 1))))
    return float(np.tensordot(tr_emb, lam,
                              axes=(range(p - 1), range(p - 1)))) / denom


def _trace_embed(g, lam):
    """g_{a1 [a2} lambda_{a3..]}: the pure-trace component of grad k."""
    p = lam.ndim + 1
    core = np.multiply.outer(g, lam)  # [a1, a2, a3..]
    return alt_array(core, axes=tuple(range(1, p + 1)))


def ky_decompose(geo, kspec, x):
    """(skew, middle, trace) parts of nabla k at x."""
    n = geo.n
    d = kspec.degree
    pack, k0, covs = _cov_jets(geo, kspec, x, 1)
    T = np.moveaxis(covs[0], -1, 0)  # [a1, a2..ad]
    if d == 1:
        # almost-Einstein operator: TF(nabla nabla sigma + P sigma)
        pack, k0, covs = _cov_jets(geo, kspec, x, 2)
        hess = covs[1]  # [b, a] second covariant derivative
        E = sym_array(hess) + pack.P * float(k0)
        TF = E - np.einsum("ab,cd,cd->ab", pack.g, pack.gi, E) / n
        return None, TF, None
    phi = alt_array(T)
    trace = np.einsum("ab,ab...->...", pack.gi, T)
    c = _trace_embed_constant(n, d - 1, pack.g, pack.gi)
    lam = trace / c
    TP = _trace_embed(pack.g, lam) if d > 1 else lam * pack.g
    M = T - phi - TP
    return phi, M, lam


def ky_residual(geo, kspec, x):
    """Norm of the middle (trace-free mixed-symmetry) part of nabla k."""
    _, M, _ = ky_decompose(geo, kspec, x)
    return float(np.abs(M).max())


@dataclass
class SplitTractor:
    K: np.ndarray
    degree: int
    normality_residual: float
    K2: float
    causal: str
    simplicity_residual: float
    simple: bool


def _split_components(geo, kspec, x):
    """Tractor components of the BGG splitting at x."""
    n = geo.n
    d = kspec.degree
    if d == 1:
        pack, k0, covs = _cov_jets(geo, kspec, x, 2)
        lap = float(np.einsum("ba,ab->", pack.gi, covs[1]))
        return tr.make_tractor(n, sigma=float(k0), mu=covs[0],
                               rho=-(lap + pack.J * float(k0)) / n)
    pack, k0, covs = _cov_jets(geo, kspec, x, 2)
    grad = np.moveaxis(covs[0], -1, 0)            # [a1, a2..ad]
    div = np.einsum("ab,ab...->...", pack.gi, grad)   # nabla^c k_{c a3..}
    K = tr.form_Y(k0, n)
    K = K + tr.form_Z(alt_array(grad), n) / d
    if d >= 2:
        K = K + (d - 1) / (n - d + 2) * tr.form_W(div, n)
    # X-slot: (1/(n(d-1))) nabla^b M_{b a2..} - (1/(n-d+2)) nabla_[a2 div_{a3..]}
    #         - P_[a2^b k_{b a3..]}
    divM = _div_middle_part(geo, kspec, x, pack)
    # covs[1] axes: [form a2'..ad', inner c, outer b];
    # nabla_b nabla^c k_{c a3..} contracts the inner index with the first
    # form index
    gdiv = np.einsum("ce,e...cb->b...", pack.gi, covs[1])
    beta = (divM / (n * (d - 1))
            - alt_array(gdiv) / (n - d + 2)
            - alt_array(np.einsum("ab,b...->a...",
                                  pack.P @ pack.gi, k0)))
    K = K - tr.form_X(beta, n)
    return K


def _div_middle_part(geo, kspec, x, pack):
    """nabla^b of the middle projection of nabla k (vanishes on solutions;
    kept for generality).  FD of the pointwise decomposition."""
    n = geo.n
    d = kspec.degree

    def M_at(y):
        return ky_decompose(geo, kspec, y)[1]

    h = 1e-4
    M0 = M_at(x)
    dM = np.empty(M0.shape + (n,))
    for a in range(n):
        e = np.zeros(n)
        e[a] = h
        dM[..., a] = (M_at(x + e) - M_at(x - e)) / (2 * h)
    # covariant derivative then divergence on the first index
    Gam = pack.Gamma
    cov = np.moveaxis(dM, -1, 0)  # [c, b, a2..]
    for ax in range(d):
        moved = np.moveaxis(M0, ax, -1)
        corr = -np.einsum("ecf,...e->c...f", Gam, moved)
        cov = cov + np.moveaxis(corr, -1, ax + 1)
    return np.einsum("cb,cb...->...", pack.gi, cov)


def bgg_split(geo, kspec, x, simplicity_tol=None):
    """BGG splitting with normality, causal type and simplicity report."""
    n = geo.n
    d = kspec.degree
    x = np.asarray(x, dtype=float)
    K = _split_components(geo, kspec, x)

    # normality: tractor derivative of the K field
    def K_at(y):
        return _split_components(geo, kspec, y)

    h = 1e-3
    dK = np.empty(K.shape + (n,))
    for a in range(n):
        e = np.zeros(n)
        e[a] = h
        dK[..., a] = (K_at(x + e) - K_at(x - e)) / (2 * h)
    pack = curvature_pack(geo, x, order=min(3, geo.backend.max_order))
    conn = tr.ConnData.from_pack(pack)
    Md = conn.matrix(tractor_down(n))
    nab = np.moveaxis(dK, -1, 0)
    for ax in range(max(d, 1)):
        moved = np.moveaxis(K, ax, -1)
        corr = np.einsum("ine,...e->i...n", Md, moved)
        nab = nab + np.moveaxis(corr, -1, ax + 1)
    normality = float(np.abs(nab).max())

    # causal type
    Hup = _hup(pack.gi)
    acc = K
    for ax in range(max(d, 1)):
        acc = np.moveaxis(np.tensordot(Hup, acc, axes=([1], [ax])), 0, ax)
    K2 = float(np.tensordot(acc, K, axes=(range(K.ndim), range(K.ndim))))
    scale2 = float(np.abs(K).max()) ** 2
    if K2 < -1e-10 * max(scale2, 1e-30):
        causal = "timelike"
    elif K2 > 1e-10 * max(scale2, 1e-30):
        causal = "spacelike"
    else:
        causal = "null"

    # simplicity (Pluecker): (v . K) wedge K over a tractor basis
    simp = 0.0
    if d >= 2:
        J = _pairJ(n)
        for I in range(n + 2):
            v = J[I]  # pairing of the basis up-vector with the first index
            contr = np.tensordot(v, K, axes=([0], [0]))
            w = tr.wedge(contr, K)
            simp = max(simp, float(np.abs(w).max()))
    if simplicity_tol is None:
        simplicity_tol = (1e-8 if geo.metric.backend.mode == "analytic"
                          else 1e-4)
    simple = bool(simp <= simplicity_tol * max(scale2, 1e-30))
    return SplitTractor(K=K, degree=d, normality_residual=normality, K2=K2,
                        causal=causal, simplicity_residual=simp,
                        simple=simple)


# --------------------------------------------------------------------------
# conserved quantities
# --------------------------------------------------------------------------

def _full_pair(A, B, Hup):
    acc = A
    for ax in range(A.ndim):
        acc = np.moveaxis(np.tensordot(Hup, acc, axes=([1], [ax])), 0, ax)
    return float(np.tensordot(acc, B, axes=(range(A.ndim), range(A.ndim))))


def conserved_quantity(geo, emb, kspec, q, obstruction=True):
    """K . N along the submanifold: value, tangential-derivative residual,
    the explicit slot evaluation, and the Weyl obstruction prediction."""
    ctx = SubTractorContext(geo, emb, q)
    d = ctx.d
    if kspec.degree != d:
        raise ValueError(f"form degree {kspec.degree} != codimension {d}")
    seeds = ctx.sub.seeds

    def value_at(pk):
        c2 = SubTractorContext(geo, emb, pk.q, sub=pk)
        K = _split_components(geo, kspec, pk.x)
        Hup = _hup(pk.pack.gi)
        return _full_pair(K, c2.normal_form(), Hup)

    sf = SigmaField(geo, emb, lambda pk: np.array([value_at(pk)]))
    v0, dv, _ = sf.jet1(q)
    value = float(v0[0])
    resid = float(np.abs(dv).max())

    # explicit slot evaluation
    sub = ctx.sub
    pack, k0, covs = _cov_jets(geo, kspec, sub.x, 1)
    gi = pack.gi
    Nf = sub.Nform
    idx = Nf.ndim
    Nup = Nf
    for ax in range(idx):
        Nup = np.moveaxis(np.tensordot(gi, Nup, axes=([1], [ax])), 0, ax)
    H_low = pack.g @ sub.H
    if d == 1:
        explicit = float(k0) * float(Nup @ H_low) \
            + float(np.tensordot(covs[0], Nup, axes=([0], [0])))
    else:
        grad = np.moveaxis(covs[0], -1, 0)
        # k_{a1..a_{d-1}} N^{c a1..a_{d-1}} H_c
        tmp = np.tensordot(Nup, np.asarray(k0),
                           axes=(list(range(1, d)), list(range(d - 1))))
        kNH = float(tmp @ H_low)
        explicit = kNH + float(np.tensordot(grad, Nup,
                                            axes=(range(d), range(d)))) / d

    pred = None
    if obstruction and d >= 2:
        W = pack.W4
        Wue = np.einsum("abcf,fe->abce", W, gi)
        if d == 2:
            Wk = np.einsum("abce,e->abc", Wue, k0)
        else:
            Wk = np.einsum("abce,e...->abc...", Wue, k0)
        Wk_t = np.einsum("abc...,ci->abi...", Wk, sub.dphi)
        pred = -0.5 * np.einsum("abi...,ab...->i", Wk_t, Nup)
    return {"value": value, "derivative_residual": resid,
            "explicit": explicit,
            "derivative": np.moveaxis(dv, -1, 0)[:, 0],
            "obstruction": pred}


# --------------------------------------------------------------------------
# zero locus scan
# --------------------------------------------------------------------------

@dataclass
class ScanReport:
    status: str
    points: list = dc_field(default_factory=list)
    codim: int | None = None
    L_residuals: list = dc_field(default_factory=list)
    causal: str = ""
    K2: float = 0.0
    simple: bool = True
    notes: str = ""

    def to_dict(self):
        return {"status": self.status,
                "points": [list(map(float, p)) for p in self.points],
                "codimension": self.codim,
                "L_residuals": [float(r) for r in self.L_residuals],
                "causal_type": self.causal,
                "K_norm2": float(self.K2),
                "simple": bool(self.simple),
                "notes": self.notes}


def _k_norm2_grid(geo, kspec, grid_axes):
    mesh = np.meshgrid(*grid_axes, indexing="ij")
    X = np.stack(mesh, axis=-1)
    if kspec.batch_norm2 is not None:
        return X, kspec.batch_norm2(X)
    flat = X.reshape(-1, X.shape[-1])
    vals = np.empty(len(flat))
    for i, x in enumerate(flat):
        v = kspec.field.value(x)
        vals[i] = float(np.sum(np.asarray(v) ** 2))
    return X, vals.reshape(X.shape[:-1])


def _component_map(geo, kspec, x):
    """Stacked components of (k, div k) at x (Remark: Z(k) = Z(K))."""
    pack, k0, covs = _cov_jets(geo, kspec, x, 1)
    comps = [np.atleast_1d(np.asarray(k0)).ravel()]
    if kspec.degree >= 2:
        grad = np.moveaxis(covs[0], -1, 0)
        div = np.einsum("ab,ab...->...", pack.gi, grad)
        comps.append(np.atleast_1d(np.asarray(div)).ravel())
    return np.concatenate(comps)


def zero_locus_scan(geo, kspec, region, grid=21, refine_tol=1e-10,
                    rank_gap=1e3, max_points=40):
    """Grid scan for the zero locus of k, refined by damped Gauss-Newton.

    ``region`` is a list of (lo, hi) per coordinate.  Timelike split
    tractors short-circuit to an empty locus with certificate K.K < 0.
    """
    n = geo.n
    center = np.array([(lo + hi) / 2 for lo, hi in region])
    split = bgg_split(geo, kspec, center)
    if split.causal == "timelike":
        return ScanReport(status="empty", causal=split.causal, K2=split.K2,
                          simple=split.simple,
                          notes="timelike splitting tractor certifies an "
                                "empty zero locus")

    axes = [np.linspace(lo, hi, grid) for lo, hi in region]
    X, norm2 = _k_norm2_grid(geo, kspec, axes)
    spacing = max((hi - lo) / (grid - 1) for lo, hi in region)
    thresh = (2.0 * spacing) ** 2
    cand_idx = np.argwhere(norm2 < thresh * max(1.0, np.median(norm2)))
    if len(cand_idx) == 0:
        return ScanReport(status="empty", causal=split.causal, K2=split.K2,
                          simple=split.simple)

    # refine by damped Gauss-Newton on the stacked components
    found = []
    for idx in cand_idx[:: max(1, len(cand_idx) // (4 * max_points))]:
        x = X[tuple(idx)].astype(float)
        ok = True
        for _ in range(60):
            F = _component_map(geo, kspec, x)
            if np.linalg.norm(F) < refine_tol:
                break
            Jm = np.empty((F.size, n))
            hs = 1e-6
            for a in range(n):
                e = np.zeros(n)
                e[a] = hs
                Jm[:, a] = (_component_map(geo, kspec, x + e)
                            - _component_map(geo, kspec, x - e)) / (2 * hs)
            step, *_ = np.linalg.lstsq(Jm, -F, rcond=None)
            lam = 1.0
            base = np.linalg.norm(F)
            while lam > 1e-6:
                xn = x + lam * step
                if np.linalg.norm(_component_map(geo, kspec, xn)) < base:
                    x = xn
                    break
                lam /= 2
            else:
                ok = False
                break
        F = _component_map(geo, kspec, x)
        if ok and np.linalg.norm(F) < 1e-8 and \
                all(lo - 0.5 <= xi <= hi + 0.5
                    for xi, (lo, hi) in zip(x, region)):
            if not any(np.linalg.norm(x - p) < 0.3 * spacing for p in found):
                found.append(x)
        if len(found) >= max_points:
            break
    if not found:
        return ScanReport(status="empty", causal=split.causal, K2=split.K2,
                          simple=split.simple)

    # codimension from the rank of the component-map Jacobian
    x0 = found[0]
    F0 = _component_map(geo, kspec, x0)
    Jm = np.empty((F0.size, n))
    hs = 1e-6
    for a in range(n):
        e = np.zeros(n)
        e[a] = hs
        Jm[:, a] = (_component_map(geo, kspec, x0 + e)
                    - _component_map(geo, kspec, x0 - e)) / (2 * hs)
    sv = np.linalg.svd(Jm, compute_uv=False)
    rank = 1
    for k in range(1, len(sv)):
        if sv[0] <= 0 or sv[k] < sv[0] / rank_gap:
            break
        rank += 1
    codim = int(rank)

    # L on the locus via a local graph parametrisation
    L_res = []
    if 1 <= codim <= n - 1:
        for x0 in found[:8]:
            emb = _graph_parametrisation(geo, kspec, x0, codim)
            if emb is None:
                continue
            ctx = SubTractorContext(geo, emb, np.zeros(n - codim))
            L_res.append(ctx.L_norm())
    status = "locus" if codim < n else "isolated"
    return ScanReport(status=status, points=found, codim=codim,
                      L_residuals=L_res, causal=split.causal, K2=split.K2,
                      simple=split.simple)


def _graph_parametrisation(geo, kspec, x0, codim):
    """EmbeddingSpec of the locus near x0: tangent directions from the
    Jacobian null space, the complement solved by Newton."""
    from .tensors import ArrayField, DiffBackend

    n = geo.n
    m = n - codim
    F0 = _component_map(geo, kspec, x0)
    Jm = np.empty((F0.size, n))
    hs = 1e-6
    for a in range(n):
        e = np.zeros(n)
        e[a] = hs
        Jm[:, a] = (_component_map(geo, kspec, x0 + e)
                    - _component_map(geo, kspec, x0 - e)) / (2 * hs)
    U, S, Vt = np.linalg.svd(Jm)
    tangent = Vt[codim:].T      # n x m basis of the null space
    normals = Vt[:codim].T

    def phi(y):
        x = x0 + tangent @ np.asarray(y, dtype=float)
        for _ in range(50):
            F = _component_map(geo, kspec, x)
            if np.linalg.norm(F) < 1e-12:
                break
            Jloc = np.empty((F.size, codim))
            for a in range(codim):
                Jloc[:, a] = (_component_map(geo, kspec, x + hs * normals[:, a])
                              - _component_map(geo, kspec, x - hs * normals[:, a])) / (2 * hs)
            step, *_ = np.linalg.lstsq(Jloc, -F, rcond=None)
            x = x + normals @ step
        return x

    fld = ArrayField(phi, backend=DiffBackend(step=1e-4, step3=1e-3))
    return EmbeddingSpec(m=m, n=n, phi=fld, orientation=1)
