"""Cone kernel for the interior-point solver.

Supported cone blocks, in row order: nonnegative orthant, second-order cones,
real symmetric PSD cones (svec packed), exponential cones (a, b, c) meaning
b*exp(a/b) <= c with b > 0. Symmetric cones carry Nesterov-Todd scalings;
exponential cones use the primal barrier
f(a,b,c) = -log(b*log(c/b) - a) - log b - log c.

PSD blocks of equal side are processed batched, and the structural data of
the Schur assembly (which variables each block touches) is precomputed once
per problem so the per-iteration work stays in vectorized numpy.
"""

from functools import lru_cache

import numpy as np
import scipy.sparse as sp

# Point t on the exponential-cone central ray satisfying -grad f(t) = t.
EXP_CENTRAL = np.array([-0.82783840022154866, 0.80510199692211636, 1.29092770886469695])


@lru_cache(maxsize=None)
def svec_indices(d):
    """Row/col index arrays of the lower triangle, row-major order."""
    return np.tril_indices(d)


@lru_cache(maxsize=None)
def svec_scale(d):
    iu, ju = svec_indices(d)
    return np.where(iu == ju, 1.0, np.sqrt(2.0))


def svec(mats, d):
    """Pack (..., d, d) symmetric matrices into (..., sv) svec coordinates."""
    iu, ju = svec_indices(d)
    return mats[..., iu, ju] * svec_scale(d)


def smat(vecs, d):
    """Unpack (nb, sv) svec coordinates into (nb, d, d) symmetric matrices."""
    vecs = np.atleast_2d(vecs)
    nb = vecs.shape[0]
    iu, ju = svec_indices(d)
    out = np.zeros((nb, d, d))
    vals = vecs / svec_scale(d)
    out[:, iu, ju] = vals
    out[:, ju, iu] = vals
    return out


def _exp_omega(p):
    b, c = p[..., 1], p[..., 2]
    with np.errstate(all="ignore"):
        return b * np.log(c / b) - p[..., 0]


def exp_inside(p, margin=0.0):
    """Strict membership of (a, b, c) triples in the primal exp cone."""
    b, c = p[..., 1], p[..., 2]
    ok = (b > margin) & (c > margin)
    w = np.where(ok, _exp_omega(np.where(ok[..., None], p, 1.0)), -1.0)
    return ok & (w > margin)


def exp_inside_dual(q, margin=0.0):
    """Strict membership in the dual exp cone: u<0, w>0, v > u*(1+log(w/-u))."""
    u, v, w = q[..., 0], q[..., 1], q[..., 2]
    ok = (u < -margin) & (w > margin)
    safe = np.where(ok, w / np.where(u < 0, -u, 1.0), 1.0)
    bound = u * (1.0 + np.log(safe))
    return ok & (v - bound > margin)


def exp_grad(p):
    """Barrier gradient at strictly feasible (nb, 3) primal points."""
    b, c = p[..., 1], p[..., 2]
    w = _exp_omega(p)
    l = np.log(c / b)
    g = np.empty_like(p)
    g[..., 0] = 1.0 / w
    g[..., 1] = -(l - 1.0) / w - 1.0 / b
    g[..., 2] = -b / (c * w) - 1.0 / c
    return g


def exp_hess(p):
    """Barrier Hessians at strictly feasible points, shape (nb, 3, 3)."""
    b, c = p[..., 1], p[..., 2]
    w = _exp_omega(p)
    l = np.log(c / b)
    h = np.empty(p.shape[:-1] + (3, 3))
    w2 = w * w
    h[..., 0, 0] = 1.0 / w2
    h[..., 0, 1] = -(l - 1.0) / w2
    h[..., 0, 2] = -(b / c) / w2
    h[..., 1, 1] = 1.0 / (b * w) + (l - 1.0) ** 2 / w2 + 1.0 / (b * b)
    h[..., 1, 2] = -1.0 / (c * w) + (l - 1.0) * b / (c * w2)
    h[..., 2, 2] = b / (c * c * w) + (b / c) ** 2 / w2 + 1.0 / (c * c)
    h[..., 1, 0] = h[..., 0, 1]
    h[..., 2, 0] = h[..., 0, 2]
    h[..., 2, 1] = h[..., 1, 2]
    return h


def _max_step_nonneg(s, ds):
    neg = ds < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-s[neg] / ds[neg]))


def _max_step_soc(s, ds):
    # first boundary crossing of (s0+t*d0)^2 - ||s1+t*d1||^2 from a strictly
    # feasible s; the s0 + t*d0 = 0 candidate is included for safety
    a = ds[0] ** 2 - ds[1:] @ ds[1:]
    b = 2.0 * (s[0] * ds[0] - s[1:] @ ds[1:])
    c = s[0] ** 2 - s[1:] @ s[1:]
    roots = []
    if abs(a) > 1e-300:
        disc = b * b - 4.0 * a * c
        if disc >= 0:
            sq = np.sqrt(disc)
            roots += [(-b - sq) / (2 * a), (-b + sq) / (2 * a)]
    elif abs(b) > 1e-300:
        roots.append(-c / b)
    if ds[0] < 0:
        roots.append(-s[0] / ds[0])
    pos = [r for r in roots if r > 0]
    return float(min(pos)) if pos else np.inf


def _guarded_inv(mats):
    """Batched symmetric inverse with an eigenvalue-clipped fallback."""
    try:
        out = np.linalg.inv(mats)
        if np.all(np.isfinite(out)):
            return out
    except np.linalg.LinAlgError:
        pass
    w, v = np.linalg.eigh(0.5 * (mats + np.swapaxes(mats, -1, -2)))
    floor = 1e-14 * np.clip(np.max(np.abs(w), axis=-1, keepdims=True), 1e-300, None)
    w = np.clip(w, floor, None)
    return v @ ((1.0 / w)[..., None] * np.swapaxes(v, -1, -2))


def _psd_chol(mats):
    """Batched Cholesky with a symmetric-eigendecomposition fallback."""
    mats = 0.5 * (mats + np.swapaxes(mats, -1, -2))
    try:
        return np.linalg.cholesky(mats)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(mats)
        floor = 1e-14 * np.clip(np.max(w, axis=-1, keepdims=True), 1e-300, None)
        w = np.clip(w, floor, None)
        fixed = v @ (w[..., None] * np.swapaxes(v, -1, -2))
        return np.linalg.cholesky(0.5 * (fixed + np.swapaxes(fixed, -1, -2)))


class _PsdGroup:
    """All PSD blocks of one side, kept as batched tensors."""

    def __init__(self, side, starts):
        self.d = side
        self.sv = side * (side + 1) // 2
        self.starts = np.asarray(starts)
        self.nb = len(starts)
        self.rows = (self.starts[:, None] + np.arange(self.sv)[None, :]).ravel()
        self._eye_sv = svec(np.broadcast_to(np.eye(side), (self.nb, side, side)), side)
        self.r = None
        self.rinv = None
        self.lam = None     # (nb, d) scaled-point eigenvalues
        self.t = None       # (nb, d, d) = R R^T
        self.tinv = None

    def gather(self, vec):
        return vec[self.rows].reshape(self.nb, self.sv)

    def scatter(self, vec, vals):
        vec[self.rows] = vals.ravel()

    def update(self, s, z):
        sm = smat(self.gather(s), self.d)
        zm = smat(self.gather(z), self.d)
        l1 = _psd_chol(sm)
        l2 = _psd_chol(zm)
        prod = np.swapaxes(l2, -1, -2) @ l1
        u, sig, _vt = np.linalg.svd(prod)
        # R = L2^{-T} U Sig^{1/2} gives R^T Z R = Sig = R^{-1} S R^{-T}
        l2t_inv_u = np.linalg.solve(np.swapaxes(l2, -1, -2), u)
        self.r = l2t_inv_u * np.sqrt(sig)[:, None, :]
        self.rinv = np.linalg.inv(self.r)
        self.lam = sig
        self.t = self.r @ np.swapaxes(self.r, -1, -2)
        self.tinv = np.linalg.inv(self.t)

    @staticmethod
    def _congr(mats, g):
        return g @ mats @ np.swapaxes(g, -1, -2)

    def apply_w(self, vals):
        return svec(self._congr(smat(vals, self.d), np.swapaxes(self.r, -1, -2)), self.d)

    def apply_wt(self, vals):
        return svec(self._congr(smat(vals, self.d), self.r), self.d)

    def apply_winv_t(self, vals):
        return svec(self._congr(smat(vals, self.d), self.rinv), self.d)

    def apply_hinv(self, vals):
        return svec(self._congr(smat(vals, self.d), self.tinv), self.d)

    def apply_h(self, vals):
        return svec(self._congr(smat(vals, self.d), self.t), self.d)

    def lam_sq(self):
        diag = np.zeros((self.nb, self.d, self.d))
        idx = np.arange(self.d)
        diag[:, idx, idx] = self.lam**2
        return svec(diag, self.d)

    def jordan_solve(self, vals):
        # the scaled point is diagonal, so (LX + XL)/2 = H solves entrywise
        hm = smat(vals, self.d)
        denom = 0.5 * (self.lam[:, :, None] + self.lam[:, None, :])
        return svec(hm / denom, self.d)

    def jordan_prod(self, a, b):
        am = smat(a, self.d)
        bm = smat(b, self.d)
        return svec(0.5 * (am @ bm + bm @ am), self.d)

    def max_step(self, vec, dvec):
        sm = smat(self.gather(vec), self.d)
        dm = smat(self.gather(dvec), self.d)
        l = _psd_chol(sm)
        linv_d = np.linalg.solve(l, dm)
        m = np.linalg.solve(l, np.swapaxes(linv_d, -1, -2))  # L^{-1} D L^{-T}
        eigs = np.linalg.eigvalsh(0.5 * (m + np.swapaxes(m, -1, -2)))
        lo = float(eigs[:, 0].min())
        return np.inf if lo >= -1e-300 else -1.0 / lo

    def inside(self, vec, margin=0.0):
        sm = smat(self.gather(vec), self.d)
        eigs = np.linalg.eigvalsh(sm)
        return bool(np.all(eigs[:, 0] > margin))


class ConeWorkspace:
    """Per-problem cone bookkeeping plus per-iteration scaling state.

    dims: {'l': int, 'q': [int], 's': [int], 'e': int} describing the row
    blocks of G in order.
    """

    def __init__(self, dims, g_csr=None):
        self.dims = dims
        self.nl = dims.get("l", 0)
        self.socs = list(dims.get("q", []))
        self.psds = list(dims.get("s", []))
        self.nexp = dims.get("e", 0)
        self.g = g_csr

        ofs = self.nl
        self.soc_slices = []
        for q in self.socs:
            self.soc_slices.append((ofs, q))
            ofs += q
        by_side = {}
        for d in self.psds:
            by_side.setdefault(d, []).append(ofs)
            ofs += d * (d + 1) // 2
        self.psd_groups = [_PsdGroup(d, starts) for d, starts in sorted(by_side.items())]
        self.exp_start = ofs
        ofs += 3 * self.nexp
        self.mrows = ofs
        if g_csr is not None and g_csr.shape[0] != ofs:
            raise ValueError(f"G has {g_csr.shape[0]} rows, cones describe {ofs}")

        self.degree = self.nl + len(self.socs) + sum(self.psds) + 3 * self.nexp

        self._lin_w2 = None
        self._lin_lam = None
        self._soc_state = []
        self._exp_mu_hess = None   # mu * grad^2 f(s) = H^{-1} on exp blocks
        self._exp_hop = None       # its inverse = the H operator on exp blocks
        self._exp_grad = None
        if g_csr is not None:
            self._precompute_assembly()

    # ---- structural precomputation for Schur assembly ----

    def _precompute_assembly(self):
        g = self.g.tocsr()
        n = g.shape[1]
        # below this size plain dense numpy beats sparse bookkeeping
        self._dense_mode = g.shape[0] * n <= 200_000
        self._g_lin = g[: self.nl]
        if self._dense_mode:
            self._g_lin = np.asarray(self._g_lin.todense())
        self._soc_rows = []
        self._soc_jpat = []
        self._soc_cols = []
        for o, q in self.soc_slices:
            gb = g[o : o + q]
            jdiag = sp.diags(np.concatenate(([1.0], -np.ones(q - 1))))
            jpat = gb.T @ (jdiag @ gb)
            cols = np.unique(gb.indices)
            if self._dense_mode:
                gb = np.asarray(gb.todense())
                jpat = np.asarray(jpat.todense())
            else:
                jpat = jpat.tocoo()
            self._soc_rows.append(gb)
            self._soc_jpat.append(jpat)
            self._soc_cols.append(cols)
        self._psd_assembly = []
        for grp in self.psd_groups:
            blocks = []
            for start in grp.starts:
                gb = g[start : start + grp.sv]
                cols = np.unique(gb.indices)
                dense = np.asarray(gb[:, cols].todense())
                blocks.append((cols, dense, smat(dense.T, grp.d)))
            self._psd_assembly.append((grp, blocks))
        self._exp_assembly = []
        for bidx in range(self.nexp):
            o = self.exp_start + 3 * bidx
            gb = g[o : o + 3]
            cols = np.unique(gb.indices)
            self._exp_assembly.append((cols, np.asarray(gb[:, cols].todense())))

    # ---- interior points ----

    def initial_sz(self):
        s = np.zeros(self.mrows)
        s[: self.nl] = 1.0
        for o, _q in self.soc_slices:
            s[o] = 1.0
        for grp in self.psd_groups:
            grp.scatter(s, grp._eye_sv)
        for b in range(self.nexp):
            s[self.exp_start + 3 * b : self.exp_start + 3 * b + 3] = EXP_CENTRAL
        return s, s.copy()

    # ---- membership / steps ----

    def _exp_block(self, vec):
        return vec[self.exp_start :].reshape(self.nexp, 3)

    def inside(self, vec, dual=False, margin=0.0):
        if self.nl and not np.all(vec[: self.nl] > margin):
            return False
        for o, q in self.soc_slices:
            t, u = vec[o], vec[o + 1 : o + q]
            if t <= margin or t * t - u @ u <= margin:
                return False
        for grp in self.psd_groups:
            if not grp.inside(vec, margin):
                return False
        if self.nexp:
            blk = self._exp_block(vec)
            test = exp_inside_dual(blk, margin) if dual else exp_inside(blk, margin)
            if not np.all(test):
                return False
        return True

    def max_step(self, s, ds, z, dz, cap=1.0):
        """Largest alpha <= cap keeping s + a*ds in K and z + a*dz in K*."""
        alpha = cap
        if self.nl:
            alpha = min(alpha, _max_step_nonneg(s[: self.nl], ds[: self.nl]))
            alpha = min(alpha, _max_step_nonneg(z[: self.nl], dz[: self.nl]))
        for o, q in self.soc_slices:
            alpha = min(alpha, _max_step_soc(s[o : o + q], ds[o : o + q]))
            alpha = min(alpha, _max_step_soc(z[o : o + q], dz[o : o + q]))
        for grp in self.psd_groups:
            alpha = min(alpha, grp.max_step(s, ds))
            alpha = min(alpha, grp.max_step(z, dz))
        alpha = max(alpha, 0.0)
        if self.nexp and alpha > 0:
            sb, dsb = self._exp_block(s), self._exp_block(ds)
            zb, dzb = self._exp_block(z), self._exp_block(dz)
            for _ in range(80):
                ok = np.all(exp_inside(sb + alpha * dsb)) and np.all(
                    exp_inside_dual(zb + alpha * dzb)
                )
                if ok:
                    break
                alpha *= 0.8
            else:
                alpha = 0.0
        return alpha

    def exp_centrality_ok(self, s, z, mu_plus, rho=1e-3):
        if not self.nexp:
            return True
        sb, zb = self._exp_block(s), self._exp_block(z)
        dots = np.einsum("ij,ij->i", sb, zb)
        return bool(np.all(dots >= 3.0 * rho * mu_plus))

    # ---- scaling ----

    def update_scaling(self, s, z, mu):
        if self.nl:
            sl, zl = s[: self.nl], z[: self.nl]
            self._lin_w2 = sl / zl
            self._lin_lam = np.sqrt(sl * zl)
        self._soc_state = []
        for o, q in self.soc_slices:
            self._soc_state.append(_soc_nt(s[o : o + q], z[o : o + q]))
        for grp in self.psd_groups:
            grp.update(s, z)
        if self.nexp:
            sb = self._exp_block(s)
            self._exp_grad = exp_grad(sb)
            self._exp_mu_hess = mu * exp_hess(sb)
            self._exp_hop = _guarded_inv(self._exp_mu_hess)

    # ---- block-diagonal operator applications ----

    def apply_hinv(self, v):
        out = np.zeros_like(v)
        if self.nl:
            out[: self.nl] = v[: self.nl] / self._lin_w2
        for (o, q), st in zip(self.soc_slices, self._soc_state):
            out[o : o + q] = _soc_papply(st["winv"], v[o : o + q])
        for grp in self.psd_groups:
            grp.scatter(out, grp.apply_hinv(grp.gather(v)))
        if self.nexp:
            vb = self._exp_block(v)
            out[self.exp_start :] = np.einsum(
                "bij,bj->bi", self._exp_mu_hess, vb
            ).ravel()
        return out

    def apply_h(self, v):
        out = np.zeros_like(v)
        if self.nl:
            out[: self.nl] = v[: self.nl] * self._lin_w2
        for (o, q), st in zip(self.soc_slices, self._soc_state):
            out[o : o + q] = _soc_papply(st["w"], v[o : o + q])
        for grp in self.psd_groups:
            grp.scatter(out, grp.apply_h(grp.gather(v)))
        if self.nexp:
            vb = self._exp_block(v)
            out[self.exp_start :] = np.einsum("bij,bj->bi", self._exp_hop, vb).ravel()
        return out

    # ---- search-direction right-hand sides ----

    def ds_affine(self, s, z):
        """d_s for the affine step: -H z, which is -s on symmetric blocks."""
        ds = -s.copy()
        if self.nexp:
            zb = self._exp_block(z)
            ds[self.exp_start :] = -np.einsum("bij,bj->bi", self._exp_hop, zb).ravel()
        return ds

    def ds_combined(self, s, z, sig_mu, ds_aff, dz_aff):
        """d_s for the centering step with Mehrotra correction."""
        out = np.zeros_like(s)
        if self.nl:
            lam = self._lin_lam
            w = np.sqrt(self._lin_w2)
            gamma = (ds_aff[: self.nl] / w) * (dz_aff[: self.nl] * w)
            eta = sig_mu - lam * lam - gamma
            out[: self.nl] = w * (eta / lam)
        for (o, q), st in zip(self.soc_slices, self._soc_state):
            lam = st["lam"]
            wds = _soc_papply(st["w_half_inv"], ds_aff[o : o + q])
            wdz = _soc_papply(st["w_half"], dz_aff[o : o + q])
            gamma = _soc_jprod(wds, wdz)
            eta = -_soc_jprod(lam, lam) - gamma
            eta[0] += sig_mu
            out[o : o + q] = _soc_papply(st["w_half"], _soc_jsolve(lam, eta))
        for grp in self.psd_groups:
            wds = grp.apply_winv_t(grp.gather(ds_aff))
            wdz = grp.apply_w(grp.gather(dz_aff))
            eta = sig_mu * grp._eye_sv - grp.lam_sq() - grp.jordan_prod(wds, wdz)
            grp.scatter(out, grp.apply_wt(grp.jordan_solve(eta)))
        if self.nexp:
            zb = self._exp_block(z)
            rhs = -zb - sig_mu * self._exp_grad
            out[self.exp_start :] = np.einsum("bij,bj->bi", self._exp_hop, rhs).ravel()
        return out

    # ---- Schur complement assembly ----

    def add_schur(self, s_mat):
        """Accumulate G^T H^{-1} G into the dense matrix ``s_mat``."""
        if self.nl:
            if self._dense_mode:
                s_mat += self._g_lin.T @ (self._g_lin / self._lin_w2[:, None])
            else:
                y = self._g_lin.multiply((1.0 / self._lin_w2)[:, None])
                prod = (self._g_lin.T @ y).tocoo()
                np.add.at(s_mat, (prod.row, prod.col), prod.data)
        for gb, jpat, cols, st in zip(
            self._soc_rows, self._soc_jpat, self._soc_cols, self._soc_state
        ):
            vvec, det = st["winv"]
            u = np.asarray(gb.T @ vvec).ravel()
            if self._dense_mode:
                s_mat += 2.0 * np.outer(u, u) - det * jpat
            else:
                ui = u[cols]
                s_mat[np.ix_(cols, cols)] += 2.0 * np.outer(ui, ui)
                np.add.at(s_mat, (jpat.row, jpat.col), -det * jpat.data)
        for grp, blocks in self._psd_assembly:
            for bi, (cols, dense, colmats) in enumerate(blocks):
                tinv = grp.tinv[bi]
                y = svec(tinv @ colmats @ tinv, grp.d)  # (ncols, sv)
                s_mat[np.ix_(cols, cols)] += dense.T @ y.T
        for bidx, (cols, dense) in enumerate(self._exp_assembly):
            s_mat[np.ix_(cols, cols)] += dense.T @ self._exp_mu_hess[bidx] @ dense


def _soc_nt(s, z):
    """NT scaling state for one second-order cone block."""
    q = len(s)
    jd = np.concatenate(([1.0], -np.ones(q - 1)))

    def jdot(a, b):
        return a[0] * b[0] - a[1:] @ b[1:]

    sn = np.sqrt(jdot(s, s))
    zn = np.sqrt(jdot(z, z))
    sb, zb = s / sn, z / zn
    gamma = np.sqrt((1.0 + sb @ zb) / 2.0)
    wbar = (sb + jd * zb) / (2.0 * gamma)
    w = np.sqrt(sn / zn) * wbar
    detw = jdot(w, w)
    winv = (jd * w) / detw
    # Jordan square root r of w; W = P(r) is the symmetric NT scaling
    r0 = np.sqrt((w[0] + np.sqrt(detw)) / 2.0)
    r = np.concatenate(([r0], w[1:] / (2.0 * r0)))
    detr = jdot(r, r)
    rinv = (jd * r) / detr
    lam = _soc_papply((r, detr), z)
    return {
        "w": (w, detw),                       # P(w) = H
        "winv": (winv, jdot(winv, winv)),     # P(w^{-1}) = H^{-1}
        "w_half": (r, detr),                  # P(r) = W = W^T
        "w_half_inv": (rinv, jdot(rinv, rinv)),
        "lam": lam,
    }


def _soc_papply(param, v):
    """Apply the quadratic representation P(u) = 2 u u^T - det(u) J."""
    u, det = param
    jv = v.copy()
    jv[1:] = -jv[1:]
    return 2.0 * u * (u @ v) - det * jv


def _soc_jprod(a, b):
    out = np.empty_like(a)
    out[0] = a @ b
    out[1:] = a[0] * b[1:] + b[0] * a[1:]
    return out


def _soc_jsolve(lam, eta):
    """Solve lam o x = eta for one SOC block."""
    l0, l1 = lam[0], lam[1:]
    det = l0 * l0 - l1 @ l1
    x0 = (l0 * eta[0] - l1 @ eta[1:]) / det
    x1 = (eta[1:] - x0 * l1) / l0
    return np.concatenate(([x0], x1))
