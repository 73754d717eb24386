"""Homogeneous self-dual interior-point solver for mixed-cone programs.

Solves
    minimize    c'x
    subject to  A x = b
                G x + s = h,  s in K
with K a product of nonnegative, second-order, PSD, and exponential cones,
via a Mehrotra-style predictor-corrector on the self-dual embedding.
Nesterov-Todd scalings drive the symmetric blocks; exponential blocks use the
primal barrier Hessian. Dense linear algebra throughout: the problems this
package produces are small (a few thousand rows).
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .cones import ConeWorkspace

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_UNBOUNDED = "unbounded"
STATUS_MAX_ITER = "max_iter"


class SolverError(Exception):
    pass


@dataclass
class RawSolution:
    status: str
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    s: np.ndarray
    pobj: float
    dobj: float
    residuals: dict
    iterations: int
    gap_history: list = field(default_factory=list)


def _as_csr(mat, shape):
    if mat is None:
        return sp.csr_matrix(shape)
    if sp.issparse(mat):
        return mat.tocsr()
    return sp.csr_matrix(np.atleast_2d(np.asarray(mat, dtype=float)))


class _KKT:
    """Factorization of [[S, A'], [A, -reg]] with iterative refinement."""

    def __init__(self, s_mat, a_csr, reg=1e-13):
        n = s_mat.shape[0]
        p = a_csr.shape[0]
        self.n, self.p = n, p
        scale = max(1.0, float(np.max(np.abs(np.diag(s_mat))))) if n else 1.0
        self.delta = reg * scale
        if p:
            full = np.zeros((n + p, n + p))
            full[:n, :n] = s_mat + self.delta * np.eye(n)
            ad = a_csr.toarray()
            full[:n, n:] = ad.T
            full[n:, :n] = ad
            full[n:, n:] = -self.delta * np.eye(p)
            self.lu = sla.lu_factor(full)
            self.chol = None
            self.kmat = full
        else:
            self.chol = sla.cho_factor(s_mat + self.delta * np.eye(n))
            self.lu = None
            self.smat = s_mat

    def solve(self, r1, r2):
        if self.p:
            rhs = np.concatenate([r1, r2])
            u = sla.lu_solve(self.lu, rhs)
            for _ in range(2):
                resid = rhs - self.kmat @ u
                resid[: self.n] += self.delta * u[: self.n]
                resid[self.n :] -= self.delta * u[self.n :]
                u += sla.lu_solve(self.lu, resid)
            return u[: self.n], u[self.n :]
        u = sla.cho_solve(self.chol, r1)
        for _ in range(2):
            resid = r1 - self.smat @ u
            u += sla.cho_solve(self.chol, resid)
        return u, np.zeros(0)


def solve_raw(
    c,
    g_mat,
    h,
    dims,
    a_mat=None,
    b=None,
    tol=1e-8,
    max_iter=100,
    step_frac=0.99,
):
    """Run the interior-point method on conic standard form data."""
    c = np.asarray(c, dtype=float)
    h = np.asarray(h, dtype=float)
    n = c.size
    g_csr = _as_csr(g_mat, (len(h), n))
    a_csr = _as_csr(a_mat, (0, n))
    b = np.zeros(a_csr.shape[0]) if b is None else np.asarray(b, dtype=float)
    for name, arr in (("c", c), ("h", h), ("b", b)):
        if arr.size and not np.all(np.isfinite(arr)):
            raise SolverError(f"non-finite entries in {name}")
    if g_csr.nnz and not np.all(np.isfinite(g_csr.data)):
        raise SolverError("non-finite entries in G")
    if a_csr.nnz and not np.all(np.isfinite(a_csr.data)):
        raise SolverError("non-finite entries in A")

    cw = ConeWorkspace(dims, g_csr)
    if cw.mrows != len(h):
        raise SolverError("cone dims do not match h")
    if g_csr.shape[0] * n <= 200_000:
        g_op = g_csr.toarray()
        gt = g_op.T
        a_op = a_csr.toarray()
        at = a_op.T
    else:
        g_op = g_csr
        gt = g_csr.T.tocsr()
        a_op = a_csr
        at = a_csr.T.tocsr()

    x = np.zeros(n)
    y = np.zeros(a_csr.shape[0])
    s, z = cw.initial_sz()
    tau, kappa = 1.0, 1.0
    nu = cw.degree + 1.0

    norm_c = 1.0 + np.linalg.norm(c)
    norm_h = 1.0 + np.linalg.norm(h) + np.linalg.norm(b)

    gap_history = []
    best = None
    best_score = np.inf

    def residual_block():
        rx = at @ y + gt @ z + c * tau if a_csr.shape[0] else gt @ z + c * tau
        ry = a_csr @ x - b * tau
        rz = g_csr @ x + s - h * tau
        rt = kappa + c @ x + b @ y + h @ z
        return rx, ry, rz, rt

    def unscaled_metrics():
        xt, yt, zt, st = x / tau, y / tau, z / tau, s / tau
        pres = np.linalg.norm(np.concatenate([a_csr @ xt - b, g_csr @ xt + st - h]))
        pres /= norm_h
        dvec = gt @ zt + c
        if a_csr.shape[0]:
            dvec = dvec + at @ yt
        dres = np.linalg.norm(dvec) / norm_c
        pobj = c @ xt
        dobj = -b @ yt - h @ zt
        gap = abs(pobj - dobj) / (1.0 + max(abs(pobj), abs(dobj)))
        return pres, dres, gap, pobj, dobj

    status = STATUS_MAX_ITER
    it = 0
    stalls = 0
    for it in range(1, max_iter + 1):
        rx, ry, rz, rt = residual_block()
        mu = (s @ z + tau * kappa) / nu
        gap_history.append(mu)

        pres, dres, gap, pobj, dobj = unscaled_metrics()
        score = max(pres, dres, gap)
        if score < best_score and tau > 1e-12:
            best_score = score
            best = (x.copy(), y.copy(), z.copy(), s.copy(), tau, kappa)
        if pres <= tol and dres <= tol and gap <= tol:
            status = STATUS_OPTIMAL
            break

        # infeasibility certificates from the homogeneous iterate
        hz_by = -(h @ z + b @ y)
        if hz_by > tol:
            zc, yc = z / hz_by, y / hz_by
            cert = gt @ zc + (at @ yc if a_csr.shape[0] else 0.0)
            if np.linalg.norm(cert) <= tol * max(1.0, norm_c):
                status = STATUS_INFEASIBLE
                z, y = zc, yc
                break
        minus_cx = -(c @ x)
        if minus_cx > tol:
            xc, sc_ = x / minus_cx, s / minus_cx
            if (
                np.linalg.norm(g_csr @ xc + sc_) <= tol * max(1.0, norm_h)
                and np.linalg.norm(a_csr @ xc) <= tol * max(1.0, norm_h)
            ):
                status = STATUS_UNBOUNDED
                x, s = xc, sc_
                break

        cw.update_scaling(s, z, mu)
        s_mat = np.zeros((n, n))
        cw.add_schur(s_mat)
        kkt = None
        for reg in (1e-13, 1e-10, 1e-7):
            try:
                kkt = _KKT(s_mat, a_csr, reg=reg)
                break
            except np.linalg.LinAlgError:
                continue
        if kkt is None:
            break

        def solve3_once(r1, r2, r3):
            rhs1 = r1 + gt @ cw.apply_hinv(r3)
            dx, dy = kkt.solve(rhs1, r2)
            dz = cw.apply_hinv(g_csr @ dx - r3)
            return dx, dy, dz

        def solve3(r1, r2, r3):
            dx, dy, dz = solve3_once(r1, r2, r3)
            for _ in range(2):
                e1 = r1 - (gt @ dz + (at @ dy if a_csr.shape[0] else 0.0))
                e2 = r2 - a_csr @ dx
                e3 = r3 - (g_csr @ dx - cw.apply_h(dz))
                if max(np.max(np.abs(e1), initial=0), np.max(np.abs(e3), initial=0)) < 1e-14:
                    break
                fx, fy, fz = solve3_once(e1, e2, e3)
                dx, dy, dz = dx + fx, dy + fy, dz + fz
            return dx, dy, dz

        dx2, dy2, dz2 = solve3(-c, b, h)
        dot2 = c @ dx2 + b @ dy2 + h @ dz2

        def direction(sig, ds_vec, eta_tau, res_scale):
            r1 = -res_scale * rx
            r2 = -res_scale * ry
            r3 = -res_scale * rz - ds_vec
            dx1, dy1, dz1 = solve3(r1, r2, r3)
            dot1 = c @ dx1 + b @ dy1 + h @ dz1
            denom = dot2 - kappa / tau
            dtau = (-res_scale * rt - eta_tau / tau - dot1) / denom
            dx = dx1 + dtau * dx2
            dy = dy1 + dtau * dy2
            dz = dz1 + dtau * dz2
            ds = -res_scale * rz - (g_csr @ dx) + dtau * h
            dkappa = (eta_tau - kappa * dtau) / tau
            return dx, dy, dz, ds, dtau, dkappa

        # predictor
        ds_aff_rhs = cw.ds_affine(s, z)
        dxa, dya, dza, dsa, dta, dka = direction(0.0, ds_aff_rhs, -tau * kappa, 1.0)
        alpha_aff = cw.max_step(s, dsa, z, dza, cap=1.0)
        alpha_aff = min(alpha_aff, _pos_step(tau, dta), _pos_step(kappa, dka))
        mu_aff = (
            (s + alpha_aff * dsa) @ (z + alpha_aff * dza)
            + (tau + alpha_aff * dta) * (kappa + alpha_aff * dka)
        ) / nu
        sigma = float(np.clip((max(mu_aff, 0.0) / mu) ** 3, 1e-8, 0.999))

        # corrector
        ds_rhs = cw.ds_combined(s, z, sigma * mu, dsa, dza)
        eta_tau = sigma * mu - tau * kappa - dta * dka
        dx, dy, dz, ds, dtau, dkappa = direction(sigma, ds_rhs, eta_tau, 1.0 - sigma)

        def accepted_step(dx_, dy_, dz_, ds_, dtau_, dkappa_, mu_cap):
            a = cw.max_step(s, ds_, z, dz_, cap=1.0 / step_frac) * step_frac
            a = min(a, step_frac * _pos_step(tau, dtau_), step_frac * _pos_step(kappa, dkappa_))
            for _ in range(12):
                if a <= 0:
                    return 0.0
                s_n = s + a * ds_
                z_n = z + a * dz_
                mu_n = (s_n @ z_n + (tau + a * dtau_) * (kappa + a * dkappa_)) / nu
                if mu_n <= mu_cap and cw.exp_centrality_ok(s_n, z_n, mu_n, rho=1e-4):
                    return a
                a *= 0.6
            return 0.0

        alpha = accepted_step(dx, dy, dz, ds, dtau, dkappa, mu * (1.0 + 1e-7))
        if alpha <= 1e-13:
            # stalled: take a pure centering step (sigma = 1) to pull the
            # iterate off the cone boundary, keeping residuals unchanged
            zero = np.zeros_like(s)
            ds_rhs = cw.ds_combined(s, z, mu, zero, zero)
            dx, dy, dz, ds, dtau, dkappa = direction(1.0, ds_rhs, mu - tau * kappa, 0.0)
            alpha = accepted_step(dx, dy, dz, ds, dtau, dkappa, mu * (1.0 + 1e-2))
            stalls += 1
        else:
            stalls = 0
        if alpha <= 1e-13 or stalls > 3:
            break
        x += alpha * dx
        y += alpha * dy
        z += alpha * dz
        s += alpha * ds
        tau += alpha * dtau
        kappa += alpha * dkappa
        if mu < 1e-16:
            break

    if status == STATUS_OPTIMAL:
        xt, yt, zt, st = x / tau, y / tau, z / tau, s / tau
        pres, dres, gap, pobj, dobj = unscaled_metrics()
        return RawSolution(
            STATUS_OPTIMAL, xt, yt, zt, st, pobj, dobj,
            {"primal": pres, "dual": dres, "gap": gap, "cone_gap": st @ zt},
            it, gap_history,
        )
    if status == STATUS_INFEASIBLE:
        return RawSolution(
            STATUS_INFEASIBLE, x, y, z, s, np.nan, np.nan,
            {"certificate": float(np.linalg.norm(gt @ z + (at @ y if a_csr.shape[0] else 0.0)))},
            it, gap_history,
        )
    if status == STATUS_UNBOUNDED:
        return RawSolution(
            STATUS_UNBOUNDED, x, y, z, s, np.nan, np.nan,
            {"ray_objective": float(c @ x)}, it, gap_history,
        )
    # stalled or out of iterations: report the best scaled iterate seen,
    # classifying it optimal if it meets the tolerance after all
    if best is not None:
        xb, yb, zb, sb, tb, kb = best
        x, y, z, s, tau, kappa = xb, yb, zb, sb, tb, kb
    pres, dres, gap, pobj, dobj = unscaled_metrics()
    status = STATUS_OPTIMAL if max(pres, dres, gap) <= tol else STATUS_MAX_ITER
    return RawSolution(
        status, x / tau, y / tau, z / tau, s / tau, pobj, dobj,
        {"primal": pres, "dual": dres, "gap": gap, "cone_gap": (s @ z) / tau**2},
        it, gap_history,
    )


def _pos_step(v, dv):
    return np.inf if dv >= 0 else -v / dv
