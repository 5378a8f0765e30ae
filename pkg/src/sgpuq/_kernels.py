"""Numba-compiled assembly and Newton kernels for the 1D mixed solver.

Global dof layout: the first (2 n_el + 1) entries are displacement values
on quadratic elements, the remaining (n_el + 1) are plastic-strain values
on linear elements.  Parameter packing order is fixed by PARAM_SLOTS.
"""

import numpy as np
from numba import njit

PARAM_SLOTS = ("l_dis", "l_en", "yield_strength", "h_iso", "r_iso",
               "elastic_modulus", "rate_power", "rate_coeff",
               "shear_modulus", "rate_floor")

# 3-point Gauss-Legendre on [-1, 1] (exact through degree 5)
_G = np.sqrt(3.0 / 5.0)
GAUSS_XI = np.array([-_G, 0.0, _G])
GAUSS_W = np.array([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])

# Quadratic (displacement) and linear (plastic strain) shape functions
# tabulated at the quadrature points: row = qp, column = local node.
SHP_U = np.column_stack([
    0.5 * GAUSS_XI * (GAUSS_XI - 1.0),
    1.0 - GAUSS_XI ** 2,
    0.5 * GAUSS_XI * (GAUSS_XI + 1.0),
])
DSHP_U = np.column_stack([
    GAUSS_XI - 0.5,
    -2.0 * GAUSS_XI,
    GAUSS_XI + 0.5,
])
SHP_P = np.column_stack([0.5 * (1.0 - GAUSS_XI), 0.5 * (1.0 + GAUSS_XI)])
DSHP_P = np.column_stack([np.full(3, -0.5), np.full(3, 0.5)])


@njit(cache=True)
def _assemble(x, p_prev, dt, h_el, prm, u_dag, need_jac):
    n_el = h_el.shape[0]
    n_u = 2 * n_el + 1
    n_p = n_el + 1
    ndof = n_u + n_p

    l_dis, l_en, Y, h_iso, r_iso, E, m, q, mu, floor = (
        prm[0], prm[1], prm[2], prm[3], prm[4],
        prm[5], prm[6], prm[7], prm[8], prm[9])
    ld2 = l_dis * l_dis
    cY = Y * q ** (-m)

    F = np.zeros(ndof)
    J = np.zeros((ndof, ndof)) if need_jac else np.zeros((1, 1))

    for e in range(n_el):
        jac = 0.5 * h_el[e]
        iu0 = 2 * e
        ip0 = n_u + e
        for g in range(3):
            wjac = GAUSS_W[g] * jac
            du = 0.0
            for k in range(3):
                du += DSHP_U[g, k] * x[iu0 + k]
            du /= jac
            pv = SHP_P[g, 0] * x[ip0] + SHP_P[g, 1] * x[ip0 + 1]
            dp = (DSHP_P[g, 0] * x[ip0] + DSHP_P[g, 1] * x[ip0 + 1]) / jac
            pv_old = SHP_P[g, 0] * p_prev[e] + SHP_P[g, 1] * p_prev[e + 1]
            dp_old = (DSHP_P[g, 0] * p_prev[e]
                      + DSHP_P[g, 1] * p_prev[e + 1]) / jac

            a = (pv - pv_old) / dt
            b = (dp - dp_old) / dt

            T = E * (du - pv)
            if pv >= 0.0:
                r_en = h_iso * (1.0 - np.exp(-r_iso * pv))
                dr_en = h_iso * r_iso * np.exp(-r_iso * pv)
            else:
                r_en = -h_iso * (1.0 - np.exp(r_iso * pv))
                dr_en = h_iso * r_iso * np.exp(r_iso * pv)
            s_en = mu * l_en * l_en * dp

            w = np.sqrt(a * a + ld2 * b * b + floor * floor)
            wm1 = w ** (m - 1.0)
            r_dis = cY * wm1 * a
            s_dis = cY * ld2 * wm1 * b

            # residuals
            f1 = r_en + r_dis - T          # weighted by N_p
            f2 = s_en + s_dis              # weighted by dN_p
            for i in range(3):
                F[iu0 + i] += wjac * T * DSHP_U[g, i] / jac
            for j in range(2):
                F[ip0 + j] += wjac * (f1 * SHP_P[g, j]
                                      + f2 * DSHP_P[g, j] / jac)

            if need_jac:
                wm3 = wm1 / (w * w)
                dr_da = cY * wm1 * (1.0 + (m - 1.0) * a * a / (w * w))
                dr_db = cY * (m - 1.0) * a * ld2 * b * wm3
                ds_da = cY * ld2 * (m - 1.0) * a * b * wm3
                ds_db = cY * ld2 * wm1 * (1.0 + (m - 1.0) * ld2 * b * b / (w * w))

                for i in range(3):
                    bu_i = DSHP_U[g, i] / jac
                    for k in range(3):
                        J[iu0 + i, iu0 + k] += wjac * E * bu_i * DSHP_U[g, k] / jac
                    for l in range(2):
                        J[iu0 + i, ip0 + l] += wjac * bu_i * (-E) * SHP_P[g, l]
                for j in range(2):
                    np_j = SHP_P[g, j]
                    bp_j = DSHP_P[g, j] / jac
                    for k in range(3):
                        J[ip0 + j, iu0 + k] += (
                            wjac * np_j * (-E) * DSHP_U[g, k] / jac)
                    for l in range(2):
                        np_l = SHP_P[g, l]
                        bp_l = DSHP_P[g, l] / jac
                        df1 = (dr_en * np_l
                               + dr_da * np_l / dt + dr_db * bp_l / dt
                               + E * np_l)
                        df2 = (mu * l_en * l_en * bp_l
                               + ds_da * np_l / dt + ds_db * bp_l / dt)
                        J[ip0 + j, ip0 + l] += wjac * (np_j * df1 + bp_j * df2)

    # essential BCs: u(0)=0, u(L)=u_dag, eps_p(0)=eps_p(L)=0
    bc_idx = (0, n_u - 1, n_u, ndof - 1)
    bc_val = (0.0, u_dag, 0.0, 0.0)
    for t in range(4):
        i = bc_idx[t]
        F[i] = x[i] - bc_val[t]
        if need_jac:
            for c in range(ndof):
                J[i, c] = 0.0
            J[i, i] = 1.0
    return F, J


_KL = 4  # half bandwidth of the interleaved-ordered Jacobian


@njit(cache=True)
def _perm_vector(n_el):
    """Position-interleaved dof permutation: perm[orig] = banded index."""
    n_u = 2 * n_el + 1
    ndof = n_u + n_el + 1
    perm = np.empty(ndof, dtype=np.int64)
    for i in range(n_u):
        perm[i] = 3 * (i // 2) + 2 * (i % 2)
    for j in range(n_el + 1):
        perm[n_u + j] = 3 * j + 1
    return perm


@njit(cache=True)
def _to_banded(J, F, perm, scale_out):
    """Row-equilibrated banded copy (ab[i, j-i+KL]) and permuted rhs."""
    ndof = F.shape[0]
    ab = np.zeros((ndof, 2 * _KL + 1))
    fp = np.empty(ndof)
    for i in range(ndof):
        r = perm[i]
        for j in range(ndof):
            c = perm[j]
            d = c - r
            if -_KL <= d <= _KL and J[i, j] != 0.0:
                ab[r, d + _KL] = J[i, j]
        fp[r] = F[i]
    for r in range(ndof):
        s = 0.0
        for d in range(2 * _KL + 1):
            a = abs(ab[r, d])
            if a > s:
                s = a
        if s == 0.0:
            s = 1.0
        scale_out[r] = s
        for d in range(2 * _KL + 1):
            ab[r, d] /= s
        fp[r] /= s
    return ab, fp


@njit(cache=True)
def _banded_lu(ab):
    """In-place LU without pivoting; returns False on tiny pivot."""
    ndof = ab.shape[0]
    for k in range(ndof - 1):
        piv = ab[k, _KL]
        if abs(piv) < 1e-14:
            return False
        hi = min(k + _KL + 1, ndof)
        for i in range(k + 1, hi):
            m = ab[i, k - i + _KL] / piv
            ab[i, k - i + _KL] = m
            for j in range(k + 1, hi):
                ab[i, j - i + _KL] -= m * ab[k, j - k + _KL]
    return abs(ab[ndof - 1, _KL]) >= 1e-14


@njit(cache=True)
def _banded_solve(lu, b):
    ndof = lu.shape[0]
    y = b.copy()
    for i in range(1, ndof):
        lo = max(0, i - _KL)
        for k in range(lo, i):
            y[i] -= lu[i, k - i + _KL] * y[k]
    for i in range(ndof - 1, -1, -1):
        hi = min(i + _KL + 1, ndof)
        for k in range(i + 1, hi):
            y[i] -= lu[i, k - i + _KL] * y[k]
        y[i] /= lu[i, _KL]
    return y


@njit(cache=True)
def _banded_matvec(ab, v):
    ndof = ab.shape[0]
    out = np.zeros(ndof)
    for i in range(ndof):
        lo = max(0, i - _KL)
        hi = min(i + _KL + 1, ndof)
        for j in range(lo, hi):
            out[i] += ab[i, j - i + _KL] * v[j]
    return out


@njit(cache=True)
def _linear_step(J, F, perm):
    """Newton direction: equilibrated banded LU with two refinement
    passes; falls back to a dense solve on pivot breakdown."""
    ndof = F.shape[0]
    scale = np.empty(ndof)
    ab, fp = _to_banded(J, F, perm, scale)
    lu = ab.copy()
    if _banded_lu(lu):
        dxp = _banded_solve(lu, -fp)
        for _ in range(2):
            r = _banded_matvec(ab, dxp) + fp
            dxp -= _banded_solve(lu, r)
    else:
        Jd = np.empty((ndof, ndof))
        for i in range(ndof):
            for j in range(ndof):
                Jd[perm[i], perm[j]] = J[i, j] / scale[perm[i]]
        dxp = np.linalg.solve(Jd, -fp)
    dx = np.empty(ndof)
    for i in range(ndof):
        dx[i] = dxp[perm[i]]
    return dx


@njit(cache=True)
def _newton(x0, p_prev, dt, h_el, prm, u_dag, tol_rel, tol_abs, max_iter):
    """Return (x, n_iter, converged, final residual inf-norm)."""
    n_el = h_el.shape[0]
    n_u = 2 * n_el + 1
    ndof = n_u + n_el + 1

    x = x0.copy()
    x[0] = 0.0
    x[n_u - 1] = u_dag
    x[n_u] = 0.0
    x[ndof - 1] = 0.0

    F, _ = _assemble(x, p_prev, dt, h_el, prm, u_dag, False)
    fnorm = np.max(np.abs(F))
    target = max(tol_rel * fnorm, tol_abs)
    if fnorm <= target:
        return x, 0, True, fnorm

    perm = _perm_vector(n_el)
    for it in range(max_iter):
        _, J = _assemble(x, p_prev, dt, h_el, prm, u_dag, True)
        dx = _linear_step(J, F, perm)

        # backtracking line search on the residual norm
        lam = 1.0
        x_new = x + dx
        F_new, _ = _assemble(x_new, p_prev, dt, h_el, prm, u_dag, False)
        f_new = np.max(np.abs(F_new))
        for _ls in range(8):
            if np.isfinite(f_new) and f_new <= fnorm:
                break
            lam *= 0.5
            x_new = x + lam * dx
            F_new, _ = _assemble(x_new, p_prev, dt, h_el, prm, u_dag, False)
            f_new = np.max(np.abs(F_new))
        x = x_new
        # keep essential BC dofs exact against solver roundoff
        x[0] = 0.0
        x[n_u - 1] = u_dag
        x[n_u] = 0.0
        x[ndof - 1] = 0.0
        F = F_new
        fnorm = f_new
        if fnorm <= target:
            return x, it + 1, True, fnorm
    return x, max_iter, False, fnorm


def pack_params(p, floor):
    """SgpParams -> flat parameter array in PARAM_SLOTS order."""
    return np.array([
        p.l_dis, p.l_en, p.yield_strength, p.h_iso, p.r_iso,
        p.elastic_modulus, p.rate_power, p.rate_coeff,
        p.shear_modulus, floor,
    ])
