"""Hot numeric kernels: span search, B-spline derivatives, stiffness assembly.

Every kernel exists twice: a loop version compiled with numba and a
vectorized numpy version. The public names dispatch on
:data:`isofbp._accel.USE_NUMBA`; both variants stay importable so tests and
the benchmark can compare them directly.
"""
import numpy as np

from . import _accel
from ._accel import njit


# -----------------------------------------------------------------------------
# span search

@njit(cache=True)
def _find_spans_nb(knots, lo, hi, xs):
    out = np.empty(xs.shape[0], dtype=np.int64)
    for k in range(xs.shape[0]):
        x = xs[k]
        if x >= knots[hi]:
            out[k] = hi
            continue
        if x <= knots[lo]:
            out[k] = lo
            continue
        a = lo
        b = hi + 1
        while b - a > 1:
            mid = (a + b) // 2
            if knots[mid] <= x:
                a = mid
            else:
                b = mid
        out[k] = a
    return out


def _find_spans_np(knots, lo, hi, xs):
    s = np.searchsorted(knots, xs, side="right") - 1
    return np.clip(s, lo, hi).astype(np.int64)


# -----------------------------------------------------------------------------
# basis functions and derivatives (The NURBS Book, A2.3)

@njit(cache=True)
def _basis_ders_nb(knots, p, xs, spans, nd):
    npts = xs.shape[0]
    out = np.zeros((npts, nd + 1, p + 1))
    ndu = np.empty((p + 1, p + 1))
    left = np.empty(p + 1)
    right = np.empty(p + 1)
    a = np.empty((2, p + 1))
    for ip in range(npts):
        u = xs[ip]
        span = spans[ip]
        ndu[0, 0] = 1.0
        for j in range(1, p + 1):
            left[j] = u - knots[span + 1 - j]
            right[j] = knots[span + j] - u
            saved = 0.0
            for r in range(j):
                ndu[j, r] = right[r + 1] + left[j - r]
                temp = ndu[r, j - 1] / ndu[j, r]
                ndu[r, j] = saved + right[r + 1] * temp
                saved = left[j - r] * temp
            ndu[j, j] = saved
        for j in range(p + 1):
            out[ip, 0, j] = ndu[j, p]
        for r in range(p + 1):
            s1 = 0
            s2 = 1
            a[0, 0] = 1.0
            for k in range(1, nd + 1):
                d = 0.0
                rk = r - k
                pk = p - k
                if r >= k:
                    a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                    d = a[s2, 0] * ndu[rk, pk]
                j1 = 1 if rk >= -1 else -rk
                j2 = k - 1 if r - 1 <= pk else p - r
                for j in range(j1, j2 + 1):
                    a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                    d += a[s2, j] * ndu[rk + j, pk]
                if r <= pk:
                    a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                    d += a[s2, k] * ndu[r, pk]
                out[ip, k, r] = d
                s1, s2 = s2, s1
        fac = float(p)
        for k in range(1, nd + 1):
            for j in range(p + 1):
                out[ip, k, j] *= fac
            fac *= p - k
    return out


def _basis_ders_np(knots, p, xs, spans, nd):
    xs = np.asarray(xs, dtype=float)
    spans = np.asarray(spans)
    npts = xs.shape[0]
    out = np.zeros((npts, nd + 1, p + 1))
    ndu = np.empty((npts, p + 1, p + 1))
    left = np.empty((npts, p + 1))
    right = np.empty((npts, p + 1))
    ndu[:, 0, 0] = 1.0
    for j in range(1, p + 1):
        left[:, j] = xs - knots[spans + 1 - j]
        right[:, j] = knots[spans + j] - xs
        saved = np.zeros(npts)
        for r in range(j):
            ndu[:, j, r] = right[:, r + 1] + left[:, j - r]
            temp = ndu[:, r, j - 1] / ndu[:, j, r]
            ndu[:, r, j] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        ndu[:, j, j] = saved
    out[:, 0, :] = ndu[:, :, p]
    a = np.empty((2, npts, p + 1))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, :, 0] = 1.0
        for k in range(1, nd + 1):
            d = np.zeros(npts)
            rk = r - k
            pk = p - k
            if r >= k:
                a[s2, :, 0] = a[s1, :, 0] / ndu[:, pk + 1, rk]
                d = a[s2, :, 0] * ndu[:, rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, :, j] = (a[s1, :, j] - a[s1, :, j - 1]) / ndu[:, pk + 1, rk + j]
                d = d + a[s2, :, j] * ndu[:, rk + j, pk]
            if r <= pk:
                a[s2, :, k] = -a[s1, :, k - 1] / ndu[:, pk + 1, r]
                d = d + a[s2, :, k] * ndu[:, r, pk]
            out[:, k, r] = d
            s1, s2 = s2, s1
    fac = float(p)
    for k in range(1, nd + 1):
        out[:, k, :] *= fac
        fac *= p - k
    return out


# -----------------------------------------------------------------------------
# stiffness assembly on a tensor-product mesh

@njit(cache=True)
def _stiffness_coo_nb(bx, by, metric, dofx, dofy, m):
    """bx: (nex, nqx, 2, px+1); by: (ney, nqy, 2, py+1);
    metric: (nex, ney, nqx, nqy, 3) packed symmetric w*det*J^-1 J^-T."""
    nex, nqx, _, nlx = bx.shape
    ney, nqy, _, nly = by.shape
    nloc = nlx * nly
    nnz = nex * ney * nloc * nloc
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    gx = np.empty(nloc)
    gy = np.empty(nloc)
    kloc = np.empty((nloc, nloc))
    glob = np.empty(nloc, dtype=np.int64)
    pos = 0
    for ex in range(nex):
        for ey in range(ney):
            kloc[:, :] = 0.0
            for qx in range(nqx):
                for qy in range(nqy):
                    c00 = metric[ex, ey, qx, qy, 0]
                    c01 = metric[ex, ey, qx, qy, 1]
                    c11 = metric[ex, ey, qx, qy, 2]
                    for a in range(nlx):
                        for b in range(nly):
                            A = a * nly + b
                            gx[A] = bx[ex, qx, 1, a] * by[ey, qy, 0, b]
                            gy[A] = bx[ex, qx, 0, a] * by[ey, qy, 1, b]
                    for A in range(nloc):
                        ta = c00 * gx[A] + c01 * gy[A]
                        tb = c01 * gx[A] + c11 * gy[A]
                        for B in range(nloc):
                            kloc[A, B] += ta * gx[B] + tb * gy[B]
            for a in range(nlx):
                for b in range(nly):
                    glob[a * nly + b] = dofx[ex, a] * m + dofy[ey, b]
            for A in range(nloc):
                for B in range(nloc):
                    rows[pos] = glob[A]
                    cols[pos] = glob[B]
                    vals[pos] = kloc[A, B]
                    pos += 1
    return rows, cols, vals


def _stiffness_coo_np(bx, by, metric, dofx, dofy, m):
    nex, _, _, nlx = bx.shape
    ney, _, _, nly = by.shape
    # parametric gradients of local tensor functions: (nex, ney, qx, qy, a, b)
    dxi = np.einsum("xqa,yrb->xyqrab", bx[:, :, 1, :], by[:, :, 0, :])
    deta = np.einsum("xqa,yrb->xyqrab", bx[:, :, 0, :], by[:, :, 1, :])
    c00, c01, c11 = metric[..., 0], metric[..., 1], metric[..., 2]
    k = (np.einsum("xyqr,xyqrab,xyqrcd->xyabcd", c00, dxi, dxi, optimize=True)
         + np.einsum("xyqr,xyqrab,xyqrcd->xyabcd", c01, dxi, deta, optimize=True)
         + np.einsum("xyqr,xyqrab,xyqrcd->xyabcd", c01, deta, dxi, optimize=True)
         + np.einsum("xyqr,xyqrab,xyqrcd->xyabcd", c11, deta, deta, optimize=True))
    glob = dofx[:, None, :, None] * m + dofy[None, :, None, :]  # (nex, ney, a, b)
    glob = glob.reshape(nex, ney, nlx * nly)
    nloc = nlx * nly
    rows = np.broadcast_to(glob[:, :, :, None], (nex, ney, nloc, nloc)).ravel()
    cols = np.broadcast_to(glob[:, :, None, :], (nex, ney, nloc, nloc)).ravel()
    vals = k.reshape(nex, ney, nloc, nloc).ravel()
    return rows.astype(np.int64), cols.astype(np.int64), vals


# -----------------------------------------------------------------------------
# dispatch

def find_spans(knots, lo, hi, xs):
    """Span index ``s`` in ``[lo, hi]`` with ``knots[s] <= x`` for each ``x``."""
    xs = np.ascontiguousarray(xs, dtype=float)
    knots = np.ascontiguousarray(knots, dtype=float)
    if _accel.USE_NUMBA:
        return _find_spans_nb(knots, int(lo), int(hi), xs)
    return _find_spans_np(knots, lo, hi, xs)


def basis_ders(knots, p, xs, spans, nd):
    """Nonzero basis functions and derivatives, shape ``(npts, nd+1, p+1)``."""
    xs = np.ascontiguousarray(xs, dtype=float)
    spans = np.ascontiguousarray(spans, dtype=np.int64)
    knots = np.ascontiguousarray(knots, dtype=float)
    if _accel.USE_NUMBA:
        return _basis_ders_nb(knots, int(p), xs, spans, int(nd))
    return _basis_ders_np(knots, int(p), xs, spans, int(nd))


def stiffness_coo(bx, by, metric, dofx, dofy, m):
    """COO triplets of the stiffness matrix on a tensor-product mesh."""
    args = (np.ascontiguousarray(bx), np.ascontiguousarray(by),
            np.ascontiguousarray(metric),
            np.ascontiguousarray(dofx, dtype=np.int64),
            np.ascontiguousarray(dofy, dtype=np.int64), int(m))
    if _accel.USE_NUMBA:
        return _stiffness_coo_nb(*args)
    return _stiffness_coo_np(*args)
