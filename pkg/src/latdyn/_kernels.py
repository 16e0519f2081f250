"""Hot numeric kernels with numba and pure-numpy variants.

Three kernels dominate the runtime of a simulation:

* ``gather_gradient`` -- per-cell mean-subtracted corner differences
  (the discrete gradient, one d x 2^d matrix per cell),
* ``conjugate_transport`` -- the conjugate of the discrete gradient,
  turning per-cell stresses into per-point forces,
* the Cauchy-Born split cell energy/stress, which needs one small SVD
  per cell.

Each exists as ``*_numpy`` (vectorised numpy, used as fallback) and as a
numba ``@njit`` loop.  The module-level names ``gather_gradient``,
``conjugate_transport``, ``cb_energy``, ``cb_stress`` are bound to one
variant at import time, controlled by :mod:`latdyn.accel`.
"""

import numpy as np

from . import accel


# ---------------------------------------------------------------------------
# numpy variants


def gather_gradient_numpy(values, cell_corners, inv_eps):
    """Discrete gradient of point values on every stored cell.

    Parameters
    ----------
    values : (n_points, d) float array
    cell_corners : (n_cells, 2^d) int array
        Point index of corner ``i`` of each cell, in corner-label order.
    inv_eps : float
        1 / (lattice spacing).

    Returns
    -------
    (n_cells, d, 2^d) array of mean-subtracted corner values over eps.
    """
    corner_vals = values[cell_corners]  # (nc, m, d)
    corner_vals = np.swapaxes(corner_vals, 1, 2)  # (nc, d, m)
    mean = corner_vals.mean(axis=2, keepdims=True)
    return (corner_vals - mean) * inv_eps


def conjugate_transport_numpy(g, point_cell, inv_eps):
    """Apply the conjugate of the discrete gradient to a cell field.

    ``point_cell[p, i]`` is the index of the cell whose corner ``i`` is
    point ``p`` (-1 when that cell is not stored; the cell field is zero
    there).  Returns one d-vector per point; the caller restricts the
    result to interior points.
    """
    nc, d, m = g.shape
    padded = np.concatenate([g, np.zeros((1, d, m))], axis=0)
    idx = np.where(point_cell < 0, nc, point_cell)
    neighborhood = padded[idx]  # (np, m_j, d, m_i)
    diag = np.einsum("pjdj->pd", neighborhood)
    total = np.einsum("pjdi->pd", neighborhood)
    return (total / m - diag) * inv_eps


def cb_energy_numpy(F, Zc, B, k, mu):
    """Cauchy-Born split cell energy, batched over cells.

    ``F`` has shape (n, d, 2^d); ``Zc`` is the centered reference corner
    matrix, ``B = Zc^T (Zc Zc^T)^{-1}``.  The energy is the rotation
    distance of the best affine fit plus a non-affine penalty.
    """
    Fc = F - F.mean(axis=2, keepdims=True)
    M = Fc @ B
    sigma = np.linalg.svd(M, compute_uv=False)  # descending
    dist2 = ((sigma - 1.0) ** 2).sum(axis=1)
    neg = np.linalg.det(M) < 0.0
    # det < 0: the closest rotation flips the smallest singular value,
    # (s+1)^2 replaces (s-1)^2
    dist2 = np.where(neg, dist2 + 4.0 * sigma[:, -1], dist2)
    r = Fc - M @ Zc
    return 0.5 * k * dist2 + 0.5 * mu * (r * r).sum(axis=(1, 2))


def cb_stress_numpy(F, Zc, B, Bt, k, mu):
    """First derivative of the Cauchy-Born split energy, batched.

    ``Bt = (Zc Zc^T)^{-1} Zc``.  Uses the envelope formula through the
    closest rotation; the non-affine penalty differentiates exactly
    because the affine fit satisfies its normal equations.
    """
    Fc = F - F.mean(axis=2, keepdims=True)
    M = Fc @ B
    U, sigma, Vt = np.linalg.svd(M)
    neg = np.linalg.det(M) < 0.0
    if neg.any():
        Vt = Vt.copy()
        Vt[neg, -1, :] *= -1.0
    R = U @ Vt
    r = Fc - M @ Zc
    return k * ((M - R) @ Bt) + mu * r


# ---------------------------------------------------------------------------
# numba variants (compiled lazily so a numpy-only install never imports numba)

_numba_fns = None


def numba_variants():
    """Compile (once) and return the dict of numba kernel implementations."""
    global _numba_fns
    if _numba_fns is not None:
        return _numba_fns

    from numba import njit

    @njit(cache=True)
    def gather_gradient_nb(values, cell_corners, inv_eps):
        nc, m = cell_corners.shape
        d = values.shape[1]
        out = np.empty((nc, d, m))
        for c in range(nc):
            for a in range(d):
                mean = 0.0
                for i in range(m):
                    mean += values[cell_corners[c, i], a]
                mean /= m
                for i in range(m):
                    out[c, a, i] = (values[cell_corners[c, i], a] - mean) * inv_eps
        return out

    @njit(cache=True)
    def conjugate_transport_nb(g, point_cell, inv_eps):
        npts, m = point_cell.shape
        d = g.shape[1]
        out = np.zeros((npts, d))
        inv_m = 1.0 / m
        for p in range(npts):
            for j in range(m):
                c = point_cell[p, j]
                if c < 0:
                    continue
                for a in range(d):
                    colsum = 0.0
                    for i in range(m):
                        colsum += g[c, a, i]
                    out[p, a] += (inv_m * colsum - g[c, a, j]) * inv_eps
        return out

    @njit(cache=True)
    def _center(F, c, Fc):
        d, m = Fc.shape
        for a in range(d):
            mean = 0.0
            for i in range(m):
                mean += F[c, a, i]
            mean /= m
            for i in range(m):
                Fc[a, i] = F[c, a, i] - mean

    @njit(cache=True)
    def _rotation_distance2(M):
        """Squared distance to the rotations, det-sign corrected.

        d <= 2 is closed form: the 2-d singular values are Q +- R with
        Q = hypot((m11+m22)/2, (m21-m12)/2), R = hypot((m11-m22)/2,
        (m12+m21)/2), the smaller one carrying the sign of det M, which
        folds the determinant correction into (sigma - 1)^2 directly and
        stays accurate near rotations.  d = 3 falls back to LAPACK.
        """
        d = M.shape[0]
        if d == 1:
            return (M[0, 0] - 1.0) ** 2
        if d == 2:
            q = np.hypot(0.5 * (M[0, 0] + M[1, 1]), 0.5 * (M[1, 0] - M[0, 1]))
            r = np.hypot(0.5 * (M[0, 0] - M[1, 1]), 0.5 * (M[0, 1] + M[1, 0]))
            return (q + r - 1.0) ** 2 + (q - r - 1.0) ** 2
        sigma = np.linalg.svd(M.copy())[1]
        dist2 = 0.0
        for a in range(d):
            dist2 += (sigma[a] - 1.0) ** 2
        if np.linalg.det(M) < 0.0:
            dist2 += 4.0 * sigma[d - 1]
        return dist2

    @njit(cache=True)
    def _closest_rotation(M, R):
        d = M.shape[0]
        if d == 1:
            R[0, 0] = 1.0
            return
        if d == 2:
            t = M[0, 0] + M[1, 1]
            w = M[1, 0] - M[0, 1]
            s = np.hypot(t, w)
            if s < 1e-300:
                R[0, 0] = 1.0
                R[0, 1] = 0.0
                R[1, 0] = 0.0
                R[1, 1] = 1.0
                return
            R[0, 0] = t / s
            R[0, 1] = -w / s
            R[1, 0] = w / s
            R[1, 1] = t / s
            return
        U, sigma, Vt = np.linalg.svd(M.copy())
        if np.linalg.det(M) < 0.0:
            Vt = Vt.copy()
            for a in range(d):
                Vt[d - 1, a] = -Vt[d - 1, a]
        R[:, :] = U @ np.ascontiguousarray(Vt)

    @njit(cache=True)
    def cb_energy_nb(F, Zc, B, k, mu):
        n, d, m = F.shape
        out = np.empty(n)
        Fc = np.empty((d, m))
        for c in range(n):
            _center(F, c, Fc)
            M = Fc @ B
            dist2 = _rotation_distance2(M)
            r = Fc - M @ Zc
            rn = 0.0
            for a in range(d):
                for i in range(m):
                    rn += r[a, i] * r[a, i]
            out[c] = 0.5 * k * dist2 + 0.5 * mu * rn
        return out

    @njit(cache=True)
    def cb_stress_nb(F, Zc, B, Bt, k, mu):
        n, d, m = F.shape
        out = np.empty((n, d, m))
        Fc = np.empty((d, m))
        R = np.empty((d, d))
        for c in range(n):
            _center(F, c, Fc)
            M = Fc @ B
            _closest_rotation(M, R)
            r = Fc - M @ Zc
            G = k * ((M - R) @ Bt) + mu * r
            for a in range(d):
                for i in range(m):
                    out[c, a, i] = G[a, i]
        return out

    _numba_fns = {
        "gather_gradient": gather_gradient_nb,
        "conjugate_transport": conjugate_transport_nb,
        "cb_energy": cb_energy_nb,
        "cb_stress": cb_stress_nb,
    }
    return _numba_fns


NUMPY_VARIANTS = {
    "gather_gradient": gather_gradient_numpy,
    "conjugate_transport": conjugate_transport_numpy,
    "cb_energy": cb_energy_numpy,
    "cb_stress": cb_stress_numpy,
}

if accel.USE_NUMBA:
    _active = numba_variants()
else:
    _active = NUMPY_VARIANTS

gather_gradient = _active["gather_gradient"]
conjugate_transport = _active["conjugate_transport"]
cb_energy = _active["cb_energy"]
cb_stress = _active["cb_stress"]
