"""Lattice domains and the action of the difference operator.

A LatticeDomain is a finite piece of (eps Z)^d: an axis-aligned box
intersected with the lattice, optionally masked, with a bijection
between lattice points and linear indices.  Axes may be periodic (the
box length must then be an integer multiple of eps).  Functions on the
domain are plain 1-d numpy arrays in index order; everything outside
the domain is treated as zero (embedding into l^2 by zero extension).
"""

import numpy as np

from .models import ModelError


class LatticeDomain:
    """Box (and optional mask) intersected with the eps-lattice."""

    def __init__(self, eps, box, mask=None, periodic=None):
        self.eps = float(eps)
        box = np.atleast_2d(np.asarray(box, dtype=float))
        if box.shape[1] != 2:
            raise ModelError("box must be (d, 2) of [lo, hi] rows")
        self.box = box
        self.dim = box.shape[0]
        self.periodic = tuple(periodic) if periodic is not None else (False,) * self.dim
        if len(self.periodic) != self.dim:
            raise ModelError("periodic flags do not match dimension")

        axes = []
        self._nlo = np.empty(self.dim, dtype=np.int64)
        self._count = np.empty(self.dim, dtype=np.int64)
        for nu in range(self.dim):
            lo, hi = box[nu]
            if self.periodic[nu]:
                period = hi - lo
                n_axis = int(round(period / self.eps))
                if abs(n_axis * self.eps - period) > 1e-9 * max(1.0, period):
                    raise ModelError("periodic axis length must be a multiple of eps")
                nlo = int(np.ceil(lo / self.eps - 1e-9))
                ns = nlo + np.arange(n_axis)
            else:
                nlo = int(np.ceil(lo / self.eps - 1e-9))
                nhi = int(np.floor(hi / self.eps + 1e-9))
                if nhi < nlo:
                    raise ModelError("box contains no lattice points along an axis")
                ns = np.arange(nlo, nhi + 1)
            self._nlo[nu] = ns[0]
            self._count[nu] = len(ns)
            axes.append(ns)
        self.axes_n = axes

        mesh = np.meshgrid(*axes, indexing="ij")
        nmat = np.stack([m.ravel() for m in mesh], axis=1)
        pts = nmat * self.eps
        if mask is not None:
            keep = np.asarray(mask(pts), dtype=bool)
            nmat = nmat[keep]
            pts = pts[keep]
        self.nmat = nmat
        self.points = pts
        self.size = pts.shape[0]
        if self.size == 0:
            raise ModelError("domain is empty")

        # dense linear-index grid over the bounding integer box (-1 = absent)
        self._grid = -np.ones(tuple(self._count), dtype=np.int64)
        rel = tuple((nmat[:, nu] - self._nlo[nu]) for nu in range(self.dim))
        self._grid[rel] = np.arange(self.size)
        self._shift_cache = {}

    def index_of(self, n):
        """Linear index of the lattice point with integer coordinates n, or -1."""
        n = np.asarray(n, dtype=np.int64).reshape(self.dim)
        rel = np.empty(self.dim, dtype=np.int64)
        for nu in range(self.dim):
            r = n[nu] - self._nlo[nu]
            if self.periodic[nu]:
                r %= self._count[nu]
            elif r < 0 or r >= self._count[nu]:
                return -1
            rel[nu] = r
        return int(self._grid[tuple(rel)])

    def shift_table(self, eta):
        """Index of point + eps*eta for every point (-1 when outside)."""
        key = tuple(int(v) for v in eta)
        tab = self._shift_cache.get(key)
        if tab is not None:
            return tab
        rel = np.empty_like(self.nmat)
        valid = np.ones(self.size, dtype=bool)
        for nu in range(self.dim):
            r = self.nmat[:, nu] + key[nu] - self._nlo[nu]
            if self.periodic[nu]:
                r = r % self._count[nu]
            else:
                valid &= (r >= 0) & (r < self._count[nu])
                r = np.clip(r, 0, self._count[nu] - 1)
            rel[:, nu] = r
        tab = self._grid[tuple(rel[:, nu] for nu in range(self.dim))].copy()
        tab[~valid] = -1
        self._shift_cache[key] = tab
        return tab

    def indicator(self, region):
        """Boolean array marking points for which ``region(points)`` is true."""
        return np.asarray(region(self.points), dtype=bool)

    def nearest_index(self, x):
        """Index of the lattice point closest to x (periodic-aware)."""
        x = np.asarray(x, dtype=float).reshape(1, self.dim)
        diff = self.points - x
        for nu in range(self.dim):
            if self.periodic[nu]:
                period = self._count[nu] * self.eps
                diff[:, nu] = (diff[:, nu] + period / 2) % period - period / 2
        return int(np.argmin(np.sum(diff**2, axis=1)))


def box_region(box):
    """Region predicate for an axis-aligned box (d, 2), closed, fuzzed."""
    box = np.atleast_2d(np.asarray(box, dtype=float))

    def region(pts):
        pts = np.atleast_2d(pts)
        ok = np.ones(pts.shape[0], dtype=bool)
        for nu in range(box.shape[0]):
            ok &= (pts[:, nu] >= box[nu, 0] - 1e-12) & (pts[:, nu] <= box[nu, 1] + 1e-12)
        return ok

    return region


def apply_operator(model, domain, u, eps=None, dirichlet=None):
    """Apply H_eps (or its Dirichlet restriction) to a lattice function.

    With a ``dirichlet`` boolean mask M the result is 1_M H (u restricted
    to M); u must already be supported in M.  Values reached outside the
    domain are zero (compact support embedding).
    """
    if eps is None:
        eps = domain.eps
    u = np.asarray(u, dtype=float)
    if u.shape != (domain.size,):
        raise ModelError("u is not indexed by the domain")
    if dirichlet is not None:
        dirichlet = np.asarray(dirichlet, dtype=bool)
        if np.any(u[~dirichlet] != 0.0):
            raise ModelError("u not supported in the Dirichlet sub-domain")
    pts = domain.points
    out = model.potential.v_eps(pts, eps) * u
    for eta in model.hopping.offsets:
        tab = domain.shift_table(eta)
        vals = np.where(tab >= 0, u[np.clip(tab, 0, None)], 0.0)
        if dirichlet is not None:
            vals = np.where((tab >= 0) & dirichlet[np.clip(tab, 0, None)], vals, 0.0)
        out += model.hopping.a_eps(eta, pts, eps) * vals
    if dirichlet is not None:
        out[~dirichlet] = 0.0
    return out


def assemble_operator(model, domain, eps=None, dirichlet=None, sparse=False):
    """Matrix of H_eps on the domain (or of 1_M H|_M on the masked points).

    With ``dirichlet`` given, returns the matrix on the sub-domain index
    set together with the array of selected indices.
    """
    if eps is None:
        eps = domain.eps
    pts = domain.points
    n = domain.size
    if dirichlet is not None:
        sel = np.flatnonzero(np.asarray(dirichlet, dtype=bool))
        pos = -np.ones(n, dtype=np.int64)
        pos[sel] = np.arange(len(sel))
    else:
        sel = np.arange(n)
        pos = np.arange(n)

    rows, cols, vals = [], [], []
    diag = model.potential.v_eps(pts[sel], eps)
    for eta in model.hopping.offsets:
        tab = domain.shift_table(eta)[sel]
        a = model.hopping.a_eps(eta, pts[sel], eps)
        ok = tab >= 0
        tgt = np.where(ok, pos[np.clip(tab, 0, None)], -1)
        ok &= tgt >= 0
        rows.append(np.arange(len(sel))[ok])
        cols.append(tgt[ok])
        vals.append(a[ok])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)

    if sparse:
        import scipy.sparse as sp

        mat = sp.coo_matrix((vals, (rows, cols)), shape=(len(sel), len(sel))).tocsr()
        mat += sp.diags(diag)
        return mat, sel
    mat = np.zeros((len(sel), len(sel)))
    np.add.at(mat, (rows, cols), vals)
    mat[np.arange(len(sel)), np.arange(len(sel))] += diag
    return mat, sel
