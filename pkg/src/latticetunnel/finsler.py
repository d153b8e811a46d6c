"""Finsler geometry of the leading symbol: distance fields and geodesics.

The zero-sublevel set K(x) = {xi : h~_0(x, xi) <= 0} is compact and
convex (hyperconvexity in the momentum); its support function

    l(x, v) = sup { xi.v : h~_0(x, xi) <= 0 }

realizes the Finsler norm, and distance fields d^j(x) = d(x, x^j) solve
the generalized eikonal equation h~_0(x, grad d^j) = 0.  The fields are
computed with a Lax-Friedrichs fast-sweeping iteration (global
viscosity, monotone first order); Hamiltonian-flow shooting is provided
as an independent cross-check of the same geometry.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.integrate import solve_ivp
from scipy.interpolate import RegularGridInterpolator
from scipy.optimize import brentq, minimize_scalar

from ._num import fd_gradient, njit
from .models import ModelError, kinetic_B, symbol_h0tilde


class EikonalError(RuntimeError):
    pass


class FlatMinimumError(RuntimeError):
    """Minimizer of d^j + d^k on the hyperplane has a flat direction."""


class DegenerateHessianError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Finsler norm (support function of the h~0 zero-sublevel set)


def _boundary_radius(model, x, u, rmax0=4.0):
    """r >= 0 with h~_0(x, r*u) = 0 along the unit direction u."""
    h0 = symbol_h0tilde(model, x, np.zeros_like(u))
    if h0 >= -1e-14:
        return 0.0
    r = rmax0
    for _ in range(60):
        if symbol_h0tilde(model, x, r * u) > 0.0:
            break
        r *= 2.0
    else:
        raise ModelError("h~0 sublevel set appears unbounded (hyperconvexity violated)")
    return brentq(lambda t: symbol_h0tilde(model, x, t * u), 0.0, r, xtol=1e-14)


def finsler_norm(model, x, v):
    """Finsler norm l(x, v); positively homogeneous in v, zero at wells."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return 0.0
    d = model.dimension
    vhat = v / nv
    if d == 1:
        return nv * _boundary_radius(model, x, vhat)
    if d == 2:
        phi0 = np.arctan2(vhat[1], vhat[0])

        def neg_obj(t):
            u = np.array([np.cos(phi0 + t), np.sin(phi0 + t)])
            return -_boundary_radius(model, x, u) * float(u @ vhat)

        res = minimize_scalar(neg_obj, bounds=(-np.pi / 2 + 1e-9, np.pi / 2 - 1e-9),
                              method="bounded", options={"xatol": 1e-12})
        return nv * max(-res.fun, _boundary_radius(model, x, vhat))
    # generic: coarse sphere scan + local polish via the 2D routine on a plane
    best = 0.0
    rng = np.random.default_rng(0)
    for _ in range(256):
        u = rng.normal(size=d)
        u /= np.linalg.norm(u)
        if u @ vhat <= 0:
            u = -u
        best = max(best, _boundary_radius(model, x, u) * float(u @ vhat))
    return nv * best


def axis_speed_lower_bound(model, axis, t0, t1, box, n_t=129, n_trans=9):
    """Lower bound for the Finsler distance across the slab t0 <= x_axis <= t1.

    The support function dominates any feasible pairing, so with
    q*(x) the positive root of h~_0(x, q e_axis) = 0 one has
    l(x, v) >= q*(x) |v_axis|; every path crossing the slab therefore has
    length at least int min_{slab} q* dt.  The slab minimum is sampled
    on a coarse transverse grid (evidence, not proof, for x-dependent
    models; exact for potentials depending on x_axis only).
    """
    d = model.dimension
    box = np.atleast_2d(np.asarray(box, dtype=float))
    lo, hi = min(t0, t1), max(t0, t1)
    ts = np.linspace(lo, hi, n_t)
    trans_axes = [np.linspace(box[nu, 0], box[nu, 1], n_trans)
                  for nu in range(d) if nu != axis]
    if trans_axes:
        mesh = np.meshgrid(*trans_axes, indexing="ij")
        trans = np.stack([m.ravel() for m in mesh], axis=1)
    else:
        trans = np.zeros((1, 0))
    e = np.zeros(d)
    e[axis] = 1.0
    speeds = np.empty(n_t)
    for i, t in enumerate(ts):
        pts = np.insert(trans, axis, t, axis=1)
        qmin = np.inf
        for p in pts:
            qmin = min(qmin, _boundary_radius(model, p, e))
        speeds[i] = qmin
    return float(np.trapezoid(speeds, ts))


# ---------------------------------------------------------------------------
# quadratic seed at a well


def agmon_seed_matrix(model, well_point, hessian):
    """A >= 0 with A B A = D2V0/2: the Hessian of d^j at the well.

    Computed through the symmetric square root of B; zero eigenvalues of
    D2V0 (degenerate well directions) give zero rows, so the seed is flat
    along them.
    """
    B = kinetic_B(model, well_point)
    Bh = sla.sqrtm(B).real
    Bhi = np.linalg.inv(Bh)
    M = Bh @ (0.5 * np.asarray(hessian)) @ Bh
    M = 0.5 * (M + M.T)
    w, Q = np.linalg.eigh(M)
    w = np.clip(w, 0.0, None)
    return Bhi @ (Q @ np.diag(np.sqrt(w)) @ Q.T) @ Bhi


# ---------------------------------------------------------------------------
# Lax-Friedrichs fast sweeping kernels


@njit(cache=True)
def _lf_sweep_1d(u, R, avals, etas, fixed, h, sig, pclip, maxit, tol):
    n = u.shape[0]
    m = etas.shape[0]
    it = 0
    while it < maxit:
        change = 0.0
        for sweep in range(2):
            if sweep == 0:
                start, stop, step = 1, n - 1, 1
            else:
                start, stop, step = n - 2, 0, -1
            i = start
            while i != stop:
                if not fixed[i]:
                    uE = u[i + 1]
                    uW = u[i - 1]
                    p = (uE - uW) / (2.0 * h)
                    if p > pclip:
                        p = pclip
                    elif p < -pclip:
                        p = -pclip
                    Hv = 0.0
                    for q in range(m):
                        Hv += avals[i, q] * (np.cosh(etas[q] * p) - 1.0)
                    new = (R[i] - Hv + sig * (uE + uW) / (2.0 * h)) / (sig / h)
                    if new < 0.0:
                        new = 0.0
                    dch = abs(new - u[i])
                    if dch > change:
                        change = dch
                    u[i] = new
                i += step
            if not fixed[0]:
                v = 2.0 * u[1] - u[2]
                if v < 0.0:
                    v = 0.0
                u[0] = v
            if not fixed[n - 1]:
                v = 2.0 * u[n - 2] - u[n - 3]
                if v < 0.0:
                    v = 0.0
                u[n - 1] = v
        it += 1
        if change < tol:
            break
    return it


@njit(cache=True)
def _lf_sweep_2d(u, R, avals, etas, fixed, h0, h1, sig0, sig1, per0, per1,
                 pclip0, pclip1, maxit, tol):
    n0, n1 = u.shape
    m = etas.shape[0]
    denom = sig0 / h0 + sig1 / h1
    it = 0
    while it < maxit:
        change = 0.0
        for s0 in range(2):
            for s1 in range(2):
                if s0 == 0:
                    i0a, i0b, i0s = 0, n0, 1
                else:
                    i0a, i0b, i0s = n0 - 1, -1, -1
                if s1 == 0:
                    i1a, i1b, i1s = 0, n1, 1
                else:
                    i1a, i1b, i1s = n1 - 1, -1, -1
                i = i0a
                while i != i0b:
                    j = i1a
                    while j != i1b:
                        if fixed[i, j]:
                            j += i1s
                            continue
                        # axis 0 neighbors
                        if i + 1 < n0:
                            uE = u[i + 1, j]
                        elif per0:
                            uE = u[0, j]
                        else:
                            uE = 2.0 * u[i, j] - u[i - 1, j]
                        if i - 1 >= 0:
                            uW = u[i - 1, j]
                        elif per0:
                            uW = u[n0 - 1, j]
                        else:
                            uW = 2.0 * u[i, j] - u[i + 1, j]
                        # axis 1 neighbors
                        if j + 1 < n1:
                            uN = u[i, j + 1]
                        elif per1:
                            uN = u[i, 0]
                        else:
                            uN = 2.0 * u[i, j] - u[i, j - 1]
                        if j - 1 >= 0:
                            uS = u[i, j - 1]
                        elif per1:
                            uS = u[i, n1 - 1]
                        else:
                            uS = 2.0 * u[i, j] - u[i, j + 1]
                        p0 = (uE - uW) / (2.0 * h0)
                        p1 = (uN - uS) / (2.0 * h1)
                        if p0 > pclip0:
                            p0 = pclip0
                        elif p0 < -pclip0:
                            p0 = -pclip0
                        if p1 > pclip1:
                            p1 = pclip1
                        elif p1 < -pclip1:
                            p1 = -pclip1
                        Hv = 0.0
                        for q in range(m):
                            arg = etas[q, 0] * p0 + etas[q, 1] * p1
                            Hv += avals[i, j, q] * (np.cosh(arg) - 1.0)
                        new = (R[i, j] - Hv + sig0 * (uE + uW) / (2.0 * h0)
                               + sig1 * (uN + uS) / (2.0 * h1)) / denom
                        if new < 0.0:
                            new = 0.0
                        dch = abs(new - u[i, j])
                        if dch > change:
                            change = dch
                        u[i, j] = new
                        j += i1s
                    i += i0s
        it += 1
        if change < tol:
            break
    return it


# ---------------------------------------------------------------------------
# distance field


@dataclass
class DistanceField:
    """Grid sample of a distance field d^j with gradient access."""

    axes: list                   # per-axis node coordinates
    values: np.ndarray           # shape = tuple(len(ax) for ax in axes)
    well_index: int
    well_point: np.ndarray
    model: object
    periodic: tuple
    seed_mask: np.ndarray = None
    residual: np.ndarray = None
    interior_mask: np.ndarray = None
    iterations: int = 0

    def __post_init__(self):
        self._interp = self._make_interp(self.values)
        self.dim = len(self.axes)
        self.h = np.array([ax[1] - ax[0] for ax in self.axes])

    def _make_interp(self, vals):
        axes = list(self.axes)
        v = vals
        for nu, per in enumerate(self.periodic):
            if per:
                # wrap-pad three layers so cubic interpolation sees the seam
                ax = axes[nu]
                step = ax[1] - ax[0]
                pad = 3
                axes[nu] = np.concatenate([ax[0] + step * np.arange(-pad, 0), ax,
                                           ax[-1] + step * np.arange(1, pad + 1)])
                idx_lo = [slice(None)] * v.ndim
                idx_hi = [slice(None)] * v.ndim
                idx_lo[nu] = slice(-pad, None)
                idx_hi[nu] = slice(0, pad)
                v = np.concatenate([v[tuple(idx_lo)], v, v[tuple(idx_hi)]], axis=nu)
        method = "cubic" if all(len(a) >= 4 for a in axes) else "linear"
        return RegularGridInterpolator(tuple(axes), v, method=method,
                                       bounds_error=False, fill_value=None)

    def _wrap(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float)).copy()
        for nu, per in enumerate(self.periodic):
            if per:
                ax = self.axes[nu]
                step = ax[1] - ax[0]
                period = step * len(ax)
                pts[:, nu] = ax[0] + np.mod(pts[:, nu] - ax[0], period)
        return pts

    def value_at(self, pts):
        pts = self._wrap(pts)
        out = self._interp(pts)
        return float(out[0]) if out.size == 1 else out

    def grad_at(self, pts):
        """Central-difference gradient at the grid spacing."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        g = np.empty_like(pts)
        for nu in range(self.dim):
            e = np.zeros(self.dim)
            e[nu] = self.h[nu]
            g[:, nu] = (self._interp(self._wrap(pts + e))
                        - self._interp(self._wrap(pts - e))) / (2.0 * self.h[nu])
        return g[0] if g.shape[0] == 1 else g

    def grid_points(self):
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def max_residual(self, mask=None):
        m = self.interior_mask if mask is None else mask
        return float(np.abs(self.residual[m]).max())


def eikonal_solve(model, well_index, box, shape, periodic=None, seed_radius=0.1,
                  tol=1e-12, maxit=200000, sigma_margin=1.05):
    """Distance field d^j on a box grid by Lax-Friedrichs fast sweeping.

    Solves H(x, grad d) = V_0(x) with H(x, p) = -t~_0(x, ip) - 0, seeded
    by the quadratic model of d^j inside a small sublevel set around the
    well.  The artificial viscosity per axis is the maximum momentum
    gradient of h~_0 over the feasible set {|p_nu| <= pclip_nu}, scaled
    by ``sigma_margin``.  Raises EikonalError when the sweep does not
    converge; the residual map is attached to the exception.
    """
    d = model.dimension
    box = np.atleast_2d(np.asarray(box, dtype=float))
    if isinstance(shape, int):
        shape = (shape,) * d
    periodic = tuple(periodic) if periodic is not None else (False,) * d
    axes = []
    for nu in range(d):
        if periodic[nu]:
            axes.append(np.linspace(box[nu, 0], box[nu, 1], shape[nu], endpoint=False))
        else:
            axes.append(np.linspace(box[nu, 0], box[nu, 1], shape[nu]))
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    grid_shape = tuple(len(a) for a in axes)

    R = model.V0(pts).reshape(grid_shape)
    if R.min() < -1e-12:
        raise EikonalError("V0 negative on the grid")
    etas = [np.asarray(e, dtype=np.int64) for e in model.hopping.offsets
            if any(v != 0 for v in e)]
    etas_arr = np.stack(etas, axis=0)
    avals = np.stack([-model.atilde(tuple(e), pts) for e in etas], axis=-1)
    if avals.min() < -1e-12:
        raise EikonalError("positive off-diagonal leading coefficient")
    avals = np.clip(avals, 0.0, None).reshape(grid_shape + (len(etas),))

    # feasible momentum box: per-axis positive root of H(t e_nu) = max V0
    rmax = float(R.max())
    pclip = np.empty(d)
    well = np.asarray(model.potential.wells[well_index], dtype=float)
    for nu in range(d):
        hi = 1.0

        # bound H(t e_nu) over the grid through the per-offset maxima
        def Hdir(t):
            out = 0.0
            for q, eta in enumerate(etas):
                amax = avals[..., q].max()
                out += amax * (np.cosh(eta[nu] * t) - 1.0)
            return out
        while Hdir(hi) < rmax and hi < 60.0:
            hi *= 2.0
        pclip[nu] = brentq(lambda t: Hdir(t) - rmax, 0.0, hi, xtol=1e-12) if Hdir(hi) >= rmax else hi
    sig = np.empty(d)
    for nu in range(d):
        s = 0.0
        for q, eta in enumerate(etas):
            arg = float(np.abs(np.asarray(eta, float)) @ pclip)
            s += avals[..., q].max() * abs(eta[nu]) * np.sinh(arg)
        sig[nu] = sigma_margin * max(s, 1e-8)
    pclip_kernel = 1.5 * pclip

    # quadratic seed
    A = agmon_seed_matrix(model, well, model.potential.hessian(well_index))
    diff = pts - well
    for nu in range(d):
        if periodic[nu]:
            period = (box[nu, 1] - box[nu, 0])
            diff[:, nu] = (diff[:, nu] + period / 2) % period - period / 2
    quad = 0.5 * np.einsum("ni,ij,nj->n", diff, A, diff).reshape(grid_shape)
    lam_max = float(np.linalg.eigvalsh(A).max())
    seed_level = 0.5 * lam_max * seed_radius**2
    seed = quad <= seed_level
    h = np.array([ax[1] - ax[0] for ax in axes])
    if not seed.any():
        raise EikonalError("seed region contains no grid point; increase seed_radius")

    pmax_all = float(pclip.max())
    u = np.where(seed, quad, seed_level + pmax_all * (np.sqrt(np.sum(diff**2, axis=1)
                                                              ).reshape(grid_shape)))
    u = np.ascontiguousarray(u, dtype=float)
    fixed = np.ascontiguousarray(seed)

    if d == 1:
        iters = _lf_sweep_1d(u, np.ascontiguousarray(R), np.ascontiguousarray(avals),
                             np.ascontiguousarray(etas_arr[:, 0]), fixed, h[0],
                             float(sig[0]), float(pclip_kernel[0]), maxit, tol)
    elif d == 2:
        iters = _lf_sweep_2d(u, np.ascontiguousarray(R), np.ascontiguousarray(avals),
                             np.ascontiguousarray(etas_arr), fixed, h[0], h[1],
                             float(sig[0]), float(sig[1]), periodic[0], periodic[1],
                             float(pclip_kernel[0]), float(pclip_kernel[1]), maxit, tol)
    else:
        raise NotImplementedError("eikonal sweep implemented for d <= 2")

    fld = DistanceField(axes=axes, values=u, well_index=well_index, well_point=well,
                        model=model, periodic=periodic, seed_mask=seed, iterations=iters)

    # central-difference residual h~0(x, grad d) and the interior band
    grads = np.empty((pts.shape[0], d))
    for nu in range(d):
        up = np.roll(u, -1, axis=nu)
        dn = np.roll(u, 1, axis=nu)
        g = (up - dn) / (2.0 * h[nu])
        if not periodic[nu]:
            sl = [slice(None)] * d
            sl[nu] = 0
            g[tuple(sl)] = np.nan
            sl[nu] = -1
            g[tuple(sl)] = np.nan
        grads[:, nu] = g.ravel()
    hv = -model.V0(pts)
    for q, eta in enumerate(etas):
        hv += avals.reshape(-1, len(etas))[:, q] * (np.cosh(grads @ np.asarray(eta, float)) - 1.0)
    res = np.abs(hv).reshape(grid_shape)
    interior = ~seed
    for nu in range(d):
        if not periodic[nu]:
            sl = [slice(None)] * d
            sl[nu] = slice(0, 3)
            m = np.ones(grid_shape, bool)
            m[tuple(sl)] = False
            sl[nu] = slice(-3, None)
            m[tuple(sl)] = False
            interior &= m
    res[np.isnan(res)] = 0.0
    fld.residual = res
    fld.interior_mask = interior

    if iters >= maxit:
        err = EikonalError(f"fast sweeping did not converge within {maxit} iterations "
                           f"(max residual {fld.max_residual():.3e})")
        err.field = fld
        raise err
    return fld


# ---------------------------------------------------------------------------
# Hamiltonian flow of h~0


@dataclass
class Trajectory:
    t: np.ndarray
    states: np.ndarray      # (n, 2d): position then momentum
    energy_drift: float
    energies: np.ndarray = None


class FlowError(RuntimeError):
    def __init__(self, msg, last_state=None):
        super().__init__(msg)
        self.last_state = last_state


def hamiltonian_flow(model, x0, xi0, horizon, rtol=1e-11, atol=1e-13, max_step=np.inf):
    """Integrate the Hamiltonian vector field of h~_0 from (x0, xi0).

    Uses a high-order adaptive Runge-Kutta integrator; coefficient
    gradients are finite differences.  Returns the trajectory with the
    reported energy drift max |h~0(t) - h~0(0)|.
    """
    d = model.dimension
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    xi0 = np.atleast_1d(np.asarray(xi0, dtype=float))

    def rhs(_t, y):
        # x' = d_xi h~0 = -sum_eta a~ eta sinh(eta.xi)
        # xi' = -d_x h~0 = grad V0 + sum_eta grad a~ cosh(eta.xi)
        x, xi = y[:d], y[d:]
        xdot = np.zeros(d)
        xidot = fd_gradient(lambda p: float(model.V0(p.reshape(1, -1))[0]), x)
        for eta in model.hopping.offsets:
            ev = np.asarray(eta, dtype=float)
            a = float(model.atilde(eta, x.reshape(1, -1))[0])
            xdot += -a * np.sinh(ev @ xi) * ev
            ga = fd_gradient(lambda p, _e=eta: float(model.atilde(_e, p.reshape(1, -1))[0]), x)
            xidot += np.cosh(ev @ xi) * ga
        return np.concatenate([xdot, xidot])

    sol = solve_ivp(rhs, (0.0, horizon), np.concatenate([x0, xi0]), method="DOP853",
                    rtol=rtol, atol=atol, max_step=max_step, dense_output=False)
    if not sol.success:
        raise FlowError(f"integrator failed: {sol.message}",
                        last_state=sol.y[:, -1] if sol.y.size else None)
    energies = np.array([symbol_h0tilde(model, s[:d], s[d:]) for s in sol.y.T])
    drift = float(np.abs(energies - energies[0]).max())
    return Trajectory(t=sol.t, states=sol.y.T, energy_drift=drift, energies=energies)


# ---------------------------------------------------------------------------
# minimal geodesics, transverse Hessians, geodesic manifolds


@dataclass
class Geodesic:
    path: np.ndarray
    action: float
    y0: np.ndarray
    S_jk: float
    crossing_tangent: np.ndarray
    transversal: bool


@dataclass
class GeodesicManifold:
    points: np.ndarray          # (m, d) nodes on G0 in H_d
    weights: np.ndarray         # surface quadrature weights
    ell: int
    frames: list                # per node: (n_normal, d) in-plane normal vectors
    S_jk: float
    tol: float = 0.0


def _slice_samples(dj, dk, axis=-1):
    """Nodes of the H_d slice {x_axis = 0} and f = d^j + d^k there."""
    d = dj.dim
    axis = axis % d
    axes = [dj.axes[nu] for nu in range(d) if nu != axis]
    if axes:
        mesh = np.meshgrid(*axes, indexing="ij")
        inplane = np.stack([m.ravel() for m in mesh], axis=1)
        full = np.insert(inplane, axis, 0.0, axis=1)
    else:
        full = np.zeros((1, d))
    f = np.atleast_1d(dj.value_at(full) + dk.value_at(full))
    return full, f


def steepest_descent_path(model, fld, start, step=None, max_steps=200000):
    """Steepest-descent polyline of a distance field from ``start`` to its well.

    Returns (path, action) with the Finsler length of the polyline; the
    action is a high-accuracy estimate of the true d-value at ``start``
    (path quadrature does not inherit the sweeping solution bias).
    """
    step = step if step is not None else 0.5 * float(fld.h.min())
    x = np.asarray(start, dtype=float).copy()
    path = [x.copy()]
    target = fld.well_point
    for _ in range(max_steps):
        g = np.atleast_1d(fld.grad_at(x))
        ng = np.linalg.norm(g)
        if ng < 1e-9 or float(fld.value_at(x)) < 1e-4:
            break
        x = x - step * g / ng
        path.append(x.copy())
        if np.linalg.norm(x - target) < max(2 * step, 1e-3):
            break
    path.append(target.copy())
    path = np.array(path)
    action = 0.0
    for a, b in zip(path[:-1], path[1:]):
        seg = b - a
        if np.linalg.norm(seg) > 0:
            action += finsler_norm(model, 0.5 * (a + b), seg)
    return path, float(action)


def minimal_geodesic(model, dj, dk, axis=-1, flat_curvature_floor=1e-4,
                     descent_step=None, max_steps=200000):
    """Crossing point, action and path of the minimal geodesic.

    Minimizes d^j + d^k over the hyperplane {x_d = 0}; raises
    FlatMinimumError when the minimizer has a flat direction (manifold
    case, handled by manifold_detect).  The path is reconstructed by
    steepest descent of each field from y0 and the Finsler action along
    it is returned for cross-validation against S_jk.
    """
    d = dj.dim
    axis = axis % d
    pts, f = _slice_samples(dj, dk, axis)
    imin = int(np.argmin(f))
    y0 = pts[imin].copy()
    fmin = float(f[imin])

    # flat-direction probe: in-plane quadratic fit around the minimizer
    for nu in range(d):
        if nu == axis:
            continue
        h = dj.h[nu]
        e = np.zeros(d)
        e[nu] = h
        fp = dj.value_at(y0 + e) + dk.value_at(y0 + e)
        fm = dj.value_at(y0 - e) + dk.value_at(y0 - e)
        curv = (fp - 2 * fmin + fm) / h**2
        if curv < flat_curvature_floor:
            raise FlatMinimumError(
                f"flat minimizer direction along axis {nu} (curvature {curv:.3e}); "
                "use manifold_detect")
        # parabolic refinement of the crossing coordinate
        y0[nu] -= 0.5 * h * (fp - fm) / (fp - 2 * fmin + fm)
    S = float(dj.value_at(y0) + dk.value_at(y0))

    pj, act_j = steepest_descent_path(model, dj, y0, step=descent_step,
                                      max_steps=max_steps)
    pk, act_k = steepest_descent_path(model, dk, y0, step=descent_step,
                                      max_steps=max_steps)
    path = np.vstack([pj[::-1], pk[1:]])
    action = act_j + act_k

    k = len(pj)
    if k >= 2:
        tangent = path[k] - path[k - 2] if k < len(path) else path[-1] - path[-2]
    else:
        tangent = path[1] - path[0]
    tangent = tangent / np.linalg.norm(tangent)
    transversal = abs(tangent[axis]) > 1e-3
    if not transversal:
        warnings.warn("geodesic crossing is nearly tangent to the hyperplane")
    return Geodesic(path=path, action=float(action), y0=y0, S_jk=S,
                    crossing_tangent=tangent, transversal=transversal)


def transverse_hessian(dj, dk, at, axis=-1, step=None):
    """Central-difference Hessian of d^j + d^k in the in-plane coordinates.

    ``at`` is a point of H_d (the axis coordinate is forced to 0).  In
    d = 1 the matrix is empty with det = 1 by convention.  Raises
    DegenerateHessianError when an eigenvalue is not positive.
    """
    d = dj.dim
    axis = axis % d
    inplane = [nu for nu in range(d) if nu != axis]
    if not inplane:
        return np.zeros((0, 0))
    y = np.asarray(at, dtype=float).copy()
    y[axis] = 0.0
    hs = {nu: (step if step is not None else 4.0 * dj.h[nu]) for nu in inplane}

    def F(p):
        return float(dj.value_at(p) + dk.value_at(p))

    n = len(inplane)
    H = np.empty((n, n))
    f0 = F(y)
    for a, nu in enumerate(inplane):
        e = np.zeros(d)
        e[nu] = hs[nu]
        H[a, a] = (F(y + e) - 2 * f0 + F(y - e)) / hs[nu]**2
    for a, nu in enumerate(inplane):
        for b, mu in enumerate(inplane):
            if b <= a:
                continue
            en = np.zeros(d)
            em = np.zeros(d)
            en[nu] = hs[nu]
            em[mu] = hs[mu]
            v = (F(y + en + em) - F(y + en - em) - F(y - en + em) + F(y - en - em)) \
                / (4.0 * hs[nu] * hs[mu])
            H[a, b] = v
            H[b, a] = v
    H = 0.5 * (H + H.T)
    if H.size and np.linalg.eigvalsh(H).min() <= 0.0:
        raise DegenerateHessianError(
            f"transverse Hessian not positive definite at {y} "
            f"(eigenvalues {np.linalg.eigvalsh(H)})")
    return H


def manifold_detect(dj, dk, axis=-1, tol=None):
    """Connected sublevel component of d^j + d^k on H_d as a manifold G0.

    Extracts nodes with f <= fmin + tol, estimates the dimension ell by
    principal-component analysis of the node cloud, and equips the nodes
    with surface weights and in-plane normal frames.  A single-node
    minimizer returns the degenerate ell = 0 manifold {y0}.
    """
    d = dj.dim
    axis = axis % d
    pts, f = _slice_samples(dj, dk, axis)
    fmin = float(f.min())
    if tol is None:
        tol = max(1e-10, 1e-6 * (float(f.max()) - fmin))
    sel = pts[f <= fmin + tol]
    inplane_idx = [nu for nu in range(d) if nu != axis]

    if sel.shape[0] == 1 or not inplane_idx:
        y0 = sel[0]
        frames = [np.eye(d)[inplane_idx]] if inplane_idx else [np.zeros((0, d))]
        return GeodesicManifold(points=sel, weights=np.array([1.0]), ell=0,
                                frames=frames, S_jk=fmin, tol=tol)

    coords = sel[:, inplane_idx]
    spread = coords.max(axis=0) - coords.min(axis=0)
    hgrid = np.array([dj.h[nu] for nu in inplane_idx])
    active = spread > 3.0 * hgrid
    ell = int(np.count_nonzero(active))
    if ell == 0:
        # cluster of nodes around a single minimizer: collapse to centroid
        y0 = sel.mean(axis=0)
        y0[axis] = 0.0
        frames = [np.eye(d)[inplane_idx]]
        return GeodesicManifold(points=y0.reshape(1, -1), weights=np.array([1.0]),
                                ell=0, frames=frames, S_jk=fmin, tol=tol)

    if len(inplane_idx) > 1:
        c = coords - coords.mean(axis=0)
        w, Q = np.linalg.eigh(c.T @ c / len(c))
        order = np.argsort(w)[::-1]
        w = w[order]
        if ell < len(w) and w[ell] > 0.25 * w[ell - 1]:
            raise EikonalError("ambiguous manifold dimension: PCA spectrum has no gap")

    if ell != 1:
        raise NotImplementedError("manifold quadrature implemented for ell <= 1")

    # order nodes along the active direction; arc weights (periodic aware)
    nu_act = inplane_idx[int(np.flatnonzero(active)[0])]
    order = np.argsort(sel[:, nu_act])
    sel = sel[order]
    t = sel[:, nu_act]
    per = dj.periodic[nu_act]
    if per:
        ax = dj.axes[nu_act]
        period = (ax[1] - ax[0]) * len(ax)
        gaps = np.diff(np.concatenate([t, [t[0] + period]]))
        weights = 0.5 * (gaps + np.roll(gaps, 1))
    else:
        gaps = np.diff(t)
        weights = np.empty(len(t))
        weights[0] = 0.5 * gaps[0]
        weights[-1] = 0.5 * gaps[-1]
        weights[1:-1] = 0.5 * (gaps[:-1] + gaps[1:])

    # in-plane normals: coordinate directions orthogonal to the active one
    frame = np.eye(d)[[nu for nu in inplane_idx if nu != nu_act]]
    frames = [frame for _ in range(len(sel))]
    return GeodesicManifold(points=sel, weights=weights, ell=1, frames=frames,
                            S_jk=fmin, tol=tol)
