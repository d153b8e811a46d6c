"""Small numerical helpers shared across the package.

Finite-difference derivatives of user-supplied coefficient callables
(symbolic differentiation is deliberately out of scope), plus a thin
shim so the sweeping kernels run with or without numba.
"""

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


_EPS = np.finfo(float).eps
GRAD_STEP = _EPS ** (1.0 / 3.0)   # optimal-ish for central first differences
HESS_STEP = _EPS ** 0.25


def fd_gradient(fn, x, step=None):
    """Central-difference gradient of a scalar function of a point in R^d."""
    x = np.asarray(x, dtype=float)
    d = x.size
    h = step if step is not None else GRAD_STEP * max(1.0, float(np.abs(x).max()))
    g = np.empty(d)
    for nu in range(d):
        e = np.zeros(d)
        e[nu] = h
        g[nu] = (fn(x + e) - fn(x - e)) / (2.0 * h)
    return g


def fd_hessian(fn, x, step=None):
    """Central-difference Hessian of a scalar function of a point in R^d."""
    x = np.asarray(x, dtype=float)
    d = x.size
    h = step if step is not None else HESS_STEP * max(1.0, float(np.abs(x).max()))
    H = np.empty((d, d))
    f0 = fn(x)
    for nu in range(d):
        e = np.zeros(d)
        e[nu] = h
        H[nu, nu] = (fn(x + e) - 2.0 * f0 + fn(x - e)) / h**2
    for nu in range(d):
        for mu in range(nu + 1, d):
            en = np.zeros(d)
            em = np.zeros(d)
            en[nu] = h
            em[mu] = h
            v = (fn(x + en + em) - fn(x + en - em)
                 - fn(x - en + em) + fn(x - en - em)) / (4.0 * h**2)
            H[nu, mu] = v
            H[mu, nu] = v
    return 0.5 * (H + H.T)


def fd_directional(fn, x, direction, order, step=None):
    """n-th directional derivative of ``fn`` at ``x`` along ``direction``.

    Uses central stencils of width ``order + 1`` (exact on polynomials of
    degree ``order + 1``); good enough for the low orders used in the
    quantization-conversion expansion.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(direction, dtype=float)
    if order == 0:
        return fn(x)
    h = step if step is not None else _EPS ** (1.0 / (2.0 + order)) * max(1.0, float(np.abs(x).max()))
    if order == 1:
        return (fn(x + h * v) - fn(x - h * v)) / (2.0 * h)
    if order == 2:
        return (fn(x + h * v) - 2.0 * fn(x) + fn(x - h * v)) / h**2
    if order == 3:
        return (fn(x + 2 * h * v) - 2 * fn(x + h * v)
                + 2 * fn(x - h * v) - fn(x - 2 * h * v)) / (2.0 * h**3)
    raise ValueError(f"directional derivatives of order {order} not supported")


def as_points(x, dim):
    """Normalize point input to shape (n, dim); returns (pts, was_single)."""
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        if dim != 1:
            raise ValueError("scalar point given for a %d-dimensional model" % dim)
        return a.reshape(1, 1), True
    if a.ndim == 1:
        if a.size == dim:
            return a.reshape(1, dim), True
        if dim == 1:
            return a.reshape(-1, 1), False
        raise ValueError(f"point of length {a.size} for a {dim}-dimensional model")
    if a.shape[-1] != dim:
        raise ValueError(f"points with last axis {a.shape[-1]} for dimension {dim}")
    return a.reshape(-1, dim), False
