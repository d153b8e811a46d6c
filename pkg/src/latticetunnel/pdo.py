"""Periodic-symbol pseudodifferential calculus on the scaled lattice.

Symbols are finite Fourier series in the momentum,

    q(x[, y], xi) = sum_eta c_eta(x[, y]) e^{-i eta.xi},

so every quantization integral over the torus collapses exactly by
orthogonality: operators are finite stencils, bit-reproducible, with no
quadrature error.  This matches the structure of the transfer-operator
symbol and makes the calculus identities (restriction, quantization
conversion, exponential-weight conjugation, window commutators) hold to
round-off, which is what the exactness suite asserts.
"""

from dataclasses import dataclass
from math import factorial

import numpy as np
from scipy.integrate import quad

from ._num import fd_directional
from .models import ModelError

_LOG_EPS = -np.log(np.finfo(float).eps)


def _as_cfun(c, kind):
    if callable(c):
        return c
    val = complex(c)
    if kind == "xy":
        return lambda x, y, _v=val: np.full(np.atleast_2d(x).shape[0], _v)
    return lambda x, _v=val: np.full(np.atleast_2d(x).shape[0], _v)


@dataclass
class PeriodicSymbol:
    """Finite Fourier symbol; one-variable ("x") or two-variable ("xy").

    fourier maps integer offsets eta to coefficient functions c_eta(x)
    or c_eta(x, y) (vectorized over point arrays) or constants.  order_k
    and delta are bookkeeping markers for the symbol class S^k_delta.
    """

    fourier: dict
    kind: str = "x"
    dim: int = 1
    order_k: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("x", "xy"):
            raise ModelError("symbol kind must be 'x' or 'xy'")
        norm = {}
        for eta, c in self.fourier.items():
            key = tuple(int(v) for v in (eta if isinstance(eta, (tuple, list, np.ndarray)) else (eta,)))
            norm[key] = _as_cfun(c, self.kind)
        self.fourier = norm
        dims = {len(k) for k in norm}
        if len(dims) > 1:
            raise ModelError("inconsistent offset dimensions in symbol")
        if dims:
            self.dim = dims.pop()

    def coeff(self, eta, x, y=None):
        fn = self.fourier.get(tuple(eta))
        if fn is None:
            return np.zeros(np.atleast_2d(x).shape[0], dtype=complex)
        if self.kind == "xy":
            return np.asarray(fn(np.atleast_2d(x), np.atleast_2d(y)), dtype=complex).reshape(-1)
        return np.asarray(fn(np.atleast_2d(x)), dtype=complex).reshape(-1)

    def evaluate(self, x, xi, y=None):
        """q(x[, y], xi); xi may be complex (the symbol is entire in xi)."""
        xi = np.asarray(xi, dtype=complex).reshape(-1)
        n = np.atleast_2d(x).shape[0]
        out = np.zeros(n, dtype=complex)
        for eta in self.fourier:
            out += self.coeff(eta, x, y) * np.exp(-1j * (np.asarray(eta, float) @ xi))
        return out[0] if np.asarray(x).ndim <= 1 else out

    def adjoint(self):
        """q*(x, xi) = conj(q(x, conj(xi))): coefficients conj(c_{-eta})."""
        if self.kind != "x":
            raise ModelError("adjoint implemented for one-variable symbols")
        conj = {}
        for eta, fn in self.fourier.items():
            meta = tuple(-v for v in eta)
            conj[meta] = (lambda x, _f=fn: np.conj(np.asarray(_f(np.atleast_2d(x)))))
        return PeriodicSymbol(conj, kind="x", dim=self.dim,
                              order_k=self.order_k, delta=self.delta)

    @staticmethod
    def from_model(model, eps, order=None):
        """The transfer-operator symbol t(x, xi; eps) as a one-variable symbol."""
        four = {}
        for eta in model.hopping.offsets:
            if order is None:
                four[eta] = (lambda x, _e=eta, _m=model, _eps=eps:
                             _m.hopping.a_eps(_e, np.atleast_2d(x), _eps))
            else:
                four[eta] = (lambda x, _e=eta, _m=model, _k=order:
                             _m.hopping.a_order(_e, np.atleast_2d(x), _k))
        return PeriodicSymbol(four, kind="x", dim=model.dimension)


def quantize(symbol, t, u, domain, eps=None):
    """Apply Op^T_{eps,t}(q) (or the two-variable quantization) to u.

    For finite Fourier symbols the torus integral collapses:
        one-variable: (Op u)(x) = sum_eta c_eta(x + t*eps*eta) u(x + eps*eta)
        two-variable: (Op u)(x) = sum_eta c_eta(x, x + eps*eta) u(x + eps*eta)
    Values reached outside the domain are zero (compact support).
    """
    if eps is None:
        eps = domain.eps
    u = np.asarray(u)
    out = np.zeros(domain.size, dtype=complex)
    pts = domain.points
    for eta in symbol.fourier:
        tab = domain.shift_table(eta)
        ok = tab >= 0
        tgt = np.clip(tab, 0, None)
        shifted = pts + eps * np.asarray(eta, dtype=float)
        if symbol.kind == "xy":
            c = symbol.coeff(eta, pts, shifted)
        else:
            c = symbol.coeff(eta, pts + t * eps * np.asarray(eta, dtype=float))
        out += np.where(ok, c * u[tgt], 0.0)
    if np.isrealobj(u) and np.abs(out.imag).max() <= 1e-14 * max(1.0, np.abs(out.real).max()):
        return out.real
    return out


def quantize_quadrature(symbol, t, u, domain, eps=None, n_nodes=None):
    """Reference evaluation of Op^T through the actual torus integrals.

    The xi-integral of a trigonometric polynomial is computed exactly by
    the periodic trapezoid rule with enough nodes; this cross-checks the
    stencil-collapse fast path.  d = 1 only, O(n^2): test sized.
    """
    if eps is None:
        eps = domain.eps
    if domain.dim != 1:
        raise NotImplementedError("quadrature reference implemented in d = 1")
    u = np.asarray(u)
    pts = domain.points[:, 0]
    nmat = domain.nmat[:, 0]
    max_eta = max(abs(e[0]) for e in symbol.fourier)
    span = int(nmat.max() - nmat.min())
    M = n_nodes or 2 * (span + max_eta) + 3
    xi = -np.pi + 2 * np.pi * np.arange(M) / M
    out = np.zeros(domain.size, dtype=complex)
    for i, x in enumerate(pts):
        acc = 0.0
        for j, y in enumerate(pts):
            if u[j] == 0:
                continue
            base = (1.0 - t) * x + t * y
            vals = np.zeros(M, dtype=complex)
            for eta, fn in symbol.fourier.items():
                c = complex(np.asarray(fn(np.array([[base]])))[0])
                vals += c * np.exp(-1j * eta[0] * xi)
            integrand = np.exp(1j * (y - x) / eps * xi) * vals
            acc += u[j] * integrand.mean()   # (2pi)^{-1} * trapezoid
        out[i] = acc
    if np.isrealobj(u) and np.abs(out.imag).max() <= 1e-12 * max(1.0, np.abs(out.real).max()):
        return out.real
    return out


def restriction_check(symbol, u_smooth, domain, eps=None, t=0.0):
    """Max deviation between restrict(Op_eps(q) u) and Op^T_eps(q) restrict(u).

    The continuum quantization of a finite-Fourier symbol collapses to
    the same stencil in closed form, evaluated off-lattice on the smooth
    u; the lattice side acts on the restriction.  Expected ~ 0.
    """
    if eps is None:
        eps = domain.eps
    pts = domain.points
    u_lat = np.asarray(u_smooth(pts), dtype=float).reshape(-1)
    lattice_side = quantize(symbol, t, u_lat, domain, eps=eps)

    cont = np.zeros(domain.size, dtype=complex)
    for eta in symbol.fourier:
        shifted = pts + eps * np.asarray(eta, dtype=float)
        if symbol.kind == "xy":
            c = symbol.coeff(eta, pts, shifted)
        else:
            c = symbol.coeff(eta, pts + t * eps * np.asarray(eta, dtype=float))
        cont += c * np.asarray(u_smooth(shifted), dtype=float).reshape(-1)

    # the lattice side loses stencil reach at the domain edge; compare inside
    inner = np.ones(domain.size, dtype=bool)
    for eta in symbol.fourier:
        inner &= domain.shift_table(eta) >= 0
    dev = np.abs(cont - lattice_side)[inner]
    return float(dev.max()) if dev.size else 0.0


def convert_quantization(symbol, t, eps, n_orders=3):
    """The one-variable symbol a_t with Op_t(a_t) = Op~(a), plus its expansion.

    For a finite Fourier two-variable symbol the conversion is exact on
    coefficients: c^t_eta(x) = c_eta(x - t*eps*eta, x + (1-t)*eps*eta).
    The asymptotic expansion terms a_{t,j} are realized by directional
    derivatives (finite differences) of the coefficients; the j-th term
    carries the direction (-t*eta, (1-t)*eta) to order j.  Returns
    (exact_symbol, [term_0, ..., term_{n_orders-1}]).
    """
    if symbol.kind != "xy":
        raise ModelError("convert_quantization expects a two-variable symbol")
    if n_orders > 4:
        raise ModelError("expansion orders beyond 3 exceed the finite-difference budget")

    exact = {}
    for eta, fn in symbol.fourier.items():
        ev = np.asarray(eta, dtype=float)

        def cf(x, _fn=fn, _ev=ev):
            x = np.atleast_2d(x)
            return _fn(x - t * eps * _ev, x + (1.0 - t) * eps * _ev)

        exact[eta] = cf
    exact_sym = PeriodicSymbol(exact, kind="x", dim=symbol.dim,
                               order_k=symbol.order_k, delta=symbol.delta)

    terms = []
    for j in range(n_orders):
        tj = {}
        for eta, fn in symbol.fourier.items():
            ev = np.asarray(eta, dtype=float)

            def cj(x, _fn=fn, _ev=ev, _j=j):
                x = np.atleast_2d(x)
                out = np.empty(x.shape[0], dtype=complex)
                for i, xi_pt in enumerate(x):
                    g = lambda s: complex(np.asarray(
                        _fn((xi_pt - s * t * _ev).reshape(1, -1),
                            (xi_pt + s * (1.0 - t) * _ev).reshape(1, -1)))[0])
                    gr = lambda s: g(float(s[0])).real
                    gi = lambda s: g(float(s[0])).imag
                    der = (fd_directional(gr, np.zeros(1), np.ones(1), _j)
                           + 1j * fd_directional(gi, np.zeros(1), np.ones(1), _j))
                    out[i] = der / factorial(_j)
                return out

            tj[eta] = cj
        terms.append(PeriodicSymbol(tj, kind="x", dim=symbol.dim))
    return exact_sym, terms


def weight_phase(psi, x, y, n_gauss=16):
    """Phi(x, y) = int_0^1 grad psi((1-s) x + s y) ds by Gauss-Legendre.

    psi takes a point array (n, d) -> (n,).  Exact in closed form for
    polynomial psi up to the quadrature's degree (well beyond quadratic).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    d = x.shape[1]
    nodes, wts = np.polynomial.legendre.leggauss(n_gauss)
    s = 0.5 * (nodes + 1.0)
    w = 0.5 * wts
    out = np.zeros((x.shape[0], d))
    h = np.finfo(float).eps ** (1.0 / 3.0)
    for sv, wv in zip(s, w):
        mid = (1.0 - sv) * x + sv * y
        for nu in range(d):
            e = np.zeros(d)
            e[nu] = h
            out[:, nu] += wv * (np.asarray(psi(mid + e)) - np.asarray(psi(mid - e))) / (2 * h)
    return out


def conjugate_weight(symbol, psi, eps, n_gauss=16):
    """Symbol of e^{psi/eps} Op~(q) e^{-psi/eps}: xi -> xi - i Phi(x, y).

    On Fourier coefficients the shift multiplies c_eta by e^{-eta.Phi}.
    On the hop diagonal y = x + eps*eta (the only pairs a quantization
    ever evaluates) the pairing telescopes exactly,
        eta . Phi(x, y) = (psi(y) - psi(x)) / eps,
    by the fundamental theorem of calculus, so the operator identity
    holds to round-off for every finite stencil and every smooth psi;
    off-diagonal pairs fall back to Gauss-Legendre for Phi.
    """
    if symbol.kind != "xy":
        sym2 = PeriodicSymbol({eta: (lambda x, y, _f=fn: _f(np.atleast_2d(x)))
                               for eta, fn in symbol.fourier.items()},
                              kind="xy", dim=symbol.dim)
    else:
        sym2 = symbol
    out = {}
    for eta, fn in sym2.fourier.items():
        ev = np.asarray(eta, dtype=float)

        def cf(x, y, _fn=fn, _ev=ev):
            x = np.atleast_2d(x)
            y = np.atleast_2d(y)
            on_hop = np.all(np.abs((y - x) - eps * _ev) <= 1e-12 * (1.0 + np.abs(x)),
                            axis=1)
            pair = np.empty(x.shape[0])
            if on_hop.any():
                pair[on_hop] = (np.asarray(psi(y[on_hop]))
                                - np.asarray(psi(x[on_hop]))) / eps
            if (~on_hop).any():
                phi = weight_phase(psi, x[~on_hop], y[~on_hop], n_gauss=n_gauss)
                pair[~on_hop] = phi @ _ev
            return np.asarray(_fn(x, y)) * np.exp(-pair)

        out[eta] = cf
    return PeriodicSymbol(out, kind="xy", dim=sym2.dim,
                          order_k=sym2.order_k, delta=sym2.delta)


def conjugate_weight_leading(symbol, psi, eps):
    """Leading one-variable reduction: q(x, xi - i grad psi(x))."""
    out = {}
    h = np.finfo(float).eps ** (1.0 / 3.0)
    for eta, fn in symbol.fourier.items():
        ev = np.asarray(eta, dtype=float)

        def cf(x, _fn=fn, _ev=ev):
            x = np.atleast_2d(x)
            d = x.shape[1]
            grad = np.zeros_like(x)
            for nu in range(d):
                e = np.zeros(d)
                e[nu] = h
                grad[:, nu] = (np.asarray(psi(x + e)) - np.asarray(psi(x - e))) / (2 * h)
            base = _fn(x) if symbol.kind == "x" else _fn(x, x)
            return np.asarray(base) * np.exp(-grad @ _ev)

        out[eta] = cf
    return PeriodicSymbol(out, kind="x", dim=symbol.dim)


# ---------------------------------------------------------------------------
# Gaussian window and its commutator with the transfer operator


@dataclass
class GaussianWindow:
    """pi_s(x) = sqrt(C0/(pi eps)) exp(-C0 (x_d - s)^2 / eps); int pi_s ds = 1."""

    center: float
    stiffness: float
    eps: float
    axis: int = -1

    def __call__(self, pts):
        pts = np.atleast_2d(pts)
        xd = pts[:, self.axis]
        c0 = self.stiffness
        return np.sqrt(c0 / (np.pi * self.eps)) * np.exp(-c0 * (xd - self.center) ** 2 / self.eps)

    def integral_over_centers(self, x_d, lo=-np.inf, hi=np.inf):
        """int_lo^hi pi_s(x) ds at fixed x_d (equals 1 on the full line)."""
        pref = np.sqrt(self.stiffness / (np.pi * self.eps))
        val, _ = quad(lambda s: pref * np.exp(-self.stiffness * (x_d - s) ** 2 / self.eps),
                      lo, hi)
        return val


def window_commutator(model, s, u, domain, eps=None, c0=1.0, axis=-1):
    """[T_eps, pi_s] u evaluated two ways; returns (formula value, deviation).

    Direct route: T(pi_s u) - pi_s (T u).  Formula route (shifted-argument
    identity, stencil form): the Gaussian-weighted sinh expression
        sqrt(C0/(pi eps)) sum_g a_g(x) u(x+g)
           * exp(-(C0/2eps)[(x_d+g_d-s)^2 + (x_d-s)^2])
           * (-2) sinh(g_d C0 sigma / eps),  sigma = x_d + g_d/2 - s.
    The two agree to round-off for finite stencils.
    """
    if eps is None:
        eps = domain.eps
    u = np.asarray(u, dtype=float)
    pts = domain.points
    axis = axis % domain.dim
    win = GaussianWindow(center=s, stiffness=c0, eps=eps, axis=axis)

    # direct commutator
    pw = win(pts)
    t_pu = np.zeros(domain.size)
    t_u = np.zeros(domain.size)
    for eta in model.hopping.offsets:
        tab = domain.shift_table(eta)
        ok = tab >= 0
        tgt = np.clip(tab, 0, None)
        a = model.hopping.a_eps(eta, pts, eps)
        t_pu += np.where(ok, a * (pw[tgt] * u[tgt]), 0.0)
        t_u += np.where(ok, a * u[tgt], 0.0)
    direct = t_pu - pw * t_u

    # stencil formula
    formula = np.zeros(domain.size)
    pref = np.sqrt(c0 / (np.pi * eps))
    xd = pts[:, axis]
    for eta in model.hopping.offsets:
        gd = eps * eta[axis]
        tab = domain.shift_table(eta)
        ok = tab >= 0
        tgt = np.clip(tab, 0, None)
        a = model.hopping.a_eps(eta, pts, eps)
        sigma = xd + 0.5 * gd - s
        gauss = np.exp(-(c0 / (2 * eps)) * ((xd + gd - s) ** 2 + (xd - s) ** 2))
        term = a * np.where(ok, u[tgt], 0.0) * gauss * (-2.0) * np.sinh(gd * c0 * sigma / eps)
        formula += pref * term

    deviation = float(np.abs(formula - direct).max())
    return formula, deviation


def contour_shift_check(fourier_coeffs, a, n_nodes=96):
    """|int_{-pi+ia}^{pi+ia} f - int_{-pi}^{pi} f| for a finite Fourier series.

    Both contour integrals are evaluated by Gauss-Legendre quadrature on
    the parametrized paths; for entire periodic f the shift invariance
    holds exactly (Cauchy), so the deviation is pure quadrature noise.
    """
    ks = np.array(sorted(fourier_coeffs.keys()))
    cs = np.array([fourier_coeffs[int(k)] for k in ks], dtype=complex)

    def f(z):
        return np.sum(cs[:, None] * np.exp(1j * ks[:, None] * z[None, :]), axis=0)

    nodes, wts = np.polynomial.legendre.leggauss(n_nodes)
    x = np.pi * nodes
    w = np.pi * wts
    base = np.sum(w * f(x + 0j))
    shifted = np.sum(w * f(x + 1j * a))
    return float(abs(shifted - base))


def lattice_laplace(a_fn, psi_fn, x0, eps_list, box, hessian=None):
    """Lattice Laplace sums eps^{d/2} sum a e^{-psi/eps} against J_0.

    J_0 = (2 pi)^{d/2} a(x0) / sqrt(det D2 psi(x0)); requires psi(x0) = 0,
    D2 psi(x0) > 0 and psi > 0 elsewhere on the support.  Returns
    (records, J0, remainder_slope) where records are (eps, scaled sum)
    and remainder_slope is the fitted order of |sum - J0| in eps.
    """
    from ._num import fd_hessian

    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    d = x0.size
    box = np.atleast_2d(np.asarray(box, dtype=float))
    psi0 = float(psi_fn(x0.reshape(1, -1))[0])
    if abs(psi0) > 1e-12:
        raise ModelError("psi(x0) must vanish")
    H = np.asarray(hessian, dtype=float) if hessian is not None else \
        fd_hessian(lambda p: float(psi_fn(p.reshape(1, -1))[0]), x0)
    eigs = np.linalg.eigvalsh(H)
    if eigs.min() <= 0:
        raise ModelError("Hessian of psi at x0 is not positive definite")
    a0 = float(a_fn(x0.reshape(1, -1))[0])
    J0 = (2 * np.pi) ** (d / 2) * a0 / np.sqrt(np.linalg.det(H))

    records = []
    for eps in eps_list:
        axes = []
        for nu in range(d):
            nlo = int(np.ceil(box[nu, 0] / eps - 1e-9))
            nhi = int(np.floor(box[nu, 1] / eps + 1e-9))
            axes.append(np.arange(nlo, nhi + 1) * eps)
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        vals = np.asarray(a_fn(pts)).reshape(-1) * np.exp(-np.asarray(psi_fn(pts)).reshape(-1) / eps)
        records.append((float(eps), float(eps ** (d / 2.0) * vals.sum())))

    errs = np.array([abs(s - J0) for _, s in records])
    epsv = np.array([e for e, _ in records])
    good = errs > 0
    if np.count_nonzero(good) >= 2:
        slope = float(np.polyfit(np.log(epsv[good]), np.log(errs[good]), 1)[0])
    else:
        slope = np.inf
    return records, float(J0), slope


def sum_vs_integral(f, lo, hi, h):
    """|h * sum_{y in hZ} f(y) - int f| for a smooth windowed integrand."""
    nlo = int(np.ceil(lo / h))
    nhi = int(np.floor(hi / h))
    y = np.arange(nlo, nhi + 1) * h
    s = h * float(np.sum(f(y)))
    val, _ = quad(f, lo, hi, epsabs=1e-13, limit=400)
    return abs(s - val)
