"""Interaction term, interaction matrix, WKB amplitudes, leading asymptotics.

The well-to-well coupling is the exact finite sum

    w_jk = <v_j, (1 - 1_{M_k}) T_eps v_k>
         = sum_{x not in M_k} sum_gamma a_gamma(x; eps) v_k(x+gamma) v_j(x),

a stencil-band sum at the boundary of M_k.  Its leading order is the
closed-form prefactor built from the WKB amplitudes at the geodesic
crossing, the sinh current of the leading hopping family, and the
transverse Hessian of d^j + d^k (a surface integral over the crossing
manifold when the minimal geodesics are not isolated).

Amplitudes are extracted from the numerical Dirichlet eigenvectors
(b = eps^{-d/4} e^{d/eps} v on the numerically stable band) rather than
from transport equations; predictions therefore use the finite-eps
amplitudes directly, and the amplitude orders N_m are reported as
fitted diagnostics of the eps-scaling at the crossing.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .models import ModelError

_LOG_EPS = float(-np.log(np.finfo(float).eps))


class GeometryError(RuntimeError):
    """Configuration violates the geometric containment hypotheses."""

    def __init__(self, msg, offending=None):
        super().__init__(msg)
        self.offending = offending


@dataclass
class InteractionResult:
    """Per-epsilon record of exact and predicted interaction quantities."""

    eps: float
    w_jk: float
    w_kj: float
    mu_j: float
    mu_k: float
    S_jk: float
    I0: float = np.nan
    w_pred: float = np.nan
    splitting_model: float = np.nan
    splitting_exact: float = np.nan
    b_j: float = np.nan
    b_k: float = np.nan

    @property
    def w_tilde(self):
        return 0.5 * (self.w_jk + self.w_kj)

    @property
    def ratio(self):
        return abs(self.w_pred / self.w_jk) if self.w_jk != 0 else np.nan


@dataclass
class AmplitudeField:
    """WKB amplitude b extracted from an eigenvector on its stable band."""

    values: np.ndarray        # nan outside the stable band
    stable: np.ndarray        # boolean mask of the band
    well_index: int
    eps: float
    domain: object
    order_estimate: float = np.nan

    def at(self, x):
        """Amplitude at the lattice node nearest to x (must be stable)."""
        i = self.domain.nearest_index(x)
        if not self.stable[i]:
            raise ValueError(f"amplitude not stable at {np.asarray(x)}")
        diff = self.domain.points[i] - np.asarray(x, dtype=float)
        for nu in range(self.domain.dim):
            if self.domain.periodic[nu]:
                period = self.domain._count[nu] * self.domain.eps
                diff[nu] = (diff[nu] + period / 2) % period - period / 2
        dist = np.linalg.norm(diff)
        if dist > 0.51 * self.domain.eps * np.sqrt(self.domain.dim):
            warnings.warn(f"amplitude sampled {dist:.3g} away from requested point")
        return float(self.values[i])


def interaction_exact(model, domain, v_j, v_k, mask_k, eps=None):
    """Exact interaction sum over the stencil band at the boundary of M_k.

    v_j, v_k: EigenPair vectors on the full domain (v_k supported in M_k).
    Returns 0 with a warning when no lattice point outside M_k reaches
    into M_k within the stencil.
    """
    if eps is None:
        eps = domain.eps
    mask_k = np.asarray(mask_k, dtype=bool)
    uj = v_j.vector if hasattr(v_j, "vector") else np.asarray(v_j)
    uk = v_k.vector if hasattr(v_k, "vector") else np.asarray(v_k)
    outside = ~mask_k
    touched = False
    w = 0.0
    pts = domain.points
    for eta in model.hopping.offsets:
        tab = domain.shift_table(eta)
        ok = outside & (tab >= 0)
        tgt = np.clip(tab, 0, None)
        ok &= mask_k[tgt]
        if not np.any(ok):
            continue
        touched = True
        a = model.hopping.a_eps(eta, pts[ok], eps)
        w += float(np.sum(a * uk[tgt[ok]] * uj[ok]))
    if not touched:
        warnings.warn("empty boundary band: stencil does not cross into M_k")
        return 0.0
    return w


def interaction_matrix(model, domain, pairs, masks, eps=None, exact_eigs=None):
    """Dirichlet-basis matrix diag(mu) + symmetrized interaction.

    pairs: dict well_index -> EigenPair (one per well in the interval);
    masks: dict well_index -> boolean sub-domain indicator.  Returns
    (matrix, model_eigs, pairing) where pairing lists (model, exact,
    deviation) tuples when ``exact_eigs`` (the spectrum of H_eps in the
    interval) is supplied.  Raises when the Gram matrix of the Dirichlet
    vectors is not positive definite.
    """
    if eps is None:
        eps = domain.eps
    wells = sorted(pairs.keys())
    n = len(wells)
    gram = np.empty((n, n))
    for a, ja in enumerate(wells):
        for b, jb in enumerate(wells):
            gram[a, b] = float(pairs[ja].vector @ pairs[jb].vector)
    if np.linalg.eigvalsh(gram).min() <= 0:
        raise ModelError("Gram matrix of Dirichlet eigenvectors is not positive definite")

    W = np.zeros((n, n))
    for a, ja in enumerate(wells):
        for b, jb in enumerate(wells):
            if a == b:
                continue
            W[a, b] = interaction_exact(model, domain, pairs[ja], pairs[jb],
                                        masks[jb], eps=eps)
    Wt = 0.5 * (W + W.T)
    np.fill_diagonal(Wt, 0.0)
    mat = np.diag([pairs[j].value for j in wells]) + Wt
    model_eigs = np.linalg.eigvalsh(mat)

    pairing = None
    if exact_eigs is not None:
        ex = np.sort(np.asarray(exact_eigs, dtype=float))
        if len(ex) != n:
            raise ModelError(f"{len(ex)} exact eigenvalues for {n} Dirichlet states")
        pairing = [(float(m), float(e), float(abs(m - e)))
                   for m, e in zip(model_eigs, ex)]
    return mat, model_eigs, pairing


def amplitude_extract(v_m, d_field, eps, domain, rho=0.9):
    """Amplitude b(x) = eps^{-d/4} e^{d^m(x)/eps} v_m(x) on the stable band.

    The band is |d^m(x)| <= rho * eps * log(1/eps_machine); outside it the
    exponential amplification is catastrophic and values are masked, not
    returned.
    """
    d = domain.dim
    dvals = np.atleast_1d(d_field.value_at(domain.points))
    stable = dvals / eps <= rho * _LOG_EPS
    vec = v_m.vector if hasattr(v_m, "vector") else np.asarray(v_m)
    vals = np.full(domain.size, np.nan)
    vals[stable] = eps ** (-d / 4.0) * np.exp(dvals[stable] / eps) * vec[stable]
    return AmplitudeField(values=vals, stable=stable, well_index=d_field.well_index,
                          eps=eps, domain=domain)


def estimate_orders(amp_fields, at, bias=0.0):
    """Fitted amplitude order N from the eps-scaling of b at a point.

    amp_fields: list of AmplitudeField over an eps-sweep.  ``bias`` is a
    known offset of the numerical distance field at ``at`` (sweeping
    solution bias, estimated from the path action); it multiplies b by
    the spurious eps-dependent factor e^{bias/eps} which is removed
    before fitting.  Returns -slope of log|b| against log eps (N = 0 for
    a clean ground state).
    """
    epsv = np.array([f.eps for f in amp_fields])
    bv = np.array([abs(f.at(at)) for f in amp_fields])
    slope = np.polyfit(np.log(epsv), np.log(bv) - bias / epsv, 1)[0]
    return -float(slope)


def current_sum(model, y, grad_dj, axis=-1):
    """sinh current sum_eta tilde a_eta(y) eta_d sinh(eta . grad d^j(y))."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    g = np.asarray(grad_dj, dtype=float).reshape(-1)
    axis = axis % model.dimension
    out = 0.0
    for eta in model.hopping.offsets:
        ed = eta[axis]
        if ed == 0:
            continue
        a = float(model.atilde(eta, y)[0])
        out += a * ed * np.sinh(float(np.asarray(eta, float) @ g))
    return float(out)


def I0_point(b_j, b_k, hessian, current, dim):
    """Leading prefactor at an isolated crossing point.

    I0 = (2 pi)^{(d-1)/2} / sqrt(det D2_perp(d^j + d^k)(y0))
         * b_k(y0) * current * b_j(y0);
    the determinant of the empty matrix (d = 1) is 1.
    """
    H = np.asarray(hessian, dtype=float)
    if H.size:
        det = float(np.linalg.det(H))
        if det <= 0 or np.linalg.eigvalsh(H).min() <= 0:
            raise ValueError("transverse Hessian must be positive definite")
    else:
        det = 1.0
    return (2 * np.pi) ** ((dim - 1) / 2.0) / np.sqrt(det) * b_k * current * b_j


def predict_point(eps, S_jk, I0, orders=0.0):
    """w prediction eps^{1/2 - (N_j + N_k)} e^{-S/eps} I0.

    With amplitudes extracted at the working eps the order shift is
    already inside I0, so ``orders`` defaults to 0.
    """
    return eps ** (0.5 - orders) * np.exp(-S_jk / eps) * I0


def I0_manifold(b_j, b_k, manifold, model, d_j, d_k, axis=-1):
    """Leading prefactor as a surface integral over the crossing manifold.

    Quadrature of b_k b_j times the sinh current weighted by
    1/sqrt(det transverse Hessian) over the G0 nodes; the prefactor
    (2 pi)^{(d - ell - 1)/2} reduces to the point formula at ell = 0.
    Raises naming the node when a transverse Hessian degenerates.
    """
    d = model.dimension
    ell = manifold.ell
    total = 0.0
    for i, (y, wgt) in enumerate(zip(manifold.points, manifold.weights)):
        frame = manifold.frames[i] if manifold.frames else np.zeros((0, d))
        if frame.shape[0]:
            H = _directional_hessian(d_j, d_k, y, frame)
            try:
                eigs = np.linalg.eigvalsh(H)
            except np.linalg.LinAlgError as exc:
                raise ValueError(f"Hessian failure at node {i} ({y})") from exc
            if eigs.min() <= 0:
                raise ValueError(f"degenerate transverse Hessian at node {i} ({y})")
            det = float(np.linalg.det(H))
        else:
            det = 1.0
        grad = np.atleast_1d(d_j.grad_at(y))
        cur = current_sum(model, y, grad, axis=axis)
        total += wgt * b_j.at(y) * b_k.at(y) * cur / np.sqrt(det)
    return (2 * np.pi) ** ((d - ell - 1) / 2.0) * total


def _directional_hessian(d_j, d_k, y, frame):
    # steps weighted by the grid spacing along each direction, matching
    # the in-plane transverse_hessian for coordinate-axis frames
    n = frame.shape[0]
    H = np.empty((n, n))
    hs = [4.0 * float(np.abs(frame[a]) @ d_j.h) for a in range(n)]
    F = lambda p: float(d_j.value_at(p) + d_k.value_at(p))
    f0 = F(y)
    for a in range(n):
        va = frame[a]
        H[a, a] = (F(y + hs[a] * va) - 2 * f0 + F(y - hs[a] * va)) / hs[a]**2
        for b in range(a + 1, n):
            vb = frame[b]
            v = (F(y + hs[a] * va + hs[b] * vb) - F(y + hs[a] * va - hs[b] * vb)
                 - F(y - hs[a] * va + hs[b] * vb) + F(y - hs[a] * va - hs[b] * vb)) \
                / (4 * hs[a] * hs[b])
            H[a, b] = v
            H[b, a] = v
    return H


def predict_manifold(eps, S_jk, I0, ell, orders=0.0):
    """w prediction eps^{-(N_j+N_k)} eps^{(1-ell)/2} e^{-S/eps} I0."""
    return eps ** ((1.0 - ell) / 2.0 - orders) * np.exp(-S_jk / eps) * I0


# ---------------------------------------------------------------------------
# direct boundary-band representation (leading order and two-sided bounds)


def boundary_band_estimate(b_j, b_k, model, domain, d_j, d_k, ellipse=None, delta=None,
                    axis=-1, eps=None, want_bounds=True):
    """Leading boundary-band value of w_jk with convexity bounds.

    The band straddles the hyperplane {x_d = 0}: hat Gamma = E cap
    {-delta <= x_d < 0}, its mirror hat Gamma^c = E cap {0 <= x_d <= delta}.
    With WKB approximants vhat = eps^{d/4} e^{-d/eps} b,

        leading = sum_{x in hat Gamma} vhat_j vhat_k
                  (ttilde(x, grad d^j) - ttilde(x, grad d^k)),
        ttilde(x, xi) = - sum_eta 1_{hat Gamma^c}(x + eps eta)
                        tilde a_eta(x) e^{-eta.xi}.

    The exponential kernel is the first-order transport of the WKB decay
    across a hop; convexity of ttilde in xi yields the lower/upper
    bounds.  Bounds require vhat > 0 on the band and are omitted (with a
    flag) otherwise.  Returns (leading, lower, upper, flagged).
    """
    if eps is None:
        eps = domain.eps
    d = domain.dim
    axis = axis % d
    if delta is None:
        maxoff = max(np.linalg.norm(e) for e in model.hopping.offsets)
        delta = 2.0 * maxoff * eps
    pts = domain.points
    xd = pts[:, axis]
    in_ellipse = np.ones(domain.size, bool) if ellipse is None else ellipse(pts)
    band = (-delta - 1e-12 <= xd) & (xd < -1e-12) & in_ellipse
    cband = (xd >= -1e-12) & (xd <= delta + 1e-12) & in_ellipse
    if not band.any() or not cband.any():
        raise GeometryError("empty delta band around the hyperplane")

    idx = np.flatnonzero(band)
    flagged = False
    if np.any(~b_j.stable[idx]) or np.any(~b_k.stable[idx]):
        raise GeometryError("amplitudes not stable on the delta band")
    dj_band = np.atleast_1d(d_j.value_at(pts[idx]))
    dk_band = np.atleast_1d(d_k.value_at(pts[idx]))
    vh_j = np.zeros(domain.size)
    vh_k = np.zeros(domain.size)
    vh_j[idx] = eps ** (d / 4.0) * np.exp(-dj_band / eps) * b_j.values[idx]
    vh_k[idx] = eps ** (d / 4.0) * np.exp(-dk_band / eps) * b_k.values[idx]
    if want_bounds and (np.any(vh_j[idx] <= 0) or np.any(vh_k[idx] <= 0)):
        want_bounds = False
        flagged = True
        warnings.warn("vhat not positive on the band: bounds omitted")

    etas = [e for e in model.hopping.offsets]
    leading = 0.0
    lower = 0.0
    upper = 0.0
    for i in idx:
        x = pts[i]
        gj = np.atleast_1d(d_j.grad_at(x))
        gk = np.atleast_1d(d_k.grad_at(x))
        tj = tk = 0.0
        dvj = np.zeros(d)
        dvk = np.zeros(d)
        for eta in etas:
            tab = domain.shift_table(eta)[i]
            if tab < 0 or not cband[tab]:
                continue
            ev = np.asarray(eta, dtype=float)
            a = float(model.atilde(eta, x.reshape(1, -1))[0])
            tj += -a * np.exp(-float(ev @ gj))
            tk += -a * np.exp(-float(ev @ gk))
            dvj += a * ev * np.exp(-float(ev @ gj))
            dvk += a * ev * np.exp(-float(ev @ gk))
        pref = vh_j[i] * vh_k[i]
        leading += pref * (tj - tk)
        if want_bounds:
            lower += pref * float(dvk @ (gj - gk))
            upper += pref * float(dvj @ (gj - gk))
    if not want_bounds:
        return float(leading), None, None, flagged
    return float(leading), float(lower), float(upper), flagged


def ellipse_region(d_j, d_k, S0, a, masks=None, domain=None, band_R=None, axis=-1):
    """Predicate for E = {d^j + d^k <= S0 + a} plus the containment checks.

    With ``masks`` = (mask_j, mask_k) boolean indicators on ``domain``,
    verifies E subset int M_j cup int M_k and the R-band conditions
    (E avoids {x_d <= -R}; E cap {-R < x_d < 0} inside M_j; the rest
    inside M_k).  Raises GeometryError listing offending points.
    """
    def pred(pts):
        pts = np.atleast_2d(pts)
        return (np.atleast_1d(d_j.value_at(pts))
                + np.atleast_1d(d_k.value_at(pts))) <= S0 + a

    if masks is None or domain is None:
        return pred

    mask_j, mask_k = masks
    pts = domain.points
    inE = pred(pts)
    axis = axis % domain.dim

    interior_j = mask_j.copy()
    interior_k = mask_k.copy()
    for nu in range(domain.dim):
        for sgn in (+1, -1):
            eta = tuple(sgn if q == nu else 0 for q in range(domain.dim))
            tab = domain.shift_table(eta)
            ok = tab >= 0
            interior_j &= ok & mask_j[np.clip(tab, 0, None)]
            interior_k &= ok & mask_k[np.clip(tab, 0, None)]

    bad = inE & ~(interior_j | interior_k)
    if bad.any():
        raise GeometryError("ellipse not contained in int M_j cup int M_k",
                            offending=pts[bad])
    if band_R is not None:
        xd = pts[:, axis]
        if np.any(inE & (xd <= -band_R + 1e-12)):
            raise GeometryError("ellipse reaches x_d <= -R",
                                offending=pts[inE & (xd <= -band_R + 1e-12)])
        left = inE & (xd > -band_R) & (xd < 0)
        if np.any(left & ~interior_j):
            raise GeometryError("E cap H_{d,R} not inside int M_j",
                                offending=pts[left & ~interior_j])
        right = inE & ~((xd > -band_R) & (xd < 0))
        if np.any(right & ~interior_k):
            raise GeometryError("E cap H_{d,R}^c not inside int M_k",
                                offending=pts[right & ~interior_k])
    return pred
