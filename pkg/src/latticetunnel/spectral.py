"""Dirichlet eigenproblems, spectral-interval selection, dense oracles.

Solver strategy: dense symmetric diagonalization up to dimension 2048,
implicitly restarted Lanczos (ARPACK through scipy) above.  In one
dimension with a nearest-neighbor stencil the exponentially small
eigenvector tails are additionally re-propagated through the three-term
recurrence from the decaying edge, which gives them relative (instead
of absolute) accuracy; this matters when interaction sums probe values
near or below the dense solver's error floor.

For the acceptance comparison of exponentially close eigenvalue pairs
(splittings far below machine epsilon relative to the eigenvalue) a
Sturm-sequence bisection in mpmath arithmetic on the tridiagonal matrix
is provided; it computes eigenvalues of the *double precision* operator
matrix to arbitrary accuracy, so it is an honest reference for the rest
of the double-precision pipeline.
"""

import warnings
from dataclasses import dataclass
from itertools import product

import numpy as np
import scipy.linalg as sla

from .lattice import apply_operator, assemble_operator
from .models import kinetic_B

DENSE_LIMIT = 2048


class SpectralError(RuntimeError):
    pass


@dataclass
class EigenPair:
    """Eigenvalue with its l2-normalized real eigenvector on the full domain."""

    value: float
    vector: np.ndarray          # zero-extended to the full domain
    domain_tag: object = "full"
    residual: float = 0.0
    mask: np.ndarray = None     # boolean sub-domain indicator (None = full)


@dataclass
class SpectralInterval:
    alpha: float
    beta: float
    gap_margin: float = np.inf   # observed distance 2a(eps) to nearest excluded eigenvalue
    center: float = 0.0
    eps: float = 0.0
    mu_spread: float = 0.0       # observed max |mu_j - mu_k| of the chosen pairs

    def contains(self, x):
        return self.alpha <= x <= self.beta


def _tridiag_of(model, domain, mask):
    """Diagonal/off-diagonal of the 1D nearest-neighbor Dirichlet matrix.

    Returns (diag, off, sel) or None when the structure does not apply
    (the tail recurrence assumes an exactly symmetric tridiagonal).
    """
    if domain.dim != 1 or any(domain.periodic):
        return None
    offs = set(model.hopping.offsets)
    if offs != {(-1,), (0,), (1,)}:
        return None
    sel = np.flatnonzero(mask) if mask is not None else np.arange(domain.size)
    if np.any(np.diff(sel) != 1):
        return None
    pts = domain.points[sel]
    eps = domain.eps
    diag = (model.hopping.a_eps((0,), pts, eps) + model.potential.v_eps(pts, eps))
    off_up = model.hopping.a_eps((1,), pts[:-1], eps)
    off_dn = model.hopping.a_eps((-1,), pts[1:], eps)
    if np.abs(off_up - off_dn).max() > 1e-14 * max(1.0, np.abs(off_up).max()):
        return None
    return diag, off_up, sel


def _refine_tail(diag, off, mu, v, match_level=1e-6):
    """Re-propagate decaying tails of a tridiagonal eigenvector.

    Row i of the eigen equation reads
        off[i-1] u[i-1] + diag[i] u[i] + off[i] u[i+1] = mu u[i].
    Starting from each edge, the recurrence grows toward the matching
    point (|v| ~ match_level), which keeps relative accuracy in the deep
    tail; the dense eigenvector sets the scale at the match.
    """
    n = len(v)
    out = v.copy()
    vmax = np.abs(v).max()
    thresh = match_level * vmax

    if abs(v[0]) < thresh:  # left tail, march right
        u = np.zeros(n)
        u[0] = 1.0
        match = None
        for i in range(n - 1):
            left = off[i - 1] * u[i - 1] if i > 0 else 0.0
            u[i + 1] = ((mu - diag[i]) * u[i] - left) / off[i]
            if abs(u[i + 1]) > 1e250:
                match = None
                break
            if abs(v[i + 1]) > thresh:
                match = i + 1
                break
        if match is not None and u[match] != 0.0:
            out[:match + 1] = (v[match] / u[match]) * u[:match + 1]

    if abs(v[-1]) < thresh:  # right tail, march left
        u = np.zeros(n)
        u[-1] = 1.0
        match = None
        for i in range(n - 1, 0, -1):
            right = off[i] * u[i + 1] if i < n - 1 else 0.0
            u[i - 1] = ((mu - diag[i]) * u[i] - right) / off[i - 1]
            if abs(u[i - 1]) > 1e250:
                match = None
                break
            if abs(v[i - 1]) > thresh:
                match = i - 1
                break
        if match is not None and u[match] != 0.0:
            out[match:] = (v[match] / u[match]) * u[match:]

    return out


def dirichlet_eigs(model, domain, mask=None, count=2, eps=None, refine_tail=True,
                   domain_tag="full", sign_anchor=None, method="auto"):
    """Lowest ``count`` eigenpairs of the Dirichlet operator 1_M H|_M.

    mask: boolean indicator of M on the domain (None = the whole domain).
    Vectors are returned zero-extended to the full domain, l2-normalized,
    with the sign fixed so the value at the well-nearest lattice point
    (``sign_anchor``, default: the max-|v| point) is positive.
    ``method`` forces the dense or Lanczos path ("auto" switches on the
    sub-domain dimension).
    """
    if eps is None:
        eps = domain.eps
    if mask is not None and not np.any(mask):
        raise SpectralError("Dirichlet sub-domain is empty")
    dim_sub = int(np.count_nonzero(mask)) if mask is not None else domain.size
    if count > dim_sub:
        raise SpectralError("count exceeds the sub-domain dimension")
    use_dense = dim_sub <= DENSE_LIMIT if method == "auto" else method == "dense"

    if use_dense:
        H, sel = assemble_operator(model, domain, eps=eps, dirichlet=mask)
        vals, vecs = sla.eigh(H, subset_by_index=(0, count - 1))
    else:
        import scipy.sparse.linalg as spl

        H, sel = assemble_operator(model, domain, eps=eps, dirichlet=mask, sparse=True)
        try:
            vals, vecs = spl.eigsh(H, k=count, which="SA")
        except spl.ArpackNoConvergence as exc:
            if dim_sub <= DENSE_LIMIT:
                vals, vecs = sla.eigh(H.toarray(), subset_by_index=(0, count - 1))
            else:
                raise SpectralError(f"Lanczos failed to converge: {exc}") from exc
        else:
            order = np.argsort(vals)
            vals, vecs = vals[order], vecs[:, order]

    tri = _tridiag_of(model, domain, mask) if refine_tail else None
    pairs = []
    for i in range(count):
        v = vecs[:, i].astype(float)
        if tri is not None:
            diag, off, _ = tri
            v = _refine_tail(diag, off, float(vals[i]), v)
        v /= np.linalg.norm(v)
        full = np.zeros(domain.size)
        full[sel] = v
        anchor = sel[np.argmax(np.abs(v))] if sign_anchor is None else sign_anchor
        if full[anchor] < 0:
            full = -full
        r = apply_operator(model, domain, full, eps=eps, dirichlet=mask) - vals[i] * full
        pairs.append(EigenPair(value=float(vals[i]), vector=full, domain_tag=domain_tag,
                               residual=float(np.linalg.norm(r)),
                               mask=None if mask is None else np.asarray(mask, bool)))
    return pairs


def harmonic_frequencies(model, well_index):
    """Positive frequencies of the quadratic model at a well.

    omega_i = sqrt(eig_i(2 B A)) with B the kinetic matrix at the well and
    A = D^2 V_0; these are the +-omega eigenvalues of the linearized
    Hamiltonian vector field at the fixed point.  Zero eigenvalues of A
    (degenerate well directions, e.g. a translation-invariant model) are
    dropped with a flag; negative ones raise.
    """
    well = model.potential.wells[well_index]
    B = kinetic_B(model, well)
    A = model.potential.hessian(well_index)
    eigA = np.linalg.eigvalsh(A)
    if eigA.min() < -1e-8:
        raise SpectralError(f"indefinite quadratic model at well {well_index}")
    Bh = sla.sqrtm(B).real
    M = Bh @ A @ Bh
    lam = np.linalg.eigvalsh(2.0 * M)
    lam = np.where(np.abs(lam) < 1e-10, 0.0, lam)
    degenerate = bool(np.any(lam == 0.0))
    omega = np.sqrt(lam[lam > 0.0])
    if omega.size == 0:
        raise SpectralError(f"quadratic model at well {well_index} has no positive mode")
    return omega, degenerate


def harmonic_levels(model, well_index, eps, max_quanta=3):
    """Low harmonic-oscillator levels eps * sum_i omega_i (n_i + 1/2)."""
    omega, _ = harmonic_frequencies(model, well_index)
    levels = set()
    for n in product(range(max_quanta + 1), repeat=len(omega)):
        levels.add(eps * float(np.dot(omega, np.asarray(n) + 0.5)))
    return sorted(levels)


def select_interval(model, domain, masks, eps, target_level=0, count_scan=6,
                    width_factor=0.4):
    """Spectral interval around a harmonic level with one eigenvalue per well.

    masks: dict well_index -> boolean sub-domain indicator.  Returns
    (SpectralInterval, dict well_index -> EigenPair, dict well_index ->
    scanned EigenPair list).  Raises when any well has zero or several
    Dirichlet eigenvalues in every candidate interval, or when the
    per-well target levels admit no common interval.
    """
    wells = sorted(masks.keys())
    if len(wells) >= 2:
        for a in wells:
            for b in wells:
                if a < b and np.array_equal(masks[a], masks[b]):
                    raise SpectralError("wells must be separated: identical sub-domains")
    targets, spacings = {}, []
    for j in wells:
        lv = harmonic_levels(model, j, eps)
        if target_level >= len(lv):
            raise SpectralError("target level beyond computed harmonic levels")
        targets[j] = lv[target_level]
        omega, _ = harmonic_frequencies(model, j)
        spacings.append(eps * float(omega.min()))
    half = width_factor * min(spacings)
    center = 0.5 * (min(targets.values()) + max(targets.values()))
    if max(targets.values()) - min(targets.values()) > 2.0 * half:
        raise SpectralError(
            "no common interval: per-well target levels %s differ by more than %g"
            % (targets, 2.0 * half))

    interval = SpectralInterval(alpha=center - half, beta=center + half,
                                center=center, eps=eps)
    chosen = {}
    scanned = {}
    margin = np.inf
    for j in wells:
        k = min(count_scan, int(np.count_nonzero(masks[j])))
        anchor = domain.nearest_index(model.potential.wells[j])
        pairs = dirichlet_eigs(model, domain, masks[j], count=k, eps=eps,
                               domain_tag=j, sign_anchor=anchor)
        scanned[j] = pairs
        inside = [p for p in pairs if interval.contains(p.value)]
        if len(inside) != 1:
            raise SpectralError(
                f"well {j}: {len(inside)} Dirichlet eigenvalues in "
                f"[{interval.alpha:.6g}, {interval.beta:.6g}] "
                f"(values {[round(p.value, 6) for p in pairs]})")
        chosen[j] = inside[0]
        for p in pairs:
            if not interval.contains(p.value):
                margin = min(margin,
                             abs(p.value - interval.beta), abs(p.value - interval.alpha))
    interval.gap_margin = float(margin)
    mus = [chosen[j].value for j in wells]
    interval.mu_spread = float(max(mus) - min(mus)) if len(mus) > 1 else 0.0
    if interval.mu_spread > 0.5 * half:
        warnings.warn(
            f"|mu_j - mu_k| = {interval.mu_spread:.3e} is large against the "
            f"interval half-width {half:.3e}; the interaction expansion "
            "assumes exponentially close Dirichlet eigenvalues")
    return interval, chosen, scanned


# ---------------------------------------------------------------------------
# high-precision tridiagonal eigenvalues (Sturm bisection)


def sturm_eigenvalues(diag, off, k, lo, hi, digits=40, tol_exp=-30):
    """The k lowest eigenvalues in [lo, hi] of a symmetric tridiagonal matrix.

    Bisection on the Sturm (LDL^T inertia) count, carried out in mpmath
    arithmetic on the exactly converted double entries.  Resolves
    eigenvalue gaps far below machine epsilon; used as the exact
    reference for splitting comparisons.
    """
    from mpmath import mp, mpf

    old = mp.dps
    try:
        mp.dps = digits
        d = [mpf(float(v)) for v in diag]
        e = [mpf(float(v)) for v in off]
        n = len(d)
        tiny = mpf(10) ** (tol_exp - 10)

        def count_below(sig):
            cnt = 0
            q = d[0] - sig
            if q < 0:
                cnt += 1
            for i in range(1, n):
                if q == 0:
                    q = tiny
                q = d[i] - sig - e[i - 1] * e[i - 1] / q
                if q < 0:
                    cnt += 1
            return cnt

        tol = mpf(10) ** tol_exp
        out = []
        for j in range(k):
            a, b = mpf(lo), mpf(hi)
            if count_below(b) < j + 1:
                raise SpectralError("bracket [lo, hi] contains fewer eigenvalues than requested")
            while b - a > tol:
                m = (a + b) / 2
                if count_below(m) >= j + 1:
                    b = m
                else:
                    a = m
            out.append((a + b) / 2)
        return out
    finally:
        mp.dps = old
