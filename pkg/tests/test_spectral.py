"""Dirichlet eigenproblems against dense/classical oracles."""

import numpy as np
import pytest
import scipy.linalg as sla

from latticetunnel import (LatticeDomain, assemble_operator, box_region,
                           dirichlet_eigs, double_well_1d, harmonic_levels,
                           select_interval, strip_model_2d, sturm_eigenvalues)
from latticetunnel.models import (HoppingFamily, ModelSpec, PotentialExpansion)
from latticetunnel.spectral import SpectralError, harmonic_frequencies


def _free_laplacian_1d():
    hop = HoppingFamily({(0,): 2.0, (1,): -1.0, (-1,): -1.0})
    pot = PotentialExpansion([lambda p: np.zeros(p.shape[0])], wells=[[0.0]])
    return ModelSpec(hop, pot)


def test_free_laplacian_spectrum_classical():
    # N interior points, eps = 1: eigenvalues 2 - 2 cos(k pi / (N+1))
    m = _free_laplacian_1d()
    N = 17
    dom = LatticeDomain(1.0, [[1, N]])
    assert dom.size == N
    pairs = dirichlet_eigs(m, dom, count=N, refine_tail=False)
    classical = np.sort(2.0 - 2.0 * np.cos(np.arange(1, N + 1) * np.pi / (N + 1)))
    got = np.array([p.value for p in pairs])
    assert np.allclose(got, classical, atol=1e-12)


def test_full_spectrum_matches_dense_oracle():
    m = double_well_1d()
    dom = LatticeDomain(4.0 / 15, [[-2, 2]])
    n = dom.size
    pairs = dirichlet_eigs(m, dom, count=n, refine_tail=False)
    H, _ = assemble_operator(m, dom)
    dense = np.sort(sla.eigvalsh(H))
    assert np.allclose([p.value for p in pairs], dense, atol=1e-10)


def test_double_well_near_degenerate_pair():
    m = double_well_1d()
    dom = LatticeDomain(0.05, [[-2, 2]])
    pairs = dirichlet_eigs(m, dom, count=3, refine_tail=False)
    gap01 = pairs[1].value - pairs[0].value
    gap12 = pairs[2].value - pairs[1].value
    assert gap01 > 0
    assert gap01 < 1e-3 * gap12   # splitting is tiny against the level spacing


def test_eigenpair_invariants():
    m = double_well_1d()
    dom = LatticeDomain(0.1, [[-2, 2]])
    mask = dom.indicator(box_region([[-2, 0.15]]))
    for p in dirichlet_eigs(m, dom, mask, count=3):
        assert np.linalg.norm(p.vector) == pytest.approx(1.0, abs=1e-12)
        assert p.residual <= 1e-10 * max(1.0, abs(p.value)) + 1e-10


def test_lanczos_matches_dense():
    # separated spectrum (single-well Dirichlet): values and vectors agree
    m = double_well_1d()
    dom = LatticeDomain(0.02, [[-2, 2]])   # 201 points
    mask = dom.indicator(box_region([[-2, 0.15]]))
    dense = dirichlet_eigs(m, dom, mask, count=4, method="dense", refine_tail=False)
    lanc = dirichlet_eigs(m, dom, mask, count=4, method="lanczos", refine_tail=False)
    for a, b in zip(dense, lanc):
        assert a.value == pytest.approx(b.value, abs=1e-9)
        assert min(np.linalg.norm(a.vector - b.vector),
                   np.linalg.norm(a.vector + b.vector)) < 1e-6


def test_lanczos_matches_dense_degenerate_subspace():
    # the numerically degenerate double-well pair agrees as a subspace
    m = double_well_1d()
    dom = LatticeDomain(0.02, [[-2, 2]])
    dense = dirichlet_eigs(m, dom, count=2, method="dense", refine_tail=False)
    lanc = dirichlet_eigs(m, dom, count=2, method="lanczos", refine_tail=False)
    for a, b in zip(dense, lanc):
        assert a.value == pytest.approx(b.value, abs=1e-9)
    P = np.column_stack([p.vector for p in dense])
    Q = np.column_stack([p.vector for p in lanc])
    assert np.linalg.norm(P @ P.T - Q @ Q.T) < 1e-6


def test_dirichlet_monotonicity():
    # enlarging M never increases the lowest Dirichlet eigenvalue
    m = double_well_1d()
    dom = LatticeDomain(0.05, [[-2, 2]])
    prev = np.inf
    for hi in (-0.4, -0.1, 0.2, 0.6):
        mask = dom.indicator(box_region([[-2, hi]]))
        mu = dirichlet_eigs(m, dom, mask, count=1)[0].value
        assert mu <= prev + 1e-13
        prev = mu


def test_mirror_symmetry_mu():
    m = double_well_1d()
    dom = LatticeDomain(0.05, [[-2, 2]])
    mask_j = dom.indicator(box_region([[-2, 0.15]]))
    mask_k = dom.indicator(box_region([[-0.15, 2]]))
    mu_j = dirichlet_eigs(m, dom, mask_j, count=1)[0].value
    mu_k = dirichlet_eigs(m, dom, mask_k, count=1)[0].value
    assert mu_j == pytest.approx(mu_k, abs=1e-12)


def test_harmonic_levels_reference():
    # omega = sqrt(2 * B * V'') = sqrt(2 * 1 * 8) = 4; ground level 2 eps
    m = double_well_1d()
    omega, degenerate = harmonic_frequencies(m, 0)
    assert not degenerate
    assert omega == pytest.approx([4.0], rel=1e-5)
    lv = harmonic_levels(m, 0, eps=0.1)
    assert lv[0] == pytest.approx(0.2, rel=1e-5)


def test_harmonic_levels_scaling():
    # B scaled by 4 doubles omega
    hop = HoppingFamily({(0,): 8.0, (1,): -4.0, (-1,): -4.0})
    pot = PotentialExpansion([lambda p: (p[:, 0] ** 2 - 1) ** 2], wells=[[-1.0], [1.0]])
    omega, _ = harmonic_frequencies(ModelSpec(hop, pot), 0)
    assert omega == pytest.approx([8.0], rel=1e-5)


def test_harmonic_levels_2d_isotropic():
    # B = I, D2V0 = diag(8, 8): omega = (4, 4) with ground level 4 eps
    m = ModelSpec(
        HoppingFamily({(0, 0): 4.0, (1, 0): -1.0, (-1, 0): -1.0,
                       (0, 1): -1.0, (0, -1): -1.0}),
        PotentialExpansion([lambda p: 4.0 * (p[:, 0] ** 2 + (p[:, 1] + 1) ** 2)],
                           wells=[[0.0, -1.0]]))
    omega, _ = harmonic_frequencies(m, 0)
    assert omega == pytest.approx([4.0, 4.0], rel=1e-4)
    lv = harmonic_levels(m, 0, eps=0.1)
    assert lv[0] == pytest.approx(0.4, rel=1e-4)


def test_harmonic_level_centers_dirichlet_eigenvalue():
    # mu lies within an eps^{3/2} window of the harmonic ground level
    m = double_well_1d()
    for eps in (0.1, 0.05):
        dom = LatticeDomain(eps, [[-2, 2]])
        mask = dom.indicator(box_region([[-2, 0.15]]))
        mu = dirichlet_eigs(m, dom, mask, count=1)[0].value
        assert abs(mu - 2 * eps) <= 1.0 * eps**1.5


def test_select_interval_symmetric():
    m = double_well_1d()
    eps = 0.1
    dom = LatticeDomain(eps, [[-2, 2]])
    masks = {0: dom.indicator(box_region([[-2, 0.15]])),
             1: dom.indicator(box_region([[-0.15, 2]]))}
    interval, chosen, scanned = select_interval(m, dom, masks, eps)
    assert set(chosen) == {0, 1}
    assert chosen[0].value == pytest.approx(chosen[1].value, abs=1e-12)
    assert interval.contains(chosen[0].value)
    assert interval.gap_margin > 0
    assert len(scanned[0]) >= 2


def test_select_interval_bounds_scale_with_eps():
    # interval bounds are O(eps) over the sweep
    m = double_well_1d()
    for eps in (0.1, 0.05, 0.025):
        dom = LatticeDomain(eps, [[-2, 2]])
        masks = {0: dom.indicator(box_region([[-2, 0.15]])),
                 1: dom.indicator(box_region([[-0.15, 2]]))}
        interval, chosen, _ = select_interval(m, dom, masks, eps)
        assert 0 < interval.alpha <= interval.beta <= 5.0 * eps
        assert interval.mu_spread <= 1e-12


def test_select_interval_asymmetric_no_common():
    # far-separated harmonic levels admit no common interval
    g = lambda p: 1.0 + 0.75 * p[:, 0]
    pot = PotentialExpansion([lambda p: (p[:, 0] ** 2 - 1) ** 2 * g(p)],
                             wells=[[-1.0], [1.0]])
    m = ModelSpec(HoppingFamily({(0,): 2.0, (1,): -1.0, (-1,): -1.0}), pot)
    eps = 0.1
    dom = LatticeDomain(eps, [[-2, 2]])
    masks = {0: dom.indicator(box_region([[-2, 0.15]])),
             1: dom.indicator(box_region([[-0.15, 2]]))}
    with pytest.raises(SpectralError, match="no common interval"):
        select_interval(m, dom, masks, eps)


def test_select_interval_identical_masks_rejected():
    m = double_well_1d()
    dom = LatticeDomain(0.1, [[-2, 2]])
    mask = dom.indicator(box_region([[-2, 2]]))
    with pytest.raises(SpectralError, match="separated"):
        select_interval(m, dom, {0: mask, 1: mask.copy()}, 0.1)


def test_refined_tail_solves_recurrence():
    # the refined eigenvector satisfies the three-term recurrence with
    # relative accuracy deep in the tail
    m = double_well_1d()
    eps = 1 / 32
    dom = LatticeDomain(eps, [[-2, 2]])
    mask = dom.indicator(box_region([[-0.15, 2]]))
    p = dirichlet_eigs(m, dom, mask, count=1)[0]
    sel = np.flatnonzero(mask)
    v = p.vector[sel]
    x = dom.points[sel, 0]
    diag = 2.0 + (x**2 - 1.0) ** 2
    for i in range(1, 12):
        resid = -v[i - 1] + diag[i] * v[i] - v[i + 1] - p.value * v[i]
        assert abs(resid) <= 1e-10 * max(abs(v[i - 1]), abs(v[i]), abs(v[i + 1]))


def test_sturm_bisection_matches_dense():
    m = double_well_1d()
    dom = LatticeDomain(0.1, [[-2, 2]])
    H, _ = assemble_operator(m, dom)
    dense = np.sort(sla.eigvalsh(H))[:3]
    diag = np.diag(H)
    off = np.diag(H, 1)
    mp_vals = sturm_eigenvalues(diag, off, 3, -1.0, 1.0, digits=30)
    for a, b in zip(dense, mp_vals):
        assert abs(a - float(b)) < 1e-12
