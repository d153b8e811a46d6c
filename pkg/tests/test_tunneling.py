"""Interaction term, interaction matrix, amplitudes, leading asymptotics."""

import numpy as np
import pytest
from scipy.integrate import quad

from latticetunnel import (LatticeDomain, amplitude_extract, box_region,
                           current_sum, dirichlet_eigs, double_well_1d,
                           eikonal_solve, ellipse_region, interaction_exact,
                           interaction_matrix, I0_point, predict_point,
                           boundary_band_estimate, select_interval)
from latticetunnel.models import ModelError
from latticetunnel.tunneling import GeometryError

V = lambda x: (x * x - 1.0) ** 2
XI = lambda x: np.arccosh(1.0 + V(x) / 2.0)
S_JK = 1.2983150646550452
CURRENT_AT_0 = -np.sqrt(5.0)     # -2 sinh(arccosh(3/2))


@pytest.fixture(scope="module")
def dw():
    return double_well_1d()


def _setup(dw, eps):
    dom = LatticeDomain(eps, [[-2, 2]])
    mask_j = dom.indicator(box_region([[-2, 0.15]]))
    mask_k = dom.indicator(box_region([[-0.15, 2]]))
    _, chosen, _ = select_interval(dw, dom, {0: mask_j, 1: mask_k}, eps)
    return dom, mask_j, mask_k, chosen


def test_interaction_disjoint_reach_zero(dw):
    dom = LatticeDomain(0.1, [[-2, 2]])
    mask_j = dom.indicator(box_region([[-2, -0.5]]))
    mask_k = dom.indicator(box_region([[0.5, 2]]))
    vj = dirichlet_eigs(dw, dom, mask_j, count=1)[0]
    vk = dirichlet_eigs(dw, dom, mask_k, count=1)[0]
    # v_j vanishes on the band reaching into M_k, so the sum is 0
    w = interaction_exact(dw, dom, vj, vk, mask_k)
    assert w == 0.0


def test_interaction_empty_band_warns(dw):
    dom = LatticeDomain(0.1, [[-2, 2]])
    mask_all = dom.indicator(box_region([[-2.5, 2.5]]))   # covers everything
    vj = dirichlet_eigs(dw, dom, mask_all, count=1)[0]
    with pytest.warns(UserWarning, match="empty boundary band"):
        w = interaction_exact(dw, dom, vj, vj, mask_all)
    assert w == 0.0


def test_interaction_reciprocity(dw):
    dom, mask_j, mask_k, chosen = _setup(dw, 1 / 16)
    w_jk = interaction_exact(dw, dom, chosen[0], chosen[1], mask_k)
    w_kj = interaction_exact(dw, dom, chosen[1], chosen[0], mask_j)
    assert w_jk == pytest.approx(w_kj, rel=1e-9)
    assert w_jk < 0   # ground-state pair with negative off-diagonal hopping


def test_interaction_slope_matches_quadrature_S(dw):
    eps_values = [1 / 10, 1 / 16, 1 / 24]
    ws = []
    for eps in eps_values:
        dom, mask_j, mask_k, chosen = _setup(dw, eps)
        ws.append(abs(interaction_exact(dw, dom, chosen[0], chosen[1], mask_k)))
    A = np.column_stack([1.0 / np.asarray(eps_values),
                         np.log(eps_values), np.ones(3)])
    coef, *_ = np.linalg.lstsq(A, np.log(ws), rcond=None)
    assert -coef[0] == pytest.approx(S_JK, rel=0.02)


def test_interaction_matrix_two_wells(dw):
    eps = 1 / 16
    dom, mask_j, mask_k, chosen = _setup(dw, eps)
    full = dirichlet_eigs(dw, dom, None, count=2, refine_tail=False)
    exact = [p.value for p in full]
    mat, model_eigs, pairing = interaction_matrix(
        dw, dom, chosen, {0: mask_j, 1: mask_k}, exact_eigs=exact)
    # symmetric 2x2: [[mu, w~], [w~, mu]] with splitting 2 |w~|
    assert mat[0, 0] == pytest.approx(chosen[0].value)
    assert mat[0, 1] == pytest.approx(mat[1, 0])
    splitting_model = model_eigs[1] - model_eigs[0]
    assert splitting_model == pytest.approx(2 * abs(mat[0, 1]), rel=1e-12)
    splitting_exact = exact[1] - exact[0]
    dev = max(p[2] for p in pairing)
    assert dev <= 0.05 * splitting_exact


def test_interaction_matrix_deviation_shrinks(dw):
    rel = []
    for eps in (1 / 10, 1 / 16):
        dom, mask_j, mask_k, chosen = _setup(dw, eps)
        full = dirichlet_eigs(dw, dom, None, count=2, refine_tail=False)
        exact = [p.value for p in full]
        _, model_eigs, pairing = interaction_matrix(
            dw, dom, chosen, {0: mask_j, 1: mask_k}, exact_eigs=exact)
        rel.append(max(p[2] for p in pairing) / (exact[1] - exact[0]))
    assert rel[1] < rel[0]


def test_interaction_matrix_single_well(dw):
    eps = 0.1
    dom = LatticeDomain(eps, [[-2, 2]])
    mask = dom.indicator(box_region([[-2, 0.15]]))
    pair = dirichlet_eigs(dw, dom, mask, count=1)[0]
    mat, model_eigs, pairing = interaction_matrix(
        dw, dom, {0: pair}, {0: mask}, exact_eigs=[pair.value])
    assert mat.shape == (1, 1)
    assert model_eigs[0] == pytest.approx(pair.value)
    assert pairing[0][2] == 0.0


def test_interaction_matrix_gram_failure(dw):
    eps = 0.1
    dom = LatticeDomain(eps, [[-2, 2]])
    mask = dom.indicator(box_region([[-2, 0.15]]))
    pair = dirichlet_eigs(dw, dom, mask, count=1)[0]
    with pytest.raises(ModelError, match="Gram"):
        interaction_matrix(dw, dom, {0: pair, 1: pair}, {0: mask, 1: mask})


@pytest.fixture(scope="module")
def fields(dw):
    dj = eikonal_solve(dw, 0, [[-1.4, 1.4]], 2001)
    dk = eikonal_solve(dw, 1, [[-1.4, 1.4]], 2001)
    return dj, dk


def test_amplitude_positive_at_well(dw, fields):
    dj, _ = fields
    eps = 1 / 16
    dom, mask_j, mask_k, chosen = _setup(dw, eps)
    amp = amplitude_extract(chosen[0], dj, eps, dom)
    assert amp.at([-1.0]) > 0


def test_amplitude_stabilizes_and_mirrors(dw, fields):
    dj, dk = fields
    vals_j, vals_k = [], []
    for eps in (1 / 10, 1 / 20, 1 / 40):
        dom, mask_j, mask_k, chosen = _setup(dw, eps)
        amp_j = amplitude_extract(chosen[0], dj, eps, dom)
        amp_k = amplitude_extract(chosen[1], dk, eps, dom)
        vals_j.append(amp_j.at([0.0]))
        vals_k.append(amp_k.at([0.0]))
    for a, b in zip(vals_j, vals_k):
        assert a == pytest.approx(b, rel=1e-8)      # mirror symmetry
    for a, b in zip(vals_j, vals_j[1:]):
        assert abs(b / a - 1.0) < 0.05              # ratio stabilizes within 5%


def test_amplitude_masked_outside_stable_band(dw, fields):
    dj, _ = fields
    eps = 1 / 40
    dom, mask_j, mask_k, chosen = _setup(dw, eps)
    amp = amplitude_extract(chosen[0], dj, eps, dom, rho=0.3)
    assert not np.all(amp.stable)
    assert np.all(np.isnan(amp.values[~amp.stable]))
    with pytest.raises(ValueError, match="stable"):
        amp.at([1.3])


def test_current_sum_examples(dw):
    assert current_sum(dw, [0.0], [0.0]) == 0.0
    got = current_sum(dw, [0.0], [XI(0.0)])
    assert got == pytest.approx(CURRENT_AT_0, rel=1e-12)
    # offsets with eta_d = 0 only: zero current
    from latticetunnel import HoppingFamily, ModelSpec, PotentialExpansion

    hop = HoppingFamily({(0, 0): 2.0, (1, 0): -1.0, (-1, 0): -1.0})
    pot = PotentialExpansion([lambda p: np.zeros(p.shape[0])], wells=[[0.0, 0.0]])
    assert current_sum(ModelSpec(hop, pot), [0.0, 0.0], [0.5, 0.5]) == 0.0


def test_I0_point_unit_factors():
    assert I0_point(1.0, 1.0, np.zeros((0, 0)), current=2.5, dim=1) == pytest.approx(2.5)
    assert I0_point(2.0, 1.0, np.zeros((0, 0)), 2.5, 1) == pytest.approx(5.0)


def test_I0_point_hessian_checks():
    with pytest.raises(ValueError):
        I0_point(1.0, 1.0, np.array([[-1.0]]), 1.0, 2)


def test_prediction_ratio_1d(dw, fields):
    # this is the acceptance criterion at desk scale: check one eps here
    dj, dk = fields
    eps = 1 / 24
    dom, mask_j, mask_k, chosen = _setup(dw, eps)
    w = interaction_exact(dw, dom, chosen[0], chosen[1], mask_k)
    amp_j = amplitude_extract(chosen[0], dj, eps, dom)
    amp_k = amplitude_extract(chosen[1], dk, eps, dom)
    S_grid = float(dj.value_at([0.0]) + dk.value_at([0.0]))
    cur = current_sum(dw, [0.0], np.atleast_1d(dj.grad_at([0.0])))
    I0 = I0_point(amp_j.at([0.0]), amp_k.at([0.0]), np.zeros((0, 0)), cur, 1)
    w_pred = predict_point(eps, S_grid, I0)
    assert abs(w_pred / w) == pytest.approx(1.0, abs=0.1)
    assert np.sign(w_pred) == np.sign(w)


def test_boundary_band_leading_and_bounds(dw, fields):
    dj, dk = fields
    eps = 1 / 16
    dom, mask_j, mask_k, chosen = _setup(dw, eps)
    w = interaction_exact(dw, dom, chosen[0], chosen[1], mask_k)
    amp_j = amplitude_extract(chosen[0], dj, eps, dom)
    amp_k = amplitude_extract(chosen[1], dk, eps, dom)
    leading, lower, upper, flagged = boundary_band_estimate(
        amp_j, amp_k, dw, dom, dj, dk)
    assert not flagged
    assert lower <= leading <= upper
    assert lower <= w <= upper
    assert leading / w == pytest.approx(1.0, abs=0.15)


def test_boundary_band_equal_gradients_zero(dw, fields):
    dj, _ = fields
    eps = 1 / 16
    dom, mask_j, mask_k, chosen = _setup(dw, eps)
    amp_j = amplitude_extract(chosen[0], dj, eps, dom)
    # same field for both wells: t~(grad d^j) - t~(grad d^k) = 0 pointwise
    leading, lower, upper, _ = boundary_band_estimate(amp_j, amp_j, dw, dom, dj, dj)
    assert leading == 0.0
    assert lower <= 0.0 <= upper


def test_boundary_band_convergence_to_w(dw, fields):
    dj, dk = fields
    ratios = []
    for eps in (1 / 10, 1 / 24):
        dom, mask_j, mask_k, chosen = _setup(dw, eps)
        w = interaction_exact(dw, dom, chosen[0], chosen[1], mask_k)
        amp_j = amplitude_extract(chosen[0], dj, eps, dom)
        amp_k = amplitude_extract(chosen[1], dk, eps, dom)
        leading, *_ = boundary_band_estimate(amp_j, amp_k, dw, dom, dj, dk)
        ratios.append(leading / w)
    assert abs(ratios[1] - 1.0) < abs(ratios[0] - 1.0) + 0.02
    assert ratios[1] == pytest.approx(1.0, abs=0.08)


def test_I0_manifold_point_degeneration():
    # an ell = 0 manifold (single node) reproduces I0_point
    from latticetunnel import (I0_manifold, manifold_detect, product_well_2d,
                               select_interval, transverse_hessian)

    m = product_well_2d()
    dj = eikonal_solve(m, 0, [[-0.8, 0.8], [-1.35, 1.35]], (49, 161))
    dk = eikonal_solve(m, 1, [[-0.8, 0.8], [-1.35, 1.35]], (49, 161))
    man = manifold_detect(dj, dk)
    assert man.ell == 0
    eps = 1 / 8
    dom = LatticeDomain(eps, [[-0.8, 0.8], [-2, 2]])
    masks = {0: dom.indicator(box_region([[-0.8, 0.8], [-2, 0.15]])),
             1: dom.indicator(box_region([[-0.8, 0.8], [-0.15, 2]]))}
    _, chosen, _ = select_interval(m, dom, masks, eps)
    amp_j = amplitude_extract(chosen[0], dj, eps, dom)
    amp_k = amplitude_extract(chosen[1], dk, eps, dom)
    y0 = man.points[0]
    I_man = I0_manifold(amp_j, amp_k, man, m, dj, dk)
    H = transverse_hessian(dj, dk, y0)
    cur = current_sum(m, y0, np.atleast_1d(dj.grad_at(y0)))
    I_pt = I0_point(amp_j.at(y0), amp_k.at(y0), H, cur, dim=2)
    assert I_man == pytest.approx(I_pt, rel=1e-10)


def test_I0_manifold_strip_factorizes():
    # translation invariance: the integrand is constant on G0, so
    # I0 = length(G0) * pointwise value
    from latticetunnel import (I0_manifold, manifold_detect, select_interval,
                               strip_model_2d)

    m = strip_model_2d()
    dj = eikonal_solve(m, 0, [[0, 1], [-1.35, 1.35]], (24, 161),
                       periodic=(True, False))
    dk = eikonal_solve(m, 1, [[0, 1], [-1.35, 1.35]], (24, 161),
                       periodic=(True, False))
    man = manifold_detect(dj, dk)
    eps = 1 / 8
    dom = LatticeDomain(eps, [[0, 1], [-2, 2]], periodic=(True, False))
    masks = {0: dom.indicator(box_region([[0, 1], [-2, 0.15]])),
             1: dom.indicator(box_region([[0, 1], [-0.15, 2]]))}
    _, chosen, _ = select_interval(m, dom, masks, eps)
    amp_j = amplitude_extract(chosen[0], dj, eps, dom)
    amp_k = amplitude_extract(chosen[1], dk, eps, dom)
    I_man = I0_manifold(amp_j, amp_k, man, m, dj, dk)
    y = man.points[0]
    pointwise = (amp_j.at(y) * amp_k.at(y)
                 * current_sum(m, y, np.atleast_1d(dj.grad_at(y))))
    length = man.weights.sum()
    assert length == pytest.approx(1.0, rel=1e-12)
    assert I_man == pytest.approx(length * pointwise, rel=1e-6)


def test_ellipse_region_nesting_and_symmetry(dw, fields):
    dj, dk = fields
    S0 = float(dj.value_at([0.0]) + dk.value_at([0.0]))
    pred_small = ellipse_region(dj, dk, S0, 0.05)
    pred_big = ellipse_region(dj, dk, S0, 0.25)
    xs = np.linspace(-1.3, 1.3, 261).reshape(-1, 1)
    in_small = pred_small(xs)
    in_big = pred_big(xs)
    assert np.all(~in_small | in_big)          # nesting: small subset of big
    assert in_small.sum() < in_big.sum()
    assert np.array_equal(in_small, in_small[::-1])   # mirror symmetry


def test_ellipse_containment_failure_lists_points(dw, fields):
    dj, dk = fields
    S0 = float(dj.value_at([0.0]) + dk.value_at([0.0]))
    dom = LatticeDomain(1 / 16, [[-1.4, 1.4]])
    mask_j = dom.indicator(box_region([[-0.6, 0.15]]))   # too small
    mask_k = dom.indicator(box_region([[-0.15, 0.6]]))
    with pytest.raises(GeometryError) as exc_info:
        ellipse_region(dj, dk, S0, 0.2, masks=(mask_j, mask_k), domain=dom,
                       band_R=1.3)
    assert exc_info.value.offending is not None
    assert len(exc_info.value.offending) > 0
