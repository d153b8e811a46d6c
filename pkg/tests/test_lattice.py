"""Lattice domain indexing and operator action."""

import numpy as np
import pytest

from latticetunnel import (LatticeDomain, apply_operator, assemble_operator,
                           box_region, double_well_1d, strip_model_2d,
                           xdep_hopping_1d)
from latticetunnel.models import ModelError


def test_index_bijection():
    dom = LatticeDomain(0.25, [[-1, 1], [-1, 1]])
    assert dom.size == 9 * 9
    for i in range(dom.size):
        assert dom.index_of(dom.nmat[i]) == i


def test_periodic_wrap():
    dom = LatticeDomain(0.25, [[0, 1]], periodic=(True,))
    assert dom.size == 4
    tab = dom.shift_table((1,))
    assert (tab >= 0).all()
    i_last = dom.index_of([3])
    assert tab[i_last] == dom.index_of([0])


def test_periodic_length_must_divide():
    with pytest.raises(ModelError):
        LatticeDomain(0.3, [[0, 1]], periodic=(True,))


def test_apply_operator_delta_stencil():
    # u = delta_0, V = 0 in effect at x=0 neighborhood? include V explicitly
    m = double_well_1d()
    dom = LatticeDomain(0.5, [[-2, 2]])
    u = np.zeros(dom.size)
    i0 = dom.index_of([0])
    u[i0] = 1.0
    out = apply_operator(m, dom, u)
    v0 = float(m.V0(np.array([[0.0]]))[0])
    assert out[i0] == pytest.approx(2.0 + v0)
    assert out[dom.index_of([1])] == pytest.approx(-1.0)
    assert out[dom.index_of([-1])] == pytest.approx(-1.0)
    assert np.count_nonzero(out) == 3


def test_apply_operator_constant_kernel_zero_sum():
    # V = 0 model: constant function is annihilated away from the boundary
    from latticetunnel import HoppingFamily, ModelSpec, PotentialExpansion

    hop = HoppingFamily({(0,): 2.0, (1,): -1.0, (-1,): -1.0})
    pot = PotentialExpansion([lambda p: np.zeros(p.shape[0])], wells=[[0.0]])
    m = ModelSpec(hop, pot)
    dom = LatticeDomain(0.5, [[0, 1]], periodic=(True,))
    out = apply_operator(m, dom, np.ones(dom.size))
    assert np.abs(out).max() < 1e-14


def test_apply_operator_matches_dense_assembly():
    m = double_well_1d()
    dom = LatticeDomain(4.0 / 31, [[-2, 2]])
    assert dom.size == 32 or dom.size == 31  # grid granularity
    rng = np.random.default_rng(0)
    u = rng.normal(size=dom.size)
    H, sel = assemble_operator(m, dom)
    assert np.allclose(apply_operator(m, dom, u), H @ u, atol=1e-13)


def test_apply_operator_2d_matches_dense():
    m = strip_model_2d()
    dom = LatticeDomain(0.25, [[0, 1], [-1.5, 1.5]], periodic=(True, False))
    rng = np.random.default_rng(1)
    u = rng.normal(size=dom.size)
    H, _ = assemble_operator(m, dom)
    assert np.allclose(apply_operator(m, dom, u), H @ u, atol=1e-13)


def test_operator_symmetry_exact():
    # <u, H v> = <H u, v> to round-off for the x-independent model
    m = double_well_1d()
    dom = LatticeDomain(0.1, [[-2, 2]])
    rng = np.random.default_rng(2)
    for _ in range(5):
        u = rng.normal(size=dom.size)
        v = rng.normal(size=dom.size)
        lhs = u @ apply_operator(m, dom, v)
        rhs = apply_operator(m, dom, u) @ v
        assert lhs == pytest.approx(rhs, rel=1e-13)


def test_operator_symmetry_truncated_expansion():
    # truncated eps-expansions satisfy the symmetry up to O(eps^N)
    m = xdep_hopping_1d()
    for eps in (0.1, 0.05, 0.025):
        dom = LatticeDomain(eps, [[-2, 2]])
        H, _ = assemble_operator(m, dom)
        asym = np.abs(H - H.T).max()
        assert asym <= 5.0 * eps**2


def test_dirichlet_contract_violation():
    m = double_well_1d()
    dom = LatticeDomain(0.5, [[-2, 2]])
    mask = dom.indicator(box_region([[-2, 0]]))
    u = np.ones(dom.size)
    with pytest.raises(ModelError):
        apply_operator(m, dom, u, dirichlet=mask)


def test_dirichlet_restriction_matches_submatrix():
    m = double_well_1d()
    dom = LatticeDomain(0.25, [[-2, 2]])
    mask = dom.indicator(box_region([[-2, 0.2]]))
    Hsub, sel = assemble_operator(m, dom, dirichlet=mask)
    rng = np.random.default_rng(3)
    u = np.zeros(dom.size)
    u[sel] = rng.normal(size=len(sel))
    out = apply_operator(m, dom, u, dirichlet=mask)
    assert np.allclose(out[sel], Hsub @ u[sel], atol=1e-13)
    assert np.all(out[~mask] == 0.0)


def test_kinetic_lower_bound_surrogate():
    # smallest eigenvalue of T_eps on a periodic box >= -C*eps for the
    # eps-expanded x-dependent model (exactly 0 for the constant one)
    from latticetunnel import HoppingFamily, ModelSpec, PotentialExpansion

    strength = 0.3
    g = lambda p: 1.0 + strength * np.cos(p[:, 0])
    gp = lambda p: -strength * np.sin(p[:, 0])
    hop = HoppingFamily({
        (0,): [lambda p: 2.0 * g(p)],
        (1,): [lambda p: -g(p), lambda p: -0.5 * gp(p)],
        (-1,): [lambda p: -g(p), lambda p: 0.5 * gp(p)],
    })
    pot = PotentialExpansion([lambda p: np.zeros(p.shape[0])], wells=[[0.0]])
    m = ModelSpec(hop, pot)
    period = 2 * np.pi
    mins = []
    eps_values = [period / 64, period / 128, period / 256]
    for eps in eps_values:
        dom = LatticeDomain(eps, [[0, period]], periodic=(True,))
        H, _ = assemble_operator(m, dom)
        H = 0.5 * (H + H.T)
        mins.append(np.linalg.eigvalsh(H).min())
    C = max(-mn / eps for mn, eps in zip(mins, eps_values))
    for mn, eps in zip(mins, eps_values):
        assert mn >= -max(C, 1e-12) * eps * 1.0000001
    assert C < 1.0
