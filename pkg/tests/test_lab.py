import math
import warnings

import numpy as np
import pytest

from bvacert import catalog
from bvacert.certify import PolyKernel, kernel_polynomials
from bvacert.lab.corpus import CORPUS, SMOOTH, corpus, half_plane, indicator_square, rotation_ball, smoothed_square, \
    smooth_bump
from bvacert.lab.fd import (LabError, apply_operator_fd, kernel_weights, mollifier_modulus, mollify, slice_tv,
                            snap_direction, total_variation, translation_defect, translation_probe,
                            verify_slicing)
from bvacert.lab.grid import GridDomain, GridField, load_field, save_field
from bvacert.lab.seminorm import MomentSeminorm, _box_mask, moment_seminorm, poincare_probe
from bvacert.lab.strip import boundary_strip_estimate
from bvacert.spectrum import RankOneTriple, spectrum_span
from oracles import directional_tv

H = 1 / 256
E1 = RankOneTriple((1, 0), (1, 0), (1,))


@pytest.fixture(scope="module")
def dom():
    return GridDomain.box(2, H)


@pytest.fixture(scope="module")
def square(dom):
    return indicator_square(dom)


def const(dom, c=1.0, dim_v=1):
    return GridField(dom, np.full(dom.shape + (dim_v,), c))


# -- operator on the grid ------------------------------------------------------------

def test_constant_field_zero_measure(dom, sym2):
    m = apply_operator_fd(const(dom, 2.5, 2), sym2)
    assert np.all(m.masses == 0) and m.total_variation() == 0


def test_affine_gradient_total_variation(grad2):
    dom = GridDomain.box(2, 1 / 128)
    f = GridField.from_function(dom, lambda x, y: [2 * x - 3 * y])
    # |grad u| = sqrt(13) on (0,1)^2; interior mode loses one layer of cells
    want = math.sqrt(13) * (1 - dom.h) ** 2
    assert abs(total_variation(f, grad2) - want) <= 1e-9


def test_square_perimeter(square, grad2):
    assert abs(total_variation(square, grad2) - 2.0) <= 0.02 * 2.0


def test_operator_dimension_mismatch(dom, sym2):
    with pytest.raises(LabError):
        apply_operator_fd(const(dom), sym2)


@pytest.mark.parametrize("name", ["gradient_2d", "sym_gradient_2d", "cauchy_riemann"])
def test_fd_linear(name):
    op = catalog.get(name)
    dom = GridDomain.box(2, 1 / 64)
    rng = np.random.default_rng(0)
    a = GridField(dom, rng.normal(size=dom.shape + (op.dim_v,)))
    b = GridField(dom, rng.normal(size=dom.shape + (op.dim_v,)))
    s, t = 0.7, -1.3
    lhs = apply_operator_fd(a.scaled(s) + b.scaled(t), op).masses
    rhs = s * apply_operator_fd(a, op).masses + t * apply_operator_fd(b, op).masses
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs)))


# -- slices ---------------------------------------------------------------------------

def test_slice_constant_zero(dom):
    assert slice_tv(const(dom), (1, 0), (1,)).lhs == 0


def test_slice_square(square):
    assert abs(slice_tv(square, (1, 0), (1,)).lhs - 1.0) <= 0.03


def test_slice_orthogonal_to_variation(dom):
    f = GridField.from_function(dom, lambda x, y: [x])
    assert slice_tv(f, (0, 1), (1,)).lhs == 0


@pytest.mark.parametrize("axis", [0, 1])
def test_slice_lhs_matches_direct_diff(axis, grad2):
    dom = GridDomain.box(2, 1 / 128)
    rng = np.random.default_rng(axis)
    f = GridField(dom, rng.normal(size=dom.shape + (1,)))
    xi = [0, 0]
    xi[axis] = 1
    w = [0, 0]
    w[axis] = 1
    rep = verify_slicing(f, grad2, RankOneTriple(tuple(w), tuple(xi), (1,)))
    assert abs(rep.lhs - directional_tv(f.values[..., 0], axis, dom.h, dom.mask)) <= 1e-10


def test_slice_diagonal_direction_is_lattice():
    d = snap_direction((math.sqrt(0.5), math.sqrt(0.5)))
    assert d.k == (1, 1) and d.angle <= 1e-12
    d = snap_direction((math.cos(0.3), math.sin(0.3)))
    assert max(abs(x) for x in d.k) <= 16 and d.angle < 1e-2


def test_verify_slicing_square(square, grad2):
    r = verify_slicing(square, grad2, E1)
    assert 0.97 <= r.lhs <= 1.03 and 1.96 <= r.rhs <= 2.08 and r.passed


def test_verify_slicing_sym_rotation(sym2):
    dom = GridDomain.box(2, 1 / 128)
    f = rotation_ball(dom, 2)
    t = RankOneTriple((1, 0, 0), (1, 0), (1, 0))
    r = verify_slicing(f, sym2, t)
    assert r.passed and r.margin > 0 and r.to_json()["pass"]


def test_verify_slicing_constant(dom, grad2):
    r = verify_slicing(const(dom), grad2, E1)
    assert r.lhs == 0 and r.rhs == 0 and r.passed


def test_verify_slicing_rejects_bad_triple(square, grad2):
    with pytest.raises(LabError):
        verify_slicing(square, grad2, RankOneTriple((1, 1), (1, 0), (1,)))


def test_slicing_scale_bookkeeping(square, grad2):
    """(w*, xi, v*) and (c w*, xi, c v*) give the same pass/fail with scaled sides."""
    a = verify_slicing(square, grad2, E1)
    b = verify_slicing(square, grad2, RankOneTriple((3, 0), (1, 0), (3,)))
    assert math.isclose(b.lhs, 3 * a.lhs) and math.isclose(b.rhs, 3 * a.rhs)


# -- translation --------------------------------------------------------------------

@pytest.mark.parametrize("j", [1, 2, 8, 32])
def test_half_plane_defect_exact(dom, j):
    s = j * dom.h
    assert abs(translation_defect(half_plane(dom), s, (1, 0), (1,)) / s - 1.0) <= 1e-12


def test_constant_defect_is_boundary_face(dom):
    # extension by zero: the only jump is across the face x1 = 1, of area 1
    s = 4 * dom.h
    assert abs(translation_defect(const(dom), s, (1, 0), (1,)) - s) <= 1e-12
    assert translation_defect(const(dom), s, (0, 1), (0,)) == 0


def test_square_defect_ratio(square, dom):
    s = 4 * dom.h
    assert abs(translation_defect(square, s, (1, 0), (1,)) / s - 1.0) <= 0.02


def test_non_lattice_without_snap(square):
    with pytest.raises(LabError):
        translation_defect(square, 4 * H, (math.cos(0.3), math.sin(0.3)), (1,), snap=False)


def test_step_must_be_on_lattice(square):
    with pytest.raises(LabError):
        translation_defect(square, 1.5 * H, (1, 0), (1,))


def test_translation_probe_square(square, grad2):
    p = translation_probe(square, grad2, E1)
    assert p.passed and p.slope <= 1.1 * p.bound_constant


# -- mollification ----------------------------------------------------------------

def test_kernel_mass_one():
    for eps in (2 / 64, 5 / 64, 8 / 64):
        assert abs(kernel_weights(eps, 1 / 64).sum() - 1) <= 1e-12


def test_mollify_constant(dom):
    m = mollify(const(dom, 3.0), 6 * dom.h)
    assert np.max(np.abs(m.values - 3.0)) <= 1e-12


def test_mollify_square_l1_distance(square, dom):
    eps = 8 * dom.h
    dist = np.sum(np.abs(mollify(square, eps).values - square.values)) * dom.cell_volume
    assert dist <= eps * 2.0 * 1.5
    assert dist <= mollifier_modulus(square, eps)


def test_mollify_under_resolved(dom, square):
    with pytest.raises(LabError):
        mollify(square, dom.h)


def test_mollify_does_not_inflate_tv(square, grad2, dom):
    tv0 = total_variation(square, grad2)
    once = mollify(square, 8 * dom.h)
    twice = mollify(once, 4 * dom.h)
    wide = mollify(square, 12 * dom.h)
    for f in (once, twice, wide):
        assert total_variation(f, grad2) <= 1.05 * tv0
    assert total_variation(twice, grad2) <= 1.05 * total_variation(once, grad2)


# -- full corpus ---------------------------------------------------------------------

@pytest.mark.parametrize("name", ["gradient_2d", "sym_gradient_2d", "gradient_3d", "sym_gradient_3d"])
def test_corpus_slicing_and_translation(name):
    op = catalog.get(name)
    triples = spectrum_span(op).triples
    hs = [1 / 64, 1 / 128, 1 / 256] if op.n == 2 else [1 / 16, 1 / 32, 1 / 64]
    slack = {}
    for h in hs:
        dom = GridDomain.box(op.n, h)
        for f in corpus(dom, op.dim_v):
            for t in triples:
                r = verify_slicing(f, op, t)
                assert r.passed, (name, h, f.name, t)
                slack.setdefault((f.name, t.xi), []).append(r.slack)
                if h == hs[0]:
                    p = translation_probe(f, op, t)
                    assert p.passed, (name, f.name, t, p.slope, p.bound_constant)
    for (fname, _), s in slack.items():
        if fname in SMOOTH:
            for a, b in zip(s, s[1:]):
                assert 0.4 <= b / a <= 0.6


# -- moment seminorm and Poincare probe ---------------------------------------------------

def test_rho_positive_on_constants(grad2):
    dom = GridDomain.box(2, 1 / 64)
    assert moment_seminorm(const(dom), kernel_polynomials(grad2)) > 0


def test_rho_orthogonal_and_basis(sym2):
    dom = GridDomain.box(2, 1 / 64)
    rho = MomentSeminorm.build(dom, kernel_polynomials(sym2))
    assert len(rho.basis) == 3
    w = _box_mask(dom, rho.omega)
    f = rotation_ball(dom, 2)
    v = f.values.copy()
    for b in rho.basis:
        v = v - np.sum(b[w] * v[w]) * dom.cell_volume * b
    v = v * w[..., None]
    g = GridField(dom, v)
    assert rho(g) <= 1e-8 * g.l1()
    assert rho(GridField(dom, rho.basis[0])) > 0


def test_rho_even_and_bounded(sym2):
    dom = GridDomain.box(2, 1 / 64)
    rho = MomentSeminorm.build(dom, kernel_polynomials(sym2))
    f = rotation_ball(dom, 2).scaled(1e3)
    assert rho(f) == rho(f.scaled(-1.0))
    assert rho(f) <= len(rho.basis) * sum(2.0 ** -(k + 1) for k in range(len(rho.bumps))) + 1e-12


def test_rho_empty_basis_warns():
    dom = GridDomain.box(2, 1 / 32)
    empty = PolyKernel(0, [0], None, [])
    with pytest.warns(UserWarning):
        assert moment_seminorm(const(dom), empty) == 0


def test_poincare_stable_across_h(grad2):
    k = kernel_polynomials(grad2)
    consts = []
    for h in (1 / 64, 1 / 128, 1 / 256):
        dom = GridDomain.box(2, h)
        fams = [smoothed_square(dom, 1, e) for e in (1 / 8, 1 / 16)] + [smooth_bump(dom, 1)]
        consts.append(poincare_probe(fams, grad2, k).constant)
    assert all(math.isfinite(c) for c in consts)
    assert max(consts) / min(consts) <= 1.1


def test_poincare_kernel_and_zero_fields(grad2):
    dom = GridDomain.box(2, 1 / 64)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        p = poincare_probe([const(dom), const(dom, 0.0)], grad2, kernel_polynomials(grad2))
    assert p.skipped == [1] and math.isfinite(p.ratios[0]) and p.ratios[0] > 0
    assert any("skipped" in str(w.message) for w in rec)


# -- boundary strip -------------------------------------------------------------------

@pytest.fixture(scope="module")
def graph_dom():
    return GridDomain.graph_domain(lambda x: 1 + x / 2, 1 / 256, [(0, 1)], (0, 2))


STRIP = RankOneTriple((0, 1), (0, 1), (1,))


def test_graph_domain_lipschitz(graph_dom):
    assert abs(graph_dom.lipschitz - 0.5) <= 1e-9


def test_strip_constant(graph_dom, grad2):
    c = 1.5
    r = boundary_strip_estimate(GridField(graph_dom, np.full(graph_dom.shape, c)), grad2, STRIP, 0.2, 0.1)
    want = c * (0.2 - 0.1) * 1.0
    assert abs(r.lhs - want) <= 0.02 * want
    assert abs(r.rho1 - 2 / math.sqrt(5)) <= 1e-9
    assert r.rhs >= r.lhs and r.passed


def test_strip_zero(graph_dom, grad2):
    r = boundary_strip_estimate(GridField(graph_dom, np.zeros(graph_dom.shape)), grad2, STRIP, 0.2, 0.1)
    assert r.lhs == 0 and r.rhs == 0 and r.passed


def test_strip_jump_sheet(graph_dom, grad2):
    z = graph_dom.centers(1)
    a = 1 + graph_dom.centers(0) / 2
    f = GridField(graph_dom, (z < a - 0.15).astype(float))
    r = boundary_strip_estimate(f, grad2, STRIP, 0.2, 0.1)
    assert r.passed and r.lhs <= r.variation_term and r.surface_term > 0


def test_strip_errors(graph_dom, grad2, dom):
    f = GridField(graph_dom, np.ones(graph_dom.shape))
    with pytest.raises(LabError):
        boundary_strip_estimate(f, grad2, STRIP, 0.1, 0.2)
    with pytest.raises(LabError):
        boundary_strip_estimate(f, grad2, STRIP, 1.5, 0.1)
    with pytest.raises(LabError):
        boundary_strip_estimate(f, grad2, E1, 0.2, 0.1)
    with pytest.raises(LabError):
        boundary_strip_estimate(const(dom), grad2, STRIP, 0.2, 0.1)


# -- domains and files -------------------------------------------------------------------

def test_graph_domain_must_stay_above_bottom():
    with pytest.raises(ValueError):
        GridDomain.graph_domain(lambda x: x - 0.5, 1 / 32, [(0, 1)], (0, 2))


@pytest.mark.parametrize("suffix", [".bin", ".csv"])
def test_field_file_round_trip(tmp_path, graph_dom, suffix):
    f = GridField(graph_dom, np.random.default_rng(1).normal(size=graph_dom.shape + (2,)), "noise")
    path = tmp_path / f"f{suffix}"
    save_field(f, path)
    g = load_field(path)
    assert g.domain.shape == f.domain.shape and g.domain.h == f.domain.h
    assert np.array_equal(g.domain.mask, f.domain.mask) and np.array_equal(g.values, f.values)
    assert g.domain.kind == "graph" and np.array_equal(g.domain.graph, f.domain.graph)


def test_field_file_missing_sidecar(tmp_path):
    p = tmp_path / "x.bin"
    p.write_bytes(b"")
    with pytest.raises(FileNotFoundError):
        load_field(p)


def test_field_values_zero_outside_mask(graph_dom):
    f = GridField(graph_dom, np.ones(graph_dom.shape))
    assert np.all(f.values[~graph_dom.mask] == 0)
    with pytest.raises(ValueError):
        GridField(graph_dom, np.full(graph_dom.shape, np.nan))
