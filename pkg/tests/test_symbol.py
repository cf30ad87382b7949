import json
import random
from fractions import Fraction as F

import pytest

from bvacert import catalog
from bvacert import linalg as la
from bvacert.exact import GaussQ
from bvacert.symbol import (Operator, OperatorError, SubspaceBasis, eval_symbol, eval_symbol_complex,
                            load_operator, pullback_tensor, restrict_operator, save_operator, wa_space)
from conftest import rand_vec
from oracles import sym_coords

I = GaussQ(0, 1)


# -- eval_symbol ------------------------------------------------------------------

def test_gradient_symbol_column(grad2):
    assert eval_symbol(grad2, [3, 4]).as_list() == [[3], [4]]


@pytest.mark.parametrize("name", list(catalog.CATALOG))
def test_symbol_at_zero_is_zero(name):
    op = catalog.get(name)
    assert la.is_zero_matrix(eval_symbol(op, [0] * op.n).as_list())


def test_sym_gradient_symbol_matches_oracle(sym2):
    xi, v = [F(1), F(0)], [F(0), F(1)]
    got = la.matvec(eval_symbol(sym2, xi).as_list(), v)
    sym = [[(xi[a] * v[b] + v[a] * xi[b]) / 2 for b in range(2)] for a in range(2)]
    assert got == sym_coords(sym) == [0, 0, F(1, 2)]
    # the Gram norm of the image is the Frobenius norm 1/sqrt(2)
    g = sym2.gram_list
    assert la.dot(got, la.matvec(g, got)) == F(1, 2)


def test_symbol_dimension_mismatch(grad2):
    with pytest.raises(OperatorError) as e:
        eval_symbol(grad2, [1, 2, 3])
    assert e.value.code == "dimension"


@pytest.mark.parametrize("name", list(catalog.CATALOG))
def test_symbol_linearity_exact(name):
    op = catalog.get(name)
    rng = random.Random(hash(name) % 1000)
    for _ in range(10):
        xi, eta = rand_vec(rng, op.n), rand_vec(rng, op.n)
        a, b = rand_vec(rng, 2)
        lhs = eval_symbol(op, [a * x + b * y for x, y in zip(xi, eta)]).as_list()
        rhs = la.add(la.scale(a, eval_symbol(op, xi).as_list()), la.scale(b, eval_symbol(op, eta).as_list()))
        assert lhs == rhs


# -- complex symbol -----------------------------------------------------------------

def test_cauchy_riemann_complex_symbol(cr):
    m = eval_symbol_complex(cr, [1, I]).as_list()
    assert m == [[1, -I], [I, 1]]
    assert m[0][0] * m[1][1] - m[0][1] * m[1][0] == 0
    assert eval_symbol_complex(cr, [1, I]).rank() == 1


@pytest.mark.parametrize("name", list(catalog.CATALOG))
def test_complex_agrees_with_real(name):
    op = catalog.get(name)
    xi = rand_vec(random.Random(3), op.n)
    assert eval_symbol_complex(op, xi).as_list() == eval_symbol(op, xi).as_list()


def test_gradient_complex_injective(grad2):
    m = eval_symbol_complex(grad2, [1, I])
    assert m.as_list() == [[1], [I]] and m.rank() == 1


# -- pullback tensor ----------------------------------------------------------------

def test_pullback_gradient(grad2):
    assert pullback_tensor(grad2, [5, -2]) == [[5], [-2]]
    assert pullback_tensor(grad2, [0, 0]) == [[0], [0]]


def test_pullback_sym_gradient_e1e1(sym2):
    w = sym_coords([[1, 0], [0, 0]])
    assert pullback_tensor(sym2, w) == [[1, 0], [0, 0]]


@pytest.mark.parametrize("name", list(catalog.CATALOG))
def test_pullback_pairing_identity(name):
    """<G, eta (x) v> = <w*, A(eta) v> exactly."""
    op = catalog.get(name)
    rng = random.Random(11)
    for _ in range(10):
        w, eta, v = rand_vec(rng, op.dim_w), rand_vec(rng, op.n), rand_vec(rng, op.dim_v)
        g = pullback_tensor(op, w)
        lhs = sum(g[i][j] * eta[i] * v[j] for i in range(op.n) for j in range(op.dim_v))
        assert lhs == la.dot(w, la.matvec(eval_symbol(op, eta).as_list(), v))


def test_pullback_linear(sym2):
    rng = random.Random(5)
    a, b = rand_vec(rng, 3), rand_vec(rng, 3)
    c = F(-7, 3)
    lhs = pullback_tensor(sym2, [x + c * y for x, y in zip(a, b)])
    assert lhs == la.add(pullback_tensor(sym2, a), la.scale(c, pullback_tensor(sym2, b)))


# -- W_A -----------------------------------------------------------------------

@pytest.mark.parametrize("name,dim", [("gradient_2d", 2), ("divergence_2d", 1), ("sym_gradient_2d", 3),
                                      ("sym_gradient_3d", 6), ("cauchy_riemann", 2)])
def test_wa_dimension(name, dim):
    assert wa_space(catalog.get(name)).dim == dim


def test_wa_proper_subspace_and_idempotent():
    # A_1 = e_1 (x) e_1*, A_2 = (e_1 + e_3) (x) e_1* in W = R^3
    op = Operator(2, 1, 3, ((("1",), ("0",), ("0",)), (("1",), ("0",), ("1",))))
    wa = wa_space(op)
    assert wa.dim == 2 and wa.contains([2, 0, 5]) and not wa.contains([0, 1, 0])
    # orthogonal projection P = B (B^T B)^-1 B^T onto W_A, applied to every A_i
    b = wa.as_columns()
    bt = la.transpose(b)
    proj = la.matmul(la.matmul(b, la.inverse(la.matmul(bt, b))), bt)
    op2 = Operator(op.n, op.dim_v, op.dim_w, tuple(tuple(map(tuple, la.matmul(proj, [list(r) for r in a])))
                                                   for a in op.coeffs))
    wa2 = wa_space(op2)
    assert wa2.dim == wa.dim and all(wa.contains(v) for v in wa2.vectors)


# -- restriction -------------------------------------------------------------------

def test_identity_restriction(sym2):
    r = restrict_operator(sym2, SubspaceBasis.full(2), SubspaceBasis.full(2))
    assert r.coeffs == sym2.coeffs


def test_gradient_3d_restriction_linearity():
    g = catalog.get("gradient_3d")
    r = restrict_operator(g, SubspaceBasis(3, ((1, 0, 0), (1, 1, 0))), SubspaceBasis.full(1))
    a1, a2 = [list(map(list, a)) for a in g.coeffs[:2]]
    assert [list(map(list, b)) for b in r.coeffs] == [a1, la.add(a1, a2)]


def test_restriction_dependent_plane():
    g = catalog.get("gradient_3d")
    with pytest.raises((OperatorError, ValueError)):
        restrict_operator(g, SubspaceBasis(3, ((1, 0, 0), (2, 0, 0))), SubspaceBasis.full(1))


@pytest.mark.parametrize("name", ["sym_gradient_3d", "gradient_3d", "dev_sym_gradient_3d"])
def test_restriction_commutes_with_symbol(name):
    op = catalog.get(name)
    rng = random.Random(17)
    plane = [rand_vec(rng, op.n), rand_vec(rng, op.n)]
    vsub = [rand_vec(rng, op.dim_v) for _ in range(min(2, op.dim_v))]
    r = restrict_operator(op, SubspaceBasis(op.n, plane), SubspaceBasis(op.dim_v, vsub))
    for _ in range(10):
        s, t = rand_vec(rng, 2)
        c = rand_vec(rng, r.dim_v)
        xi = [s * p + t * q for p, q in zip(*plane)]
        v = [sum(ci * b[j] for ci, b in zip(c, vsub)) for j in range(op.dim_v)]
        assert la.matvec(eval_symbol(r, [s, t]).as_list(), c) == la.matvec(eval_symbol(op, xi).as_list(), v)


# -- validation and files ---------------------------------------------------------

@pytest.mark.parametrize("name", list(catalog.CATALOG))
def test_json_round_trip(name, tmp_path):
    op = catalog.get(name)
    path = tmp_path / f"{name}.json"
    save_operator(op, path)
    back = load_operator(path)
    assert back == op and back.coeffs == op.coeffs and back.gram == op.gram
    assert back.digest == op.digest


def _doc(**over):
    d = {"name": "t", "n": 2, "dimV": 1, "dimW": 2, "coeffs": [[["1"], ["0"]], [["0"], ["1"]]]}
    d.update(over)
    return d


@pytest.mark.parametrize("doc,code", [
    (_doc(coeffs=[[["1/0"], ["0"]], [["0"], ["1"]]]), "rational"),
    (_doc(coeffs=[[["0.5"], ["0"]], [["0"], ["1"]]]), "rational"),
    (_doc(coeffs=[[[0.5], ["0"]], [["0"], ["1"]]]), "rational"),
    (_doc(coeffs=[[["1"], ["0"]]]), "dimension"),
    (_doc(coeffs=[[["1", "2"], ["0", "0"]], [["0", "0"], ["1", "0"]]]), "dimension"),
    (_doc(n=0, coeffs=[]), "dimension"),
    ({"n": 2, "dimV": 1, "coeffs": []}, "schema"),
    (_doc(coeffs="x"), "schema"),
    (_doc(coeffs=[[["0"], ["0"]], [["0"], ["0"]]]), "zero_operator"),
    (_doc(gram=[["1", "0"], ["0", "-1"]]), "gram"),
    (_doc(gram=[["1", "0"]]), "dimension"),
])
def test_operator_errors_have_codes(doc, code):
    with pytest.raises(OperatorError) as e:
        Operator.from_json(doc)
    assert e.value.code == code


def test_missing_gram_is_identity(tmp_path):
    op = Operator.from_json(_doc())
    assert not op.gram_given and op.gram_list == la.identity(2)
    assert "gram" not in op.to_json()


def test_invalid_json_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(OperatorError) as e:
        load_operator(p)
    assert e.value.code == "schema"


def test_operator_immutable(grad2):
    with pytest.raises(Exception):
        grad2.n = 3
    assert json.loads(json.dumps(grad2.to_json())) == grad2.to_json()
