"""Acceptance criteria 1 to 10.

Each test prints one ``PASS``/``FAIL`` line. Run alone with
``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
"""

import copy
import math
import sys
import time
from fractions import Fraction as F
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bvacert import catalog, certify  # noqa: E402
from bvacert import linalg as la  # noqa: E402
from bvacert.exact import GaussQ  # noqa: E402
from bvacert.lab.corpus import SMOOTH, corpus, half_plane, indicator_square  # noqa: E402
from bvacert.lab.fd import translation_defect, translation_probe, verify_slicing  # noqa: E402
from bvacert.lab.grid import GridDomain, GridField  # noqa: E402
from bvacert.lab.strip import boundary_strip_estimate  # noqa: E402
from bvacert.report import Budgets, bundle, classify, dumps, seal  # noqa: E402
from bvacert.spectrum import (RankOneTriple, check_rank_one_property, g_injectivity_kernel, polarize,  # noqa: E402
                              random_rational_vectors, spectrum_span)
from bvacert.symbol import SubspaceBasis, restrict_operator  # noqa: E402
from bvacert.verify import verify_document  # noqa: E402
from mutate import mutations  # noqa: E402

RANK_ONE = ("gradient_2d", "gradient_3d", "sym_gradient_2d", "sym_gradient_3d")


_CAPSYS = None


@pytest.fixture(autouse=True)
def _uncaptured(capsys):
    global _CAPSYS
    _CAPSYS = capsys
    yield
    _CAPSYS = None


def verdict(n: int, what: str, ok: bool, detail: str = ""):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {what}" + (f" ({detail})" if detail else "")
    with _CAPSYS.disabled():
        print("\n" + line)
    assert ok, line


def timed(fn, *a, **kw):
    t = time.perf_counter()
    out = fn(*a, **kw)
    return out, time.perf_counter() - t


def pullback(op, w):
    """<w*, A_i e_j> straight from the coefficient matrices."""
    return [[sum(F(w[a]) * op.coeffs[i][a][j] for a in range(op.dim_w)) for j in range(op.dim_v)]
            for i in range(op.n)]


def outer(x, y):
    return [[F(a) * F(b) for b in y] for a in x]


# -- 1 ---------------------------------------------------------------------------------

def test_criterion_1_ellipticity():
    grad, sym2, cr = (catalog.get(k) for k in ("gradient_2d", "sym_gradient_2d", "cauchy_riemann"))
    (gr, t1), (gc, t2) = timed(certify.check_r_elliptic, grad), timed(certify.check_c_elliptic, grad)
    (sr, t3) = timed(certify.check_r_elliptic, sym2)
    (cr_r, t4), (cr_c, t5) = timed(certify.check_r_elliptic, cr), timed(certify.check_c_elliptic, cr)
    xi, ker = cr_c.witness_direction, cr_c.witness_kernel
    # A(xi) k = 0 exactly with xi proportional to (1, i)
    prop = xi[0] != 0 and xi[1] == xi[0] * GaussQ(0, 1)
    sym = [[sum((xi[i] * GaussQ(cr.coeffs[i][a][j]) for i in range(2)), GaussQ(0)) for j in range(2)]
           for a in range(2)]
    null = all(sum((sym[a][j] * ker[j] for j in range(2)), GaussQ(0)) == GaussQ(0) for a in range(2))
    ok = (gr.verdict == gc.verdict == "elliptic" and gr.lower_bound >= 1 - 1e-6
          and sr.verdict == "elliptic" and 0.7071 - 1e-3 <= sr.lower_bound <= 0.7072
          and cr_r.verdict == "elliptic" and cr_c.verdict == "not_elliptic" and prop and null
          and any(k != GaussQ(0) for k in ker) and max(t1, t2, t3, t4, t5) <= 10)
    verdict(1, "gradient R/C-elliptic, sym-gradient bound ~ 1/sqrt2, Cauchy-Riemann witness (1,i)", ok,
            f"grad {gr.lower_bound:.9f}, sym2 {sr.lower_bound:.7f}, xi={xi}, max {max(t1, t2, t3, t4, t5):.2f}s")


# -- 2 ---------------------------------------------------------------------------------

def test_criterion_2_constant_rank():
    bad, worst = [], 0.0
    for name, e in catalog.CATALOG.items():
        op = e.operator
        if certify.check_r_elliptic(op).verdict != "elliptic":
            continue
        c, t = timed(certify.check_constant_rank, op)
        worst = max(worst, t)
        j = c.to_json()
        up, lo = j["upper_part"], j["lower_part"]
        applicable = c.r + 1 <= min(op.dim_v, op.dim_w)
        if not (c.verdict == "constant_rank" and c.r == op.dim_v and up["all_vanish"]
                and up["empty"] == (not applicable) and lo["lower_bound"] > 0 and t <= 10):
            bad.append(name)
    verdict(2, "elliptic catalog operators have constant rank dim V", not bad,
            f"failures {bad}, slowest {worst:.2f}s")


# -- 3 ---------------------------------------------------------------------------------

def test_criterion_3_rank_one_and_mixing():
    bad = []
    for name in RANK_ONE:
        op = catalog.get(name)
        r = check_rank_one_property(op)
        span = r.span
        if not (r.verdict == "holds" and r.mixing.verdict == "holds" and span.complete
                and all(t.verify(op) for t in span.triples)):
            bad.append(name)
    sym2 = catalog.get("sym_gradient_2d")
    e11 = RankOneTriple((1, 0, 0), (1, 0), (1, 0))
    has_e11 = any(t.xi == e11.xi and t.v_star == e11.v_star and t.w_star == e11.w_star
                  for t in spectrum_span(sym2).triples) and e11.verify(sym2)
    cr = classify(catalog.get("cauchy_riemann"))
    cr_ok = cr.verdicts["mixing"] == "fails" and cr.verdicts["c_elliptic"] == "not_elliptic"
    violations = [f"{n}:{v}" for n in catalog.CATALOG for v in classify(catalog.get(n), strict=False).inconsistent]
    verdict(3, "rank-one holds with complete spans, CR mixing fails, no flag violations",
            not bad and has_e11 and cr_ok and not violations,
            f"bad {bad}, e1 triple {has_e11}, violations {violations}")


# -- 4 ---------------------------------------------------------------------------------

def test_criterion_4_polarization():
    sym2 = catalog.get("sym_gradient_2d")
    e1, e2 = (1, 0), (0, 1)
    w, t = timed(polarize, sym2, (e1, e1), (e2, e2))
    g = w.gamma
    # (e1 + l e2) (x) (e1 + g l e2) expanded in l
    want = [outer(e1, e1), la.add(outer(e1, [g * x for x in e2]), outer(e2, e1)), outer(e2, [g * x for x in e2])]
    exact = all(pullback(sym2, wk) == wt for wk, wt in zip((w.w0, w.w1, w.w2), want))
    par, t2 = timed(polarize, sym2, (e1, e1), ((2, 0), (3, 0)))
    ok = g == 1 and exact and not w.degenerate and par.gamma == 1 and par.degenerate and par.verify(sym2) \
        and max(t, t2) <= 1
    verdict(4, "sym-gradient polarization gamma = 1 with exact quadratic witness", ok,
            f"w0={list(map(str, w.w0))} w1={list(map(str, w.w1))} w2={list(map(str, w.w2))}, {max(t, t2):.3f}s")


# -- 5 ---------------------------------------------------------------------------------

def _random_restriction(op, s):
    seed = 1000 * s + 7
    while True:
        plane = random_rational_vectors(2, op.n, seed=seed)
        if la.rank(plane) == 2:
            break
        seed += 1
    vsub = random_rational_vectors(min(2, op.dim_v), op.dim_v, seed=1000 * s + 8)
    if la.rank(vsub) < len(vsub):
        vsub = vsub[:1]
    return restrict_operator(op, SubspaceBasis(op.n, plane), SubspaceBasis(op.dim_v, vsub))


def test_criterion_5_injectivity_and_restrictions():
    not_inj = [n for n in catalog.CATALOG if g_injectivity_kernel(catalog.get(n))]
    fails = [(n, s) for n in RANK_ONE for s in range(20)
             if check_rank_one_property(_random_restriction(catalog.get(n), s)).verdict != "holds"]
    verdict(5, "g_A injective on (W_A)* everywhere, 80 restrictions stay rank-one", not not_inj and not fails,
            f"non-injective {not_inj}, restriction failures {fails}")


# -- 6 ---------------------------------------------------------------------------------

def test_criterion_6_polynomial_kernels():
    (g, t1), (s, t2), (c, t3) = (timed(certify.kernel_polynomials, catalog.get(n), 4)
                                 for n in ("gradient_2d", "sym_gradient_2d", "cauchy_riemann"))
    ok = (g.dims[-1] == 1 and g.stabilization_degree == 0 and s.dims[-1] == 3 and s.stabilization_degree == 1
          and c.dims == [2, 4, 6, 8, 10] and c.stabilization_degree is None and max(t1, t2, t3) <= 5)
    verdict(6, "kernel dims: gradient 1 (l=0), sym-gradient 3 (l=1), CR 2,4,6,8,10", ok,
            f"{g.dims} {s.dims} {c.dims}, {max(t1, t2, t3):.2f}s")


# -- 7 ---------------------------------------------------------------------------------

def test_criterion_7_slicing():
    t0 = time.perf_counter()
    grad = catalog.get("gradient_2d")
    sq = verify_slicing(indicator_square(GridDomain.box(2, 1 / 256)), grad, RankOneTriple((1, 0), (1, 0), (1,)))
    single = 0.97 <= sq.lhs <= 1.03 and 1.96 <= sq.rhs <= 2.08 and sq.passed
    failed, ratios = [], []
    for name in catalog.CATALOG:
        op = catalog.get(name)
        triples = spectrum_span(op).triples
        if not triples:
            continue
        hs = [1 / 64, 1 / 128, 1 / 256] if op.n == 2 else [1 / 16, 1 / 32, 1 / 64]
        slack = {}
        for h in hs:
            for f in corpus(GridDomain.box(op.n, h), op.dim_v):
                for t in triples:
                    r = verify_slicing(f, op, t)
                    if not r.passed:
                        failed.append((name, h, f.name))
                    slack.setdefault((f.name, t), []).append(r.slack)
        for (fname, _), s in slack.items():
            if fname in SMOOTH:
                ratios += [b / a for a, b in zip(s, s[1:])]
    elapsed = time.perf_counter() - t0
    ok = single and not failed and all(0.4 <= x <= 0.6 for x in ratios) and elapsed <= 60
    verdict(7, "slicing inequality on the square and the full corpus x catalog x h ladder", ok,
            f"lhs {sq.lhs:.4f} rhs {sq.rhs:.4f}, slack ratios [{min(ratios):.3f}, {max(ratios):.3f}], "
            f"failures {len(failed)}, {elapsed:.1f}s")


# -- 8 ---------------------------------------------------------------------------------

def test_criterion_8_translation():
    dom = GridDomain.box(2, 1 / 256)
    hp = half_plane(dom)
    ladder = [j * dom.h for j in (1, 2, 4, 8, 16, 32)]
    hp_ratios = [translation_defect(hp, s, (1, 0), (1,)) / s for s in ladder]
    bad, worst = [], 0.0
    for name in RANK_ONE:
        op = catalog.get(name)
        d = GridDomain.box(op.n, 1 / 128 if op.n == 2 else 1 / 32)
        for f in corpus(d, op.dim_v):
            for t in spectrum_span(op).triples:
                p = translation_probe(f, op, t)
                if p.bound_constant > 0:
                    worst = max(worst, p.slope / p.bound_constant)
                if p.slope > 1.1 * p.bound_constant:
                    bad.append((name, f.name))
    ok = all(abs(r - 1) <= 0.02 for r in hp_ratios) and not bad
    verdict(8, "half-plane defect/s = 1 and fitted slopes under 1.1 x bound", ok,
            f"half-plane ratios [{min(hp_ratios):.4f}, {max(hp_ratios):.4f}], worst slope/bound {worst:.3f}")


# -- 9 ---------------------------------------------------------------------------------

def test_criterion_9_strip():
    dom = GridDomain.graph_domain(lambda x: 1 + x / 2, 1 / 256, [(0, 1)], (0, 2))
    c, a0, a = 1.5, 0.2, 0.1
    r = boundary_strip_estimate(GridField(dom, np.full(dom.shape, c)), catalog.get("gradient_2d"),
                                RankOneTriple((0, 1), (0, 1), (1,)), a0, a)
    # the strip between the graphs a - a0 and a - a is a vertical band of height a0 - a over (0, 1)
    want = c * (a0 - a) * 1.0
    ok = abs(r.lhs - want) <= 0.02 * want and r.rhs >= r.lhs and r.passed and abs(r.rho1 - 2 / math.sqrt(5)) < 1e-9
    verdict(9, "boundary strip estimate for a constant field on a(x) = 1 + x/2", ok,
            f"lhs {r.lhs:.5f} vs {want:.5f}, rhs {r.rhs:.5f}, rho1 {r.rho1:.6f}")


# -- 10 --------------------------------------------------------------------------------

def test_criterion_10_integrity():
    docs = [classify(catalog.get(n)).to_json() for n in catalog.CATALOG]
    sym2, cr = catalog.get("sym_gradient_2d"), catalog.get("cauchy_riemann")
    docs += [bundle(sym2, polarize(sym2, ((1, 0), (1, 0)), ((0, 1), (0, 1))).to_json()),
             bundle(cr, certify.check_c_elliptic(cr).to_json()),
             bundle(sym2, {"type": "rank_one_triples", "query": {"span": True},
                           "triples": [t.to_json() for t in spectrum_span(sym2).triples]})]
    accepted = sum(verify_document(d).ok for d in docs)
    targets = docs[:3] + docs[-3:]
    per = [17, 17, 17, 17, 16, 16]
    rejected = total = 0
    for k, (doc, count) in enumerate(zip(targets, per)):
        for _, bad in mutations(doc, count, seed=k):
            total += 1
            rejected += not verify_document(bad).ok
    op = catalog.get("sym_gradient_3d")
    runs = [classify(op, Budgets(seed=5)).to_json() for _ in range(2)]
    same = len({dumps({k: v for k, v in d.items() if k != "volatile"}) for d in runs}) == 1
    ok = accepted == len(docs) and total == 100 and rejected == total and same
    verdict(10, "verify-cert accepts all emitted certificates and rejects all mutations", ok,
            f"accepted {accepted}/{len(docs)}, rejected {rejected}/{total}, deterministic {same}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
