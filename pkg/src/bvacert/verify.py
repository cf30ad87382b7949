"""Independent re-validation of emitted reports and certificate bundles.

Nothing here trusts a verdict: exact witnesses are re-checked in rational
arithmetic, branch-and-bound traces are re-evaluated node by node, and the
content digest must match. Unknown fields are ignored with a warning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import bnb, certify, spectrum
from . import linalg as la
from .exact import GaussQ, parse_gauss, parse_rational
from .poly import Poly
from .report import DIGEST, FORMAT_VERSION, VOLATILE, consistency_flags, content_digest
from .symbol import Operator, eval_symbol, eval_symbol_complex

KNOWN_FIELDS = {
    "report": {"type", "format_version", "operator", "operator_digest", "gram_assumed_identity", "parameters",
               "certificates", "verdicts", "consistency", DIGEST, VOLATILE},
    "bundle": {"type", "format_version", "operator", "operator_digest", "certificate", "parameters",
               DIGEST, VOLATILE},
    "ellipticity": {"type", "kind", "verdict", "lower_bound", "upper_bound", "tol", "budget", "accuracy", "nodes",
                    "lipschitz", "lipschitz_rule", "witness_direction", "witness_kernel", "float_candidate",
                    "trace"},
    "rank": {"type", "verdict", "r", "seed", "sampled_ranks", "upper_part", "lower_part", "witness_direction",
             "witness_rank"},
    "mixing": {"type", "verdict", "certified", "normals", "s_bases", "intersection", "candidates_tried",
               "sampled_dims", "survivor", "symbolic"},
    "spectrum_span": {"type", "triples", "span_dim", "target_dim", "complete"},
    "poly_kernel": {"type", "degree_scanned", "dims", "stabilization_degree", "basis"},
    "injectivity": {"type", "kernel", "injective"},
    "polarization": {"type", "gamma", "w0", "w1", "w2", "pair1", "pair2", "degenerate"},
    "rank_one_triples": {"type", "query", "triples"},
}

REPORT_SLOTS = ("r_elliptic", "c_elliptic", "constant_rank", "mixing", "spectrum_span", "poly_kernel",
                "injectivity")


@dataclass
class VerifyResult:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    checked: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


class _Fail(Exception):
    pass


def _req(cond: bool, msg: str):
    if not cond:
        raise _Fail(msg)


def _float(x, what: str) -> float:
    _req(isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x), f"{what} is not a number")
    return float(x)


def _rat_vec(v, what: str) -> list[Fraction]:
    _req(isinstance(v, list), f"{what} is not a list")
    try:
        return [parse_rational(x) for x in v]
    except Exception as exc:  # noqa: BLE001
        raise _Fail(f"{what}: {exc}") from exc


def _gauss_vec(v, what: str) -> list[GaussQ]:
    _req(isinstance(v, list), f"{what} is not a list")
    try:
        return [parse_gauss(x) for x in v]
    except Exception as exc:  # noqa: BLE001
        raise _Fail(f"{what}: {exc}") from exc


def _unknown(doc: dict, kind: str, where: str, res: VerifyResult):
    for k in sorted(set(doc) - KNOWN_FIELDS.get(kind, set(doc))):
        res.warnings.append(f"{where}: unknown field {k!r} ignored")


def _int(x, what: str, lo: int = 0) -> int:
    _req(isinstance(x, int) and not isinstance(x, bool) and x >= lo, f"{what} is not an integer >= {lo}")
    return x


def _same_span(a: list, b: list, dim: int) -> bool:
    if len(a) != len(b):
        return False
    return not a or (la.rank(a) == len(a) and la.span_dim(a + b) == len(a))


def _check_lipschitz(problem: bnb.SphereProblem, part: dict, what: str):
    lip = _float(part.get("lipschitz"), f"{what}.lipschitz")
    _req(abs(lip - problem.lipschitz) <= 1e-9 * max(1.0, problem.lipschitz),
         f"{what}: recorded Lipschitz constant {lip!r} != {problem.lipschitz!r}")
    if "lipschitz_rule" in part:
        _req(part["lipschitz_rule"] == certify.LIPSCHITZ_RULE, f"{what}: unknown Lipschitz rule")


def _trace_min(problem: bnb.SphereProblem, trace, what: str) -> float:
    _req(isinstance(trace, dict), f"{what}: missing trace")
    try:
        return bnb.recheck(problem, trace)
    except (ValueError, KeyError, TypeError) as exc:
        raise _Fail(f"{what}: invalid trace ({exc})") from exc


def _check_lower_part(problem: bnb.SphereProblem, tol: float, claimed: float, trace, what: str):
    got = _trace_min(problem, trace, what)
    _req(got > tol, f"{what}: re-evaluated lower bound {got:.6g} does not exceed tol {tol:.3g}")
    _req(claimed <= got * (1 + 1e-9) + 1e-12,
         f"{what}: claimed lower bound {claimed!r} exceeds the re-evaluated {got!r}")


# -- per-certificate checks -------------------------------------------------------------


def check_ellipticity(op: Operator, c: dict, where: str, kind_expected: str | None = None):
    kind = c.get("kind")
    _req(kind in ("R", "C"), f"{where}: kind must be R or C")
    if kind_expected:
        _req(kind == kind_expected, f"{where}: kind {kind} in the {kind_expected} slot")
    verdict = c.get("verdict")
    tol = _float(c.get("tol"), f"{where}.tol")
    _req(tol > 0, f"{where}: tol must be positive")
    lb = _float(c.get("lower_bound"), f"{where}.lower_bound")
    ub = _float(c.get("upper_bound"), f"{where}.upper_bound")
    _req(lb <= ub * (1 + 1e-9) + 1e-12, f"{where}: lower bound exceeds upper bound")
    _int(c.get("budget"), f"{where}.budget", 1)
    _int(c.get("nodes"), f"{where}.nodes")
    problem = certify.ellipticity_problem(op, kind)
    _check_lipschitz(problem, c, where)
    _req(c.get("lipschitz_rule") == certify.LIPSCHITZ_RULE, f"{where}: unknown Lipschitz rule")
    if verdict == "elliptic":
        for k in ("witness_direction", "witness_kernel", "float_candidate"):
            _req(c.get(k) is None, f"{where}: an elliptic verdict carries no {k}")
        _check_lower_part(problem, tol, lb, c.get("trace"), where)
    elif verdict == "not_elliptic":
        _req(lb == 0 and ub == 0, f"{where}: a witnessed failure must report zero bounds")
        vec = _gauss_vec if kind == "C" else _rat_vec
        xi = vec(c.get("witness_direction"), f"{where}.witness_direction")
        v = vec(c.get("witness_kernel"), f"{where}.witness_kernel")
        _req(len(xi) == op.n and len(v) == op.dim_v, f"{where}: witness dimensions")
        _req(any(x != 0 for x in xi), f"{where}: witness direction is zero")
        _req(any(x != 0 for x in v), f"{where}: witness kernel vector is zero")
        sym = eval_symbol_complex(op, xi) if kind == "C" else eval_symbol(op, xi)
        img = la.matvec(sym.as_list(), v)
        _req(all(x == 0 for x in img), f"{where}: A(xi) v = {[str(x) for x in img]} is not zero")
    elif verdict != "indeterminate":
        raise _Fail(f"{where}: unknown verdict {verdict!r}")
    return verdict


def check_rank(op: Operator, c: dict, where: str):
    verdict = c.get("verdict")
    r = c.get("r")
    _req(isinstance(r, int) and not isinstance(r, bool) and 0 <= r <= min(op.dim_v, op.dim_w),
         f"{where}: invalid rank")
    upper, lower = c.get("upper_part"), c.get("lower_part")
    _req(isinstance(upper, dict) and isinstance(lower, dict), f"{where}: missing parts")
    seed = _int(c.get("seed"), f"{where}.seed")
    sampled = [eval_symbol(op, p).rank() for p in certify.generic_points(op.n, 5, seed)]
    _req(c.get("sampled_ranks") == sampled, f"{where}: sampled ranks {c.get('sampled_ranks')!r} != {sampled}")
    if verdict == "constant_rank":
        _req(c.get("witness_direction") is None and c.get("witness_rank") is None,
             f"{where}: a constant-rank verdict carries no witness")
        _req(upper.get("minor_size") == r + 1 and upper.get("all_vanish") is True, f"{where}: upper part")
        _req(upper.get("empty") is (r + 1 > min(op.dim_w, op.dim_v)), f"{where}: upper part emptiness flag")
        pm = certify.symbol_polynomial_matrix(op)
        checked = 0
        for size in range(max(sampled) + 1, r + 2):
            ok, cnt = certify._minor_sizes_vanish(pm, size)
            checked += cnt
            _req(ok == (size == r + 1), f"{where}: ({size})-minors do not match the claimed rank {r}")
        _req(upper.get("minors_checked") == checked,
             f"{where}: minors_checked {upper.get('minors_checked')!r} != {checked}")
        _req(lower.get("k") == r, f"{where}: lower part bounds the wrong singular value")
        if r > 0:
            tol = _float(lower.get("tol"), f"{where}.lower_part.tol")
            _req(tol > 0, f"{where}: tol must be positive")
            problem = bnb.SphereProblem.real_sphere(op.normalized_coeffs, r)
            _check_lipschitz(problem, lower, f"{where}.lower_part")
            _check_lower_part(problem, tol, _float(lower.get("lower_bound"), f"{where}.lower_bound"),
                              lower.get("trace"), where)
    elif verdict == "not_constant_rank":
        xi = _rat_vec(c.get("witness_direction"), f"{where}.witness_direction")
        _req(len(xi) == op.n and any(xi), f"{where}: witness direction")
        got = eval_symbol(op, xi).rank()
        _req(got == c.get("witness_rank") and got < r, f"{where}: witness rank {got} is not below r={r}")
        _req(any(eval_symbol(op, p).rank() == r for p in certify.generic_points(op.n, 5, 0))
             or r in (c.get("sampled_ranks") or []), f"{where}: rank r is never attained")
    elif verdict != "indeterminate":
        raise _Fail(f"{where}: unknown verdict {verdict!r}")
    return verdict


def check_mixing(op: Operator, c: dict, where: str):
    verdict = c.get("verdict")
    normals = [_rat_vec(v, f"{where}.normals") for v in c.get("normals") or []]
    for xi in normals:
        _req(len(xi) == op.n and any(xi), f"{where}: invalid normal")
    bases = c.get("s_bases")
    _req(isinstance(bases, list) and len(bases) == len(normals), f"{where}: one S basis per normal")
    inter = [list(b) for b in op.wa.vectors]
    for j, xi in enumerate(normals):
        s = [list(v) for v in spectrum.hyperplane_image(op, xi).vectors]
        _req(isinstance(bases[j], list), f"{where}.s_bases[{j}] is not a list")
        rec = [_rat_vec(v, f"{where}.s_bases[{j}]") for v in bases[j]]
        _req(all(len(v) == op.dim_w for v in rec) and _same_span(rec, s, op.dim_w),
             f"{where}.s_bases[{j}] does not span S for normal {j}")
        new = la.intersect([inter, s], op.dim_w) if inter else []
        _req(len(new) < len(inter), f"{where}: normal {j} does not shrink the intersection")
        inter = new
    rec_inter = [_rat_vec(v, f"{where}.intersection") for v in c.get("intersection") or []]
    _req(all(len(v) == op.dim_w for v in rec_inter) and _same_span(rec_inter, inter, op.dim_w),
         f"{where}: recorded intersection differs from the recomputed one")
    tried = _int(c.get("candidates_tried"), f"{where}.candidates_tried")
    dims = c.get("sampled_dims")
    _req(isinstance(dims, list) and len(dims) == tried >= len(normals), f"{where}: sampled dims / tries")
    if verdict == "holds":
        _req(c.get("certified") is True, f"{where}: positive mixing must be certified")
        _req(c.get("survivor") is None and c.get("symbolic") is None, f"{where}: positive mixing has no survivor")
        _req(not inter, f"{where}: W_A and the recorded S_xi have a common nonzero vector")
    elif verdict == "fails":
        if not c.get("certified"):
            return "indeterminate"
        w = _rat_vec(c.get("survivor"), f"{where}.survivor")
        _req(len(w) == op.dim_w and any(w), f"{where}: survivor must be a nonzero vector of W")
        _req(op.wa.contains(w), f"{where}: survivor is not in W_A")
        _req(bool(inter) and w == inter[0], f"{where}: survivor is not the first vector of the intersection")
        sym = c.get("symbolic")
        _req(isinstance(sym, dict), f"{where}: missing symbolic part")
        s = sym.get("s")
        _req(isinstance(s, int) and not isinstance(s, bool) and s >= 0, f"{where}: invalid s")
        _req(all(d == s for d in dims), f"{where}: sampled dims of S_nu are not all {s}")
        _req(sym.get("augmented_minor_size") == s + 1 and sym.get("augmented_minors_vanish") is True,
             f"{where}: symbolic part")
        bad, count = spectrum._first_nonzero_minor(spectrum._pencil_poly(op, w), s + 1)
        _req(bad is None, f"{where}: an augmented ({s + 1})-minor is nonzero, so w may leave S_nu")
        _req(sym.get("augmented_minors_checked") == count, f"{where}: augmented minor count")
        lower = sym.get("lower_part")
        _req(isinstance(lower, dict) and lower.get("k") == s, f"{where}: lower part")
        if s > 0:
            mats = spectrum.pencil_coefficients(op)
            fl = np.array([[[float(x) for x in row] for row in m] for m in mats])
            fl = np.einsum("ab,kbc->kac", op.gram_factor, fl)
            problem = bnb.SphereProblem.real_sphere(fl, s)
            _check_lipschitz(problem, lower, f"{where}.lower_part")
            tol = _float(lower.get("tol"), f"{where}.lower_part.tol")
            _req(tol > 0, f"{where}: tol must be positive")
            _check_lower_part(problem, tol, _float(lower.get("lower_bound"), f"{where}.lower_bound"),
                              lower.get("trace"), where)
    elif verdict != "indeterminate":
        raise _Fail(f"{where}: unknown verdict {verdict!r}")
    return verdict


def _triple(d, where: str) -> spectrum.RankOneTriple:
    _req(isinstance(d, dict), f"{where}: triple must be an object")
    return spectrum.RankOneTriple(tuple(_rat_vec(d.get("w_star"), f"{where}.w_star")),
                                  tuple(_rat_vec(d.get("xi"), f"{where}.xi")),
                                  tuple(_rat_vec(d.get("v_star"), f"{where}.v_star")))


def check_span(op: Operator, c: dict, where: str):
    triples = c.get("triples")
    _req(isinstance(triples, list), f"{where}: triples missing")
    ws = []
    for i, d in enumerate(triples):
        t = _triple(d, f"{where}.triples[{i}]")
        fails = t.failures(op)
        _req(not fails, f"{where}.triples[{i}]: " + "; ".join(fails))
        ws.append(list(t.w_star))
    dim = la.span_dim(ws) if ws else 0
    target = op.wa_dual.dim
    _req(c.get("span_dim") == dim, f"{where}: span_dim {c.get('span_dim')!r} != {dim}")
    _req(c.get("target_dim") == target, f"{where}: target_dim {c.get('target_dim')!r} != {target}")
    _req(c.get("complete") is (dim == target), f"{where}: completeness flag disagrees")
    return "holds" if dim == target else "incomplete"


def check_kernel(op: Operator, c: dict, where: str):
    d = c.get("degree_scanned")
    _req(isinstance(d, int) and not isinstance(d, bool) and 0 <= d <= 12, f"{where}: invalid degree")
    basis = []
    for i, p in enumerate(c.get("basis") or []):
        try:
            comps = [Poly.from_json(op.n, q) for q in p]
        except (ValueError, TypeError) as exc:
            raise _Fail(f"{where}.basis[{i}]: {exc}") from exc
        _req(len(comps) == op.dim_v, f"{where}.basis[{i}]: wrong number of components")
        img = certify.apply_to_polynomial(op, comps)
        _req(all(q.is_zero() for q in img), f"{where}.basis[{i}]: A p = {img} is not zero")
        basis.append(comps)
    ref = certify.kernel_polynomials(op, d)
    _req(c.get("dims") == ref.dims, f"{where}: dims {c.get('dims')!r} != recomputed {ref.dims}")
    stab = ref.stabilization_degree if ref.stabilized else "not stabilized by d_max"
    _req(c.get("stabilization_degree") == stab, f"{where}: stabilization degree disagrees")
    # the listed basis must be independent and of the right size
    mons = sorted({(j, e) for p in basis for j, q in enumerate(p) for e in q.terms})
    rows = [[p[j].terms.get(e, Fraction(0)) for j, e in mons] for p in basis]
    _req(len(basis) == ref.dims[-1] and (not rows or la.rank(rows) == len(rows)),
         f"{where}: basis is not a basis of the kernel")
    return ref.stabilized


def check_injectivity(op: Operator, c: dict, where: str):
    kern = [_rat_vec(v, f"{where}.kernel") for v in c.get("kernel") or []]
    ref = spectrum.g_injectivity_kernel(op)
    _req(la.span_dim(kern) == len(ref) if kern else not ref, f"{where}: recorded kernel has the wrong dimension")
    for v in kern:
        _req(op.wa_dual.contains(v) and la.is_zero_matrix(spectrum.pullback_tensor(op, v)),
             f"{where}: recorded kernel vector is not killed by g_A")
    _req(c.get("injective") is (not ref), f"{where}: injectivity flag disagrees")


def check_polarization(op: Operator, c: dict, where: str):
    try:
        wit = spectrum.PolarizationWitness.from_json(c)
    except Exception as exc:  # noqa: BLE001
        raise _Fail(f"{where}: {exc}") from exc
    fails = wit.failures(op)
    _req(not fails, f"{where}: " + "; ".join(fails))
    (xi, e), (eta, f) = wit.pair1, wit.pair2
    degenerate = spectrum._parallel(xi, eta) or spectrum._parallel(e, f)
    _req(bool(c.get("degenerate")) == degenerate, f"{where}: degenerate flag disagrees")


def check_triples(op: Operator, c: dict, where: str):
    triples = c.get("triples")
    _req(isinstance(triples, list), f"{where}: triples missing")
    for i, d in enumerate(triples):
        t = _triple(d, f"{where}.triples[{i}]")
        fails = t.failures(op)
        _req(not fails, f"{where}.triples[{i}]: " + "; ".join(fails))


def _dispatch(op: Operator, c, where: str, res: VerifyResult, slot: str | None = None):
    _req(isinstance(c, dict), f"{where}: certificate must be an object")
    kind = c.get("type")
    _unknown(c, kind, where, res)
    if kind == "ellipticity":
        want = {"r_elliptic": "R", "c_elliptic": "C"}.get(slot or "")
        return check_ellipticity(op, c, where, want)
    handlers = {"rank": check_rank, "mixing": check_mixing, "spectrum_span": check_span,
                "poly_kernel": check_kernel, "injectivity": check_injectivity,
                "polarization": check_polarization, "rank_one_triples": check_triples}
    _req(kind in handlers, f"{where}: unknown certificate type {kind!r}")
    return handlers[kind](op, c, where)


# -- documents ---------------------------------------------------------------------


def _operator(doc: dict) -> Operator:
    try:
        op = Operator.from_json(doc.get("operator"))
    except Exception as exc:  # noqa: BLE001
        raise _Fail(f"operator: {exc}") from exc
    _req(doc.get("operator_digest") == op.digest, "operator digest does not match the operator")
    return op


def _step(res: VerifyResult, label: str, fn, *args):
    try:
        out = fn(*args)
        res.checked.append(label)
        return out
    except _Fail as exc:
        res.errors.append(str(exc))
    except Exception as exc:  # noqa: BLE001 - malformed input must fail, not crash
        res.errors.append(f"{label}: malformed certificate ({type(exc).__name__}: {exc})")
    return None


def verify_document(doc) -> VerifyResult:
    """Re-validate a report or bundle; every failing check is listed."""
    res = VerifyResult()
    if not isinstance(doc, dict):
        res.errors.append("document must be a JSON object")
        return res
    kind = doc.get("type")
    if kind not in ("report", "bundle"):
        res.errors.append(f"unknown document type {kind!r}")
        return res
    _unknown(doc, kind, kind, res)
    if doc.get("format_version") != FORMAT_VERSION:
        res.errors.append(f"unsupported format version {doc.get('format_version')!r}")
    if doc.get(DIGEST) != content_digest(doc):
        res.errors.append("content digest mismatch: the document was modified")
    op = _step(res, "operator", _operator, doc)
    if op is None:
        return res
    if kind == "bundle":
        _step(res, "certificate", _dispatch, op, doc.get("certificate"), "certificate", res)
        return res

    certs = doc.get("certificates")
    if not isinstance(certs, dict):
        res.errors.append("certificates missing")
        return res
    for k in sorted(set(certs) - set(REPORT_SLOTS)):
        res.warnings.append(f"certificates: unknown entry {k!r} ignored")
    got = {}
    for slot in REPORT_SLOTS:
        if slot not in certs:
            res.errors.append(f"certificates: {slot} missing")
            continue
        got[slot] = _step(res, slot, _dispatch, op, certs[slot], slot, res, slot)
    _step(res, "parameters", _check_parameters, doc, op, certs)
    if res.errors:
        return res
    _cross_check(doc, got, certs, res)
    return res


def _check_parameters(doc: dict, op: Operator, certs: dict):
    """Recorded budgets must be the ones the certificates were produced with."""
    _req(doc.get("gram_assumed_identity") is (not op.gram_given), "gram_assumed_identity disagrees with the operator")
    p = doc.get("parameters")
    _req(isinstance(p, dict), "parameters missing")
    for slot in ("r_elliptic", "c_elliptic"):
        for k in ("tol", "budget", "accuracy"):
            _req(certs[slot].get(k) == p.get(k), f"{slot}.{k} differs from parameters.{k}")
    rank = certs["constant_rank"]
    _req(rank.get("seed") == p.get("seed"), "constant_rank.seed differs from parameters.seed")
    lower = rank.get("lower_part") or {}
    for k in ("tol", "budget"):
        _req(lower.get(k) == p.get(k), f"constant_rank.lower_part.{k} differs from parameters.{k}")
    _req(certs["poly_kernel"].get("degree_scanned") == p.get("d_max"), "poly_kernel degree differs from d_max")
    sym = certs["mixing"].get("symbolic") or {}
    if "lower_part" in sym:
        for k in ("tol", "budget"):
            _req(sym["lower_part"].get(k) == p.get(k), f"mixing lower part {k} differs from parameters.{k}")


def _cross_check(doc: dict, got: dict, certs: dict, res: VerifyResult):
    """Verdicts and consistency flags must be re-derivable from the certificates."""
    v = doc.get("verdicts")
    if not isinstance(v, dict):
        res.errors.append("verdicts missing")
        return
    kern = certs["poly_kernel"]
    derived = {
        "r_elliptic": got["r_elliptic"],
        "c_elliptic": got["c_elliptic"],
        "constant_rank": got["constant_rank"],
        "rank": certs["constant_rank"].get("r"),
        "mixing": got["mixing"],
        "rank_one": ("holds" if got["spectrum_span"] == "holds"
                     else "fails" if got["mixing"] == "fails" else "indeterminate"),
        "kernel_dims": kern.get("dims"),
        "kernel_stabilized": got["poly_kernel"],
        "stabilization_degree": kern.get("stabilization_degree") if got["poly_kernel"] else None,
        "g_injective": certs["injectivity"].get("injective"),
    }
    for k, want in derived.items():
        if v.get(k) != want:
            res.errors.append(f"verdicts.{k} = {v.get(k)!r} is not supported by the certificates ({want!r})")
    for k in sorted(set(v) - set(derived)):
        res.warnings.append(f"verdicts: unknown field {k!r} ignored")
    flags = consistency_flags(derived)
    recorded = [f for f in doc.get("consistency") or [] if f.get("name") in {g["name"] for g in flags}]
    if recorded != flags:
        res.errors.append("consistency flags differ from the ones derived from the certificates")
    bad = [f["name"] for f in flags if f["status"] == "violated"]
    if bad:
        res.errors.append("certificates are mutually inconsistent: " + ", ".join(bad))
