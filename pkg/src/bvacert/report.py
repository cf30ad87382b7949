"""End-to-end classification of an operator into a self-contained, hashed report."""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import certify, spectrum
from .exact import format_rational
from .symbol import Operator

FORMAT_VERSION = "1.0"
VOLATILE = "volatile"
DIGEST = "digest"


class InconsistencyError(RuntimeError):
    """Two determinate verdicts contradict each other: a soundness bug."""

    def __init__(self, message: str, report: "Report | None" = None):
        super().__init__(message)
        self.report = report


@dataclass
class Budgets:
    tol: float = certify.DEFAULT_TOL
    budget: int = certify.DEFAULT_BUDGET
    seed: int = 0
    d_max: int = 4
    accuracy: float | None = certify.DEFAULT_ACCURACY

    def to_json(self) -> dict:
        return {"tol": self.tol, "budget": self.budget, "seed": self.seed, "d_max": self.d_max,
                "accuracy": self.accuracy}


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def content_digest(doc: dict) -> str:
    """sha256 over the canonical JSON with the volatile block and the digest removed."""
    body = {k: v for k, v in doc.items() if k not in (VOLATILE, DIGEST)}
    return hashlib.sha256(canonical_json(body).encode()).hexdigest()


def seal(doc: dict, timings: dict | None = None) -> dict:
    """Attach the digest and a volatile block (timestamp and timings)."""
    doc = dict(doc)
    doc.pop(DIGEST, None)
    doc.pop(VOLATILE, None)
    doc[DIGEST] = content_digest(doc)
    doc[VOLATILE] = {"timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
                     "timings": timings or {}}
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


# -- consistency -----------------------------------------------------------------


def consistency_flags(verdicts: dict) -> list[dict]:
    """Cross-implications between verdicts, each ``ok``, ``violated`` or ``not_applicable``.

    * C-elliptic implies R-elliptic.
    * R-elliptic together with mixing implies C-elliptic.
    * Mixing and the rank-one property agree.
    * A kernel that stabilizes is finite-dimensional, which forces C-ellipticity.
    """
    r, c = verdicts["r_elliptic"], verdicts["c_elliptic"]
    mix, r1 = verdicts["mixing"], verdicts["rank_one"]
    stab = verdicts["kernel_stabilized"]

    def flag(name, applicable, holds, note):
        status = "not_applicable" if not applicable else ("ok" if holds else "violated")
        return {"name": name, "status": status, "statement": note}

    det_ell = ("elliptic", "not_elliptic")
    det_mix = ("holds", "fails")
    return [
        flag("c_elliptic_implies_r_elliptic", c in det_ell and r in det_ell,
             not (c == "elliptic" and r == "not_elliptic"), "C-elliptic => R-elliptic"),
        flag("r_elliptic_and_mixing_implies_c_elliptic", r in det_ell and c in det_ell and mix in det_mix,
             not (r == "elliptic" and mix == "holds" and c == "not_elliptic"),
             "R-elliptic and mixing => C-elliptic"),
        flag("mixing_iff_rank_one", mix in det_mix and r1 in det_mix, mix == r1,
             "mixing <=> rank-one property"),
        flag("stabilized_kernel_implies_c_elliptic", c in det_ell and stab,
             c == "elliptic", "finite polynomial kernel => C-elliptic"),
    ]


def violated(flags: list[dict]) -> list[str]:
    return [f["name"] for f in flags if f["status"] == "violated"]


# -- classification --------------------------------------------------------------


@dataclass
class Report:
    operator: Operator
    budgets: Budgets
    certificates: dict
    verdicts: dict
    consistency: list[dict]
    timings: dict = field(default_factory=dict)

    @property
    def inconsistent(self) -> list[str]:
        return violated(self.consistency)

    @property
    def indeterminate(self) -> list[str]:
        return [k for k, v in self.verdicts.items() if v == "indeterminate"]

    def body(self) -> dict:
        return {
            "type": "report",
            "format_version": FORMAT_VERSION,
            "operator": self.operator.to_json(),
            "operator_digest": self.operator.digest,
            "gram_assumed_identity": not self.operator.gram_given,
            "parameters": self.budgets.to_json(),
            "certificates": self.certificates,
            "verdicts": self.verdicts,
            "consistency": self.consistency,
        }

    def to_json(self) -> dict:
        return seal(self.body(), self.timings)


def _timed(fn, *args, **kw):
    t = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t


def classify(op: Operator, budgets: Budgets | None = None, *, jobs: int = 4, strict: bool = True) -> Report:
    """Run every certified check on ``op`` and cross-validate the verdicts.

    Independent checks run in a thread pool; the report is assembled in a
    fixed order, so the output does not depend on scheduling.
    """
    b = budgets or Budgets()
    tasks = {
        "r_elliptic": (certify.check_r_elliptic, (op, b.tol, b.budget), {"accuracy": b.accuracy}),
        "c_elliptic": (certify.check_c_elliptic, (op, b.tol, b.budget), {"accuracy": b.accuracy}),
        "constant_rank": (certify.check_constant_rank, (op, b.tol, b.budget, b.seed), {}),
        "rank_one": (spectrum.check_rank_one_property, (op, b.seed), {"tol": b.tol, "budget": b.budget}),
        "poly_kernel": (certify.kernel_polynomials, (op, b.d_max), {}),
        "injectivity": (spectrum.g_injectivity_kernel, (op,), {}),
    }
    results, timings = {}, {}
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        futures = {k: pool.submit(_timed, fn, *args, **kw) for k, (fn, args, kw) in tasks.items()}
        for k in tasks:
            results[k], timings[k] = futures[k].result()

    r_cert, c_cert = results["r_elliptic"], results["c_elliptic"]
    rank = results["constant_rank"]
    r1 = results["rank_one"]
    kern = results["poly_kernel"]
    inj = results["injectivity"]
    certificates = {
        "r_elliptic": r_cert.to_json(),
        "c_elliptic": c_cert.to_json(),
        "constant_rank": rank.to_json(),
        "mixing": r1.mixing.to_json(),
        "spectrum_span": r1.span.to_json(),
        "poly_kernel": kern.to_json(),
        "injectivity": {"type": "injectivity", "kernel": [[format_rational(x) for x in v] for v in inj],
                        "injective": not inj},
    }
    verdicts = {
        "r_elliptic": r_cert.verdict,
        "c_elliptic": c_cert.verdict,
        "constant_rank": rank.verdict,
        "rank": rank.r,
        "mixing": r1.mixing.verdict if (r1.mixing.verdict != "fails" or r1.mixing.certified) else "indeterminate",
        "rank_one": r1.verdict if r1.certified else "indeterminate",
        "kernel_dims": kern.dims,
        "kernel_stabilized": kern.stabilized,
        "stabilization_degree": kern.stabilization_degree,
        "g_injective": not inj,
    }
    flags = consistency_flags(verdicts)
    if not r1.consistent:
        flags.append({"name": "span_vs_mixing_certificates", "status": "violated",
                      "statement": "spectrum span and mixing certificate disagree"})
    rep = Report(op, b, certificates, verdicts, flags, {k: round(v, 6) for k, v in timings.items()})
    if strict and rep.inconsistent:
        raise InconsistencyError("inconsistent verdicts: " + ", ".join(rep.inconsistent), rep)
    return rep


def expected_mismatches(rep: Report, expected) -> list[str]:
    """Compare a report with a catalog entry's expected verdicts."""
    v = rep.verdicts
    out = []
    pairs = [("r_elliptic", expected.r_elliptic), ("c_elliptic", expected.c_elliptic),
             ("mixing", expected.mixing), ("rank_one", expected.rank_one)]
    for key, want in pairs:
        if v[key] != want:
            out.append(f"{key}: got {v[key]}, expected {want}")
    if expected.constant_rank is not None and (v["constant_rank"] != "constant_rank" or v["rank"] != expected.constant_rank):
        out.append(f"constant rank: got {v['constant_rank']} r={v['rank']}, expected r={expected.constant_rank}")
    if expected.kernel_dims is not None and tuple(v["kernel_dims"]) != tuple(expected.kernel_dims):
        out.append(f"kernel dims: got {v['kernel_dims']}, expected {list(expected.kernel_dims)}")
    if v["stabilization_degree"] != expected.stabilization_degree:
        out.append(f"stabilization degree: got {v['stabilization_degree']}, expected {expected.stabilization_degree}")
    return out


def save_report(rep: Report | dict, path) -> None:
    doc = rep.to_json() if isinstance(rep, Report) else rep
    Path(path).write_text(dumps(doc))


def bundle(op: Operator, certificate: dict, *, parameters: dict | None = None, timings: dict | None = None) -> dict:
    """A single certificate packaged with its operator so it can be verified alone."""
    doc = {"type": "bundle", "format_version": FORMAT_VERSION, "operator": op.to_json(),
           "operator_digest": op.digest, "certificate": certificate}
    if parameters:
        doc["parameters"] = parameters
    return seal(doc, timings)
