"""Command-line front end.

Every command prints one JSON report (schema ``tetra3d.report/1``) with
sorted keys.  Exit status: 0 when the report carries no failures, 1 when an
identity is violated, 2 for usage errors, 3 when a sum did not converge.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import warnings
from fractions import Fraction
from typing import Callable, Sequence

from . import cache
from .composite import Divergence, composite_block, random_domain_pair, verify_ybe_block
from .qpoly import EvalOverflow
from .rmatrix import (PoleDomain, SpinTuple6, q_poly_hypergeometric, q_poly_recursive, r_element,
                      verify_symmetry_P13, verify_symmetry_transpose)

SCHEMA = "tetra3d.report/1"
EXIT_OK, EXIT_VIOLATED, EXIT_USAGE, EXIT_CONVERGENCE = 0, 1, 2, 3

# commands whose results are floating point by construction
FLOAT_ONLY = {"verify ybe", "compare sl2", "compare sixvertex", "block", "partition",
              "transfer build", "transfer commute", "duality"}


class UsageError(ValueError):
    pass


def _ints(text: str, size: int | None = None) -> list[int]:
    try:
        vals = [int(x) for x in text.split(",")]
    except ValueError:
        raise UsageError("expected comma-separated integers, got %r" % text) from None
    if size is not None and len(vals) != size:
        raise UsageError("expected %d integers, got %d" % (size, len(vals)))
    return vals


def _pairs(text: str) -> list[tuple[float, float]]:
    """``"v1,w1;v2,w2"`` -> ``[(v1, w1), (v2, w2)]``."""
    out = []
    for chunk in text.split(";"):
        parts = chunk.split(",")
        if len(parts) != 2:
            raise UsageError("pairs look like 'v1,w1;v2,w2', got %r" % text)
        out.append((float(parts[0]), float(parts[1])))
    return out


# --- handlers: each returns (result, failure count) ----------------------------------


def cmd_element(a) -> tuple[dict, int]:
    try:
        idx = SpinTuple6.parse(a.idx)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    p = r_element(idx)
    out = {"idx": list(idx), "poly": p.to_json()}
    if a.q is not None:
        if a.mode == "exact":
            out["value_exact"] = str(p.evaluate_exact(Fraction(a.q)))
        else:
            out["value_at_q"] = p.evaluate(float(Fraction(a.q)))
    return out, 0


def cmd_qpoly(a) -> tuple[dict, int]:
    a1, a2, a3 = _ints(a.a, 3)
    fn = q_poly_recursive if a.form == "recursive" else q_poly_hypergeometric
    try:
        p = fn(a.n, a1, a2, a3)
    except PoleDomain as exc:
        raise UsageError("%s; the hypergeometric form needs n <= a1, use --form recursive" % exc) from None
    return {"n": a.n, "a": [a1, a2, a3], "form": a.form, "poly": p.to_json()}, 0


def cmd_verify_tetra(a) -> tuple[dict, int]:
    from .tetrahedron import all_externals, dress_from_spaces, sweep, verify_tetrahedron_dressed

    if a.dressed:
        if a.mode == "exact":
            raise UsageError("--dressed evaluates at a float q and random edge weights; use --mode float")
        rng = random.Random(a.seed)
        lam = [rng.uniform(0.5, 2.0) for _ in range(6)]
        mu = [rng.uniform(0.5, 2.0) for _ in range(6)]
        dress = dress_from_spaces(lam, mu)
        exts = list(all_externals(a.max_index)) if a.samples == 0 else None
        if exts is None:
            from .tetrahedron import _sample_nontrivial
            exts = list(_sample_nontrivial(rng, a.max_index, a.samples))
        failures = []
        worst = 0.0
        for ext in exts:
            rep = verify_tetrahedron_dressed(ext, dress, a.q)
            worst = max(worst, rep["rel_dev"])
            if not rep["equal"]:
                failures.append(rep)
        res = {"max_index": a.max_index, "dressed": True, "q": a.q, "seed": a.seed, "lam": lam,
               "mu": mu, "checked": len(exts), "max_rel_dev": worst, "failures": failures}
        return res, len(failures)
    res = sweep(a.max_index, exhaustive=a.samples == 0, samples=a.samples, seed=a.seed,
                workers=a.workers)
    return res, len(res["failures"])


def cmd_verify_map(a) -> tuple[dict, int]:
    from .oscillator import CutoffTooSmall, verify_oscillator_map

    try:
        res = verify_oscillator_map(a.cutoff, k3_power=a.k3_power, a2_sign=a.a2_sign)
    except CutoffTooSmall as exc:
        raise UsageError(str(exc)) from None
    return res, len(res["failures"])


def cmd_verify_symmetry(a) -> tuple[dict, int]:
    p13 = verify_symmetry_P13(a.maxn)
    tr = verify_symmetry_transpose(a.maxn)
    res = {"maxn": a.maxn, "P13": p13, "transpose": tr}
    return res, len(p13["violations"]) + len(tr["violations"])


def cmd_verify_ybe(a) -> tuple[dict, int]:
    rng = random.Random(a.seed)
    rows = []
    charges = range(a.max_charge + 1)
    for I in charges:
        for J in charges:
            for K in charges:
                for _ in range(a.trials):
                    w, wp = random_domain_pair(rng, I, J, K, a.q)
                    rows.append(verify_ybe_block(a.n, I, J, K, w, wp, a.q, tol=a.tol))
    bad = [r for r in rows if not r["passed"]]
    res = {"n": a.n, "max_charge": a.max_charge, "trials": a.trials, "q": a.q, "seed": a.seed,
           "checked": len(rows), "max_rel_dev": max(r["rel_dev"] for r in rows), "failures": bad}
    return res, len(bad)


def _random_wq(rng: random.Random, top_charge: int) -> tuple[float, float]:
    q = rng.uniform(0.3, 0.8)
    w = 0.8 * q ** top_charge * rng.uniform(0.2, 0.95)
    return w, q


def cmd_compare_sl2(a) -> tuple[dict, int]:
    from .sl2 import compare_composite_sl2

    rng = random.Random(a.seed)
    rows = []
    for _ in range(a.trials):
        w, q = _random_wq(rng, 2 * a.max_rep)
        if a.q is not None:
            q = a.q
            w = 0.8 * q ** (2 * a.max_rep) * rng.uniform(0.2, 0.95)
        for I in range(1, a.max_rep + 1):
            for J in range(1, a.max_rep + 1):
                rows.append(compare_composite_sl2(I, J, w, q, tol=a.tol))
    bad = [r for r in rows if not r["passed"]]
    res = {"max_rep": a.max_rep, "trials": a.trials, "seed": a.seed, "blocks": rows,
           "max_rel_dev": max(r["max_rel_dev"] for r in rows),
           "gauge_dev": max(r["gauge_dev"] for r in rows), "failures": len(bad)}
    return res, len(bad)


def cmd_compare_sixvertex(a) -> tuple[dict, int]:
    from .sl2 import compare_composite_six_vertex

    rng = random.Random(a.seed)
    rows = [compare_composite_six_vertex(*_random_wq(rng, 2), tol=a.tol) for _ in range(a.trials)]
    bad = [r for r in rows if not r["passed"]]
    res = {"trials": a.trials, "seed": a.seed, "rows": rows,
           "max_rel_dev": max(r["max_rel_dev"] for r in rows),
           "gauge_dev": max(r["gauge_dev"] for r in rows), "failures": len(bad)}
    return res, len(bad)


def cmd_block(a) -> tuple[dict, int]:
    from .composite import convergence_limit

    blk = composite_block(a.n, a.charge_i, a.charge_j, a.w, a.q)
    res = blk.to_json()
    res["convergence_limit"] = convergence_limit(a.charge_i, a.charge_j, a.q)
    return res, 0


def _spec(a, **extra):
    from .lattice import LatticeSpec

    try:
        return LatticeSpec(L=getattr(a, "L", 1), M=a.M, N=a.N, q=a.q, u=getattr(a, "u", 0.5), v=a.v,
                           w=a.w, mu=a.mu, tol=getattr(a, "tol", 1e-10), **extra)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_partition(a) -> tuple[dict, int]:
    from .lattice import partition_full, partition_restricted

    spec = _spec(a)
    if a.full:
        print("warning: the full sum over sectors may need an extra sector-dependent damping "
              "factor to converge; the reported tail is a heuristic", file=sys.stderr)
        res = partition_full(spec, a.max_sector, cap=a.cutoff).to_json()
        return {"params": vars_of(spec), **res}, 0
    if a.method == "enumeration" and a.cutoff is None:
        raise UsageError("--method enumeration needs --cutoff (a spin cap)")
    main = partition_restricted(spec, a.sector, method=a.method, cap=a.cutoff, boundary=a.boundary)
    res = main.to_json()
    if a.cutoff is not None:
        res["cutoff_series"] = [
            {"cutoff": c, "value": partition_restricted(spec, a.sector, method=a.method, cap=c,
                                                        boundary=a.boundary).value}
            for c in range(a.cutoff + 1)]
    res.update({"sector": a.sector, "boundary": a.boundary, "params": vars_of(spec)})
    return res, 0


def vars_of(spec) -> dict:
    return {f: getattr(spec, f) for f in spec.__dataclass_fields__}


def cmd_transfer_build(a) -> tuple[dict, int]:
    from .lattice import spectrum, spectrum_csv, transfer_matrix

    spec = _spec(a)
    tm = transfer_matrix(spec, a.sector, jk_cap=a.cutoff)
    res = tm.to_json()
    if a.spectrum_csv:
        sp = spectrum(spec, a.sector, jk_cap=a.cutoff)
        with open(a.spectrum_csv, "w") as fh:
            fh.write(spectrum_csv([sp]))
        res["spectrum_csv"] = a.spectrum_csv
    res["params"] = vars_of(spec)
    return res, 0


def cmd_transfer_commute(a) -> tuple[dict, int]:
    from .lattice import verify_commutativity

    pairs = _pairs(a.pairs)
    if len(pairs) != 2:
        raise UsageError("--pairs needs exactly two (v, w) pairs")
    res = verify_commutativity(_spec(a), a.sector, pairs, cutoffs=_ints(a.cutoffs))
    return res, 0 if res["passed"] else 1


def cmd_duality(a) -> tuple[dict, int]:
    from .lattice import verify_rank_size_duality

    res = verify_rank_size_duality(_spec(a), max_charge=a.max_charge, max_sector=a.max_sector, tol=a.tol)
    return res, 0 if res["passed"] else 1


# --- parser ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=("exact", "float"), default="float")
    p.add_argument("--output", "-o", help="write the JSON report here instead of stdout")


def _lattice_args(p: argparse.ArgumentParser, sizes: Sequence[str] = ("M", "N")) -> None:
    for s in sizes:
        p.add_argument("--" + s, dest=s, type=int, default=2)
    p.add_argument("--q", type=float, default=0.5)
    p.add_argument("--v", type=float, default=0.3)
    p.add_argument("--w", type=float, default=0.3)
    p.add_argument("--mu", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tetra3d", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("element", help="one R-matrix element as a Laurent polynomial")
    p.add_argument("--idx", required=True, help="n1,n2,n3,n1',n2',n3'")
    p.add_argument("--q", help="also evaluate at q (a fraction such as 1/2 in exact mode)")
    _common(p)
    p.set_defaults(func=cmd_element, name="element")

    p = sub.add_parser("qpoly", help="Q-polynomial Q_n(a1,a2,a3)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--a", required=True, help="a1,a2,a3")
    p.add_argument("--form", choices=("recursive", "hypergeometric"), default="recursive")
    _common(p)
    p.set_defaults(func=cmd_qpoly, name="qpoly")

    verify = sub.add_parser("verify", help="identity checks").add_subparsers(dest="what", required=True)
    p = verify.add_parser("tetra")
    p.add_argument("--max-index", type=int, required=True)
    p.add_argument("--samples", type=int, default=0, help="random tuples instead of the full sweep")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dressed", action="store_true")
    p.add_argument("--q", type=float, default=0.5)
    p.add_argument("--workers", type=int, default=1)
    _common(p)
    p.set_defaults(func=cmd_verify_tetra, name="verify tetra")

    p = verify.add_parser("map")
    p.add_argument("--cutoff", type=int, default=4)
    p.add_argument("--k3-power", type=int, default=2)
    p.add_argument("--a2-sign", type=int, choices=(-1, 1), default=-1)
    _common(p)
    p.set_defaults(func=cmd_verify_map, name="verify map")

    p = verify.add_parser("symmetry")
    p.add_argument("--maxn", type=int, default=2)
    _common(p)
    p.set_defaults(func=cmd_verify_symmetry, name="verify symmetry")

    p = verify.add_parser("ybe")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--max-charge", type=int, default=1)
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--q", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    _common(p)
    p.set_defaults(func=cmd_verify_ybe, name="verify ybe")

    compare = sub.add_parser("compare", help="composite blocks versus 2D R-matrices")
    compare = compare.add_subparsers(dest="what", required=True)
    p = compare.add_parser("sl2")
    p.add_argument("--max-rep", type=int, default=2)
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--q", type=float, default=None, help="fix q instead of drawing it")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-8)
    _common(p)
    p.set_defaults(func=cmd_compare_sl2, name="compare sl2")
    p = compare.add_parser("sixvertex")
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-8)
    _common(p)
    p.set_defaults(func=cmd_compare_sixvertex, name="compare sixvertex")

    p = sub.add_parser("block", help="dense composite block S(w)")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--charge-i", type=int, default=1)
    p.add_argument("--charge-j", type=int, default=1)
    p.add_argument("--w", type=float, default=0.1)
    p.add_argument("--q", type=float, default=0.5)
    _common(p)
    p.set_defaults(func=cmd_block, name="block")

    p = sub.add_parser("partition", help="restricted or full partition function")
    _lattice_args(p, ("L", "M", "N"))
    p.add_argument("--u", type=float, default=0.5)
    p.add_argument("--cutoff", type=int, default=None, help="cap on every spin")
    p.add_argument("--sector", type=int, default=1)
    p.add_argument("--full", action="store_true")
    p.add_argument("--max-sector", type=int, default=2)
    p.add_argument("--method", choices=("transfer", "enumeration"), default="transfer")
    p.add_argument("--boundary", choices=("trace", "psi"), default="trace")
    p.add_argument("--tol", type=float, default=1e-10)
    _common(p)
    p.set_defaults(func=cmd_partition, name="partition")

    transfer = sub.add_parser("transfer", help="layer-to-layer transfer matrices")
    transfer = transfer.add_subparsers(dest="what", required=True)
    p = transfer.add_parser("build")
    _lattice_args(p)
    p.add_argument("--sector", type=int, default=1)
    p.add_argument("--cutoff", type=int, default=None, help="cap on every horizontal spin")
    p.add_argument("--spectrum-csv", help="write eigenvalues to this CSV file")
    p.add_argument("--tol", type=float, default=1e-10)
    _common(p)
    p.set_defaults(func=cmd_transfer_build, name="transfer build")
    p = transfer.add_parser("commute")
    _lattice_args(p)
    p.add_argument("--sector", type=int, default=1)
    p.add_argument("--pairs", default="0.3,0.2;0.2,0.4", help="'v1,w1;v2,w2'")
    p.add_argument("--cutoffs", default="1,2,3")
    _common(p)
    p.set_defaults(func=cmd_transfer_commute, name="transfer commute")

    p = sub.add_parser("duality", help="rank-size duality of graded transfer-matrix blocks")
    _lattice_args(p)
    p.add_argument("--max-charge", type=int, default=1)
    p.add_argument("--max-sector", type=int, default=1)
    p.add_argument("--tol", type=float, default=1e-6)
    _common(p)
    p.set_defaults(func=cmd_duality, name="duality")
    return ap


def _params(a: argparse.Namespace) -> dict:
    skip = {"func", "name", "output", "command", "what"}
    return {k: v for k, v in sorted(vars(a).items()) if k not in skip}


def render(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=1, default=_jsonable) + "\n"


def _jsonable(x):
    if hasattr(x, "tolist"):
        return x.tolist()
    if hasattr(x, "item"):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError("cannot serialise %r" % type(x))


def run(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    handler: Callable = a.func
    report = {"schema": SCHEMA, "command": a.name, "params": _params(a)}
    status = EXIT_OK
    cache.load()
    try:
        if a.mode == "exact" and a.name in FLOAT_ONLY:
            raise UsageError("'%s' works with floating-point series and matrices; rerun with --mode float"
                             % a.name)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            result, nfail = handler(a)
        report["result"] = result
        report["failures"] = nfail
        report["warnings"] = sorted({str(w.message) for w in caught})
        status = EXIT_VIOLATED if nfail else EXIT_OK
        if any(w.category.__name__ == "TruncationWarning" for w in caught) and not nfail:
            status = EXIT_CONVERGENCE
    except UsageError as exc:
        print("tetra3d %s: error: %s" % (a.name, exc), file=sys.stderr)
        return EXIT_USAGE
    except (Divergence, EvalOverflow) as exc:
        report["error"] = {"kind": "convergence", "message": str(exc)}
        status = EXIT_CONVERGENCE
    cache.save()
    text = render(report)
    if a.output:
        with open(a.output, "w") as fh:
            fh.write(text)
    else:
        out.write(text)
    return status


def main(argv: Sequence[str] | None = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
