"""``cartan`` command line: every subcommand prints one JSON report.

Exit status: 0 when the verdict is pass, 1 when a check fails, 2 for bad
input (with an error object on stdout and no report).
"""
from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import _kernels
from . import hardy as H
from .acceptance import RUNNERS, det_identity_residuals, disc_poisson_oracle
from .domain import DomainSpec, MatrixPoint
from .io import InputError, dumps, inputs_digest, read_json_arg
from .operators import (
    CommutingTuple,
    cartan_isometry_certificate,
    joint_eigenvalues,
    omega_spectral_radius,
    spectral_group_dimension,
    t_toeplitz_solve,
)
from .strata import boundary_scan, classify_point, classify_product
from .tripledet import fk_residual_rank1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _domain_args(p, r_default=1, b_default=0):
    p.add_argument("--r", type=int, default=r_default)
    p.add_argument("--b", type=int, default=b_default)


def _mc_args(p):
    p.add_argument("--mode", choices=("exact", "mc"), default="exact")
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cartan", description=__doc__.splitlines()[0])
    parser.add_argument("--out", help="write the report here instead of stdout")
    parser.add_argument("--timing", action="store_true", help="include wall time in the report")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="classify matrix points (several points: product domain)")
    p.add_argument("--point", action="append", required=True, help="MatrixPoint JSON or file")
    p.add_argument("--tol", type=float, default=1e-8)

    p = sub.add_parser("boundary-scan", help="planted-point agreement of the two classification routes")
    _domain_args(p, 2, 0)
    p.add_argument("--n", type=int, default=500, help="points per class")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-8)

    p = sub.add_parser("det-check", help="determinant identities on random pairs")
    _domain_args(p, 2, 0)
    p.add_argument("--pairs", type=int, default=1000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-10)

    for name in ("isometry-verify", "t-toeplitz"):
        p = sub.add_parser(name)
        p.add_argument("--tuple", required=True, help="tuple JSON or file")
        p.add_argument("--tol", type=float, default=1e-10)
        p.add_argument("--seed", type=int, default=0, help="seed of the generic combination")

    p = sub.add_parser("hardy-gram", help="Gram matrix of monomials on the Shilov boundary")
    _domain_args(p)
    p.add_argument("--degree", type=int, default=2)
    _mc_args(p)
    p.add_argument("--measure", choices=("haar", "phi1"), default="haar")
    p.add_argument("--tol", type=float, default=1e-12)

    for name in ("toeplitz-check", "dual-check"):
        p = sub.add_parser(name)
        _domain_args(p)
        p.add_argument("--degree", type=int, default=4)
        _mc_args(p)
        p.add_argument("--symbol", required=True, help="symbol JSON or file")
        p.add_argument("--tol", type=float, default=1e-8)
        if name == "toeplitz-check":
            p.add_argument("--ell", type=int, action="append")

    p = sub.add_parser("berezin-scan")
    _domain_args(p)
    p.add_argument("--degree", type=int, default=200)
    _mc_args(p)
    what = p.add_mutually_exclusive_group(required=True)
    what.add_argument("--symbol")
    what.add_argument("--finite-rank", type=int, help="projection onto the first k basis vectors")
    p.add_argument("--xi", help="Shilov point JSON (default [I | 0])")
    p.add_argument("--t", default="0.9,0.99,0.999")
    p.add_argument("--oracle-tol", type=float, default=0.1)

    p = sub.add_parser("fk-check", help="rank-one Faraut-Koranyi series residuals")
    p.add_argument("--b", type=int, default=2)
    p.add_argument("--nu", type=float, action="append")
    p.add_argument("--terms", type=int, default=40)
    p.add_argument("--pairs", type=int, default=200)
    p.add_argument("--max-pairing", type=float, default=0.5)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-8)

    p = sub.add_parser("selftest", help="run the acceptance suite")
    p.add_argument("--only", type=int, action="append", help="criterion number (repeatable)")
    return parser


# ---------------------------------------------------------------------------

def _domain(args) -> DomainSpec:
    return DomainSpec(args.r, args.b)


def _oracle(args, dom, max_degree):
    if args.mode == "mc":
        if args.seed is None:
            raise InputError("--seed is required in mc mode")
        return H.make_oracle(dom, H.MC, max_degree, args.samples, args.seed,
                             getattr(args, "measure", H.HAAR))
    if getattr(args, "measure", H.HAAR) != H.HAAR:
        raise InputError("--measure phi1 needs --mode mc")
    if dom.r == 1:
        return H.ExactRank1Moments(dom)
    if max_degree <= 1:
        return H.LowDegreeMoments(dom)
    raise InputError("exact mode at rank > 1 only covers degree <= 1; use --mode mc")


def _mc_meta(oracle):
    if getattr(oracle, "method", None) != H.MC:
        return None
    return {"method": H.MC, "n": oracle.n, "seed": oracle.seed, "measure": oracle.measure,
            "stderr_max": oracle.stderr_max}


def _symbol(args, blobs, dom):
    obj, raw = read_json_arg(args.symbol)
    blobs.append(raw)
    sym = H.SymbolPoly.from_json(obj)
    if sym.nvars != dom.d:
        raise InputError(f"symbol has {sym.nvars} variables, domain needs {dom.d}")
    return sym


def cmd_classify(args, blobs):
    points = []
    for item in args.point:
        obj, raw = read_json_arg(item)
        blobs.append(raw)
        points.append(MatrixPoint.from_json(obj))
    doms = [p.domain() for p in points]
    if len(points) == 1:
        pc = classify_point(points[0], doms[0], args.tol)
        payload = pc.to_json()
        payload["consistent"] = pc.consistent
        ok = pc.consistent
    else:
        payload = classify_product([p.matrix for p in points], doms, args.tol)
        ok = payload["consistent"]
    dom = doms[0].to_dict() if len(doms) == 1 else [d.to_dict() for d in doms]
    return dom, {"classification": args.tol}, payload, None, ok


def cmd_boundary_scan(args, blobs):
    dom = _domain(args)
    rep = boundary_scan(dom, args.n, args.seed, args.tol)
    return dom.to_dict(), {"classification": args.tol}, rep, None, rep["agreement"] == 1.0


def cmd_det_check(args, blobs):
    dom = _domain(args)
    res = det_identity_residuals(dom, args.pairs, np.random.default_rng(args.seed))
    return dom.to_dict(), {"identity": args.tol}, {"max_residuals": res, "pairs": args.pairs}, None, \
        max(res.values()) <= args.tol


def _load_tuple(args, blobs):
    obj, raw = read_json_arg(args.tuple)
    blobs.append(raw)
    return CommutingTuple.from_json(obj)


def cmd_isometry_verify(args, blobs):
    T = _load_tuple(args, blobs)
    cert = cartan_isometry_certificate(T, args.tol)
    payload = {"certificate": cert.to_json(), "n": T.n}
    if cert.passed:
        payload["omega_spectral_radius"] = omega_spectral_radius(T, args.seed)
    return T.domain.to_dict(), {"certificate": args.tol}, payload, None, cert.passed


def cmd_t_toeplitz(args, blobs):
    T = _load_tuple(args, blobs)
    cert = cartan_isometry_certificate(T, args.tol)
    if not cert.passed:
        return T.domain.to_dict(), {"certificate": args.tol}, {"certificate": cert.to_json()}, None, False
    basis = t_toeplitz_solve(T, args.tol)
    expected = spectral_group_dimension(joint_eigenvalues(T, args.seed), T.domain.r)
    worst = max((float(np.linalg.norm(sum(t.conj().T @ X @ t for t in T.flat()) - T.domain.r * X, 2))
                 for X in basis), default=0.0)
    payload = {"dimension": len(basis), "expected_dimension": expected, "max_equation_residual": worst,
               "certificate": cert.to_json()}
    return T.domain.to_dict(), {"certificate": args.tol}, payload, None, len(basis) == expected and worst <= args.tol


def cmd_hardy_gram(args, blobs):
    dom = _domain(args)
    orc = _oracle(args, dom, args.degree + 1 if (args.mode == "mc" or dom.r == 1) else args.degree)
    basis = H.MonomialBasis(dom.d, args.degree)
    gram = H.gram_matrix(basis, dom, oracle=orc)
    trunc = H.orthonormalize(gram, basis, dom)
    covered = orc.method != H.EXACT_LOW
    trace_gap = H.trace_identity_gap(orc, dom.d, args.degree) if covered else None
    const = float(gram.matrix[0, 0].real)
    payload = {
        "basis_size": len(basis), "retained_dimension": trunc.dim,
        "orthonormality_defect": trunc.orthonormality_defect(),
        "const_norm": const, "trace_identity_gap": trace_gap,
        "gram": {"re": gram.matrix.real, "im": gram.matrix.imag},
    }
    ok = abs(const - 1.0) <= args.tol and (trace_gap is None or trace_gap <= args.tol)
    if args.measure == H.HAAR:
        val, se = H.phi1_norm_sq(dom, orc)
        payload["phi1_norm_sq"] = {"value": val, "stderr": se, "expected": 1.0 / dom.d}
        ok &= abs(val - 1.0 / dom.d) <= (4 * se if orc.method == H.MC else 1e-12)
    return dom.to_dict(), {"identity": args.tol, "bands": 4.0}, payload, _mc_meta(orc), ok


def cmd_toeplitz_check(args, blobs):
    dom = _domain(args)
    sym = _symbol(args, blobs, dom)
    deg = max(sym.analytic_degree, sym.conj_degree, 1)
    orc = _oracle(args, dom, args.degree + deg)
    trunc = H.hardy_truncation(dom, args.degree, oracle=orc)
    X = H.toeplitz_matrix(sym, trunc)
    shifts = H.szego_shift_compressions(trunc)
    ells = args.ell or list(range(1, min(dom.r, args.degree) + 1))
    tol = trunc.residual_tolerance(args.tol)
    res = {str(l): H.brown_halmos_residual(X, trunc, l, shifts) for l in ells}
    payload = {"brown_halmos": res, "dimension": trunc.dim}
    return dom.to_dict(), {"residual": tol}, payload, _mc_meta(orc), max(res.values()) <= tol


def cmd_dual_check(args, blobs):
    dom = _domain(args)
    sym = _symbol(args, blobs, dom)
    deg = max(sym.analytic_degree, sym.conj_degree, 1)
    orc = _oracle(args, dom, 2 * args.degree + deg)
    L = H.l2_truncation(dom, args.degree, oracle=orc)
    tol = L.residual_tolerance(args.tol)
    blocks = H.l2_block_decomposition(sym, L)
    res = H.dual_brown_halmos_residual(blocks.dual, L)
    payload = {"dual_brown_halmos": res.residual, "dual_isometry": res.isometry_residuals,
               "safe_dimension": res.safe_dim, "hardy_dimension": len(L.hardy),
               "complement_dimension": len(L.complement)}
    ok = res.residual <= tol and max(res.isometry_residuals) <= tol
    if sym.is_analytic:
        payload["hankel_safe_norm"] = H.hankel_safe_norm(sym, L)
        ok &= payload["hankel_safe_norm"] <= tol
    return dom.to_dict(), {"residual": tol}, payload, _mc_meta(orc), ok


def cmd_berezin_scan(args, blobs):
    dom = _domain(args)
    sym = _symbol(args, blobs, dom) if args.symbol else None
    deg = max(sym.analytic_degree, sym.conj_degree, 1) if sym else 1
    orc = _oracle(args, dom, args.degree + deg)
    trunc = H.hardy_truncation(dom, args.degree, oracle=orc)
    if sym is not None:
        X = H.toeplitz_matrix(sym, trunc)
    else:
        if not 1 <= args.finite_rank <= trunc.dim:
            raise InputError("--finite-rank out of range")
        X = np.diag((np.arange(trunc.dim) < args.finite_rank).astype(float))
    if args.xi:
        obj, raw = read_json_arg(args.xi)
        blobs.append(raw)
        xi = MatrixPoint.from_json(obj).matrix
        if xi.shape != dom.shape:
            raise InputError("xi shape does not match the domain")
    else:
        xi = np.eye(dom.r, dom.cols)
    try:
        ts = [float(t) for t in args.t.split(",")]
    except ValueError as exc:
        raise InputError(f"bad --t list: {exc}") from exc
    scan = H.berezin_scan(X, [t * xi for t in ts], trunc)
    payload = {"t": ts, "values": [v["value"] for v in scan], "kernel_norms": [v["kernel_norm"] for v in scan]}
    ok = all(abs(v["kernel_norm"] - 1.0) <= 1e-12 for v in scan)
    if sym is not None and dom.d == 1 and dom.r == 1:
        oracle = [disc_poisson_oracle(sym, t * complex(xi[0, 0])) for t in ts]
        payload["poisson_oracle"] = oracle
        ok &= all(abs(v["value"] - o) <= args.oracle_tol for v, o in zip(scan, oracle))
    return dom.to_dict(), {"oracle": args.oracle_tol}, payload, _mc_meta(orc), ok


def cmd_fk_check(args, blobs):
    dom = DomainSpec(1, args.b)
    nus = args.nu or [0.5, 1.0, 3.0, float(dom.d)]
    rng = np.random.default_rng(args.seed)
    out = {}
    for nu in nus:
        top = 0.0
        for _ in range(args.pairs):
            z = rng.standard_normal(dom.shape) + 1j * rng.standard_normal(dom.shape)
            w = rng.standard_normal(dom.shape) + 1j * rng.standard_normal(dom.shape)
            z *= rng.uniform(0, 1) / np.linalg.norm(z)
            w *= rng.uniform(0, 1) / np.linalg.norm(w)
            x = abs(np.vdot(w, z))
            if x > args.max_pairing:
                w *= args.max_pairing / x
            top = max(top, fk_residual_rank1(z, w, nu, args.terms, dom))
        out[f"{nu:g}"] = top
    return dom.to_dict(), {"series": args.tol}, {"max_residual": out, "terms": args.terms}, None, \
        max(out.values()) <= args.tol


def cmd_selftest(args, blobs):
    _kernels.warmup()
    picks = args.only or list(range(1, len(RUNNERS) + 1))
    if any(not 1 <= k <= len(RUNNERS) for k in picks):
        raise InputError(f"criteria are numbered 1..{len(RUNNERS)}")
    outcomes = [RUNNERS[k - 1]() for k in picks]
    for o in outcomes:
        print(o.line(), file=sys.stderr)
    payload = {"criteria": [o.to_json(args.timing) | {"pass": o.ok} for o in outcomes],
               "backend": _kernels.backend_name()}
    return None, {}, payload, None, all(o.ok for o in outcomes)


COMMANDS = {
    "classify": cmd_classify, "boundary-scan": cmd_boundary_scan, "det-check": cmd_det_check,
    "isometry-verify": cmd_isometry_verify, "t-toeplitz": cmd_t_toeplitz, "hardy-gram": cmd_hardy_gram,
    "toeplitz-check": cmd_toeplitz_check, "dual-check": cmd_dual_check, "berezin-scan": cmd_berezin_scan,
    "fk-check": cmd_fk_check, "selftest": cmd_selftest,
}


def _digest_argv(argv):
    # --out and --timing change where/what is printed, not what is computed
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
        elif a == "--out":
            skip = True
        elif a != "--timing" and not a.startswith("--out="):
            out.append(a)
    return out


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    t0 = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        blobs = []
        dom, tols, payload, mc, ok = COMMANDS[args.command](args, blobs)
    except (InputError, ValueError) as exc:
        sys.stdout.write(dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}))
        return 2
    report = {
        "command": args.command,
        "domain": dom,
        "inputs_digest": inputs_digest(_digest_argv(argv), blobs),
        "tolerances": tols,
        "payload": payload,
        "mc": mc,
        "verdict": "pass" if ok else "fail",
    }
    if args.timing:
        report["wall_time"] = time.perf_counter() - t0
    text = dumps(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 1


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
