"""Command-line interface.

Exit codes: 0 success, 1 input error, 2 method inconclusive,
3 verification failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import certio, seqnet
from .engine import (
    CertificateRejected,
    HypothesisWitness,
    Inconclusive,
    MethodConfig,
    MethodError,
    run_method,
    verify_certificate,
)
from .parser import ParseError, parse_network

EXIT_OK, EXIT_INPUT, EXIT_INCONCLUSIVE, EXIT_VERIFY = 0, 1, 2, 3

# degeneracy intervals reported for m=2, n=3, lambda=1
SWEEP_GOLDEN = {"star": [(0.12, 0.125)], "sharp": [(0.240, 0.241), (1.159, 1.160)]}


class InputError(Exception):
    pass


def _int_range(text: str) -> list[int]:
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return out


def _float_pair(text: str) -> tuple[float, float]:
    try:
        lo, hi = text.split("..")
        return float(lo), float(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO..HI, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _positive(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _summary(cert, stream=None) -> None:
    stream = stream or sys.stderr
    d = cert.diagnostics
    fmt = lambda xs: "(" + ", ".join(f"{v:.6g}" for v in xs) + ")"
    print(f"rates:     {fmt(cert.rates)}", file=stream)
    print(f"x*:        {fmt(cert.x_star)}", file=stream)
    print(f"x#:        {fmt(cert.x_sharp)}", file=stream)
    if d is not None:
        print(f"residuals: {d.residual_star:.3e} (x*), {d.residual_sharp:.3e} (x#)", file=stream)
        print(f"det df:    {d.det_star:.10g} (x*), {d.det_sharp:.10g} (x#)", file=stream)
        print(f"nondegenerate: x* {d.nondegenerate_star}, x# {d.nondegenerate_sharp}; "
              f"scaling {d.scaling:g}", file=stream)


def cmd_construct(args) -> int:
    cfg = MethodConfig(strategy=args.strategy, tol_residual=args.tol_residual, tol_det=args.tol_det,
                       scaling=args.scaling)
    if args.network == "kmn":
        if args.m is None or args.n is None:
            raise InputError("construct kmn needs --m and --n")
        try:
            p = seqnet.SeqParams.default(args.m, args.n, lam=args.lam, eps=args.eps,
                                         delta1=args.delta1)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        cert = seqnet.closed_form_certificate(p, verify_tol_det=args.tol_det)
        diag = verify_certificate(cert, args.tol_residual, args.tol_det)
        diag.scaling = cert.diagnostics.scaling
        cert = replace(cert, diagnostics=diag)
        if not diag.passed:
            raise CertificateRejected("closed-form certificate failed verification", cert)
    else:
        path = Path(args.network)
        if not path.is_file():
            raise InputError(f"no such file: {path}")
        net, _ = parse_network(path.read_text(encoding="utf-8"))
        if args.witness:
            idx = [k - 1 for k in _int_range(args.witness)]
            weights = _float_list(args.eta_tilde) if args.eta_tilde else [1.0] * len(idx)
            try:
                witness = HypothesisWitness(tuple(idx), tuple(weights))
            except ValueError as exc:
                raise InputError(str(exc)) from exc
        else:
            shape = seqnet.recognize(net)
            if shape is None:
                raise InputError("--witness is required unless the network is a sequestration network")
            witness = seqnet.default_witness(*shape)
        cert = run_method(net, witness, cfg)
    _emit(certio.dumps(cert), args.out)
    _summary(cert)
    return EXIT_OK


def cmd_verify(args) -> int:
    path = Path(args.certificate)
    if not path.is_file():
        raise InputError(f"no such file: {path}")
    try:
        cert = certio.load(path)
    except certio.CertificateFormatError as exc:
        raise InputError(str(exc)) from exc
    d = verify_certificate(cert, args.tol_residual, args.tol_det)
    print(f"residual x*: {d.residual_star:.3e}  ({'ok' if d.residual_star <= d.tol_residual else 'FAIL'})")
    print(f"residual x#: {d.residual_sharp:.3e}  ({'ok' if d.residual_sharp <= d.tol_residual else 'FAIL'})")
    print(f"det df(x*):  {d.det_star:.10g}  nondegenerate={d.nondegenerate_star}")
    print(f"det df(x#):  {d.det_sharp:.10g}  nondegenerate={d.nondegenerate_sharp}")
    print(f"distinct: {d.distinct}  positive: {d.rates_positive}")
    ok = d.passed and d.nondegenerate
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_table1(args) -> int:
    rows = seqnet.reproduce_table1()
    lines = ["m,quantity,printed,computed,pass"]
    print(f"{'m':>3} {'':3} {'printed':>9} {'computed':>22}  result")
    for r in rows:
        print(f"{r.m:>3} {r.quantity:3} {r.printed:>9g} {r.computed:>22.17g}  "
              f"{'pass' if r.passed else 'FAIL'}")
        lines.append(f"{r.m},{r.quantity},{r.printed!r},{r.computed:.17g},{int(r.passed)}")
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    passed = sum(r.passed for r in rows)
    print(f"{passed}/{len(rows)} comparisons pass")
    return EXIT_OK if passed == len(rows) else EXIT_VERIFY


def cmd_scan(args) -> int:
    n_set = args.n
    for n in n_set:
        if n < 3 or n % 2 == 0:
            raise InputError(f"n must be odd and >= 3, got {n}")
    cells = seqnet.small_mn_scan(args.m, n_set, lam=args.lam, eps=args.eps, delta1=args.delta1,
                                 tol_det=args.tol_det)
    print(f"{'m':>3} {'n':>3} {'det df(x*)':>22} {'det df(x#)':>22}  nondegenerate")
    for c in cells:
        if c.error:
            print(f"{c.m:>3} {c.n:>3}  failed: {c.error}")
        else:
            print(f"{c.m:>3} {c.n:>3} {c.det_star:>22.15g} {c.det_sharp:>22.15g}  {c.both_nonzero}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for n in n_set:
            (out / f"scan_n{n}.csv").write_text(seqnet.scan_csv(cells, n), encoding="utf-8")
    good = sum(c.both_nonzero for c in cells)
    print(f"{good}/{len(cells)} cells with both determinants nonzero")
    if any(c.error for c in cells):
        return EXIT_INCONCLUSIVE
    return EXIT_OK if good == len(cells) else EXIT_VERIFY


def cmd_sweep(args) -> int:
    result = seqnet.epsilon_sweep(args.m, args.n, args.lam, args.eps, args.steps,
                                  delta1=args.delta1, hold_sharp_eps=args.hold_sharp_eps)
    if args.out:
        Path(args.out).write_text(seqnet.sweep_csv(result), encoding="utf-8")
    if result.skipped:
        lo, hi = result.skipped[0][0], result.skipped[-1][0]
        print(f"{len(result.skipped)} grid points skipped (no valid certificate), eps in [{lo:g}, {hi:g}]")
    for b in result.brackets:
        print(f"det df(x{'*' if b.which == 'star' else '#'}) changes sign in "
              f"[{b.lo:.9f}, {b.hi:.9f}]  verified={b.verified}")
    ok = all(b.verified for b in result.brackets)
    if (args.m, args.n, args.lam) == (2, 3, 1.0):
        for which, intervals in SWEEP_GOLDEN.items():
            for lo, hi in intervals:
                hit = any(lo <= b.lo and b.hi <= hi for b in result.of(which))
                ok &= hit
                print(f"reported x{'*' if which == 'star' else '#'} root in ({lo}, {hi}): "
                      f"{'found' if hit else 'NOT found'}")
    return EXIT_OK if ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="detopt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def tolerances(p):
        p.add_argument("--tol-residual", type=_positive, default=1e-10)
        p.add_argument("--tol-det", type=_positive, default=1e-9)

    def seq_flags(p, eps_default=None):
        p.add_argument("--lambda", dest="lam", type=_positive, default=1.0)
        p.add_argument("--eps", type=_positive, default=eps_default)
        p.add_argument("--delta1", type=float, default=1.0)

    p = sub.add_parser("construct", help="build a multistationarity certificate")
    p.add_argument("network", help="network file, or 'kmn' for the closed-form sequestration case")
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--witness", help="1-based reaction indices, e.g. 1,2,3 or 1..3")
    p.add_argument("--eta-tilde", help="comma-separated positive weights for the witness")
    p.add_argument("--strategy", choices=("bisect", "free-variable"), default="bisect")
    p.add_argument("--scaling", type=_positive, default=1.0)
    p.add_argument("--out")
    seq_flags(p)
    tolerances(p)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", help="re-check a certificate file")
    p.add_argument("certificate")
    tolerances(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("table1", help="Jacobian determinants for n=3, m=2..19")
    p.add_argument("--out")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("scan", help="closed-form certificates over m and n")
    p.add_argument("--m", type=_int_range, default=list(range(2, 6)))
    p.add_argument("--n", type=_int_range, default=[5, 7, 9, 11])
    p.add_argument("--out", help="directory for per-n CSV files")
    seq_flags(p)
    tolerances(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("sweep", help="bracket eps values where a steady state degenerates")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--lambda", dest="lam", type=_positive, default=1.0)
    p.add_argument("--eps", type=_float_pair, default=(0.05, 1.3))
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--delta1", type=float, default=1.0)
    p.add_argument("--hold-sharp-eps", type=_positive, default=None,
                   help="freeze x# at its value for this eps (not a steady state elsewhere)")
    p.add_argument("--out", help="CSV of eps,detStar,detSharp")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except (InputError, ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CertificateRejected as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        if exc.certificate is not None:
            _summary(exc.certificate)
        return EXIT_VERIFY
    except Inconclusive as exc:
        print(f"method inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except MethodError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT if exc.stage == "input" else EXIT_INCONCLUSIVE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
