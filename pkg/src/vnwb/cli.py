"""Command line interface: ``vnwb <command> [options]``."""

from __future__ import annotations

import argparse
import shlex
import sys
from fractions import Fraction

from .backend_file import HEADER as BACKEND_HEADER
from .backend_file import load_input
from .certificates import Certificate, CertificateError, parse_certificate
from .gallery import TLJ, build_tlj
from .presentation import ArityError, Presentation, trace
from .scalar import format_scalar
from .search import BudgetExhausted, ExactPoint, Unrealizable
from .subfactor import (
    Inclusion,
    NoConditionalExpectation,
    PPBasis,
    cond_exp_from_basis,
    cond_exp_presented,
    construct_pp_basis,
    freeze_basis,
    index_from_basis,
    index_pp_inf,
    verify_pp_basis,
)
from .terms import ParseError, format_term, parse_term

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3
MAX_PRECISION = 200


class ConfigError(ValueError):
    pass


def dyadic_str(x: Fraction, k: int) -> str:
    """``x`` rounded to the nearest multiple of ``2^-k``, written as an exact decimal."""
    q = Fraction(round(Fraction(x) * (1 << k)), 1 << k)
    sign = "-" if q < 0 else ""
    q = abs(q)
    whole, frac = divmod(q.numerator, q.denominator)
    if not frac:
        return f"{sign}{whole}"
    digits = []
    while frac:
        frac *= 10
        d, frac = divmod(frac, q.denominator)
        digits.append(str(d))
    return f"{sign}{whole}." + "".join(digits)


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="backend file (vnwb-backend v1)")
    common.add_argument("--gallery", help="gallery construction, e.g. 'amplification d=2 m=2'")
    common.add_argument("--precision", "-k", type=int, default=20, help="precision exponent k (answers within 2^-k)")
    common.add_argument("--budget", type=int, default=2000, help="enumeration budget per search")
    common.add_argument("--workers", type=int, default=1, help="parallel workers (never changes results)")
    common.add_argument("--out", help="write the certificate here")

    p = argparse.ArgumentParser(prog="vnwb", description="Exact subfactor and basic-construction computations.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("build", parents=[common], help="summarize the input algebra and inclusion")
    for name, helptext in (("norm", "2-norm of a term"), ("trace", "trace of a term by polarization")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("term")
    s = sub.add_parser("expect", parents=[common], help="conditional expectation onto the subalgebra")
    s.add_argument("term")
    s.add_argument("--method", choices=["backend", "basis", "declared", "jump"], default="backend")
    s = sub.add_parser("index", parents=[common], help="index of the inclusion")
    s.add_argument("--method", choices=["backend", "basis", "declared", "jump", "pp-inf"], default="basis")
    sub.add_parser("ppbasis", parents=[common], help="construct and verify a Pimsner-Popa basis")
    s = sub.add_parser("normalform", parents=[common], help="normal form of an extended term")
    s.add_argument("term")
    s = sub.add_parser("stripe", parents=[common], help="the M element y with x e = y e")
    s.add_argument("term")
    s = sub.add_parser("tower", parents=[common], help="iterate the basic construction")
    s.add_argument("--depth", type=int, default=2)
    s = sub.add_parser("verify", parents=[common], help="re-check a certificate file")
    s.add_argument("certificate")
    s = sub.add_parser("markov", parents=[common], help="exhaustive Markov-trace check in a TLJ algebra")
    s.add_argument("--width", type=int, default=6)
    s.add_argument("--delta", default="2")
    s.add_argument("--generator", type=int, default=None, help="i in tr(w e_i) (default: every i)")
    s.add_argument("--length", type=int, default=6)
    return p


def canonical_command(ns: argparse.Namespace) -> list[str]:
    """The argument list that reproduces ``ns`` minus input, output and workers."""
    out = [ns.command]
    if getattr(ns, "term", None) is not None:
        out.append(ns.term)
    for key in ("method", "depth", "width", "delta", "generator", "length"):
        v = getattr(ns, key, None)
        if v is not None:
            out += [f"--{key}", str(v)]
    out += ["--precision", str(ns.precision), "--budget", str(ns.budget)]
    return out


# ---------------------------------------------------------------- helpers

def _presentation(obj) -> Presentation:
    if isinstance(obj, Inclusion):
        return obj.ambient
    if isinstance(obj, TLJ):
        return obj.presentation
    return obj


def _inclusion(obj) -> Inclusion:
    if isinstance(obj, Inclusion):
        return obj
    if isinstance(obj, TLJ):
        return obj.inclusion
    raise ConfigError("this command needs an inclusion (a gallery spec or a backend file with a 'sub:' line)")


def _term(ns, P: Presentation, extended: bool = False):
    try:
        return parse_term(ns.term, P.arity, extended=extended)
    except ParseError as exc:
        raise ConfigError(f"cannot parse term: {exc}") from None


def _basis(I: Inclusion, ns) -> PPBasis:
    return construct_pp_basis(I, ns.budget, ns.workers, m1=I.m1_model)


# ---------------------------------------------------------------- commands

def cmd_build(ns, obj, cert: Certificate):
    P = _presentation(obj)
    A = P.algebra
    cert.add("name", P.name or P.provenance)
    cert.add("algebra", repr(A))
    cert.add("arity", P.arity)
    wb = P.word_basis()
    cert.add("generated-dimension", wb.dimension)
    if isinstance(obj, (Inclusion, TLJ)):
        I = _inclusion(obj)
        cert.add("sub-dimension", I.sub_basis.dimension)
        cert.add("declared-index", I.index if I.index is not None else "none")
        cert.add("cond-exp-sources", ",".join(I.priority))
        cert.add("m1-model", "yes" if I.m1_model is not None else "no")
    if isinstance(obj, TLJ):
        for name, ok in obj.relations.checks.items():
            cert.add(f"relation[{name}]", "pass" if ok else "fail")
        if not obj.relations.passed:
            cert.status = "failed"


def cmd_norm(ns, obj, cert):
    P = _presentation(obj)
    t = _term(ns, P)
    cert.add("term", format_term(t))
    cert.add("norm", dyadic_str(P.norm(t, ns.precision), ns.precision))
    cert.add("precision", f"2^-{ns.precision}")


def cmd_trace(ns, obj, cert):
    P = _presentation(obj)
    t = _term(ns, P)
    v = trace(P, t, ns.precision)
    cert.add("term", format_term(t))
    cert.add("trace-re", dyadic_str(v.re, ns.precision))
    cert.add("trace-im", dyadic_str(v.im, ns.precision))
    cert.add("precision", f"2^-{ns.precision}")


def cmd_expect(ns, obj, cert):
    I = _inclusion(obj)
    t = _term(ns, I.ambient)
    k = ns.precision
    cert.add("term", format_term(t))
    cert.add("method", ns.method)
    if ns.method == "jump":
        from .basic import cond_exp_jump_search

        r = cond_exp_jump_search(I, t, k, ns.budget)
        cert.add("expectation", format_term(r.term))
        cert.add("z-rank", r.z_rank)
        cert.add("soundness", r.note)
        return
    if ns.method == "basis":
        out = cond_exp_from_basis(I, _basis(I, ns), t, k)
    else:
        out = cond_exp_presented(I, t, k, source=ns.method)
    cert.add("expectation", format_term(out))


def cmd_index(ns, obj, cert):
    I = _inclusion(obj)
    k = ns.precision
    cert.add("method", ns.method)
    if ns.method == "declared":
        if I.index is None:
            raise ConfigError("this inclusion declares no index")
        cert.add("index", I.index)
        return
    if ns.method == "basis":
        if I.index is None:
            raise ConfigError("the basis construction needs the index")
        B = _basis(I, ns)
        cert.add("index", f"{dyadic_str(index_from_basis(I, B, k), k)} +- 2^-{k}")
        return
    if ns.method == "jump":
        from .basic import index_jump_estimate

        est = index_jump_estimate(I, ns.budget)
    else:
        est = index_pp_inf(I, ns.budget, source="backend")
    cert.add("inverse-index-upper", dyadic_str(est.inverse_upper, k))
    cert.add("index-lower", dyadic_str(est.index_lower, k))
    cert.add("examined", est.examined)
    cert.add("converged", "no")


def cmd_ppbasis(ns, obj, cert):
    I = _inclusion(obj)
    if I.index is None:
        raise ConfigError("the basis construction needs the index")
    k = ns.precision
    B = freeze_basis(I, _basis(I, ns), k)
    tol = Fraction(1, 10**6)
    _basis_body(cert, I, B, k, tol)


def _basis_body(cert, I: Inclusion, B: PPBasis, k: int, tol: Fraction) -> None:
    cert.add("index", I.index)
    cert.add("n", B.n)
    cert.add("precision", k)
    cert.add("tolerance", tol)
    for j, p in enumerate(B.m, start=1):
        cert.add(f"m[{j}]", format_term(p.exact_term))
    for j, p in enumerate(B.e_m, start=1):
        cert.add(f"e_m[{j}]", format_term(p.exact_term))
    cert.add("e_last", format_term(B.e_last.exact_term))
    V = verify_pp_basis(I, B, tol, k, m1=I.m1_model)
    for c in V.clauses:
        cert.add(f"residual[{c.name}]", f"{dyadic_str(c.residual, k + 4)} {'pass' if c.passed else 'fail'}")
    cert.add("verdict", "pass" if V.passed else "fail")
    if not V.passed:
        cert.status = "failed"


def cmd_normalform(ns, obj, cert):
    from .basic import to_normal_form

    P = _presentation(obj)
    t = _term(ns, P, extended=True)
    nf = to_normal_form(t)
    cert.add("term", format_term(t))
    cert.add("normal-form", format_term(nf.to_term()))
    for j, (w, counts) in enumerate(nf.trace, start=1):
        cert.add(f"e-counts[{j}]", " ".join(str(c) for c in counts))


def cmd_stripe(ns, obj, cert):
    from .basic import strip_e

    I = _inclusion(obj)
    if I.index is None:
        raise ConfigError("strip-e needs the index")
    t = _term(ns, I.ambient, extended=True)
    cert.add("term", format_term(t))
    cert.add("strip", format_term(strip_e(I, ExactPoint(I.ambient, t), ns.precision)))


def cmd_tower(ns, obj, cert):
    from .basic import jones_tower, tower_index

    I = _inclusion(obj)
    if I.index is None:
        raise ConfigError("the tower needs the index")
    if ns.depth < 1:
        raise ConfigError("depth must be at least 1")
    for lvl in jones_tower(I, ns.depth):
        cert.add(f"level[{lvl.level}]", f"index {tower_index(lvl)} tr(e) {lvl.jones_trace}")


def cmd_markov(ns, obj, cert):
    from .tl import verify_markov

    try:
        T = build_tlj(ns.width, Fraction(ns.delta))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(str(exc)) from None
    gens = [ns.generator] if ns.generator is not None else list(range(1, ns.width))
    ok = True
    for name, passed in T.relations.checks.items():
        cert.add(f"relation[{name}]", "pass" if passed else "fail")
        ok = ok and passed
    for i in gens:
        try:
            c = verify_markov(T.algebra, i, ns.length)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        cert.add(f"markov[e{i}]", f"{c.checked} words, {len(c.failures)} failures")
        ok = ok and c.passed
    cert.add("t", T.algebra.t)
    if not ok:
        cert.status = "failed"


COMMANDS = {
    "build": cmd_build,
    "norm": cmd_norm,
    "trace": cmd_trace,
    "expect": cmd_expect,
    "index": cmd_index,
    "ppbasis": cmd_ppbasis,
    "normalform": cmd_normalform,
    "stripe": cmd_stripe,
    "tower": cmd_tower,
    "markov": cmd_markov,
}


# ---------------------------------------------------------------- driver

def _validate(ns) -> None:
    if not 0 <= ns.precision <= MAX_PRECISION:
        raise ConfigError(f"precision must lie in [0, {MAX_PRECISION}]")
    if ns.budget <= 0:
        raise ConfigError("budget must be positive")
    if ns.workers <= 0:
        raise ConfigError("workers must be positive")


def _input_text(ns) -> str:
    if ns.input and ns.gallery:
        raise ConfigError("give either --input or --gallery, not both")
    if ns.input:
        try:
            with open(ns.input, encoding="utf-8") as fh:
                return fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read input: {exc}") from None
    if ns.gallery:
        return f"{BACKEND_HEADER}\ngallery: {ns.gallery}\n"
    if ns.command == "markov":
        return f"{BACKEND_HEADER}\ngallery: tlj width={ns.width} delta={ns.delta}\n"
    raise ConfigError("an input is required (--input FILE or --gallery SPEC)")


def execute(ns, input_text: str) -> Certificate:
    """Run a parsed command on an input text; raises ConfigError / BudgetExhausted."""
    cert = Certificate(ns.command, shlex.join(canonical_command(ns)), input_text)
    try:
        obj = load_input(input_text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad input: {exc}") from None
    try:
        COMMANDS[ns.command](ns, obj, cert)
    except BudgetExhausted as exc:
        cert.status = "budget-exhausted"
        cert.add("exhausted", exc.what)
        cert.add("examined", exc.examined)
    except (NoConditionalExpectation, Unrealizable, ArityError) as exc:
        raise ConfigError(str(exc)) from None
    return cert


def verify_certificate(text: str, workers: int = 1) -> tuple[bool, list[str]]:
    """Re-check a certificate; returns (accepted, messages)."""
    cert = parse_certificate(text)
    try:
        ns = build_parser().parse_args(shlex.split(cert.command))
    except (ValueError, SystemExit):
        raise CertificateError(f"unusable command {cert.command!r}") from None
    if ns.command == "verify":
        raise CertificateError("a certificate cannot wrap verify")
    ns.workers = workers
    if cert.kind != ns.command:
        return False, ["kind and command disagree"]
    if cert.kind == "ppbasis" and cert.status == "ok":
        return _verify_basis_certificate(cert, ns)
    again = execute(ns, cert.input_text)
    if again.render() != cert.render():
        return False, ["recomputation differs from the certificate"]
    return True, ["recomputation matches"]


def _verify_basis_certificate(cert: Certificate, ns) -> tuple[bool, list[str]]:
    """Re-check the stored basis terms without re-running the construction."""
    I = _inclusion(load_input(cert.input_text))
    P = I.ambient
    k = int(cert.get("precision"))
    tol = Fraction(cert.get("tolerance"))

    def terms(prefix):
        return [ExactPoint(P, parse_term(v, P.arity)) for _, v in cert.values(prefix)]

    B = PPBasis(int(cert.get("n")), terms("m["), terms("e_m["),
                ExactPoint(P, parse_term(cert.get("e_last"), P.arity)), I.index, "certificate")
    fresh = Certificate(cert.kind, cert.command, cert.input_text)
    _basis_body(fresh, I, B, k, tol)
    msgs = []
    ok = fresh.status == "ok"
    for (k1, v1), (k2, v2) in zip(cert.body, fresh.body):
        if (k1, v1) != (k2, v2):
            ok = False
            msgs.append(f"mismatch at {k1}")
    if len(cert.body) != len(fresh.body):
        ok = False
        msgs.append("clause count differs")
    msgs.append("all residuals re-computed" if ok else "verification failed")
    return ok, msgs


def run(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _validate(ns)
        if ns.command == "verify":
            try:
                with open(ns.certificate, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read certificate: {exc}") from None
            try:
                ok, msgs = verify_certificate(text, ns.workers)
            except CertificateError as exc:
                raise ConfigError(f"bad certificate: {exc}") from None
            for m in msgs:
                print(m)
            print("verify: pass" if ok else "verify: fail")
            return EXIT_OK if ok else EXIT_FAILED
        cert = execute(ns, _input_text(ns))
    except ConfigError as exc:
        print(f"vnwb: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for k, v in cert.body:
        print(f"{k}: {v}")
    print(f"status: {cert.status}")
    if ns.out:
        with open(ns.out, "w", encoding="utf-8") as fh:
            fh.write(cert.render())
    if cert.status == "budget-exhausted":
        return EXIT_BUDGET
    return EXIT_FAILED if cert.status == "failed" else EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
