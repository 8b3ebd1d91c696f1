"""Command-line front end ``rcpos``.

Exit codes: 0 all certified (or every suite row passed), 1 something refuted
(or a suite row failed), 2 inconclusive with nothing refuted, 3 usage or
input errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from rcpos import __version__
from rcpos.bundles import parse_bundle, derived_curvature
from rcpos.curvature import chern_curvature
from rcpos.dsl.catalog import describe_catalog, resolve_metric
from rcpos.errors import RcposError
from rcpos.positivity import curvature_scale, q_positivity_count
from rcpos.linalg import orthonormal_frame
from rcpos.report import dumps, find_item, from_cvec, to_markdown
from rcpos.suite import notion_sign, run_check, run_paper_suite

EXIT_ERROR = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _default_seed() -> int:
    env = os.environ.get("RCPOS_SEED")
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"RCPOS_SEED must be an integer, got {env!r}") from None


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--metric", required=True, help="catalog selector (e.g. fubini_study:2) or .hmet path")
    p.add_argument("--points", type=int, default=10, help="number of sampled points (default 10)")
    p.add_argument("--seed", type=int, default=None, help="master seed (default $RCPOS_SEED or 0)")
    p.add_argument("--tol-margin", type=float, default=None, help="inconclusive band for normalized margins (default 1e-7)")
    p.add_argument("--escalate", type=int, default=0, help="re-search inconclusive verdicts with 4x restarts, up to N times")
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "markdown"), default="json")
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: available cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rcpos", description="Chern curvature positivity checks on coordinate charts.")
    parser.add_argument("--version", action="version", version=f"rcpos {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    check = sub.add_parser("check", help="certify positivity notions at sampled points")
    _add_common(check)
    check.add_argument("--bundle", default="tangent", help="bundle expression, e.g. ext(tangent,2) (default tangent)")
    check.add_argument(
        "--notion",
        action="append",
        default=None,
        help="rc+, rc-, griffiths+, hsc_sign or q_positive(q); repeat or comma-separate (default rc+)",
    )

    suite = sub.add_parser("paper-suite", help="run the battery of curvature identities and inequalities")
    _add_common(suite)
    suite.add_argument("--trials", type=int, default=200, help="random trials per point for the minimizer lemma")

    explain = sub.add_parser("explain", help="print the witness data of one report item")
    explain.add_argument("report", help="JSON report path")
    explain.add_argument("item", help="item id, e.g. check/p003/rc+ or lemma/minimizer_lemma")

    cat = sub.add_parser("catalog", help="catalog commands")
    cat_sub = cat.add_subparsers(dest="catalog_command", required=True, parser_class=_Parser)
    cat_sub.add_parser("list", help="list built-in metrics")
    return parser


def _emit(report: dict, fmt: str, out: str | None) -> None:
    text = dumps(report) if fmt == "json" else to_markdown(report)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _jobs(value: int | None) -> int:
    if value is None:
        return os.cpu_count() or 1
    if value < 1:
        raise UsageError("--jobs must be at least 1")
    return value


def _tol_overrides(args) -> dict:
    out = {} if args.tol_margin is None else {"margin": args.tol_margin}
    if args.escalate < 0:
        raise UsageError("--escalate must be non-negative")
    if args.escalate:
        out["escalate_rounds"] = args.escalate
    return out


def _notions(raw) -> list[str]:
    if not raw:
        return ["rc+"]
    out = []
    for chunk in raw:
        out += [n.strip() for n in chunk.split(",") if n.strip()]
    return out


def cmd_check(args) -> int:
    if args.points < 1:
        raise UsageError("--points must be at least 1")
    seed = _default_seed() if args.seed is None else args.seed
    report = run_check(
        args.metric,
        bundle=args.bundle,
        notions=_notions(args.notion),
        points=args.points,
        seed=seed,
        tol_overrides=_tol_overrides(args),
        jobs=_jobs(args.jobs),
        out_format=args.format,
    )
    _emit(report, args.format, args.out)
    return int(report["exit_code"])


def cmd_paper_suite(args) -> int:
    if args.points < 1:
        raise UsageError("--points must be at least 1")
    seed = _default_seed() if args.seed is None else args.seed
    report = run_paper_suite(
        args.metric,
        points=args.points,
        seed=seed,
        trials=args.trials,
        tol_overrides=_tol_overrides(args),
        jobs=_jobs(args.jobs),
        out_format=args.format,
    )
    _emit(report, args.format, args.out)
    return int(report["exit_code"])


def _fmt_c(x: complex) -> str:
    return f"{x.real:+.9g}{x.imag:+.9g}i"


def recheck_certificate(item: dict) -> dict:
    """Recompute a certificate's objective from the metric and witness vectors."""
    m = resolve_metric(item["metric"])
    z = from_cvec(item["z"])
    cp = derived_curvature(parse_bundle(item["bundle"]), chern_curvature(m, z))
    a = from_cvec(item["witness"]["a"])
    v = from_cvec(item["witness"]["v"])
    sign = notion_sign(item["notion"])
    terms = sign * np.einsum("ijab,i,j,a,b->ijab", cp.R.data, v, np.conj(v), a, np.conj(a))
    value = float(np.real(terms.sum()))
    if item["notion"].startswith("q_positive"):
        scale = float(np.max(np.abs(q_positivity_count(cp.R.data[:, :, 0, 0], cp.g).eigenvalues)))
    else:
        p, q = orthonormal_frame(cp.g), orthonormal_frame(cp.h)
        scale = curvature_scale(cp.R.change_frames(base=p, bundle=q).data)
    margin = value / scale if scale else 0.0
    return {"cp": cp, "a": a, "v": v, "terms": terms, "value": value, "scale": scale, "margin": margin, "sign": sign}


def _explain_certificate(item: dict) -> None:
    chk = recheck_certificate(item)
    out = sys.stdout.write
    out(f"item {item['id']}: {item['notion']} on {item['bundle']} of {item['metric']} -> {item['verdict']}\n")
    out(f"point z = ({', '.join(_fmt_c(x) for x in from_cvec(item['z']))})\n")
    out(f"witness a = ({', '.join(_fmt_c(x) for x in chk['a'])})\n")
    out(f"witness v = ({', '.join(_fmt_c(x) for x in chk['v'])})\n")
    prefix = "-" if chk["sign"] < 0 else ""
    out(f"{prefix}R(v, vbar, a, abar) = {prefix}sum R[i,j,a,b] v^i conj(v^j) a^a conj(a^b)\n")
    terms = chk["terms"]
    order = np.argsort(-np.abs(terms).ravel())
    shown = 0
    for flat in order:
        t = terms.ravel()[flat]
        if abs(t) == 0 or shown >= 12:
            break
        i, j, a, b = np.unravel_index(flat, terms.shape)
        coeff = chk["sign"] * chk["cp"].R.data[i, j, a, b]
        out(f"  R[{i + 1},{j + 1},{a + 1},{b + 1}] = {_fmt_c(complex(coeff))}  term {_fmt_c(complex(t))}\n")
        shown += 1
    if terms.size > shown:
        out(f"  ... {terms.size - shown} smaller terms\n")
    out(f"re-evaluated objective = {chk['value']:.12g}\n")
    out(f"scale = {chk['scale']:.12g}\n")
    out(f"re-evaluated margin = {chk['margin']:.12g}; stored margin = {item['margin']:.12g}\n")
    diff = abs(chk["margin"] - item["margin"])
    out(f"margin difference = {diff:.3e} ({'ok' if diff <= 1e-9 else 'MISMATCH'})\n")


def _explain_row(row: dict) -> None:
    out = sys.stdout.write
    out(f"item {row['id']}: mode {row['mode']}, {'passed' if row['passed'] else 'FAILED'}\n")
    out(
        f"checked {row['checked']}, hypothesis met {row['hypothesis_met']}, "
        f"conclusion verified {row['conclusion_verified']}, identity failures {row['identity_failures']}\n"
    )
    out(f"worst residual {row['worst_residual']:.6g}\n")
    if row["name"] == "minimizer_lemma":
        for d in row["details"]:
            e1 = ", ".join(_fmt_c(complex(re, im)) for re, im in d["e1"])
            out(f"  {d['point']} [{d['mode']}] e1 = ({e1}), min H = {d['min_hsc']:.9g}\n")
            for rel in sorted(d["relations"]):
                out(f"    {rel}: {d['relations'][rel]:.3e}\n")
    for f in row["failures"][:10]:
        out(f"  failure: {json.dumps(f, sort_keys=True)}\n")


def cmd_explain(args) -> int:
    try:
        with open(args.report, encoding="utf-8") as fh:
            report = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read report {args.report}: {exc}") from None
    item = find_item(report, args.item)
    if item is None:
        raise UsageError(f"no item {args.item!r} in {args.report}")
    if item.get("kind") == "certificate":
        _explain_certificate(item)
    else:
        _explain_row(item)
    return 0


def cmd_catalog(args) -> int:
    for name, sig, doc in describe_catalog():
        sys.stdout.write(f"{name}({sig})\n    {doc}\n")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        handler = {"check": cmd_check, "paper-suite": cmd_paper_suite, "explain": cmd_explain, "catalog": cmd_catalog}
        return handler[args.command](args)
    except (UsageError, RcposError, ValueError, KeyError, OSError) as exc:
        sys.stderr.write(f"rcpos: error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
