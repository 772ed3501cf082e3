"""Command-line interface: ``gaussdag {score,learn,simulate,verify}``.

Exit codes: 0 success, 1 input error, 2 usage error, 3 capability error,
4 verification failure.
"""
from __future__ import annotations

import argparse
import math
import sys
from typing import Sequence

from gaussdag import __version__, _kernels
from gaussdag.dag import Dag, equivalence_key, format_dag, read_dag, v_structures
from gaussdag.data import load_csv, read_params, simulate, write_csv
from gaussdag.errors import GaussDagError, TooLarge
from gaussdag.prior import NormalWishartPrior, default_prior, read_prior_config
from gaussdag.score import FamilyScoreCache, ScoreContext, family_scores
from gaussdag.search import MAX_EXHAUSTIVE, SearchConfig, exhaustive_best, greedy_hill_climb

EXIT_OK, EXIT_INPUT, EXIT_USAGE, EXIT_CAPABILITY, EXIT_VERIFY = 0, 1, 2, 3, 4


class InputError(Exception):
    pass


def fmt(x: float) -> str:
    return f"{x + 0.0:.12g}"


def _banner(args, out, prior_desc: str | None = None) -> None:
    if args.no_banner:
        return
    out.write(f"# gaussdag {__version__} (kernels: {_kernels.BACKEND})\n")
    if prior_desc:
        out.write(f"# prior: {prior_desc}\n")


def _load_prior(path: str | None, n: int) -> tuple[NormalWishartPrior, str]:
    if path is None:
        pr = default_prior(n)
        return pr, f"default nu=0 cov=I alpha_mu={fmt(pr.alpha_mu)} alpha_w={fmt(pr.alpha_w)}"
    pr = read_prior_config(path)
    if pr.n != n:
        raise InputError(f"prior has dimension {pr.n}, data has {n} columns")
    return pr, f"{path} alpha_mu={fmt(pr.alpha_mu)} alpha_w={fmt(pr.alpha_w)}"


def _structure_summary(g: Dag) -> list[str]:
    key = equivalence_key(g)
    skel = ", ".join(f"{g.labels[a]}-{g.labels[b]}" for a, b in sorted(key.skeleton))
    lines = [f"skeleton: {skel if skel else '(none)'}"]
    vs = sorted(v_structures(g))
    if vs:
        lines.append("vstructures: " + " ".join(f"({i},{j},{k})" for i, j, k in vs))
        lines += [f"  {g.labels[i]} -> {g.labels[j]} <- {g.labels[k]}" for i, j, k in vs]
    else:
        lines.append("vstructures: (none)")
    return lines


def cmd_score(args, out) -> int:
    data = load_csv(args.data)
    prior, desc = _load_prior(args.prior, data.n)
    ctx = ScoreContext.from_dataset(prior, data)
    cache = FamilyScoreCache(ctx)
    _banner(args, out, desc)
    for path in args.graphs:
        g = read_dag(path)
        if g.labels != data.names:
            raise InputError(f"{path}: nodes {','.join(g.labels)} do not match data columns {','.join(data.names)}")
        fams = family_scores(ctx, cache, g)
        total = math.fsum(fams)
        out.write(f"graph {path}\n")
        out.write(f"  total {fmt(total)}\n")
        for i, value in enumerate(fams):
            pa = ",".join(g.labels[p] for p in g.parents[i]) or "-"
            out.write(f"  family {g.labels[i]} | {pa} {fmt(value)}\n")
    return EXIT_OK


def cmd_learn(args, out) -> int:
    data = load_csv(args.data)
    if args.exhaustive and data.n > MAX_EXHAUSTIVE:
        sys.stderr.write(f"error: --exhaustive supports at most {MAX_EXHAUSTIVE} variables, data has {data.n}\n")
        return EXIT_CAPABILITY
    prior, desc = _load_prior(args.prior, data.n)
    ctx = ScoreContext.from_dataset(prior, data)
    if args.exhaustive:
        res = exhaustive_best(ctx, labels=data.names)
        method = "exhaustive"
    else:
        cfg = SearchConfig(max_iterations=args.max_iter, restarts=args.restarts, seed=args.seed,
                           max_parents=args.max_parents, workers=args.workers)
        res = greedy_hill_climb(ctx, cfg, labels=data.names)
        method = f"greedy restarts={cfg.restarts} max_iter={cfg.max_iterations} seed={cfg.seed}"
    _banner(args, out, desc)
    out.write(f"method {method}\n")
    out.write(f"score {fmt(res.score)}\n")
    out.write(format_dag(res.best))
    for line in _structure_summary(res.best):
        out.write(line + "\n")
    if not args.exhaustive:
        out.write(f"trace (restart {res.restart}):\n")
        for it, desc_, score in res.trace:
            out.write(f"  {it} {desc_} {fmt(score)}\n")
    return EXIT_OK


def cmd_simulate(args, out) -> int:
    g = read_dag(args.graph)
    params = read_params(args.params, g)
    d = simulate(g, params, args.n, args.seed)
    write_csv(d, args.out)
    _banner(args, out)
    out.write(f"wrote {d.N} rows x {d.n} columns to {args.out}\n")
    return EXIT_OK


def cmd_verify(args, out) -> int:
    from gaussdag.reference import NEGATIVE_CONTROL_MIN_SAMPLES, run_verification_suite

    if args.samples < 1000:
        raise InputError("--samples must be at least 1000")
    results = run_verification_suite(args.seed, args.samples, args.workers)
    _banner(args, out)
    out.write(f"verify seed={args.seed} samples={args.samples} "
              f"negative_control_samples={max(args.samples, NEGATIVE_CONTROL_MIN_SAMPLES)}\n")
    width = max(len(c.name) for rep, _ in results for c in rep.checks)
    out.write(f"{'check':<{width}}  {'statistic':>14}  {'threshold':>14}  pass\n")
    for rep, _ in results:
        for c in rep.checks:
            out.write(f"{c.name:<{width}}  {c.statistic:>14.6e}  {c.threshold:>14.6e}  {'yes' if c.passed else 'no'}\n")
    bad = []
    for rep, expected in results:
        status = "pass" if rep.passed else "fail"
        ok = rep.passed == expected
        if not ok:
            bad.append(rep.name)
        out.write(f"report={rep.name} result={status} expected={'pass' if expected else 'fail'} ok={int(ok)}\n")
    for rep, _ in results:
        for c in rep.checks:
            out.write(f"check={c.name} stat={c.statistic!r} threshold={c.threshold!r} pass={int(c.passed)}\n")
    out.write(f"summary reports={len(results)} unexpected={len(bad)}\n")
    return EXIT_OK if not bad else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaussdag", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gaussdag {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--no-banner", action="store_true", help="omit the version/prior banner")

    p = sub.add_parser("score", help="score DAGs against a dataset")
    p.add_argument("--data", required=True, help="CSV with a header row")
    p.add_argument("--prior", help="prior config file (default: nu=0, cov=I, alpha_mu=1, alpha_w=n+2)")
    p.add_argument("--graph", dest="graphs", action="append", required=True, help="DAG file (repeatable)")
    common(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("learn", help="search for a high-scoring DAG")
    p.add_argument("--data", required=True)
    p.add_argument("--prior")
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-parents", type=int, default=None)
    p.add_argument("--workers", type=int, default=1, help="threads for restarts (output is unaffected)")
    p.add_argument("--exhaustive", action="store_true", help=f"score every DAG (n <= {MAX_EXHAUSTIVE})")
    common(p)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("simulate", help="sample a dataset from a Gaussian DAG")
    p.add_argument("--graph", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--n", type=int, required=True, help="number of rows")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the Monte-Carlo and oracle self-checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--workers", type=int, default=1, help="threads for sampling (output is unaffected)")
    common(p)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except TooLarge as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CAPABILITY
    except (GaussDagError, InputError, OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
