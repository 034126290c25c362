"""Command-line interface.

Exit status is 0 on success, 1 on invalid input and 2 on runtime failure.
Failures print one line ``code=<code>, msg=<message>`` to stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import complexity, estimate, witness
from .divergence import Generator, divergence
from .errors import FdivError, ValidationError
from .io import IoError, csv_report, json_report, read_dist
from .online import AdversarySpec, LearnerSpec, coupling_demo, run_game
from .sampler import exact_output_law, make_plan
from .seeding import child_seed, parallel_map

__all__ = ["main", "build_parser", "dispatch"]

SEED_MAX = 2**64 - 1


class UsageError(ValidationError):
    code = "usage"


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number list: {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(float(v)) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer list: {text!r}") from exc


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("seed must be an integer") from exc
    if not 0 <= v <= SEED_MAX:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fdivsampling", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def out_flag(sp):
        sp.add_argument("--out", help="output path (stdout when omitted)")

    sp = sub.add_parser("div", help="divergence between two JSON distributions")
    sp.add_argument("--gen", required=True)
    sp.add_argument("--nu", required=True)
    sp.add_argument("--mu", required=True)
    out_flag(sp)

    sp = sub.add_parser("complexity", help="sample-complexity and regret bounds (CSV)")
    sp.add_argument("--gen", required=True)
    sp.add_argument("--D", type=float)
    sp.add_argument("--eps", type=float)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--sigma", type=float)
    sp.add_argument("--T", type=int)
    sp.add_argument("--d", type=int, default=1)
    sp.add_argument("--n", type=float, help="budget for lower_bound_tv")
    sp.add_argument("--zeta", type=float, help="tail exponent for lower_bound_tv")
    sp.add_argument("--lam", type=float, help="Renyi order for the FTPL bound")
    sp.add_argument(
        "--bounds",
        type=lambda t: [v for v in t.split(",") if v],
        help="comma-separated bound names; default: every bound whose inputs are given "
        "and whose preconditions hold",
    )
    out_flag(sp)

    sp = sub.add_parser("sample", help="sampler checks")
    ssub = sp.add_subparsers(dest="action", required=True, parser_class=_Parser)
    sv = ssub.add_parser("verify", help="exact TV of the planned sampler (CSV)")
    sv.add_argument("--gen", required=True)
    sv.add_argument("--nu", required=True)
    sv.add_argument("--mu", required=True)
    sv.add_argument("--eps", type=_floats, required=True, help="comma-separated list")
    out_flag(sv)

    sp = sub.add_parser("witness", help="lower-bound witness constructions (CSV)")
    sp.add_argument("--gen", required=True)
    sp.add_argument("--construction", choices=["bernoulli", "linear", "superlinear"], required=True)
    sp.add_argument("--eps", type=float, default=0.1)
    sp.add_argument("--n", type=_ints, default=[8], help="comma-separated budgets")
    sp.add_argument("--zeta", type=float, default=1.0)
    sp.add_argument("--delta", type=float, default=8.0)
    out_flag(sp)

    sp = sub.add_parser("online", help="smoothed online learning")
    osub = sp.add_subparsers(dest="action", required=True, parser_class=_Parser)
    orun = osub.add_parser("run", help="play games over several seeds")
    orun.add_argument("--T", type=int, required=True)
    orun.add_argument("--learner", choices=["ftpl", "relaxation", "ftl"], required=True)
    orun.add_argument(
        "--adversary", choices=["smooth_iid", "atom_mixture", "adaptive_greedy"], required=True
    )
    orun.add_argument("--generator", required=True)
    orun.add_argument("--sigma", type=float, required=True)
    orun.add_argument("--seeds", type=int, default=1, help="number of seeds")
    orun.add_argument("--seed", type=_seed, required=True, help="base seed")
    orun.add_argument("--grid", type=int, default=512, help="base grid size")
    orun.add_argument("--eta", type=float)
    orun.add_argument("--m", type=int, default=64)
    orun.add_argument("--playouts", type=int, default=1)
    orun.add_argument("--c", type=float, default=2.0)
    orun.add_argument("--preset", action="store_true", help="FTPL schedule from (T, sigma, lambda)")
    orun.add_argument("--delta", type=float)
    orun.add_argument("--out", help="prefix for PREFIX.csv and PREFIX.json")

    sp = sub.add_parser("coupling", help="coupling demonstration (JSON)")
    sp.add_argument("--gen", required=True)
    sp.add_argument("--p", required=True)
    sp.add_argument("--mu", required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--T", type=int, required=True)
    out_flag(sp)

    sp = sub.add_parser("estimate", help="mean estimation experiments (CSV)")
    esub = sp.add_subparsers(dest="action", required=True, parser_class=_Parser)
    ec = esub.add_parser("compare", help="uniform errors of both estimators")
    ec.add_argument("--nu", required=True)
    ec.add_argument("--mu", required=True)
    ec.add_argument("--gen", default="renyi:2")
    ec.add_argument("--n-grid", type=_ints, default=[100, 1000, 10000])
    ec.add_argument("--replicates", type=int, default=50)
    ec.add_argument("--seed", type=_seed, required=True)
    out_flag(ec)
    ek = esub.add_parser("kl-knee", help="importance error around exp(KL)")
    ek.add_argument("--nu", required=True)
    ek.add_argument("--mu", required=True)
    ek.add_argument("--n-grid", type=_ints)
    ek.add_argument("--replicates", type=int, default=50)
    ek.add_argument("--seed", type=_seed, required=True)
    out_flag(ek)
    return p


# subcommands ------------------------------------------------------------------
def _config(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "out"}


def _cmd_div(args) -> dict[str, str]:
    g = Generator.parse(args.gen)
    nu, mu = read_dist(args.nu), read_dist(args.mu)
    return {"": json_report(_config(args), {"divergence": divergence(g, nu, mu)})}


def _cmd_complexity(args) -> dict[str, str]:
    g = Generator.parse(args.gen)
    rows = []

    def add(name, value):
        rows.append(
            {"kind": g.kind, "param": g.param, "D": args.D, "eps": args.eps,
             "delta": args.delta, "sigma": args.sigma, "T": args.T, "d": args.d,
             "bound_name": name, "value": value}
        )

    bounds = {
        "upper_bound_n": (("D", "eps"), lambda: complexity.upper_bound_n(g, args.D, args.eps)),
        "lower_bound_n": (
            ("delta", "eps"), lambda: complexity.lower_bound_n(g, args.delta, args.eps)
        ),
        "lower_bound_tv": (
            ("D", "n", "zeta"), lambda: complexity.lower_bound_tv(g, args.D, args.n, args.zeta)
        ),
        "coupling_n": (
            ("sigma", "eps", "delta", "T"),
            lambda: complexity.coupling_n(g, args.sigma, args.eps, args.delta, args.T),
        ),
        "regret": (
            ("sigma", "T"), lambda: complexity.regret_bounds(g, args.sigma, args.T, args.d, args.lam)
        ),
    }
    requested = args.bounds
    if requested is not None:
        unknown = sorted(set(requested) - set(bounds))
        if unknown:
            raise ValidationError(f"unknown bounds {unknown}; choose from {sorted(bounds)}")
    for name, (needs, fn) in bounds.items():
        explicit = requested is not None and name in requested
        if requested is not None and not explicit:
            continue
        missing = [k for k in needs if getattr(args, k) is None]
        if missing:
            if explicit:
                raise ValidationError(f"{name} needs --{', --'.join(missing)}")
            continue
        try:
            value = fn()
        except ValidationError:
            if explicit:
                raise
            continue
        if name == "regret":
            add("regret_minimax", value.minimax)
            add("regret_improper", value.improper)
            add("regret_ftpl", value.ftpl)
        else:
            add(name, value)
    if not rows:
        raise ValidationError("no bound is computable from the given parameters")
    cols = ["kind", "param", "D", "eps", "delta", "sigma", "T", "d", "bound_name", "value"]
    return {"": csv_report(_config(args), cols, rows)}


def _cmd_sample_verify(args) -> dict[str, str]:
    g = Generator.parse(args.gen)
    nu, mu = read_dist(args.nu), read_dist(args.mu)
    D = divergence(g, nu, mu)
    rows = []
    for eps in args.eps:
        plan = make_plan(g, D, eps)
        tv = exact_output_law(nu, mu, plan.M, plan.n).tv_to_target
        rows.append(
            {"eps": eps, "D": D, "M": plan.M, "n": plan.n, "tv_exact": tv,
             "tv_bound_ok": tv <= eps + 1e-10}
        )
    cols = ["eps", "D", "M", "n", "tv_exact", "tv_bound_ok"]
    return {"": csv_report(_config(args), cols, rows)}


def _cmd_witness(args) -> dict[str, str]:
    g = Generator.parse(args.gen)
    rows = []

    def add(n, name, value):
        rows.append(
            {"construction": args.construction, "kind": g.kind, "param": g.param,
             "eps": args.eps, "n": n, "zeta": args.zeta, "delta": args.delta,
             "certified_quantity": name, "value": value}
        )

    if args.construction == "bernoulli":
        from .sampler import clamp_projection

        for n in args.n:
            w = witness.bernoulli_witness(g, args.eps, n)
            add(n, "e_n", w.e_n)
            add(n, "df_value", w.df_value)
            add(n, "df_bound", w.df_bound)
            add(n, "tv_floor", clamp_projection(w.nu, w.mu, n).tv_min)
    elif args.construction == "linear":
        w = witness.linear_witness(g, args.eps)
        add(None, "df_value", w.df_value)
        add(None, "tv_floor", w.tv_floor)
    else:
        law = witness.superlinear_witness(g, args.zeta, args.delta)
        add(None, "t0", law.t0)
        add(None, "beta", law.beta)
        add(None, "mean", law.mean_quadrature())
        add(None, "df_value", law.divergence())
        add(None, "df_upper", law.df_upper)
        add(None, "threshold", law.detect_threshold())
        for n in args.n:
            if n > law.t0:
                add(n, "egamma", law.egamma(n))
                add(n, "e_n_lower", law.e_n_lower(n))
                add(n, "packaged_bound", law.packaged_bound(n))
    cols = ["construction", "kind", "param", "eps", "n", "zeta", "delta",
            "certified_quantity", "value"]
    return {"": csv_report(_config(args), cols, rows)}


def _online_trial(job: tuple) -> dict:
    T, adv, learner, seed = job
    return run_game(T, adv, learner, seed).summary()


def _cmd_online_run(args) -> dict[str, str]:
    if args.seeds < 1:
        raise ValidationError("--seeds must be >= 1")
    g = Generator.parse(args.generator)
    adv = AdversarySpec(args.adversary, args.sigma, g, grid_size=args.grid, delta=args.delta)
    learner = LearnerSpec(
        args.learner, eta=args.eta, m=args.m, n=args.playouts, c=args.c, preset=args.preset
    )
    seeds = [child_seed(args.seed, "trial", i) for i in range(args.seeds)]
    rows = parallel_map(_online_trial, [(args.T, adv, learner, s) for s in seeds])
    regrets = np.array([r["regret"] for r in rows])
    cfg = _config(args)
    cols = ["seed", "T", "regret", "regret_per_round", "cumulative_loss", "best_loss",
            "best_theta", "oracle_calls", "calls_per_round", "max_divergence"]
    aggregate = {
        "mean_regret": float(regrets.mean()),
        "std": float(regrets.std(ddof=1)) if regrets.size > 1 else 0.0,
        "calls_per_round": float(np.mean([r["calls_per_round"] for r in rows])),
        "seeds": seeds,
    }
    return {".csv": csv_report(cfg, cols, rows), ".json": json_report(cfg, aggregate)}


def _cmd_coupling(args) -> dict[str, str]:
    g = Generator.parse(args.gen)
    p, mu = read_dist(args.p), read_dist(args.mu)
    rep = coupling_demo(p, mu, g, args.eps, args.delta, args.T)
    return {"": json_report(_config(args), rep.as_dict())}


ESTIMATE_COLUMNS = ["estimator", "n", "m", "eps", "mean_err", "std_err", "bound_value"]


def _cmd_estimate_compare(args) -> dict[str, str]:
    g = Generator.parse(args.gen)
    nu, mu = read_dist(args.nu), read_dist(args.mu)
    rng = np.random.default_rng(args.seed)
    rows = estimate.compare_experiment(mu, nu, args.n_grid, args.replicates, rng, g)
    return {"": csv_report(_config(args), ESTIMATE_COLUMNS, rows)}


def _cmd_estimate_knee(args) -> dict[str, str]:
    nu, mu = read_dist(args.nu), read_dist(args.mu)
    rng = np.random.default_rng(args.seed)
    rows = estimate.kl_threshold_experiment(mu, nu, args.n_grid, args.replicates, rng)
    return {"": csv_report(_config(args), ESTIMATE_COLUMNS, rows)}


COMMANDS = {
    ("div", None): _cmd_div,
    ("complexity", None): _cmd_complexity,
    ("sample", "verify"): _cmd_sample_verify,
    ("witness", None): _cmd_witness,
    ("online", "run"): _cmd_online_run,
    ("coupling", None): _cmd_coupling,
    ("estimate", "compare"): _cmd_estimate_compare,
    ("estimate", "kl-knee"): _cmd_estimate_knee,
}


def dispatch(args: argparse.Namespace) -> dict[str, str]:
    """Run a parsed command; returns report texts keyed by output suffix."""
    fn = COMMANDS[(args.command, getattr(args, "action", None))]
    return fn(args)


def _emit(reports: dict[str, str], out: str | None) -> None:
    if out is None:
        for text in reports.values():
            sys.stdout.write(text)
        return
    for suffix, text in reports.items():
        Path(out + suffix).write_text(text)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _emit(dispatch(args), args.out)
        return 0
    except (ValidationError, IoError) as exc:
        _fail(exc.code, exc)
        return 1
    except FdivError as exc:
        _fail(exc.code, exc)
        return 2
    except Exception as exc:  # noqa: BLE001
        _fail("runtime", exc)
        return 2


def _fail(code: str, exc: BaseException) -> None:
    msg = " ".join(str(exc).split()) or type(exc).__name__
    sys.stderr.write(f"code={code}, msg={msg}\n")


if __name__ == "__main__":
    sys.exit(main())
