"""Command-line front end: ``soa table | pce | analyze | game``.

Exit codes: 0 success, 2 input or parse error, 3 elementary-table coverage
error, 4 non-converged expansion under ``--strict``.  Reports are JSON with
sorted keys and no timing unless ``--timing`` is given, so that identical
inputs produce byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from . import fairness, game, model as model_mod, pce as pce_mod, spectral
from ._io import atomic_write
from ._rational import format_number
from .errors import ConvergenceError, InputError, SoaError

EXACT, SPECTRAL, CLOSED_FORM, ORDERED = "exact-enumeration", "spectral", "closed-form", "ordered-pce"


def parse_subsets(text: str) -> list:
    """``"1;2;1,2"`` -> ``[(1,), (2,), (1, 2)]``."""
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            raise InputError(f"empty subset in {text!r}")
        try:
            out.append(game.coalition(int(t) for t in chunk.split(",")))
        except ValueError:
            raise InputError(f"subset {chunk!r} is not a comma-separated list of input indices") from None
    return out


def _dump(obj) -> bytes:
    return (json.dumps(obj, sort_keys=True, indent=2) + "\n").encode()


def _emit(obj, out) -> None:
    data = _dump(obj)
    if out in (None, "-"):
        sys.stdout.write(data.decode())
    else:
        atomic_write(Path(out), data)


def _config(args) -> pce_mod.SparseConfig:
    return pce_mod.SparseConfig(
        q=args.q,
        epsilon=args.eps,
        p_max=args.p_max,
        use_chebyshev=args.chebyshev is not None,
        chebyshev_t=args.chebyshev if args.chebyshev is not None else 1.0,
        model_degree_hint=args.degree_hint,
        trust_degree_hint=not args.no_degree_hint,
    )


def _pce_summary(p: pce_mod.Pce) -> dict:
    return {
        "terms": len(p),
        "epsilon_l": pce_mod.truncation_error(p),
        "converged": p.converged,
        "sigma2_estimate": p.variance_estimate,
        "epsilon": p.epsilon,
    }


def _build_pce(mf, args):
    if mf.is_discrete:
        raise InputError("the model has discrete inputs; PCE construction needs continuous inputs")
    p = pce_mod.build_sparse(mf.model, mf.distribution, _config(args), seed=args.seed)
    return p


def _check_strict(p, args):
    if args.strict and not p.converged:
        raise ConvergenceError(
            f"expansion did not reach epsilon={p.epsilon:g} within p_max; "
            f"truncation error {pce_mod.truncation_error(p):.3e}"
        )


# --------------------------------------------------------------------------
# commands


def cmd_table(args) -> int:
    if args.max_order is None:
        args.max_order = min(spectral.DEFAULT_MAX_ORDER, args.d)
    if args.max_order > args.d:
        raise InputError(f"max-order {args.max_order} exceeds d={args.d}")
    out = Path(args.out)
    table = spectral.ElementaryTable.compute(args.d, args.max_order)
    if out.exists():
        existing = spectral.load_table(out)
        if existing == table and out.read_bytes() == table.dumps().encode():
            print(f"{out}: verified {len(table)} entries, unchanged")
            spectral.save_table(table, out)  # restores a missing binary companion only
            return 0
        print(f"{out}: existing table differs, rewriting", file=sys.stderr)
    spectral.save_table(table, out)
    print(f"{out}: wrote {len(table)} entries (d={table.d}, max_order={table.max_order})")
    return 0


def cmd_pce(args) -> int:
    mf = model_mod.load_model_file(args.model)
    start = time.perf_counter()
    p = _build_pce(mf, args)
    obj = p.to_json_obj()
    obj["model_sha256"] = mf.digest
    obj["seed"] = args.seed
    obj["epsilon_l"] = pce_mod.truncation_error(p)
    obj["ordering"] = list(p.distribution.order)
    if args.timing:
        obj["timing_seconds"] = time.perf_counter() - start
    _emit(obj, args.out)
    _check_strict(p, args)
    return 0


def cmd_game(args) -> int:
    mf = model_mod.load_model_file(args.model)
    if not mf.is_discrete:
        raise InputError("soa game needs a model with finite discrete inputs")
    res = model_mod.exact_game(mf.model, mf.discrete_distribution())
    obj = res.game.to_json_obj()
    obj["mean"] = format_number(res.mean)
    obj["variance"] = format_number(res.variance)
    obj["model_sha256"] = mf.digest
    _emit(obj, args.out)
    return 0


def _attribution(u, value, bound, method, **extra) -> dict:
    out = {
        "subset": list(u),
        "value": format_number(value),
        "value_float": float(value),
        "error_bound": format_number(bound),
        "method": method,
    }
    out.update(extra)
    return out


def _linear_coefficients(m) -> tuple:
    """Coefficients of an affine model, verified on random points."""
    d = m.d
    zero = np.zeros(d)
    c0 = m(zero)
    b = np.array([m(np.eye(d)[i]) - c0 for i in range(d)])
    pts = np.random.default_rng(12345).normal(size=(16, d))
    pred = c0 + pts @ b
    got = m.evaluate_batch(pts)
    if not np.allclose(got, pred, rtol=1e-9, atol=1e-9 * (1 + np.abs(got).max())):
        raise InputError("closed-form attribution needs a model that is affine in its inputs")
    return c0, b


def cmd_analyze(args) -> int:
    subsets = parse_subsets(args.subsets)
    start = time.perf_counter()
    report = {"tool": "soa", "version": __version__, "seed": args.seed}
    attributions = []
    if args.pce is not None:
        if args.method not in ("auto", "spectral"):
            raise InputError("a stored PCE can only be analysed spectrally")
        try:
            p = pce_mod.Pce.from_json_obj(json.loads(Path(args.pce).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read PCE file {args.pce}: {exc}") from exc
        report["model"] = None
        report["pce_file"] = str(args.pce)
        report["distribution"] = p.distribution.to_json_obj()
        report["ordering"] = list(p.distribution.order)
        attributions = _spectral(p, subsets, args, report)
    else:
        if args.model is None:
            raise InputError("give --model or --pce")
        mf = model_mod.load_model_file(args.model)
        report["model"] = {"sha256": mf.digest, "expression": mf.model.source, "d": mf.model.d}
        for u in subsets:
            if u[-1] > mf.model.d:
                raise InputError(f"subset {{{game.coalition_key(u)}}} exceeds d={mf.model.d}")
        method = args.method
        if method == "auto":
            method = EXACT if mf.is_discrete else SPECTRAL
        if method == EXACT:
            attributions = _exact(mf, subsets, report)
        elif method == SPECTRAL:
            p = _build_pce(mf, args)
            report["distribution"] = mf.distribution.to_json_obj()
            report["ordering"] = list(mf.distribution.order)
            attributions = _spectral(p, subsets, args, report)
        elif method == ORDERED:
            attributions = _ordered(mf, subsets, args, report)
        else:
            attributions = _closed_form(mf, subsets, report)
    report["attributions"] = attributions

    if args.constraints is not None:
        constraints = fairness.load_constraints(args.constraints)
        table = {tuple(a["subset"]): (_value_of(a), _bound_of(a)) for a in attributions}
        report["verdicts"] = [fairness.check(c, table).to_json_obj() for c in constraints]
    if args.timing:
        report["timing_seconds"] = time.perf_counter() - start
    _emit(report, args.out)
    if "pce" in report and report["pce"] is not None and args.strict and not report["pce"]["converged"]:
        raise ConvergenceError(
            f"expansion did not converge; truncation error {report['pce']['epsilon_l']:.3e}"
        )
    return 0


def _value_of(a):
    v = a["value"]
    return Fraction(v) if isinstance(v, str) else v


def _bound_of(a):
    v = a["error_bound"]
    return Fraction(v) if isinstance(v, str) else v


def _exact(mf, subsets, report) -> list:
    if not mf.is_discrete:
        raise InputError("exact enumeration needs finite discrete inputs")
    res = model_mod.exact_game(mf.model, mf.discrete_distribution())
    dist = mf.discrete_distribution()
    report["distribution"] = (
        {"joint_pmf": dist.to_json_obj()} if isinstance(dist, model_mod.JointPmf) else dist.to_json_obj()
    )
    report["ordering"] = None
    report["pce"] = None
    report["game"] = {"mean": format_number(res.mean), "variance": format_number(res.variance)}
    return [_attribution(u, game.shapley_owen(res.game, u), Fraction(0), EXACT) for u in subsets]


def _spectral(p, subsets, args, report) -> list:
    report["pce"] = _pce_summary(p)
    if args.table is not None:
        table = spectral.load_table(args.table)
        report["table"] = {"path": str(args.table), "d": table.d, "max_order": table.max_order}
    else:
        table = spectral.ElementaryTable(p.d, 0, {})
        report["table"] = None
    extend = args.extend_table or args.table is None
    out = []
    for u in subsets:
        r = spectral.spectral_shapley_owen(p, u, table, extend=extend)
        out.append(_attribution(u, r.estimate, r.error_bound, SPECTRAL,
                                kappa=format_number(r.kappa), epsilon_l=r.epsilon_l))
    return out


def _ordered(mf, subsets, args, report) -> list:
    if mf.is_discrete:
        raise InputError("the ordered-PCE route needs continuous inputs")
    report["distribution"] = mf.distribution.to_json_obj()
    report["orderings"] = [list(o) for o in spectral.covering_orderings(mf.model.d)]
    report["pce"] = None
    results = spectral.ordered_shapley_owen(mf.model, mf.distribution, _config(args), subsets, seed=args.seed)
    return [
        _attribution(r.subset, r.estimate, r.error_bound, ORDERED, kappa=format_number(r.kappa), epsilon_l=r.epsilon_l)
        for r in results
    ]


def _closed_form(mf, subsets, report) -> list:
    dist = mf.distribution
    if dist is None or not dist.is_mvnormal:
        raise InputError("closed-form attribution needs a multivariate normal distribution")
    if any(len(u) != 1 for u in subsets):
        raise InputError("closed-form attribution covers single inputs only")
    _, b = _linear_coefficients(mf.model)
    sh = game.closed_form_linear_gaussian(b, dist.mean, dist.cov)
    report["distribution"] = dist.to_json_obj()
    report["ordering"] = None
    report["pce"] = None
    return [_attribution(u, float(sh[u[0] - 1]), 0.0, CLOSED_FORM) for u in subsets]


# --------------------------------------------------------------------------
# argument parsing


def _pce_flags(p):
    p.add_argument("--q", type=float, default=1.0, help="q-norm of the truncation rings, 0 < q <= 1")
    p.add_argument("--eps", type=float, default=1e-10, help="target truncation error")
    p.add_argument("--p-max", type=int, default=10, help="largest ring to explore")
    p.add_argument("--chebyshev", type=float, metavar="T", default=None,
                   help="stop on the Chebyshev tail criterion with threshold T")
    p.add_argument("--degree-hint", type=int, default=10, help="assumed polynomial degree of the model")
    p.add_argument("--no-degree-hint", action="store_true",
                   help="do not treat the model as a polynomial of degree <= --degree-hint")


def _common_flags(p, suppress: bool):
    # subcommands repeat the global flags; suppressed defaults keep them from
    # overwriting values given before the subcommand name
    def dflt(v):
        return argparse.SUPPRESS if suppress else v

    p.add_argument("--seed", type=int, default=dflt(0), help="seed for Monte Carlo fallbacks (default 0)")
    p.add_argument("--strict", action="store_true", default=dflt(False),
                   help="exit 4 when an expansion does not converge")
    p.add_argument("--threads", type=int, default=dflt(1),
                   help="worker count; computations currently run serially and deterministically")
    p.add_argument("--timing", action="store_true", default=dflt(False), help="add wall-clock timing to reports")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    _common_flags(common, suppress=True)

    parser = argparse.ArgumentParser(prog="soa", description="Shapley and Shapley-Owen attributions for fairness.")
    _common_flags(parser, suppress=False)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("table", parents=[common], help="precompute the elementary Shapley-Owen table")
    t.add_argument("--d", type=int, required=True)
    t.add_argument("--max-order", type=int, default=None)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_table)

    pc = sub.add_parser("pce", parents=[common], help="build and store a sparse PCE of a model")
    pc.add_argument("--model", required=True)
    _pce_flags(pc)
    pc.add_argument("--out", default="-")
    pc.set_defaults(func=cmd_pce)

    an = sub.add_parser("analyze", parents=[common], help="compute attributions and fairness verdicts")
    src = an.add_mutually_exclusive_group(required=True)
    src.add_argument("--model")
    src.add_argument("--pce")
    an.add_argument("--table", default=None, help="elementary table (JSON or .bin)")
    an.add_argument("--extend-table", action="store_true",
                    help="compute table entries missing from --table instead of failing")
    an.add_argument("--subsets", required=True, help='subsets like "1;2;1,2"')
    an.add_argument("--constraints", default=None)
    an.add_argument("--method", default="auto", choices=["auto", EXACT, SPECTRAL, ORDERED, CLOSED_FORM])
    _pce_flags(an)
    an.add_argument("--out", default="-")
    an.set_defaults(func=cmd_analyze)

    g = sub.add_parser("game", parents=[common], help="dump the enumerated game of a discrete model")
    g.add_argument("--model", required=True)
    g.add_argument("--out", default="-")
    g.set_defaults(func=cmd_game)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    try:
        return args.func(args)
    except SoaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
