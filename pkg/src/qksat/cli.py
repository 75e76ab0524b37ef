"""Command-line front end.

Structured artifacts are written as JSON and sweep tables as CSV, either to
``--out`` or to standard output. Exit codes: 0 success, 1 a verification
suite found a violation, 2 usage or input error, 3 the tester could not
reach a verdict.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from . import assignment as asg
from . import bounds as bd
from .instance import (
    SAT_PRODUCT,
    InstanceCertificate,
    gen_far,
    gen_random,
    gen_satisfiable,
    instance_to_dict,
    load_instance,
    restrict,
)
from .linalg import ghz_state, haar_state, product_state, rng_from
from .solver import check_product
from .suites import CSV_HEADER, GROUPS, SUITES, run_suite
from .tester import INCONCLUSIVE, ROC_HEADER, TesterConfig, roc_sweep, rows_to_csv, run_tester
from .walkthrough import walkthrough

EXIT_OK = 0
EXIT_SUITE_FAILED = 1
EXIT_USAGE = 2
EXIT_INCONCLUSIVE = 3


class UsageError(Exception):
    pass


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("QSAT_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"QSAT_SEED must be an integer, got {env!r}") from None


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a rational number, got {text!r}") from None


# ---------------------------------------------------------------------------
# commands


def cmd_generate(args) -> int:
    seed = _seed(args)
    cert = None
    if args.mode in ("product", "entangled"):
        inst, cert = gen_satisfiable(args.n, args.k, seed, mode=args.mode)
        residual = cert.witness_residual(inst)
        if residual > 1e-9:
            raise RuntimeError(f"planted witness residual {residual:.3g} exceeds 1e-9")
    elif args.mode == "far":
        inst, cert = gen_far(args.n, args.k, seed, args.family, rho=args.rho)
    else:
        inst = gen_random(args.n, args.k, seed, density=args.density)
    _emit(args, _dump_json(instance_to_dict(inst, cert)))
    return EXIT_OK


def cmd_restrict(args) -> int:
    inst, cert = load_instance(args.input)
    local = restrict(inst, args.subset)
    sub = None
    if cert is not None and cert.kind == SAT_PRODUCT and cert.witness is not None:
        # a product witness restricts factor by factor
        sub = InstanceCertificate(SAT_PRODUCT, cert.witness[sorted(args.subset)], "product")
    _emit(args, _dump_json(instance_to_dict(local, sub)))
    return EXIT_OK


def cmd_check_product(args) -> int:
    inst, _ = load_instance(args.input)
    v = check_product(inst, args.backend, restarts=args.restarts, seed=_seed(args), time_limit=args.time_limit)
    _emit(args, _dump_json(v.to_dict()))
    return EXIT_OK


def cmd_test(args) -> int:
    inst, cert = load_instance(args.input)
    eps = args.eps
    if eps is None and cert is not None and cert.eps is not None:
        eps = float(cert.eps)
    cfg = TesterConfig(
        c=args.c,
        m=args.m,
        delta_fail=args.delta_fail if args.m is None else None,
        p_single=args.p_single,
        backend=args.backend,
        seed=_seed(args),
        eps=eps,
        restarts=args.restarts,
        timings=args.timings,
    )
    rep = run_tester(inst, cfg, jobs=args.jobs)
    _emit(args, _dump_json(rep.to_dict()))
    print(f"{rep.majority} confidence={rep.confidence:.4f} indeterminate={rep.indeterminate_count}", file=sys.stderr)
    return EXIT_INCONCLUSIVE if rep.majority == INCONCLUSIVE else EXIT_OK


def cmd_verify_lemmas(args) -> int:
    rows = run_suite(args.suite, _seed(args), max_n=args.max_n, scale=args.scale, jobs=args.jobs)
    _emit(args, rows_to_csv([r.to_dict(args.timings) for r in rows], CSV_HEADER))
    failed = [r for r in rows if not r.ok]
    for r in failed:
        print(f"FAIL {r.suite}/{r.check} {r.params}: {r.failures}/{r.trials} {r.detail}", file=sys.stderr)
    print(f"{len(rows) - len(failed)}/{len(rows)} checks passed", file=sys.stderr)
    return EXIT_SUITE_FAILED if failed else EXIT_OK


def cmd_bounds(args) -> int:
    out: dict = {}
    if args.psi:
        _need(args, "p", "c")
        out["psi"] = bd.psi_terms(args.p, args.c).to_dict()
    if args.gamma:
        _need(args, "k", "eps")
        g = bd.gamma(args.k, args.eps)
        out["gamma"] = {"k": args.k, "eps": str(args.eps), "value": str(g), "chain_length": bd.chain_length(args.k, args.eps)}
    if args.phi:
        _need(args, "k", "eps")
        chain = bd.phi_chain(args.k, args.eps, args.depth, gamma_override=args.gamma_override)
        out["phi"] = {"depth_cap": args.depth, "chain": [b.to_dict() for b in chain]}
    if args.c_const:
        _need(args, "k", "eps")
        out["c"] = bd.c_of_k_eps(args.k, args.eps, args.depth, gamma_override=args.gamma_override).to_dict()
    if args.samples:
        out["samples"] = {
            "p_single": args.p_single,
            "delta_fail": args.delta_fail,
            "m": bd.chernoff_samples(args.p_single, args.delta_fail),
        }
    if args.delta:
        _need(args, "alpha", "beta", "n")
        out["delta"] = {
            "alpha": args.alpha,
            "beta": args.beta,
            "n": args.n,
            "value": bd.delta_concentration(args.alpha, args.beta, args.n),
        }
    if args.k_const:
        _need(args, "A")
        out["k_constant"] = {"A": args.A, "value": bd.k_constant(args.A)}
    if args.a_k4:
        out["a_for_k4"] = bd.a_for_k4()
    if not out:
        raise UsageError("choose at least one evaluator (--psi, --gamma, --phi, --c-const, --samples, --delta, --k-const, --a-k4)")
    _emit(args, _dump_json(out))
    return EXIT_OK


def _need(args, *names) -> None:
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError("missing " + ", ".join("--" + n.replace("_", "-") for n in missing))


def cmd_chain(args) -> int:
    inst, cert = load_instance(args.input)
    eps = args.eps
    if eps is None:
        if cert is None or cert.eps is None:
            raise UsageError("--eps is required when the instance has no farness certificate")
        eps = cert.eps
    max_len = args.max_len if args.max_len is not None else min(bd.chain_length(inst.k, eps), inst.n)
    rec = asg.grow_chain(inst, eps, max_len, seed=_seed(args))
    out = {
        "eps": str(eps),
        "bad_census": asg.bad_census(inst, asg.ProductAssignment.empty(), eps),
        "census_limit": float(Fraction(eps) * inst.n / 5),
        "decrease_violations": rec.decrease_violations(),
        "chain": rec.to_dict(),
    }
    _emit(args, _dump_json(out))
    return EXIT_OK


def _load_state(path: str) -> np.ndarray:
    with open(path) as fh:
        d = json.load(fh)
    amps = d["state"] if isinstance(d, dict) else d
    return np.array([complex(re, im) for re, im in amps])


def cmd_walkthrough(args) -> int:
    seed = _seed(args)
    if args.state:
        psi = _load_state(args.state)
    elif args.kind == "ghz":
        psi = ghz_state(args.n)
    elif args.kind == "product":
        rng = rng_from(seed)
        f = rng.standard_normal((args.n, 2)) + 1j * rng.standard_normal((args.n, 2))
        psi = product_state(list(f / np.linalg.norm(f, axis=1, keepdims=True)))
    else:
        psi = haar_state(args.n, rng_from(seed))
    trace = walkthrough(psi, args.c, seed, ties=args.ties)
    _emit(args, _dump_json(trace.to_dict()))
    return EXIT_OK


def cmd_roc(args) -> int:
    rows = roc_sweep(args.families, args.cs, args.ms, args.trials, _seed(args), n=args.n, k=args.k, backend=args.backend, jobs=args.jobs)
    _emit(args, rows_to_csv(rows, ROC_HEADER))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="RNG seed (falls back to QSAT_SEED, then 0)")
    common.add_argument("--out", default=None, help="output path (default: standard output)")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes for per-sample work")

    p = argparse.ArgumentParser(prog="qksat", description="Product-state testing for quantum k-SAT.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="generate an instance with its certificate")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--mode", choices=["product", "entangled", "far", "random"], default="product")
    g.add_argument("--family", choices=["all-identity", "dense-local-block"], default="all-identity")
    g.add_argument("--rho", type=float, default=0.5, help="block fraction for dense-local-block")
    g.add_argument("--density", type=float, default=1.0, help="fraction of constrained subsets for random mode")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("restrict", parents=[common], help="restrict an instance to a qubit subset")
    r.add_argument("--in", dest="input", required=True)
    r.add_argument("--subset", type=_int_list, required=True, help="comma-separated qubits")
    r.set_defaults(func=cmd_restrict)

    c = sub.add_parser("check-product", parents=[common], help="decide product satisfiability of a small instance")
    c.add_argument("--in", dest="input", required=True)
    c.add_argument("--backend", choices=["numeric", "exact", "both"], default="numeric")
    c.add_argument("--restarts", type=int, default=50)
    c.add_argument("--time-limit", type=float, default=None, help="seconds for the exact backend")
    c.set_defaults(func=cmd_check_product)

    t = sub.add_parser("test", parents=[common], help="run the sampling tester")
    t.add_argument("--in", dest="input", required=True)
    t.add_argument("--c", type=int, default=None, help="subset size (default max(k+1, 4))")
    t.add_argument("--m", type=int, default=None, help="number of samples")
    t.add_argument("--delta-fail", type=float, default=0.01, help="failure probability used when --m is absent")
    t.add_argument("--p-single", type=float, default=0.75)
    t.add_argument("--backend", choices=["numeric", "exact", "both"], default="numeric")
    t.add_argument("--restarts", type=int, default=50)
    t.add_argument("--eps", type=float, default=None)
    t.add_argument("--timings", action="store_true", help="record per-sample wall time (not reproducible)")
    t.set_defaults(func=cmd_test)

    v = sub.add_parser("verify-lemmas", parents=[common], help="run verification sweeps and write a CSV")
    v.add_argument("--suite", choices=sorted(SUITES) + sorted(GROUPS), default="all")
    v.add_argument("--max-n", type=int, default=None)
    v.add_argument("--scale", type=float, default=1.0, help="multiplier on trial counts")
    v.add_argument("--timings", action="store_true")
    v.set_defaults(func=cmd_verify_lemmas)

    b = sub.add_parser("bounds", parents=[common], help="evaluate closed-form constants")
    b.add_argument("--psi", action="store_true")
    b.add_argument("--gamma", action="store_true")
    b.add_argument("--phi", action="store_true")
    b.add_argument("--c-const", action="store_true")
    b.add_argument("--samples", action="store_true")
    b.add_argument("--delta", action="store_true")
    b.add_argument("--k-const", action="store_true")
    b.add_argument("--a-k4", action="store_true")
    b.add_argument("--p", type=float)
    b.add_argument("--c", type=int)
    b.add_argument("--k", type=int)
    b.add_argument("--eps", type=_fraction)
    b.add_argument("--depth", type=int, default=3, help="recurrence steps to evaluate")
    b.add_argument("--gamma-override", type=int, default=None, help="replace the chain length")
    b.add_argument("--p-single", type=float, default=0.75)
    b.add_argument("--delta-fail", type=float, default=0.01)
    b.add_argument("--alpha", type=float)
    b.add_argument("--beta", type=float)
    b.add_argument("--n", type=int)
    b.add_argument("--A", type=float)
    b.set_defaults(func=cmd_bounds)

    ch = sub.add_parser("chain", parents=[common], help="grow a heavy-qubit chain on a small instance")
    ch.add_argument("--in", dest="input", required=True)
    ch.add_argument("--eps", type=_fraction, default=None, help="farness (default: from the certificate)")
    ch.add_argument("--max-len", type=int, default=None)
    ch.set_defaults(func=cmd_chain)

    w = sub.add_parser("walkthrough", parents=[common], help="replay the hypergraph stages on a small state")
    w.add_argument("--state", default=None, help="JSON file with a list of [re, im] amplitudes")
    w.add_argument("--kind", choices=["haar", "ghz", "product"], default="haar")
    w.add_argument("--n", type=int, default=7)
    w.add_argument("--c", type=int, default=3)
    w.add_argument("--ties", choices=["both", "first"], default="both")
    w.set_defaults(func=cmd_walkthrough)

    o = sub.add_parser("roc", parents=[common], help="empirical tester error rates")
    o.add_argument("--families", type=_str_list, default=["product", "all-identity", "dense-local-block"])
    o.add_argument("--cs", type=_int_list, default=[3, 4])
    o.add_argument("--ms", type=_int_list, default=[5, 15])
    o.add_argument("--trials", type=int, default=10)
    o.add_argument("--n", type=int, default=12)
    o.add_argument("--k", type=int, default=2)
    o.add_argument("--backend", choices=["numeric", "exact", "both"], default="numeric")
    o.set_defaults(func=cmd_roc)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be at least 1")
    try:
        return args.func(args)
    except (UsageError, ValueError, KeyError, OSError, json.JSONDecodeError) as err:
        print(f"qksat {args.command}: error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
