"""Command line interface.

Subcommands: ``train`` fits a transform chain to image patches and saves
it, ``eval`` re-codes a corpus against a saved chain, ``sopot`` quantizes
one scalar, ``decompose`` factors a dense matrix, ``experiment`` runs a
grid from a JSON config into a CSV.
"""

import argparse
import sys

import numpy as np

from . import backend
from .chainio import load_chain, save_chain
from .coding import SparseCode, hard_threshold, normalize_columns, omp
from .errors import ShiftAddError
from .experiment import run_experiment
from .factors import apply_inverse, chain_op_count, coding_cost, materialize
from .harness import CostModel, decompose_dense, evaluate, weighted_cost
from .images import PatchConfig, ingest
from .learners import LearnConfig, learn_b, learn_b_kron, learn_m, learn_o, learn_s
from .linalg import frobenius_sq
from .sopot import INFINITE_PRECISION, quantize

_LEARNERS = {
    "B": learn_b,
    "M": learn_m,
    "M-greedy": learn_m,
    "BKron": learn_b_kron,
    "O": learn_o,
    "S": learn_s,
}


def _parse_p(text):
    return INFINITE_PRECISION if text == "inf" else int(text)


def _add_common(sub):
    sub.add_argument("--patch-side", type=int, default=8)
    sub.add_argument("--gamma", type=float, default=6.0)
    sub.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="shiftadd",
        description="Learn and evaluate shift-add friendly linear transforms",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    train = subs.add_parser("train", help="fit a transform chain to image patches")
    train.add_argument("--algo", required=True, choices=sorted(_LEARNERS))
    train.add_argument("--images", nargs="+", required=True)
    train.add_argument("--m", type=int, default=16)
    train.add_argument("--q", type=int, default=4)
    train.add_argument("--s", type=int, required=True)
    train.add_argument("--p", type=_parse_p, default="inf",
                       help="coefficient precision (integer or 'inf')")
    train.add_argument("--k-iters", type=int, default=None)
    train.add_argument("--matcher", choices=["exact", "greedy"], default="exact")
    train.add_argument("--out", required=True)
    _add_common(train)

    ev = subs.add_parser("eval", help="evaluate a saved chain on a corpus")
    ev.add_argument("--chain", required=True)
    ev.add_argument("--images", nargs="+", required=True)
    ev.add_argument("--s", type=int, required=True)
    _add_common(ev)

    sp = subs.add_parser("sopot", help="quantize a scalar to signed powers of two")
    sp.add_argument("value", type=float)
    sp.add_argument("--p", type=int, required=True)

    dec = subs.add_parser("decompose", help="factor a dense matrix into a chain")
    dec.add_argument("--matrix", required=True,
                     help="whitespace-delimited text matrix")
    dec.add_argument("--out", required=True)

    exp = subs.add_parser("experiment", help="run a config grid into a CSV")
    exp.add_argument("--config", required=True)
    exp.add_argument("--out", required=True)
    return parser


def _code_for_chain(chain, data, s):
    """Re-derive codes for a stored chain using its family's coder."""
    if chain.family == "S":
        s_mat = materialize(chain)
        s_norm, scales = normalize_columns(s_mat)
        coded = omp(data.y, s_norm, s)
        return SparseCode(x=scales[:, None] * coded.x, s=s)
    return hard_threshold(apply_inverse(chain, data.y), s)


def _print_summary(chain, eps, gamma):
    ops = chain_op_count(chain)
    model = CostModel(gamma=gamma)
    print(f"family: {chain.family}  factors: {len(chain)}  n: {chain.n}")
    print(f"epsilon: {eps:.6f} %")
    print(
        f"ops/column: {ops.additions} adds, {ops.multiplications} mults, "
        f"{ops.shifts} shifts  (weighted cost {weighted_cost(ops, model):.1f}, "
        f"gamma={gamma:g})"
    )
    print(f"coding bits: {coding_cost(chain):.1f}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ShiftAddError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    if args.command == "train":
        data = ingest(args.images, PatchConfig(patch_side=args.patch_side))
        cfg = LearnConfig(
            s=args.s,
            m=args.m,
            q=args.q,
            p=args.p,
            k_iters=args.k_iters,
            matcher="greedy" if args.algo == "M-greedy" else args.matcher,
            seed=args.seed,
        )
        chain, code, report = _LEARNERS[args.algo](data, cfg)
        save_chain(chain, args.out)
        print(f"backend: {backend.backend_name()}")
        _print_summary(chain, evaluate(data.y, chain, code), args.gamma)
        print(f"saved chain to {args.out}")
        return 0

    if args.command == "eval":
        chain = load_chain(args.chain)
        data = ingest(args.images, PatchConfig(patch_side=args.patch_side))
        code = _code_for_chain(chain, data, args.s)
        _print_summary(chain, evaluate(data.y, chain, code), args.gamma)
        return 0

    if args.command == "sopot":
        value = quantize(args.value, args.p)
        terms = " ".join(
            f"{'+' if s > 0 else '-'}2^{e}" for s, e in value.terms
        ) or "0"
        print(f"terms: {terms}")
        print(f"value: {value.value!r}")
        print(f"abs error: {abs(value.value - args.value):.3e}")
        return 0

    if args.command == "decompose":
        mat = np.loadtxt(args.matrix, ndmin=2)
        chain = decompose_dense(mat)
        save_chain(chain, args.out)
        recon = materialize(chain)
        err = np.sqrt(frobenius_sq(recon - mat) / max(frobenius_sq(mat), 1e-300))
        shears = sum(1 for f in chain.factors if f.kind == "SHEAR")
        scales = sum(1 for f in chain.factors if f.kind == "SCALE")
        swaps = sum(1 for f in chain.factors if f.kind == "B")
        print(
            f"decomposed {mat.shape[0]}x{mat.shape[1]} matrix: "
            f"{shears} shears, {scales} scalings, {swaps} swaps"
        )
        print(f"relative reconstruction error: {err:.3e}")
        print(f"saved chain to {args.out}")
        return 0

    if args.command == "experiment":
        rows = run_experiment(args.config, args.out)
        print(f"wrote {len(rows)} rows to {args.out}")
        return 0

    raise AssertionError("unreachable")


if __name__ == "__main__":
    raise SystemExit(main())
