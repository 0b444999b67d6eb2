"""Command-line front end.

Exit codes: 0 success, 1 certification or generation failure, 2 usage or
input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import __version__
from .enflo import derive_seed, full_report
from .normbounds import PSI_CONSTANT, psi_sample_check
from .partitions import STRATEGIES, GenerationError, PartitionSet, generate_partitions

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class InputError(Exception):
    pass


def _positive(name):
    def conv(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be an integer") from None
        if v < 1:
            raise argparse.ArgumentTypeError(f"{name} must be >= 1")
        return v

    return conv


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="oapcert", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"oapcert {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", type=Path, default=None)
        sp.add_argument("--format", choices=("json", "csv"), default="json")

    g = sub.add_parser("gen-partitions", help="generate a certified partition file")
    g.add_argument("--n-max", type=_positive("--n-max"), default=12)
    g.add_argument("--strategy", choices=STRATEGIES, default="greedy")
    common(g)

    v = sub.add_parser("verify", help="run the full certification")
    v.add_argument("--n-max", type=_positive("--n-max"), default=10)
    v.add_argument("--partitions", type=Path, default=None, help="partition file covering levels 1..n_max+2")
    v.add_argument("--strategy", choices=STRATEGIES, default="greedy", help="used when no file is given")
    v.add_argument("--samples", type=_positive("--samples"), default=20)
    v.add_argument("--dim", type=_positive("--dim"), default=4)
    v.add_argument("--dense-max", type=int, default=10, help="largest level for the dense SVD")
    v.add_argument("--block-max", type=int, default=8, help="largest level for per-block certificates")
    common(v)

    s = sub.add_parser("sample", help="sample the Psi inequality on Nabla blocks")
    s.add_argument("--partitions", type=Path, required=True)
    s.add_argument("--level", type=int, required=True, help="level of the Nabla blocks")
    s.add_argument("--block", default=None, help="comma-separated block members (default: every block)")
    s.add_argument("--samples", type=_positive("--samples"), default=200)
    s.add_argument("--dim", type=_positive("--dim"), default=4)
    common(s)
    return p


def _load(path: Path) -> PartitionSet:
    try:
        return PartitionSet.load(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except ValueError as exc:
        raise InputError(f"invalid partition file {path}: {exc}") from exc


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def cmd_gen_partitions(args) -> int:
    try:
        pset = generate_partitions(args.n_max, args.strategy, args.seed)
    except GenerationError as exc:
        print(f"generation failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _emit(pset.dumps(), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.n_max < 2:
        raise InputError("--n-max must be >= 2")
    if args.partitions is not None:
        pset = _load(args.partitions)
    else:
        try:
            pset = generate_partitions(args.n_max + 2, args.strategy, args.seed)
        except GenerationError as exc:
            print(f"generation failed: {exc}", file=sys.stderr)
            return EXIT_FAIL
    try:
        report = full_report(
            args.n_max, pset, seed=args.seed, samples=args.samples, dim=args.dim,
            dense_max=args.dense_max, block_max=args.block_max,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    if args.out is None:
        _emit(report.to_json() if args.format == "json" else report.to_csv(), None)
    else:
        args.out.with_suffix(".json").write_text(report.to_json())
        args.out.with_suffix(".csv").write_text(report.to_csv())
    fail = report.first_failure()
    if fail is not None:
        print(f"FAILED {fail.name}: {fail.detail}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_sample(args) -> int:
    pset = _load(args.partitions)
    if args.level not in pset:
        raise InputError(f"level {args.level} not in the partition file")
    blocks = pset[args.level].nabla
    if args.block is not None:
        try:
            wanted = sorted(int(x) for x in args.block.split(","))
        except ValueError:
            raise InputError(f"bad --block {args.block!r}") from None
        if wanted not in blocks:
            raise InputError(f"{wanted} is not a Nabla_{args.level} block")
        selected = [(blocks.index(wanted), wanted)]
    else:
        selected = list(enumerate(blocks))
    rows = []
    for idx, A in selected:
        try:
            rep = psi_sample_check(A, pset, dim=args.dim, samples=args.samples, seed=derive_seed(args.seed, args.level, idx))
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        rows.append({"block": A, "max_ratio": float(format(rep.max_ratio, ".15g")), "ok": rep.ok})
    ok = all(r["ok"] for r in rows)
    doc = {
        "tool": "oapcert",
        "version": __version__,
        "level": args.level,
        "seed": args.seed,
        "samples": args.samples,
        "dim": args.dim,
        "bound": PSI_CONSTANT,
        "passed": ok,
        "blocks": rows,
    }
    if args.format == "json":
        text = json.dumps(doc, indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["block", "max_ratio", "ok"])
        for r in rows:
            w.writerow([" ".join(map(str, r["block"])), format(r["max_ratio"], ".15g"), r["ok"]])
        text = buf.getvalue()
    _emit(text, args.out)
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {"gen-partitions": cmd_gen_partitions, "verify": cmd_verify, "sample": cmd_sample}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
