"""
Command line entry point

    python -m engine.bench_cli gen-corpus   --records 1000 --sd 100 --out corpus.txt
    python -m engine.bench_cli gen-workload --corpus corpus.txt --out queries.txt
    python -m engine.bench_cli build        --mode lpms-d --corpus corpus.txt --queries queries.txt
    python -m engine.bench_cli query        --corpus corpus.txt --queries queries.txt --index idx.mgidx
    python -m engine.bench_cli bench exp3   --records 2000 --queries 100 --seed 7
    python -m engine.bench_cli verify       --corpus corpus.txt --index idx.mgidx

Exit codes: 0 ok, 1 usage, 2 data error, 3 internal invariant violation.
"""

import argparse
import logging
import os
import sys

current_dir = os.path.dirname(os.path.abspath(__file__))
project_root = os.path.dirname(current_dir)
sys.path.insert(0, project_root)

from engine import experiments
from engine.index_store import build_index, load_index, save_index
from engine.metrics import compute_metrics, format_rate
from engine.pipeline import select_grams
from engine.synthgen import (
    corpus_spec_from_mapping,
    gen_corpus,
    gen_workload,
    workload_spec_from_mapping,
)
from logic.config import load_settings, read_key_value_file
from logic.corpus import load_corpus, write_corpus
from logic.errors import InvariantViolation, MultigramError
from logic.lpms import MODES, PREFIX_FREE_MODES, save_selection, verify_prefix_free
from logic.matcher import answers_frame, evaluate_workload
from logic.querylang import load_prosite_file, load_queries, write_queries

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ============================
# SUBCOMMANDS
# ============================

def _spec_values(path, flags):
    """key=value file (when given) overridden by the explicitly passed flags"""
    values = read_key_value_file(path) if path else {}
    values.update({k: str(v) for k, v in flags.items() if v is not None})
    return values


def cmd_gen_corpus(args):
    spec = corpus_spec_from_mapping(_spec_values(args.spec, {
        "alphabet": args.alphabet, "records": args.records, "record_len": args.record_len,
        "sd": args.sd, "mean": args.mean, "grams": args.grams, "seed": args.seed,
    }))
    corpus = gen_corpus(spec)
    write_corpus(corpus, args.out)
    print(f"✓ Wrote {len(corpus)} records ({corpus.total_chars} characters) to {args.out}")
    return EXIT_OK


def cmd_gen_workload(args):
    corpus = load_corpus(args.corpus)
    spec = workload_spec_from_mapping(_spec_values(args.spec, {
        "key_count": args.key_count, "key_len": args.key_len, "gap": args.gap,
        "sample_fraction": args.sample_fraction, "seed": args.seed,
    }))
    queries = gen_workload(corpus, spec)
    write_queries(queries, args.out)
    print(f"✓ Wrote {len(queries)} queries to {args.out}")
    return EXIT_OK


def _load_workload(args):
    if not args.queries:
        return []
    return load_prosite_file(args.queries) if args.prosite else load_queries(args.queries)


def _settings(args):
    return load_settings(args.config, min_len=args.min_len, seed=args.seed,
                         best_top_k=getattr(args, "top_k", None),
                         free_selectivity=getattr(args, "selectivity", None))


def cmd_build(args):
    mode = args.mode.upper()
    if mode != "FREE" and not args.queries:
        raise MultigramError(f"{mode} needs a workload (--queries)")
    corpus = load_corpus(args.corpus)
    queries = _load_workload(args)
    selection = select_grams(corpus, queries, mode, _settings(args))

    print(f"✓ {selection.mode}: {len(selection)} grams, total support {selection.total_support}")
    if selection.full_scan:
        print(f"⚠️ {len(selection.full_scan)} sub-queries cannot use the index")
    if args.selection:
        save_selection(selection, args.selection)
        print(f"✓ Selection saved to {args.selection}")
    if args.out:
        index = build_index(corpus, selection)
        save_index(index, args.out)
        print(f"✓ Index saved to {args.out} ({index.posting_size} postings)")
    if args.stats:
        selection.stats_frame().to_csv(args.stats, index=False)
    if not args.selection and not args.out:
        for g in selection.grams:
            print(g)
    return EXIT_OK


def cmd_query(args):
    corpus = load_corpus(args.corpus)
    queries = _load_workload(args)
    index = None
    if not args.no_index:
        if not args.index:
            raise MultigramError("query needs --index or --no-index")
        index = load_index(args.index, corpus)

    answers = evaluate_workload(index, corpus, queries, single_gram=args.single_gram)
    frame = answers_frame(answers)
    if args.out:
        frame.to_csv(args.out, index=False)
        print(f"✓ {len(answers)} queries answered, {len(frame)} matches written to {args.out}")
    else:
        sys.stdout.write(frame.to_csv(index=False))
    if index is not None and args.metrics:
        truth = evaluate_workload(None, corpus, queries)
        metrics = compute_metrics(answers, index, truth)
        print(f"  hit rate: {format_rate(metrics.hit_rate)}")
        print(f"  precision: {format_rate(metrics.precision_mean)}")
        print(f"  correct queries: {metrics.correct_queries}/{metrics.queries}")
    return EXIT_OK


def cmd_bench(args):
    out_dir = args.out or os.path.join("results", args.experiment)
    runners = {
        "exp1": lambda: experiments.run_exp1(
            out_dir, records=args.records or 10000, queries=args.queries or 100,
            seeds=tuple(range(args.seed, args.seed + args.seeds)), plots=args.plots),
        "exp2": lambda: experiments.run_exp2(
            out_dir, queries=args.queries or 200, seed=args.seed, plots=args.plots),
        "exp3": lambda: experiments.run_exp3(
            out_dir, records=args.records or 2000, queries=args.queries or 100,
            seed=args.seed, plots=args.plots),
        "exp4": lambda: experiments.run_exp4(
            out_dir, records=args.records or 1000, seed=args.seed, plots=args.plots),
        "exp5": lambda: experiments.run_exp5(
            out_dir, signatures_path=args.signatures or experiments.SIGNATURES_PATH,
            records=args.records or 1000, seed=args.seed, plots=args.plots),
    }
    result = runners[args.experiment]()
    print(f"✓ {args.experiment} written to {out_dir}")
    if hasattr(result, "to_string"):
        print(result.to_string(index=False))
    return EXIT_OK


def cmd_verify(args):
    """Re-derive the index from the corpus and check every stored invariant"""
    corpus = load_corpus(args.corpus)
    index = load_index(args.index, corpus)
    print(f"✓ Checksum and fingerprint match ({len(index.grams)} grams)")

    if index.meta.mode in PREFIX_FREE_MODES:
        check = verify_prefix_free(index.grams)
        if not check.ok:
            raise InvariantViolation(f"index is not prefix-free: {check.pair}")
        if index.posting_size > corpus.total_chars:
            raise InvariantViolation(
                f"{index.posting_size} postings exceed {corpus.total_chars} character positions"
            )
        print(f"✓ Prefix-free, {index.posting_size} postings <= {corpus.total_chars} characters")

    for g in index.grams:
        containing = [rid for rid, text in enumerate(corpus.records) if g in text]
        if list(index.postings[g]) != containing:
            raise InvariantViolation(f"posting list of {g!r} does not match the corpus")
    print("✓ Posting lists match the corpus")

    if args.queries:
        queries = _load_workload(args)
        indexed = evaluate_workload(index, corpus, queries)
        scanned = evaluate_workload(None, corpus, queries)
        for a, t in zip(indexed, scanned):
            if a.matched != t.matched:
                raise InvariantViolation(f"query {a.query_id}: indexed answer differs from full scan")
        print(f"✓ {len(queries)} indexed answers equal full scan")
    return EXIT_OK


# ============================
# PARSER
# ============================

def _common(sub, workload=True):
    sub.add_argument("--corpus", required=True, help="newline-delimited corpus file")
    if workload:
        sub.add_argument("--queries", help="query file, one query per line")
        sub.add_argument("--prosite", action="store_true", help="queries are PROSITE signatures")


def build_parser():
    parser = _Parser(prog="mgidx", description="Multigram index selection and benchmarks")
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub = commands.add_parser("gen-corpus", help="generate a synthetic corpus")
    sub.add_argument("--spec", help="key=value corpus spec file")
    sub.add_argument("--alphabet")
    sub.add_argument("--records", type=int)
    sub.add_argument("--record-len", help="lo,hi")
    sub.add_argument("--sd", type=float, help="support spread; enables distribution mode")
    sub.add_argument("--mean", type=float)
    sub.add_argument("--grams", type=int, help="number of planted support draws")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=cmd_gen_corpus)

    sub = commands.add_parser("gen-workload", help="cut a query workload from a corpus")
    sub.add_argument("--corpus", required=True)
    sub.add_argument("--spec", help="key=value workload spec file")
    sub.add_argument("--key-count", type=int)
    sub.add_argument("--key-len", help="lo,hi")
    sub.add_argument("--gap", help="lo,hi range of gap upper bounds")
    sub.add_argument("--sample-fraction", type=float)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=cmd_gen_workload)

    sub = commands.add_parser("build", help="select grams and build an index")
    _common(sub)
    sub.add_argument("--mode", required=True, type=str.upper, choices=MODES)
    sub.add_argument("--config", help="key=value settings file")
    sub.add_argument("--min-len", type=int)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--top-k", type=int, help="BEST: number of grams")
    sub.add_argument("--selectivity", type=float, help="FREE: selectivity threshold")
    sub.add_argument("--selection", help="write the gram selection here")
    sub.add_argument("--out", help="write the index here")
    sub.add_argument("--stats", help="write per-iteration statistics CSV here")
    sub.set_defaults(func=cmd_build)

    sub = commands.add_parser("query", help="answer a workload")
    _common(sub)
    sub.add_argument("--index")
    sub.add_argument("--no-index", action="store_true", help="full scan only")
    sub.add_argument("--single-gram", action="store_true",
                     help="use one gram per window instead of intersecting")
    sub.add_argument("--metrics", action="store_true", help="also print metrics against full scan")
    sub.add_argument("--out", help="answers CSV (stdout when omitted)")
    sub.set_defaults(func=cmd_query)

    sub = commands.add_parser("bench", help="run an experiment")
    sub.add_argument("experiment", choices=experiments.EXPERIMENTS)
    sub.add_argument("--records", type=int)
    sub.add_argument("--queries", type=int)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--seeds", type=int, default=5, help="exp1: number of consecutive seeds")
    sub.add_argument("--signatures", help="exp5: PROSITE signature file")
    sub.add_argument("--plots", action="store_true", help="also write SVG plots")
    sub.add_argument("--out", help="output directory")
    sub.set_defaults(func=cmd_bench)

    sub = commands.add_parser("verify", help="check an index against its corpus")
    _common(sub)
    sub.add_argument("--index", required=True)
    sub.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except MultigramError as e:
        print(f"✗ {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
