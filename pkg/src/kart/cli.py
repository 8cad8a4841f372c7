"""Command-line surface.

One binary, subcommands for each pipeline stage. Exit codes: 0 success,
1 validation or configuration problem, 2 I/O or protocol failure. Every
output file is written atomically. Set KART_LOG=debug|info|error to tune
logging.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import __version__
from .anonymize import AnonymizationOp, apply_anonymizer
from .attack import (
    association_attack,
    extract_full_name_mentions,
    invert_names,
    save_mentions,
    save_rankings,
)
from .corpus_io import atomic_write_text, load_corpus, load_table, save_corpus, save_table
from .errors import (
    KartError,
    ParseError,
    ProtocolError,
    TransportError,
)
from .generate import (
    TemplateConfig,
    fill_placeholders,
    generate_phi_table,
    synthesize_documents,
)
from .lexicon import default_name_lexicon
from .metrics import (
    build_report,
    embedding_distance,
    rank_percentile,
    topk_accuracy,
)
from .scenario import World, load_scenario, run_scenario
from .scorer import (
    TrainingConfig,
    corpus_vocabulary,
    load_model,
    save_model,
    train_count_scorer,
    train_tiny_mlm,
)

log = logging.getLogger("kart")


class _Parser(argparse.ArgumentParser):
    # Bad flags are a usage problem, not an I/O problem: exit 1, not 2.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def _setup_logging() -> None:
    level = os.environ.get("KART_LOG", "error").lower()
    numeric = {"error": logging.ERROR, "info": logging.INFO,
               "debug": logging.DEBUG}.get(level, logging.ERROR)
    logging.basicConfig(level=numeric, format="%(levelname)s %(name)s: %(message)s")


def build_parser() -> _Parser:
    p = _Parser(prog="kart", description=__doc__)
    p.add_argument("--version", action="version", version=f"kart {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-corpus", parents=[], help="generate table + filled corpus")
    g.add_argument("--config", help="generator TOML ([templates], [fill], [sizes], seed)")
    g.add_argument("--patients", type=int)
    g.add_argument("--docs-per-patient", type=int)
    g.add_argument("--mention-fraction", type=float)
    g.add_argument("--fill-rate", type=float)
    g.add_argument("--seed", type=int, help="required unless the config provides one")
    g.add_argument("--threads", type=int, default=1,
                   help="parallel placeholder filling; output is identical at any level")
    g.add_argument("--out-corpus", required=True)
    g.add_argument("--out-table", required=True)
    g.add_argument("--out-val", help="validation split output when [sizes] asks for one")

    a = sub.add_parser("anonymize", help="apply an anonymization operator")
    a.add_argument("--in", dest="infile", required=True)
    a.add_argument("--out", required=True)
    a.add_argument("--op", choices=["id", "hipaa", "custom"], required=True)
    a.add_argument("--categories", default="",
                   help="comma-separated categories for --op custom")

    t = sub.add_parser("train-lm", help="train a scorer on a corpus")
    t.add_argument("--corpus", required=True)
    t.add_argument("--kind", choices=["count_nb", "tiny_mlm"], default="count_nb")
    t.add_argument("--anonymize", choices=["id", "hipaa"], default="id",
                   help="operator applied to the corpus before training")
    t.add_argument("--out-model", required=True)
    t.add_argument("--seed", type=int, required=True)
    t.add_argument("--steps", type=int, default=100)
    t.add_argument("--learning-rate", type=float, default=2e-5)
    t.add_argument("--batch-size", type=int, default=64)
    t.add_argument("--max-len", type=int, default=128)
    t.add_argument("--embedding-dim", type=int, default=64)
    t.add_argument("--smoothing-k", type=float, default=0.1)
    t.add_argument("--no-lexicon-vocab", action="store_true",
                   help="do not add the default name lexicon to the vocabulary")

    e = sub.add_parser("extract-mentions", help="find targetable name sites")
    e.add_argument("--corpus", required=True)
    e.add_argument("--table")
    e.add_argument("--out", required=True)

    atk = sub.add_parser("attack", help="run an attack")
    atk_sub = atk.add_subparsers(dest="attack_command", required=True)

    inv = atk_sub.add_parser("invert-names", help="full-name model inversion")
    inv.add_argument("--model", required=True)
    inv.add_argument("--public", required=True)
    inv.add_argument("--table", required=True)
    inv.add_argument("--seed", type=int, required=True)
    inv.add_argument("--top-ks", type=_int_list, default=[1, 10, 100])
    inv.add_argument("--out-report", required=True)
    inv.add_argument("--out-rankings")

    assoc = atk_sub.add_parser("associate", help="identifier association probe")
    assoc.add_argument("--model", required=True)
    assoc.add_argument("--condition", required=True)
    assoc.add_argument("--category", default="phone")
    assoc.add_argument("--candidates", default="",
                       help="comma-separated identifier candidates")
    assoc.add_argument("--candidates-file",
                       help="file with one candidate per line")
    assoc.add_argument("--p0", type=float, required=True)
    assoc.add_argument("--out", required=True)

    ev = sub.add_parser("eval", help="recompute metrics from a rankings file")
    ev.add_argument("--rankings", required=True)
    ev.add_argument("--ks", type=_int_list, default=[1, 10, 100])
    ev.add_argument("--grid-size", type=int, required=True)
    ev.add_argument("--format", choices=["json", "csv"], default="json")
    ev.add_argument("--out")

    ed = sub.add_parser("embed-dist", help="mean embedding distance between models")
    ed.add_argument("--model-a", required=True)
    ed.add_argument("--model-b", required=True)
    ed.add_argument("--tokens", default="",
                    help="comma-separated tokens; default: gold names from --table")
    ed.add_argument("--table")

    sc = sub.add_parser("scenario", help="scenario operations")
    sc_sub = sc.add_subparsers(dest="scenario_command", required=True)
    run = sc_sub.add_parser("run", help="execute a scenario TOML end to end")
    run.add_argument("--scenario", required=True)
    run.add_argument("--table", required=True)
    run.add_argument("--private", required=True,
                     help="the filled corpus D(I); anonymizers are applied per scenario")
    run.add_argument("--public")
    run.add_argument("--shadow")
    run.add_argument("--shadow-table")
    run.add_argument("--model", help="pre-trained model directory")
    run.add_argument("--train-kind", choices=["count_nb", "tiny_mlm"],
                     default="count_nb")
    run.add_argument("--train-steps", type=int, default=100)
    run.add_argument("--train-seed", type=int, default=0)
    run.add_argument("--smoothing-k", type=float, default=0.1)
    run.add_argument("--out-report", required=True)
    run.add_argument("--out-table")

    srv = sub.add_parser("scorer", help="scorer service operations")
    srv_sub = srv.add_subparsers(dest="scorer_command", required=True)
    chk = srv_sub.add_parser("serve-check", help="run the protocol conformance suite")
    chk.add_argument("--endpoint", required=True)
    return p


def _cmd_gen_corpus(args, parser) -> int:
    from .generate import load_generator_config, select_subset

    config = load_generator_config(args.config) if args.config else None
    seed = args.seed if args.seed is not None else (config.seed if config else None)
    if seed is None:
        parser.print_usage(sys.stderr)
        sys.stderr.write("kart gen-corpus: error: --seed (or a config seed) is required\n")
        return 1
    patients = args.patients if args.patients is not None else (
        config.n_patients if config else 0
    )
    if patients <= 0:
        parser.print_usage(sys.stderr)
        sys.stderr.write("kart gen-corpus: error: --patients must be positive\n")
        return 1
    base = config.templates if config else TemplateConfig()
    cfg = TemplateConfig(
        docs_per_patient=(
            args.docs_per_patient
            if args.docs_per_patient is not None
            else base.docs_per_patient
        ),
        mention_fraction=(
            args.mention_fraction
            if args.mention_fraction is not None
            else base.mention_fraction
        ),
        narrative_sentences=base.narrative_sentences,
    )
    fill_rate = args.fill_rate if args.fill_rate is not None else (
        config.fill_rate if config else 0.723
    )
    table = generate_phi_table(patients, seed)
    corpus = synthesize_documents(table, cfg, seed=seed)
    filled = fill_placeholders(
        corpus, table, fill_rate, seed=seed, threads=args.threads
    )
    save_table(table, args.out_table)
    if config and config.subset_mode:
        if not args.out_val:
            parser.print_usage(sys.stderr)
            sys.stderr.write(
                "kart gen-corpus: error: config requests a split; provide --out-val\n"
            )
            return 1
        train, val = select_subset(
            filled,
            config.subset_mode,
            (config.train_size or 0, config.val_size or 0),
            seed=seed,
        )
        save_corpus(train, args.out_corpus)
        save_corpus(val, args.out_val)
        log.info("wrote %d train / %d val documents", len(train), len(val))
    else:
        save_corpus(filled, args.out_corpus)
        log.info("wrote %d patients, %d documents", len(table), len(filled))
    return 0


def _cmd_anonymize(args) -> int:
    corpus = load_corpus(args.infile)
    if args.op == "custom":
        cats = [c for c in args.categories.split(",") if c]
        op = AnonymizationOp.custom(cats)
    else:
        op = AnonymizationOp.parse(args.op)
    save_corpus(apply_anonymizer(corpus, op), args.out)
    return 0


def _training_config(args, kind: str) -> TrainingConfig:
    return TrainingConfig(
        model_kind=kind,
        max_sequence_length=args.max_len,
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        steps=args.steps,
        seed=args.seed,
        embedding_dim=args.embedding_dim,
        smoothing_k=args.smoothing_k,
    )


def _cmd_train_lm(args) -> int:
    corpus = load_corpus(args.corpus)
    extra = ()
    if not args.no_lexicon_vocab:
        lex = default_name_lexicon()
        extra = tuple(lex.first) + tuple(lex.last)
    tokenizer = corpus_vocabulary(corpus, extra_tokens=extra)
    op = AnonymizationOp.parse(args.anonymize)
    train_corpus = apply_anonymizer(corpus, op)
    config = _training_config(args, args.kind)
    if args.kind == "count_nb":
        model = train_count_scorer(
            train_corpus, config, tokenizer, anonymizer=op.describe()
        )
    else:
        model = train_tiny_mlm(
            train_corpus, config, tokenizer, anonymizer=op.describe()
        )
    save_model(model, args.out_model)
    return 0


def _cmd_extract_mentions(args) -> int:
    corpus = load_corpus(args.corpus)
    table = load_table(args.table) if args.table else None
    mentions = extract_full_name_mentions(corpus, phi_table=table)
    save_mentions(mentions, args.out)
    log.info("extracted %d mentions", len(mentions))
    return 0


def _cmd_invert_names(args) -> int:
    model = load_model(args.model)
    corpus = load_corpus(args.public)
    table = load_table(args.table)
    lexicon = default_name_lexicon()
    result = invert_names(
        model,
        corpus,
        lexicon,
        seed=args.seed,
        phi_table=table,
        top_k_entries=max(args.top_ks),
    )
    report = build_report(
        result.rankings,
        result.posteriors,
        lexicon,
        args.top_ks,
        provenance={
            "model": {
                k: v
                for k, v in model.provenance.items()
                if k in ("kind", "corpus_hash", "anonymizer", "config", "untrained")
            },
            "seed": args.seed,
        },
    )
    atomic_write_text(args.out_report, report.to_json())
    if args.out_rankings:
        save_rankings(result.rankings, args.out_rankings)
    return 0


def _cmd_associate(args) -> int:
    model = load_model(args.model)
    candidates = [c for c in args.candidates.split(",") if c]
    if args.candidates_file:
        with open(args.candidates_file, encoding="utf-8") as f:
            candidates.extend(line.strip() for line in f if line.strip())
    hits = association_attack(
        model, args.condition, args.category, candidates, args.p0
    )
    atomic_write_text(
        args.out,
        json.dumps(
            {
                "condition": args.condition,
                "p0": args.p0,
                "hits": [[ident, p] for ident, p in hits],
            },
            sort_keys=True,
            indent=2,
        )
        + "\n",
    )
    return 0


def _cmd_eval(args) -> int:
    from .attack import load_rankings

    rankings = load_rankings(args.rankings)
    accuracy = topk_accuracy(rankings, args.ks)
    percent = rank_percentile(rankings, args.grid_size)
    if args.format == "json":
        text = json.dumps(
            {
                "n_rankings": len(rankings),
                "topk_accuracy": {str(k): v for k, v in accuracy.items()},
                "rank_percent": percent,
            },
            sort_keys=True,
            indent=2,
        ) + "\n"
    else:
        lines = ["metric,value"]
        lines.append(f"n_rankings,{len(rankings)}")
        for k in sorted(accuracy):
            lines.append(f"top{k}_accuracy,{accuracy[k]}")
        lines.append(f"rank_percent,{percent}")
        text = "\n".join(lines) + "\n"
    if args.out:
        atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_embed_dist(args) -> int:
    model_a = load_model(args.model_a)
    model_b = load_model(args.model_b)
    tokens = [t for t in args.tokens.split(",") if t]
    if not tokens:
        if not args.table:
            raise KartError("provide --tokens or --table")
        table = load_table(args.table)
        seen = set()
        for row in table.rows:
            for name in (row.first_name, row.last_name):
                if name and name not in seen:
                    seen.add(name)
                    tokens.append(name)
    dist = embedding_distance(model_a, model_b, tokens)
    sys.stdout.write(f"{dist:.10f}\n")
    return 0


def _cmd_scenario_run(args) -> int:
    scenario = load_scenario(args.scenario)
    table = load_table(args.table)
    private = load_corpus(args.private)
    world = World(
        gold_table=table,
        private_corpus=private,
        public_corpus=load_corpus(args.public) if args.public else None,
        shadow_corpus=load_corpus(args.shadow) if args.shadow else None,
        shadow_gold=load_table(args.shadow_table) if args.shadow_table else None,
        model=load_model(args.model) if args.model else None,
        training_config=None
        if args.model
        else TrainingConfig(
            model_kind=args.train_kind,
            steps=args.train_steps,
            seed=args.train_seed,
            smoothing_k=args.smoothing_k,
        ),
    )
    report, attacker_table = run_scenario(scenario, world)
    atomic_write_text(args.out_report, report.to_json())
    if args.out_table:
        save_table(attacker_table, args.out_table)
    return 0


def _cmd_serve_check(args) -> int:
    from .conformance import run_conformance_suite

    results = run_conformance_suite(args.endpoint)
    failed = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        detail = f"  ({r.detail})" if r.detail else ""
        sys.stdout.write(f"{status} {r.name}{detail}\n")
        failed += 0 if r.passed else 1
    if failed:
        sys.stdout.write(f"{failed}/{len(results)} checks failed\n")
        return 1
    sys.stdout.write(f"all {len(results)} checks passed\n")
    return 0


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    handlers = {
        "anonymize": _cmd_anonymize,
        "train-lm": _cmd_train_lm,
        "extract-mentions": _cmd_extract_mentions,
        "eval": _cmd_eval,
        "embed-dist": _cmd_embed_dist,
    }
    try:
        if args.command == "gen-corpus":
            return _cmd_gen_corpus(args, parser)
        if args.command == "attack":
            handler = (
                _cmd_invert_names
                if args.attack_command == "invert-names"
                else _cmd_associate
            )
            return handler(args)
        if args.command == "scenario":
            return _cmd_scenario_run(args)
        if args.command == "scorer":
            return _cmd_serve_check(args)
        return handlers[args.command](args)
    except (ParseError, ProtocolError, TransportError, OSError) as e:
        sys.stderr.write(f"kart: {e}\n")
        return 2
    except KartError as e:
        sys.stderr.write(f"kart: {e}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
