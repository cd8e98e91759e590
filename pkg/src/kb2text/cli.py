"""Command-line pipeline: synth, stats, train, generate, evaluate.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric divergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import metrics as M
from .checkpoint import CheckpointError, load_model, save_model
from .config import build_run_config, parse_config_file
from .corpus import CorpusError, load_corpus, save_corpus, split, stats, synth_corpus, tokenize
from .generator import ModelMode, TrainingDiverged, train
from .inference import beam_decode, dump_attention, greedy_decode

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DIVERGED = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kb2text", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus", add_help=True)
    p.add_argument("--n", type=int, required=True, help="number of entities")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("stats", help="corpus statistics")
    p.add_argument("--data", required=True)

    p = sub.add_parser("train", help="train a generator")
    p.add_argument("--data", required=True, help="JSONL corpus; split 80/10/10 by seed")
    p.add_argument("--mode", default=None,
                   help="one of: " + ", ".join(m.value for m in ModelMode))
    p.add_argument("--config", default=None, help="key = value config file")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--log", default=None, help="per-epoch JSONL log path")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--coverage-weight", type=float, default=None)
    p.add_argument("--emb-dim", type=int, default=None)
    p.add_argument("--pos-emb-dim", type=int, default=None)
    p.add_argument("--hidden-dim", type=int, default=None)
    p.add_argument("--attn-dim", type=int, default=None)
    p.add_argument("--pos-attn-dim", type=int, default=None)
    p.add_argument("--min-freq", type=int, default=None)
    p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("generate", help="decode descriptions for a corpus")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--beam", type=int, default=None, help="beam width (default from checkpoint, else 4)")
    p.add_argument("--max-len", type=int, default=None)
    p.add_argument("--dump-attn", default=None, metavar="DIR",
                   help="write per-entity attention CSVs here")
    p.add_argument("--vocab", default=None,
                   help="vocabulary JSON; its hash must match the checkpoint")

    p = sub.add_parser("evaluate", help="score generations against gold")
    p.add_argument("--gen", required=True, help="generations JSONL")
    p.add_argument("--gold", required=True, help="gold corpus JSONL")
    p.add_argument("--out", required=True, help="metrics report JSON")

    return parser


def cmd_synth(args) -> int:
    if args.n <= 0:
        raise UsageError(f"--n must be positive, got {args.n}")
    examples = synth_corpus(args.n, seed=args.seed)
    save_corpus(examples, args.out)
    print(f"wrote {len(examples)} examples to {args.out}")
    return EXIT_OK


def cmd_stats(args) -> int:
    examples = load_corpus(args.data)
    print(json.dumps(stats(examples).as_dict(), indent=2, sort_keys=True))
    return EXIT_OK


_TRAIN_OVERRIDES = (
    "mode", "epochs", "seed", "batch_size", "learning_rate", "coverage_weight",
    "emb_dim", "pos_emb_dim", "hidden_dim", "attn_dim", "pos_attn_dim", "min_freq",
)


def cmd_train(args) -> int:
    file_values = parse_config_file(args.config) if args.config else {}
    overrides = {name: getattr(args, name) for name in _TRAIN_OVERRIDES}
    try:
        config = build_run_config(file_values, overrides)
        ModelMode.parse(config.mode)
    except ValueError as e:
        raise UsageError(str(e)) from e

    examples = load_corpus(args.data)
    train_split, dev_split, test_split = split(examples, seed=config.seed)
    log_lines = []

    def log_fn(entry):
        log_lines.append(entry.as_dict())
        if not args.quiet:
            print(f"epoch {entry.epoch}: train {entry.train_loss_per_token:.4f} "
                  f"(nll {entry.train_nll_per_token:.4f}) dev nll {entry.dev_nll_per_token:.4f}"
                  + (" *" if entry.is_best else ""))

    model, _ = train(train_split, dev_split, config, log_fn=log_fn)
    save_model(model, args.out, run_config=config)
    if args.log:
        with open(args.log, "w", encoding="utf-8") as fh:
            for line in log_lines:
                fh.write(json.dumps(line, sort_keys=True) + "\n")
    print(f"saved checkpoint to {args.out} "
          f"(train/dev/test = {len(train_split)}/{len(dev_split)}/{len(test_split)})")
    return EXIT_OK


def cmd_generate(args) -> int:
    model, run_config = load_model(args.ckpt)
    if args.vocab is not None:
        from .corpus.vocab import Vocabulary

        external = Vocabulary.load(args.vocab)
        if external.sha256() != model.vocab.sha256():
            raise CheckpointError(
                f"vocabulary hash mismatch between {args.vocab} and checkpoint {args.ckpt}"
            )
    beam = args.beam if args.beam is not None else (run_config or {}).get("beam", 4)
    max_len = args.max_len if args.max_len is not None else (run_config or {}).get("max_len", 100)
    if beam < 1:
        raise UsageError(f"--beam must be >= 1, got {beam}")
    examples = load_corpus(args.data)
    dump_dir = Path(args.dump_attn) if args.dump_attn else None
    if dump_dir is not None:
        dump_dir.mkdir(parents=True, exist_ok=True)

    with open(args.out, "w", encoding="utf-8") as fh:
        for ex in examples:
            if beam == 1:
                res = greedy_decode(ex.kb, model, max_len=max_len)
                text, logprob = res.text, res.logprob
                trace, link, labels = res.trace, res.link_matrix, res.unit_labels
            else:
                hyp = beam_decode(ex.kb, model, beam=beam, max_len=max_len)
                text, logprob = hyp.text, hyp.logprob
                trace = link = labels = None
                if dump_dir is not None:
                    greedy = greedy_decode(ex.kb, model, max_len=max_len)
                    trace, link, labels = greedy.trace, greedy.link_matrix, greedy.unit_labels
            fh.write(json.dumps(
                {"entity_id": ex.kb.entity_id, "output": text, "logprob": logprob},
                ensure_ascii=False, sort_keys=True) + "\n")
            if dump_dir is not None:
                dump_attention(trace, link, labels,
                               dump_dir / f"{ex.kb.entity_id}.alpha.csv",
                               dump_dir / f"{ex.kb.entity_id}.positions.csv")
    print(f"wrote generations for {len(examples)} entities to {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    gold = {ex.kb.entity_id: ex for ex in load_corpus(args.gold)}
    generations: dict[str, dict] = {}
    with open(args.gen, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as e:
                raise CorpusError(f"malformed generation JSON: {e.msg}", line=lineno) from e
            if "entity_id" not in obj or "output" not in obj:
                raise CorpusError("generation line needs entity_id and output", line=lineno)
            generations[obj["entity_id"]] = obj

    flags = []
    pairs = []
    rouge_scores = []
    counts = {"overall": [0, 0, 0], "interdependent": [0, 0, 0]}
    per_example = []
    for entity_id, ex in gold.items():
        gen = generations.get(entity_id)
        out_text = gen["output"] if gen else ""
        hyp_tokens = tokenize(out_text)
        ref_tokens = tokenize(ex.reference_text)
        pairs.append((hyp_tokens, ref_tokens))
        rouge = M.rouge_l(hyp_tokens, ref_tokens) if hyp_tokens else 0.0
        rouge_scores.append(rouge)
        recon = M.reconstruct(out_text, ex.kb)
        for level, triple in (("overall", (recon.pairs_predicted, recon.pairs_correct, recon.pairs_gold)),
                              ("interdependent", (recon.rows_predicted, recon.rows_correct, recon.rows_gold))):
            for i, v in enumerate(triple):
                counts[level][i] += v
        per_example.append({
            "entity_id": entity_id,
            "bleu": M.bleu_sentence(hyp_tokens, ref_tokens),
            "rouge_l": rouge,
            "overall": {"predicted": recon.pairs_predicted, "correct": recon.pairs_correct,
                        "gold": recon.pairs_gold},
            "interdependent": {"predicted": recon.rows_predicted, "correct": recon.rows_correct,
                               "gold": recon.rows_gold},
        })
    if not generations:
        flags.append("empty generation file: all scores are zero")

    report = M.score_reconstruction({k: tuple(v) for k, v in counts.items()})
    doc = {
        "bleu": M.bleu_corpus(pairs) if pairs else 0.0,
        "rouge_l": (sum(rouge_scores) / len(rouge_scores)) if rouge_scores else 0.0,
        "reconstruction": report.as_dict(),
        "n_entities": len(gold),
        "n_generated": len(generations),
        "flags": flags + list(report.flags),
        "per_example": per_example,
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")
    print(f"BLEU {doc['bleu']:.4f}  ROUGE-L {doc['rouge_l']:.4f}  "
          f"Overall F1 {report.overall.f1:.4f}  Inter-dependent F1 {report.interdependent.f1:.4f}")
    return EXIT_OK


_HANDLERS = {
    "synth": cmd_synth,
    "stats": cmd_stats,
    "train": cmd_train,
    "generate": cmd_generate,
    "evaluate": cmd_evaluate,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _HANDLERS[args.command](args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingDiverged as e:
        print(f"training diverged: {e}", file=sys.stderr)
        return EXIT_DIVERGED
    except (CorpusError, CheckpointError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
