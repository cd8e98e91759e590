"""Ablation pilot: train all four modes on a 500-entity synthetic corpus."""
import json
import sys
import time

from kb2text.config import RunConfig
from kb2text.corpus import split, synth_corpus, tokenize
from kb2text.generator import train
from kb2text.inference import greedy_decode
from kb2text import metrics as M

EPOCHS = int(sys.argv[1]) if len(sys.argv) > 1 else 12
LAM = float(sys.argv[2]) if len(sys.argv) > 2 else 0.5
LR = float(sys.argv[3]) if len(sys.argv) > 3 else 0.004
SEED = int(sys.argv[4]) if len(sys.argv) > 4 else 202
MIN_TEAMS = int(sys.argv[5]) if len(sys.argv) > 5 else 1

from kb2text.corpus import SynthSchema
schema = SynthSchema(min_team_rows=MIN_TEAMS)
corpus = synth_corpus(500, seed=SEED, schema=schema)
tr, dev, te = split(corpus, seed=SEED)
print(f"split {len(tr)}/{len(dev)}/{len(te)}; epochs={EPOCHS} lam={LAM} lr={LR} seed={SEED} min_teams={MIN_TEAMS}", flush=True)

results = {}
for mode in ("seq2seq", "pointer", "pointer_type", "pointer_type_position"):
    t0 = time.time()
    cfg = RunConfig(mode=mode, emb_dim=24, pos_emb_dim=5, hidden_dim=32, attn_dim=24,
                    pos_attn_dim=10, max_rows=16, learning_rate=LR, coverage_weight=LAM,
                    min_freq=5, batch_size=8, epochs=EPOCHS, seed=SEED)
    model, logs = train(tr, dev, cfg)
    t_train = time.time() - t0
    counts = {"overall": [0, 0, 0], "interdependent": [0, 0, 0]}
    pairs = []
    for ex in te:
        res = greedy_decode(ex.kb, model, max_len=60)
        recon = M.reconstruct(res.text, ex.kb)
        for level, triple in (("overall", (recon.pairs_predicted, recon.pairs_correct, recon.pairs_gold)),
                              ("interdependent", (recon.rows_predicted, recon.rows_correct, recon.rows_gold))):
            for i, v in enumerate(triple):
                counts[level][i] += v
        pairs.append((tokenize(res.text), tokenize(ex.reference_text)))
    rep = M.score_reconstruction({k: tuple(v) for k, v in counts.items()})
    bleu = M.bleu_corpus(pairs)
    results[mode] = {
        "overall_f1": rep.overall.f1, "overall_p": rep.overall.precision, "overall_r": rep.overall.recall,
        "inter_f1": rep.interdependent.f1, "bleu": bleu,
        "dev_nll": logs[-1].dev_nll_per_token, "train_s": round(t_train),
    }
    print(f"{mode}: overallF1={rep.overall.f1:.3f} (P={rep.overall.precision:.3f} R={rep.overall.recall:.3f}) "
          f"interF1={rep.interdependent.f1:.3f} bleu={bleu:.3f} dev_nll={logs[-1].dev_nll_per_token:.3f} "
          f"[{t_train:.0f}s]", flush=True)

o = {m: results[m]["overall_f1"] for m in results}
i = {m: results[m]["inter_f1"] for m in results}
print("\nordering overall:", " < ".join(sorted(o, key=o.get)))
print("required: seq2seq < pointer < pointer_type <= pointer_type_position")
print("checks:",
      "s<p", o["seq2seq"] < o["pointer"],
      "| p<t", o["pointer"] < o["pointer_type"],
      "| t<=tp", o["pointer_type"] <= o["pointer_type_position"],
      "| tp-p>=0.05", o["pointer_type_position"] - o["pointer"] >= 0.05,
      "| tp>t inter", i["pointer_type_position"] > i["pointer_type"])
print(json.dumps(results, indent=1))
