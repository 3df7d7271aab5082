"""Command-line entry points for the whole pipeline.

Subcommands: compress, build-data, pretrain, prune, shape-plan, train,
eval, serve.  Everything reads/writes plain JSON, JSONL, CSV, or the
binary checkpoint container.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np
import torch

from . import compression as comp
from . import data as dat
from .checkpoint import load_checkpoint, save_checkpoint
from .metrics import evaluate_model
from .model import GenerationParams, MicroLM, ModelConfig
from .pruning import (count_params, head_coupling_chain, prune_model,
                      published_comparison, shape_plan)
from .tokenizer import build_tokenizer, general_corpus_text
from .training import (LoraConfig, TrainConfig, Trainer, run_strategy, traces_to_csv)


def _cmd_compress(args) -> int:
    rec = comp.load_recording(args.infile)
    default_len = 50 if args.method == "W" else 500
    cfg = comp.CompressionConfig(
        method=args.method,
        target_len=args.target_len or default_len,
        segments=10 if args.method == "WtoS" else 1,
        wavelet=args.wavelet,
        quant_bins=args.bins,
    )
    processed = comp.preprocess(rec)
    channels = comp.compress_recording(processed, cfg)
    out = {
        "subject_id": rec.subject_id,
        "method": cfg.method,
        "channels": [
            {"name": c.name, "values": [float(v) for v in c.values],
             "quantized": list(c.quantized),
             "lines": comp.channel_lines(c, cfg)}
            for c in channels
        ],
    }
    Path(args.out).write_text(json.dumps(out, indent=2), encoding="utf-8")
    print(f"wrote {args.out} ({len(channels)} channels, method {cfg.method})")
    return 0


def _cmd_build_data(args) -> int:
    if not args.synth:
        print("only --synth generation is supported", file=sys.stderr)
        return 2
    cfg = dat.SynthConfig(n_subjects=args.subjects, seed=args.seed)
    recs = dat.synth_generate(cfg)
    ccfg = (comp.CompressionConfig.for_w() if args.method == "W"
            else comp.CompressionConfig.for_wtos())
    records = dat.build_corpus(recs, ccfg)
    dat.emit_jsonl(records, args.out)
    print(f"wrote {args.out}: {len(records)} records, method {args.method}")
    return 0


def _load_records(path):
    records = dat.load_jsonl(path)
    if not records:
        raise SystemExit(f"{path}: no records")
    return records


def _cmd_pretrain(args) -> int:
    records = _load_records(args.data)
    tok = build_tokenizer()
    torch.manual_seed(args.seed)
    model = MicroLM(ModelConfig.desk(tok.vocab_size))
    from .training.strategies import encode_corpus
    corpus = encode_corpus(tok, records)
    cfg = TrainConfig(lr=args.lr, epochs_per_stage=args.epochs, stages=1,
                      batch_size=args.batch_size, seed=args.seed, warmup_steps=args.warmup)
    trainer = Trainer(model, cfg, tokenizer=tok)
    trace = trainer.train_stage(corpus, stage_idx=0)
    if args.cooldown_epochs:
        cool = TrainConfig(lr=args.lr / 5, epochs_per_stage=args.cooldown_epochs,
                           stages=1, batch_size=args.batch_size, seed=args.seed + 1,
                           warmup_steps=0)
        Trainer(model, cool, tokenizer=tok).train_stage(corpus, stage_idx=1)
    save_checkpoint(model, tok, args.out, meta={"pruning_ratio": None, "model_id": "desk-base"})
    print(f"wrote {args.out}; final mean loss {trace.mean_loss:.4f}")
    return 0


def _cmd_prune(args) -> int:
    model, tok, meta = load_checkpoint(args.checkpoint)
    pruned, plan = prune_model(model, args.ratio)
    meta = {**meta, "pruning_ratio": args.ratio,
            "model_id": meta.get("model_id", "model") + f"-p{args.ratio}"}
    save_checkpoint(pruned, tok, args.out, meta=meta)
    if args.report:
        report = {
            "ratio": args.ratio,
            "head_coupling": list(plan.head_coupling),
            "config": pruned.cfg.to_dict(),
            "params_before": model.num_parameters(),
            "params_after": pruned.num_parameters(),
            "groups": {
                gid: {"kept": len(d.keep), "removed": len(d.removed), "theta": d.theta}
                for gid, d in plan.decisions.items()
            },
        }
        Path(args.report).write_text(json.dumps(report, indent=2), encoding="utf-8")
    print(f"wrote {args.out}: {model.num_parameters()} -> {pruned.num_parameters()} params")
    return 0


def _parse_ratios(text: str) -> list[float]:
    if ".." in text:
        lo, hi = (float(x) for x in text.split("..", 1))
        n = int(round((hi - lo) / 0.1)) + 1
        return [round(lo + 0.1 * i, 10) for i in range(n)]
    return [float(x) for x in text.split(",")]


def _cmd_shape_plan(args) -> int:
    if args.config:
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    else:
        cfg = {"vocab_size": 151936, "d_model": 896, "n_layers": 24,
               "n_heads": 14, "n_kv_heads": 2, "head_dim": 64, "d_mlp": 4864,
               "tie_embeddings": True}
    rows = []
    for r in _parse_ratios(args.ratios):
        d = cfg["d_model"] - math.ceil(r * cfg["d_model"])
        mlp = cfg["d_mlp"] - math.ceil(r * cfg["d_mlp"])
        if r == 0:
            hh, dd = cfg["n_heads"], cfg["head_dim"]
        else:
            hh, dd = head_coupling_chain(cfg["n_heads"], cfg["n_kv_heads"],
                                         cfg["head_dim"], r)[-1]
        rep = shape_plan(cfg["vocab_size"], d, hh * dd, cfg["n_kv_heads"] * dd,
                         mlp, cfg["n_layers"], cfg["tie_embeddings"], r)
        rows.append(rep.to_dict())
    out = {"rows": rows, "published_comparison": published_comparison()}
    Path(args.out).write_text(json.dumps(out, indent=2), encoding="utf-8")
    print(f"wrote {args.out}: {len(rows)} rows")
    return 0


def _cmd_train(args) -> int:
    model, tok, meta = load_checkpoint(args.checkpoint)
    records = _load_records(args.data)
    cfg = TrainConfig(lr=args.lr, epochs_per_stage=args.epochs, stages=args.stages,
                      batch_size=args.batch_size, seed=args.seed,
                      l1_coeff=args.l1, l2_coeff=args.l2)
    lcfg = LoraConfig(r=args.lora_r, alpha=args.lora_alpha, dropout=args.lora_dropout)
    which = f"strategy{args.strategy}"
    general = general_corpus_text() if args.strategy == 2 else None
    out_dir = Path(args.out)
    result = run_strategy(which, model, general, records, cfg, tok, lcfg,
                          out_dir=out_dir, meta=meta)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_checkpoint(result.model, tok, out_dir / "final.bin",
                    meta={**meta, "strategy": which})
    traces_to_csv(result.all_traces(), out_dir / "loss_trace.csv")
    print(f"wrote {out_dir}/final.bin; stages {len(result.traces)}; "
          f"lora params {result.lora_param_count}")
    return 0


def _cmd_eval(args) -> int:
    model, tok, _meta = load_checkpoint(args.checkpoint)
    records = _load_records(args.data)
    params = GenerationParams(max_new_tokens=args.max_new_tokens, top_k=args.top_k,
                              temperature=args.temperature, seed=args.seed)
    report = evaluate_model(model, tok, records, args.task, params)
    Path(args.out).write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")
    print(f"{args.task}-class macro-F1 {report.macro_f1:.4f} "
          f"(n={report.n_samples}, avg RT {report.avg_rt_seconds:.3f}s)")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app, load_state
    state = load_state(args.checkpoint, method=args.method, kb_path=args.kb,
                       sessions_path=args.sessions)
    app = create_app(state)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eegemr", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compress", help="compress one recording to prompt lines")
    c.add_argument("--in", dest="infile", required=True)
    c.add_argument("--method", choices=("W", "WtoS"), default="W")
    c.add_argument("--target-len", type=int, default=None)
    c.add_argument("--wavelet", choices=("haar", "db4"), default="haar")
    c.add_argument("--bins", type=int, default=256)
    c.add_argument("--out", required=True)
    c.set_defaults(fn=_cmd_compress)

    b = sub.add_parser("build-data", help="generate a synthetic labeled corpus")
    b.add_argument("--synth", action="store_true")
    b.add_argument("--subjects", type=int, default=1890)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--method", choices=("W", "WtoS"), default="W")
    b.add_argument("--out", required=True)
    b.set_defaults(fn=_cmd_build_data)

    t = sub.add_parser("pretrain", help="train a fresh desk model on a corpus")
    t.add_argument("--data", required=True)
    t.add_argument("--epochs", type=int, default=10)
    t.add_argument("--cooldown-epochs", type=int, default=2)
    t.add_argument("--lr", type=float, default=1.5e-3)
    t.add_argument("--batch-size", type=int, default=8)
    t.add_argument("--warmup", type=int, default=None)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.set_defaults(fn=_cmd_pretrain)

    pr = sub.add_parser("prune", help="structured-prune a checkpoint")
    pr.add_argument("--checkpoint", required=True)
    pr.add_argument("--ratio", type=float, required=True)
    pr.add_argument("--out", required=True)
    pr.add_argument("--report", default=None)
    pr.set_defaults(fn=_cmd_prune)

    spn = sub.add_parser("shape-plan", help="weight-free dimension/parameter table")
    spn.add_argument("--config", default=None)
    spn.add_argument("--ratios", default="0.1..0.9")
    spn.add_argument("--out", required=True)
    spn.set_defaults(fn=_cmd_shape_plan)

    tr = sub.add_parser("train", help="recovery fine-tuning on a pruned checkpoint")
    tr.add_argument("--strategy", type=int, choices=(1, 2), required=True)
    tr.add_argument("--checkpoint", required=True)
    tr.add_argument("--data", required=True)
    tr.add_argument("--stages", type=int, default=5)
    tr.add_argument("--epochs", type=int, default=3)
    tr.add_argument("--lora-r", type=int, default=8)
    tr.add_argument("--lora-alpha", type=float, default=32.0)
    tr.add_argument("--lora-dropout", type=float, default=0.5)
    tr.add_argument("--lr", type=float, default=1e-5)
    tr.add_argument("--l1", type=float, default=0.0)
    tr.add_argument("--l2", type=float, default=0.0)
    tr.add_argument("--batch-size", type=int, default=4)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--out", required=True)
    tr.set_defaults(fn=_cmd_train)

    ev = sub.add_parser("eval", help="score a checkpoint on a labeled corpus")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--task", choices=("nine", "three"), default="nine")
    ev.add_argument("--top-k", type=int, default=1)
    ev.add_argument("--temperature", type=float, default=0.0)
    ev.add_argument("--max-new-tokens", type=int, default=8)
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--out", required=True)
    ev.set_defaults(fn=_cmd_eval)

    sv = sub.add_parser("serve", help="run the EMR HTTP service")
    sv.add_argument("--checkpoint", required=True)
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8080)
    sv.add_argument("--method", choices=("W", "WtoS"), default="W")
    sv.add_argument("--top-k", type=int, default=1)
    sv.add_argument("--kb", default=None)
    sv.add_argument("--sessions", default=None)
    sv.set_defaults(fn=_cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
