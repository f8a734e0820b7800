"""Command line entry point: synth, corrupt, train, eval, sweep, ablate.

Exit codes: 0 success, 2 usage/config error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from dream import data as dataio
from dream.config import ResolvedConfig, read_config_file, resolve, schema_from
from dream.errors import ConfigError, DreamError
from dream.nn import load_checkpoint, save_checkpoint
from dream.noise import NOISE_KINDS, NoiseSpec
from dream.synth import SynthSpec, generate
from dream.trainer import (
    ABLATION_VARIANTS,
    VARIANTS,
    TrainConfig,
    ablate,
    aggregate,
    evaluate,
    metrics_csv,
    sweep,
    sweep_csv,
    train,
)

log = logging.getLogger("dream")

TRAIN_SCHEMA = schema_from(TrainConfig)
SYNTH_SCHEMA = schema_from(SynthSpec)
NOISE_SCHEMA = {"kind": (str, "uniform"), "rate": (float, 0.30), "seed": (int, 0)}
SWEEP_SCHEMA = {
    **TRAIN_SCHEMA,
    "kinds": (str, "uniform"),
    "rates": (str, "0,0.1,0.2,0.3,0.4,0.5"),
    "seeds": (str, "0,1,2,3,4"),
    "jobs": (int, 1),
}
ABLATE_SCHEMA = {
    **TRAIN_SCHEMA,
    "kind": (str, "uniform"),
    "rate": (float, 0.30),
    "seeds": (str, "0,1,2,3,4"),
    "variants": (str, ",".join(ABLATION_VARIANTS)),
    "jobs": (int, 1),
}
ALL_KEYS = set(SWEEP_SCHEMA) | set(ABLATE_SCHEMA) | set(SYNTH_SCHEMA) | set(NOISE_SCHEMA)


def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _check_writable(path: Path, force: bool) -> None:
    if path.exists() and not force:
        raise ConfigError(f"{path} exists; pass --force to overwrite")


def _resolve(args, schema, extra) -> ResolvedConfig:
    file_values = {}
    if getattr(args, "config", None):
        file_values = read_config_file(args.config)
        unknown = sorted(set(file_values) - ALL_KEYS)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        file_values = {k: v for k, v in file_values.items() if k in schema}
    flags = {k: getattr(args, k, None) for k in schema}
    return resolve(schema, file_values, flags, extra)


def _csv_list(text: str, kind=str) -> list:
    try:
        return [kind(x.strip()) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad list {text!r}: {exc}") from exc


def _write_csv_with_config(path: Path, text: str, rc: ResolvedConfig) -> None:
    path.write_text(text, encoding="utf-8")
    path.with_name(path.name + ".config.json").write_text(_dump_json({"config": rc.to_json()}), encoding="utf-8")


# --------------------------------------------------------------------------- commands


def cmd_synth(args) -> int:
    out = Path(args.output)
    rc = _resolve(args, SYNTH_SCHEMA, {"command": "synth", "output": str(out)})
    _check_writable(out, args.force)
    spec = rc.build(SynthSpec)
    d = generate(spec)
    dataio.save(d, out, extra={"config": rc.to_json()})
    log.info("wrote %s: %d nodes, %d edges", out, d.graph.num_nodes, d.graph.num_edges)
    return 0


def cmd_corrupt(args) -> int:
    out = Path(args.output)
    rc = _resolve(args, NOISE_SCHEMA, {"command": "corrupt", "input": args.input, "output": str(out)})
    _check_writable(out, args.force)
    d = dataio.load(args.input)
    # start from clean labels even if the input was corrupted before
    if d.corrupted_mask is not None:
        d = dataio.NodeData(d.graph, d.labels_clean.copy(), d.labels_clean, d.train_mask, d.val_mask, d.test_mask)
    spec = NoiseSpec(kind=rc["kind"], rate=rc["rate"], seed=rc["seed"])
    noisy = dataio.corrupt_dataset(d, spec)
    dataio.save(noisy, out, extra={"config": rc.to_json()})
    frac = noisy.corrupted_mask[noisy.train_mask | noisy.val_mask].mean()
    log.info("wrote %s: corrupted fraction %.4f", out, frac)
    return 0


def cmd_train(args) -> int:
    out_dir = Path(args.out_dir)
    rc = _resolve(args, TRAIN_SCHEMA, {"command": "train", "input": args.input, "out_dir": str(out_dir)})
    cfg = rc.build(TrainConfig)
    cfg.validate()
    files = [out_dir / n for n in ("metrics.csv", "checkpoint.json", "summary.json")]
    if args.dump_anchors:
        files.append(Path(args.dump_anchors))
    for f in files:
        _check_writable(f, args.force)
    d = dataio.load(args.input)

    dump = None
    on_epoch = None
    if args.dump_anchors:
        dump = open(args.dump_anchors, "w", encoding="utf-8")
        targets = d.train_idx.tolist()

        def on_epoch(epoch, hs):
            # single-pool variants (v4, v5) report their selection as anchors_p
            single = [k for k in hs.selected if k != "topology"]
            p_key = "proximity" if "proximity" in hs.selected else (single[0] if single else None)
            for pos, node in enumerate(targets):
                rec = {
                    "epoch": epoch,
                    "node": node,
                    "score": float(hs.scores[pos]),
                    "anchors_p": hs.anchors_of(pos, p_key) if p_key else [],
                    "anchors_t": hs.anchors_of(pos, "topology"),
                }
                dump.write(json.dumps(rec) + "\n")

    try:
        res = train(d, cfg, on_epoch=on_epoch)
    finally:
        if dump is not None:
            dump.close()

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "metrics.csv").write_text(metrics_csv(res.metrics), encoding="utf-8")
    save_checkpoint(res.params, out_dir / "checkpoint.json", extra={"config": rc.to_json()})
    summary = {**res.summary(), "hyperparameters": cfg.to_json(), "config": rc.to_json()}
    if d.noise is not None:
        summary["noise"] = d.noise.to_json()
    (out_dir / "summary.json").write_text(_dump_json(summary), encoding="utf-8")
    print(
        f"{cfg.method}: test_acc_bestval={res.bestval_test_acc} (epoch {res.best_epoch}) "
        f"test_acc_final={res.final_test_acc}"
    )
    return 0


def cmd_eval(args) -> int:
    d = dataio.load(args.input)
    params = load_checkpoint(args.checkpoint)
    mask = {"train": d.train_mask, "val": d.val_mask, "test": d.test_mask}[args.mask]
    acc = evaluate(params, d, mask)
    result = {"input": args.input, "checkpoint": args.checkpoint, "mask": args.mask, "accuracy": acc}
    text = _dump_json(result)
    if args.output:
        out = Path(args.output)
        _check_writable(out, args.force)
        out.write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def _write_grid(rows, out: Path, rc: ResolvedConfig) -> None:
    _write_csv_with_config(out, sweep_csv(rows), rc)
    agg_path = out.with_name(out.stem + "_agg.csv")
    lines = ["noise_kind,rate,method,n,mean_test_acc_bestval,std_test_acc_bestval"]
    for a in aggregate(rows):
        fmt = lambda v: "" if v is None else repr(v)  # noqa: E731
        lines.append(f"{a['noise_kind']},{a['rate']!r},{a['method']},{a['n']},{fmt(a['mean'])},{fmt(a['std'])}")
    agg_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    failed = [r for r in rows if r.error]
    if failed:
        log.warning("%d run(s) failed; marked 'failed' in %s", len(failed), out)


def cmd_sweep(args) -> int:
    out = Path(args.output)
    rc = _resolve(args, SWEEP_SCHEMA, {"command": "sweep", "input": args.input, "output": str(out)})
    _check_writable(out, args.force)
    cfg = rc.build(TrainConfig)
    cfg.validate()
    kinds = _csv_list(rc["kinds"])
    for k in kinds:
        if k not in NOISE_KINDS:
            raise ConfigError(f"unknown noise kind {k!r}")
    rates = _csv_list(rc["rates"], float)
    seeds = _csv_list(rc["seeds"], int)
    d = dataio.load(args.input)
    rows = sweep(d, kinds, rates, seeds, cfg, jobs=rc["jobs"])
    _write_grid(rows, out, rc)
    return 0


def cmd_ablate(args) -> int:
    out = Path(args.output)
    rc = _resolve(args, ABLATE_SCHEMA, {"command": "ablate", "input": args.input, "output": str(out)})
    _check_writable(out, args.force)
    cfg = rc.build(TrainConfig)
    variants = _csv_list(rc["variants"])
    for v in variants:
        if v not in VARIANTS:
            raise ConfigError(f"unknown variant {v!r}")
    noise = NoiseSpec(kind=rc["kind"], rate=rc["rate"], seed=0)
    seeds = _csv_list(rc["seeds"], int)
    d = dataio.load(args.input)
    rows = ablate(d, noise, seeds, cfg, variants=variants, jobs=rc["jobs"])
    _write_grid(rows, out, rc)
    return 0


# --------------------------------------------------------------------------- parser


def _add_schema_flags(p: argparse.ArgumentParser, schema, skip=()) -> None:
    for key, (kind, default) in schema.items():
        if key in skip:
            continue
        flag = "--" + key.replace("_", "-")
        if kind is bool:
            p.add_argument(flag, dest=key, action="store_const", const=True, default=None)
        else:
            p.add_argument(flag, dest=key, type=kind, default=None, help=f"default: {default}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dream", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a planted-partition benchmark graph")
    _add_schema_flags(p, SYNTH_SCHEMA)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--config")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("corrupt", help="inject label noise into train/val labels")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--kind", choices=NOISE_KINDS)
    p.add_argument("--rate", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("train", help="train one model; writes metrics.csv, checkpoint.json, summary.json")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--out-dir", required=True)
    _add_schema_flags(p, TRAIN_SCHEMA)
    p.add_argument("--dump-anchors", help="JSON-lines file with per-epoch anchors and scores")
    p.add_argument("--config")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="accuracy of a checkpoint against clean labels")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--mask", choices=("train", "val", "test"), default="test")
    p.add_argument("-o", "--output")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="noise kinds x rates x seeds, DREAM vs baseline")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)
    _add_schema_flags(p, SWEEP_SCHEMA, skip=("variant",))
    p.add_argument("--config")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ablate", help="all variants x seeds at one noise setting")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)
    _add_schema_flags(p, ABLATE_SCHEMA, skip=("variant",))
    p.add_argument("--config")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_ablate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DreamError as exc:
        log.error("%s", exc)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
