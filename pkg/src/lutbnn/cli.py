"""Command-line entry point.

Subcommands: simulate, train, resume, evaluate, infer, emit. Every command
is deterministic given its config file and seed; flags override file values.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np
import yaml

from . import core, ga, hdl, sim


def load_run_config(path=None) -> tuple[core.NetworkShape, sim.SimConfig, ga.GaConfig]:
    """Read the YAML run config; absent file or keys fall back to defaults."""
    doc = {}
    if path is not None:
        with open(path, encoding="utf-8") as f:
            doc = yaml.safe_load(f) or {}
    shape = core.NetworkShape.parse(str(doc.get("shape", "128-32-32-2")))
    sim_cfg = sim.SimConfig.from_dict(doc.get("sim", {}))
    ga_cfg = ga.GaConfig.from_dict(doc.get("ga", {}))
    return shape, sim_cfg, ga_cfg


def _progress_line(rec: ga.GenerationRecord) -> None:
    print(
        f"gen {rec.generation:4d}  best_acc {rec.best_accuracy:.4f}"
        f"  mean_acc {rec.mean_accuracy:.4f}  nonzero {rec.best_nonzero}",
        file=sys.stderr,
    )


def cmd_simulate(args) -> int:
    _, sim_cfg, _ = load_run_config(args.config)
    if args.seed is not None:
        sim_cfg = dataclasses.replace(sim_cfg, rng_seed=args.seed)
    frames = sim.gen_batch(sim_cfg, args.good, args.ugly, args.noise)
    sim.save_dataset(frames, sim_cfg, args.out, binary=args.binary)
    print(f"wrote {len(frames)} frames ({args.good} good, {args.ugly} ugly,"
          f" {args.noise} noise) to {args.out}")
    return 0


def _train_outputs(out_dir, best, records):
    os.makedirs(out_dir, exist_ok=True)
    core.save_genome(best, os.path.join(out_dir, "best_genome.txt"))
    ga.write_metrics_csv(records, os.path.join(out_dir, "metrics.csv"))


def cmd_train(args) -> int:
    if args.resume:
        return _run_resume(args.resume, args.out, args.workers)
    shape, sim_cfg, ga_cfg = load_run_config(args.config)
    if args.seed is not None:
        ga_cfg = dataclasses.replace(ga_cfg, rng_seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    best, records = ga.evolve(
        shape, ga_cfg, sim_cfg, workers=args.workers,
        checkpoint_path=os.path.join(args.out, "checkpoint.json"),
        progress=_progress_line)
    _train_outputs(args.out, best, records)
    print(f"best accuracy {records[-1].best_accuracy:.4f}, "
          f"nonzero {core.nonzero_weight_count(best)}; outputs in {args.out}")
    return 0


def _run_resume(ckpt_path, out_dir, workers) -> int:
    ck = ga.load_checkpoint(ckpt_path)
    os.makedirs(out_dir, exist_ok=True)
    best, records = ga.evolve(
        ck["shape"], ck["ga_config"], ck["sim_config"], workers=workers,
        state=ck["state"],
        checkpoint_path=os.path.join(out_dir, "checkpoint.json"),
        progress=_progress_line)
    _train_outputs(out_dir, best, records)
    print(f"resumed run finished at generation {records[-1].generation};"
          f" outputs in {out_dir}")
    return 0


def cmd_resume(args) -> int:
    return _run_resume(args.checkpoint, args.out, args.workers)


def _format_confusion(mat) -> str:
    header = "true\\pred " + "".join(f"{c:>8}" for c in ga.CONFUSION_COLS)
    rows = [header]
    for name, row in zip(ga.CONFUSION_ROWS, mat):
        rows.append(f"{name:<10}" + "".join(f"{int(v):>8}" for v in row))
    return "\n".join(rows)


def cmd_evaluate(args) -> int:
    genome = core.load_genome(args.genome)
    if args.dataset:
        frames, _ = sim.load_dataset(args.dataset)
    else:
        _, sim_cfg, _ = load_run_config(args.config)
        if args.seed is not None:
            sim_cfg = dataclasses.replace(sim_cfg, rng_seed=args.seed)
        frames = sim.gen_batch(sim_cfg, args.good, args.ugly, args.noise)
    if not frames:
        raise ValueError("evaluation dataset is empty")
    mat = ga.confusion_matrix(genome, frames)
    gu = [f for f in frames if f.label in ga.TARGETS]
    acc = ga.dataset_accuracy(genome, gu) if gu else None
    if acc is not None:
        print(f"accuracy {acc:.4f} on {len(gu)} good/ugly frames")
    print(_format_confusion(mat))
    if args.report:
        report = {
            "genome": args.genome,
            "frames": len(frames),
            "accuracy": acc,
            "confusion": {"rows": list(ga.CONFUSION_ROWS),
                          "cols": list(ga.CONFUSION_COLS),
                          "counts": mat.tolist()},
        }
        with open(args.report, "w", encoding="utf-8") as f:
            json.dump(report, f, indent=2, sort_keys=True)
    return 0


def _read_frame(path) -> np.ndarray:
    text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
    vals = [int(v) for v in text.replace(",", " ").split()]
    return np.array(vals, dtype=np.int64)


def cmd_infer(args) -> int:
    genome = core.load_genome(args.genome)
    raw = _read_frame(args.frame)
    if len(raw) != genome.shape.input_len:
        raise ValueError(
            f"expected {genome.shape.input_len} samples, got {len(raw)}")
    x = core.quantize_frame(raw)
    if args.trace:
        out, layers = core.forward(genome, x, trace=True)
        for li, (sums, acts) in enumerate(layers):
            print(f"layer {li + 1} sums        {sums}")
            print(f"layer {li + 1} activations {acts}")
    else:
        out = core.forward(genome, x)
    print(f"label {core.classify(out).value}  outputs {tuple(out)}")
    return 0


def cmd_emit(args) -> int:
    genome = core.load_genome(args.genome)
    design = hdl.emit_entity(genome, name=args.name)
    pkg_path, ent_path = hdl.write_design(design, args.out, name=args.name)
    info = hdl.estimate_structure(genome)
    print(f"wrote {pkg_path} and {ent_path}")
    print(f"input port {design.input_port_bits} bits, "
          f"output port {design.output_port_bits} bits")
    print(f"adder tree depths {list(design.adder_tree_depths)}, "
          f"nonzero weights {info['nonzero_weights']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="lutbnn",
        description="2-bit LUT-network toolkit: simulate, train, evaluate,"
                    " infer, emit VHDL")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("simulate", help="generate a labeled waveform dataset")
    ps.add_argument("--config", help="YAML run config")
    ps.add_argument("--out", required=True)
    ps.add_argument("--good", type=int, default=200)
    ps.add_argument("--ugly", type=int, default=200)
    ps.add_argument("--noise", type=int, default=0)
    ps.add_argument("--seed", type=int)
    ps.add_argument("--binary", action="store_true",
                    help="compact binary dataset format")
    ps.set_defaults(func=cmd_simulate)

    pt = sub.add_parser("train", help="run the GA trainer")
    pt.add_argument("--config", help="YAML run config")
    pt.add_argument("--out", required=True, help="output directory")
    pt.add_argument("--seed", type=int)
    pt.add_argument("--workers", type=int, default=1)
    pt.add_argument("--resume", help="checkpoint file to continue from")
    pt.set_defaults(func=cmd_train)

    pr = sub.add_parser("resume", help="continue a run from a checkpoint")
    pr.add_argument("checkpoint")
    pr.add_argument("--out", required=True)
    pr.add_argument("--workers", type=int, default=1)
    pr.set_defaults(func=cmd_resume)

    pe = sub.add_parser("evaluate",
                        help="accuracy and confusion matrix for a genome")
    pe.add_argument("--genome", required=True)
    pe.add_argument("--dataset", help="dataset file; omit to simulate fresh")
    pe.add_argument("--config", help="YAML run config (fresh simulation)")
    pe.add_argument("--good", type=int, default=5000)
    pe.add_argument("--ugly", type=int, default=5000)
    pe.add_argument("--noise", type=int, default=5000)
    pe.add_argument("--seed", type=int)
    pe.add_argument("--report", help="write a JSON report here")
    pe.set_defaults(func=cmd_evaluate)

    pi = sub.add_parser("infer", help="classify one raw frame")
    pi.add_argument("--genome", required=True)
    pi.add_argument("--frame", required=True,
                    help="file of 128 raw samples, or - for stdin")
    pi.add_argument("--trace", action="store_true",
                    help="print per-layer sums and activations")
    pi.set_defaults(func=cmd_infer)

    pm = sub.add_parser("emit", help="emit the VHDL package and entity")
    pm.add_argument("--genome", required=True)
    pm.add_argument("--out", required=True, help="output directory")
    pm.add_argument("--name", default="lutbnn_net")
    pm.set_defaults(func=cmd_emit)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
