#!/usr/bin/env python3
"""
MAIN PROGRAM - NOAH classification head toolkit
train → eval → cost → bench → viz

    python main.py cost --set channels=2048 --set num_classes=1000 --set key_ratio=1/8
    python main.py train --config config/quadrant_smoke.cfg --out results/smoke
    python main.py viz --checkpoint results/smoke/model.ckpt --out results/maps
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional, Tuple

# Add project to path
sys.path.append(str(Path(__file__).parent))

from config.settings import EXIT_INTERNAL, EXIT_OK
from data_collectors.idx_collector import IdxCollector
from data_collectors.labeled_batch import LabeledBatch
from data_collectors.quadrant_collector import QuadrantCollector
from heads.cost_counter import count_cost, count_gap_cost
from reporting.attention_visualizer import AttentionVisualizer
from reporting.head_benchmark import BenchGeometry, HeadBenchmark
from reporting.report_generator import ReportGenerator
from training.checkpoint import load_checkpoint, save_checkpoint
from training.trainer import Trainer, evaluate
from utils.errors import NoahError, UsageError, exit_code_for
from utils.folders import prepare_output_dir
from utils.run_spec import DEFAULT_OUT, SUBCOMMANDS, RunSpec


def banner(title: str, spec: RunSpec):
    if spec["verbose"]:
        print("\n" + "=" * 60)
        print(title)
        print("=" * 60)


def emit(**values):
    """Machine-readable result lines"""
    for key, value in values.items():
        print(f"{key}={value}")


def load_splits(spec: RunSpec, need_train: bool,
                eval_count: Optional[int] = None) -> Tuple[Optional[LabeledBatch], Optional[LabeledBatch]]:
    """(train, eval) batches; train is None when not needed, eval may be None for IDX runs"""
    verbose = spec["verbose"]
    if spec["dataset"] == "quadrant":
        collector = QuadrantCollector(spec.quadrant_spec(), verbose=verbose)
        train = collector.collect(spec["train_count"]) if need_train else None
        count = spec["eval_count"] if eval_count is None else eval_count
        return train, collector.collect(count, offset=spec["train_count"])
    train = IdxCollector(spec["train_images"], spec["train_labels"], verbose).collect() if need_train else None
    evaluation = None
    if spec["eval_images"]:
        evaluation = IdxCollector(spec["eval_images"], spec["eval_labels"], verbose).collect()
    return train, evaluation


def cmd_train(spec: RunSpec) -> int:
    config = spec.train_config()
    banner(f"🏋️ TRAIN {config.head_kind.upper()} HEAD", spec)
    train_batch, eval_batch = load_splits(spec, need_train=True)
    trainer = Trainer(config)
    model, _ = trainer.fit(train_batch, eval_batch)

    out_dir = prepare_output_dir(spec.out_dir, verbose=spec["verbose"])
    metrics_path = trainer.tracker.save_csv(out_dir / "metrics.csv")
    checkpoint_path = save_checkpoint(out_dir / "model.ckpt", model, config.to_dict())
    if spec["verbose"]:
        print(trainer.tracker.generate_metrics_report())
    summary = trainer.tracker.get_performance_summary()
    emit(checkpoint=checkpoint_path, metrics=metrics_path,
         final_train_loss=f"{summary['final_loss']:.6f}",
         final_eval_top1=f"{summary['final_eval_top1']:.6f}")
    return EXIT_OK


def cmd_eval(spec: RunSpec) -> int:
    model, _ = load_checkpoint(spec["checkpoint"])
    _, eval_batch = load_splits(spec, need_train=False)
    if eval_batch is None:
        raise UsageError("eval needs eval_images and eval_labels for dataset=idx")
    eval_batch.validate_labels(model.num_classes)
    result = evaluate(model, eval_batch)
    emit(head=model.head_kind, count=result["count"], top1=f"{result['top1']:.6f}",
         top5="n/a" if result["top5"] is None else f"{result['top5']:.6f}")
    if spec.explicit_out:
        ReportGenerator(prepare_output_dir(spec.out_dir)).generate_eval_report(result, spec["checkpoint"])
    return EXIT_OK


def cmd_cost(spec: RunSpec) -> int:
    channels, height, width = spec["channels"], spec["height"], spec["width"]
    noah = count_cost(spec.noah_config(), channels, height, width)
    gap = count_gap_cost(spec.gap_config(), channels, height, width)
    print("\n".join(noah.as_lines("noah") + gap.as_lines("gap")))
    if spec.explicit_out:
        geometry = {"C": channels, "H": height, "W": width, "M": spec["num_classes"],
                    "N": spec["groups"], "r": spec.noah_config().ratio, "bias": spec["use_bias"]}
        ReportGenerator(prepare_output_dir(spec.out_dir)).generate_cost_report(geometry, noah, gap)
    return EXIT_OK


def cmd_bench(spec: RunSpec) -> int:
    geometry = BenchGeometry(channels=spec["channels"], height=spec["height"], width=spec["width"],
                             batch=spec["batch"], repeats=spec["repeats"], warmup=spec["warmup"],
                             seed=spec["seed"])
    bench = HeadBenchmark(spec.noah_config(), geometry, gap_bias=spec["use_bias"])
    banner("⏱️ HEAD LATENCY BENCHMARK", spec)
    frame = bench.run(verbose=spec["verbose"])

    reports = ReportGenerator(prepare_output_dir(spec.out_dir))
    summary = bench.summary()
    reports.generate_bench_report(frame, summary)
    csv_path = reports.save_csv_row(bench.csv_row(), "bench.csv")
    print(frame.to_string(index=False))
    emit(overhead_percent=f"{summary['overhead_percent']:.4f}",
         end_to_end_overhead_percent=f"{summary['end_to_end_overhead_percent']:.4f}",
         noah_fps=f"{summary['noah_head_fps']:.2f}", gap_fps=f"{summary['gap_head_fps']:.2f}",
         noah_checksum=summary["noah_head_checksum"], gap_checksum=summary["gap_head_checksum"],
         csv=csv_path)
    return EXIT_OK


def cmd_viz(spec: RunSpec) -> int:
    model, _ = load_checkpoint(spec["checkpoint"])
    visualizer = AttentionVisualizer(model, prepare_output_dir(spec.out_dir))
    _, eval_batch = load_splits(spec, need_train=False, eval_count=spec["samples"])
    if eval_batch is None:
        raise UsageError("viz needs eval_images and eval_labels for dataset=idx")
    count = min(spec["samples"], len(eval_batch))
    images, labels = eval_batch.images[:count], eval_batch.labels[:count]
    written = visualizer.export(images, spec["block"], categories=spec.categories(), labels=labels)
    emit(maps=len(written), out=spec.out_dir)
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "cost": cmd_cost,
    "bench": cmd_bench,
    "viz": cmd_viz,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="main.py", description="NOAH classification head toolkit")
    parser.add_argument("command", choices=SUBCOMMANDS)
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--out", help=f"output directory (default: {DEFAULT_OUT})")
    parser.add_argument("--seed", type=int, help="unsigned 64-bit seed, overrides seed=")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
    parser.add_argument("--checkpoint", help="checkpoint file for eval and viz")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one subcommand and return its exit code"""
    args = build_parser().parse_args(argv)
    overrides = list(args.set)
    if args.checkpoint:
        overrides.append(f"checkpoint={args.checkpoint}")
    try:
        spec = RunSpec.build(args.command, config_path=args.config, overrides=overrides,
                             seed=args.seed, out_dir=args.out)
        return COMMANDS[args.command](spec)
    except (NoahError, OSError) as error:
        print(f"❌ {error}", file=sys.stderr)
        return exit_code_for(error)
    except Exception as error:
        print(f"❌ Internal error: {type(error).__name__}: {error}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
