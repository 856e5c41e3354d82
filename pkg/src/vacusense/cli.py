"""Command-line interface: simulate / train / bench / report / replay / serve."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import bench as bench_mod
from .config import load_config
from .detector import replay as replay_session
from .features import save_feature_dataset
from .hydraulics import (
    PA_PER_MMHG,
    ContactState,
    VesselScenario,
    save_trace_json,
    simulate_trace,
    trace_to_csv,
)
from .study import (
    load_study_records,
    render_report_markdown,
    study_report,
)
from .svm import cross_validate, load_model, save_model, split_evaluate, train


def _add_config_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config",
        type=Path,
        default=None,
        help="YAML config path (defaults to $VACUSENSE_CONFIG, then built-ins)",
    )


def cmd_simulate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    scenario = VesselScenario(
        contact_state=ContactState(args.state),
        heart_rate=args.heart_rate,
        heartbeat_amplitude=config.scenario.heartbeat_amplitude_pa,
        tortuosity_factor=args.tortuosity or config.scenario.tortuosity_factor,
        noise_std=config.scenario.noise_std_pa,
        rng_seed=args.seed,
    )
    trace = simulate_trace(
        scenario,
        config.catheter,
        config.drive,
        args.duration,
        contact_gain=config.contact_model.contact_gain,
        seal_factor=config.contact_model.seal_factor,
    )
    out = args.out
    if out.suffix == ".csv":
        trace_to_csv(trace, out)
    else:
        save_trace_json(trace, out)
    mean_pa = float(trace.samples.mean())
    print(
        f"wrote {len(trace)} samples to {out} "
        f"(mean {mean_pa:.1f} Pa = {mean_pa / PA_PER_MMHG:.1f} mmHg)"
    )
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    corpus = bench_mod.build_training_corpus(seed=args.seed, config=config)
    if args.corpus_out:
        save_feature_dataset(corpus, args.corpus_out)
        print(f"wrote {len(corpus)}-point corpus to {args.corpus_out}")
    model = train(corpus, gamma=config.svm.gamma, c=config.svm.c)
    save_model(model, args.out)
    print(f"trained on {len(corpus)} samples; model saved to {args.out}")
    print(f"  gamma={model.gamma:.6g} c={model.c} support_vectors={len(model.dual_coef)}")
    split = split_evaluate(corpus, seed=args.seed)
    cv = cross_validate(corpus, seed=args.seed)
    print(f"  30.3%-train split x10: accuracy={split.mean_accuracy:.4f} f1={split.mean_f1:.4f}")
    print(f"  10-fold CV loss: {cv.classification_loss:.4f}")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    model = load_model(args.model)
    protocol = bench_mod.BenchProtocol(seed=args.seed)
    report = bench_mod.run_benchtop(protocol, model, config=config, parallel=args.parallel)
    args.out_dir.mkdir(parents=True, exist_ok=True)

    with open(args.out_dir / "samples.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["location_id", "trial", "sample", "heart_rate_bpm", "distance_mm",
             "actual", "verdict", "decision_score"]
        )
        for row in report.outcomes:
            writer.writerow(
                [row.location_id, row.trial, row.sample, row.heart_rate,
                 row.distance_mm, row.actual.text, row.verdict.text,
                 repr(row.decision_score)]
            )

    with open(args.out_dir / "feature_space.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["relative_average_pressure_pa", "pressure_change_from_prior_pa",
             "verdict", "actual"]
        )
        for row in report.outcomes:
            writer.writerow(
                [repr(row.relative_average_pressure_pa),
                 repr(row.pressure_change_from_prior_pa),
                 row.verdict.text, row.actual.text]
            )

    m = bench_mod.metrics(report.counts)
    metrics_doc = {
        "counts": {
            "tp": report.counts.tp, "fp": report.counts.fp,
            "fn": report.counts.fn, "tn": report.counts.tn,
            "total": report.counts.total,
        },
        "metrics": {
            "accuracy": m.accuracy, "precision": m.precision, "recall": m.recall,
            "specificity": m.specificity, "f1": m.f1, "f2": m.f2,
        },
        "per_heart_rate": {
            str(hr): {"tp": c.tp, "fp": c.fp, "fn": c.fn, "tn": c.tn}
            for hr, c in report.per_heart_rate.items()
        },
        "truncated_trials": report.truncated_trials,
    }
    (args.out_dir / "metrics.json").write_text(json.dumps(metrics_doc, indent=2))

    print(f"benchtop: {report.counts.total} samples "
          f"({report.counts.tp + report.counts.fn} contact / "
          f"{report.counts.fp + report.counts.tn} non-contact)")
    for name in ("accuracy", "precision", "recall", "specificity", "f1", "f2"):
        value = metrics_doc["metrics"][name]
        print(f"  {name}: {value:.4f}" if value is not None else f"  {name}: n/a")
    print(f"outputs in {args.out_dir}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    records = load_study_records(args.records)
    report = study_report(records)
    if args.out:
        args.out.write_text(json.dumps(report, indent=2))
        print(f"wrote JSON report to {args.out}")
    markdown = render_report_markdown(report)
    if args.markdown:
        args.markdown.write_text(markdown)
        print(f"wrote markdown report to {args.markdown}")
    else:
        print(markdown)
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    report = replay_session(args.session_dir, model)
    for event in report.events:
        print(
            f"  cycle {event.index}: {event.verdict.text} "
            f"(score {event.decision_score:+.4f})"
        )
    if report.verdicts_match:
        print(f"replay OK: {len(report.events)} events reproduced exactly")
        return 0
    print(f"replay MISMATCH: {len(report.mismatches)} differences")
    for m in report.mismatches:
        print(f"  event {m.index} {m.field}: stored={m.stored!r} replayed={m.replayed!r}")
    return 1


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    config = load_config(args.config)
    model = load_model(args.model) if args.model else None
    app = create_app(
        args.data_dir,
        config=config,
        model=model,
        default_seed=args.seed,
        console_dir=args.console_dir,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vacusense",
        description="Vacuum-excitation catheter-thrombus contact sensing toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate one pressure trace")
    _add_config_arg(p)
    p.add_argument("--state", choices=[s.value for s in ContactState],
                   default="open_vessel")
    p.add_argument("--duration", type=float, default=2.0, help="seconds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--heart-rate", type=float, default=0.0, help="bpm")
    p.add_argument("--tortuosity", type=float, default=None)
    p.add_argument("--out", type=Path, required=True,
                   help="output path (.csv or .json)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="build the labeled corpus and train the classifier")
    _add_config_arg(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True, help="model JSON path")
    p.add_argument("--corpus-out", type=Path, default=None, help="optional corpus CSV")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("bench", help="run the benchtop validation protocol")
    _add_config_arg(p)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--parallel", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="summarize study records (CSV in, JSON/markdown out)")
    p.add_argument("--records", type=Path, required=True)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--markdown", type=Path, default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("replay", help="re-run a persisted detection session and diff")
    p.add_argument("--session-dir", type=Path, required=True)
    p.add_argument("--model", type=Path, required=True)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("serve", help="run the session service")
    _add_config_arg(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8077)
    p.add_argument("--data-dir", type=Path, required=True)
    p.add_argument("--model", type=Path, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--console-dir", type=Path, default=None,
                   help="static console bundle to serve at /console")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
