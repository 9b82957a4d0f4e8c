# droidmark.py — Command-line entry point for the DroidMark pipeline
#
# Usage:
#   python droidmark.py analyze fixtures/elite.ir            # flows + suspects
#   python droidmark.py analyze --dir apps/ --out json       # whole corpus
#   python droidmark.py features fixtures/elite.ir
#   python droidmark.py simulate fixtures/elite_trace.csv --app fixtures/elite.ir
#   python droidmark.py arff convert data.arff --output data.json
#   python droidmark.py train data.arff --model-out net.json
#   python droidmark.py classify net.json unlabeled.arff
#   python droidmark.py evaluate data.arff --folds 10 --seed 1
#   python droidmark.py pipeline fixtures/elite.ir fixtures/elite_trace.csv
#   python droidmark.py catalog validate data/susi_catalog.tsv
#
# Every subcommand takes --config FILE (key=value), --out json|text and
# --quiet. Results go to stdout (or --output); [tag] status lines go to
# stderr.
#
# Exit codes: 0 ok, 1 input error, 2 analysis budget exceeded, 3 internal.

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import config
import corpus
from app_ir import IRError, load_app
from arff_io import ArffError, dataset_from_dict, dataset_to_dict, emit_arff, load_arff, parse_arff
from bayesnet import (
    BayesNetError, LearnerConfig, classify, format_model, network_from_dict,
    network_to_dict, score_network, train_classifier,
)
from catalog import CatalogError, load_catalog
from evaluation import EvaluationError, cross_validate, format_report, report_to_dict
from features import FeatureError, build_flow_features, extract_suspects, features_to_dataset
from monitor import (
    ELITE_PROCESSES, TraceError, generate_trace, instances_to_dataset, label_instances,
    load_trace, replay_trace, schema_processes, write_trace,
)
from taint import BudgetExceeded, TaintAnalyzer, TaintError, flows_to_report, report_json

EXIT_OK       = 0
EXIT_INPUT    = 1
EXIT_BUDGET   = 2
EXIT_INTERNAL = 3

INPUT_ERRORS = (
    IRError, CatalogError, TaintError, FeatureError, TraceError, ArffError,
    BayesNetError, EvaluationError, config.ConfigError, OSError, ValueError,
)

_quiet = False


def _log(message: str) -> None:
    if not _quiet:
        print(message, file=sys.stderr)


def _emit(text: str, path=None) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
        _log(f"[droidmark] wrote {path}")
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


# ---------------------------------------------------------------------------
# Shared stages
# ---------------------------------------------------------------------------

def _load_settings(args) -> config.PipelineConfig:
    overrides = {
        name: getattr(args, name, None)
        for name in ("catalog", "alias", "k", "max_iterations", "window_ms",
                     "alpha", "max_parents", "folds", "seed", "system_processes")
    }
    return config.load_config(args.config, **overrides)


def _learner(cfg: config.PipelineConfig) -> LearnerConfig:
    return LearnerConfig(max_parents=cfg.max_parents, alpha=cfg.alpha)


def _analyse(path, catalog, cfg) -> tuple:
    """Parse and analyse one app. Returns (app, flows); BudgetExceeded propagates."""
    app = load_app(path)
    analyzer = TaintAnalyzer(app, catalog, cfg.analysis())
    flows = analyzer.run()
    _log(f"[taint] {app.app_name}: {len(flows)} flow(s) in {analyzer.steps} step(s)")
    return app, flows


def _suspects_for(path, catalog, cfg):
    _, flows = _analyse(path, catalog, cfg)
    suspects = extract_suspects(flows, cfg.system_processes)
    _log(f"[features] {len(suspects)} suspected process(es)")
    return suspects


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_analyze(args, cfg) -> int:
    catalog = load_catalog(cfg.catalog)

    if args.dir:
        result = corpus.run(args.dir, catalog, cfg.analysis(), log=_log)
        if args.out == "json":
            _emit(_dump(result.to_dict()), args.output)
        else:
            lines = []
            for name in sorted(result.reports):
                report = result.reports[name]
                lines.append(f"{name}: {len(report['flows'])} flow(s)"
                             + ("" if report["sound"] else " (partial, unsound)"))
            lines += [f"{name}: error: {msg}" for name, msg in sorted(result.errors.items())]
            _emit("\n".join(lines) + ("\n" if lines else ""), args.output)
        if result.unsound:
            return EXIT_BUDGET
        return EXIT_INPUT if result.errors else EXIT_OK

    if not args.app:
        raise ValueError("analyze needs an app file or --dir")

    app = load_app(args.app)
    exit_code = EXIT_OK
    try:
        analyzer = TaintAnalyzer(app, catalog, cfg.analysis())
        flows = analyzer.run()
        sound = True
        _log(f"[taint] {app.app_name}: {len(flows)} flow(s) in {analyzer.steps} step(s)")
    except BudgetExceeded as e:
        flows, sound, exit_code = e.partial, False, EXIT_BUDGET

    report = flows_to_report(app.app_name, flows, catalog, sound=sound)
    suspects = extract_suspects(flows, cfg.system_processes)

    if args.out == "json":
        _emit(report_json({**report, "suspects": list(suspects)}), args.output)
    else:
        if args.output:
            _emit(report_json(report), args.output)
        lines = [f"App: {app.app_name}{'' if sound else '  (partial result, unsound)'}", "", "Flows:"]
        for row in report["flows"]:
            lines.append(
                f"  {row['source_method']} ({row['source_site']}) -> "
                f"{row['sink_method']} ({row['sink_site']})  "
                f"[{row['source_category']} -> {row['sink_category']}]"
            )
        lines += ["", "Process List:"] + [f"  {name}" for name in suspects]
        sys.stdout.write("\n".join(lines) + "\n")
    return exit_code


def cmd_features(args, cfg) -> int:
    catalog = load_catalog(cfg.catalog)
    app, flows = _analyse(args.app, catalog, cfg)
    vector = build_flow_features(flows, catalog, app.app_name)
    if args.arff:
        _emit(emit_arff(features_to_dataset([vector])), args.arff)
    if args.out == "json":
        _emit(_dump(vector.to_dict()), args.output)
    else:
        lines = [f"App: {app.app_name}", f"Set bits: {vector.count()}"]
        lines += [f"  {src} -> {snk}" for src, snk in vector.pairs()]
        _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def cmd_simulate(args, cfg) -> int:
    if args.app:
        suspects = list(_suspects_for(args.app, load_catalog(cfg.catalog), cfg))
    else:
        suspects = None

    if args.generate:
        events = generate_trace(cfg.seed, args.generate, suspects or ELITE_PROCESSES, cfg.window_ms)
        if args.trace_out:
            _emit(write_trace(events), args.trace_out)
    elif args.trace:
        events = load_trace(args.trace)
    else:
        raise ValueError("simulate needs a trace file or --generate N")

    if suspects is None:
        suspects = list(dict.fromkeys(e.process for e in events))
    instances = replay_trace(events, suspects, cfg.window_ms)
    if not args.no_label:
        instances = label_instances(instances)
    _log(f"[monitor] {len(instances)} instance(s) from {len(events)} event(s)")

    ds = instances_to_dataset(instances, schema_processes(suspects))
    if args.out == "json":
        _emit(_dump(dataset_to_dict(ds)), args.output)
    else:
        _emit(emit_arff(ds), args.output)
    return EXIT_OK


def cmd_arff(args, cfg) -> int:
    source = Path(args.input)
    if source.suffix.lower() == ".json":
        ds = dataset_from_dict(json.loads(source.read_text(encoding="utf-8")))
    else:
        ds = load_arff(source)
    target = args.to or ("arff" if source.suffix.lower() == ".json" else "json")
    _log(f"[arff] {ds.relation_name}: {len(ds.attributes)} attribute(s), {len(ds.rows)} row(s)")
    _emit(emit_arff(ds) if target == "arff" else _dump(dataset_to_dict(ds)), args.output)
    return EXIT_OK


def cmd_train(args, cfg) -> int:
    ds = load_arff(args.data)
    net = train_classifier(ds, _learner(cfg))
    scores = score_network(net, ds)
    if args.model_out:
        Path(args.model_out).write_text(_dump(network_to_dict(net)), encoding="utf-8")
        _log(f"[bayesnet] model written to {args.model_out}")
    if args.out == "json":
        _emit(_dump({"model": network_to_dict(net), "scores": scores.as_dict()}), args.output)
    else:
        _emit(format_model(net, scores), args.output)
    return EXIT_OK


def cmd_classify(args, cfg) -> int:
    net = network_from_dict(json.loads(Path(args.model).read_text(encoding="utf-8")))
    ds = load_arff(args.data)
    if ds.attribute_names != net.names:
        raise BayesNetError("dataset attributes do not match the model's variables")

    results = []
    for row in ds.rows:
        label, posterior = classify(net, row)
        results.append({"instance": list(row), "label": label,
                        "posterior": dict(zip(net.class_variable.values, posterior))})
    if args.out == "json":
        _emit(_dump(results), args.output)
    else:
        lines = []
        for r in results:
            probs = "  ".join(f"{k}={v:.3f}" for k, v in r["posterior"].items())
            lines.append(f"{r['instance'][0]}\t{r['label']}\t{probs}")
        _emit("\n".join(lines) + ("\n" if lines else ""), args.output)
    return EXIT_OK


def _evaluate(ds, cfg, out, output) -> int:
    learner = _learner(cfg)
    report = cross_validate(ds, cfg.folds, cfg.seed, learner)
    model = train_classifier(ds, learner)
    report = replace(report, model=format_model(model, score_network(model, ds)))
    _log(f"[evaluation] accuracy {100 * report.accuracy:.3f}% over {report.confusion.total} instance(s)")
    if out == "json":
        _emit(_dump(report_to_dict(report)), output)
    else:
        _emit(format_report(report), output)
    return EXIT_OK


def cmd_evaluate(args, cfg) -> int:
    return _evaluate(load_arff(args.data), cfg, args.out, args.output)


def cmd_pipeline(args, cfg) -> int:
    # Step 1: static analysis, then suspected processes
    suspects = list(_suspects_for(args.app, load_catalog(cfg.catalog), cfg))

    # Step 2: monitoring, then labelled instances
    instances = label_instances(replay_trace(load_trace(args.trace), suspects, cfg.window_ms))
    _log(f"[monitor] {len(instances)} labelled instance(s)")

    # Step 3: ARFF hand-off, then train and cross-validate
    text = emit_arff(instances_to_dataset(instances, schema_processes(suspects)))
    if args.arff_out:
        _emit(text, args.arff_out)
    return _evaluate(parse_arff(text), cfg, args.out, args.output)


def cmd_catalog(args, cfg) -> int:
    catalog = load_catalog(args.path or cfg.catalog)
    entries = catalog.entries()
    sources = sum(1 for e in entries if e.role.value == "SOURCE")
    summary = {"path": str(args.path or cfg.catalog), "entries": len(entries),
               "sources": sources, "sinks": len(entries) - sources}
    if args.out == "json":
        _emit(_dump(summary), args.output)
    else:
        _emit(f"{summary['path']}: ok, {sources} source(s), {summary['sinks']} sink(s)\n", args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value settings file")
    common.add_argument("--out", choices=("json", "text"), default="text", help="output form")
    common.add_argument("--output", help="write the result here instead of stdout")
    common.add_argument("--quiet", action="store_true", help="no status lines on stderr")
    common.add_argument("--catalog", help="source/sink catalog (TSV)")
    common.add_argument("--system-processes", dest="system_processes",
                        help="comma-separated always-monitored processes")

    analysis = argparse.ArgumentParser(add_help=False)
    analysis.add_argument("--alias", choices=("on", "off"), help="backward alias pass")
    analysis.add_argument("--k", type=int, help="access-path length limit")
    analysis.add_argument("--max-iterations", dest="max_iterations", type=int, help="step budget")

    learning = argparse.ArgumentParser(add_help=False)
    learning.add_argument("--max-parents", dest="max_parents", type=int)
    learning.add_argument("--alpha", type=float, help="CPT smoothing")

    validation = argparse.ArgumentParser(add_help=False)
    validation.add_argument("--folds", type=int)
    validation.add_argument("--seed", type=int)

    parser = argparse.ArgumentParser(prog="droidmark", description="Android malware detection pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common, analysis], help="taint-analyse an app")
    p.add_argument("app", nargs="?")
    p.add_argument("--dir", help="analyse every *.ir file in this directory")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("features", parents=[common, analysis], help="flow feature vector of an app")
    p.add_argument("app")
    p.add_argument("--arff", help="also write the vector as ARFF")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("simulate", parents=[common, analysis], help="replay a monitoring trace")
    p.add_argument("trace", nargs="?")
    p.add_argument("--app", help="restrict monitoring to this app's suspects")
    p.add_argument("--generate", type=int, metavar="N", help="generate an N-event trace instead")
    p.add_argument("--trace-out", dest="trace_out", help="write the generated trace here")
    p.add_argument("--window-ms", dest="window_ms", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--no-label", dest="no_label", action="store_true", help="leave Class unknown")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("arff", help="ARFF utilities")
    arff_sub = p.add_subparsers(dest="arff_command", required=True)
    c = arff_sub.add_parser("convert", parents=[common], help="ARFF <-> JSON")
    c.add_argument("input")
    c.add_argument("--to", choices=("json", "arff"))
    c.set_defaults(func=cmd_arff)

    p = sub.add_parser("train", parents=[common, learning], help="learn a network from ARFF data")
    p.add_argument("data")
    p.add_argument("--model-out", dest="model_out", help="save the network as JSON")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", parents=[common], help="classify ARFF rows with a saved network")
    p.add_argument("model")
    p.add_argument("data")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("evaluate", parents=[common, learning, validation], help="cross-validate")
    p.add_argument("data")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", parents=[common, analysis, learning, validation],
                       help="analyse, monitor, train and evaluate end to end")
    p.add_argument("app")
    p.add_argument("trace")
    p.add_argument("--window-ms", dest="window_ms", type=int)
    p.add_argument("--arff-out", dest="arff_out", help="keep the labelled ARFF here")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("catalog", help="catalog utilities")
    cat_sub = p.add_subparsers(dest="catalog_command", required=True)
    c = cat_sub.add_parser("validate", parents=[common], help="load and check a catalog")
    c.add_argument("path", nargs="?")
    c.set_defaults(func=cmd_catalog)

    return parser


def main(argv=None) -> int:
    global _quiet
    args = build_parser().parse_args(argv)
    _quiet = args.quiet
    try:
        cfg = _load_settings(args)
        return args.func(args, cfg)
    except BudgetExceeded as e:
        print(f"[droidmark] error: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except INPUT_ERRORS as e:
        print(f"[droidmark] error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as e:
        print(f"[droidmark] internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
