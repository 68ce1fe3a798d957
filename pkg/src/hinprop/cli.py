"""Command line entry point wiring the library into reproducible pipelines.

Subcommands: generate, paths, fit, classify, evaluate, sweep.  Every run
reads one JSON config (plus --set overrides), writes its artifacts under
--out, and finishes with a manifest.json echoing the effective config and
the SHA-256 of every input and output file.  Logs go to stderr; files are
the only data channel.  Exit codes: 0 success, 1 runtime failure, 2 bad
flags, 3 config validation failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import (RunConfig, load_config, require_dir, require_file,
                     validate_config)
from .datagen import generate_dataset, summarize
from .errors import ConfigError, HinpropError
from .experiment import (PathOperatorCache, run_experiment, sweep_parameter,
                         write_report_csv, write_report_md, write_sweep_csv,
                         write_weights_report)
from .graph import load_dataset, load_labels, save_dataset
from .metapath import PathFactor, commuting_matrix, dump_pathsim, parse_metapath, pathsim
from .propagate import assign_labels, label_matrix, propagate, spectral_radius_estimate
from .weights import build_training_pairs, fit_metapath_weights

log = logging.getLogger("hinprop")

_DATASET_FILES = ("schema.json", "nodes.csv", "edges.csv", "truth.csv")


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hinprop",
        description="Meta-path similarity and label propagation pipelines "
                    "on weighted heterogeneous information networks.")
    p.add_argument("--version", action="version", version=f"hinprop {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, data=False, seeds=False, threads=False, plots=False):
        sp.add_argument("--config", help="JSON config file (defaults apply without it)")
        sp.add_argument("--set", action="append", default=[], dest="overrides",
                        metavar="KEY=VALUE",
                        help="override a config key, e.g. svr.epsilon=0.3")
        sp.add_argument("--out", required=True, help="output directory")
        if data:
            sp.add_argument("--data", help="dataset directory "
                            "(overrides the config 'dataset' key)")
        if seeds:
            sp.add_argument("--seeds", help="CSV of revealed id,label seeds; "
                            "defaults to the dataset's labels")
        if threads:
            sp.add_argument("--threads", type=_positive_int, default=None,
                            help="worker threads (default: METAPATH_THREADS or 1)")
        if plots:
            sp.add_argument("--emit-plots", metavar="DIR", default=None,
                            help="also render SVG figures into DIR")

    sp = sub.add_parser("generate", help="write a synthetic dataset")
    common(sp)
    sp.set_defaults(func=_cmd_generate)

    sp = sub.add_parser("paths", help="dump PathSim matrices per meta-path")
    common(sp, data=True)
    sp.set_defaults(func=_cmd_paths)

    sp = sub.add_parser("fit", help="fit meta-path weights on seed labels")
    common(sp, data=True, seeds=True)
    sp.set_defaults(func=_cmd_fit)

    sp = sub.add_parser("classify", help="full pipeline: fit, fuse, propagate")
    common(sp, data=True, seeds=True)
    sp.set_defaults(func=_cmd_classify)

    sp = sub.add_parser("evaluate", help="run the seed-fraction protocol")
    common(sp, threads=True, plots=True)
    sp.set_defaults(func=_cmd_evaluate)

    sp = sub.add_parser("sweep", help="rerun the protocol over a parameter grid")
    common(sp, threads=True, plots=True)
    sp.add_argument("--param", choices=("lambda", "epsilon"), default=None,
                    help="swept parameter (default: config sweep.param)")
    sp.add_argument("--values", default=None,
                    help="comma-separated values (default: config sweep.values)")
    sp.set_defaults(func=_cmd_sweep)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        _report_error(exc)
        return 3
    except HinpropError as exc:
        _report_error(exc)
        return 1
    except Exception as exc:  # runtime failures outside our exception tree
        _report_error(exc)
        return 1


def _report_error(exc: Exception) -> None:
    line = json.dumps({"error": type(exc).__name__, "message": str(exc)})
    print(line, file=sys.stderr)


def _load_run_config(args) -> RunConfig:
    path = None
    if getattr(args, "config", None):
        path = require_file(args.config, "config")
    return validate_config(load_config(path, args.overrides))


def _threads(args) -> int:
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get("METAPATH_THREADS", "").strip()
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ConfigError(f"METAPATH_THREADS={env!r} is not an integer")
        if value < 1:
            raise ConfigError("METAPATH_THREADS must be >= 1")
        return value
    return 1


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _dataset_dir(args, rc: RunConfig) -> Path:
    candidate = getattr(args, "data", None) or rc.dataset
    if not candidate:
        raise ConfigError("no dataset: pass --data or set the 'dataset' config key")
    return require_dir(candidate, "dataset")


def _dataset_inputs(data_dir: Path) -> dict:
    inputs = {}
    for name in _DATASET_FILES:
        p = data_dir / name
        if p.exists():
            inputs[str(p)] = _sha256(p)
    return inputs


def _write_manifest(out_dir: Path, command: str, rc: RunConfig,
                    inputs: dict, outputs: list) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "config": rc.raw,
        "inputs": inputs,
        "outputs": {name: _sha256(out_dir / name) for name in sorted(outputs)},
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _config_inputs(args) -> dict:
    if getattr(args, "config", None):
        return {str(args.config): _sha256(args.config)}
    return {}


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_generate(args) -> int:
    rc = _load_run_config(args)
    if rc.gen is None:
        raise ConfigError("generate needs a 'gen' config section with "
                          "n_users and n_apps")
    out = _out_dir(args)
    t0 = time.perf_counter()
    graph, truth = generate_dataset(rc.gen)
    save_dataset(graph, None, out, truth=truth)
    stats = summarize(graph)
    log.info("generated %s in %.1fs: %s", out, time.perf_counter() - t0,
             json.dumps(stats, sort_keys=True))
    _write_manifest(out, "generate", rc, _config_inputs(args),
                    ["schema.json", "nodes.csv", "edges.csv", "truth.csv"])
    return 0


def _cmd_paths(args) -> int:
    rc = _load_run_config(args)
    data_dir = _dataset_dir(args, rc)
    out = _out_dir(args)
    graph, _ = load_dataset(data_dir)
    outputs = []
    for name in rc.metapaths:
        path = parse_metapath(name, graph)
        sim = pathsim(commuting_matrix(graph, path))
        dump_pathsim(sim, path.name, out)
        outputs.append(f"pathsim_{path.name}.csv")
        log.info("dumped PathSim for %s (%d x %d)", path.name, *sim.shape)
    inputs = {**_config_inputs(args), **_dataset_inputs(data_dir)}
    _write_manifest(out, "paths", rc, inputs, outputs)
    return 0


def _seed_labels(args, graph, truth) -> np.ndarray:
    if getattr(args, "seeds", None):
        seeds_file = require_file(args.seeds, "seeds")
        return load_labels(seeds_file, graph)
    return np.asarray(truth)


def _fit_beta(rc: RunConfig, graph, factors, seed_labels):
    seed_idx = np.nonzero(np.asarray(seed_labels) > 0)[0]
    if len(seed_idx) < 2:
        raise ValueError("need at least 2 labeled seed nodes to fit weights")
    pairs = build_training_pairs(graph, factors, seed_idx, rc.spec.max_pairs,
                                 rc.rng_seed, labels=seed_labels,
                                 target_mode=rc.spec.target_mode)
    beta = fit_metapath_weights(pairs, rc.svr)
    log.info("fit %d pairs: normalized weights %s, bias %.4f, "
             "KKT residual %.2e, %d iterations", len(pairs),
             np.array2string(beta.normalized, precision=4), beta.bias,
             beta.kkt_residual, beta.n_iter)
    return beta


def _write_beta(beta, names, path) -> None:
    payload = {
        "paths": list(names),
        "normalized": [float(v) for v in beta.normalized],
        "raw": [float(v) for v in beta.raw],
        "bias": float(beta.bias),
        "target_scale": float(beta.target_scale),
        "kkt_residual": float(beta.kkt_residual),
        "n_iter": int(beta.n_iter),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_fit(args) -> int:
    rc = _load_run_config(args)
    data_dir = _dataset_dir(args, rc)
    out = _out_dir(args)
    graph, truth = load_dataset(data_dir)
    seed_labels = _seed_labels(args, graph, truth)
    factors = [PathFactor(parse_metapath(p, graph), graph) for p in rc.metapaths]
    beta = _fit_beta(rc, graph, factors, seed_labels)
    _write_beta(beta, rc.metapaths, out / "beta.json")
    inputs = {**_config_inputs(args), **_dataset_inputs(data_dir)}
    if getattr(args, "seeds", None):
        inputs[str(args.seeds)] = _sha256(args.seeds)
    _write_manifest(out, "fit", rc, inputs, ["beta.json"])
    return 0


def _cmd_classify(args) -> int:
    rc = _load_run_config(args)
    data_dir = _dataset_dir(args, rc)
    out = _out_dir(args)
    graph, truth = load_dataset(data_dir)
    seed_labels = _seed_labels(args, graph, truth)

    cache = PathOperatorCache(graph, rc.metapaths)
    beta = _fit_beta(rc, graph, cache.factors, seed_labels)
    _write_beta(beta, cache.names, out / "beta.json")

    s_com = cache.assemble(beta.normalized)
    rho = spectral_radius_estimate(lambda v: s_com @ v, cache.n, max_iter=15)
    log.info("combined operator spectral radius estimate %.6f", rho)
    y = label_matrix(seed_labels, graph.schema.n_classes)
    scores = propagate(s_com, y, rc.prop)
    result = assign_labels(scores)

    ids = graph.nodes[graph.target_type]
    n_classes = graph.schema.n_classes
    header = "id,predicted,flag," + ",".join(
        f"score_{c}" for c in range(1, n_classes + 1))
    lines = [header]
    for i, node_id in enumerate(ids):
        score_cells = ",".join(f"{scores[i, c]:.6f}" for c in range(n_classes))
        lines.append(f"{node_id},{result.labels[i]},{result.flags[i]},{score_cells}")
    with open(out / "scores.csv", "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")

    inputs = {**_config_inputs(args), **_dataset_inputs(data_dir)}
    if getattr(args, "seeds", None):
        inputs[str(args.seeds)] = _sha256(args.seeds)
    _write_manifest(out, "classify", rc, inputs, ["beta.json", "scores.csv"])
    return 0


def _check_data_source(rc: RunConfig) -> dict:
    """Validate the experiment data source up front; returns input hashes."""
    if rc.dataset:
        return _dataset_inputs(require_dir(rc.dataset, "dataset"))
    if rc.gen is None:
        raise ConfigError("experiment needs a 'dataset' path or a 'gen' section")
    return {}


def _cmd_evaluate(args) -> int:
    rc = _load_run_config(args)
    out = _out_dir(args)
    data_inputs = _check_data_source(rc)
    threads = _threads(args)
    t0 = time.perf_counter()
    report = run_experiment(rc.spec, threads=threads)
    log.info("experiment finished in %.1fs (threads=%d)",
             time.perf_counter() - t0, threads)
    for fi, fraction in enumerate(report.fractions):
        means = ", ".join(
            f"{m} {report.mean_accuracy(m, fi):.2f}%" for m in report.methods)
        log.info("fraction %g: %s", fraction, means)
    if report.spectral:
        log.info("max spectral radius estimate %.9f", report.max_spectral())

    write_report_csv(report, out / "report.csv")
    write_report_md(report, out / "report.md")
    write_weights_report(report, out / "weights_report.csv")
    outputs = ["report.csv", "report.md", "weights_report.csv"]
    if args.emit_plots:
        from .plots import plot_accuracy
        plot_path = plot_accuracy(report, Path(args.emit_plots) / "accuracy_vs_fraction.svg")
        log.info("wrote %s", plot_path)
    inputs = {**_config_inputs(args), **data_inputs}
    _write_manifest(out, "evaluate", rc, inputs, outputs)
    return 0


def _cmd_sweep(args) -> int:
    rc = _load_run_config(args)
    out = _out_dir(args)
    data_inputs = _check_data_source(rc)
    threads = _threads(args)
    param = args.param or rc.sweep_param
    if args.values is not None:
        try:
            values = [float(v) for v in args.values.split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad --values list {args.values!r}: {exc}")
    else:
        values = rc.sweep_values
    t0 = time.perf_counter()
    sweep = sweep_parameter(rc.spec, param, values, threads=threads)
    log.info("sweep over %s=%s finished in %.1fs", param, values,
             time.perf_counter() - t0)
    write_sweep_csv(sweep, out / "sweep.csv")
    outputs = ["sweep.csv"]
    if args.emit_plots:
        from .plots import plot_sweep
        plot_path = plot_sweep(sweep, Path(args.emit_plots) / f"sweep_{param}.svg")
        log.info("wrote %s", plot_path)
    inputs = {**_config_inputs(args), **data_inputs}
    _write_manifest(out, "sweep", rc, inputs, outputs)
    return 0


if __name__ == "__main__":
    sys.exit(main())
