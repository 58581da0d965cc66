"""Batch pipeline CLI: preprocess -> learn -> extend -> average -> fit ->
evaluate -> report, plus single-stage subcommands and the query service.

Exit codes: 0 ok, 2 config error, 3 stage failure, 4 timed-out partial run.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import fixtures
from .average import average_to_json_obj, default_threshold, model_average, tally
from .cbn import (cbn_to_json_obj, cross_validate, fit_cpts,
                  intervention_delta_report, save_cbn, sensitivity)
from .data import load_csv, load_variable_specs, marginals, marginals_to_csv, preprocess
from .graph import (Graph, NoConsistentExtension, edges_to_csv, graph_from_csv,
                    knowledge_from_csv, to_dot, to_json_obj)
from .learn import Algorithm, GraphKind, LearnConfig, learn, to_dag
from .metrics import agreement_table, agreement_to_csv, metric_report
from .stats import bic_score

log = logging.getLogger("causalbn")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STAGE = 3
EXIT_TIMEOUT = 4


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    dataset: str
    out: str
    variables: str | None = None        # None -> shipped spec
    knowledge: str | None = None        # None -> shipped knowledge graph
    algorithms: list[str] = field(default_factory=lambda: [a.value for a in Algorithm])
    algorithm_options: dict = field(default_factory=dict)
    external_graphs: str | None = None  # directory of edge-list CSVs
    min_freq: int | str = "auto"
    cv_folds: int = 10
    intervention_target: str = "Diabetes_binary"
    intervention_variables: list[str] = field(default_factory=lambda: [
        "HighBP", "HighChol", "HeartDiseaseorAttack", "BMI", "Education",
        "PhysActivity"])
    seed: int = 0
    raw: bool = True  # dataset is raw-encoded and needs recoding
    plots: bool = False

    @staticmethod
    def from_file(path: str | Path, overrides: dict | None = None) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"no such config file: {path}")
        if path.suffix == ".json":
            obj = json.loads(path.read_text())
        else:
            obj = tomllib.loads(path.read_text())
        obj.update({k: v for k, v in (overrides or {}).items() if v is not None})
        try:
            return RunConfig(**obj)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def validate(self):
        for p in (self.dataset, self.variables, self.knowledge,
                  self.external_graphs):
            if p is not None and not Path(p).exists():
                raise ConfigError(f"path does not exist: {p}")
        unknown = set(self.algorithms) - {a.value for a in Algorithm}
        if unknown:
            raise ConfigError(f"unknown algorithms: {sorted(unknown)}")


def _load_specs(config: RunConfig):
    if config.variables:
        return load_variable_specs(config.variables)
    return fixtures.default_variable_specs()


def _load_knowledge(config: RunConfig, nodes):
    if config.knowledge:
        return knowledge_from_csv(Path(config.knowledge).read_text(), nodes)
    return fixtures.load_knowledge_graph()


def _load_dataset(config: RunConfig):
    import pandas as pd

    specs = _load_specs(config)
    if config.raw:
        frame = pd.read_csv(config.dataset)
        return preprocess(frame, specs)
    return load_csv(config.dataset, specs)


def _learn_config(config: RunConfig, name: str) -> LearnConfig:
    opts = dict(config.algorithm_options.get(name, {}))
    opts.setdefault("seed", config.seed)
    return LearnConfig(algorithm=Algorithm(name), **opts)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _write(path: Path, text: str, manifest: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    manifest["files"][str(path)] = _sha256(path)


def run_pipeline(config: RunConfig) -> int:
    config.validate()
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"seed": config.seed, "started": time.strftime("%Y-%m-%dT%H:%M:%S"),
                "files": {}, "timings": {}, "stages": []}
    timed_out = False

    def stage(name):
        manifest["stages"].append(name)
        log.info("stage: %s", name)
        return time.monotonic()

    # preprocess
    t0 = stage("preprocess")
    data = _load_dataset(config)
    report = marginals(data)
    _write(out / "marginals.csv", marginals_to_csv(report), manifest)
    _write(out / "marginals.json", json.dumps(report, indent=1), manifest)
    manifest["timings"]["preprocess"] = time.monotonic() - t0
    manifest["n_rows"] = data.n_rows
    manifest["dropped_rows"] = data.dropped_rows

    knowledge = _load_knowledge(config, list(data.names))

    # learn
    dags: dict[str, Graph] = {}
    scores: dict[str, dict] = {}
    for name in config.algorithms:
        t0 = stage(f"learn:{name}")
        result = learn(data, _learn_config(config, name))
        timed_out |= result.timed_out
        _write(out / f"learned_{name}.csv", edges_to_csv(result.graph), manifest)
        _write(out / f"learned_{name}.json", json.dumps({
            "graph": to_json_obj(result.graph),
            "graph_kind": result.graph_kind.value,
            "score_trace": result.score_trace,
            "test_count": result.test_count,
            "timed_out": result.timed_out,
            "notes": result.notes,
        }, indent=1), manifest)
        _write(out / f"learned_{name}.dot", to_dot(result.graph), manifest)
        try:
            dag = to_dag(result, seed=config.seed)
        except NoConsistentExtension as exc:
            log.warning("%s: %s; excluded from evaluation", name, exc)
            manifest["timings"][f"learn:{name}"] = time.monotonic() - t0
            continue
        dags[name] = dag
        sv = bic_score(data, dag)
        scores[name] = {"log_likelihood": sv.log_likelihood, "bic": sv.bic}
        manifest["timings"][f"learn:{name}"] = time.monotonic() - t0

    # external graphs (outputs of algorithms not implemented here)
    externals: list[Graph] = []
    if config.external_graphs:
        for p in sorted(Path(config.external_graphs).glob("*.csv")):
            externals.append(graph_from_csv(p.read_text(), nodes=list(data.names)))

    # average
    t0 = stage("average")
    inputs = [dags[n] for n in sorted(dags)] + externals
    avg_graph = None
    if inputs:
        t = tally(inputs)
        min_freq = (default_threshold(t.n_inputs) if config.min_freq == "auto"
                    else int(config.min_freq))
        avg = model_average(t, min_freq, list(data.names))
        avg_graph = avg.graph
        dags["average"] = avg_graph
        sv = bic_score(data, avg_graph)
        scores["average"] = {"log_likelihood": sv.log_likelihood, "bic": sv.bic}
        _write(out / "average.csv", edges_to_csv(avg_graph), manifest)
        _write(out / "average.json",
               json.dumps(average_to_json_obj(t, avg), indent=1), manifest)
        _write(out / "average.dot", to_dot(avg_graph), manifest)
    manifest["timings"]["average"] = time.monotonic() - t0

    # knowledge graph as a model of its own
    dags["knowledge_high"] = knowledge.slice("high")

    # evaluate against each knowledge tier
    t0 = stage("evaluate")
    rows = ["graph,tier,shd,precision,recall,f1,bsf"]
    for name in sorted(dags):
        for tier in ("high", "moderate", "low"):
            m = metric_report(dags[name], knowledge.slice(tier))
            rows.append(f"{name},{tier},{m.shd},{m.precision:.6f},"
                        f"{m.recall:.6f},{m.f1:.6f},{m.bsf:.6f}")
    _write(out / "metrics.csv", "\n".join(rows) + "\n", manifest)
    agree = agreement_table({n: g for n, g in dags.items()
                             if n != "knowledge_high"}, knowledge, tier="high")
    _write(out / "agreement.csv", agreement_to_csv(agree), manifest)
    _write(out / "agreement.json", json.dumps(agree, indent=1), manifest)
    _write(out / "scores.json", json.dumps(scores, indent=1), manifest)
    manifest["timings"]["evaluate"] = time.monotonic() - t0

    # fit CBNs, cross-validate, intervention + sensitivity reports
    t0 = stage("fit")
    models_dir = out / "models"
    models_dir.mkdir(exist_ok=True)
    target = config.intervention_target
    cv_rows = ["graph,mean_accuracy"]
    for name in sorted(dags):
        cbn = fit_cpts(dags[name], data)
        save_cbn(cbn, models_dir / f"{name}.json")
        manifest["files"][str(models_dir / f"{name}.json")] = _sha256(
            models_dir / f"{name}.json")
        cv = cross_validate(dags[name], data, target, folds=config.cv_folds,
                            seed=config.seed)
        cv_rows.append(f"{name},{cv['mean_accuracy']:.6f}")
    _write(out / "cv_accuracy.csv", "\n".join(cv_rows) + "\n", manifest)
    manifest["timings"]["fit"] = time.monotonic() - t0

    t0 = stage("intervene")
    focus = "average" if avg_graph is not None else "knowledge_high"
    cbn = fit_cpts(dags[focus], data)
    delta = intervention_delta_report(cbn, target, config.intervention_variables)
    _write(out / "intervention_deltas.json", json.dumps(delta, indent=1), manifest)
    manifest["timings"]["intervene"] = time.monotonic() - t0

    t0 = stage("sensitivity")
    sens = sensitivity(cbn, target)
    _write(out / "sensitivity.json", json.dumps({
        "target": sens["target"], "ranking": sens["ranking"],
        "max_abs_derivative": {n: sens["nodes"][n]["max_abs_derivative"]
                               for n in sens["nodes"]},
    }, indent=1), manifest)
    manifest["timings"]["sensitivity"] = time.monotonic() - t0

    if config.plots:
        _emit_plots(out, scores, manifest)

    manifest["finished"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1))
    return EXIT_TIMEOUT if timed_out else EXIT_OK


def _emit_plots(out: Path, scores: dict, manifest: dict):
    import matplotlib

    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots()
    for name, s in scores.items():
        ax.scatter(s["log_likelihood"], s["bic"], label=name)
        ax.annotate(name, (s["log_likelihood"], s["bic"]), fontsize=6)
    ax.set_xlabel("log-likelihood")
    ax.set_ylabel("BIC")
    fig.savefig(out / "scores.svg")
    plt.close(fig)
    manifest["files"][str(out / "scores.svg")] = _sha256(out / "scores.svg")


# ---------------------------------------------------------------------------
# argparse wiring


def _add_config_arg(p):
    p.add_argument("--config", required=True, help="TOML or JSON run config")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="causalbn")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("run", help="full pipeline from a run config")
    _add_config_arg(sp)

    sp = sub.add_parser("preprocess", help="recode a raw survey CSV")
    _add_config_arg(sp)

    sp = sub.add_parser("learn", help="run one structure learner")
    _add_config_arg(sp)
    sp.add_argument("--algorithm", required=True,
                    choices=[a.value for a in Algorithm])

    sp = sub.add_parser("average", help="model-average edge-list CSVs")
    _add_config_arg(sp)

    sp = sub.add_parser("evaluate", help="metrics vs a knowledge tier")
    _add_config_arg(sp)
    sp.add_argument("--graph", required=True, help="edge-list CSV to score")
    sp.add_argument("--tier", default="high",
                    choices=["high", "moderate", "low"])

    sp = sub.add_parser("intervene", help="single do-intervention query")
    _add_config_arg(sp)
    sp.add_argument("--model", required=True, help="CBN JSON file")
    sp.add_argument("--target", required=True)
    sp.add_argument("--do", action="append", default=[],
                    metavar="VAR=STATE")
    sp.add_argument("--evidence", action="append", default=[],
                    metavar="VAR=STATE")

    sp = sub.add_parser("sensitivity", help="sensitivity report for a model")
    _add_config_arg(sp)
    sp.add_argument("--model", required=True)
    sp.add_argument("--target", required=True)

    sp = sub.add_parser("cv", help="cross-validated target accuracy")
    _add_config_arg(sp)
    sp.add_argument("--graph", required=True)
    sp.add_argument("--target", required=True)

    sp = sub.add_parser("serve", help="start the HTTP query service")
    sp.add_argument("--models-dir", required=True)
    sp.add_argument("--bind", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8321)

    sp = sub.add_parser("make-data",
                        help="generate the synthetic survey fixture CSV")
    sp.add_argument("--out", required=True)
    sp.add_argument("--rows", type=int, default=fixtures.N_ROWS)
    sp.add_argument("--seed", type=int, default=2015)

    sp = sub.add_parser("make-graph-fixtures",
                        help="write the 11 learned-graph fixture CSVs")
    sp.add_argument("--out", required=True)
    return p


def _parse_assignments(pairs):
    out = {}
    for pair in pairs:
        var, _, state = pair.partition("=")
        if not state:
            raise ConfigError(f"expected VAR=STATE, got {pair!r}")
        out[var] = state
    return out


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("CAUSALBN_LOG", "INFO"),
        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # stage failure with a named diagnostic
        print(f"stage failure ({args.command}): {exc}", file=sys.stderr)
        return EXIT_STAGE


def _dispatch(args) -> int:
    cmd = args.command
    if cmd == "make-data":
        fixtures.generate_survey_csv(args.out, n_rows=args.rows, seed=args.seed)
        return EXIT_OK
    if cmd == "make-graph-fixtures":
        fixtures.write_averaging_fixtures(args.out)
        return EXIT_OK
    if cmd == "serve":
        from .service import serve

        serve(args.models_dir, bind=args.bind, port=args.port)
        return EXIT_OK

    overrides = {"seed": getattr(args, "seed", None),
                 "out": getattr(args, "out", None)}
    config = RunConfig.from_file(args.config, overrides)
    config.validate()
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)

    if cmd == "run":
        return run_pipeline(config)

    if cmd == "preprocess":
        data = _load_dataset(config)
        report = marginals(data)
        (out / "marginals.csv").write_text(marginals_to_csv(report))
        (out / "marginals.json").write_text(json.dumps(report, indent=1))
        (out / "preprocessed.csv").write_text(_dataset_to_csv(data))
        return EXIT_OK

    if cmd == "learn":
        data = _load_dataset(config)
        result = learn(data, _learn_config(config, args.algorithm))
        (out / f"learned_{args.algorithm}.csv").write_text(
            edges_to_csv(result.graph))
        (out / f"learned_{args.algorithm}.json").write_text(json.dumps({
            "graph": to_json_obj(result.graph),
            "graph_kind": result.graph_kind.value,
            "score_trace": result.score_trace,
            "test_count": result.test_count,
            "timed_out": result.timed_out,
        }, indent=1))
        return EXIT_TIMEOUT if result.timed_out else EXIT_OK

    if cmd == "average":
        specs = _load_specs(config)
        nodes = [v.name for v in specs]
        graphs = []
        src = Path(config.external_graphs or config.out)
        for p in sorted(src.glob("*.csv")):
            graphs.append(graph_from_csv(p.read_text(), nodes=nodes))
        if not graphs:
            raise ConfigError(f"no edge-list CSVs found in {src}")
        t = tally(graphs)
        min_freq = (default_threshold(t.n_inputs) if config.min_freq == "auto"
                    else int(config.min_freq))
        avg = model_average(t, min_freq, nodes)
        (out / "average.csv").write_text(edges_to_csv(avg.graph))
        (out / "average.json").write_text(
            json.dumps(average_to_json_obj(t, avg), indent=1))
        return EXIT_OK

    if cmd == "evaluate":
        specs = _load_specs(config)
        nodes = [v.name for v in specs]
        g = graph_from_csv(Path(args.graph).read_text(), nodes=nodes)
        knowledge = _load_knowledge(config, nodes)
        m = metric_report(g, knowledge.slice(args.tier))
        print(json.dumps({"shd": m.shd, "precision": m.precision,
                          "recall": m.recall, "f1": m.f1, "bsf": m.bsf}))
        return EXIT_OK

    if cmd == "intervene":
        from .cbn import load_cbn, posterior, intervene as _intervene
        from .cbn import InterventionQuery

        do = _parse_assignments(args.do)
        evidence = _parse_assignments(args.evidence)
        cbn = load_cbn(args.model)
        q = InterventionQuery(target=args.target, do_assignments=do,
                              evidence=evidence)
        baseline = posterior(cbn, args.target)
        dist = _intervene(cbn, q)
        states = list(cbn.spec_of(args.target).states)
        print(json.dumps({
            "target": args.target, "states": states,
            "baseline": [float(x) for x in baseline],
            "posterior": [float(x) for x in dist],
            "delta_pp": [100.0 * float(p - b) for p, b in zip(dist, baseline)],
        }))
        return EXIT_OK

    if cmd == "sensitivity":
        from .cbn import load_cbn

        cbn = load_cbn(args.model)
        report = sensitivity(cbn, args.target)
        print(json.dumps({
            "target": args.target, "ranking": report["ranking"],
            "max_abs_derivative": {n: report["nodes"][n]["max_abs_derivative"]
                                   for n in report["nodes"]}}))
        return EXIT_OK

    if cmd == "cv":
        data = _load_dataset(config)
        g = graph_from_csv(Path(args.graph).read_text(), nodes=list(data.names))
        result = cross_validate(g, data, args.target, folds=config.cv_folds,
                                seed=config.seed)
        print(json.dumps(result))
        return EXIT_OK

    raise ConfigError(f"unknown subcommand {cmd!r}")


def _dataset_to_csv(data) -> str:
    import io

    import pandas as pd

    frame = pd.DataFrame(
        {v.name: [v.states[i] for i in data.column(v.name)]
         for v in data.variables})
    buf = io.StringIO()
    frame.to_csv(buf, index=False)
    return buf.getvalue()


if __name__ == "__main__":
    sys.exit(main())
