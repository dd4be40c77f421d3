"""Single entry point wiring the pipeline stages: synth, filter, detect,
eval, bench, stats, balance, and the annotation service.

Exit codes: 0 success, 1 domain errors (schema, alignment, endpoint), 2 usage
errors. Logs go to stderr; data only to files. Every pipeline command writes a
manifest beside its primary output; runs with the same taxonomy/endpoints/
mock/seed share a config hash, which chains the manifests of a pipeline.
"""

from __future__ import annotations

import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

import click

from . import benchmarks as bench_mod
from .annotation import AnnotationStore, create_app
from .corpus import assemble_balanced, load_records, load_sources, save_records, stats as corpus_stats
from .detection import KnowledgeConfig, PromptMode, load_predictions, run_detection, save_predictions
from .errors import HadkitError
from .filtering import filter_run
from .gateway import EndpointRegistry, Gateway, HttpBackend, MockRegistry, ScriptedBackend, load_mock_script
from .manifest import config_hash, write_manifest
from .metrics import evaluate
from .retrieval import retriever_for_endpoint
from .synthesis import inject, load_fewshot_pool
from .taxonomy import load_taxonomy

log = logging.getLogger("hadkit")

FIXED_MOCK_TIME = "1970-01-01T00:00:00Z"

_MODES = {
    "fine": PromptMode.FINE_GRAINED,
    "binary": PromptMode.BINARY,
    "baseline": PromptMode.BASELINE_FEW_SHOT,
}


class RunEnv:
    """Resolved shared configuration for one command invocation."""

    def __init__(
        self,
        taxonomy_path: str | None,
        endpoints_path: str | None,
        mock_path: str | None,
        seed: int,
        budget: int | None = None,
    ) -> None:
        self.taxonomy = load_taxonomy(taxonomy_path)
        self.seed = seed
        self.mock = mock_path is not None
        self.cfg_hash = config_hash(taxonomy_path, endpoints_path, mock_path, seed)
        self._endpoints_path = endpoints_path
        self._mock_path = mock_path
        self._budget = budget
        self._gateway: Gateway | None = None

    @property
    def gateway(self) -> Gateway:
        if self._gateway is None:
            if self._mock_path is not None:
                backend = ScriptedBackend(load_mock_script(self._mock_path))
            else:
                backend = HttpBackend()
            if self._endpoints_path is not None:
                registry = EndpointRegistry.from_path(self._endpoints_path)
            elif self.mock:
                registry = MockRegistry()
            else:
                registry = EndpointRegistry([])
            self._gateway = Gateway(registry, backend, budget=self._budget)
        return self._gateway

    def now(self) -> str:
        # A fixed clock under --mock keeps reruns byte-identical.
        if self.mock:
            return FIXED_MOCK_TIME
        return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def pipeline_options(fn):
    for option in (
        click.option("--taxonomy", "taxonomy_path", type=click.Path(exists=True), default=None,
                     help="Override the built-in taxonomy config."),
        click.option("--endpoints", "endpoints_path", type=click.Path(exists=True), default=None,
                     help="Endpoint registry JSON."),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--concurrency", type=int, default=8, show_default=True,
                     help="Max in-flight endpoint requests."),
        click.option("--mock", "mock_path", type=click.Path(exists=True), default=None,
                     help="Scripted-backend file; replaces all endpoint traffic."),
        click.option("--max-requests", "budget", type=int, default=None,
                     help="Abort once this many endpoint requests were made."),
    ):
        fn = option(fn)
    return fn


def _write_json(path: str | Path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


@click.group()
def cli() -> None:
    """Hallucination pipeline toolkit."""
    logging.basicConfig(
        level=logging.INFO, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )


@cli.command()
@click.option("--type", "type_id", required=True, help="Hallucination type to inject.")
@click.option("--sources", "sources_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--candidates", type=int, default=5, show_default=True)
@click.option("--temperature", type=float, default=1.0, show_default=True)
@click.option("--endpoint", default="injector", show_default=True)
@click.option("--pool", "pool_path", type=click.Path(exists=True), default=None,
              help="Few-shot example pool (JSONL); defaults to the shipped pool.")
@pipeline_options
def synth(type_id, sources_path, out_path, candidates, temperature, endpoint, pool_path,
          taxonomy_path, endpoints_path, seed, concurrency, mock_path, budget):
    """Inject one hallucination type into every source record."""
    env = RunEnv(taxonomy_path, endpoints_path, mock_path, seed, budget)
    started = env.now()
    sources = load_sources(sources_path)
    pool = load_fewshot_pool(pool_path)
    outcome = inject(
        sources,
        type_id,
        env.gateway,
        endpoint,
        pool=pool,
        taxonomy=env.taxonomy,
        n_candidates=candidates,
        temperature=temperature,
        seed=seed,
        max_in_flight=concurrency,
        clock=env.now,
    )
    save_records(outcome.records, out_path, env.taxonomy)
    log.info(
        "synth: %d records from %d sources (%d candidates dropped, %d source errors)",
        len(outcome.records), outcome.n_sources, outcome.n_dropped, len(outcome.errors),
    )
    write_manifest(
        "synth", out_path, env.cfg_hash, seed, [endpoint],
        inputs=[sources_path], outputs=[out_path],
        counts={
            "sources": outcome.n_sources,
            "records": len(outcome.records),
            "dropped": outcome.n_dropped,
            "source_errors": len(outcome.errors),
        },
        started_at=started, finished_at=env.now(),
    )


@cli.command("filter")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out-pass", "pass_path", required=True, type=click.Path())
@click.option("--out-fail", "fail_path", required=True, type=click.Path())
@click.option("--endpoint", default="verifier", show_default=True)
@click.option("--report", "report_path", required=True, type=click.Path())
@pipeline_options
def filter_cmd(in_path, pass_path, fail_path, endpoint, report_path,
               taxonomy_path, endpoints_path, seed, concurrency, mock_path, budget):
    """Verify raw candidates against the per-type criteria."""
    env = RunEnv(taxonomy_path, endpoints_path, mock_path, seed, budget)
    started = env.now()
    records = load_records(in_path, env.taxonomy)
    passed, failed, report = filter_run(
        records, env.gateway, endpoint, taxonomy=env.taxonomy, max_in_flight=concurrency
    )
    save_records(passed, pass_path, env.taxonomy)
    save_records(failed, fail_path, env.taxonomy)
    _write_json(report_path, report.to_dict())
    log.info(
        "filter: %d passed / %d failed / %d deferred (pass rate %.3f)",
        report.passed, report.failed, report.deferred, report.pass_rate,
    )
    write_manifest(
        "filter", pass_path, env.cfg_hash, seed, [endpoint],
        inputs=[in_path], outputs=[pass_path, fail_path, report_path],
        counts={"total": report.total, "passed": report.passed,
                "failed": report.failed, "deferred": report.deferred},
        started_at=started, finished_at=env.now(),
    )


@cli.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--mode", type=click.Choice(sorted(_MODES)), default="fine", show_default=True)
@click.option("--endpoint", default="detector", show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--with-knowledge", is_flag=True, default=False,
              help="Augment task inputs with retrieved passages.")
@click.option("--retriever", "retriever_id", default=None, help="Retriever endpoint id.")
@click.option("--topk", type=int, default=1, show_default=True)
@pipeline_options
def detect(in_path, mode, endpoint, out_path, with_knowledge, retriever_id, topk,
           taxonomy_path, endpoints_path, seed, concurrency, mock_path, budget):
    """Run a detector over records (always at temperature 0)."""
    env = RunEnv(taxonomy_path, endpoints_path, mock_path, seed, budget)
    started = env.now()
    records = load_records(in_path, env.taxonomy)
    knowledge = None
    if with_knowledge:
        if not retriever_id:
            raise click.UsageError("--with-knowledge requires --retriever")
        retriever = retriever_for_endpoint(env.gateway.registry.get(retriever_id))
        knowledge = KnowledgeConfig(retriever=retriever, top_k=topk)
    preds = run_detection(
        records,
        _MODES[mode],
        env.gateway,
        endpoint,
        taxonomy=env.taxonomy,
        knowledge=knowledge,
        max_in_flight=concurrency,
    )
    save_predictions(preds, out_path, env.taxonomy)
    n_errors = sum(1 for _, r in preds if r.error is not None)
    log.info("detect: %d predictions (%d transport errors)", len(preds), n_errors)
    write_manifest(
        "detect", out_path, env.cfg_hash, seed, [endpoint] + ([retriever_id] if retriever_id else []),
        inputs=[in_path], outputs=[out_path],
        counts={"records": len(records), "transport_errors": n_errors},
        started_at=started, finished_at=env.now(),
    )


@cli.command("eval")
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True))
@click.option("--preds", "preds_path", required=True, type=click.Path(exists=True))
@click.option("--report", "report_path", required=True, type=click.Path())
@click.option("--per-class", "per_class", is_flag=True, default=False,
              help="Print the per-class table to stderr.")
@click.option("--figures/--no-figures", default=True, show_default=True,
              help="Render the confusion-matrix heatmap beside the report.")
@pipeline_options
def eval_cmd(gold_path, preds_path, report_path, per_class, figures,
             taxonomy_path, endpoints_path, seed, concurrency, mock_path, budget):
    """Score predictions against gold records."""
    env = RunEnv(taxonomy_path, endpoints_path, mock_path, seed, budget)
    started = env.now()
    gold = load_records(gold_path, env.taxonomy)
    preds = load_predictions(preds_path, env.taxonomy)
    report = evaluate(gold, preds, env.taxonomy)
    _write_json(report_path, report.to_dict())
    csv_path = Path(str(report_path) + ".confusion.csv")
    csv_path.write_text(report.confusion.to_csv(), encoding="utf-8")
    outputs = [report_path, str(csv_path)]
    if figures:
        from .plots import render_confusion_heatmap

        png_path = Path(str(report_path) + ".confusion.png")
        render_confusion_heatmap(report.confusion, png_path)
        outputs.append(str(png_path))
    if per_class:
        for row in report.per_class:
            log.info(
                "%-36s P=%.4f R=%.4f F1=%.4f support=%g",
                row.cls, row.prf.precision, row.prf.recall, row.prf.f1, row.support,
            )
    log.info(
        "eval: binary acc %.4f, fine acc %.4f, BA %.4f, macro-F1 %.4f over %d items",
        report.binary_accuracy, report.fine_accuracy, report.balanced_accuracy,
        report.macro_f1, report.n_items,
    )
    write_manifest(
        "eval", report_path, env.cfg_hash, seed, [],
        inputs=[gold_path, preds_path], outputs=outputs,
        counts={"items": report.n_items, "hallucinated": report.n_hallucinated},
        started_at=started, finished_at=env.now(),
    )


@cli.command()
@click.option("--name", required=True, type=click.Choice(sorted(bench_mod.BENCHMARKS)))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--endpoint", default="detector", show_default=True)
@click.option("--mode", type=click.Choice(sorted(_MODES)), default="baseline", show_default=True)
@click.option("--report", "report_path", required=True, type=click.Path())
@click.option("--records-out", "records_path", type=click.Path(), default=None,
              help="Also save the ingested records.")
@click.option("--preds-out", "preds_path", type=click.Path(), default=None,
              help="Also save the raw predictions.")
@pipeline_options
def bench(name, data_path, endpoint, mode, report_path, records_path, preds_path,
          taxonomy_path, endpoints_path, seed, concurrency, mock_path, budget):
    """Ingest a benchmark file, run detection, and score with its metric."""
    env = RunEnv(taxonomy_path, endpoints_path, mock_path, seed, budget)
    started = env.now()
    spec = bench_mod.get_spec(name)
    records = bench_mod.ingest(spec, data_path)
    preds = run_detection(
        records, _MODES[mode], env.gateway, endpoint,
        taxonomy=env.taxonomy, max_in_flight=concurrency,
    )
    report = bench_mod.score(spec, records, preds, env.taxonomy)
    _write_json(report_path, report)
    outputs = [report_path]
    if records_path:
        save_records(records, records_path, env.taxonomy)
        outputs.append(records_path)
    if preds_path:
        save_predictions(preds, preds_path, env.taxonomy)
        outputs.append(preds_path)
    log.info("bench %s: %s", name, {k: v for k, v in report.items() if k not in ("benchmark",)})
    write_manifest(
        "bench", report_path, env.cfg_hash, seed, [endpoint],
        inputs=[data_path], outputs=outputs,
        counts={"items": report["n_items"]},
        started_at=started, finished_at=env.now(),
    )


@cli.command("stats")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--report", "report_path", required=True, type=click.Path())
@click.option("--figures/--no-figures", default=True, show_default=True)
@pipeline_options
def stats_cmd(in_path, report_path, figures,
              taxonomy_path, endpoints_path, seed, concurrency, mock_path, budget):
    """Dataset statistics: per-type / per-task counts and polarity."""
    env = RunEnv(taxonomy_path, endpoints_path, mock_path, seed, budget)
    started = env.now()
    records = load_records(in_path, env.taxonomy)
    result = corpus_stats(records, env.taxonomy)
    _write_json(report_path, result.to_dict())
    csv_path = Path(str(report_path) + ".csv")
    lines = ["section,key,count"]
    for key in result.per_type:
        lines.append(f"type,{key},{result.per_type[key]}")
    for key in result.per_task:
        lines.append(f"task,{key},{result.per_task[key]}")
    lines.append(f"polarity,hallucinated,{result.positives}")
    lines.append(f"polarity,clean,{result.negatives}")
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    outputs = [report_path, str(csv_path)]
    if figures:
        from .plots import render_stats_bars

        png_path = Path(str(report_path) + ".png")
        render_stats_bars(result, png_path)
        outputs.append(str(png_path))
    log.info("stats: %d records (%d hallucinated / %d clean)",
             result.total, result.positives, result.negatives)
    write_manifest(
        "stats", report_path, env.cfg_hash, seed, [],
        inputs=[in_path], outputs=outputs,
        counts={"total": result.total},
        started_at=started, finished_at=env.now(),
    )


@cli.command()
@click.option("--hallu", "hallu_path", required=True, type=click.Path(exists=True))
@click.option("--positives", "positives_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@pipeline_options
def balance(hallu_path, positives_path, out_path,
            taxonomy_path, endpoints_path, seed, concurrency, mock_path, budget):
    """Add an equal number of clean records mirroring the task distribution."""
    env = RunEnv(taxonomy_path, endpoints_path, mock_path, seed, budget)
    started = env.now()
    hallu = load_records(hallu_path, env.taxonomy)
    positives = load_sources(positives_path)
    balanced = assemble_balanced(hallu, positives, seed)
    save_records(balanced, out_path, env.taxonomy)
    log.info("balance: %d hallucinated + %d clean = %d records",
             len(hallu), len(balanced) - len(hallu), len(balanced))
    write_manifest(
        "balance", out_path, env.cfg_hash, seed, [],
        inputs=[hallu_path, positives_path], outputs=[out_path],
        counts={"hallucinated": len(hallu), "total": len(balanced)},
        started_at=started, finished_at=env.now(),
    )


@cli.group()
def annotate() -> None:
    """Annotation workflow commands."""


@annotate.command()
@click.option("--items", "items_path", required=True, type=click.Path(exists=True))
@click.option("--log", "log_path", type=click.Path(), default=None,
              help="Event log (default: <items>.events.jsonl).")
@click.option("--annotators", default="A,B", show_default=True,
              help="Comma-separated annotator ids.")
@click.option("--positives", "positives_path", type=click.Path(exists=True), default=None,
              help="Positives pool enabling balanced export.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8770, show_default=True)
@click.option("--token", default=None, help="Shared token required in X-Annotation-Token.")
@click.option("--lease-minutes", type=int, default=30, show_default=True)
@click.option("--ui", "ui_dir", type=click.Path(exists=True), default=None,
              help="Static UI bundle served at /ui.")
@click.option("--taxonomy", "taxonomy_path", type=click.Path(exists=True), default=None)
def serve(items_path, log_path, annotators, positives_path, host, port, token,
          lease_minutes, ui_dir, taxonomy_path):
    """Serve the annotation HTTP API (and the UI when a bundle is given)."""
    import uvicorn

    taxonomy = load_taxonomy(taxonomy_path)
    records = load_records(items_path, taxonomy)
    store = AnnotationStore(
        records,
        [a.strip() for a in annotators.split(",") if a.strip()],
        log_path=log_path or items_path + ".events.jsonl",
        lease_seconds=lease_minutes * 60,
        taxonomy=taxonomy,
    )
    positives = load_sources(positives_path) if positives_path else None
    app = create_app(store, taxonomy, token=token, positives=positives, ui_dir=ui_dir)
    log.info("annotation service: %d items, annotators %s", len(records), annotators)
    uvicorn.run(app, host=host, port=port)


def main() -> None:
    try:
        cli(prog_name="hadkit")
    except HadkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    main()
