"""Benchmark execution and report emission.

Questions run with bounded concurrency; rows keep dataset order and the
aggregates are recomputable from them. Reports are written as sorted,
indented JSON plus a human summary table, so identical runs produce
byte-identical files.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

from .dataset import QuestionRecord
from .metrics import answer_coverage, hits_at_1, macro_f1
from .pipeline import Pipeline, PipelineResult

STAGES = ("judgment", "exploration", "forced")


@dataclass
class RunReport:
    config: dict[str, Any]
    rows: list[dict[str, Any]]
    aggregates: dict[str, Any]

    def to_json(self) -> str:
        payload = {
            "aggregates": self.aggregates,
            "config": self.config,
            "rows": self.rows,
        }
        return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    @property
    def any_failed(self) -> bool:
        return any(row["failed"] for row in self.rows)


def _result_row(record: QuestionRecord, result: PipelineResult) -> dict[str, Any]:
    telemetry = result.telemetry.snapshot()
    return {
        "id": record.id,
        "question": record.question,
        "gold": sorted(record.answers),
        "unanswerable": record.unanswerable,
        "answers": result.answers,
        "stage": result.stage,
        "rounds_used": result.rounds_used,
        "sufficient": result.sufficient,
        "hits_at_1": hits_at_1(result.answers, record.answers),
        "macro_f1": macro_f1(result.answers, record.answers),
        "failed": result.failed,
        "error": result.error,
        **telemetry,
    }


def aggregate_rows(rows: Sequence[Mapping[str, Any]]) -> dict[str, Any]:
    n = len(rows)
    if n == 0:
        return {"questions": 0}

    def mean(key: str) -> float:
        return round(sum(row[key] for row in rows) / n, 6)

    return {
        "questions": n,
        "hits_at_1": mean("hits_at_1"),
        "macro_f1": mean("macro_f1"),
        "mean_llm_calls": mean("llm_calls"),
        "mean_input_tokens": mean("input_tokens"),
        "mean_output_tokens": mean("output_tokens"),
        "mean_wall_time": mean("wall_time"),
        "stage_counts": {s: sum(1 for r in rows if r["stage"] == s) for s in STAGES},
        "failed": sum(1 for r in rows if r["failed"]),
    }


def summary_table(aggregates: Mapping[str, Any]) -> str:
    """Human summary mirroring the efficiency-table columns."""
    if aggregates.get("questions", 0) == 0:
        return "No questions.\n"
    header = (
        f"{'Questions':>9}  {'Hits@1':>7}  {'Macro-F1':>8}  {'LLM Call':>9}  "
        f"{'Input Token':>12}  {'Output Token':>13}  {'Time (s)':>9}"
    )
    line = (
        f"{aggregates['questions']:>9}  {aggregates['hits_at_1']:>7.3f}  "
        f"{aggregates['macro_f1']:>8.3f}  {aggregates['mean_llm_calls']:>9.1f}  "
        f"{aggregates['mean_input_tokens']:>12.1f}  "
        f"{aggregates['mean_output_tokens']:>13.1f}  "
        f"{aggregates['mean_wall_time']:>9.2f}"
    )
    stages = aggregates["stage_counts"]
    dist = "  ".join(f"{s}={stages[s]}" for s in STAGES)
    return f"{header}\n{line}\nStage distribution: {dist}\nFailed: {aggregates['failed']}\n"


def _write_outputs(report: RunReport, results: Sequence[PipelineResult], out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
    (out_dir / "summary.txt").write_text(summary_table(report.aggregates), encoding="utf-8")
    trace_dir = out_dir / "traces"
    trace_dir.mkdir(exist_ok=True)
    for result in results:
        lines = "".join(
            json.dumps(event, sort_keys=True, ensure_ascii=False) + "\n"
            for event in result.trace
        )
        (trace_dir / f"{result.question_id}.jsonl").write_text(lines, encoding="utf-8")


def run_benchmark(
    records: Sequence[QuestionRecord],
    pipeline: Pipeline,
    out_dir: str | Path | None = None,
    concurrency: int = 4,
    config_manifest: Mapping[str, Any] | None = None,
    judge_only: bool = False,
) -> RunReport:
    """Run the pipeline over a dataset and (optionally) write the report,
    summary, and per-question trace files."""
    if concurrency < 1:
        raise ValueError("concurrency must be a positive integer")
    runner = pipeline.judge_only if judge_only else pipeline.answer_question
    if len(records) == 0:
        results: list[PipelineResult] = []
    elif concurrency == 1:
        results = [runner(r) for r in records]
    else:
        with ThreadPoolExecutor(max_workers=min(concurrency, len(records))) as pool:
            results = list(pool.map(runner, records))
    rows = [_result_row(rec, res) for rec, res in zip(records, results)]
    report = RunReport(
        config=dict(config_manifest or {}),
        rows=rows,
        aggregates=aggregate_rows(rows),
    )
    if out_dir is not None:
        _write_outputs(report, results, Path(out_dir))
    return report


def run_coverage(
    records: Sequence[QuestionRecord],
    pipeline: Pipeline,
    k_values: Sequence[int],
    out_dir: str | Path | None = None,
    config_manifest: Mapping[str, Any] | None = None,
) -> dict[str, Any]:
    """Retrieval-only answer coverage at the requested K values."""
    ranked = [[sp.path for sp in pipeline.retrieve(r)] for r in records]
    gold = [r.answers for r in records]
    coverage = answer_coverage(ranked, gold, k_values)
    payload = {
        "config": dict(config_manifest or {}),
        "coverage": {str(k): coverage[k] for k in k_values},
        "questions": len(records),
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "coverage.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
    return payload
