"""
An ensemble run without an API key
==================================

Three scripted judges answer from the ground truth with different error
rates. This exercises the whole pipeline: prompt building, option
shuffling, aggregation, checkpointing, resume and the metrics report.
Swap the ``backend`` for ``None`` and fill in ``endpoint_url`` /
``api_key_env_var`` to grade with a real chat-completions endpoint.
"""

import tempfile
from pathlib import Path

from rubriceval import EvalConfig, JudgeConfig, JudgeSpec, ScriptedBackend, load_dataset, resume_run, run_eval
from rubriceval.report import RunTotals, render_report
from rubriceval.summary import compute_metrics
from rubriceval.testing import label_responder

dataset = load_dataset(Path(__file__).parent / "data" / "chatbot_toy.json")


def panel():
    # fresh backends each time so call counts start at zero
    return [
        JudgeSpec(
            name,
            JudgeConfig(model_id=name, max_parallel_requests=4),
            weight,
            ScriptedBackend(responder=label_responder(dataset, flip_rate=rate, seed=i), prompt_tokens=700, completion_tokens=90, cost=0.0001),
        )
        for i, (name, rate, weight) in enumerate([("careful", 0.1, 1.2), ("hasty", 0.3, 1.0), ("middling", 0.2, 1.0)])
    ]


with tempfile.TemporaryDirectory() as root:
    config = EvalConfig(experiment_name="toy-chat", experiments_dir=root, master_seed=2024)

    # stop halfway, as if the process had been killed
    partial = run_eval(dataset, panel(), config, stop_after=12)
    print("after interruption:", partial.manifest["status"], partial.manifest["n_completed"], "items")

    # resume picks up the seed and settings from the manifest
    judges = panel()
    result = resume_run(partial.experiment_dir, dataset, judges)
    print("after resume:", result.manifest["status"], "new calls:", sum(j.backend.call_count for j in judges))

    first = result.reports[0]
    for cr in first.reports:
        votes = ", ".join(str(v.verdict) for v in cr.votes)
        print(f"  {cr.criterion_id:17s} -> {str(cr.verdict):9s} votes [{votes}]")

    summary = compute_metrics(result.reports, dataset, n_bootstrap=500, per_judge=True)
    print(render_report(summary, RunTotals.from_reports(result.reports)))
