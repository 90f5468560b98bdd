"""Helpers for offline runs: scripted judges that answer from known labels."""

from __future__ import annotations

import json
import random
import re
from typing import Optional

from .dataset import RubricDataset
from .judging import JudgeRequest
from .rubric import VerdictKind

_OPTION_LINE = re.compile(r"^(\d+)\. (.*)$", re.MULTILINE)


def shown_options(user_text: str) -> dict[str, int]:
    """Map option label -> displayed number from a multi-choice prompt."""
    block = user_text.split("<options>\n", 1)[1].split("\n</options>", 1)[0]
    return {label: int(n) for n, label in _OPTION_LINE.findall(block)}


def label_responder(dataset: RubricDataset, flip_rate: float = 0.0, seed: int = 0, judge_bias: Optional[dict] = None):
    """Responder for :class:`ScriptedBackend` that replies with ground truth.

    With ``flip_rate`` > 0 a fraction of answers is replaced by a different
    label, chosen by a hash of (seed, item, criterion, judge) so the noise is
    reproducible and independent of call order.
    """
    items = {it.item_id: it for it in dataset.items}
    crit_index = {c.id: j for j, c in enumerate(dataset.rubric.criteria)}

    def respond(request: JudgeRequest) -> str:
        item = items[request.item_id]
        j = crit_index[request.criterion_id]
        criterion = dataset.rubric.criteria[j]
        verdict = item.ground_truth[j]
        rng = random.Random(f"{seed}|{request.item_id}|{request.criterion_id}|{request.judge_name}")
        flip = rng.random() < flip_rate
        if criterion.is_binary:
            status = verdict.kind.value
            if flip and status in ("MET", "UNMET"):
                status = "UNMET" if status == "MET" else "MET"
            return json.dumps({"criterion_status": status, "explanation": f"label {status}"})
        labels = [o.label for o in criterion.options]
        label = verdict.label_for(criterion) if verdict.kind is not VerdictKind.CANNOT_ASSESS else labels[0]
        if flip:
            label = rng.choice([l for l in labels if l != label])
        shown = shown_options(request.messages[1]["content"])
        return json.dumps({"selected_option": shown[label], "explanation": f"picked {label}"})

    return respond
