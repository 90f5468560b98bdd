import json
import random

import pytest

from rubriceval import Criterion, CriterionOption, DatasetItem, Rubric, RubricDataset, Verdict, MET, UNMET


def industrial_rubric():
    return Rubric(
        [
            Criterion("Explains the causes", 30, id="causes", name="Causes"),
            Criterion("Explains the effects", 30, id="effects", name="Effects"),
            Criterion("Is well structured", 12, id="structure", name="Structure"),
            Criterion("Mentions Britain", 8, id="britain", name="Britain"),
            Criterion("Contains factual errors", -15, id="errors", name="Errors"),
        ]
    )


def _opts(*pairs, na=None):
    out = [CriterionOption(label, value) for label, value in pairs]
    if na:
        out.append(CriterionOption(na, 0.0, na=True))
    return tuple(out)


def chatbot_rubric():
    return Rubric(
        [
            Criterion("How satisfied would the user be?", 10, "ordinal",
                      _opts(("Very dissatisfied", 0.0), ("Somewhat dissatisfied", 0.33),
                            ("Somewhat satisfied", 0.67), ("Very satisfied", 1.0)), id="satisfaction"),
            Criterion("How helpful is the response?", 8, "ordinal",
                      _opts(("Not helpful", 0.0), ("Slightly helpful", 0.33),
                            ("Moderately helpful", 0.67), ("Very helpful", 1.0)), id="helpfulness"),
            Criterion("How natural does it sound?", 5, "ordinal",
                      _opts(("Robotic", 0.0), ("Mechanical", 0.33), ("Mostly natural", 0.67),
                            ("Very natural", 1.0)), id="naturalness"),
            Criterion("Is the length appropriate?", 4, "nominal",
                      _opts(("Too brief", 0.0), ("Too verbose", 0.0), ("Just right", 1.0)), id="response_length"),
            Criterion("The response is factually accurate", 10, id="factual_accuracy"),
            Criterion("How specific is the advice?", 6, "ordinal",
                      _opts(("Very vague", 0.0), ("Somewhat vague", 0.33), ("Moderately specific", 0.67),
                            ("Very specific", 1.0), na="N/A"), id="specificity"),
        ]
    )


def random_ground_truth(rubric, rng):
    gt = []
    for c in rubric.criteria:
        if c.is_binary:
            gt.append(rng.choice([MET, UNMET]))
        else:
            gt.append(Verdict.choice(rng.randrange(len(c.options))))
    return tuple(gt)


def make_dataset(rubric, n_items, seed=0, task_prompt="Answer the question."):
    rng = random.Random(seed)
    items = [
        DatasetItem(f"item{i:03d}", f"Submission number {i}: {rng.random():.6f}", None, random_ground_truth(rubric, rng))
        for i in range(n_items)
    ]
    return RubricDataset(rubric, tuple(items), task_prompt)


@pytest.fixture
def industrial():
    return industrial_rubric()


@pytest.fixture
def chatbot():
    return chatbot_rubric()


def met_json(status="MET", reason="because"):
    return json.dumps({"criterion_status": status, "explanation": reason})


def strip_timing_lines(path):
    out = []
    for line in path.read_text().splitlines():
        rec = json.loads(line)
        rec.pop("duration_seconds", None)
        out.append(rec)
    return out


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split(".")[0][7:])):
            terminalreporter.write_line(line)
