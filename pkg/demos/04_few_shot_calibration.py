"""
Few-shot calibration from labelled examples
===========================================

Hold out a stratified training split, draw class-balanced exemplars per
criterion, and show where they land in the judge prompt.
"""

from collections import Counter
from pathlib import Path

from rubriceval import FewShotConfig, build_binary_prompt, load_dataset, render_exemplars, sample_few_shot

dataset = load_dataset(Path(__file__).parent / "data" / "chemistry_toy.json")
split = dataset.split_train_test(n_train=10, stratify=True, seed=42)
print(f"train {len(split.train)} / test {len(split.test)}")

config = FewShotConfig(n_examples=4, balance_verdicts=True, include_reason=False, seed=42)
criterion = dataset.rubric[1]
exemplars = sample_few_shot(split.train.items, 1, criterion, config)
print("exemplar labels:", Counter(e.label for e in exemplars))

# exemplars are rendered into the user message ahead of the graded submission
item = split.test.items[0]
bundle = build_binary_prompt(
    criterion,
    item.submission,
    task_prompt=dataset.task_prompt,
    exemplars=render_exemplars(exemplars, config.include_reason),
)
print(bundle.user_text)
