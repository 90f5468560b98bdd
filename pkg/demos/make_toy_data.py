"""
Toy datasets
============

Writes two small synthetic datasets into ``demos/data``. They follow the
dataset JSON schema but contain made-up text, not real benchmark data.

* ``chatbot_toy.json``: single-turn chatbot replies graded on a mixed
  rubric (binary, ordinal with and without N/A, nominal).
* ``chemistry_toy.json``: short student answers graded on a binary
  checklist with TRUE/FALSE labels and one penalty criterion.
"""

import json
import random
from pathlib import Path

OUT = Path(__file__).parent / "data"
rng = random.Random(7)

# -- chatbot rubric ---------------------------------------------------------

def ordinal(requirement, weight, cid, labels, na=False):
    options = [{"label": l, "value": round(i / (len(labels) - 1), 2)} for i, l in enumerate(labels)]
    if na:
        options.append({"label": "N/A", "value": 0.0, "na": True})
    return {"id": cid, "requirement": requirement, "weight": weight, "scale_type": "ordinal", "options": options}


chatbot_rubric = [
    ordinal("How satisfied would the user be with this reply?", 10, "satisfaction",
            ["Very dissatisfied", "Somewhat dissatisfied", "Somewhat satisfied", "Very satisfied"]),
    ordinal("How helpful is the reply for the user's goal?", 8, "helpfulness",
            ["Not helpful", "Slightly helpful", "Moderately helpful", "Very helpful"]),
    ordinal("How natural does the reply sound?", 5, "naturalness",
            ["Robotic", "Somewhat mechanical", "Mostly natural", "Very natural"]),
    {"id": "response_length", "requirement": "Is the reply length appropriate for the question?", "weight": 4,
     "scale_type": "nominal",
     "options": [{"label": "Too brief", "value": 0.0}, {"label": "Too verbose", "value": 0.0},
                 {"label": "Just right", "value": 1.0}]},
    {"id": "factual_accuracy", "requirement": "All factual claims in the reply are correct", "weight": 10},
    ordinal("How specific is the advice given?", 6, "specificity",
            ["Very vague", "Somewhat vague", "Moderately specific", "Very specific"], na=True),
]

questions = [
    ("How long should I boil an egg for a runny yolk?", "about six minutes in already boiling water"),
    ("What is the capital of Australia?", "Canberra"),
    ("Can you suggest a stretch for lower back pain?", "a gentle knee-to-chest stretch held for 20 seconds"),
    ("How do I reverse a list in Python?", "my_list.reverse() or my_list[::-1]"),
    ("Why is the sky blue?", "shorter wavelengths scatter more strongly off air molecules"),
    ("What's a good name for a goldfish?", "Bubbles"),
    ("How many litres are in a gallon?", "about 3.79 litres in a US gallon"),
    ("Tell me a fun fact about octopuses.", "they have three hearts"),
]

items = []
for n in range(24):
    q, a = questions[n % len(questions)]
    quality = rng.random()
    correct = rng.random() < 0.75
    answer = a if correct else "I believe it is something else entirely"
    if quality > 0.66:
        reply = f"Good question! The short answer is {answer}. Let me know if you'd like more detail."
    elif quality > 0.33:
        reply = f"{answer.capitalize()}."
    else:
        reply = f"Regarding your query: {answer}. " + "Please note further considerations may apply. " * 3
    level = min(3, int(quality * 4))
    length = "Just right" if 0.33 < quality <= 0.66 or quality > 0.8 else ("Too brief" if quality > 0.5 else "Too verbose")
    chitchat = n % len(questions) == 5
    labels = [
        chatbot_rubric[0]["options"][level]["label"],
        chatbot_rubric[1]["options"][max(0, level - (0 if correct else 1))]["label"],
        chatbot_rubric[2]["options"][min(3, level + rng.randint(0, 1))]["label"],
        length,
        "MET" if correct else "UNMET",
        "N/A" if chitchat else chatbot_rubric[5]["options"][level]["label"],
    ]
    submission = json.dumps([{"role": "user", "content": q}, {"role": "assistant", "content": reply}])
    items.append({"item_id": f"chat-{n:02d}", "submission": submission,
                  "description": "synthetic", "ground_truth": labels})

chatbot = {"task_prompt": "Reply helpfully to the user's message.", "rubric": {"criteria": chatbot_rubric}, "items": items}

# -- chemistry checklist ----------------------------------------------------

chem_rubric = [
    {"id": "c1", "name": "Electron shells", "requirement": "States that electrons occupy discrete energy levels", "weight": 2},
    {"id": "c2", "name": "Photon emission", "requirement": "Explains that light is emitted when an electron drops to a lower level", "weight": 2},
    {"id": "c3", "name": "Energy gap", "requirement": "Links the colour of the light to the size of the energy gap", "weight": 1},
    {"id": "c4", "name": "Element specific", "requirement": "Notes that each element has a characteristic spectrum", "weight": 1},
    {"id": "c5", "name": "Misconception", "requirement": "Claims that the flame colour comes from the heat of the burner alone", "weight": -1},
]
fragments = [
    "Electrons sit in fixed energy levels around the nucleus.",
    "When an excited electron falls back down it gives off a photon.",
    "A bigger energy gap means a higher frequency, so a different colour.",
    "Every element has its own pattern of lines, like a fingerprint.",
    "The colour is just because the burner is so hot.",
]
chem_items = []
for n in range(30):
    present = [rng.random() < p for p in (0.8, 0.65, 0.45, 0.55, 0.2)]
    text = " ".join(f for f, keep in zip(fragments, present) if keep) or "I am not sure why the flame changes colour."
    chem_items.append({"item_id": f"student-{n:02d}", "submission": text,
                       "ground_truth": ["TRUE" if p else "FALSE" for p in present]})

chemistry = {
    "task_prompt": "Explain why different metal salts give different flame colours.",
    "rubric": {"criteria": chem_rubric},
    "items": chem_items,
}

if __name__ == "__main__":
    OUT.mkdir(exist_ok=True)
    (OUT / "chatbot_toy.json").write_text(json.dumps(chatbot, indent=2))
    (OUT / "chemistry_toy.json").write_text(json.dumps(chemistry, indent=2))
    print(f"wrote {len(items)} chatbot items and {len(chem_items)} chemistry items to {OUT}")
