"""
The command line
================

``rubriceval run`` grades a dataset and checkpoints to an experiment
directory; ``rubriceval metrics`` compares the result with ground truth.
A judge file lists judges; an entry with ``scripted`` replays canned
replies from a JSONL file instead of calling an endpoint.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

data = Path(__file__).parent / "data" / "chemistry_toy.json"
dataset = json.loads(data.read_text())
criteria = dataset["rubric"]["criteria"]

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)

    # canned replies: agree with the label except on every seventh item
    lines = []
    for n, item in enumerate(dataset["items"]):
        for c, label in zip(criteria, item["ground_truth"]):
            met = (label == "TRUE") != (n % 7 == 3)
            reply = {"criterion_status": "MET" if met else "UNMET", "explanation": "scripted reply"}
            lines.append({"item_id": item["item_id"], "criterion_id": c["id"], "judge_name": "grader", "response": json.dumps(reply)})
    (tmp / "replies.jsonl").write_text("".join(json.dumps(l) + "\n" for l in lines))
    (tmp / "judges.json").write_text(json.dumps([{"name": "grader", "scripted": "replies.jsonl"}]))

    def rubriceval(*args):
        cmd = [sys.executable, "-m", "rubriceval.cli", *map(str, args)]
        print("$ rubriceval", " ".join(map(str, args)))
        done = subprocess.run(cmd, capture_output=True)
        stdout, stderr = done.stdout.decode(), done.stderr.decode()
        # the progress counter redraws in place with carriage returns
        print("\n".join(line.split("\r")[-1] for line in stdout.split("\n")).strip())
        if stderr:
            print(stderr.strip())
        print(f"(exit {done.returncode})\n")

    rubriceval("run", "--dataset", data, "--judges", tmp / "judges.json", "--out", tmp / "experiments", "--name", "flame", "--seed", 7)
    rubriceval("metrics", "--experiment", tmp / "experiments" / "flame", "--dataset", data, "--bootstrap", 1000)
    # resuming a finished run makes no new calls
    rubriceval("run", "--dataset", data, "--judges", tmp / "judges.json", "--out", tmp / "experiments", "--name", "flame", "--resume")
    # usage errors exit with status 2
    rubriceval("run", "--dataset", data)
