"""Stand-in training script: reads {"parameters": {...}} on stdin, prints {"objective": ...}."""
import json
import math
import sys

p = json.load(sys.stdin)["parameters"]
loss = (math.log10(p["lr"]) + 2.5) ** 2 + 0.1 * (p["layers"] - 3) ** 2
if p["act"] == "tanh":
    loss += 0.05
loss += 1.0 / p["epochs"]
json.dump({"objective": loss, "sem": 0.0}, sys.stdout)
