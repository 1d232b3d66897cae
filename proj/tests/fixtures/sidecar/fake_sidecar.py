#!/usr/bin/env python3
"""Scripted stand-in for the scorer sidecar; speaks the stdio protocol."""
import json
import sys

disabled = set()
args = sys.argv[1:]
while args:
    if args[0] == "--disable" and len(args) > 1:
        disabled.add(args[1])
        args = args[2:]
    else:
        args = args[1:]

CUES = {"may": "epistemic", "might": "epistemic", "believed": "doxatic", "would": "doxatic", "if": "conditional"}


def handle(req):
    rid = req.get("id")
    op = req.get("op")
    if op in disabled:
        return {"id": rid, "error": op + " model disabled", "code": "capability"}
    if op == "health":
        return {"id": rid, "protocol": 1, "models": {k: "fake-" + k for k in ("entail", "certainty", "hedge") if k not in disabled}}
    if op == "entail":
        if "not" in req.get("hypothesis", "").split():
            return {"id": rid, "entail": 0.1, "neutral": 0.2, "contradiction": 0.7}
        return {"id": rid, "entail": 0.7, "neutral": 0.2, "contradiction": 0.1}
    if op == "certainty":
        s = req.get("sentence", "")
        if not s.strip():
            return {"id": rid, "error": "empty sentence"}
        hedges = sum(1 for w in s.lower().split() if w in CUES)
        return {"id": rid, "certainty": max(1.0, 5.0 - hedges)}
    if op == "hedge":
        return {"id": rid, "tokens": [[w, CUES.get(w.lower(), "none")] for w in req.get("sentence", "").split()]}
    return {"id": rid, "error": "unknown op " + str(op)}


for line in sys.stdin:
    line = line.strip()
    if not line:
        continue
    try:
        req = json.loads(line)
    except ValueError:
        resp = {"id": None, "error": "malformed JSON"}
    else:
        resp = handle(req)
    sys.stdout.write(json.dumps(resp) + "\n")
    sys.stdout.flush()
