"""Canonical JSON/CSV output: byte-stable, atomic, config-hashed.

Floats print with 17 significant digits (shortest-roundtrip in JSON via
repr), keys are sorted, and files are written through a temp-and-rename so
partial writes never appear.  Every report embeds the config hash and rule id
instead of timestamps, so identical configs give byte-identical artifacts.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def config_hash(obj) -> str:
    payload = json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


def atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt(x) -> str:
    return f"{float(x):.17g}"


def field_to_csv(field) -> str:
    lines = [f"# rule_id={field.rule_id}", "node_index,value"]
    lines += [f"{i},{fmt(v)}" for i, v in enumerate(field.values)]
    return "\n".join(lines) + "\n"


def field_from_csv(text, rule):
    from .functional import Field
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines[0].startswith("# rule_id="):
        raise ValueError("missing rule id header")
    rid = lines[0].split("=", 1)[1]
    if rid != rule.rule_id:
        raise ValueError(f"field bound to rule {rid}, expected {rule.rule_id}")
    values = [float(ln.split(",")[1]) for ln in lines[2:]]
    import numpy as np
    return Field(values=np.asarray(values), rule=rule)


def rule_to_csv(rule) -> str:
    dim = rule.dim
    header = "node_index," + ",".join(f"coord{k}" for k in range(dim)) + ",weight"
    lines = [f"# rule_id={rule.rule_id}", header]
    for i in range(rule.size):
        coords = ",".join(fmt(c) for c in rule.nodes[i])
        lines.append(f"{i},{coords},{fmt(rule.weights[i])}")
    return "\n".join(lines) + "\n"


def sweep_to_csv(sweep) -> str:
    lines = ["delta,p,q,c_star,iterations,converged"]
    for e in sweep.entries:
        lines.append(f"{fmt(e.delta)},{fmt(e.p)},{fmt(e.q)},{fmt(e.c_star)},"
                     f"{e.iterations},{int(e.converged)}")
    return "\n".join(lines) + "\n"
