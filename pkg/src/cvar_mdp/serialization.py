"""JSON and CSV (de)serialisation for models, policies and results.

Model document::

    {
      "n_states": S,
      "n_actions": A,
      "transition": [[p(0|0,0), ..., p(S-1|0,0)],   # S*A rows, row i*A + a
                     ...],
      "cost": [[c(0,0), ..., c(0,A-1)], ...]          # S rows of A reals
    }

``"transition_cost"`` (S*A rows of S reals, row ``i*A + a`` holding
``c(i, a, j)``) may replace ``"cost"`` for losses realised on transitions.

Policy files are either a JSON list of action indices or plain text with one
action index per state.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .exceptions import DimensionError
from .model import DeterministicPolicy, MdpModel


class ParseError(ValueError):
    """Input document is malformed."""


def model_to_dict(model: MdpModel) -> dict:
    S, A = model.n_states, model.n_actions
    out = {
        "n_states": S,
        "n_actions": A,
        "transition": model.transition.reshape(S * A, S).tolist(),
    }
    if model.has_transition_costs:
        out["transition_cost"] = model.cost.reshape(S * A, S).tolist()
    else:
        out["cost"] = model.cost.tolist()
    return out


def model_from_dict(data: dict) -> MdpModel:
    try:
        S, A = int(data["n_states"]), int(data["n_actions"])
        transition = np.asarray(data["transition"], dtype=float)
        if "transition_cost" in data:
            cost = np.asarray(data["transition_cost"], dtype=float)
            cost_shape = (S * A, S)
        else:
            cost = np.asarray(data["cost"], dtype=float)
            cost_shape = (S, A)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed model document: {exc!r}") from exc
    if transition.shape != (S * A, S):
        raise ParseError(f"'transition' must have {S * A} rows of {S} entries, got {transition.shape}")
    if cost.shape != cost_shape:
        raise ParseError(f"cost table must have shape {cost_shape}, got {cost.shape}")
    transition = transition.reshape(S, A, S)
    if cost_shape == (S * A, S):
        cost = cost.reshape(S, A, S)
    return MdpModel(transition, cost)


def read_json(path):
    path = Path(path)
    try:
        with path.open() as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def write_json(path, data):
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def load_model(path) -> MdpModel:
    return model_from_dict(read_json(path))


def save_model(model: MdpModel, path):
    write_json(path, model_to_dict(model))


def load_policy(path, n_states=None) -> DeterministicPolicy:
    path = Path(path)
    text = path.read_text()
    try:
        if path.suffix == ".json":
            actions = json.loads(text)
            if isinstance(actions, dict):
                actions = actions["actions"]
        else:
            actions = [int(tok) for tok in text.split()]
        policy = DeterministicPolicy(np.asarray(actions, dtype=np.int64))
    except (ValueError, KeyError, TypeError, json.JSONDecodeError, DimensionError) as exc:
        raise ParseError(f"{path}: malformed policy file ({exc})") from exc
    if n_states is not None and policy.n_states != n_states:
        raise DimensionError(f"policy has {policy.n_states} entries, model has {n_states} states")
    return policy


def save_policy(policy: DeterministicPolicy, path):
    Path(path).write_text("\n".join(str(int(a)) for a in policy.actions) + "\n")


def write_csv(path, header, rows):
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value
