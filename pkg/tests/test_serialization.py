import json

import numpy as np
import pytest

from cvar_mdp.exceptions import DimensionError
from cvar_mdp.model import DeterministicPolicy, MdpModel
from cvar_mdp.serialization import (ParseError, load_model, load_policy, model_from_dict,
                                    model_to_dict, save_model, save_policy, write_csv)


def small_model(transition_costs=False):
    rng = np.random.default_rng(1)
    transition = rng.random((3, 2, 3))
    transition /= transition.sum(axis=2, keepdims=True)
    shape = (3, 2, 3) if transition_costs else (3, 2)
    return MdpModel(transition, rng.normal(size=shape))


@pytest.mark.parametrize("transition_costs", [False, True])
def test_model_round_trip(tmp_path, transition_costs):
    model = small_model(transition_costs)
    path = tmp_path / "m.json"
    save_model(model, path)
    assert load_model(path) == model


def test_row_layout():
    model = small_model()
    doc = model_to_dict(model)
    # row i*A + a holds p(.|i, a)
    np.testing.assert_array_equal(doc["transition"][2 * 2 + 1], model.transition[2, 1])


def test_malformed_documents(tmp_path):
    doc = model_to_dict(small_model())
    with pytest.raises(ParseError):
        model_from_dict({k: v for k, v in doc.items() if k != "cost"})
    with pytest.raises(ParseError):
        model_from_dict({**doc, "transition": doc["transition"][:-1]})
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ParseError):
        load_model(bad)


def test_policy_formats(tmp_path):
    text = tmp_path / "p.txt"
    text.write_text("0\n1\n1\n")
    assert load_policy(text).actions.tolist() == [0, 1, 1]
    js = tmp_path / "p.json"
    js.write_text(json.dumps({"actions": [2, 0]}))
    assert load_policy(js).actions.tolist() == [2, 0]
    out = tmp_path / "q.txt"
    save_policy(DeterministicPolicy([3, 1]), out)
    assert load_policy(out, n_states=2).actions.tolist() == [3, 1]
    with pytest.raises(DimensionError):
        load_policy(out, n_states=3)
    text.write_text("0 x")
    with pytest.raises(ParseError):
        load_policy(text)


def test_csv_floats_round_trip(tmp_path):
    path = tmp_path / "t.csv"
    write_csv(path, ["a", "b"], [[1, 0.1 + 0.2]])
    lines = path.read_text().splitlines()
    assert lines[0] == "a,b"
    assert float(lines[1].split(",")[1]) == 0.1 + 0.2
