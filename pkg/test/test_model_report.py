# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

import json

from colcon_equistab.config import (
    DEFAULT_TOLERANCES,
    get_demos_dir,
    get_thread_count,
    Tolerances,
)
from colcon_equistab.errors import InvalidConfig, ModelError, ParseError, ReportError
from colcon_equistab.model import build_model, list_demos, load_model
from colcon_equistab.report import build_report, dumps, sanitize, validate_report
from colcon_equistab.stability import mro_verdict
import numpy as np
import pytest


def rotor_document(**changes):
    document = {
        "name": "rotor",
        "dim": 2,
        "group": {"name": "SO2x", "basis": [[[0.0, -1.0], [1.0, 0.0]]]},
        "action": {"algebra_rep": [[[0.0, -1.0], [1.0, 0.0]]]},
        "omega": "canonical",
        "hamiltonian": "0.5*(x1^2 + x2^2)",
        "momentum": ["-0.5*(x1^2 + x2^2)"],
        "points": {"origin": [0.0, 0.0], "ring": [1.0, 0.0]},
    }
    document.update(changes)
    return document


def test_demos_load():
    assert list_demos() == ["coupled_modes", "kepler", "oscillator", "unstable"]
    for name in list_demos():
        model = load_model(name)
        assert model.name == name
        assert len(model.digest) == 64


def test_digest_is_stable_and_content_based():
    first = build_model(rotor_document())
    second = build_model(json.loads(json.dumps(rotor_document())))
    assert first.digest == second.digest
    assert build_model(rotor_document(name="rotor2")).digest != first.digest


def test_explicit_group_and_action():
    model = build_model(rotor_document())
    assert model.system.group.name == "SO2x"
    np.testing.assert_allclose(model.system.momentum_value(np.array([1.0, 0.0])), [-0.5])
    assert model.invariants.dim == 0
    assert model.assertions == {}


def test_schema_violations():
    document = rotor_document()
    del document["hamiltonian"]
    with pytest.raises(ModelError):
        build_model(document)
    with pytest.raises(ModelError):
        build_model(rotor_document(extra=1))
    with pytest.raises(ModelError):
        build_model(rotor_document(points={}))


def test_semantic_violations():
    with pytest.raises(ModelError):
        build_model(rotor_document(points={"bad": [1.0, 2.0, 3.0]}))
    with pytest.raises(ModelError):
        build_model(rotor_document(group="SO3", action="SO2_R2"))
    with pytest.raises(ModelError):
        build_model(rotor_document(group="SU2"))
    with pytest.raises(ModelError):
        build_model(rotor_document(dim=3))
    with pytest.raises(ParseError):
        build_model(rotor_document(hamiltonian="x1 +"))


def test_unknown_point():
    model = build_model(rotor_document())
    with pytest.raises(ModelError):
        model.point("apex")


def test_model_files_and_demo_override(tmp_path, monkeypatch):
    path = tmp_path / "rotor.json"
    path.write_text(json.dumps(rotor_document()))
    assert load_model(str(path)).path == str(path)
    monkeypatch.setenv("EQUISTAB_DEMOS", str(tmp_path))
    assert get_demos_dir() == str(tmp_path)
    assert list_demos() == ["rotor"]
    assert load_model("rotor").name == "rotor"
    with pytest.raises(FileNotFoundError):
        load_model("kepler")
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    with pytest.raises(ModelError):
        load_model(str(broken))


def test_thread_count(monkeypatch):
    monkeypatch.setenv("EQUISTAB_THREADS", "3")
    assert get_thread_count() == 3
    monkeypatch.setenv("EQUISTAB_THREADS", "zero")
    with pytest.raises(InvalidConfig):
        get_thread_count()
    monkeypatch.setenv("EQUISTAB_THREADS", "0")
    with pytest.raises(InvalidConfig):
        get_thread_count()


def test_tolerances():
    with pytest.raises(InvalidConfig):
        Tolerances(rank_rtol=-1.0)
    changed = DEFAULT_TOLERANCES.replace(rel_eq=None, critical=1e-6, nondeg=None)
    assert changed.rel_eq == DEFAULT_TOLERANCES.rel_eq
    assert changed.critical == 1e-6
    assert changed.to_dict()["nondeg"] is None


def test_sanitize():
    value = sanitize({"a": np.array([1.0, np.inf]), 2: (np.int64(3), np.bool_(True)), "z": 1j})
    assert value == {"a": [1.0, None], "2": [3, True], "z": [0.0, 1.0]}


def test_report_round_trip_is_deterministic():
    model = load_model("kepler")
    stability = mro_verdict(model.system, model.point("circular")).to_dict()
    first = build_report(model, "circular", 0, DEFAULT_TOLERANCES, stability, 0)
    second = build_report(model, "circular", 0, DEFAULT_TOLERANCES, stability, 0)
    assert dumps(first) == dumps(second)
    assert dumps(first).endswith("}\n")
    assert first["model"]["sha256"] == model.digest
    validate_report(json.loads(dumps(first)))


def test_report_rejects_unknown_exit_codes():
    model = load_model("kepler")
    stability = mro_verdict(model.system, model.point("circular")).to_dict()
    with pytest.raises(ReportError):
        build_report(model, "circular", 0, DEFAULT_TOLERANCES, stability, 1)
