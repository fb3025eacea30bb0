# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

"""Model files: a group, an action, a symplectic form and a Hamiltonian."""

import dataclasses
import hashlib
import json
import os
from typing import Dict

from colcon_core.logging import colcon_logger
from colcon_equistab.action import catalog_action, LinearGAction
from colcon_equistab.config import get_demos_dir, get_schema_dir
from colcon_equistab.dynamics import InvariantCoordinates
from colcon_equistab.errors import EquistabError, ModelError
from colcon_equistab.expr import Expression
from colcon_equistab.lie import catalog_group, LieGroupSpec
from colcon_equistab.symplectic import (
    HamiltonianSystem,
    quadratic_momentum,
    SymplecticStructure,
)
import jsonschema
import numpy as np

logger = colcon_logger.getChild(__name__)


@dataclasses.dataclass(frozen=True, eq=False)
class Model:
    name: str
    system: HamiltonianSystem
    invariants: InvariantCoordinates
    points: Dict[str, np.ndarray]
    assertions: Dict[str, bool]
    digest: str
    path: str

    def point(self, name):
        try:
            return self.points[name]
        except KeyError:
            raise ModelError(
                "model '{}' has no point '{}' (available: {})".format(
                    self.name, name, ", ".join(sorted(self.points))))


def load_schema(name):
    with open(os.path.join(get_schema_dir(), name), "r") as handle:
        return json.load(handle)


def _group(spec):
    if isinstance(spec, str):
        try:
            return catalog_group(spec)
        except KeyError as e:
            raise ModelError(str(e.args[0]))
    return LieGroupSpec.from_basis(
        spec["name"],
        spec["basis"],
        inner_product=spec.get("inner_product"),
        compact_basis=spec.get("compact_basis"),
    )


def _action(spec, group, orthogonal):
    if isinstance(spec, str):
        try:
            action = catalog_action(spec)
        except KeyError as e:
            raise ModelError(str(e.args[0]))
        if action.group.name != group.name:
            raise ModelError(
                "action '{}' acts by '{}', not '{}'".format(spec, action.group.name, group.name))
        if orthogonal is not None and orthogonal != action.orthogonal:
            action = dataclasses.replace(action, orthogonal=orthogonal)
        return action
    return LinearGAction(
        group,
        spec["algebra_rep"],
        affine_part=spec.get("affine_part"),
        orthogonal=True if orthogonal is None else orthogonal,
        name="custom",
    )


def build_model(document, path="<memory>"):
    """
    Turn a validated JSON document into a Model.

    :raises ModelError: on schema violations or inconsistent parts
    :raises ParseError: on malformed expression text
    """
    try:
        jsonschema.validate(document, load_schema("model.schema.json"))
    except jsonschema.ValidationError as e:
        location = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ModelError("{}: {} at {}".format(path, e.message, location))
    n = document["dim"]
    assertions = dict(document.get("assertions", {}))
    group = _group(document["group"])
    action = _action(document["action"], group, assertions.get("orthogonal"))
    if action.dim != n:
        raise ModelError("action acts on R^{}, model declares dim {}".format(action.dim, n))
    omega_spec = document.get("omega", "canonical")
    if omega_spec == "canonical":
        if n % 2:
            raise ModelError("canonical form needs an even dimension")
        omega = SymplecticStructure.canonical(n // 2)
    else:
        omega = SymplecticStructure(np.array(omega_spec, dtype=float))
    h = Expression.parse(document["hamiltonian"], n)
    momentum_spec = document.get("momentum", "auto")
    if momentum_spec == "auto" or (momentum_spec == [] and group.dim):
        momentum = quadratic_momentum(action, omega)
    else:
        momentum = tuple(Expression.parse(text, n) for text in momentum_spec)
    invariants = InvariantCoordinates(tuple(
        Expression.parse(text, n) for text in document.get("invariants", [])))
    points = {}
    for name, coordinates in document["points"].items():
        coordinates = np.array(coordinates, dtype=float)
        if coordinates.shape != (n,):
            raise ModelError("point '{}' must have {} coordinates".format(name, n))
        points[name] = coordinates
    if not assertions.get("proper_action", True):
        logger.warning("model '{}' does not assert a proper action".format(document["name"]))
    canonical = json.dumps(document, sort_keys=True, separators=(",", ":"))
    try:
        system = HamiltonianSystem(action, omega, h, momentum, name=document["name"])
    except EquistabError as e:
        raise ModelError("{}: {}".format(path, e))
    return Model(
        name=document["name"],
        system=system,
        invariants=invariants,
        points=points,
        assertions=assertions,
        digest=hashlib.sha256(canonical.encode("utf-8")).hexdigest(),
        path=path,
    )


def load_model(path):
    """
    Load a model file.

    A bare name without a path separator or extension resolves to a demo.
    """
    if not os.path.exists(path) and os.sep not in path and not path.endswith(".json"):
        path = os.path.join(get_demos_dir(), path + ".json")
    if not os.path.exists(path):
        raise FileNotFoundError(
            path, "consider 'colcon equistab demos' to list the bundled models")
    with open(path, "r") as handle:
        try:
            document = json.load(handle)
        except json.JSONDecodeError as e:
            raise ModelError("{}: invalid JSON ({})".format(path, e))
    return build_model(document, path)


def list_demos():
    demos_dir = get_demos_dir()
    return sorted(
        name[:-len(".json")] for name in os.listdir(demos_dir) if name.endswith(".json"))
