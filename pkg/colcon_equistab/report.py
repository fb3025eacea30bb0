# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

"""Assemble, validate and write JSON analysis reports."""

import json
import math

from colcon_equistab import __version__
from colcon_equistab.errors import ReportError
from colcon_equistab.model import load_schema
import jsonschema
import numpy as np


def sanitize(value):
    """Convert numpy values to JSON types; non-finite floats become None."""
    if isinstance(value, dict):
        return {str(k): sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [sanitize(v) for v in value]
    if isinstance(value, np.ndarray):
        return sanitize(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, complex):
        return [sanitize(value.real), sanitize(value.imag)]
    return value


def build_report(model, point_name, seed, tolerances, stability, exit_code,
                 checks=None, normal_form=None, linearization=None, probe=None,
                 certificate=None):
    report = {
        "tool": "equistab",
        "version": __version__,
        "model": {"name": model.name, "sha256": model.digest},
        "point": {
            "name": point_name,
            "coordinates": model.point(point_name).tolist(),
        },
        "seed": seed,
        "tolerances": tolerances.to_dict(),
        "checks": checks or {},
        "stability": stability,
        "normal_form": normal_form,
        "linearization": linearization,
        "probe": probe,
        "certificate": certificate,
        "exit_code": exit_code,
    }
    report = sanitize(report)
    validate_report(report)
    return report


def validate_report(report):
    try:
        jsonschema.validate(report, load_schema("report.schema.json"))
    except jsonschema.ValidationError as e:
        raise ReportError("report does not match its schema: {}".format(e.message))


def dumps(report):
    """Deterministic serialization; identical inputs give identical bytes."""
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def write_report(path, report):
    with open(path, "w") as handle:
        handle.write(dumps(report))
