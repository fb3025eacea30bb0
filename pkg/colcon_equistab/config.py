# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

import dataclasses
import os
from typing import Optional

from colcon_core.logging import colcon_logger
from colcon_equistab.errors import InvalidConfig

logger = colcon_logger.getChild(__name__)


@dataclasses.dataclass(frozen=True)
class Tolerances:
    """
    Numerical thresholds shared by every analysis stage.

    ``nondeg`` left to ``None`` means ``1e-8 * max(1, max|eigenvalue|)``
    for each Hessian that gets classified.
    """

    rank_rtol: float = 1e-10
    rank_atol: float = 1e-14
    rank_ambiguity: float = 100.0
    algebra: float = 1e-9
    rel_eq: float = 1e-9
    critical: float = 1e-8
    nondeg: Optional[float] = None
    cond_max: float = 1e6
    radius_hint: float = 0.5
    sample: float = 1e-8

    def __post_init__(self):  # noqa: D105
        for field in dataclasses.fields(self):
            value = getattr(self, field.name)
            if value is None:
                continue
            if not value > 0:
                raise InvalidConfig(
                    "tolerance '{}' must be positive, got {}".format(
                        field.name, value))

    def replace(self, **changes):
        """Return a copy with some thresholds changed, ignoring ``None``."""
        changes = {
            k: v for k, v in changes.items()
            if v is not None or k == "nondeg"
        }
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)


DEFAULT_TOLERANCES = Tolerances()


def get_thread_count():
    """
    Get the number of worker threads used by the stability probe.

    Reads ``EQUISTAB_THREADS`` and falls back to the CPU count.

    :rtype: int
    """
    value = os.environ.get("EQUISTAB_THREADS")
    if value is None:
        return max(1, os.cpu_count() or 1)
    try:
        threads = int(value)
    except ValueError:
        raise InvalidConfig(
            "EQUISTAB_THREADS must be an integer, got '{}'".format(value))
    if threads < 1:
        raise InvalidConfig("EQUISTAB_THREADS must be at least 1")
    return threads


def get_demos_dir():
    """
    Get the path to the bundled demo models.

    ``EQUISTAB_DEMOS`` overrides the location shipped with the package.

    :rtype: String
    """
    demos_dir = os.environ.get(
        "EQUISTAB_DEMOS",
        os.path.join(os.path.dirname(os.path.abspath(__file__)), "demos"),
    )
    if os.path.isdir(demos_dir):
        return demos_dir
    raise FileNotFoundError(
        demos_dir,
        "consider pointing EQUISTAB_DEMOS to a directory with model files",
    )


def get_schema_dir():
    """
    Get the path to the JSON schemas of model files and reports.

    :rtype: String
    """
    schema_dir = os.path.join(
        os.path.dirname(os.path.abspath(__file__)), "schema")
    if os.path.isdir(schema_dir):
        return schema_dir
    raise FileNotFoundError(
        schema_dir, "the package installation looks incomplete")
