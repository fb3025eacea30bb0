# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

"""Sampled consistency checks of a loaded model."""

import dataclasses

from colcon_core.logging import colcon_logger
from colcon_equistab.action import check_equivariance
from colcon_equistab.config import DEFAULT_TOLERANCES
from colcon_equistab.expr import check_invariance
from colcon_equistab.symplectic import (
    hamiltonian_field,
    noether_report,
    verify_momentum_map,
    verify_symplectic_invariance,
)

logger = colcon_logger.getChild(__name__)


@dataclasses.dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    threshold: float

    @property
    def passed(self):
        return self.value <= self.threshold

    def to_dict(self):
        return {"value": self.value, "threshold": self.threshold, "passed": self.passed}


def model_checks(model, center, seed=0, tol=DEFAULT_TOLERANCES, n_samples=32, scale=0.1):
    """
    Run every sampled check around ``center``.

    Points are drawn at distance ``scale`` so that singular Hamiltonians
    are probed away from their singularities.
    """
    system = model.system
    action = system.action
    group = system.group
    threshold = tol.sample
    results = []

    def record(name, value, limit=threshold):
        results.append(CheckResult(name, float(value), limit))

    if group.dim:
        record("ad_invariance", group.verify_ad_invariance(n_samples, seed).max_violation)
    if action.orthogonal:
        record("action_orthogonality", action.verify_orthogonality(n_samples, seed))
    record("symplectic_invariance", verify_symplectic_invariance(action, system.omega, n_samples, seed))
    momentum = verify_momentum_map(system, n_samples, seed, center, scale)
    record("momentum_property", momentum.property_violation)
    record("momentum_equivariance", momentum.equivariance_violation)
    record("hamiltonian_invariance",
           check_invariance(system.h, action, n_samples, seed, center, scale).max_violation)
    field = hamiltonian_field(system, center=center, scale=scale, seed=seed)
    record("field_equivariance",
           check_equivariance(action, field, n_samples, seed, center, scale).max_violation)
    if model.invariants.dim:
        record("invariant_coordinates",
               model.invariants.verify(action, n_samples, seed, center, scale))
    noether = noether_report(system, n_samples, seed, center, scale)
    record("energy_conservation_rate", noether.energy_drift_rate)
    record("momentum_conservation_rate", noether.momentum_drift_rate)
    failed = [r.name for r in results if not r.passed]
    if failed:
        logger.warning("failed checks: {}".format(", ".join(failed)))
    return results
