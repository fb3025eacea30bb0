# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

from colcon_core.plugin_system import satisfies_version
from colcon_equistab.dynamics import integrate, IntegratorConfig, write_trajectory_csv
from colcon_equistab.report import dumps, sanitize
from colcon_equistab.subverb import (
    add_model_arguments,
    EquistabSubverbExtensionPoint,
    EXIT_INCONCLUSIVE,
    load_model_and_point,
)
from colcon_equistab.subverb.analyze import add_probe_arguments, run_probe
from colcon_equistab.symplectic import hamiltonian_field
from colcon_equistab.verb import gray, verdict_line


class ProbeSubverb(EquistabSubverbExtensionPoint):
    """Search numerically for trajectories escaping an orbit-space neighbourhood."""

    def __init__(self):  # noqa: D107
        super().__init__()
        satisfies_version(EquistabSubverbExtensionPoint.EXTENSION_POINT_VERSION, "^1.0")

    def add_arguments(self, *, parser):  # noqa: D102
        add_model_arguments(parser)
        add_probe_arguments(parser, default_samples=64)
        parser.add_argument(
            "--out", default=None, help="Write the probe result as JSON")
        parser.add_argument(
            "--witness", default=None,
            help="Write the escaping trajectory as CSV when one is found")

    def main(self, *, context):  # noqa: D102
        args = context.args
        model, point = load_model_and_point(args)
        result = run_probe(model, point, args)
        for level in result.levels:
            gray("delta {:.1e}: max invariant distance {:.3e}".format(
                level.delta, level.max_distance))
        escaped = result.verdict == "Escaped"
        verdict_line(result.verdict, not escaped)
        if args.out:
            with open(args.out, "w") as handle:
                handle.write(dumps(sanitize(result.to_dict())))
        if escaped and args.witness:
            config = IntegratorConfig(
                step=args.step, horizon=max(result.witness["time"], args.step))
            trajectory = integrate(
                hamiltonian_field(model.system, verify=False),
                result.witness["initial_state"], config,
                {"h": model.system.energy, "phi2": model.system.momentum_dual_norm2})
            write_trajectory_csv(args.witness, trajectory, model.invariants)
        return EXIT_INCONCLUSIVE if escaped else 0
