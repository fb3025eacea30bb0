# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

from colcon_core.plugin_system import satisfies_version
from colcon_equistab.dynamics import (
    certificate_monitor,
    conservation_report,
    IntegratorConfig,
    write_trajectory_csv,
)
from colcon_equistab.subverb import (
    add_model_arguments,
    add_tolerance_arguments,
    EquistabSubverbExtensionPoint,
    load_model_and_point,
    parse_vector,
    tolerances_from_args,
)
from colcon_equistab.tube import build_tube, embed
from colcon_equistab.verb import green, yellow
import numpy as np


class SimulateSubverb(EquistabSubverbExtensionPoint):
    """Integrate a Hamiltonian flow from a model point and log conserved quantities."""

    def __init__(self):  # noqa: D107
        super().__init__()
        satisfies_version(EquistabSubverbExtensionPoint.EXTENSION_POINT_VERSION, "^1.0")

    def add_arguments(self, *, parser):  # noqa: D102
        add_model_arguments(parser)
        parser.add_argument(
            "--field", choices=("hamiltonian", "augmented", "vertical_augmented"),
            default="hamiltonian",
            help="Flow to integrate (default: %(default)s)")
        parser.add_argument(
            "--xi", default=None,
            help="Comma-separated algebra vector of the augmented flows")
        parser.add_argument(
            "--offset", default=None,
            help="Comma-separated initial offset; slice coordinates for "
                 "vertical_augmented, ambient otherwise")
        parser.add_argument(
            "--step", type=float, default=1e-3,
            help="Runge-Kutta step (default: %(default)s)")
        parser.add_argument(
            "--horizon", type=float, default=10.0,
            help="Integration horizon (default: %(default)s)")
        parser.add_argument(
            "--log-every", type=int, default=1,
            help="Record every n-th step (default: %(default)s)")
        parser.add_argument(
            "--out", default=None, help="Write the trajectory as CSV")
        add_tolerance_arguments(parser)

    def main(self, *, context):  # noqa: D102
        args = context.args
        model, point = load_model_and_point(args)
        system = model.system
        config = IntegratorConfig(step=args.step, horizon=args.horizon, log_every=args.log_every)
        xi = None
        if args.xi is not None:
            xi = np.array(parse_vector(args.xi, system.group.dim, "--xi"))
        tube = None
        to_ambient = None
        start = point
        if args.field == "vertical_augmented":
            tol = tolerances_from_args(args)
            tube = build_tube(system.action, point, tol.radius_hint, tol.cond_max)
            if args.offset:
                offset = np.array(parse_vector(args.offset, tube.slice_dim, "--offset"))
                start = embed(tube, offset)

            def to_ambient(states):
                return embed(tube, states)
        elif args.offset:
            start = point + np.array(parse_vector(args.offset, system.dim, "--offset"))

        report = conservation_report(system, args.field, start, config, eta=xi, tube=tube)
        message = "drift of h {:.3e}, drift of |Phi|^2 {:.3e} over {} samples".format(
            report.drift_h, report.drift_phi2, report.trajectory.times.size)
        if report.trajectory.halted:
            yellow(message + " (halted: {})".format(report.trajectory.halt_reason))
        else:
            green(message)
        if args.field == "vertical_augmented":
            eta = np.zeros(system.group.dim) if xi is None else xi
            certificate = certificate_monitor(
                system, tube, eta, report.trajectory, coupling=args.a_override)
            line = "certificate with A = {:.3g}: phi margin {:.3e}, f margin {:.3e}".format(
                certificate.coupling, certificate.phi_margin, certificate.f_margin)
            (green if certificate.holds else yellow)(line)
        if args.out:
            write_trajectory_csv(args.out, report.trajectory, model.invariants, to_ambient)
        return 0
