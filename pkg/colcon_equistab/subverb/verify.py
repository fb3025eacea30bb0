# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

from colcon_core.plugin_system import satisfies_version
from colcon_equistab.checks import model_checks
from colcon_equistab.subverb import (
    add_model_arguments,
    add_tolerance_arguments,
    EquistabSubverbExtensionPoint,
    tolerances_from_args,
)
from colcon_equistab.model import load_model
from colcon_equistab.verb import check_row, green, red


class VerifySubverb(EquistabSubverbExtensionPoint):
    """Check the invariance and equivariance assumptions of a model."""

    def __init__(self):  # noqa: D107
        super().__init__()
        satisfies_version(EquistabSubverbExtensionPoint.EXTENSION_POINT_VERSION, "^1.0")

    def add_arguments(self, *, parser):  # noqa: D102
        add_model_arguments(parser, point=False)
        parser.add_argument(
            "--point", default=None,
            help="Only check around this point (default: every declared point)")
        parser.add_argument(
            "--samples", type=int, default=32,
            help="Random samples per check (default: %(default)s)")
        add_tolerance_arguments(parser)

    def main(self, *, context):  # noqa: D102
        args = context.args
        tol = tolerances_from_args(args)
        model = load_model(args.model)
        names = [args.point] if args.point else sorted(model.points)
        failures = 0
        for name in names:
            print("around '{}':".format(name))
            for check in model_checks(model, model.point(name), args.seed, tol, args.samples):
                check_row(check.name, "{:.2e}".format(check.value), check.passed)
                failures += not check.passed
        if failures:
            red("{} check(s) failed".format(failures))
            return 1
        green("all checks passed")
        return 0
