# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

from colcon_core.logging import colcon_logger
from colcon_core.plugin_system import instantiate_extensions
from colcon_core.plugin_system import order_extensions_by_name
from colcon_equistab.config import DEFAULT_TOLERANCES
from colcon_equistab.model import load_model

logger = colcon_logger.getChild(__name__)

# exit code when the analysis ran but could not certify stability
EXIT_INCONCLUSIVE = 2


class EquistabSubverbExtensionPoint:
    """
    The interface for equistab subverb extensions.

    An equistab subverb extension provides a subverb to the `equistab`
    verb of the command line tool.

    For each instance the attribute `SUBVERB_NAME` is being set to the basename
    of the entry point registering the extension.
    The attribute `EXTENSION_POINT_VERSION` holds the version of this
    interface.
    """

    EXTENSION_POINT_VERSION = "1.0"

    def add_arguments(self, *, parser):
        """
        Add command line arguments specific to the subverb.

        The method is intended to be overridden in a subclass.

        :param parser: The argument parser
        """
        pass

    def main(self, *, context):
        """
        Execute the subverb extension logic.

        This method must be overridden in a subclass.

        :param context: The context providing the parsed command line arguments
        :returns: The return code
        """
        raise NotImplementedError()


def get_subverb_extensions():
    """
    Get the available subverb extensions.

    The extensions are ordered by their entry point name.

    :rtype: OrderedDict
    """
    extensions = instantiate_extensions(__name__)
    for name, extension in extensions.items():
        extension.SUBVERB_NAME = name
    return order_extensions_by_name(extensions)


def add_model_arguments(parser, point=True):
    """Positional model file (or demo name) and the point to analyze."""
    parser.add_argument(
        "model",
        help="Model JSON file, or the name of a bundled demo (see 'demos')",
    )
    if point:
        parser.add_argument(
            "point",
            help="Name of a point declared in the model file",
        )
    parser.add_argument(
        "--seed", type=int, default=0,
        help="Seed of every random sample (default: %(default)s)",
    )


def add_tolerance_arguments(parser):
    group = parser.add_argument_group("tolerances")
    group.add_argument(
        "--tol-rank", type=float, default=None,
        help="Relative rank cutoff (default: {})".format(DEFAULT_TOLERANCES.rank_rtol))
    group.add_argument(
        "--tol-releq", type=float, default=None,
        help="Relative equilibrium residual (default: {})".format(DEFAULT_TOLERANCES.rel_eq))
    group.add_argument(
        "--tol-critical", type=float, default=None,
        help="Criticality residual (default: {})".format(DEFAULT_TOLERANCES.critical))
    group.add_argument(
        "--tol-nondeg", type=float, default=None,
        help="Eigenvalue threshold for nondegeneracy (default: relative 1e-8)")
    group.add_argument(
        "--cond-max", type=float, default=None,
        help="Largest condition number of the tube splitting "
             "(default: {})".format(DEFAULT_TOLERANCES.cond_max))
    group.add_argument(
        "--radius-hint", type=float, default=None,
        help="Initial tube radius, halved until the splitting is well "
             "conditioned (default: {})".format(DEFAULT_TOLERANCES.radius_hint))
    group.add_argument(
        "--A-override", dest="a_override", type=float, default=None,
        help="Constant A coupling the momentum to the energy in the "
             "stability certificate (default: estimated sup/dual norm ratio)")


def tolerances_from_args(args):
    return DEFAULT_TOLERANCES.replace(
        rank_rtol=getattr(args, "tol_rank", None),
        rel_eq=getattr(args, "tol_releq", None),
        critical=getattr(args, "tol_critical", None),
        nondeg=getattr(args, "tol_nondeg", None),
        cond_max=getattr(args, "cond_max", None),
        radius_hint=getattr(args, "radius_hint", None),
    )


def load_model_and_point(args):
    """
    Load the model named on the command line and resolve its point.

    :rtype: tuple
    """
    model = load_model(args.model)
    point = model.point(args.point) if getattr(args, "point", None) else None
    logger.info("loaded model '{}' ({})".format(model.name, model.digest[:12]))
    return model, point


def parse_vector(text, length, what="vector"):
    """Parse a comma-separated list of floats."""
    try:
        values = [float(v) for v in text.split(",")] if text else []
    except ValueError:
        raise ValueError("{} must be comma-separated numbers, got '{}'".format(what, text))
    if len(values) != length:
        raise ValueError("{} needs {} entries, got {}".format(what, length, len(values)))
    return values
