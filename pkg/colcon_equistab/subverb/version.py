# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

from importlib import metadata

from colcon_core.plugin_system import satisfies_version
from colcon_equistab import __version__
from colcon_equistab.subverb import EquistabSubverbExtensionPoint


class VersionSubverb(EquistabSubverbExtensionPoint):
    """Report version of the tool."""

    def __init__(self):  # noqa: D107
        super().__init__()
        satisfies_version(EquistabSubverbExtensionPoint.EXTENSION_POINT_VERSION, "^1.0")

    def add_arguments(self, *, parser):  # noqa: D102
        parser.add_argument(
            "component",
            nargs="?",
            help='Dependency name (e.g. "numpy") instead of this package',
        )

    def main(self, *, context):  # noqa: D102
        if not context.args.component:
            print(__version__)
            return 0
        try:
            print(metadata.version(context.args.component))
        except metadata.PackageNotFoundError:
            return "Error: '{}' is not installed".format(context.args.component)
        return 0
