# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

"""Standalone ``equistab`` entry point running ``colcon equistab``."""

import os
import sys

from colcon_core.command import main as colcon_main


def main(argv=None):
    """
    Run ``colcon equistab`` with the given arguments.

    colcon log files are skipped unless ``EQUISTAB_LOG_BASE`` names a
    directory for them.
    """
    argv = sys.argv[1:] if argv is None else list(argv)
    log_base = os.environ.get("EQUISTAB_LOG_BASE", os.devnull)
    return colcon_main(
        command_name="equistab",
        argv=["--log-base", log_base, "equistab"] + argv,
    )
