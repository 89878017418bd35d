# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026  The drivesig developers

"""
Diagnostics on stderr.

stdout carries command results only (tables, predictions, written paths),
so anything meant for a human watching a run goes through here.  Set
DRIVESIG_QUIET to a non-zero value to silence it.
"""

import os
import sys

PREFIX = 'drivesig:'

QUIET: bool = os.environ.get('DRIVESIG_QUIET', '0') != '0'


def _emit(tag: str, values, sep: str, end: str, flush: bool) -> None:
    if QUIET:
        return
    head = (PREFIX, tag) if tag else (PREFIX, )
    print(*head, *values, sep=sep, end=end, file=sys.stderr, flush=flush)


def log(*value, sep=' ', end='\n', flush=False):
    """Progress message."""
    _emit('', value, sep, end, flush)


def log_warn(*value, sep=' ', end='\n', flush=False):
    """Something was skipped or dropped, the run goes on."""
    _emit('warning:', value, sep, end, flush)


def log_err(*value, sep=' ', end='\n', flush=False):
    """The command failed; printed right before a non-zero exit."""
    _emit('error:', value, sep, end, flush)
