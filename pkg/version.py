# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026  The drivesig developers

# pylint: disable=missing-docstring

# This version string needs to be in sync with the latest *annotated* tag
# reachable from a branch.  It is echoed into every metadata file and model
# container, so bump it whenever output formats change.
#
#   $ git tag --annotate "vX.Y.Z"

VERSION = '0.3.0'
