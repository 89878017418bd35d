#!/usr/bin/python3

# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026  The drivesig developers

# pylint: disable=missing-docstring

import contextlib
import io
import unittest
from unittest import mock

import log


def captured(func, *values):
    err = io.StringIO()
    out = io.StringIO()
    with contextlib.redirect_stderr(err), contextlib.redirect_stdout(out):
        func(*values)
    return out.getvalue(), err.getvalue()


@mock.patch('log.QUIET', False)
class TestLog(unittest.TestCase):

    def test_prefix(self):
        out, err = captured(log.log, 'epoch', 3)
        self.assertEqual(out, '')
        self.assertEqual(err, 'drivesig: epoch 3\n')

    def test_tags(self):
        self.assertEqual(captured(log.log_warn, 'x')[1],
                         'drivesig: warning: x\n')
        self.assertEqual(captured(log.log_err, 'x')[1],
                         'drivesig: error: x\n')


class TestQuiet(unittest.TestCase):

    def test_silenced(self):
        with mock.patch('log.QUIET', True):
            self.assertEqual(captured(log.log_err, 'x'), ('', ''))


if __name__ == '__main__':  # pragma: no cover
    unittest.main()
