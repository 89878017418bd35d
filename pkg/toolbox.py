# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026  The drivesig developers

"""
Useful functions and classes
"""

import concurrent.futures
import hashlib
import json
import os
import platform
from typing import Any, Callable, Dict, Iterable, List, Optional, TypeVar

from version import VERSION

T = TypeVar('T')
R = TypeVar('R')


def enabled_in_env(var: str, fallback_var=None) -> bool:
    """Returns True for environment variables with non-zero value."""
    val1 = os.environ.get(var)
    val2 = os.environ.get(fallback_var) if fallback_var else None
    return (bool(val1) and val1 != '0') or (bool(val2) and val2 != '0')


def env_int(var: str) -> Optional[int]:
    """Return integer value of environment variable, or None."""
    val = os.environ.get(var, '').strip()
    if not val:
        return None
    try:
        return int(val, 0)
    except ValueError:
        return None


def sha256sum(path):
    """Compute sha256sum of a file, reading it in blocks."""
    algo = hashlib.sha256()
    with open(path, 'rb') as file:
        for block in iter(lambda: file.read(1 << 16), b''):
            algo.update(block)
    return algo.hexdigest()


def write_json(path, content):
    """Write dict as stable (sorted, indented) JSON text."""
    with open(path, 'w', encoding='utf-8') as out:
        json.dump(content, out, indent=2, sort_keys=True)
        out.write('\n')


def read_json(path):
    """Read JSON text file."""
    with open(path, 'r', encoding='utf-8') as txt:
        return json.load(txt)


def run_metadata(command: str, config: Dict[str, Any],
                 inputs: Iterable[str] = ()) -> Dict[str, Any]:
    """Collect everything needed to re-execute a run.

    Input files are identified by their sha256 digests, so a stale dataset
    is easy to spot when comparing two metadata files.
    """
    digests = {}
    for path in inputs:
        if path and os.path.isfile(path):
            digests[os.path.basename(path)] = sha256sum(path)
    return {
        'tool': 'drivesig',
        'version': VERSION,
        'python': platform.python_version(),
        'command': command,
        'config': dict(config),
        'inputs': digests,
    }


def ordered_map(func: Callable[[T], R], items: Iterable[T],
                jobs: int = 1) -> List[R]:
    """Map func over items using up to `jobs` workers.

    Results are returned in the order of items regardless of completion
    order, so any reduction over them stays deterministic.
    """
    work = list(items)
    if jobs <= 1 or len(work) <= 1:
        return [func(x) for x in work]
    with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, work))
