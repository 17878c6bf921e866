#!/usr/bin/env python
"""
Run every sparsemask test module in its own interpreter.

Usage:
    python tests/run_all_tests.py [substring ...]

With arguments, only test files whose name contains one of the substrings run.
"""

import logging
import os
import subprocess
import sys
from time import perf_counter

# Set up logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger("run_all_tests")


def find_test_files(script_dir, filters):
    names = sorted(
        f
        for f in os.listdir(script_dir)
        if f.startswith("test_") and f.endswith(".py") and f != os.path.basename(__file__)
    )
    if filters:
        names = [name for name in names if any(part in name for part in filters)]
    return names


def main(filters):
    """Run the selected test files and report a summary."""
    script_dir = os.path.dirname(os.path.abspath(__file__))
    project_dir = os.path.dirname(script_dir)
    test_files = find_test_files(script_dir, filters)
    if not test_files:
        logger.error(f"No test files match {', '.join(filters)}")
        return False
    logger.info(f"Running {len(test_files)} test files for sparsemask")

    env = dict(os.environ)
    env["PYTHONPATH"] = os.pathsep.join(filter(None, [project_dir, env.get("PYTHONPATH")]))

    failed = []
    for test_file in test_files:
        start = perf_counter()
        result = subprocess.run(
            [sys.executable, os.path.join(script_dir, test_file)],
            capture_output=True,
            text=True,
            env=env,
        )
        elapsed = perf_counter() - start
        if result.returncode == 0:
            logger.info(f"{test_file} passed in {elapsed:.1f}s")
        else:
            logger.error(f"{test_file} failed with return code {result.returncode}")
            logger.error(f"STDOUT: {result.stdout}")
            logger.error(f"STDERR: {result.stderr}")
            failed.append(test_file)

    logger.info(f"Tests completed: {len(test_files) - len(failed)}/{len(test_files)} passed")
    if failed:
        logger.error(f"Failed: {', '.join(failed)}")
    return not failed


if __name__ == "__main__":
    success = main(sys.argv[1:])
    sys.exit(0 if success else 1)
