#!/usr/bin/env python3
"""Run the acceptance tests and print one PASS/FAIL line per criterion.

Exit status is that of pytest: expected failures (strict xfail) keep it zero.
"""
import pathlib
import sys

import pytest

ROOT = pathlib.Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    sys.exit(pytest.main([str(ROOT / "tests" / "test_acceptance.py"), "-q", "-p", "no:cacheprovider", *sys.argv[1:]]))
