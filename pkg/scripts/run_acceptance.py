"""Run the acceptance suite and print one line per criterion."""
import os
import sys

import pytest

if __name__ == "__main__":
    here = os.path.dirname(os.path.abspath(__file__))
    target = os.path.join(here, "..", "tests", "test_acceptance.py")
    sys.exit(pytest.main([target, "-q", "-s", *sys.argv[1:]]))
