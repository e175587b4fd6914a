import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

from netstrata import syngen  # noqa: E402


@pytest.fixture(scope="session")
def small_config():
    return syngen.SynConfig(n_groups=12, entities_per_group=(3, 6), seed=11,
                            decoys=syngen.Decoys(10, 5, 5, 5, 5, 5, 5, 10))


@pytest.fixture(scope="session")
def small_dataset_dir(tmp_path_factory, small_config):
    out = tmp_path_factory.mktemp("syn_small")
    syngen.write_dataset(syngen.generate(small_config), str(out))
    return str(out)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(module.RESULTS, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
        terminalreporter.write_line(line)
