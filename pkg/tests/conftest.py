import copy
import json
from pathlib import Path

import pytest

from vlnloop.environment import environment_to_dict, load_environment
from vlnloop.eval import load_episodes
from vlnloop.suites import line_environment

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def line_env():
    return line_environment()


@pytest.fixture
def line_doc():
    return copy.deepcopy(environment_to_dict(line_environment()))


@pytest.fixture
def fixture_env():
    return load_environment(FIXTURES / "envs" / "line.json")


@pytest.fixture
def fixture_episodes():
    return load_episodes(FIXTURES / "episodes.json")


@pytest.fixture
def write_json(tmp_path):
    def _write(doc, name="doc.json"):
        p = tmp_path / name
        p.write_text(json.dumps(doc))
        return p

    return _write
