import json
from pathlib import Path

import pytest

from warpcons.experiment import config_to_dict, dumps


@pytest.fixture
def write_config(tmp_path):
    def write(cfg_or_doc, name="exp.json"):
        doc = cfg_or_doc if isinstance(cfg_or_doc, dict) else config_to_dict(cfg_or_doc)
        path = tmp_path / name
        path.write_text(dumps(doc))
        return path

    return write


def read_json(path):
    return json.loads(Path(path).read_text())


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for num in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[num])
