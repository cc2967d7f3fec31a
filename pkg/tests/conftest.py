import numpy as np
import pytest

from pwhistory import calibration as cal


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def write_doc(tmp_path):
    """Write a Document to a file under tmp_path and return the path."""

    def _write(doc, name="doc.txt"):
        path = tmp_path / name
        cal.write_document(doc, path)
        return path

    return _write


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[number])
