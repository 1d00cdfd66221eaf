import pytest

from kisimple.simplicity import ZipfTable
from kisimple.textproc import tokenize

# A hand-made frequency table of everyday words. The bundled lexicon is
# large enough to contain many proper nouns, which would hide them from the
# entity heuristic in tests that are about the heuristic itself.
COMMON = {
    "the": 7.73, "a": 7.36, "he": 6.6, "she": 6.4, "it": 6.9, "we": 6.6, "they": 6.5,
    "cat": 4.6, "sat": 4.0, "on": 7.0, "mat": 3.6, "landed": 3.7, "in": 7.3,
    "visited": 4.2, "is": 7.2, "red": 5.0, "planet": 4.5, "city": 5.2, "went": 5.4,
    "to": 7.4, "vigorous": 3.54, "strong": 5.23, "big": 5.3, "dog": 4.9,
}


@pytest.fixture(scope="session")
def common_lexicon():
    return ZipfTable(COMMON)


@pytest.fixture
def tok():
    return tokenize


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
