"""The twelve acceptance criteria at their fixed tolerances.

Each criterion prints one ``criterion NN [PASS|FAIL] title`` line (shown
even under output capture) and the test asserts the verdict.
"""

import json

import pytest

from nce.acceptance import CRITERIA, run_criterion


@pytest.mark.parametrize("number", range(1, len(CRITERIA) + 1))
def test_criterion(number, capsys):
    res = run_criterion(number)
    with capsys.disabled():
        print(f"\n{res.line()} ({res.seconds:.2f} s)")
    assert res.ok, json.dumps(res.to_json(), default=str, indent=1)


if __name__ == "__main__":
    for n in range(1, len(CRITERIA) + 1):
        print(run_criterion(n).line())
