import sys

import numpy as np
import pytest

from rotorforge.chain import ChainSpec


def cosine_chain(n, k=None, gamma=1.0):
    return ChainSpec.build(n, n if k is None else k, gamma, ["cosine"] * (n - 1))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None:
        return
    terminalreporter.section("acceptance criteria")
    for num, title in mod.TITLES.items():
        if num in mod.RESULTS:
            ok, detail = mod.RESULTS[num]
            status = "PASS" if ok else "FAIL"
        else:
            status, detail = "NOT RUN", ""
        terminalreporter.write_line(f"[{status}] criterion {num:2d}: {title}"
                                    + (f" -- {detail}" if detail else ""))
