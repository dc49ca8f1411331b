import logging

import numpy as np
import pytest

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(autouse=True)
def _quiet_ap_warnings(caplog):
    caplog.set_level(logging.ERROR, logger="legalkb")


def planted_partition(seed: int):
    """Block-structured similarity matrix with a clear optimal partition.

    n <= 10, at least two blocks of size >= 2, within-block similarity in
    [0.8, 1.0], cross-block in [0, 0.2]. Cross pairs outnumber within pairs,
    so the median preference is a cross-block value.
    """
    rng = np.random.default_rng(seed)
    while True:
        n = int(rng.integers(4, 11))
        k = int(rng.integers(2, n // 2 + 1))
        labels = np.concatenate([np.arange(k), rng.integers(0, k, n - k)])
        rng.shuffle(labels)
        sizes = np.bincount(labels)
        if sizes.min() < 2:
            continue
        within = int(sum(s * (s - 1) for s in sizes))
        if n * (n - 1) - within > within:
            break
    S = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            v = rng.uniform(0.8, 1.0) if labels[i] == labels[j] else rng.uniform(0.0, 0.2)
            S[i, j] = S[j, i] = v
    return S, labels
