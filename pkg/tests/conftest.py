from __future__ import annotations

import numpy as np
import pytest

from tiesec import pipeline, projection

# every compute_region call in the session, for the volume monotonicity check
VOLUME_HISTORIES: list[list[float]] = []
ACCEPTANCE: dict[int, tuple[bool, str]] = {}

_original = projection.compute_region


def _recording(*args, **kwargs):
    r = _original(*args, **kwargs)
    VOLUME_HISTORIES.append(list(r.volume_history))
    return r


projection.compute_region = _recording
pipeline.compute_region = _recording


def worst_volume_drop(histories=None) -> float:
    """Largest decrease between consecutive sweeps, relative to the earlier volume."""
    worst = 0.0
    for h in VOLUME_HISTORIES if histories is None else histories:
        h = np.asarray(h, dtype=float)
        if h.size > 1:
            drop = (h[:-1] - h[1:]) / np.maximum(1.0, np.abs(h[:-1]))
            worst = max(worst, float(drop.max()))
    return worst


@pytest.fixture
def record_acceptance():
    def rec(number: int, ok: bool, detail: str = ""):
        ACCEPTANCE[number] = (bool(ok), detail)

    return rec


N_CRITERIA = 10


def pytest_collection_modifyitems(session, config, items):
    # acceptance last, so the volume check sees every other compute_region run
    items.sort(key=lambda item: item.path.name == "test_acceptance.py")


def pytest_terminal_summary(terminalreporter):
    ran = any("test_acceptance.py" in rep.nodeid for rep in terminalreporter.stats.get("passed", []) + terminalreporter.stats.get("failed", []))
    if ACCEPTANCE or ran:
        terminalreporter.section("acceptance criteria")
        for k in range(1, N_CRITERIA + 1):
            ok, detail = ACCEPTANCE.get(k, (False, "not recorded"))
            terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
    terminalreporter.write_line(
        f"compute_region runs this session: {len(VOLUME_HISTORIES)}, largest relative volume drop between sweeps: "
        f"{worst_volume_drop():.3g}"
    )


def pytest_sessionfinish(session, exitstatus):
    # volume must never shrink between sweeps in any run of the suite
    if worst_volume_drop() > 1e-9 and session.exitstatus == 0:
        session.exitstatus = 1
