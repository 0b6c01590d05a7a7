from pathlib import Path

import pytest

from trustsim.config import parse_config

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

# Probability tables transcribed by hand, kept apart from the builtin
# definitions so the two can disagree. Rows: state -> (p_send_true,
# p_send_untrue, p_report_fraud, p_report_honest).
TABLES = {
    "FourState": {
        "SB": (0, 0, 0, 0),
        "S1": (0.40, 0.60, 0.60, 0.40),
        "S2": (0.50, 0.50, 0.5, 0.50),
        "S3": (0.80, 0.20, 0.2, 0.8),
    },
    "SixState": {
        "Blacklisted": (0, 0, 0, 0),
        "Very Bad": (0.1, 0.9, 0.9, 0.1),
        "Bad": (0.2, 0.8, 0.7, 0.3),
        "Normal": (0.4, 0.6, 0.5, 0.5),
        "Good": (0.6, 0.4, 0.3, 0.7),
        "Very Good": (0.8, 0.2, 0.1, 0.9),
    },
    "ElevenState": {
        "Blacklisted": (0, 0, 0, 0),
        "Very Bad": (0.1, 0.9, 0.9, 0.1),
        "Bad": (0.2, 0.8, 0.8, 0.2),
        "Fairly Bad": (0.3, 0.7, 0.7, 0.3),
        "Below Normal": (0.4, 0.6, 0.6, 0.4),
        "Normal": (0.5, 0.5, 0.55, 0.45),
        "Above Normal": (0.6, 0.4, 0.5, 0.5),
        "Fairly Good": (0.7, 0.3, 0.4, 0.6),
        "Good": (0.8, 0.2, 0.3, 0.7),
        "Very Good": (0.85, 0.15, 0.2, 0.8),
        "Outstanding": (0.95, 0.05, 0.1, 0.9),
    },
}

# Inclusive hundredth bins.
BINS = {
    "FourState": {"SB": (0, 9), "S1": (10, 49), "S2": (50, 59), "S3": (60, 90)},
    "SixState": {"Blacklisted": (0, 9), "Very Bad": (10, 29), "Bad": (30, 48),
                 "Normal": (49, 59), "Good": (60, 74), "Very Good": (75, 90)},
    "ElevenState": {"Blacklisted": (0, 9), "Very Bad": (10, 19), "Bad": (20, 29),
                    "Fairly Bad": (30, 39), "Below Normal": (40, 49), "Normal": (50, 54),
                    "Above Normal": (55, 64), "Fairly Good": (65, 74), "Good": (75, 82),
                    "Very Good": (83, 87), "Outstanding": (88, 90)},
}

KINDS = tuple(TABLES)


def load(name):
    return parse_config(CONFIGS / name)


@pytest.fixture
def out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("TRUSTSIM_OUT", str(tmp_path / "out"))
    return tmp_path / "out"


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
