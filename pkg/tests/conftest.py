from pathlib import Path

import pytest

from oppnet.config import parse_text

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"


def scripted_config(n=3, strategy="epidemic", sim_time=300.0, extra=""):
    """Config for hand-driven runs: ``n`` static pedestrians, no POIs."""
    text = f"""
router.strategy={strategy}
world.nodes={n}
sim.time={sim_time}
router.seen_window=60
group.people.count={n}
{extra}
"""
    return parse_text(text)


@pytest.fixture
def scripted():
    return scripted_config


# Acceptance outcomes, printed once at the end of the session.
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def record_criterion(name: str, ok: bool, detail: str) -> None:
    ACCEPTANCE[name] = (ok, detail)
    print(f"\n{'PASS' if ok else 'FAIL'} {name}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda n: int(n.split()[0][1:])):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
