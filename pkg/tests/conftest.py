from pathlib import Path

import pytest

from amrmerge.bundle import load_bundle

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_bundle(name: str):
    return load_bundle(FIXTURES / f"{name}.json")


@pytest.fixture
def minister():
    return fixture_bundle("minister")


def write_corpus(root: Path, bundles, splits) -> Path:
    """Write bundles as JSON plus a manifest assigning each a split."""
    import json

    from amrmerge.bundle import bundle_to_dict

    root.mkdir(parents=True, exist_ok=True)
    lines = []
    for bundle, split in zip(bundles, splits):
        (root / f"{bundle.doc_id}.json").write_text(json.dumps(bundle_to_dict(bundle)), encoding="utf-8")
        lines.append(f'[[bundle]]\npath = "{bundle.doc_id}.json"\nsplit = "{split}"\n')
    manifest = root / "manifest.toml"
    manifest.write_text("\n".join(lines), encoding="utf-8")
    return manifest


# one PASS/FAIL line per acceptance criterion, printed after the run
_criteria: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call" or report.failed:
        if report.failed or _criteria.get(name) != "FAIL":
            _criteria[name] = "FAIL" if report.failed else "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _criteria.items():
        terminalreporter.write_line(f"{outcome}  {name}")
