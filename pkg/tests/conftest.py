import json
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def eq8_fixture():
    return json.loads((FIXTURES / "eq8.json").read_text())
