import subprocess
import sys

import pytest


@pytest.fixture
def run_cli():
    """Run the CLI in a subprocess and capture output + exit code."""

    def _run(*args: str, env: dict | None = None) -> subprocess.CompletedProcess:
        return subprocess.run(
            [sys.executable, "-m", "fairlot", *args],
            capture_output=True,
            text=True,
            env=env,
        )

    return _run
