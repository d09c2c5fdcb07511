"""
Shared pytest fixtures for all sinkless-lb tests.

This root conftest.py provides the generic fixtures; tree, build and
instance fixtures live in tests/conftest.py.
"""

import os
import tempfile
from pathlib import Path

import pytest


# =============================================================================
# TEMPORARY DIRECTORY FIXTURES
# =============================================================================

@pytest.fixture
def temp_path():
    """Create a temporary directory as Path object.

    Automatically cleaned up after test.

    Returns:
        Path: Temporary directory path
    """
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    """Point the config layer at an empty per-test directory.

    Clears every SINKLESS_LB_* override inherited from the environment so
    tests see the built-in defaults.
    """
    for key in list(os.environ):
        if key.startswith("SINKLESS_LB_"):
            monkeypatch.delenv(key)
    config_dir = tmp_path / "config"
    monkeypatch.setenv("SINKLESS_LB_CONFIG_DIR", str(config_dir))
    return config_dir


# =============================================================================
# PYTEST HOOKS
# =============================================================================

def pytest_configure(config):
    """Configure pytest with custom markers."""
    config.addinivalue_line(
        "markers", "slow: marks tests as slow (deselect with '-m \"not slow\"')"
    )
    config.addinivalue_line(
        "markers", "integration: marks tests that run whole pipelines through the CLI"
    )
