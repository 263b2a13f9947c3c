import pytest

from micropost.config import load_config


@pytest.fixture(scope="session")
def config_file():
    return load_config()
