# pylint: disable=redefined-outer-name
from pathlib import Path

import pytest

from shearlab.service_layer import unit_of_work

CONFIGS = Path(__file__).parent.parent / "configs"


@pytest.fixture
def configs():
    return CONFIGS


@pytest.fixture
def out_dir(tmp_path):
    return tmp_path / "out"


@pytest.fixture
def fs_uow(out_dir):
    return unit_of_work.FileSystemUnitOfWork(out_dir)


@pytest.fixture
def scenario_file(tmp_path):
    def write(text, name="scenario.ini"):
        path = tmp_path / name
        path.write_text(text)
        return path
    return write
