from pathlib import Path

import pytest

from bilateral import BilateralTable

DATA = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture
def ome():
    # control = Cefaclor, treatment = Amoxicillin
    return BilateralTable.from_groups((0, 1, 3), (1, 0, 6))


@pytest.fixture
def scleroderma():
    # control = Placebo, treatment = Collagen
    return BilateralTable.from_groups((55, 3, 3), (36, 4, 6))


@pytest.fixture
def data_dir():
    return DATA
