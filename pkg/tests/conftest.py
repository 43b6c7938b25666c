import sys
import warnings
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ifslab import cantor_pair_family, dyadic_gap_family, gauss_family


@pytest.fixture
def dyadic():
    return dyadic_gap_family()


@pytest.fixture
def cantor():
    return cantor_pair_family()


@pytest.fixture
def gauss_digits():
    return gauss_family([1, 2], (0.25, 0.85))


@pytest.fixture
def gauss_full():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return gauss_family()
