import csv
from pathlib import Path

import pytest

DATA_DIR = Path(__file__).resolve().parents[1] / "data"
CALIFORNIA = DATA_DIR / "california_housing.csv"


def write_csv(path, header, rows, delimiter=","):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=delimiter)
        w.writerow(header)
        w.writerows(rows)
    return path


@pytest.fixture
def california_path():
    if not CALIFORNIA.exists():
        pytest.skip("California Housing CSV not present in data/")
    return CALIFORNIA
