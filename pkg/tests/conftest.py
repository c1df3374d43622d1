import csv
import pathlib

import pytest

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def golden_rdp():
    """{(q, sigma, alpha): rdp_eps} from the frozen high-precision oracle."""
    table = {}
    with open(FIXTURES / "accountant_golden.csv") as f:
        for row in csv.DictReader(f):
            key = (float(row["q"]), float(row["sigma"]), int(row["alpha"]))
            table[key] = float(row["rdp_eps"])
    return table
