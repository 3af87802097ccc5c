import numpy as np
import pytest

from gramqubo.qubo import QuboProblem


@pytest.fixture(scope="session")
def digits_csv(tmp_path_factory):
    """Export the bundled sklearn digits set in the loader's CSV format."""
    sklearn_datasets = pytest.importorskip("sklearn.datasets")
    bunch = sklearn_datasets.load_digits()
    path = tmp_path_factory.mktemp("data") / "digits.csv"
    with open(path, "w") as fh:
        for row, label in zip(bunch.data.astype(int), bunch.target):
            fh.write(",".join(map(str, row.tolist() + [int(label)])) + "\n")
    return str(path)


def random_problem(rng, n, density_scale=1.0) -> QuboProblem:
    """Dense random symmetric QUBO with coefficients in [-1, 1]."""
    A = rng.uniform(-1.0, 1.0, size=(n, n)) * density_scale
    Q = (A + A.T) / 2.0
    q = rng.uniform(-1.0, 1.0, size=n) * density_scale
    return QuboProblem(n=n, Q=Q, q=q)
