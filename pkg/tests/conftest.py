import numpy as np
import pytest

from pfabrik.mechanisms import FiveBar, Nrpm, Stewart


def expm_series(A, terms=40):
    """Matrix exponential by truncated Taylor series; independent of the closed form."""
    out = np.eye(3)
    term = np.eye(3)
    for k in range(1, terms):
        term = term @ A / k
        out = out + term
    return out


@pytest.fixture(scope="session")
def five_bar():
    return FiveBar()


@pytest.fixture(scope="session")
def stewart():
    return Stewart()


@pytest.fixture(scope="session")
def nrpm():
    return Nrpm()


@pytest.fixture(scope="session", params=["five_bar", "stewart", "nrpm"])
def mechanism(request, five_bar, stewart, nrpm):
    return {"five_bar": five_bar, "stewart": stewart, "nrpm": nrpm}[request.param]
