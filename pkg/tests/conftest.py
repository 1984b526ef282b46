import numpy as np
import pytest

from eulerlab.lattice import SampleLattice
from eulerlab.solutions import SolutionParams

# one parameter set per case; the box below is admissible for all of them
CASE_PARAMS = {
    1: SolutionParams(0.0, 0.0),
    2: SolutionParams(0.0, 2.0),
    3: SolutionParams(1.0, 1.0, 1.0),
    4: SolutionParams(2.0, 1.0),
    5: SolutionParams(3.0, 1.0),
}
DATA_DIR = __import__("pathlib").Path(__file__).parent / "data"
BOX = ((-2.0, -1.0), (-2.0, -1.0), (1.0, 2.0))


def box_lattice(n=21, nt=5):
    (x0, x1), (y0, y1), (t0, t1) = BOX
    return SampleLattice.with_times((x0, x1), (y0, y1), n, n, t0, t1, nt)


def random_box_points(n, seed=0):
    rng = np.random.default_rng(seed)
    return tuple(rng.uniform(lo, hi, n) for lo, hi in BOX)


@pytest.fixture(params=sorted(CASE_PARAMS), ids=lambda k: f"case{k}")
def case_params(request):
    return CASE_PARAMS[request.param]
