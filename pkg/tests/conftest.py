import numpy as np
import pytest

from rkbsnet.candidates import BoxSpec, sample
from rkbsnet.kernel import Dataset, WeightFn, feature_matrix
from rkbsnet.network import Activation, NetworkSpec, param_dim


def make_instance(seed, s=None, t=None, m=None, P=None, activation=None, bound=1.0):
    """Seeded interpolation instance: (spec, cands, data, feature matrix)."""
    rng = np.random.default_rng(seed)
    s = s or int(rng.integers(1, 3))
    t = t or int(rng.integers(1, 3))
    m = m or int(rng.integers(1, 5))
    P = P or int(rng.integers(100, 501))
    act = activation or ("relu", "sigmoid")[int(rng.integers(0, 2))]
    spec = NetworkSpec(s, t, (2,), Activation(act))
    box = BoxSpec.cube(param_dim(spec), bound)
    cands = sample(box, "random", count=P, seed=seed)
    X = rng.uniform(-1.0, 1.0, size=(m, s))
    Y = rng.uniform(-1.0, 1.0, size=(m, t))
    data = Dataset(X, Y)
    A = feature_matrix(spec, WeightFn(), X, cands)
    return spec, cands, data, A


@pytest.fixture
def small_relu():
    spec = NetworkSpec(1, 1, (2,), Activation.RELU)
    cands = sample(BoxSpec.cube(param_dim(spec), 1.0), "random", count=200, seed=11)
    data = Dataset(np.array([[-0.8], [0.1], [0.7]]), np.array([[1.0], [0.3], [-0.5]]))
    A = feature_matrix(spec, WeightFn(), data.X, cands)
    return spec, cands, data, A


# -- acceptance summary --------------------------------------------------------

_CRITERIA: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (report.when != "call" and report.passed):
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, [title, True])
    entry[1] = entry[1] and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}")
