import math
import warnings

import numpy as np
import pytest

from poafd.engine import BoxBoundaryWarning
from poafd.kernels import ConvolutionProfile, KernelFamily, QuadratureBox


@pytest.fixture(autouse=True)
def _quiet_box_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoxBoundaryWarning)
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def conv_family(d: int = 1) -> KernelFamily:
    return KernelFamily.convolution(ConvolutionProfile.poisson(d), d, QuadratureBox(40.0, 800))


CLOSED_FAMILIES = [
    KernelFamily.poisson(1),
    KernelFamily.poisson(2),
    KernelFamily.heat(1),
    KernelFamily.heat(2),
    KernelFamily.sphere(3),
]

C1 = 1 / math.pi


# -- shared experiment runs and the acceptance summary -----------------------

_CRITERIA: dict[int, str] = {}


def record_criterion(number: int, passed: bool, detail: str) -> str:
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    _CRITERIA[number] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[k])


@pytest.fixture(scope="session")
def experiment_runs():
    """Both reference experiments, run once per session: name -> (experiment, decomposition, seconds)."""
    import time

    from poafd.engine import poafd_run
    from poafd.experiments import EXPERIMENTS

    out = {}
    for name, make in EXPERIMENTS.items():
        exp = make()
        t0 = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoxBoundaryWarning)
            dec = poafd_run(exp.family, exp.signal, exp.iterations, exp.selection)
        out[name] = (exp, dec, time.perf_counter() - t0)
    return out
