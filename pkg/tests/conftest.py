import hashlib
import pathlib

import numpy as np
import pytest

import cue_spectra.sampler as sampler

_OUTCOMES = {}
_DETAILS = {}
ACCEPTANCE_TITLES = {
    1: "Fourier closed forms vs quadrature",
    2: "exact second-cumulant sum and its limit",
    3: "CLT campaign at N=256, L=16",
    4: "decomposition identities over the (N, c, z) grid",
    5: "normalized second moment scaling",
    6: "inverse-square claim statistic",
    7: "lattice vs direct Q'/Q",
    8: "w_k circle chain",
    9: "ratios three-way agreement",
    10: "sampler validity",
    11: "determinism across worker counts",
}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion number k")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    k = marker.args[0]
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _OUTCOMES[k] = "PASS" if rep.passed else "FAIL"


@pytest.fixture
def detail(request):
    """Record a one-line summary for the criterion under test."""
    k = request.node.get_closest_marker("criterion").args[0]

    def note(text):
        _DETAILS[k] = text

    return note


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for k, title in ACCEPTANCE_TITLES.items():
        status = _OUTCOMES.get(k, "NOT RUN")
        extra = f" | {_DETAILS[k]}" if k in _DETAILS else ""
        terminalreporter.write_line(f"criterion {k:2d} {status:7s} {title}{extra}")


@pytest.fixture(scope="session")
def cue_spectra(request):
    """Seeded CUE spectra, memoised in memory and in the pytest cache directory.

    The cache key covers the sampler source, so any change to the sampler
    regenerates the spectra.
    """
    memo = {}
    source = pathlib.Path(sampler.__file__).read_bytes()
    tag = hashlib.sha256(source).hexdigest()[:16]
    root = pathlib.Path(request.config.cache.mkdir("cue_spectra"))

    def get(n, count, seed=1):
        key = (n, count, seed)
        if key not in memo:
            path = root / f"{tag}-n{n}-c{count}-s{seed}.npy"
            if path.exists():
                memo[key] = np.load(path)
            else:
                memo[key] = sampler.sample_cue_angles(n, seed, count)
                np.save(path, memo[key])
        return memo[key]

    return get
