import pytest

_criteria = []


@pytest.fixture
def record_criterion():
    """Collect one PASS/FAIL line per acceptance criterion for the terminal summary."""
    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail}"
        _criteria.append((number, line))
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _criteria:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_criteria):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def box_data():
    """60 simulated box-scene spectra shared by several modules' tests."""
    import numpy as np
    from rfspec.raytrace import box_scene, sample_transmitters, simulate_spectrum

    scene = box_scene(seed=11)
    P = sample_transmitters(scene, 60, np.random.default_rng(11))
    S = np.array([simulate_spectrum(scene, p, 2) for p in P]).astype(np.float32)
    return P, S
