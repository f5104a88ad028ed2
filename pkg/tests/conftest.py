import pytest


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    status = "PASS" if report.passed else "FAIL"
    print(f"\nACCEPTANCE {name}: {status}", flush=True)


@pytest.fixture(scope="session")
def instance3():
    from ramkit import Instance

    return Instance.default(3)


@pytest.fixture(scope="session")
def instance4():
    from ramkit import Instance

    return Instance.default(4)


@pytest.fixture(scope="session")
def ps3(instance3):
    from ramkit import ProbabilisticSerial

    return ProbabilisticSerial(instance3, cache=True)


@pytest.fixture(scope="session")
def rp3(instance3):
    from ramkit import RandomPriority

    return RandomPriority(instance3, cache=True)
