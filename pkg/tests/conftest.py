import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

ACCEPTANCE_LABELS = {
    "test_ac01_gradients": "AC1 gradient correctness",
    "test_ac02_contraction": "AC2 wide contraction ratio",
    "test_ac03_retraction_endpoints": "AC3 retraction endpoints",
    "test_ac04_scale_invariance": "AC4 scale invariance",
    "test_ac05_flow_convergence": "AC5 flow convergence at w=1",
    "test_ac06_w_sweep_trends": "AC6 w-sweep rank trends",
    "test_ac07_sparsity_from_orthogonality": "AC7 sparsity from orthogonality",
    "test_ac08_spca_unregularized": "AC8 SPCA unregularized limit",
    "test_ac09_spca_support_recovery": "AC9 SPCA support recovery",
    "test_ac10_orth_residual_direction": "AC10 nsa_flow vs basic orth residual",
    "test_ac11_golub_optional": "AC11 Golub comparison (optional)",
    "test_ac12_determinism_and_guard": "AC12 determinism and NaN guard",
}

_acceptance = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_runtest_logreport(report):
    name = report.nodeid.split("::")[-1].split("[")[0]
    if name not in ACCEPTANCE_LABELS:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        outcome = "SKIP" if report.skipped else ("PASS" if report.passed else "FAIL")
        _acceptance[name] = outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, label in ACCEPTANCE_LABELS.items():
        if name in _acceptance:
            terminalreporter.write_line(f"{_acceptance[name]:4s}  {label}")
