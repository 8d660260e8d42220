"""Shared pytest hooks: a PASS/FAIL digest for the acceptance tests."""

# Criterion order mirrors tests/test_acceptance.py.
_LABELS = {
    "test_phase_transition_success_boundaries":
        "recovery success boundaries on the (measurements, sparsity) grid",
    "test_interval_coverage_beats_floor":
        "error-interval coverage meets its analytic floor in every cell",
    "test_error_tracking_window_and_halting":
        "scaled validation tracks the true error and halts within budget",
    "test_halting_probability_floor_and_gap":
        "noisy criterion fires at least as often as its bound promises",
    "test_sasr_beats_exhaustive_omp":
        "validation-halted recovery beats exhaustive pursuit under noise",
    "test_adaptive_matches_fixed_budget_baseline":
        "sequential sensing matches the single-shot full-budget baseline",
    "test_transform_identities":
        "transform round trips, energy identity, and conjugate symmetry",
    "test_pursuit_invariants_and_oracle":
        "pursuit invariants hold and the exact solver certifies its output",
    "test_formula_self_consistency":
        "sizing, accuracy, and threshold formulas agree with themselves",
    "test_byte_identical_reruns":
        "identical configs produce byte-identical tables at any worker count",
}

_outcomes: dict[str, str] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.split("::")[-1]
    if name not in _LABELS:
        return
    if report.failed:
        _outcomes[name] = "FAIL"
    elif report.skipped:
        _outcomes.setdefault(name, "SKIP")
    elif report.when == "call" and report.passed and _outcomes.get(name) != "FAIL":
        _outcomes[name] = "PASS"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _outcomes:
        return
    terminalreporter.section("acceptance summary")
    for i, (name, label) in enumerate(_LABELS.items(), start=1):
        outcome = _outcomes.get(name)
        if outcome is None:
            continue
        terminalreporter.write_line(f"[{i:2d}/10] {outcome}  {label}")
