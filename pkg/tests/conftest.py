"""Shared fixtures and the acceptance-line reporter.

Acceptance tests register one verdict line each via ``record``; the
lines are echoed in the terminal summary so a plain ``pytest`` run
shows the per-criterion outcome without ``-s``.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from imeac import (
    MachineParams,
    ReducedNetwork,
    SimulationConfig,
    StabilityCase,
    load_bundled,
    scan_clearing_times,
    simulate,
    solve_postfault_sep,
)

_ACCEPTANCE_LINES: list[str] = []


def record(number: int, name: str, passed: bool, detail: str) -> None:
    """Register and print one acceptance verdict line, then assert it."""
    line = f"[{number:2d}] {'PASS' if passed else 'FAIL'}  {name}: {detail}"
    _ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for line in sorted(_ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def wscc():
    return load_bundled("wscc9")


@pytest.fixture(scope="session")
def smib():
    return load_bundled("smib")


@pytest.fixture(scope="session")
def star():
    return load_bundled("threebus_lossless")


@pytest.fixture(scope="session")
def wscc_sep(wscc):
    sep = solve_postfault_sep(wscc)
    assert sep.converged
    return sep


@pytest.fixture(scope="session")
def wscc_stable_run(wscc):
    # comfortably inside the stable range (scan: stable through 0.118 s)
    return simulate(wscc, SimulationConfig(t_clear=0.100, t_end=3.100))


@pytest.fixture(scope="session")
def wscc_unstable_run(wscc):
    # far past the 0.152 s critical clearing time, first-swing unstable
    return simulate(wscc, SimulationConfig(t_clear=0.200, t_end=3.200))


@pytest.fixture(scope="session")
def wscc_scan(wscc):
    """1 ms clearing-time scan spanning both unstable windows.

    Verdict map: stable through 0.118, unstable 0.119-0.138 (multi-swing
    island), stable again 0.139-0.152, unstable from 0.153 on.
    """
    times = [round(0.110 + 0.001 * k, 3) for k in range(63)]
    return scan_clearing_times(wscc, times)


def coi_identity_errors(case, traj):
    """Worst-case COI sum residuals over every sample of a trajectory."""
    m = case.m_vector()
    momentum = np.max(np.abs(m @ traj.omega_coi))
    force = np.max(np.abs(traj.f_coi.sum(axis=0)))
    return momentum, force


def two_machine_case(
    pm: float = 0.8,
    b: float = 1.5,
    m0: float = 0.05,
    m1: float = 0.08,
    fault_b: float = 0.0,
    post_b: float | None = None,
    label: str = "pair",
) -> StabilityCase:
    """Lossless two-machine case in exact pre-fault equilibrium.

    Unit EMFs, transfer susceptance b, machine 0 exporting pm; the
    fault-on and post-fault transfer susceptances are configurable so
    tests can stage anything from a bolted fault to a no-op switch.
    """
    post_b = b if post_b is None else post_b
    d01 = math.asin(pm / b)
    m = np.array([m0, m1])
    delta0 = np.array([d01, 0.0])
    delta0 = delta0 - (m @ delta0) / m.sum()

    def net(bval: float, name: str) -> ReducedNetwork:
        mat = np.array([[-bval, bval], [bval, -bval]])
        return ReducedNetwork(g=np.zeros((2, 2)), b=mat, name=name)

    machines = (
        MachineParams(id=0, m=m0, pm=pm, e=1.0),
        MachineParams(id=1, m=m1, pm=-pm, e=1.0),
    )
    return StabilityCase(
        machines=machines,
        net_prefault=net(b, "net_prefault"),
        net_faulton=net(fault_b, "net_faulton"),
        net_postfault=net(post_b, "net_postfault"),
        delta0=delta0,
        omega0=np.zeros(2),
        label=label,
    )
