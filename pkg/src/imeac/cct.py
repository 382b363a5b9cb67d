"""Critical clearing time search over full simulations.

Each probe is one staged simulation plus the full machine-by-machine
assessment; bisection narrows a stable/unstable clearing-time bracket
down to the requested resolution on an integer grid, so the result is
identical to an exhaustive scan of the same grid.  The most severely
disturbed machine (MDM) is the machine emitting the first DLP on the
unstable side of the final bracket, and the system's critical transient
energy is the MDM's total energy at clearing on the stable side.
"""

from __future__ import annotations

import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import IO, Sequence

from .assess import MachineAssessment, SystemAssessment, assess_machines, assess_system
from .case import StabilityCase, solve_postfault_sep
from .dynamics import SimulationConfig, simulate
from .energy import compute_energy
from .errors import BracketError, ImeacError
from .events import detect_events
from .exportutil import fmt

DEFAULT_HORIZON = 3.0  # s of post-clearing observation per probe

WORKERS_ENV = "IMEAC_WORKERS"


@dataclass(frozen=True)
class ProbeResult:
    """Outcome of one clearing-time probe."""

    t_clear: float
    assessment: SystemAssessment
    machine_assessments: tuple[MachineAssessment, ...]
    total_at_clear: tuple[float, ...]
    diverged: bool

    @property
    def stable(self) -> bool:
        return self.assessment.stable


@dataclass(frozen=True)
class CctResult:
    """Bisection outcome: bracket, MDM, critical energy, margin curve."""

    cct: float
    cct_unstable: float
    resolution: float
    mdm: int
    critical_energy: float
    margin_curve: tuple[tuple[float, float], ...]
    evaluations: int


def _grid_value(value: float, unit: float, name: str) -> int:
    k = round(value / unit)
    if abs(value - k * unit) > 1e-9:
        raise ValueError(f"{name}={value} is not an integer multiple of {unit}")
    return k


def probe_clearing_time(
    case: StabilityCase,
    t_clear: float,
    dt: float = 1e-3,
    horizon: float = DEFAULT_HORIZON,
    first_swing_only: bool = False,
    sep=None,
) -> ProbeResult:
    """Simulate one clearing time and assess the system."""
    if sep is None:
        sep = solve_postfault_sep(case)
    steps = _grid_value(t_clear, dt, "t_clear") + _grid_value(horizon, dt, "horizon")
    cfg = SimulationConfig(t_clear=t_clear, t_end=steps * dt, dt=dt)
    traj = simulate(case, cfg)
    if traj.n_samples <= traj.clear_index:
        raise ImeacError(
            f"simulation diverged during the fault-on stage at t={traj.divergence_time} s"
        )
    channels = compute_energy(case, traj, sep)
    events = detect_events(case, traj)
    if first_swing_only:
        events = [[ev for ev in machine if ev.swing_index == 1] for machine in events]
    assessments = assess_machines(case, traj, channels, events)
    return ProbeResult(
        t_clear=t_clear,
        assessment=assess_system(assessments),
        machine_assessments=tuple(assessments),
        total_at_clear=tuple(float(v) for v in channels.total[:, traj.clear_index]),
        diverged=traj.diverged,
    )


def scan_clearing_times(
    case: StabilityCase,
    times: Sequence[float],
    dt: float = 1e-3,
    horizon: float = DEFAULT_HORIZON,
    first_swing_only: bool = False,
    workers: int | None = None,
) -> list[ProbeResult]:
    """Probe many clearing times; order of the result follows the input.

    Probes are independent over the immutable case; with workers > 1
    they run in a thread pool (default from the IMEAC_WORKERS
    environment variable, else serial).
    """
    sep = solve_postfault_sep(case)
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))

    def run(t_clear: float) -> ProbeResult:
        return probe_clearing_time(
            case, t_clear, dt=dt, horizon=horizon,
            first_swing_only=first_swing_only, sep=sep,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, times))
    return [run(t) for t in times]


def identify_mdm(
    stable_assessments: Sequence[MachineAssessment],
    unstable_assessments: Sequence[MachineAssessment],
) -> int:
    """The machine emitting the first DLP on the unstable side.

    Consistency check: the same machine should carry the minimum margin
    on the stable side; a mismatch is reported as a warning and the
    unstable-side identity wins.
    """
    dlps = [
        (a.first_dlp().time, a.machine)
        for a in unstable_assessments
        if a.first_dlp() is not None
    ]
    if not dlps:
        raise ImeacError("unstable-side assessments contain no DLP")
    mdm = min(dlps)[1]
    margins = {a.machine: a.margin for a in stable_assessments if a.margin is not None}
    if margins:
        low = min(margins.values())
        if margins.get(mdm, math.inf) > low + 1e-9:
            warnings.warn(
                f"MDM {mdm} (first DLP) does not carry the minimum stable-side "
                f"margin; keeping the unstable-side identity",
                RuntimeWarning,
                stacklevel=2,
            )
    return mdm


def find_cct(
    case: StabilityCase,
    t_lo: float,
    t_hi: float,
    resolution: float = 1e-3,
    dt: float = 1e-3,
    horizon: float = DEFAULT_HORIZON,
    first_swing_only: bool = False,
) -> CctResult:
    """Bisect the clearing time on the resolution grid.

    t_lo must be stable and t_hi unstable (both are simulated first and
    validated).  Every probe lands on an integer multiple of resolution,
    which itself must be an integer multiple of dt, so the returned CCT
    is exactly what an exhaustive scan of the same grid would select.
    Evaluations are at most 2 + ceil(log2(bracket / resolution)).
    """
    _grid_value(resolution, dt, "resolution")
    lo = _grid_value(t_lo, resolution, "t_lo")
    hi = _grid_value(t_hi, resolution, "t_hi")
    if not lo < hi:
        raise ValueError(f"need t_lo < t_hi, got {t_lo} >= {t_hi}")
    sep = solve_postfault_sep(case)
    probes: dict[int, ProbeResult] = {}

    def run(k: int) -> ProbeResult:
        result = probe_clearing_time(
            case, k * resolution, dt=dt, horizon=horizon,
            first_swing_only=first_swing_only, sep=sep,
        )
        probes[k] = result
        return result

    if not run(lo).stable:
        run(hi)
        raise BracketError(
            f"t_lo={t_lo} must be stable: got unstable at t_lo, "
            f"{'unstable' if not probes[hi].stable else 'stable'} at t_hi"
        )
    if run(hi).stable:
        raise BracketError(f"t_hi={t_hi} must be unstable: got stable at both ends")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if run(mid).stable:
            lo = mid
        else:
            hi = mid
    ordered = sorted(probes.items())
    for (ka, pa), (kb, pb) in zip(ordered, ordered[1:]):
        if not pa.stable and pb.stable:
            raise ImeacError(
                f"non-monotone verdicts: unstable at {ka * resolution:.6g} s but "
                f"stable at {kb * resolution:.6g} s"
            )
    mdm = identify_mdm(probes[lo].machine_assessments, probes[hi].machine_assessments)
    curve = tuple(
        (k * resolution, p.machine_assessments[mdm].margin)
        for k, p in ordered
        if p.machine_assessments[mdm].margin is not None
    )
    return CctResult(
        cct=lo * resolution,
        cct_unstable=hi * resolution,
        resolution=resolution,
        mdm=mdm,
        critical_energy=probes[lo].total_at_clear[mdm],
        margin_curve=curve,
        evaluations=len(probes),
    )


def write_cct(stream: IO[str], result: CctResult) -> None:
    """Structured CCT document (JSON)."""
    doc = {
        "cct_s": round(result.cct, 12),
        "cct_unstable_s": round(result.cct_unstable, 12),
        "resolution_s": result.resolution,
        "mdm": result.mdm,
        "critical_energy_pu": float(f"{result.critical_energy:.10e}"),
        "evaluations": result.evaluations,
        "margin_curve": [
            {"t_clear_s": round(t, 12), "eta_mdm": float(f"{eta:.10e}")}
            for t, eta in result.margin_curve
        ],
    }
    json.dump(doc, stream, indent=2, sort_keys=True)
    stream.write("\n")


def write_margin_curve(stream: IO[str], result: CctResult) -> None:
    """Two-column margin-curve table for plotting."""
    stream.write("# t_clear_s\teta_mdm\n")
    for t, eta in result.margin_curve:
        stream.write(f"{t:.6f}\t{fmt(eta)}\n")
