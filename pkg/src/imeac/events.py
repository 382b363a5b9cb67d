"""Swing-by-swing detection of per-machine DSP and DLP events.

Scanning runs on the post-clearing samples of a trajectory, machine by
machine.  A DSP is a zero crossing of omega_i-SYS: the turning point of
a swing, with (numerically) exhausted kinetic energy.  A DLP is a zero
crossing of f_i-SYS^(PF) from restoring to anti-restoring while the
machine is still moving: the separation point.  The first DLP is
terminal for its machine; DSPs advance the swing count and scanning
continues, which is what makes multi-swing classification possible.

Event times come from linear interpolation of the crossing channel;
channel values at the event use cubic Hermite interpolation with the
exact derivative channels recorded by the integrator (d delta/dt =
omega, d omega/dt = f/M, d pe/dt = -f omega), so the Eq.-style energy
identities hold at events to interpolation accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .case import StabilityCase
from .dynamics import Trajectory

OMEGA_TOL = 1e-3  # rad/s; below this a machine counts as not moving

DSP = "DSP"
DLP = "DLP"


@dataclass(frozen=True)
class SwingEvent:
    """One detected stationary (DSP) or liberation (DLP) point."""

    machine: int
    kind: str
    swing_index: int
    time: float
    delta_coi: float
    residual_ke: float
    direction: str
    near_critical: bool = False


def _hermite(p0: float, p1: float, d0: float, d1: float, h: float, s: float) -> float:
    """Cubic Hermite value at fraction s of an interval of width h."""
    s2 = s * s
    s3 = s2 * s
    return (
        (2.0 * s3 - 3.0 * s2 + 1.0) * p0
        + (s3 - 2.0 * s2 + s) * h * d0
        + (-2.0 * s3 + 3.0 * s2) * p1
        + (s3 - s2) * h * d1
    )


def detect_events(
    case: StabilityCase,
    traj: Trajectory,
    omega_tol: float = OMEGA_TOL,
) -> list[list[SwingEvent]]:
    """Scan every machine's post-clearing channels for DSP/DLP events.

    Returns one time-ordered event list per machine; an empty list means
    the machine reached no turning or separation point in the horizon
    (undetermined).  A machine must actually have moved (|omega_i-SYS| >
    omega_tol since its previous event) before a DSP is registered,
    which keeps numerically resting machines, like an infinite-bus
    surrogate, from emitting noise events.  When an omega crossing and
    an f crossing fall in the same step, the DSP wins and is flagged
    near_critical.
    """
    if traj.n_samples < 2:
        raise ValueError("trajectory must have at least 2 samples")
    m = case.m_vector()
    times = traj.times
    start = min(traj.clear_index, traj.n_samples - 1)
    out: list[list[SwingEvent]] = []
    for i in range(case.n):
        omega = traj.omega_coi[i]
        force = traj.f_coi_pf[i]
        delta = traj.delta_coi[i]
        events: list[SwingEvent] = []
        swings = 0
        moved = 0.0
        for k in range(start, traj.n_samples - 1):
            moved = max(moved, abs(omega[k]))
            h = times[k + 1] - times[k]
            w0, w1 = omega[k], omega[k + 1]
            f0, f1 = force[k], force[k + 1]
            omega_crossing = w0 * w1 < 0.0
            direction = "forward" if w0 > 0.0 else "backward"
            if omega_crossing and moved > omega_tol:
                s = w0 / (w0 - w1)
                t_star = times[k] + s * h
                w_star = _hermite(w0, w1, f0 / m[i], f1 / m[i], h, s)
                events.append(
                    SwingEvent(
                        machine=i,
                        kind=DSP,
                        swing_index=swings + 1,
                        time=float(t_star),
                        delta_coi=float(_hermite(delta[k], delta[k + 1], w0, w1, h, s)),
                        residual_ke=float(0.5 * m[i] * w_star**2),
                        direction=direction,
                        near_critical=bool((f0 < 0.0 < f1) or (f1 < 0.0 < f0)),
                    )
                )
                swings += 1
                moved = 0.0
                continue
            sign = 1.0 if w0 > 0.0 else -1.0
            if not omega_crossing and f0 * sign < 0.0 < f1 * sign:
                s = f0 / (f0 - f1)
                t_star = times[k] + s * h
                w_star = _hermite(w0, w1, f0 / m[i], f1 / m[i], h, s)
                if abs(w_star) > omega_tol:
                    events.append(
                        SwingEvent(
                            machine=i,
                            kind=DLP,
                            swing_index=swings + 1,
                            time=float(t_star),
                            delta_coi=float(_hermite(delta[k], delta[k + 1], w0, w1, h, s)),
                            residual_ke=float(0.5 * m[i] * w_star**2),
                            direction=direction,
                        )
                    )
                    break  # the first DLP ends this machine's scan
        out.append(events)
    return out
