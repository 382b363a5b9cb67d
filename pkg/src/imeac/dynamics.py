"""Swing-equation integration through fault-on and post-fault stages.

State per machine: rotor angle delta (synchronous frame, rad), speed
deviation omega (rad/s), and the running potential-energy integral
W_i = integral of -f_i-SYS^(PF) d delta_i-SYS.  W is integrated as an
augmented state inside the same fixed-step fourth-order Runge-Kutta
scheme as the motion, so the energy channels downstream inherit the
integrator's accuracy instead of a coarser trajectory quadrature
(sampled trapezoid sums drift by their Euler-Maclaurin boundary term
once a machine separates and spins fast; the augmented state does not).

The f^(PF) channel (forces evaluated on the post-fault network at the
current angles) is recorded during the fault-on stage as well: the
potential-energy integrand is post-fault by definition, whatever
network is driving the motion.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, IO, Sequence

import numpy as np

from .case import ReducedNetwork, StabilityCase, coi_reference

OMEGA_DIVERGENCE = 1e4  # rad/s; far beyond any physical swing
GRID_TOL = 1e-12  # s; switching instants must land on the sample grid


@dataclass(frozen=True)
class SimulationConfig:
    """Fault staging and integration grid for one simulation."""

    t_clear: float
    t_end: float
    dt: float = 1e-3
    method: str = "rk4"

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not 0 < self.t_clear < self.t_end:
            raise ValueError(
                f"need 0 < t_clear < t_end, got t_clear={self.t_clear}, t_end={self.t_end}"
            )
        for name, value in (("t_clear", self.t_clear), ("t_end", self.t_end)):
            steps = round(value / self.dt)
            if abs(value - steps * self.dt) > GRID_TOL:
                raise ValueError(
                    f"{name}={value} is not an integer multiple of dt={self.dt}"
                )
        if self.method != "rk4":
            raise ValueError(f"unknown integrator method '{self.method}'")

    @property
    def clear_index(self) -> int:
        return round(self.t_clear / self.dt)

    @property
    def n_steps(self) -> int:
        return round(self.t_end / self.dt)


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled states plus the COI-frame channels.

    All channel arrays are machines x samples.  f_coi is the relative
    accelerating force on the network active at each sample (fault-on
    before clear_index, post-fault from it onward); f_coi_pf is the
    same force always evaluated on the post-fault network.  pe_integral
    is the accumulated integral of -f_coi_pf d delta_coi from t = 0
    (baseline handling lives in the energy module).  A divergence guard
    truncates the record at the last finite sample.
    """

    times: np.ndarray
    delta: np.ndarray
    omega: np.ndarray
    delta_coi: np.ndarray
    omega_coi: np.ndarray
    f_coi: np.ndarray
    f_coi_pf: np.ndarray
    pe_integral: np.ndarray
    clear_index: int
    diverged: bool = False
    divergence_time: float | None = None

    def __post_init__(self):
        for name in (
            "times", "delta", "omega", "delta_coi", "omega_coi",
            "f_coi", "f_coi_pf", "pe_integral",
        ):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_machines(self) -> int:
        return self.delta.shape[0]

    @property
    def n_samples(self) -> int:
        return self.times.shape[0]


def rk4_step(rhs: Callable[[np.ndarray], np.ndarray], y: np.ndarray, dt: float) -> np.ndarray:
    """One classical Runge-Kutta step of an autonomous system."""
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * dt * k1)
    k3 = rhs(y + 0.5 * dt * k2)
    k4 = rhs(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _net_kernels(net: ReducedNetwork, e: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ee = np.outer(e, e)
    return ee * net.g, ee * net.b


def simulate(case: StabilityCase, cfg: SimulationConfig) -> Trajectory:
    """Integrate the staged swing equations and record every channel.

    Stage 1 drives the motion with net_faulton on [0, t_clear], stage 2
    with net_postfault on [t_clear, t_end]; the switch lands exactly on
    a grid sample, so the state is continuous and never interpolated
    across the discontinuity.  Deterministic: identical inputs give
    bit-identical trajectories.
    """
    n = case.n
    m = case.m_vector()
    pm = case.pm_vector()
    e = case.e_vector()
    d = case.d_vector()
    m_sys = m.sum()
    m_share = m / m_sys
    kern_fault = _net_kernels(case.net_faulton, e)
    kern_post = _net_kernels(case.net_postfault, e)

    def stage_eval(y: np.ndarray, fault_stage: bool):
        """Return (dy/dt, per-sample channels) at state y."""
        delta = y[:n]
        omega = y[n : 2 * n]
        diff = delta[:, None] - delta[None, :]
        cos_d = np.cos(diff)
        sin_d = np.sin(diff)
        eg, eb = kern_post
        pe_post = (eg * cos_d + eb * sin_d).sum(axis=1)
        acc_post = pm - pe_post
        f_pf = acc_post - acc_post.sum() * m_share
        if fault_stage:
            eg, eb = kern_fault
            pe_act = (eg * cos_d + eb * sin_d).sum(axis=1)
            acc_act = pm - pe_act
            f_act = acc_act - acc_act.sum() * m_share
        else:
            acc_act = acc_post
            f_act = f_pf
        omega_coi = omega - np.dot(m_share, omega)
        dy = np.empty(3 * n)
        dy[:n] = omega
        dy[n : 2 * n] = (acc_act - d * omega) / m
        dy[2 * n :] = -f_pf * omega_coi
        return dy, (omega_coi, f_act, f_pf)

    n_steps = cfg.n_steps
    clear_index = cfg.clear_index
    times = np.arange(n_steps + 1) * cfg.dt
    states = np.empty((n_steps + 1, 3 * n))
    chan_omega_coi = np.empty((n_steps + 1, n))
    chan_f = np.empty((n_steps + 1, n))
    chan_f_pf = np.empty((n_steps + 1, n))

    y = np.concatenate([case.delta0, case.omega0, np.zeros(n)])
    diverged = False
    divergence_time = None
    last = n_steps
    dt = cfg.dt
    for k in range(n_steps + 1):
        fault_stage = k < clear_index
        # the first RK stage sits exactly on the sample: record and reuse
        k1, (omega_coi, f_act, f_pf) = stage_eval(y, fault_stage)
        states[k] = y
        chan_omega_coi[k] = omega_coi
        chan_f[k] = f_act
        chan_f_pf[k] = f_pf
        if k == n_steps:
            break
        k2 = stage_eval(y + 0.5 * dt * k1, fault_stage)[0]
        k3 = stage_eval(y + 0.5 * dt * k2, fault_stage)[0]
        k4 = stage_eval(y + dt * k3, fault_stage)[0]
        y_next = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        omega_next = y_next[n : 2 * n]
        if not np.all(np.isfinite(y_next)) or np.max(np.abs(omega_next)) > OMEGA_DIVERGENCE:
            diverged = True
            divergence_time = float(times[k + 1])
            last = k
            break
        y = y_next

    sl = slice(0, last + 1)
    delta = states[sl, :n].T
    omega = states[sl, n : 2 * n].T
    pe_integral = states[sl, 2 * n :].T
    delta_coi = delta - coi_reference(m, delta.T)
    return Trajectory(
        times=times[sl],
        delta=delta,
        omega=omega,
        delta_coi=delta_coi,
        omega_coi=chan_omega_coi[sl].T,
        f_coi=chan_f[sl].T,
        f_coi_pf=chan_f_pf[sl].T,
        pe_integral=pe_integral,
        clear_index=clear_index,
        diverged=diverged,
        divergence_time=divergence_time,
    )


def machine_sys_state(
    case: StabilityCase, traj: Trajectory, sample: int
) -> tuple[float, float, float]:
    """Machine-SYS aggregates (delta_SYS, omega_SYS, P_SYS) at one sample.

    P_SYS is recomputed from the stage network active at that sample.
    """
    from .case import electrical_power

    m = case.m_vector()
    delta = traj.delta[:, sample]
    omega = traj.omega[:, sample]
    net = case.net_faulton if sample < traj.clear_index else case.net_postfault
    pe = electrical_power(net, case.machines, delta)
    p_sys = float(np.sum(case.pm_vector() - pe))
    return (
        float(coi_reference(m, delta)),
        float(coi_reference(m, omega)),
        p_sys,
    )


TRAJECTORY_CHANNELS = ("delta", "omega", "delta_coi", "omega_coi", "f_coi", "ke", "pe")
_CHANNEL_UNITS = {
    "delta": "rad",
    "omega": "radps",
    "delta_coi": "rad",
    "omega_coi": "radps",
    "f_coi": "pu",
    "ke": "pu",
    "pe": "pu",
}


def trajectory_header(n: int) -> str:
    cols = ["t_s"]
    for channel in TRAJECTORY_CHANNELS:
        cols.extend(f"{channel}_{i}_{_CHANNEL_UNITS[channel]}" for i in range(n))
    return "# " + "\t".join(cols)


def write_trajectory(stream: IO[str], traj: Trajectory, ke: np.ndarray, pe: np.ndarray) -> None:
    """Write the trajectory export: one header row, one row per sample.

    Angles stay in radians (the header names the units); ke/pe are the
    energy channels computed by the energy module.
    """
    n = traj.n_machines
    stream.write(trajectory_header(n) + "\n")
    blocks = [
        traj.times[None, :],
        traj.delta, traj.omega, traj.delta_coi, traj.omega_coi, traj.f_coi,
        ke, pe,
    ]
    table = np.vstack(blocks).T
    for row in table:
        stream.write("\t".join(f"{v:.10e}" for v in row) + "\n")
