"""Individual-machine potential-energy surfaces over a two-angle plane.

Two construction modes:

* trajectory mode runs a family of simulations and emits each sample's
  (delta_a-SYS, delta_b-SYS, pe_focus) as one ribbon per trajectory:
  the surface as traced by actual system motion;
* grid mode (3-machine cases only, where the COI plane is exactly
  two-dimensional: the third angle follows from sum M_i delta_i-SYS = 0)
  evaluates the focus machine's potential energy at every node of a
  regular grid by straight-line path quadrature from the post-fault SEP.

With transfer conductances the potential is path-dependent and the two
modes agree only approximately; for lossless cases they coincide.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from .case import StabilityCase, coi_forces, solve_postfault_sep
from .dynamics import SimulationConfig, simulate
from .energy import PATH_SEGMENTS, compute_energy, simpson_weights
from .errors import ImeacError

GRID_CHUNK = 256  # nodes per quadrature batch, keeps intermediates small


@dataclass(frozen=True)
class SurfaceSpec:
    """What to sample: focus machine, axis machines, window, sources."""

    focus_machine: int
    axis_machines: tuple[int, int]
    window: tuple[tuple[float, float], tuple[float, float]]
    grid_n: int = 81
    trajectory_family: tuple[SimulationConfig, ...] = field(default_factory=tuple)

    def __post_init__(self):
        a, b = self.axis_machines
        if a == b:
            raise ValueError("axis machines must be distinct")
        if self.grid_n < 2:
            raise ValueError(f"grid_n must be >= 2, got {self.grid_n}")


@dataclass(frozen=True)
class SurfaceSample:
    """One surface point: plotting angles, focus-machine PE, provenance."""

    x: float
    y: float
    pe: float
    source: str
    t: float | None = None


@dataclass(frozen=True)
class SurfaceGrid:
    """Regular grid of surface samples (pe indexed [ix, iy])."""

    x_axis: np.ndarray
    y_axis: np.ndarray
    pe: np.ndarray
    focus_machine: int
    axis_machines: tuple[int, int]

    def __post_init__(self):
        for name in ("x_axis", "y_axis", "pe"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def samples(self) -> list[SurfaceSample]:
        return [
            SurfaceSample(float(x), float(y), float(self.pe[i, j]), "grid")
            for i, x in enumerate(self.x_axis)
            for j, y in enumerate(self.y_axis)
        ]

    def interpolate(self, x: float, y: float) -> float:
        """Bilinear PE value at an in-window point."""
        if not (self.x_axis[0] <= x <= self.x_axis[-1]) or not (
            self.y_axis[0] <= y <= self.y_axis[-1]
        ):
            raise ValueError(f"point ({x}, {y}) outside the sampled window")
        ix = int(np.clip(np.searchsorted(self.x_axis, x) - 1, 0, len(self.x_axis) - 2))
        iy = int(np.clip(np.searchsorted(self.y_axis, y) - 1, 0, len(self.y_axis) - 2))
        fx = (x - self.x_axis[ix]) / (self.x_axis[ix + 1] - self.x_axis[ix])
        fy = (y - self.y_axis[iy]) / (self.y_axis[iy + 1] - self.y_axis[iy])
        p = self.pe
        return float(
            p[ix, iy] * (1 - fx) * (1 - fy)
            + p[ix + 1, iy] * fx * (1 - fy)
            + p[ix, iy + 1] * (1 - fx) * fy
            + p[ix + 1, iy + 1] * fx * fy
        )


def surface_from_trajectories(case: StabilityCase, spec: SurfaceSpec) -> list[SurfaceSample]:
    """Sample the surface along a family of simulated trajectories."""
    if not spec.trajectory_family:
        raise ImeacError("trajectory_family is empty")
    a, b = spec.axis_machines
    sep = solve_postfault_sep(case)
    samples: list[SurfaceSample] = []
    for tid, cfg in enumerate(spec.trajectory_family):
        traj = simulate(case, cfg)
        if traj.diverged:
            warnings.warn(
                f"family member {tid} diverged at t={traj.divergence_time} s; skipped",
                RuntimeWarning,
                stacklevel=2,
            )
            continue
        channels = compute_energy(case, traj, sep)
        source = f"traj-{tid}"
        xs = traj.delta_coi[a]
        ys = traj.delta_coi[b]
        pes = channels.pe[spec.focus_machine]
        samples.extend(
            SurfaceSample(float(x), float(y), float(pe), source, t=float(t))
            for x, y, pe, t in zip(xs, ys, pes, traj.times)
        )
    return samples


def grid_node_angles(
    case: StabilityCase, spec: SurfaceSpec, x: np.ndarray, y: np.ndarray
) -> np.ndarray:
    """COI angle vectors for (x, y) pairs; the third angle is implied."""
    a, b = spec.axis_machines
    (c,) = [i for i in range(case.n) if i not in (a, b)]
    m = case.m_vector()
    nodes = np.empty(np.shape(x) + (case.n,))
    nodes[..., a] = x
    nodes[..., b] = y
    nodes[..., c] = -(m[a] * np.asarray(x) + m[b] * np.asarray(y)) / m[c]
    return nodes


def pe_line_to_nodes(
    case: StabilityCase,
    start_coi: np.ndarray,
    nodes: np.ndarray,
    focus: int,
    segments: int = PATH_SEGMENTS,
) -> np.ndarray:
    """Focus-machine PE at many endpoints by straight-line quadrature.

    Integrates -f_focus^(PF) d delta_focus-SYS from start_coi to each
    node (shape (K, n)); evaluation is chunked so the intermediate
    force arrays stay small.
    """
    start = np.asarray(start_coi, dtype=float)
    nodes = np.asarray(nodes, dtype=float)
    s = np.linspace(0.0, 1.0, segments + 1)
    weights = simpson_weights(segments)
    out = np.empty(nodes.shape[0])
    for base in range(0, nodes.shape[0], GRID_CHUNK):
        chunk = nodes[base : base + GRID_CHUNK]
        # path points: (chunk, segments + 1, n)
        path = start + s[None, :, None] * (chunk[:, None, :] - start)
        forces = coi_forces(case.net_postfault, case.machines, path)[..., focus]
        out[base : base + chunk.shape[0]] = -(forces @ weights) * (
            chunk[:, focus] - start[focus]
        )
    return out


def surface_grid(case: StabilityCase, spec: SurfaceSpec) -> SurfaceGrid:
    """Evaluate the focus machine's PE on a regular (x, y) grid.

    Only defined for 3-machine cases; larger systems have no exact
    two-angle representation, use surface_from_trajectories instead.
    The SEP node evaluates to exactly zero by construction.
    """
    if case.n != 3:
        raise ImeacError(
            f"grid mode needs exactly 3 machines (got {case.n}); "
            "use surface_from_trajectories"
        )
    if spec.focus_machine not in range(case.n):
        raise ImeacError(f"focus machine {spec.focus_machine} out of range")
    sep = solve_postfault_sep(case)
    if not sep.converged:
        raise ImeacError("post-fault SEP did not converge; grid PE has no baseline")
    (x_lo, x_hi), (y_lo, y_hi) = spec.window
    x_axis = np.linspace(x_lo, x_hi, spec.grid_n)
    y_axis = np.linspace(y_lo, y_hi, spec.grid_n)
    gx, gy = np.meshgrid(x_axis, y_axis, indexing="ij")
    nodes = grid_node_angles(case, spec, gx.ravel(), gy.ravel())
    pe = pe_line_to_nodes(case, sep.delta_s, nodes, spec.focus_machine)
    return SurfaceGrid(
        x_axis=x_axis,
        y_axis=y_axis,
        pe=pe.reshape(spec.grid_n, spec.grid_n),
        focus_machine=spec.focus_machine,
        axis_machines=spec.axis_machines,
    )


def write_surface_grid(stream: IO[str], grid: SurfaceGrid) -> None:
    """Contour-tool scanline format: x y pe rows, blank line per scanline."""
    stream.write(
        f"# grid surface: focus machine {grid.focus_machine}, "
        f"axes ({grid.axis_machines[0]}, {grid.axis_machines[1]})\n"
    )
    stream.write("# x_rad\ty_rad\tpe_pu\n")
    for i, x in enumerate(grid.x_axis):
        for j, y in enumerate(grid.y_axis):
            stream.write(f"{x:.10e}\t{y:.10e}\t{grid.pe[i, j]:.10e}\n")
        stream.write("\n")


def write_surface_trajectories(stream: IO[str], samples: Sequence[SurfaceSample]) -> None:
    """Trajectory-ribbon format: traj_id t x y pe rows."""
    stream.write("# traj_id\tt_s\tx_rad\ty_rad\tpe_pu\n")
    for sample in samples:
        t = 0.0 if sample.t is None else sample.t
        stream.write(
            f"{sample.source}\t{t:.6f}\t{sample.x:.10e}\t{sample.y:.10e}\t{sample.pe:.10e}\n"
        )
