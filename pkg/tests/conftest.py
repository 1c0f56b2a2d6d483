"""Shared fixtures: the expensive canonical runs are computed once per session."""

import time
from dataclasses import dataclass, field

import numpy as np
import pytest

from tdscatter import model, tdse

OMEGA0 = 7.0 * 2.0 * np.pi / 0.3


@dataclass
class RunBundle:
    packet: model.GaussianPacket
    barrier: model.BarrierSpec
    pp: model.PhysParams
    grid: model.SpatialGrid
    dt: float
    snapshots: list = field(default_factory=list)
    wall_time: float = 0.0


@pytest.fixture(scope="session")
def pp():
    return model.PhysParams(eta=0.2)


@pytest.fixture(scope="session")
def fig2_run(pp):
    """Static delta barrier: lambda = 6, packet (-3, 0.2, 50), to t = 0.3."""
    packet = model.GaussianPacket(x0=-3.0, sigma0=0.2, k0=50.0)
    barrier = model.BarrierSpec(model.DELTA, 6.0)
    grid = model.default_grid(packet, barrier, pp, 0.3, points_per_wavelength=40)
    dt = tdse.default_dt(packet, grid, pp)
    t0 = time.perf_counter()
    snaps = tdse.run(packet, barrier, pp, 0.3, [0.15, 0.3], grid=grid, dt=dt)
    wall = time.perf_counter() - t0
    return RunBundle(packet=packet, barrier=barrier, pp=pp, grid=grid, dt=dt,
                     snapshots=snaps, wall_time=wall)


@pytest.fixture(scope="session")
def fig3_run(pp):
    """Oscillating delta barrier: lambda = 5, alpha = 1, omega0 = 7 (2 pi/0.3)."""
    packet = model.GaussianPacket(x0=-3.0, sigma0=0.2, k0=50.0)
    barrier = model.BarrierSpec(model.DELTA, 5.0, alpha=1.0, omega0=OMEGA0)
    grid = model.default_grid(packet, barrier, pp, 0.3, points_per_wavelength=40)
    dt = tdse.default_dt(packet, grid, pp)
    times = [0.18, 0.21, 0.24, 0.27, 0.3]
    t0 = time.perf_counter()
    snaps = tdse.run(packet, barrier, pp, 0.3, times, grid=grid, dt=dt)
    wall = time.perf_counter() - t0
    return RunBundle(packet=packet, barrier=barrier, pp=pp, grid=grid, dt=dt,
                     snapshots=snaps, wall_time=wall)
