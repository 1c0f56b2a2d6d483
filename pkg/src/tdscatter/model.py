"""Physical parameters, grids, initial packets and barrier definitions.

Reduced units are used throughout: hbar = 1 and the particle mass is
absorbed into the diffusion coefficient ``eta``, so the wave equation is

    i dpsi/dt = -eta d^2psi/dx^2 + V(x, t) psi

and a plane wave exp(ikx) carries phase frequency omega(k) = eta k^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, GridTooNarrowError

DELTA = "delta"
SQUARE = "square"


@dataclass(frozen=True)
class PhysParams:
    """Global physical constants of a run.

    ``eta`` (length^2/time) plays the role of hbar/2m; the reduced Planck
    constant is pinned to 1 and kept only for documentation purposes.
    """

    eta: float = 0.2
    hbar_scale: float = field(default=1.0, repr=False)

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.hbar_scale != 1.0:
            raise ValueError("reduced units require hbar_scale == 1")

    def omega(self, k):
        """Dispersion relation omega(k) = eta k^2 of a free plane wave."""
        return self.eta * np.asarray(k) ** 2


@dataclass(frozen=True)
class GaussianPacket:
    """Normalized Gaussian packet with center x0, width sigma0, carrier k0."""

    x0: float
    sigma0: float
    k0: float

    def __post_init__(self):
        if self.sigma0 <= 0:
            raise ValueError(f"sigma0 must be positive, got {self.sigma0}")

    def dispersed_sigma(self, t, pp: PhysParams):
        """Density width sigma(t) of the freely evolving packet.

        Follows from evolving the Gaussian under i psi_t = -eta psi_xx:
        each momentum component picks up exp(-i eta k^2 t), which turns
        sigma0^2 into sigma0^2 (1 + (eta t / sigma0^2)^2).
        """
        return self.sigma0 * np.sqrt(1.0 + (pp.eta * t / self.sigma0**2) ** 2)

    def group_velocity(self, pp: PhysParams) -> float:
        return 2.0 * pp.eta * self.k0


@dataclass(frozen=True)
class BarrierSpec:
    """Delta or square barrier with sinusoidal amplitude modulation.

    The instantaneous amplitude is lambda(t) = lambda0 (1 + alpha sin(omega0 t)).
    For kind="delta" the potential is lambda(t) delta(x) and ``a`` must be 0;
    for kind="square" it is lambda(t) on |x| <= a (lambda0 is the static
    height) and ``a`` must be positive.
    """

    kind: str
    lambda0: float
    a: float = 0.0
    alpha: float = 0.0
    omega0: float = 0.0

    def __post_init__(self):
        if self.kind not in (DELTA, SQUARE):
            raise ValueError(f"barrier kind must be '{DELTA}' or '{SQUARE}', got {self.kind!r}")
        if self.kind == SQUARE and self.a <= 0:
            raise ValueError("square barrier needs half-width a > 0")
        if self.kind == DELTA and self.a != 0.0:
            raise ValueError("delta barrier must have a == 0")

    def beta(self, pp: PhysParams) -> float:
        """Reduced delta strength: the derivative jump is 2 beta psi(0).

        Integrating -eta psi'' + lambda delta(x) psi = E psi across x = 0
        gives psi'(0+) - psi'(0-) = (lambda/eta) psi(0), hence
        beta = lambda0 / (2 eta).
        """
        if self.kind != DELTA:
            raise ValueError("beta is defined for the delta barrier only")
        return self.lambda0 / (2.0 * pp.eta)


def lambda_at(b: BarrierSpec, t):
    """Modulated amplitude lambda(t) = lambda0 (1 + alpha sin(omega0 t))."""
    return b.lambda0 * (1.0 + b.alpha * np.sin(b.omega0 * np.asarray(t)))


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform grid holding a node exactly at x = 0."""

    x: np.ndarray
    dx: float
    i_zero: int

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def x_min(self) -> float:
        return float(self.x[0])

    @property
    def x_max(self) -> float:
        return float(self.x[-1])


def make_grid(x_min: float, x_max: float, n: int) -> SpatialGrid:
    """Build a uniform n-point grid on [x_min, x_max], shifted (< dx/2) so
    that one node is exactly 0."""
    if not (x_min < 0.0 < x_max):
        raise ValueError("grid must bracket x = 0")
    if n < 8:
        raise ValueError("grid needs at least 8 points")
    dx = (x_max - x_min) / (n - 1)
    i_zero = int(round(-x_min / dx))
    x = (np.arange(n) - i_zero) * dx
    return SpatialGrid(x=x, dx=dx, i_zero=i_zero)


def default_grid(p: GaussianPacket, barrier: BarrierSpec, pp: PhysParams,
                 t_final: float, points_per_wavelength: float = 40.0,
                 pad_sigmas: float = 8.0) -> SpatialGrid:
    """Grid sized so nothing reaches the hard walls before ``t_final``.

    The right edge sits beyond the transmitted packet's transit distance
    x0 + 2 eta k0 t_final plus ``pad_sigmas`` dispersed widths; the left
    edge beyond the reflected packet's final position, with the same pad.
    Spacing resolves the carrier with ``points_per_wavelength`` nodes.
    """
    v = abs(p.group_velocity(pp))
    sig = float(p.dispersed_sigma(t_final, pp))
    pad = pad_sigmas * sig + 4.0 * p.sigma0 + barrier.a
    x_right = max(p.x0 + v * t_final, p.x0, barrier.a) + pad
    # reflected packet ends near -(v t_final - |x0|) when it reaches the barrier
    x_left = min(p.x0, -(v * t_final - abs(p.x0)), -barrier.a) - pad
    k_ref = max(abs(p.k0), 1.0)
    dx = 2.0 * np.pi / (points_per_wavelength * k_ref)
    n = int(np.ceil((x_right - x_left) / dx)) + 1
    return make_grid(x_left, x_right, n)


@dataclass(frozen=True)
class WaveField:
    """Complex wave samples on a spatial grid at one instant."""

    grid: SpatialGrid
    t: float
    psi: np.ndarray

    def norm(self) -> float:
        """Discrete L2 norm, trapezoid rule."""
        return float(np.sqrt(np.trapezoid(np.abs(self.psi) ** 2, dx=self.grid.dx)))


def eval_packet(p: GaussianPacket, g: SpatialGrid, boundary_tol: float = 1e-12) -> WaveField:
    """Sample the normalized Gaussian packet on ``g`` at t = 0.

    psi(x) = (2 pi sigma0^2)^(-1/4) exp(-(x-x0)^2 / (4 sigma0^2)) exp(i k0 x)

    Raises GridTooNarrowError when the envelope at either boundary exceeds
    ``boundary_tol``.
    """
    norm = (2.0 * np.pi * p.sigma0**2) ** (-0.25)
    env_edge = norm * np.exp(
        -((np.array([g.x_min, g.x_max]) - p.x0) ** 2) / (4.0 * p.sigma0**2)
    )
    if env_edge.max() > boundary_tol:
        raise GridTooNarrowError(
            f"packet amplitude at grid edge {env_edge.max():.3e} exceeds {boundary_tol:.1e}"
        )
    psi = norm * np.exp(-((g.x - p.x0) ** 2) / (4.0 * p.sigma0**2)) * np.exp(1j * p.k0 * g.x)
    return WaveField(grid=g, t=0.0, psi=psi)


@dataclass(frozen=True)
class KGrid:
    """Positive wavenumber nodes with quadrature weights.

    Composite Gauss-Legendre panels; ``i_q`` marks the node carrying a
    singular eigenstate source, when one exists.
    """

    k: np.ndarray
    w: np.ndarray
    i_q: int | None = None

    @property
    def n(self) -> int:
        return self.k.size

    def integrate(self, values: np.ndarray) -> complex:
        """Quadrature of samples given on the nodes (last axis)."""
        return values @ self.w


def _gl_panels(edges: np.ndarray, nodes_per_panel: int):
    from numpy.polynomial.legendre import leggauss

    xi, wi = leggauss(nodes_per_panel)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    k = (mid[:, None] + half[:, None] * xi[None, :]).ravel()
    w = (half[:, None] * wi[None, :]).ravel()
    return k, w


def kgrid_for_packet(p: GaussianPacket, k_min: float = 1e-3,
                     halfwidth_sigmas: float = 10.0,
                     nodes_per_panel: int = 16) -> KGrid:
    """Truncated k-grid for projecting a packet onto scattering states.

    Support [max(k0 - 10/sigma0, k_min), k0 + 10/sigma0]: the Gaussian
    momentum density leaves < e^-200 outside.  Panel width <= 1/(4 sigma0)
    keeps the integrands' local oscillation well inside Gauss-Legendre
    accuracy.
    """
    k_lo = max(p.k0 - halfwidth_sigmas / p.sigma0, k_min)
    k_hi = p.k0 + halfwidth_sigmas / p.sigma0
    panel = 1.0 / (4.0 * p.sigma0)
    n_panels = int(np.ceil((k_hi - k_lo) / panel))
    edges = np.linspace(k_lo, k_hi, n_panels + 1)
    k, w = _gl_panels(edges, nodes_per_panel)
    return KGrid(k=k, w=w)


def kgrid_with_source(q: float, k_lo: float, k_hi: float, panel_width: float,
                      nodes_per_panel: int = 17) -> KGrid:
    """k-grid whose panels are aligned so that ``q`` is exactly a node.

    Uses an odd Gauss-Legendre count per panel (center node at the panel
    midpoint) and aligns one panel midpoint with q.  Any wavenumber at an
    integer multiple of ``panel_width`` from q also lands on a node.
    """
    if nodes_per_panel % 2 == 0:
        raise ValueError("nodes_per_panel must be odd to pin a node at q")
    if not (k_lo < q < k_hi):
        raise ValueError("q must lie inside (k_lo, k_hi)")
    j = int(np.floor((q - k_lo) / panel_width - 0.5)) + 1
    lo = q - (j + 0.5) * panel_width
    while lo > k_lo:
        j += 1
        lo = q - (j + 0.5) * panel_width
    n_panels = int(np.ceil((k_hi - lo) / panel_width))
    edges = lo + panel_width * np.arange(n_panels + 1)
    k, w = _gl_panels(edges, nodes_per_panel)
    i_q = int(np.argmin(np.abs(k - q)))
    k[i_q] = q  # midpoint node; exact up to roundoff already
    if abs(k[i_q] - q) > 1e-9 * max(1.0, abs(q)):
        raise ValueError("failed to align a quadrature node with q")
    return KGrid(k=k, w=w, i_q=i_q)


# ---------------------------------------------------------------------------
# Flat key=value configuration files
# ---------------------------------------------------------------------------

CONFIG_KEYS = (
    "eta", "x0", "sigma0", "k0",
    "barrier.kind", "barrier.lambda0", "barrier.a", "barrier.alpha", "barrier.omega0",
    "grid.x_min", "grid.x_max", "grid.n",
)


def parse_flat_config(text: str) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment; blanks ignored."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


def model_from_config(cfg: dict) -> tuple[PhysParams, GaussianPacket, BarrierSpec, SpatialGrid | None]:
    """Build model objects from a flat config dict (string values)."""

    def fget(key, default=None):
        if key in cfg:
            try:
                return float(cfg[key])
            except ValueError as exc:
                raise ConfigError(f"key {key}: not a number: {cfg[key]!r}") from exc
        if default is None:
            raise ConfigError(f"missing required key {key}")
        return default

    pp = PhysParams(eta=fget("eta", 0.2))
    packet = GaussianPacket(x0=fget("x0", -3.0), sigma0=fget("sigma0", 0.2), k0=fget("k0", 50.0))
    kind = cfg.get("barrier.kind", DELTA)
    if kind not in (DELTA, SQUARE):
        raise ConfigError(f"key barrier.kind: must be '{DELTA}' or '{SQUARE}', got {kind!r}")
    barrier = BarrierSpec(
        kind=kind,
        lambda0=fget("barrier.lambda0", 6.0),
        a=fget("barrier.a", 0.0),
        alpha=fget("barrier.alpha", 0.0),
        omega0=fget("barrier.omega0", 0.0),
    )
    grid = None
    if "grid.n" in cfg and int(fget("grid.n", 0)) > 0:
        grid = make_grid(fget("grid.x_min"), fget("grid.x_max"), int(fget("grid.n")))
    return pp, packet, barrier, grid
