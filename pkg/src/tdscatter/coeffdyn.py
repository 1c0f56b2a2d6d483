"""Exact coefficient dynamics in the static-barrier eigenbasis.

The state is expanded as psi(t) = int dl e^(-i eta l^2 t) sum_s c_l^s(t)
psi_l^s over the frozen (t = 0) eigenstates.  For the modulated barrier
V(x, t) = lambda(t) P(x) the coefficients obey

    dc_k^s/dt = (1/2 pi i) [lambda(t) - lambda(0)]
                * int dl e^(i eta (k^2 - l^2) t)
                  sum_r <psi_k^s|P|psi_l^r> c_l^r(t).

A singular eigenstate initial condition c = delta(k - q) on the "+"
channel is carried analytically: only the smooth remainder b lives on the
quadrature grid, and the delta contributes one extra source term to every
integral.  For the delta barrier <psi_k^s|P|psi_l^r> = conj(D_k) D_l is
direction blind, which forces b_k^+ == b_k^- for all times.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import model
from .eigenbasis import ScatteringState, eval_eigenstate, make_state, _square_match
from .errors import QuadratureError, RegimeWarning, StepSizeError
from .model import BarrierSpec, KGrid, PhysParams
from .perturb1 import time_bracket

TWO_PI_I = 2j * np.pi


@dataclass(frozen=True)
class CoefficientField:
    """Smooth part b[sigma, k] of the coefficients, plus the singular source.

    ``source_q`` is the wavenumber of a unit delta(k - q) component on the
    "+" channel (None for regular initial data, e.g. a projected packet).
    The full coefficient is c_k^s = delta(k - q) delta_{s,+} + b_k^s.
    """

    kgrid: KGrid
    b: np.ndarray  # (2, n_k) complex; row 0 = "+", row 1 = "-"
    source_q: float | None = None

    def __post_init__(self):
        if self.b.shape != (2, self.kgrid.n):
            raise ValueError("b must have shape (2, n_k)")
        if self.source_q is not None and self.kgrid.i_q is None:
            raise ValueError("source requires a k-grid with a node pinned at q")


def eigenstate_initial_field(kgrid: KGrid, q: float) -> CoefficientField:
    """b = 0 with the unit singular source at q (must sit on a grid node)."""
    if kgrid.i_q is None or abs(kgrid.k[kgrid.i_q] - q) > 1e-9 * max(1.0, q):
        raise ValueError("q must coincide with the grid's pinned node")
    return CoefficientField(kgrid=kgrid, b=np.zeros((2, kgrid.n), dtype=complex),
                            source_q=q)


# ---------------------------------------------------------------------------
# Matrix elements of the static spatial profile P(x)
# ---------------------------------------------------------------------------

def _interior_quad(a: float, scale: float, n_nodes: int = 16, refine: int = 1):
    """Gauss-Legendre panels over [-a, a] resolving variation rate ``scale``."""
    n_panels = refine * max(2, int(np.ceil(2.0 * a * max(scale, 1.0 / a) / 3.0)) + 2)
    edges = np.linspace(-a, a, n_panels + 1)
    xi, wi = leggauss(n_nodes)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * xi[None, :]).ravel()
    w = (half[:, None] * wi[None, :]).ravel()
    return x, w


def profile_element(barrier: BarrierSpec, pp: PhysParams,
                    sk: ScatteringState, sl: ScatteringState,
                    refine: int = 1) -> complex:
    """<psi_k^s | P | psi_l^r> for the bare profile P (delta spike or box).

    Delta: the states evaluated at x = 0.  Square: panel quadrature over
    the barrier interior.
    """
    if barrier.kind == model.DELTA:
        return complex(np.conj(eval_eigenstate(sk, 0.0)) * eval_eigenstate(sl, 0.0))
    scale = max(abs(sk.kappa), abs(sl.kappa), sk.k, sl.k)
    x, w = _interior_quad(barrier.a, scale, refine=refine)
    vals = np.conj(eval_eigenstate(sk, x)) * eval_eigenstate(sl, x)
    return complex(np.sum(w * vals))


def matrix_element(barrier: BarrierSpec, t: float, sk: ScatteringState,
                   sl: ScatteringState, pp: PhysParams,
                   check_convergence: bool = False) -> complex:
    """<psi_k^s | V(., t) - V(., 0) | psi_l^r> = [lambda(t) - lambda0] * profile element."""
    dlam = float(model.lambda_at(barrier, t)) - barrier.lambda0
    base = profile_element(barrier, pp, sk, sl)
    if check_convergence and barrier.kind == model.SQUARE:
        fine = profile_element(barrier, pp, sk, sl, refine=2)
        scale = max(abs(fine), 1e-300)
        if abs(fine - base) / scale > 1e-9:
            raise QuadratureError(
                f"matrix element changed by {abs(fine - base) / scale:.2e} under refinement"
            )
        base = fine
    return dlam * base


@dataclass(frozen=True)
class MatrixElementTable:
    """Profile matrix elements on a k-grid; the modulation factors in later.

    ``profile[s, r]`` holds <psi_k^s | P | psi_l^r> with k the row index;
    the full matrix element at time t is [lambda(t) - lambda0] * profile.
    ``flat`` is the same data as one (2n, 2n) matrix over the stacked
    (sigma, k) index, kept for fast rhs evaluation.
    """

    kgrid: KGrid
    barrier: BarrierSpec
    profile: np.ndarray  # (2, 2, n_k, n_k) complex
    flat: np.ndarray = None

    def __post_init__(self):
        if self.flat is None:
            n = self.kgrid.n
            object.__setattr__(
                self, "flat",
                np.ascontiguousarray(self.profile.transpose(0, 2, 1, 3).reshape(2 * n, 2 * n)),
            )

    def at(self, t: float) -> np.ndarray:
        return (float(model.lambda_at(self.barrier, t)) - self.barrier.lambda0) * self.profile


def build_matrix_table(barrier: BarrierSpec, pp: PhysParams, kgrid: KGrid) -> MatrixElementTable:
    """Tabulate profile elements for every (k sigma, l tau) pair on the grid."""
    n = kgrid.n
    if barrier.kind == model.DELTA:
        vals0 = np.empty((2, n), dtype=complex)
        for row, sigma in enumerate(("+", "-")):
            for i, k in enumerate(kgrid.k):
                vals0[row, i] = eval_eigenstate(make_state(barrier, pp, k, sigma), 0.0)
        profile = np.einsum("sk,rl->srkl", np.conj(vals0), vals0)
        return MatrixElementTable(kgrid=kgrid, barrier=barrier, profile=profile)
    # square barrier: evaluate interior solutions on shared quadrature nodes
    kap_max = float(np.max(np.abs(np.sqrt(kgrid.k.astype(complex) ** 2
                                          - barrier.lambda0 / pp.eta))))
    x, w = _interior_quad(barrier.a, max(kap_max, kgrid.k.max()))
    vals = np.empty((2, n, x.size), dtype=complex)
    for row, sigma in enumerate(("+", "-")):
        A, F, G, D, kappa, _ = _square_match(kgrid.k, barrier.lambda0, barrier.a,
                                             pp.eta, sigma)
        sgn = 1.0 if sigma == "+" else -1.0
        vals[row] = (F[:, None] * np.exp(1j * sgn * kappa[:, None] * (x[None, :] + sgn * barrier.a))
                     + G[:, None] * np.exp(-1j * sgn * kappa[:, None] * (x[None, :] - sgn * barrier.a)))
    profile = np.einsum("skx,x,rlx->srkl", np.conj(vals), w, vals, optimize=True)
    return MatrixElementTable(kgrid=kgrid, barrier=barrier, profile=profile)


# ---------------------------------------------------------------------------
# Right-hand sides
# ---------------------------------------------------------------------------

def rhs_delta(field: CoefficientField, t: float, barrier: BarrierSpec,
              pp: PhysParams) -> np.ndarray:
    """db/dt for the delta barrier via the factorized coupling conj(D_k) D_l.

    Identical for both direction channels by construction.
    """
    if barrier.kind != model.DELTA:
        raise ValueError("rhs_delta requires a delta barrier")
    kg = field.kgrid
    beta = barrier.beta(pp)
    from .eigenbasis import delta_amplitudes
    _, d = delta_amplitudes(kg.k, beta)
    dlam = float(model.lambda_at(barrier, t)) - barrier.lambda0
    phase = np.exp(-1j * pp.eta * kg.k**2 * t)
    acc = np.sum(kg.w * d * phase * (field.b[0] + field.b[1]))
    if field.source_q is not None:
        iq = kg.i_q
        acc = acc + d[iq] * phase[iq]
    row = (dlam / TWO_PI_I) * np.conj(d) * np.conj(phase) * acc
    return np.stack([row, row.copy()])


def rhs_general(field: CoefficientField, t: float, table: MatrixElementTable,
                pp: PhysParams) -> np.ndarray:
    """db/dt from tabulated matrix elements (any barrier profile)."""
    kg = field.kgrid
    if table.kgrid is not field.kgrid and not np.array_equal(table.kgrid.k, kg.k):
        raise ValueError("matrix table was built on a different k-grid")
    dlam = float(model.lambda_at(table.barrier, t)) - table.barrier.lambda0
    phase = np.exp(-1j * pp.eta * kg.k**2 * t)
    v = (kg.w * phase * field.b).ravel()  # stacked (sigma, k)
    acc = table.flat @ v
    if field.source_q is not None:
        acc = acc + table.flat[:, kg.i_q] * phase[kg.i_q]
    return (dlam / TWO_PI_I) * np.conj(phase)[None, :] * acc.reshape(2, kg.n)


def phase_rate_bound(kgrid: KGrid, barrier: BarrierSpec, pp: PhysParams) -> float:
    """Fastest phase appearing in the rhs: max(omega0, eta (k_max^2 - k_min^2))."""
    return float(max(barrier.omega0, pp.eta * (kgrid.k.max() ** 2 - kgrid.k.min() ** 2)))


@dataclass(frozen=True)
class Trajectory:
    """Coefficient field sampled along an integration run."""

    times: np.ndarray
    b: np.ndarray  # (n_times, 2, n_k)
    kgrid: KGrid
    source_q: float | None


def integrate(rhs, field0: CoefficientField, t_samples, dt: float,
              max_phase_rate: float | None = None) -> Trajectory:
    """Classical fixed-step RK4 for db/dt = rhs(field, t), sampled at ``t_samples``.

    ``dt`` is an upper bound on the step; each sampling interval is split
    uniformly.  When ``max_phase_rate`` is supplied, dt must resolve it
    (dt <= 0.1 / rate), otherwise a StepSizeError is raised.
    """
    if max_phase_rate is not None and dt > 0.1 / max_phase_rate:
        raise StepSizeError(
            f"dt = {dt:.3e} exceeds 0.1 / (phase rate {max_phase_rate:.3e})"
        )
    t_samples = [float(t) for t in t_samples]
    if any(t2 <= t1 for t1, t2 in zip(t_samples, t_samples[1:])):
        raise ValueError("t_samples must be strictly increasing")
    kg, q = field0.kgrid, field0.source_q

    def f(b, t):
        return rhs(CoefficientField(kgrid=kg, b=b, source_q=q), t)

    b = field0.b.astype(complex).copy()
    t_prev = 0.0
    out = []
    for t_target in t_samples:
        if t_target < 1e-15:
            out.append(b.copy())
            continue
        n_sub = max(1, int(np.ceil((t_target - t_prev) / dt - 1e-12)))
        h = (t_target - t_prev) / n_sub
        for i in range(n_sub):
            t = t_prev + i * h
            k1 = f(b, t)
            k2 = f(b + 0.5 * h * k1, t + 0.5 * h)
            k3 = f(b + 0.5 * h * k2, t + 0.5 * h)
            k4 = f(b + h * k3, t + h)
            b = b + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out.append(b.copy())
        t_prev = t_target
    return Trajectory(times=np.asarray(t_samples), b=np.asarray(out), kgrid=kg, source_q=q)


def sigma_symmetry_defect(traj: Trajectory) -> float:
    """max over times and k != q of |b_k^-(t) - b_k^+(t)|."""
    diff = np.abs(traj.b[:, 1, :] - traj.b[:, 0, :])
    if traj.source_q is not None:
        diff = np.delete(diff, traj.kgrid.i_q, axis=1)
    return float(diff.max())


def probability_defect(traj: Trajectory) -> float:
    """Drift of the conserved norm combination along the trajectory.

    With the delta source of unit strength the conserved quantity is
    2 Re b_q^+(t) + sum_s int dk |b_k^s|^2 (the delta's own square is a
    constant and drops out); without a source it is the plain weighted
    square sum.
    """
    w = traj.kgrid.w
    quad = np.einsum("tsk,k->t", np.abs(traj.b) ** 2, w)
    if traj.source_q is not None:
        quad = quad + 2.0 * np.real(traj.b[:, 0, traj.kgrid.i_q])
    return float(np.abs(quad - quad[0]).max())


# ---------------------------------------------------------------------------
# Short-time and width-scaling analyses
# ---------------------------------------------------------------------------

def short_time_c_minus(k: float, q: float, t: float, barrier: BarrierSpec,
                       pp: PhysParams) -> complex:
    """Quadratic-onset estimate of the "-" coefficient from the eigenstate source:

        c_k^-(t) ~ (1/(4 pi i)) <psi_k^- | dV/dt(., 0) | psi_q^+> t^2

    with dV/dt(x, 0) = lambda0 alpha omega0 P(x).  Warns outside the regime
    |E_k - E_q| t << 1, omega0 t << 1.
    """
    if abs(pp.eta * (k**2 - q**2)) * t > 0.3 or barrier.omega0 * t > 0.3:
        warnings.warn("quadratic short-time estimate outside its validity regime",
                      RegimeWarning, stacklevel=2)
    sk = make_state(barrier, pp, k, "-")
    sq = make_state(barrier, pp, q, "+")
    elem = profile_element(barrier, pp, sk, sq)
    rate0 = barrier.lambda0 * barrier.alpha * barrier.omega0
    return complex(rate0 * elem * t**2 / (4j * np.pi))


def first_order_coeff(k: float, sigma: str, q: float, t: float,
                      barrier: BarrierSpec, pp: PhysParams) -> complex:
    """Exact first-order coefficient for the eigenstate source (k != q).

    c_k^s(t) = (1/(2 pi i)) <psi_k^s|P|psi_q^+> * integral_0^t
               [lambda(t') - lambda0] e^(i eta (k^2-q^2) t') dt'
    evaluated in closed form.  The time factor is shared by both direction
    channels, so their magnitude ratio is time independent at this order.
    """
    sk = make_state(barrier, pp, k, sigma)
    sq = make_state(barrier, pp, q, "+")
    elem = profile_element(barrier, pp, sk, sq)
    delta = pp.eta * (k**2 - q**2)
    w0 = barrier.omega0
    tfac = (-0.5) * barrier.lambda0 * barrier.alpha * (
        time_bracket(delta + w0, t) - time_bracket(delta - w0, t))
    return complex(elem * tfac / TWO_PI_I)


def ratio_estimate(gamma_k: float, gamma_q: float, a: float) -> float:
    """Width-decay shape of |c_k^- / c_k^+| for an opaque symmetric barrier:

        2 sinh((gamma_k - gamma_q) a) / ((gamma_k - gamma_q)(gamma_k + gamma_q))
        * exp(-(gamma_k + gamma_q) a)

    valid as a proportional shape for gamma a >> 1; the gamma_k -> gamma_q
    limit is removable and evaluates to (2a/(gamma_k+gamma_q)) exp(-2 gamma_q a).
    """
    gs = gamma_k + gamma_q
    x = (gamma_k - gamma_q) * a
    sinhc = np.where(np.abs(x) < 1e-8, 1.0 + x * x / 6.0, np.sinh(x) / np.where(x == 0, 1.0, x))
    return float(2.0 * a * sinhc / gs * np.exp(-gs * a))
