"""Scattering eigenstates of the static barrier Hamiltonian.

States are labeled by wavenumber k > 0 and incidence direction
sigma = "+" (incoming from the left) or "-" (incoming from the right).
With reflection amplitude A and transmission amplitude D they read

    psi_k^+(x) = exp(ikx) + A exp(-ikx)   (x < -a),   D exp(ikx)   (x > a)
    psi_k^-(x) = exp(-ikx) + A exp(ikx)   (x > a),    D exp(-ikx)  (x < -a)

normalized so that <psi_k^s | psi_l^t> = 2 pi delta(k-l) delta_st.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx

from . import model
from .errors import IllConditionedMatchError, SupportOverlapError
from .model import BarrierSpec, GaussianPacket, KGrid, PhysParams, WaveField

_SQRT_PI = np.sqrt(np.pi)


def delta_amplitudes(k, beta):
    """Reflection and transmission amplitudes of the static delta barrier.

    A = beta / (-beta + ik),  D = ik / (-beta + ik); the denominator never
    vanishes for k > 0.
    """
    k = np.asarray(k, dtype=float)
    den = -beta + 1j * k
    return beta / den, 1j * k / den


def transmission(k, beta):
    """Plane-wave transmission T = k^2 / (beta^2 + k^2) = |D|^2."""
    k = np.asarray(k, dtype=float)
    return k**2 / (beta**2 + k**2)


def decay_rate(k, V0: float, eta: float):
    """Evanescent rate gamma_k = sqrt(V0/eta - k^2) inside a square barrier.

    Defined for sub-barrier energies eta k^2 < V0 only.
    """
    k = np.asarray(k, dtype=float)
    arg = V0 / eta - k**2
    if np.any(arg <= 0):
        raise ValueError("decay rate defined only for eta k^2 < V0")
    return np.sqrt(arg)


@dataclass(frozen=True)
class ScatteringState:
    """One eigenstate: amplitudes plus enough geometry to evaluate it.

    For a square barrier the interior solution is stored in the scaled
    basis u1 = exp(i kappa (x + a)), u2 = exp(-i kappa (x - a)) for
    sigma = "+" (mirrored for sigma = "-"), which keeps both basis
    functions bounded by 1 in the sub-barrier regime.
    """

    k: float
    sigma: str
    A: complex
    D: complex
    kind: str
    a: float = 0.0
    kappa: complex = 0.0
    f: complex = 0.0
    g: complex = 0.0
    cond: float = 1.0


def _square_match(k, V0: float, a: float, eta: float, sigma: str):
    """Solve the four matching conditions at x = +-a for square-barrier states.

    Returns (A, D, F, G, kappa, cond) with array support over k.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    kappa = np.sqrt(k.astype(complex) ** 2 - V0 / eta)
    e2 = np.exp(2j * kappa * a)
    eka = np.exp(1j * k * a)
    emka = np.exp(-1j * k * a)
    n = k.size
    m = np.zeros((n, 4, 4), dtype=complex)
    rhs = np.zeros((n, 4), dtype=complex)
    ik = 1j * k
    ikap = 1j * kappa
    if sigma == "+":
        # unknowns [A, F, G, D]; interior psi = F u1 + G u2
        m[:, 0, 0] = eka;        m[:, 0, 1] = -1.0;      m[:, 0, 2] = -e2
        m[:, 1, 0] = -ik * eka;  m[:, 1, 1] = -ikap;     m[:, 1, 2] = ikap * e2
        m[:, 2, 1] = e2;         m[:, 2, 2] = 1.0;       m[:, 2, 3] = -eka
        m[:, 3, 1] = ikap * e2;  m[:, 3, 2] = -ikap;     m[:, 3, 3] = -ik * eka
        rhs[:, 0] = -emka
        rhs[:, 1] = -ik * emka
    elif sigma == "-":
        # mirror basis: u1 = exp(-i kappa (x - a)), u2 = exp(i kappa (x + a))
        m[:, 0, 0] = eka;        m[:, 0, 1] = -1.0;      m[:, 0, 2] = -e2
        m[:, 1, 0] = ik * eka;   m[:, 1, 1] = ikap;      m[:, 1, 2] = -ikap * e2
        m[:, 2, 1] = e2;         m[:, 2, 2] = 1.0;       m[:, 2, 3] = -eka
        m[:, 3, 1] = -ikap * e2; m[:, 3, 2] = ikap;      m[:, 3, 3] = ik * eka
        rhs[:, 0] = -emka
        rhs[:, 1] = ik * emka
    else:
        raise ValueError(f"sigma must be '+' or '-', got {sigma!r}")
    cond = np.linalg.cond(m)
    bad = cond > 1e12
    if np.any(bad):
        raise IllConditionedMatchError(
            f"square-barrier matching condition estimate {cond[bad].max():.3e} "
            f"at k={k[bad][0]:.6g} (gamma*a too extreme)"
        )
    sol = np.linalg.solve(m, rhs[:, :, None])[:, :, 0]
    A, F, G, D = sol[:, 0], sol[:, 1], sol[:, 2], sol[:, 3]
    return A, F, G, D, kappa, cond


def square_amplitudes(k: float, V0: float, a: float, eta: float,
                      sigma: str = "+") -> ScatteringState:
    """Scattering state of the static square barrier of height V0 on |x| <= a."""
    if not (k > 0 and V0 >= 0 and a > 0):
        raise ValueError("need k > 0, V0 >= 0, a > 0")
    A, F, G, D, kappa, cond = _square_match(k, V0, a, eta, sigma)
    return ScatteringState(k=float(k), sigma=sigma, A=complex(A[0]), D=complex(D[0]),
                           kind=model.SQUARE, a=a, kappa=complex(kappa[0]),
                           f=complex(F[0]), g=complex(G[0]), cond=float(cond[0]))


def make_state(barrier: BarrierSpec, pp: PhysParams, k: float, sigma: str) -> ScatteringState:
    """Eigenstate of the frozen (t = 0) barrier Hamiltonian."""
    if sigma not in ("+", "-"):
        raise ValueError(f"sigma must be '+' or '-', got {sigma!r}")
    if barrier.kind == model.DELTA:
        A, D = delta_amplitudes(float(k), barrier.beta(pp))
        return ScatteringState(k=float(k), sigma=sigma, A=complex(A), D=complex(D),
                               kind=model.DELTA)
    return square_amplitudes(float(k), barrier.lambda0, barrier.a, pp.eta, sigma)


def eval_eigenstate(s: ScatteringState, x) -> np.ndarray:
    """Evaluate the eigenstate on positions ``x``."""
    x = np.asarray(x, dtype=float)
    k = s.k
    if s.kind == model.DELTA:
        if s.sigma == "+":
            return np.where(x < 0.0,
                            np.exp(1j * k * x) + s.A * np.exp(-1j * k * x),
                            s.D * np.exp(1j * k * x))
        return np.where(x > 0.0,
                        np.exp(-1j * k * x) + s.A * np.exp(1j * k * x),
                        s.D * np.exp(-1j * k * x))
    a, kap = s.a, s.kappa
    if s.sigma == "+":
        out = np.asarray(s.D * np.exp(1j * k * x), dtype=complex)
        out = np.where(x < -a, np.exp(1j * k * x) + s.A * np.exp(-1j * k * x), out)
        inside = np.abs(x) <= a
        out = np.where(inside,
                       s.f * np.exp(1j * kap * (x + a)) + s.g * np.exp(-1j * kap * (x - a)),
                       out)
        return out
    out = np.asarray(s.D * np.exp(-1j * k * x), dtype=complex)
    out = np.where(x > a, np.exp(-1j * k * x) + s.A * np.exp(1j * k * x), out)
    inside = np.abs(x) <= a
    out = np.where(inside,
                   s.f * np.exp(-1j * kap * (x - a)) + s.g * np.exp(1j * kap * (x + a)),
                   out)
    return out


# ---------------------------------------------------------------------------
# Gaussian packet projections (closed form)
# ---------------------------------------------------------------------------

def _half_products(p: GaussianPacket, X: float, mu):
    """Stable products e^(-mu^2 s0^2) [1 -+ erf(u - i mu s0)], u = (X-x0)/(2 s0).

    The minus branch equals exp(-u^2 + 2 i u mu s0) erfcx(u - i mu s0),
    which stays finite where the bare erf overflows; the plus branch is
    2 exp(-mu^2 s0^2) minus that.
    """
    s0 = p.sigma0
    mu = np.asarray(mu, dtype=float)
    u = (X - p.x0) / (2.0 * s0)
    w = u - 1j * mu * s0
    p_minus = np.exp(-u * u + 2j * u * mu * s0) * erfcx(w)
    p_plus = 2.0 * np.exp(-(mu * s0) ** 2) - p_minus
    return p_plus, p_minus


def _int_left(p: GaussianPacket, X: float, mu):
    """integral_{-inf}^{X} exp(i mu x) exp(-(x-x0)^2/(4 s0^2)) dx."""
    p_plus, _ = _half_products(p, X, mu)
    return p.sigma0 * _SQRT_PI * np.exp(1j * np.asarray(mu) * p.x0) * p_plus


def _int_right(p: GaussianPacket, X: float, mu):
    """integral_{X}^{inf} exp(i mu x) exp(-(x-x0)^2/(4 s0^2)) dx."""
    _, p_minus = _half_products(p, X, mu)
    return p.sigma0 * _SQRT_PI * np.exp(1j * np.asarray(mu) * p.x0) * p_minus


def packet_weight_inside(p: GaussianPacket, a: float) -> float:
    """Probability mass of the packet inside [-a, a]."""
    from scipy.special import erf as _erf
    s = np.sqrt(2.0) * p.sigma0
    return float(0.5 * (_erf((a - p.x0) / s) - _erf((-a - p.x0) / s)))


def project_packet(p: GaussianPacket, s: ScatteringState, overlap_tol: float = 1e-8):
    """Expansion coefficient c_k^sigma(0) = <psi_k^sigma | packet> / (2 pi).

    Closed form built from half-line Gaussian integrals (complex erf).  For
    a square barrier the interior overlap is dropped, which is legitimate
    only while the packet carries negligible weight inside |x| <= a.
    """
    if s.kind == model.SQUARE:
        inside = packet_weight_inside(p, s.a)
        if inside > overlap_tol:
            raise SupportOverlapError(
                f"packet weight {inside:.3e} inside barrier exceeds {overlap_tol:.1e}"
            )
    a = s.a
    k0, k = p.k0, s.k
    norm = (2.0 * np.pi * p.sigma0**2) ** (-0.25)
    Ac, Dc = np.conj(s.A), np.conj(s.D)
    if s.sigma == "+":
        val = (_int_left(p, -a, k0 - k)
               + Ac * _int_left(p, -a, k0 + k)
               + Dc * _int_right(p, a, k0 - k))
    else:
        val = (_int_right(p, a, k0 + k)
               + Ac * _int_right(p, a, k0 - k)
               + Dc * _int_left(p, -a, k0 + k))
    return norm * val / (2.0 * np.pi)


def project_packet_grid(p: GaussianPacket, kgrid: KGrid, barrier: BarrierSpec,
                        pp: PhysParams) -> np.ndarray:
    """Initial coefficients on a k-grid, shape (2, n_k); row 0 is sigma '+'."""
    out = np.empty((2, kgrid.n), dtype=complex)
    for row, sigma in enumerate(("+", "-")):
        for i, k in enumerate(kgrid.k):
            out[row, i] = project_packet(p, make_state(barrier, pp, k, sigma))
    return out


# ---------------------------------------------------------------------------
# Field <-> coefficient transforms on a k-grid
# ---------------------------------------------------------------------------

def _states_on_axis(kgrid: KGrid, barrier: BarrierSpec, pp: PhysParams,
                    sigma: str, x: np.ndarray, chunk: int = 256):
    """Yield (slice, values) blocks of psi_k^sigma(x), shape (n_chunk, n_x)."""
    for start in range(0, kgrid.n, chunk):
        ks = kgrid.k[start:start + chunk]
        vals = np.empty((ks.size, x.size), dtype=complex)
        for j, k in enumerate(ks):
            vals[j] = eval_eigenstate(make_state(barrier, pp, k, sigma), x)
        yield slice(start, start + ks.size), vals


def reconstruct_field(kgrid: KGrid, coeffs: np.ndarray, barrier: BarrierSpec,
                      pp: PhysParams, x: np.ndarray, t: float = 0.0) -> np.ndarray:
    """Superpose psi(x) = sum_sigma int dk e^(-i eta k^2 t) c_k^sigma psi_k^sigma(x)."""
    x = np.asarray(x, dtype=float)
    phase = np.exp(-1j * pp.eta * kgrid.k**2 * t)
    psi = np.zeros(x.size, dtype=complex)
    for row, sigma in enumerate(("+", "-")):
        weighted = kgrid.w * phase * coeffs[row]
        for sl, vals in _states_on_axis(kgrid, barrier, pp, sigma, x):
            psi += weighted[sl] @ vals
    return psi


def project_field(w: WaveField, kgrid: KGrid, barrier: BarrierSpec,
                  pp: PhysParams) -> np.ndarray:
    """Coefficients c_k^sigma(t) = e^(i eta k^2 t) <psi_k^sigma | psi(t)> / (2 pi).

    The spatial integral runs over the field's grid (trapezoid); hard-wall
    runs keep the boundary amplitude negligible, so this matches the
    full-line inner product.
    """
    x = w.grid.x
    wts = np.full(x.size, w.grid.dx)
    wts[0] *= 0.5
    wts[-1] *= 0.5
    target = wts * w.psi
    out = np.empty((2, kgrid.n), dtype=complex)
    for row, sigma in enumerate(("+", "-")):
        for sl, vals in _states_on_axis(kgrid, barrier, pp, sigma, x):
            out[row, sl] = np.conj(vals) @ target
    out *= np.exp(1j * pp.eta * kgrid.k**2 * w.t)[None, :] / (2.0 * np.pi)
    return out


def export_amplitudes_csv(path, k_values, barrier: BarrierSpec, pp: PhysParams) -> None:
    """Write columns k, reA, imA, reD, imD, T for the given wavenumbers."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "reA", "imA", "reD", "imD", "T"])
        for k in np.asarray(k_values, dtype=float):
            s = make_state(barrier, pp, k, "+")
            T = abs(s.D) ** 2
            writer.writerow(["%.17g" % v for v in
                             (k, s.A.real, s.A.imag, s.D.real, s.D.imag, T)])
