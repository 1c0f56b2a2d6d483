"""Command-line surface: scenarios, presets, config handling, CSV emission.

Scenarios
---------
evolve        propagate a packet, dump field snapshots and a run summary
static-check  static-barrier transmission vs the plane-wave formula
coeffs        eigenbasis coefficient dynamics from an eigenstate source
shorttime     quadratic-onset scan of the "-" channel at small times
widthsweep    opacity scaling of |c^-/c^+| vs square-barrier half-width
perturb       first-order coefficients of a packet under modulation
compare       first-order reconstruction vs the difference of two runs

Every run writes a ``manifest.txt`` listing the resolved configuration
(flat ``key = value`` lines, re-parsable) and the produced files.  Output
CSVs use 17 significant digits so repeated runs are byte identical.
"""

from __future__ import annotations

import argparse
import csv
import functools
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import coeffdyn, eigenbasis, model, perturb1, tdse
from .errors import ConfigError, NumericalConvergenceError, PhysicsPreconditionError

SCENARIOS = ("evolve", "static-check", "coeffs", "shorttime", "widthsweep",
             "perturb", "compare")

OMEGA0_DEFAULT = 7.0 * 2.0 * np.pi / 0.3


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run parameters (one field per flat config key)."""

    scenario: str = "evolve"
    eta: float = 0.2
    x0: float = -3.0
    sigma0: float = 0.2
    k0: float = 50.0
    barrier_kind: str = model.DELTA
    barrier_lambda0: float = 6.0
    barrier_a: float = 0.0
    barrier_alpha: float = 0.0
    barrier_omega0: float = OMEGA0_DEFAULT
    grid_x_min: float = 0.0     # used only when grid_n > 0
    grid_x_max: float = 0.0
    grid_n: int = 0             # 0: size the grid automatically
    t_final: float = 0.3
    snapshots: tuple = (0.15, 0.3)
    ppw: float = 40.0
    x_cut: float = 0.5
    k_lo: float = 25.0
    k_hi: float = 72.0
    panel_width: float = 1.0
    panel_nodes: int = 13
    q: float = 50.0
    n_times: int = 9
    t_lo: float = 1e-5
    t_hi: float = 1e-3
    k_read: float = 51.0
    sweep_v0: float = 6.8
    sweep_k: float = 3.0
    sweep_q: float = 4.2426406871192848
    a_min: float = 0.75
    a_max: float = 1.2
    n_a: int = 7
    compare_t: float = 0.2


# flat config key -> RunConfig field
KEY_MAP = {
    "scenario": "scenario",
    "eta": "eta", "x0": "x0", "sigma0": "sigma0", "k0": "k0",
    "barrier.kind": "barrier_kind", "barrier.lambda0": "barrier_lambda0",
    "barrier.a": "barrier_a", "barrier.alpha": "barrier_alpha",
    "barrier.omega0": "barrier_omega0",
    "grid.x_min": "grid_x_min", "grid.x_max": "grid_x_max", "grid.n": "grid_n",
    "run.t_final": "t_final", "run.snapshots": "snapshots", "run.ppw": "ppw",
    "run.x_cut": "x_cut",
    "kgrid.k_lo": "k_lo", "kgrid.k_hi": "k_hi",
    "kgrid.panel_width": "panel_width", "kgrid.nodes": "panel_nodes",
    "coeffs.q": "q", "coeffs.n_times": "n_times",
    "shorttime.t_lo": "t_lo", "shorttime.t_hi": "t_hi", "shorttime.k_read": "k_read",
    "sweep.v0": "sweep_v0", "sweep.k": "sweep_k", "sweep.q": "sweep_q",
    "sweep.a_min": "a_min", "sweep.a_max": "a_max", "sweep.n_a": "n_a",
    "compare.t": "compare_t",
}
FIELD_TO_KEY = {v: k for k, v in KEY_MAP.items()}

PRESETS = {
    # static delta run: lambda = 6, packet x0 = -3, sigma0 = 0.2, k0 = 50
    "fig2": {"scenario": "static-check", "barrier.kind": model.DELTA,
             "barrier.lambda0": "6", "barrier.alpha": "0", "eta": "0.2",
             "x0": "-3", "sigma0": "0.2", "k0": "50"},
    # oscillating delta: lambda = 5, alpha = 1, omega0 = 7*(2 pi/0.3)
    "fig3": {"scenario": "evolve", "barrier.kind": model.DELTA,
             "barrier.lambda0": "5", "barrier.alpha": "1",
             "barrier.omega0": "%.17g" % OMEGA0_DEFAULT, "eta": "0.2",
             "x0": "-3", "sigma0": "0.2", "k0": "50",
             "run.snapshots": "0.15,0.21,0.3"},
    # weak modulation for the perturbative comparison: lambda = 3, alpha = 0.1
    "fig4": {"scenario": "compare", "barrier.kind": model.DELTA,
             "barrier.lambda0": "3", "barrier.alpha": "0.1",
             "barrier.omega0": "%.17g" % OMEGA0_DEFAULT, "eta": "0.2",
             "x0": "-3", "sigma0": "0.2", "k0": "50", "run.ppw": "80"},
}


def _parse_value(field_name: str, raw: str):
    try:
        if field_name in ("scenario", "barrier_kind"):
            return raw
        if field_name in ("grid_n", "panel_nodes", "n_times", "n_a"):
            return int(float(raw))
        if field_name == "snapshots":
            return tuple(float(v) for v in raw.split(",") if v.strip() != "")
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"key {FIELD_TO_KEY[field_name]}: bad value {raw!r}") from exc


def config_from_items(items: dict) -> RunConfig:
    """Resolve flat string key/value pairs into a RunConfig."""
    cfg = RunConfig()
    for key, raw in items.items():
        if key not in KEY_MAP:
            raise ConfigError(f"unknown config key {key!r}")
        cfg = replace(cfg, **{KEY_MAP[key]: _parse_value(KEY_MAP[key], raw)})
    if cfg.scenario not in SCENARIOS:
        raise ConfigError(f"key scenario: must be one of {', '.join(SCENARIOS)}; "
                          f"got {cfg.scenario!r}")
    if cfg.barrier_kind not in (model.DELTA, model.SQUARE):
        raise ConfigError(f"key barrier.kind: must be '{model.DELTA}' or "
                          f"'{model.SQUARE}', got {cfg.barrier_kind!r}")
    return cfg


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, tuple):
        return ",".join("%.17g" % v for v in value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % value


def config_lines(cfg: RunConfig) -> list[str]:
    """The resolved configuration as re-parsable ``key = value`` lines."""
    out = []
    for f in fields(RunConfig):
        out.append(f"{FIELD_TO_KEY[f.name]} = {_fmt(getattr(cfg, f.name))}")
    return out


def _model_objects(cfg: RunConfig):
    pp = model.PhysParams(eta=cfg.eta)
    packet = model.GaussianPacket(x0=cfg.x0, sigma0=cfg.sigma0, k0=cfg.k0)
    barrier = model.BarrierSpec(kind=cfg.barrier_kind, lambda0=cfg.barrier_lambda0,
                                a=cfg.barrier_a, alpha=cfg.barrier_alpha,
                                omega0=cfg.barrier_omega0)
    return pp, packet, barrier


def _grid_for(cfg: RunConfig, packet, barrier, pp, t_final):
    if cfg.grid_n > 0:
        return model.make_grid(cfg.grid_x_min, cfg.grid_x_max, cfg.grid_n)
    return model.default_grid(packet, barrier, pp, t_final,
                              points_per_wavelength=cfg.ppw)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(["%.17g" % v if not isinstance(v, str) else v for v in row])


def _snapshot_name(t: float) -> str:
    return f"snap_t{'%g' % t}.csv"


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------

def _scenario_evolve(cfg: RunConfig, out: Path, report) -> list[str]:
    pp, packet, barrier = _model_objects(cfg)
    if cfg.snapshots and max(cfg.snapshots) > cfg.t_final + 1e-12:
        raise ConfigError("key run.snapshots: snapshot beyond run.t_final")
    grid = _grid_for(cfg, packet, barrier, pp, cfg.t_final)
    snaps = tdse.run(packet, barrier, pp, cfg.t_final, cfg.snapshots, grid=grid,
                     points_per_wavelength=cfg.ppw)
    files = []
    summary = []
    for w in snaps:
        obs = tdse.observables(w, pp, x_cut=cfg.x_cut)
        name = _snapshot_name(w.t)
        _write_csv(out / name, ["x", "re_psi", "im_psi", "density", "current"],
                   zip(w.grid.x, w.psi.real, w.psi.imag, obs.density, obs.current))
        files.append(name)
        summary.append((w.t, w.norm(), obs.p_right, obs.left_weight))
        report(f"t={w.t:g}: norm={w.norm():.12f} P_right={obs.p_right:.6f} "
               f"left_mover_weight={obs.left_weight:.3e}")
    _write_csv(out / "summary.csv", ["t", "norm", "P_right", "left_mover_weight"], summary)
    files.append("summary.csv")
    return files


def _scenario_static_check(cfg: RunConfig, out: Path, report) -> list[str]:
    pp, packet, barrier = _model_objects(cfg)
    if barrier.alpha != 0.0:
        barrier = model.BarrierSpec(kind=barrier.kind, lambda0=barrier.lambda0,
                                    a=barrier.a, alpha=0.0, omega0=barrier.omega0)
        report("note: modulation depth forced to 0 for the static check")
    grid = _grid_for(cfg, packet, barrier, pp, cfg.t_final)
    w = tdse.run(packet, barrier, pp, cfg.t_final, [cfg.t_final], grid=grid,
                 points_per_wavelength=cfg.ppw)[0]
    obs = tdse.observables(w, pp, x_cut=cfg.x_cut)
    beta = barrier.beta(pp) if barrier.kind == model.DELTA else None
    if beta is None:
        raise ConfigError("static-check is defined for the delta barrier")
    t_plane = float(eigenbasis.transmission(cfg.k0, beta))
    kk = np.linspace(cfg.k0 - 12.0 / cfg.sigma0, cfg.k0 + 12.0 / cfg.sigma0, 4001)
    wk = np.exp(-2.0 * cfg.sigma0**2 * (kk - cfg.k0) ** 2)
    t_avg = float(np.trapezoid(wk * eigenbasis.transmission(np.abs(kk), beta), kk)
                  / np.trapezoid(wk, kk))
    report(f"P_right={obs.p_right:.5f} (packet-averaged Eq5 oracle {t_avg:.5f}), "
           f"Eq5={t_plane:.5f}")
    _write_csv(out / "static_check.csv",
               ["t_final", "P_right", "T_plane_wave", "T_packet_averaged", "norm"],
               [(w.t, obs.p_right, t_plane, t_avg, w.norm())])
    kexp = np.linspace(max(cfg.k0 - 10.0 / cfg.sigma0, 1e-3), cfg.k0 + 10.0 / cfg.sigma0, 201)
    eigenbasis.export_amplitudes_csv(out / "amplitudes.csv", kexp, barrier, pp)
    return ["static_check.csv", "amplitudes.csv"]


def _coeff_rows(traj: coeffdyn.Trajectory):
    for it, t in enumerate(traj.times):
        for row, sigma in enumerate(("+", "-")):
            for k, b in zip(traj.kgrid.k, traj.b[it, row]):
                yield (t, k, sigma, b.real, b.imag, abs(b) ** 2)


def _scenario_coeffs(cfg: RunConfig, out: Path, report) -> list[str]:
    pp, _, barrier = _model_objects(cfg)
    kg = model.kgrid_with_source(cfg.q, cfg.k_lo, cfg.k_hi, cfg.panel_width,
                                 cfg.panel_nodes)
    field0 = coeffdyn.eigenstate_initial_field(kg, cfg.q)
    table = coeffdyn.build_matrix_table(barrier, pp, kg)
    rhs = functools.partial(coeffdyn.rhs_general, table=table, pp=pp)
    rate = coeffdyn.phase_rate_bound(kg, barrier, pp)
    times = np.linspace(cfg.t_final / cfg.n_times, cfg.t_final, cfg.n_times)
    traj = coeffdyn.integrate(rhs, field0, times, 0.09 / rate, max_phase_rate=rate)
    defect = coeffdyn.sigma_symmetry_defect(traj)
    drift = coeffdyn.probability_defect(traj)
    bmax = float(np.abs(traj.b).max())
    report(f"sigma_symmetry_defect={defect:.3e} probability_drift={drift:.3e} "
           f"max|b|={bmax:.3e}")
    if cfg.barrier_alpha == 0.0:
        report(f"static barrier: all coefficients stayed at 0 (max|b|={bmax:.3e})")
    _write_csv(out / "coeffs.csv", ["t", "k", "sigma", "re_b", "im_b", "abs2_b"],
               _coeff_rows(traj))
    return ["coeffs.csv"]


def _scenario_shorttime(cfg: RunConfig, out: Path, report) -> list[str]:
    pp, _, barrier = _model_objects(cfg)
    kg = model.kgrid_with_source(cfg.q, cfg.k_lo, cfg.k_hi, cfg.panel_width,
                                 cfg.panel_nodes)
    field0 = coeffdyn.eigenstate_initial_field(kg, cfg.q)
    table = coeffdyn.build_matrix_table(barrier, pp, kg)
    rhs = functools.partial(coeffdyn.rhs_general, table=table, pp=pp)
    rate = coeffdyn.phase_rate_bound(kg, barrier, pp)
    times = np.geomspace(cfg.t_lo, cfg.t_hi, cfg.n_times)
    dt = min(0.09 / rate, cfg.t_lo / 8.0)
    traj = coeffdyn.integrate(rhs, field0, times, dt, max_phase_rate=rate)
    ik = int(np.argmin(np.abs(kg.k - cfg.k_read)))
    vals = np.abs(traj.b[:, 1, ik])
    slope = float(np.polyfit(np.log(times), np.log(vals), 1)[0])
    report(f"log-log slope of |b^-(t)| at k={kg.k[ik]:g}: {slope:.4f} (expect 2)")
    rows = [(t, kg.k[ik], "-", traj.b[it, 1, ik].real, traj.b[it, 1, ik].imag,
             abs(traj.b[it, 1, ik]) ** 2) for it, t in enumerate(times)]
    _write_csv(out / "shorttime.csv", ["t", "k", "sigma", "re_b", "im_b", "abs2_b"], rows)
    return ["shorttime.csv"]


def _scenario_widthsweep(cfg: RunConfig, out: Path, report) -> list[str]:
    pp, _, _ = _model_objects(cfg)
    avals = np.linspace(cfg.a_min, cfg.a_max, cfg.n_a)
    gk = float(eigenbasis.decay_rate(cfg.sweep_k, cfg.sweep_v0, pp.eta))
    gq = float(eigenbasis.decay_rate(cfg.sweep_q, cfg.sweep_v0, pp.eta))
    rows = []
    logr = []
    for a in avals:
        bar = model.BarrierSpec(kind=model.SQUARE, lambda0=cfg.sweep_v0, a=float(a))
        skm = eigenbasis.make_state(bar, pp, cfg.sweep_k, "-")
        skp = eigenbasis.make_state(bar, pp, cfg.sweep_k, "+")
        sq = eigenbasis.make_state(bar, pp, cfg.sweep_q, "+")
        num = coeffdyn.profile_element(bar, pp, skm, sq)
        den = coeffdyn.profile_element(bar, pp, skp, sq)
        ratio = abs(num / den)
        rows.append((a, cfg.sweep_k, ratio))
        logr.append(np.log(ratio))
    rate_meas = float(np.polyfit(avals, logr, 1)[0])
    log_est = [np.log(coeffdyn.ratio_estimate(gk, gq, a)) for a in avals]
    rate_est = float(np.polyfit(avals, log_est, 1)[0])
    report(f"fitted decay rate {rate_meas:.4f} vs opacity-shape estimate {rate_est:.4f} "
           f"(gamma_k={gk:.4f}, gamma_q={gq:.4f})")
    _write_csv(out / "widthsweep.csv", ["a", "k", "ratio"], rows)
    return ["widthsweep.csv"]


def _scenario_perturb(cfg: RunConfig, out: Path, report) -> list[str]:
    pp, packet, barrier = _model_objects(cfg)
    params = perturb1.FirstOrderParams(packet=packet, barrier=barrier, pp=pp)
    kg = params.lgrid
    c1 = perturb1.c1_field(kg, cfg.compare_t, params)
    if cfg.barrier_alpha == 0.0:
        report(f"alpha = 0: all first-order coefficients vanish "
               f"(max |c1| = {np.abs(c1.c1).max():.3e})")
    else:
        report(f"first-order coefficients at t={cfg.compare_t:g}: "
               f"max |c1| = {np.abs(c1.c1).max():.3e}")
    _write_csv(out / "perturb_coeffs.csv", ["k", "re_c1", "im_c1", "abs2_c1"],
               zip(kg.k, c1.c1.real, c1.c1.imag, np.abs(c1.c1) ** 2))
    return ["perturb_coeffs.csv"]


def _scenario_compare(cfg: RunConfig, out: Path, report) -> list[str]:
    pp, packet, barrier = _model_objects(cfg)
    if barrier.kind != model.DELTA:
        raise ConfigError("compare scenario requires the delta barrier")
    static = model.BarrierSpec(kind=model.DELTA, lambda0=barrier.lambda0)
    t = cfg.compare_t
    grid = _grid_for(cfg, packet, barrier, pp, t)
    w_mod = tdse.run(packet, barrier, pp, t, [t], grid=grid,
                     points_per_wavelength=cfg.ppw)[0]
    w_sta = tdse.run(packet, static, pp, t, [t], grid=grid,
                     points_per_wavelength=cfg.ppw)[0]
    diff = w_mod.psi - w_sta.psi
    params = perturb1.FirstOrderParams(packet=packet, barrier=barrier, pp=pp)
    c1 = perturb1.c1_field(params.lgrid, t, params)
    psi1 = perturb1.reconstruct_psi1(grid.x, t, c1, barrier.beta(pp))
    gap = float(np.sqrt(np.trapezoid(np.abs(psi1 - diff) ** 2, dx=grid.dx))
                / np.sqrt(np.trapezoid(np.abs(diff) ** 2, dx=grid.dx)))
    report(f"relative L2 gap analytic-vs-numeric at t={t:g}: {gap:.4f}")
    _write_csv(out / "compare.csv",
               ["x", "re_analytic", "im_analytic", "re_numeric", "im_numeric", "abs_diff"],
               zip(grid.x, psi1.real, psi1.imag, diff.real, diff.imag,
                   np.abs(psi1 - diff)))
    return ["compare.csv"]


_SCENARIO_FUNCS = {
    "evolve": _scenario_evolve,
    "static-check": _scenario_static_check,
    "coeffs": _scenario_coeffs,
    "shorttime": _scenario_shorttime,
    "widthsweep": _scenario_widthsweep,
    "perturb": _scenario_perturb,
    "compare": _scenario_compare,
}


def run_scenario(cfg: RunConfig, out_dir, report=print) -> list[str]:
    """Execute one scenario; returns the list of files written (manifest last)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for line in config_lines(cfg):
        report(line)
    report_lines: list[str] = []

    def tee(msg):
        report_lines.append(str(msg))
        report(msg)

    files = _SCENARIO_FUNCS[cfg.scenario](cfg, out, tee)
    with open(out / "manifest.txt", "w") as fh:
        fh.write("# resolved configuration\n")
        for line in config_lines(cfg):
            fh.write(line + "\n")
        fh.write("# results\n")
        for line in report_lines:
            fh.write("# " + line + "\n")
        fh.write("# outputs\n")
        for name in files:
            fh.write(name + "\n")
    return files + ["manifest.txt"]


def parse_manifest_config(text: str) -> RunConfig:
    """Re-parse the configuration block of a manifest file."""
    config_part = [line for line in text.splitlines()
                   if line.strip() and not line.lstrip().startswith("#") and "=" in line]
    return config_from_items(model.parse_flat_config("\n".join(config_part)))


def build_config(config_path: str | None, preset: str | None,
                 overrides: list[str]) -> RunConfig:
    items: dict[str, str] = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; available: "
                              + ", ".join(sorted(PRESETS)))
        items.update(PRESETS[preset])
    if config_path is not None:
        text = Path(config_path).read_text()
        items.update(model.parse_flat_config(text))
    for ov in overrides:
        if "=" not in ov:
            raise ConfigError(f"--set expects key=value, got {ov!r}")
        key, value = ov.split("=", 1)
        items[key.strip()] = value.strip()
    return config_from_items(items)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="tdscatter",
        description="1D quantum scattering off time-modulated barriers",
    )
    ap.add_argument("--config", help="flat key = value configuration file")
    ap.add_argument("--preset", help="named parameter set: " + "|".join(sorted(PRESETS)))
    ap.add_argument("--set", dest="overrides", action="append", default=[],
                    metavar="KEY=VALUE", help="override one config key (repeatable)")
    ap.add_argument("--out", default="out", help="output directory (default: ./out)")
    args = ap.parse_args(argv)
    try:
        cfg = build_config(args.config, args.preset, args.overrides)
        run_scenario(cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PhysicsPreconditionError as exc:
        print(f"{type(exc).__module__.split('.')[-1]}: physics precondition failed: {exc}",
              file=sys.stderr)
        return 3
    except NumericalConvergenceError as exc:
        print(f"numerical convergence failure: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
