"""Command-line front end.

Every subcommand reads an optional JSON config with ``grid``, ``basis``,
``state`` and ``run`` blocks, writes ``<out>/<subcommand>.csv`` and
``<out>/<subcommand>.json`` and exits with 0 (checks pass), 1 (a check
failed) or 2 (usage or configuration error).
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import beams, observables as obs, posop, quantum
from .kspace import PhysicalConstants, PoleError, build_grid, set_fft_workers
from .polarization import SIGMAS, make_basis

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

SUBCOMMANDS = ("operator-check", "localized", "evolve", "density", "functionals", "two-photon",
               "beam-am", "glauber")

GRID_DEFAULTS = {"n": 12, "L": 4 * math.pi, "units": "natural", "offset": True}
# the two-photon marginal aliases at coarsening 4 on 12^3
GRID_OVERRIDES = {"two-photon": {"n": 16}}
BASIS_DEFAULTS = {"m": None}

RUN_DEFAULTS = {
    "operator-check": {
        "r_values": [[0.3, -0.4, 0.2], [0.0, 0.0, 0.0], [-0.5, 0.25, 0.6]],
        "n_fields": 3, "axis_pairs": [["x", "y"], ["y", "z"], ["x", "z"]],
        "min_order": 1.9, "similarity_tol": 1e-8, "biorthonormal_tol": 1e-12, "n_pairs": 100,
        "adjoint_tol": 1e-12, "max_fine_residual": 1.0,
    },
    "localized": {"r0": [0.0, 0.0, 0.0], "sigma": 1, "alpha": 0.0, "t": 0.0, "envelope_k0": None,
                  "loop_radius": None, "loop_points": 64},
    "evolve": {"dt": 0.5, "steps": 4, "wave_tol": 1e-10, "norm_tol": 1e-13},
    "density": {"alpha": 0.0, "t": 0.0, "total_tol": 1e-10, "continuity_tol": 1e-9},
    "functionals": {"t": 0.0, "origin": [0.4, -0.3, 0.25], "momentum_tol": 1e-10, "shift_tol": 1e-12},
    "two-photon": {"alpha": 0.5, "t": 0.0, "coarsening": 4, "max_bytes": 5e8,
                   "exchange_tol": 1e-12, "total_tol": 0.02},
    "beam-am": {"kind": "paraxial", "omega": 1.0, "l_z": 1, "sigma": 1, "waist": 1.0,
                "envelope": "gaussian", "envelope_params": {}, "n_radial": beams.N_RADIAL,
                "extent": beams.RADIAL_EXTENT, "aperture": None, "am_tol": 5e-3},
    "glauber": {"mode": "pulse", "omega_bar": 1.0, "bandwidths": [1e-4, 0.01, 0.05, 0.1, 0.2, 0.5],
                "detector": None, "limit_tol": 1e-6},
}

STATE_DEFAULTS = {
    "evolve": {"generator": "gaussian_packet", "k_center": [0.0, 0.0, 1.0], "width": 0.4},
    "density": {"generator": "gaussian_packet", "k_center": [0.0, 0.0, 1.0], "width": 0.4},
    "functionals": {"generator": "gaussian_packet", "k_center": [0.0, 0.0, 1.0], "width": 0.4},
    "two-photon": {"generator": "packet_pair", "packets": [
        {"k_center": [0.0, 0.0, 1.5], "width": 0.25, "sigma": 1, "r0": [-2.0, 0.0, 0.0]},
        {"k_center": [0.0, 0.0, 1.5], "width": 0.25, "sigma": -1, "r0": [2.0, 0.0, 0.0]}]},
}


class ConfigError(ValueError):
    pass


# -- configuration -------------------------------------------------------------

def _merge(defaults: dict, given: dict | None, where: str) -> dict:
    given = {} if given is None else given
    if not isinstance(given, dict):
        raise ConfigError(f"'{where}' must be an object")
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown keys in '{where}': {sorted(unknown)}")
    out = copy.deepcopy(defaults)
    out.update(copy.deepcopy(given))
    return out


def resolve_config(command: str, raw: dict | None) -> dict:
    """Fill defaults and reject unknown keys; returns the fully specified config."""
    raw = {} if raw is None else raw
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - {"grid", "basis", "state", "run"}
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    cfg = {"run": _merge(RUN_DEFAULTS[command], raw.get("run"), "run")}
    if command != "beam-am":
        cfg["grid"] = _merge({**GRID_DEFAULTS, **GRID_OVERRIDES.get(command, {})}, raw.get("grid"), "grid")
        cfg["basis"] = _merge(BASIS_DEFAULTS, raw.get("basis"), "basis")
    elif "grid" in raw or "basis" in raw or "state" in raw:
        raise ConfigError("beam-am takes only a 'run' block")
    if command in STATE_DEFAULTS:
        st = raw.get("state", STATE_DEFAULTS[command])
        if not isinstance(st, dict):
            raise ConfigError("'state' must be an object")
        cfg["state"] = copy.deepcopy(st)
    elif "state" in raw:
        raise ConfigError(f"{command} does not take a 'state' block")
    return cfg


def config_hash(cfg: dict, seed: int) -> str:
    blob = json.dumps({"config": cfg, "seed": seed}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _grid(cfg: dict):
    g = cfg["grid"]
    try:
        k = PhysicalConstants.from_units(g["units"])
    except ValueError as e:
        raise ConfigError(str(e)) from None
    return build_grid(int(g["n"]), float(g["L"]), k, bool(g["offset"]))


def _basis(cfg, grid):
    m = cfg["basis"]["m"]
    return make_basis(grid, None if m is None else int(m))


# -- output -----------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.16e" % float(v)
    return str(v)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x) if math.isfinite(x) else str(x)
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return x


def write_outputs(out_dir: Path, command: str, meta: dict, header: list[str], rows, report: dict):
    out_dir.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    for key in sorted(meta):
        buf.write(f"# {key}: {json.dumps(_jsonable(meta[key]), sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    (out_dir / f"{command}.csv").write_text(buf.getvalue(), encoding="utf-8")
    full = {"meta": meta, "report": report}
    text = json.dumps(_jsonable(full), sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    (out_dir / f"{command}.json").write_text(text, encoding="utf-8")
    return text


# -- subcommands ---------------------------------------------------------------------

def cmd_operator_check(cfg, seed):
    run = cfg["run"]
    g = cfg["grid"]
    k = PhysicalConstants.from_units(g["units"])
    if not g["offset"]:
        build_grid(int(g["n"]), float(g["L"]), k, False)  # raises PoleError
    pair = posop.refinement_pair(int(g["n"]), float(g["L"]), k)
    bases = [_basis(cfg, gr) for gr in pair]
    rows, checks = [], []

    def record(name, alpha, extra, coarse, fine, ok):
        order = posop.convergence_order(coarse, fine)
        rows.append([name, alpha, extra, coarse, fine, order, ok])
        checks.append(bool(ok))
        return order

    for r in run["r_values"]:
        r = np.asarray(r, dtype=float)
        for a in posop.ALPHAS:
            for s in SIGMAS:
                res = [float(np.linalg.norm(posop.eigenvector_residual(
                    posop.position_eigenstate(gr, b, r, s, a), gr, r, a))) for gr, b in zip(pair, bases)]
                order = posop.convergence_order(*res)
                record("eigenvector", a, f"r={r.tolist()} sigma={s}", res[0], res[1],
                       order >= run["min_order"] and res[1] <= run["max_fine_residual"])
    for i in range(int(run["n_fields"])):
        fields = [posop.random_transverse_field(gr, seed + i) for gr in pair]
        for axes in run["axis_pairs"]:
            for a in posop.ALPHAS:
                res = [posop.commutator_check(a, F, gr, tuple(axes)) for F, gr in zip(fields, pair)]
                order = posop.convergence_order(*res)
                record("commutator", a, f"seed={seed + i} axes={''.join(axes)}", res[0], res[1],
                       order >= run["min_order"] and res[1] <= run["max_fine_residual"])
    gr = pair[0]
    F = posop.random_transverse_field(gr, seed)
    mask = posop.analysis_mask(gr)
    for to in (0.5, -0.5):
        worst = 0.0
        for ax in range(3):
            conj = posop.similarity_map(posop.apply_position_operator(
                posop.similarity_map(F, gr, to, 0), gr, 0, ax), gr, 0, to)
            direct = posop.apply_position_operator(F, gr, to, ax)
            worst = max(worst, posop.masked_norm(conj - direct, mask) / posop.masked_norm(direct, mask))
        rows.append(["similarity", to, "", worst, "", "", worst < run["similarity_tol"]])
        checks.append(worst < run["similarity_tol"])
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(int(run["n_pairs"])):
        F0, G0 = (posop.transverse_part(rng.normal(size=gr.shape + (3,)) + 1j * rng.normal(size=gr.shape + (3,)), gr)
                  for _ in range(2))
        lp = posop.inner_product(F0, G0)
        bio = posop.inner_product(posop.similarity_map(F0, gr, 0, 0.5), posop.similarity_map(G0, gr, 0, -0.5),
                                  "biorthonormal")
        worst = max(worst, abs(bio - lp) / abs(lp))
    rows.append(["biorthonormal", "", f"pairs={run['n_pairs']}", worst, "", "", worst < run["biorthonormal_tol"]])
    checks.append(worst < run["biorthonormal_tol"])
    for a in posop.ALPHAS:
        for gr in pair:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                rep = posop.adjoint_check(a, posop.compact_transverse_field(gr, seed),
                                          posop.compact_transverse_field(gr, seed + 1), gr)
            ok = rep.hermitian_defect < run["adjoint_tol"] and rep.pair_defect < run["adjoint_tol"]
            rows.append(["adjoint", a, f"n={gr.n_per_axis}", rep.hermitian_defect, rep.pair_defect, "", ok])
            checks.append(ok)
    header = ["check", "alpha", "case", "coarse", "fine", "order", "pass"]
    orders = [r[5] for r in rows if r[0] in ("eigenvector", "commutator")]
    report = {"n_checks": len(checks), "n_failed": checks.count(False), "min_order": min(orders),
              "grids": [[gr.n_per_axis, gr.box_length] for gr in pair]}
    return header, rows, report, all(checks)


def _loop_winding(coeffs, grid, centre, radius, npts, component):
    ang = np.linspace(0, 2 * math.pi, npts, endpoint=False)
    pts = centre + radius * np.stack([np.cos(ang), np.sin(ang), np.zeros_like(ang)], -1)
    kern = np.exp(1j * pts @ grid.k.reshape(-1, 3).T) / math.sqrt(grid.volume)
    vals = kern @ coeffs.reshape(-1, 3)
    amp = vals @ component
    ph = np.angle(np.append(amp, amp[0]))
    return int(round(np.sum(np.angle(np.exp(1j * np.diff(ph)))) / (2 * math.pi))), float(np.abs(amp).min())


def cmd_localized(cfg, seed):
    run = cfg["run"]
    g = _grid(cfg)
    b = _basis(cfg, g)
    k0 = run["envelope_k0"] or 0.5 * g.k_max
    env = lambda gr: np.exp(-(gr.kmag / k0) ** 2)  # noqa: E731
    sigma = int(run["sigma"])
    st = quantum.localized(g, run["r0"], sigma, 0.0, env)
    psi = quantum.synthesize_one_photon(st, b, posop.check_alpha(run["alpha"]), sigma, float(run["t"]))
    vals = psi.values
    dens = np.sum(np.abs(vals) ** 2, axis=-1)
    pts = g.r_points()
    rows = [[*pts[i], vals[i][0].real, vals[i][0].imag, vals[i][1].real, vals[i][1].imag,
             vals[i][2].real, vals[i][2].imag, dens[i]] for i in np.ndindex(g.shape)]
    peak = np.unravel_index(int(np.argmax(dens)), g.shape)
    r0 = np.asarray(run["r0"], dtype=float)
    radius = run["loop_radius"] or 1.5 / k0
    comps = {"minus": np.array([1, -1j, 0]) / math.sqrt(2),  # amplitude along (x - i y)/sqrt2
             "z": np.array([0, 0, 1.0]),
             "plus": np.array([1, 1j, 0]) / math.sqrt(2)}
    winding = {}
    for name, vec in comps.items():
        wnum, amin = _loop_winding(psi.coeffs, g, r0, radius, int(run["loop_points"]), vec.conj())
        winding[name] = {"winding": wnum, "min_amplitude": amin}
    m = cfg["basis"]["m"]
    expected = None if m is None else {"plus": m * sigma - 1, "z": m * sigma, "minus": m * sigma + 1}
    peak_ok = bool(np.allclose(pts[peak], r0, atol=g.dr / 2 + 1e-12))
    # for |m sigma| > 1 every component winds, so the density has a node at r0
    ok = peak_ok if expected is None or 0 in expected.values() else True
    if expected is not None:
        ok = ok and all(winding[c]["winding"] == expected[c]
                        for c in winding if winding[c]["min_amplitude"] > 1e-10)
    report = {"peak_index": list(peak), "peak_r": pts[peak], "peak_at_r0": peak_ok, "winding": winding,
              "expected_winding": expected, "loop_radius": radius}
    header = ["x", "y", "z", "re_x", "im_x", "re_y", "im_y", "re_z", "im_z", "abs2"]
    return header, rows, report, ok


def cmd_evolve(cfg, seed):
    run = cfg["run"]
    g = _grid(cfg)
    b = _basis(cfg, g)
    st = quantum.state_from_config(g, cfg["state"])
    n0 = st.norm_squared
    rows, ok = [], True
    for step in range(int(run["steps"]) + 1):
        t = step * float(run["dt"])
        cur = quantum.evolve(st, t)
        wres = max(quantum.wave_equation_residual(cur, b, a, s, 0.0) for a in posop.ALPHAS for s in SIGMAS)
        fres = max(quantum.field_potential_residual(cur, b, s, 0.0) for s in SIGMAS)
        d = obs.state_density(cur, b, 0.0)
        w = d.n.real * d.dV
        centroid = [float(np.sum(w * g.r_points()[..., i])) for i in range(3)]
        dnorm = abs(cur.norm_squared - n0)
        good = wres < run["wave_tol"] and fres < run["wave_tol"] and dnorm < run["norm_tol"]
        ok = ok and good
        rows.append([step, t, cur.norm_squared, wres, fres, *centroid, good])
    header = ["step", "t", "norm", "wave_residual", "field_potential_residual", "cx", "cy", "cz", "pass"]
    return header, rows, {"steps": len(rows), "all_pass": ok}, ok


def cmd_density(cfg, seed):
    run = cfg["run"]
    g = _grid(cfg)
    b = _basis(cfg, g)
    st = quantum.state_from_config(g, cfg["state"])
    a = posop.check_alpha(run["alpha"])
    d = obs.state_density(st, b, a, float(run["t"]))
    res, rnorm = obs.continuity_residual(st, b, a, float(run["t"]))
    pts = g.r_points()
    rows = [[*pts[i], d.n[i].real, d.n[i].imag, *d.j[i].real, abs(res[i])] for i in np.ndindex(g.shape)]
    expect = st.photon_number
    ok = abs(d.total_n - expect) < run["total_tol"] and rnorm < run["continuity_tol"]
    report = {"alpha": a, "integral_n": d.total_n, "expected": expect, "integral_j": d.total_j.real,
              "imaginary_defect": d.imaginary_defect, "continuity_norm": rnorm}
    header = ["x", "y", "z", "n_re", "n_im", "jx", "jy", "jz", "continuity_residual"]
    return header, rows, report, bool(ok)


def cmd_functionals(cfg, seed):
    run = cfg["run"]
    g = _grid(cfg)
    b = _basis(cfg, g)
    st = quantum.state_from_config(g, cfg["state"])
    fs = obs.state_fields(st, b, float(run["t"]))
    P = obs.momentum_functional(fs)
    o = np.asarray(run["origin"], dtype=float)
    J0 = obs.angular_momentum_functional(fs)
    Jo = obs.angular_momentum_functional(fs, origin=o)
    P_ref = obs.mode_sum_momentum(st)
    Jct = obs.cycle_averaged_angular_momentum(fs)
    scale = g.constants.hbar * g.k_max
    pdev = float(np.abs(P.value - P_ref).max()) / scale
    sdev = float(np.abs(Jo.value - (J0.value - np.cross(o, P.value))).max()) / max(
        1e-300, float(np.abs(J0.value).max() + np.linalg.norm(o) * np.abs(P.value).max()))
    ok = pdev < run["momentum_tol"] and sdev < run["shift_tol"]
    rows = [["P", *P.value], ["P_imag", *P.imaginary], ["P_mode_sum", *P_ref], ["J", *J0.value],
            ["J_imag", *J0.imaginary], ["J_orbital", *J0.orbital], ["J_spin", *J0.spin],
            ["J_origin", *Jo.value], ["J_cycle_averaged", *Jct]]
    report = {"P": P.value, "P_mode_sum": P_ref, "P_rel_dev": pdev, "J": J0.value, "J_origin": Jo.value,
              "origin": o, "shift_rel_dev": sdev, "J_cycle_averaged": Jct,
              "photon_number": st.photon_number}
    return ["quantity", "x", "y", "z"], rows, report, bool(ok)


def cmd_two_photon(cfg, seed):
    run = cfg["run"]
    g = _grid(cfg)
    b = _basis(cfg, g)
    st = quantum.state_from_config(g, cfg["state"])
    if len(st.c2_values) == 0:
        raise ConfigError("two-photon needs a state with a two-photon sector")
    a = posop.check_alpha(run["alpha"])
    kw = dict(t=float(run["t"]), coarsening=int(run["coarsening"]), max_bytes=float(run["max_bytes"]))
    try:
        two_a = quantum.synthesize_two_photon(st, b, a, **kw)
        two_m = quantum.synthesize_two_photon(st, b, -a, **kw)
    except quantum.ProductGridTooLarge as e:
        raise ConfigError(str(e)) from None
    asym = max(quantum.exchange_asymmetry(two_a), quantum.exchange_asymmetry(two_m))
    marg = obs.two_photon_marginal(two_a, two_m)
    rows = [[*p, marg[1][i].real, marg[1][i].imag, marg[-1][i].real, marg[-1][i].imag]
            for i, p in enumerate(two_a.r_points)]
    total = marg["total"]
    ok = asym < run["exchange_tol"] and abs(total - st.photon_number) / st.photon_number < run["total_tol"]
    report = {"exchange_asymmetry": asym, "marginal_total": total, "photon_number": st.photon_number,
              "coarse_points": len(two_a.r_points), "pairs": len(st.c2_values)}
    header = ["x", "y", "z", "n_plus_re", "n_plus_im", "n_minus_re", "n_minus_im"]
    return header, rows, report, bool(ok)


def cmd_beam_am(cfg, seed):
    run = cfg["run"]
    if run["kind"] != "paraxial":
        raise ConfigError("beam-am computes the paraxial AM budget; kind must be 'paraxial'")
    if run["envelope"] not in beams.ENVELOPES:
        raise ConfigError(f"unknown envelope {run['envelope']!r}")
    spec = beams.BeamSpec("paraxial", float(run["omega"]), int(run["l_z"]), int(run["sigma"]),
                          waist=float(run["waist"]))
    spec = beams.with_envelope(spec, run["envelope"], **run["envelope_params"])
    r = beams.radial_grid(spec.waist, int(run["n_radial"]), float(run["extent"]))
    if run["aperture"] is None:
        prof = beams.am_density(spec, r)
        extra = {}
    else:
        rep = beams.aperture_demo(spec, float(run["aperture"]), r)
        prof = rep.after
        extra = {"aperture": rep.radius, "before_per_photon": rep.before.per_photon,
                 "edge_r": float(r[rep.edge_index]), "edge_spike": rep.edge_spike,
                 "transmitted_fraction": rep.transmitted_fraction}
    cn = prof.cumulative(prof.n)
    cj = prof.cumulative(prof.total)
    rows = [[r[i], prof.u2[i], prof.n[i], prof.orbital[i], prof.spin[i], cn[i], cj[i]] for i in range(len(r))]
    target = spec.l_z + spec.sigma
    err = abs(prof.per_photon - target) / max(1, abs(target))
    report = {"per_photon_hbar": prof.per_photon, "orbital_per_photon": prof.orbital_per_photon,
              "spin_per_photon": prof.spin_per_photon, "expected": target, "rel_error": err,
              "photons": prof.photons, **extra}
    header = ["r", "u2", "n", "J_orbital", "J_spin", "cumulative_n", "cumulative_J"]
    return header, rows, report, bool(err < run["am_tol"])


def cmd_glauber(cfg, seed):
    run = cfg["run"]
    bws = [float(x) for x in run["bandwidths"]]
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if run["mode"] == "pulse":
            k = PhysicalConstants.from_units(cfg["grid"]["units"])
            for bw in bws:
                rep = obs.pulse_glauber_comparison(obs.gaussian_pulse(float(run["omega_bar"]), bw, k))
                rows.append([bw, rep.bandwidth, rep.ratio, rep.deviation])
        elif run["mode"] == "grid":
            g = _grid(cfg)
            b = _basis(cfg, g)
            for bw in bws:
                st = quantum.axial_pulse_with_bandwidth(g, bw)
                rep = obs.glauber_comparison(st, b, run["detector"])
                rows.append([bw, rep.bandwidth, rep.ratio, rep.deviation])
        else:
            raise ConfigError("glauber mode must be 'pulse' or 'grid'")
    devs = [r[3] for r in rows]
    order = np.argsort([r[1] for r in rows])
    monotone = all(devs[i] < devs[j] for i, j in zip(order, order[1:]))
    narrow = min(range(len(rows)), key=lambda i: rows[i][1])
    limit_ok = devs[narrow] < run["limit_tol"]
    report = {"monotone": monotone, "narrowest_bandwidth": rows[narrow][1],
              "narrowest_deviation": devs[narrow], "limit_ok": limit_ok}
    return ["target_bandwidth", "bandwidth", "ratio", "deviation"], rows, report, bool(monotone and limit_ok)


HANDLERS = {
    "operator-check": cmd_operator_check, "localized": cmd_localized, "evolve": cmd_evolve,
    "density": cmd_density, "functionals": cmd_functionals, "two-photon": cmd_two_photon,
    "beam-am": cmd_beam_am, "glauber": cmd_glauber,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config with grid/basis/state/run blocks")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--threads", type=int, default=1, help="FFT worker threads")
    common.add_argument("--seed", type=int, default=0, help="seed for random test fields")
    p = argparse.ArgumentParser(prog="photonpos", description="Photon position operator toolkit")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=HANDLERS[name].__name__.replace("cmd_", ""))
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_CONFIG
    set_fft_workers(args.threads)
    try:
        raw = None
        if args.config is not None:
            raw = json.loads(args.config.read_text(encoding="utf-8"))
        cfg = resolve_config(args.command, raw)
        header, rows, report, ok = HANDLERS[args.command](cfg, args.seed)
    except PoleError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, ValueError, KeyError, TypeError, OSError, json.JSONDecodeError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    tolerances = {k: v for k, v in cfg["run"].items() if k.endswith("_tol") or k in ("min_order", "max_fine_residual")}
    meta = {"command": args.command, "config_hash": config_hash(cfg, args.seed), "seed": args.seed,
            "config": cfg, "tolerances": tolerances, "pass": bool(ok)}
    if "grid" in cfg:
        meta["grid"] = {"n": cfg["grid"]["n"], "L": cfg["grid"]["L"], "units": cfg["grid"]["units"]}
    write_outputs(args.out, args.command, meta, header, rows, report)
    sys.stdout.write(json.dumps(_jsonable({"command": args.command, "pass": bool(ok), "report": report}),
                                sort_keys=True) + "\n")
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
