"""Command-line driver: every study as a reproducible batch command.

    zrange <command> --config cfg.json [--out DIR] [--grid-n N] [--rmax X]
                     [--refine K]

Configuration is a single JSON object; command-line flags override the
corresponding config fields.  Each run writes one CSV (a row per parameter
point) and one JSON summary (config echo, aggregate metrics, toolkit
version).  Invalid configuration exits nonzero with the offending field
named; numerical flags (non-convergence, poles) are reported through the
row status and exit zero.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .grids import build_grid
from .potentials import BasePotential, ScaledPotential, ScalingLaw, l1_norm, scale_potential
from .reports import ReportRow, write_report

COMMANDS = (
    "scale-norms",
    "resonance",
    "kk-verify",
    "cross-term",
    "additivity",
    "independence",
    "limit-resolvent",
    "efimov",
    "thresholds",
    "kernel22",
    "mass-sweep",
)


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"config error at {field}: {message}")
        self.field = field


def _get(cfg: dict, path: str, default=None, required: bool = False):
    node = cfg
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            if required:
                raise ConfigError(path, "missing required field")
            return default
        node = node[part]
    return node


def _potential(cfg: dict, key: str = "potential") -> BasePotential:
    block = _get(cfg, key, required=True)
    try:
        return BasePotential(
            profile=_get(cfg, f"{key}.profile", required=True),
            strength=float(_get(cfg, f"{key}.strength", 1.0)),
            range=float(_get(cfg, f"{key}.range", 1.0)),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(key, str(exc)) from None


def _law(cfg: dict, key: str = "law", required: bool = True) -> ScalingLaw:
    block = _get(cfg, key, required=required)
    if block is None:
        return ScalingLaw(None, 1.0, 3)
    try:
        p = block.get("p")
        return ScalingLaw(None if p is None else int(p), float(block.get("epsilon", 1.0)), int(block.get("d", 3)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(key, str(exc)) from None


def _grid(cfg: dict, key: str = "grid"):
    n = _get(cfg, f"{key}.n", required=True)
    r_max = _get(cfg, f"{key}.r_max", required=True)
    spacing = _get(cfg, f"{key}.spacing", "logarithmic")
    r_min = _get(cfg, f"{key}.r_min")
    try:
        return build_grid(int(n), float(r_max), spacing, None if r_min is None else float(r_min))
    except (TypeError, ValueError) as exc:
        raise ConfigError(key, str(exc)) from None


# ---------------------------------------------------------------------------
# command implementations: each returns (columns, rows, aggregates)


def _run_scale_norms(cfg):
    pot = _potential(cfg)
    law = _law(cfg)
    grid = _grid(cfg)
    eps_sweep = [float(e) for e in _get(cfg, "sweep", [law.epsilon])]
    d = law.d
    base = pot(grid.nodes)
    base_l1 = l1_norm(base, grid, d)
    rows = []
    for eps in eps_sweep:
        rep = scale_potential(pot, law.with_epsilon(eps), grid)
        rows.append(
            ReportRow(
                {"epsilon": eps},
                {
                    "l1": rep["l1"],
                    "l2": rep["l2"],
                    "rollnik": rep["rollnik"],
                    "l1_ratio": rep["l1"] / base_l1,
                },
            )
        )
    cols = ["epsilon", "l1", "l2", "rollnik", "l1_ratio"]
    return cols, rows, {"d": d, "p": law.p, "base_l1": base_l1}


def _run_resonance(cfg):
    from .birman_schwinger import find_resonance_coupling

    pot = _potential(cfg)
    law = _law(cfg, required=False)
    bracket = tuple(_get(cfg, "bracket", (0.1, 50.0)))
    n = int(_get(cfg, "grid.n", 800))
    rep = find_resonance_coupling(pot, law, bracket, n=n, m=float(_get(cfg, "mass", 0.5)))
    row = ReportRow(
        {"profile": pot.profile, "epsilon": law.epsilon},
        {
            "lambda_critical": rep.lambda_critical,
            "bs_top_eigenvalue": rep.bs_top_eigenvalue,
            "boundary_C": rep.boundary_C,
            "boundary_D": rep.boundary_D,
            "fit_residual": rep.fit_residual,
        },
        status="flagged" if rep.flags else "ok",
    )
    cols = ["profile", "epsilon", "lambda_critical", "bs_top_eigenvalue", "boundary_C", "boundary_D", "fit_residual"]
    return cols, [row], {"flags": rep.flags}


def _run_kk_verify(cfg):
    from .konno_kuroda import assemble_resolvent_diff, direct_resolvent_diff
    from .operators import discretize_h0

    pot = _potential(cfg)
    law = _law(cfg, required=False)
    grid = _grid(cfg)
    z_sweep = [float(z) for z in _get(cfg, "sweep", [0.5, 1.0, 2.0])]
    v = ScaledPotential(pot, law).on_grid(grid)
    d = law.d
    h0 = discretize_h0(grid, d, float(_get(cfg, "mass", 0.5)))
    rows = []
    worst = 0.0
    for z in z_sweep:
        kk = assemble_resolvent_diff(v, z, d, h0.m, h0=h0)
        direct = direct_resolvent_diff(v, z, d, h0.m, h0=h0)
        dist = float(
            np.linalg.norm(kk.matrix.entries - direct.matrix.entries, 2)
            / np.linalg.norm(direct.matrix.entries, 2)
        )
        worst = max(worst, dist)
        rows.append(
            ReportRow({"z": z}, {"rel_distance": dist, "smallest_one_minus_q": kk.smallest_one_minus_q})
        )
    cols = ["z", "rel_distance", "smallest_one_minus_q"]
    return cols, rows, {"max_rel_distance": worst}


def _run_cross_term(cfg):
    from .konno_kuroda import cross_term_norm

    v1 = _potential(cfg, "potential")
    law1 = _law(cfg, "law")
    u = _potential(cfg, "u_potential") if _get(cfg, "u_potential") else v1
    law_u = _law(cfg, "u_law", required=False)
    grid = _grid(cfg)
    eps = [float(e) for e in _get(cfg, "sweep", [0.2, 0.1, 0.05, 0.025, 0.0125])]
    rep = cross_term_norm(v1, law1, u, law_u, eps, grid)
    rows = [
        ReportRow(
            {"epsilon": e},
            {"l1_cross": val},
            status="flagged" if any(f"@eps={e:g}" in fl for fl in rep.flags) else "ok",
        )
        for e, val in zip(rep.epsilons, rep.values)
    ]
    return ["epsilon", "l1_cross"], rows, {"fitted_exponent": rep.fitted_exponent}


def _run_additivity(cfg):
    from .konno_kuroda import additivity_defect

    v2 = _potential(cfg, "potential")
    law2 = _law(cfg, "law")
    v3 = _potential(cfg, "v3_potential") if _get(cfg, "v3_potential") else BasePotential("gaussian", 1.0, 2.0)
    grid = _grid(cfg)
    eps = [float(e) for e in _get(cfg, "sweep", [0.2, 0.1, 0.05, 0.025, 0.0125])]
    rep = additivity_defect(v2, law2, v3, eps, grid)
    rows = [
        ReportRow(
            {"epsilon": e},
            {"defect": val, "defect_over_eps": val / e},
            status="flagged" if any(f"@eps={e:g}" in fl for fl in rep.flags) else "ok",
        )
        for e, val in zip(rep.epsilons, rep.values)
    ]
    return ["epsilon", "defect", "defect_over_eps"], rows, {"fitted_exponent": rep.fitted_exponent}


def _run_independence(cfg):
    from .konno_kuroda import independence_spectrum_check

    grid = _grid(cfg)
    v1 = _potential(cfg, "potential") if _get(cfg, "potential") else None
    law1 = _law(cfg, "law", required=False) if v1 else None
    v2 = _potential(cfg, "v2_potential") if _get(cfg, "v2_potential") else None
    law2 = _law(cfg, "v2_law", required=False) if v2 else None
    v3 = _potential(cfg, "v3_potential") if _get(cfg, "v3_potential") else None
    eps = [float(e) for e in _get(cfg, "sweep", [0.4, 0.2, 0.1])]
    z = float(_get(cfg, "z", 1.0))
    rep = independence_spectrum_check(v1, law1, v2, law2, v3, eps, z, grid)
    rows = [
        ReportRow({"epsilon": e}, {"delta": d}) for e, d in zip(rep.epsilons, rep.discrepancies)
    ]
    return ["epsilon", "delta"], rows, {"decreasing": rep.decreasing, "z": z}


def _run_limit_resolvent(cfg):
    from .limit_resolvent import ProductGrid, ProductFreeResolvent, convergence_study

    grid = _grid(cfg)
    pg = ProductGrid(grid, grid)
    pot = _potential(cfg)
    z = float(_get(cfg, "z", 2.0))
    eps = [float(e) for e in _get(cfg, "sweep", [0.4, 0.2, 0.1, 0.05, 0.025])]
    n_test = int(_get(cfg, "n_test_functions", 5))
    seed = int(_get(cfg, "seed", 11))
    rng = np.random.default_rng(seed)
    res = ProductFreeResolvent(pg, float(_get(cfg, "mass", 1.0)))
    fs = rng.standard_normal((n_test, pg.n))
    for _ in range(2):
        fs = np.stack([res.apply(z, f) for f in fs])
    fs /= np.linalg.norm(fs, axis=1)[:, None]
    rep = convergence_study(z, pot, eps, pg, fs, float(_get(cfg, "mass", 1.0)))
    rows = [
        ReportRow(
            {"epsilon": e},
            {"mean_discrepancy": float(rep.discrepancies[k].mean()), "max_discrepancy": float(rep.discrepancies[k].max())},
        )
        for k, e in enumerate(rep.epsilons)
    ]
    agg = {
        "monotone": rep.monotone,
        "min_reduction": float(rep.reduction_factors.min()),
        "z": z,
    }
    return ["epsilon", "mean_discrepancy", "max_discrepancy"], rows, agg


def _run_efimov(cfg):
    from .efimov import effective_operator, geometric_ratio, operator_spectrum

    grid = _grid(cfg)
    d = int(_get(cfg, "d", 3))
    kind = _get(cfg, "kind", "contact_image")
    c_sweep = [float(c) for c in _get(cfg, "sweep", required=True)]
    refine = int(_get(cfg, "refine", 0))
    rows = []
    for c in c_sweep:
        op = effective_operator(kind, c, d, grid)
        rep = operator_spectrum(op)
        params = {"C": c}
        metrics = {
            "n_negative": rep.count_negative,
            "grid_n": grid.n,
            "r_min": grid.r_min,
            "r_max": grid.r_max,
        }
        try:
            if refine:
                fine = build_grid(refine * grid.n, grid.r_max, "logarithmic", r_min=grid.r_min)
                rep_fine = operator_spectrum(effective_operator(kind, c, d, fine))
                geo = geometric_ratio(rep_fine)
            else:
                geo = geometric_ratio(rep)
            metrics.update({"ratio": geo.ratio, "deviation": geo.deviation, "classification": geo.classification})
            status = "ok"
        except ValueError:
            metrics.update({"ratio": float("nan"), "deviation": float("nan"), "classification": "too_few_states"})
            status = "flagged"
        rows.append(ReportRow(params, metrics, status))
    cols = ["C", "n_negative", "ratio", "deviation", "classification", "grid_n", "r_min", "r_max"]
    return cols, rows, {"kind": kind, "d": d}


def _run_thresholds(cfg):
    from .efimov import find_thresholds

    kind = _get(cfg, "kind", "contact_image")
    dims = [int(d) for d in _get(cfg, "sweep", [2, 3])]
    bracket = tuple(_get(cfg, "bracket", (0.05, 2.5)))
    n = int(_get(cfg, "grid.n", 300))
    rows = []
    for d in dims:
        rep = find_thresholds(kind, d, bracket, n=n)
        status = "ok" if rep.grid_refinement_drift < 0.01 else "flagged"
        rows.append(
            ReportRow(
                {"kind": kind, "d": d},
                {"C0": rep.C0, "C1": rep.C1, "drift": rep.grid_refinement_drift},
                status,
            )
        )
    return ["kind", "d", "C0", "C1", "drift"], rows, {"bracket": list(bracket)}


def _run_kernel22(cfg):
    from .efimov import kernel22

    pairs = _get(cfg, "sweep", required=True)
    rows = []
    for pair in pairs:
        q1 = np.asarray(pair[0], dtype=float)
        q2 = np.asarray(pair[1], dtype=float)
        val = kernel22(q1, q2)
        rows.append(
            ReportRow(
                {"q1x": q1[0], "q1y": q1[1], "q2x": q2[0], "q2y": q2[1]},
                {"value": val.value, "pole": val.pole},
                status="flagged" if val.pole else "ok",
            )
        )
    return ["q1x", "q1y", "q2x", "q2y", "value", "pole"], rows, {"n_poles": sum(r.status == "flagged" for r in rows)}


def _run_mass_sweep(cfg):
    from .efimov import mass_sweep_2d

    grid = _grid(cfg)
    c = float(_get(cfg, "c", 1.0))
    masses = [float(m) for m in _get(cfg, "sweep", [1, 2, 4, 8, 16])]
    rep = mass_sweep_2d(masses, c, grid)
    rows = []
    for k, m in enumerate(rep.masses):
        status = "flagged" if any(f"@m={m:g}" in fl for fl in rep.flags) else "ok"
        rows.append(
            ReportRow(
                {"m": float(m)},
                {
                    "n_negative": int(rep.counts[k]),
                    "shallowest_abs_e": float(rep.shallowest_depth[k]),
                    "deepest_abs_e": float(rep.deepest_depth[k]),
                },
                status,
            )
        )
    agg = {
        "c": c,
        "counts_nondecreasing": rep.counts_nondecreasing,
        "shallowest_nonincreasing": rep.shallowest_nonincreasing,
    }
    return ["m", "n_negative", "shallowest_abs_e", "deepest_abs_e"], rows, agg


_RUNNERS = {
    "scale-norms": _run_scale_norms,
    "resonance": _run_resonance,
    "kk-verify": _run_kk_verify,
    "cross-term": _run_cross_term,
    "additivity": _run_additivity,
    "independence": _run_independence,
    "limit-resolvent": _run_limit_resolvent,
    "efimov": _run_efimov,
    "thresholds": _run_thresholds,
    "kernel22": _run_kernel22,
    "mass-sweep": _run_mass_sweep,
}


def run(config: dict, out_dir) -> int:
    """Execute one configured study and write its reports."""
    command = config.get("command")
    if command not in COMMANDS:
        raise ConfigError("command", f"unknown command {command!r}, expected one of {COMMANDS}")
    columns, rows, aggregates = _RUNNERS[command](config)
    write_report(Path(out_dir), command, columns, rows, config, aggregates)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="zrange", description="zero-range interaction studies")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON configuration file")
    parser.add_argument("--out", default=None, help="output directory (default: config output_path or '.')")
    parser.add_argument("--grid-n", type=int, default=None, help="override grid.n")
    parser.add_argument("--rmax", type=float, default=None, help="override grid.r_max")
    parser.add_argument("--refine", type=int, default=None, help="override refinement factor")
    args = parser.parse_args(argv)

    try:
        config = json.loads(Path(args.config).read_text())
    except FileNotFoundError:
        print(f"config error at --config: file not found: {args.config}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"config error at --config: invalid JSON ({exc})", file=sys.stderr)
        return 2
    if not isinstance(config, dict):
        print("config error at <root>: expected a JSON object", file=sys.stderr)
        return 2

    config["command"] = args.command
    if args.grid_n is not None:
        config.setdefault("grid", {})["n"] = args.grid_n
    if args.rmax is not None:
        config.setdefault("grid", {})["r_max"] = args.rmax
    if args.refine is not None:
        config["refine"] = args.refine
    out_dir = args.out or config.get("output_path") or "."

    try:
        return run(config, out_dir)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
