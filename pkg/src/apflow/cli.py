"""Command-line front end.

Subcommands ``eigs``, ``modal``, ``flow``, ``march``, ``gate`` and
``validate`` each read one config file and write CSV/JSON files into the
output directory.  Exit codes: 0 pass, 1 criterion failure, 2 config or
input error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from .apseries import APSeries
from .config import ConfigError, RunConfig, load_config

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _dump(obj, path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return _jsonable(o.item())
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, float) and not math.isfinite(o):
        return repr(o)
    return o


def _route(cfg: RunConfig):
    return cfg.modal.route or None


# -- commands -----------------------------------------------------------


def cmd_eigs(cfg: RunConfig, out: Path) -> int:
    from .cross_section import flux_carrier

    section, basis = cfg.build_section()
    basis.to_csv(out / "eigs.csv")
    fc = flux_carrier(section, basis, cfg.nu)
    summary = fc.summary()
    summary.update({"kind": section.kind, "measure": section.measure, "m": basis.m,
                    "beta_sq_sum": basis.beta_sq_sum})
    _dump(summary, out / "flux_carrier.json")
    print(f"eigs: m={basis.m} lambda_1={basis.lambdas[0]:.10g} chi0_sq={fc.chi0_sq:.10g}")
    return EXIT_OK


def cmd_modal(cfg: RunConfig, out: Path) -> int:
    from .modal import gain_sweep, write_gain_csv

    section, basis = cfg.build_section()
    rows = gain_sweep(section, basis, cfg.nu, cfg.modal.frequencies, _route(cfg), cfg.threads)
    write_gain_csv(rows, out / "gain.csv")
    worst = max(max(r.residuals) for r in rows)
    ok = worst <= cfg.modal.residual_ceiling
    _dump({"route": rows[0].route, "max_identity_residual": worst,
           "residual_ceiling": cfg.modal.residual_ceiling, "passed": ok,
           "frequencies": [r.xi for r in rows]}, out / "modal_summary.json")
    print(f"modal: {len(rows)} frequencies, max identity residual {worst:.3e}")
    return EXIT_OK if ok else EXIT_FAIL


def _require_series(cfg: RunConfig, what: str) -> APSeries:
    f = cfg.load_flux()
    if not isinstance(f, APSeries):
        raise ConfigError(f"{what} needs a series flux (flux.file or flux.terms)")
    return f


def cmd_flow(cfg: RunConfig, out: Path) -> int:
    from .basic_flow import regL1_sums, sample_solution, solve_spectral, verify_bounds, write_samples_csv

    f = _require_series(cfg, "flow")
    section, basis = cfg.build_section()
    sol = solve_spectral(f, section, basis, cfg.nu, _route(cfg), cfg.threads)
    report = sol.report()
    report["regL1"] = regL1_sums(sol)
    _dump(report, out / "flow_report.json")
    fl = cfg.flow
    times = np.linspace(fl.t_start, fl.t_end, fl.samples)
    probes = fl.probes or None
    try:
        samples = sample_solution(sol, times, probes)
    except ValueError as exc:
        raise ConfigError(f"flow.probes: {exc}") from exc
    write_samples_csv(samples, out / "samples.csv")
    if fl.verify:
        _dump(verify_bounds(sol, workers=cfg.threads), out / "bounds.json")
    pi0 = sol.pi_hat.get(0.0)
    msg = f"flow: {len(f)} modes, max flux residual {sol.flux_residuals().max(initial=0.0):.3e}"
    if pi0 is not None:
        msg += f", mean pressure {pi0.real:.10g}"
    print(msg)
    return EXIT_OK


def cmd_march(cfg: RunConfig, out: Path) -> int:
    from .time_domain import StiffnessWarning, compare_with_spectral, march, uloc_report, volterra_pressure

    f = cfg.load_flux()
    section, basis = cfg.build_section()
    mc = cfg.march
    probes = mc.probes or None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", StiffnessWarning)
        sol = march(f, section, basis, cfg.nu, mc.dt, mc.T, projection=mc.projection,
                    probe_points=probes)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    sol.to_csv(out / "trajectory.csv")
    report = {"ledgers": sol.ledgers}
    if sol.T >= 2.0:
        report["uloc"] = uloc_report(sol, f)
    cross = {}
    if mc.volterra:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", StiffnessWarning)
            _, pv = volterra_pressure(f, section, basis, cfg.nu, mc.T, dt=mc.dt)
        cross["volterra_vs_march"] = float(np.linalg.norm(pv - sol.pi) / max(np.linalg.norm(sol.pi), 1e-300))
    if isinstance(f, APSeries):
        from .basic_flow import solve_spectral

        ssol = solve_spectral(f, section, basis, cfg.nu, "eigen", cfg.threads)
        cross.update(compare_with_spectral(sol, ssol, mc.transient, probes))
    if cross:
        _dump(cross, out / "cross_route.json")
    _dump(report, out / "march_report.json")
    print(f"march: {sol.t.size - 1} steps, max flux residual {sol.ledgers['max_flux_residual']:.3e}")
    return EXIT_OK


def cmd_gate(cfg: RunConfig, out: Path) -> int:
    from .nonlinear_gate import gate, nu0_report

    f = _require_series(cfg, "gate")
    rep = gate(f, cfg.nu, cfg.gate.c)
    data = rep.to_dict()
    data["input"] = {"nu": cfg.nu, "c": cfg.gate.c, "flux": f.to_text()}
    if cfg.gate.nu0:
        data["nu0"] = nu0_report(rep.phi_star, cfg.gate.c)
    _dump(data, out / "gate.json")
    print(f"gate: phi_star={rep.phi_star:.10g} verdict={rep.verdict}")
    return EXIT_OK


def cmd_validate(cfg: RunConfig, out: Path) -> int:
    from .validation import run_all

    results = run_all(cfg.validate)
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    _dump({"passed": ok, "profile": cfg.validate.profile,
           "criteria": [r.to_dict() for r in results]}, out / "validation.json")
    return EXIT_OK if ok else EXIT_FAIL


HELP = {
    "eigs": "eigenbasis CSV and flux-carrier summary",
    "modal": "gain sweep and identity residuals",
    "flow": "spectral basic-flow solve, samples and bound ledgers",
    "march": "time-domain march, uloc report and cross-route checks",
    "gate": "contraction certificate for the nonlinear problem",
    "validate": "run every acceptance criterion",
}

COMMANDS = {"eigs": cmd_eigs, "modal": cmd_modal, "flow": cmd_flow, "march": cmd_march,
            "gate": cmd_gate, "validate": cmd_validate}


def _common(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=d, help="TOML run configuration")
    parser.add_argument("--out", default=d, help="output directory (overrides the config)")
    parser.add_argument("--threads", type=int, default=d, help="worker threads for mode sweeps")
    parser.add_argument("--tolerance-profile", choices=("strict", "default"), default=d,
                        help="tolerance profile for validate")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="apflow", description=__doc__.splitlines()[0])
    _common(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sp = sub.add_parser(name, help=HELP[name])
        _common(sp, suppress=True)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.out:
            cfg.out = args.out
        if args.threads:
            if args.threads < 1:
                raise ConfigError("--threads: must be at least 1")
            cfg.threads = args.threads
        if args.tolerance_profile:
            cfg.validate.profile = args.tolerance_profile
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
