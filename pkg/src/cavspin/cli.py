"""Batch command-line front end.

Subcommands: evolve, optimize, sweep, oracle, budget, validate.  Every
command reads a ``key = value`` config file, rejects unknown keys, and
echoes the fully resolved configuration into each output file.  Exit codes:
0 success, 2 configuration error, 3 numerical/feasibility failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .moments import PropagationError, evolve_squeezing, trace_csv_rows
from .optimize import (OptimizationProblem, SweepResult, optimize,
                       problem_for_cooperativity, scaling_sweep)
from .oracle import (HilbertSpec, IntegrationError, ModelError,
                     validate_elimination)
from .params import (CONFIG_KEYS, ConfigError, check_validity,
                     decoherence_budget, params_from_mapping, read_config)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_COMMON_OPTIONAL = ("command", "label")

#: accepted config keys per subcommand (besides the common optional ones)
COMMAND_KEYS = {
    "evolve": {
        "required": set(CONFIG_KEYS),
        "optional": {"t_max", "n_steps", "max_extensions", "ref_rate_hz"},
    },
    "budget": {
        # grid keys tolerated so evolve configs can be re-used for budgeting
        "required": set(CONFIG_KEYS),
        "optional": {"t_max", "n_steps", "max_extensions", "ref_rate_hz"},
    },
    "oracle": {
        "required": set(CONFIG_KEYS) | {"atom_levels", "cavity_cutoff",
                                        "t_final", "n_times"},
        "optional": {"dt_full", "dt_intermediate", "compensate_stark"},
    },
    "optimize": {
        "required": {"n_atoms", "omega_ab", "kappa", "gamma_total"},
        "optional": {"g_a", "g_b", "gamma_split", "r_min", "r_max", "delta_min",
                     "delta_max", "delta1_min", "delta1_max", "restarts",
                     "max_evals", "seed", "n_steps", "fixed_delta"},
    },
    "sweep": {
        "required": {"n_atoms", "omega_ab", "cooperativities", "kappa_over_gamma"},
        "optional": {"g_a", "g_b", "gamma_split", "r_min", "r_max", "delta_min",
                     "delta_max", "delta1_min", "delta1_max", "restarts",
                     "max_evals", "seed", "n_steps"},
    },
}


def _check_keys(command: str, mapping: dict) -> None:
    spec = COMMAND_KEYS[command]
    allowed = spec["required"] | spec["optional"] | set(_COMMON_OPTIONAL)
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigError(f"unknown keys for '{command}': {', '.join(unknown)}")
    missing = sorted(spec["required"] - set(mapping))
    if missing:
        raise ConfigError(f"missing keys for '{command}': {', '.join(missing)}")
    declared = mapping.get("command")
    accepted = {command, "evolve"} if command == "budget" else {command}
    if declared is not None and declared not in accepted:
        raise ConfigError(f"config declares command = {declared!r}, invoked as {command!r}")


def _float(mapping: dict, key: str, default: float | None = None) -> float | None:
    if key not in mapping:
        return default
    try:
        return float(mapping[key])
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: not a number: {mapping[key]!r}") from exc


def _int(mapping: dict, key: str, default: int | None = None) -> int | None:
    if key not in mapping:
        return default
    try:
        return int(mapping[key])
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: not an integer: {mapping[key]!r}") from exc


def _float_list(mapping: dict, key: str) -> list[float]:
    try:
        return [float(tok) for tok in mapping[key].split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: not a comma-separated number list") from exc


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_payload(config: dict, payload: dict) -> str:
    doc = {"artifact": {"name": "cavspin", "version": __version__},
           "config": dict(sorted(config.items()))}
    doc.update(payload)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _csv_text(config: dict, rows) -> str:
    lines = [f"# cavspin {__version__}"]
    lines += [f"# {k} = {v}" for k, v in sorted(config.items())]
    lines += list(rows)
    return "\n".join(lines) + "\n"


def _fmt(x: float) -> str:
    return "%.17g" % x


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_evolve(config: dict, out_dir: str, ref_rate_hz: float | None) -> int:
    params = params_from_mapping(config)
    n_steps = _int(config, "n_steps", 400)
    if n_steps < 2:
        raise ConfigError("n_steps must be >= 2 (empty grid)")
    t_max = _float(config, "t_max")
    max_ext = _int(config, "max_extensions", 0)
    if ref_rate_hz is None:
        ref_rate_hz = _float(config, "ref_rate_hz")

    report = check_validity(params)
    for name, verdict in report.verdicts.items():
        if verdict != "pass":
            print(f"validity {verdict}: {name} = {getattr(report, name):.3g}",
                  file=sys.stderr)

    trace = evolve_squeezing(params, t_max=t_max, n_steps=n_steps,
                             max_extensions=max_ext)
    _atomic_write(os.path.join(out_dir, "trace.csv"),
                  _csv_text(config, trace_csv_rows(trace)))
    summary = {
        "min_xi2": trace.min_xi2,
        "t_min": trace.t_min,
        "xi2_initial": float(trace.xi2[0]),
        "t_max": float(trace.times[-1]),
        "n_steps": int(len(trace.times)),
        "truncated": trace.truncated,
        "truncation_reason": trace.truncation_reason,
        "validity_ratios": report.ratios(),
        "validity_verdicts": report.verdicts,
    }
    if ref_rate_hz:
        summary["ref_rate_hz"] = ref_rate_hz
        summary["t_min_seconds"] = trace.t_min / (2.0 * math.pi * ref_rate_hz)
    _atomic_write(os.path.join(out_dir, "summary.json"),
                  _json_payload(config, {"summary": summary}))
    print(f"min xi^2 = {trace.min_xi2:.6g} at t = {trace.t_min:.6g}"
          + (f" ({summary['t_min_seconds']:.3e} s)" if ref_rate_hz else ""))
    return EXIT_OK


def cmd_budget(config: dict, out_dir: str) -> int:
    params = params_from_mapping(config)
    n_gamma, n_kappa = decoherence_budget(params)
    rows = ["quantity,value",
            f"decayed_atoms,{_fmt(n_gamma)}",
            "lost_photons," + ("unbounded" if math.isinf(n_kappa) else _fmt(n_kappa))]
    print("\n".join(rows))
    payload = {"budget": {
        "decayed_atoms": n_gamma,
        "lost_photons": "unbounded" if math.isinf(n_kappa) else n_kappa,
        "n_atoms": params.n_atoms,
    }}
    _atomic_write(os.path.join(out_dir, "budget.json"), _json_payload(config, payload))
    return EXIT_OK


def cmd_oracle(config: dict, out_dir: str) -> int:
    params = params_from_mapping(config)
    spec = HilbertSpec(n_atoms=params.n_atoms,
                       atom_levels=_int(config, "atom_levels"),
                       cavity_cutoff=_int(config, "cavity_cutoff"))
    t_final = _float(config, "t_final")
    n_times = _int(config, "n_times")
    if n_times < 2 or t_final <= 0:
        raise ConfigError("need t_final > 0 and n_times >= 2")
    comp = _int(config, "compensate_stark", 1)
    times = np.linspace(0.0, t_final, n_times)
    report = validate_elimination(params, spec, times,
                                  dt_full=_float(config, "dt_full"),
                                  dt_intermediate=_float(config, "dt_intermediate"),
                                  compensate_stark=bool(comp))
    _atomic_write(os.path.join(out_dir, "validation.json"),
                  _json_payload(config, {"validation": report.to_json_dict()}))
    worst_fi = max(report.max_dev("fi", m) for m in ("jz", "jpp"))
    print(f"max deviation full vs intermediate (jz, jpp): {worst_fi:.3e}; "
          f"in validity regime: {report.in_validity_regime}")
    return EXIT_OK


def _problem_from_config(config: dict, seed_override: int | None,
                         need_rates: bool) -> OptimizationProblem:
    kwargs = dict(
        n_atoms=_int(config, "n_atoms"),
        omega_ab=_float(config, "omega_ab"),
        g_a=_float(config, "g_a", 1.0),
        g_b=_float(config, "g_b", 1.0),
    )
    if need_rates:
        kwargs["kappa"] = _float(config, "kappa")
        kwargs["gamma_total"] = _float(config, "gamma_total")
    if "gamma_split" in config:
        split = _float_list(config, "gamma_split")
        if len(split) != 3:
            raise ConfigError("gamma_split needs exactly three weights")
        kwargs["gamma_split"] = tuple(split)
    if "r_min" in config or "r_max" in config:
        kwargs["r_bounds"] = (_float(config, "r_min", 0.2), _float(config, "r_max", 30.0))
    if "delta_min" in config or "delta_max" in config:
        kwargs["delta_bounds"] = (_float(config, "delta_min", -4000.0),
                                  _float(config, "delta_max", 4000.0))
    if "delta1_min" in config or "delta1_max" in config:
        kwargs["delta1_bounds"] = (_float(config, "delta1_min", 1e4),
                                   _float(config, "delta1_max", 3e6))
    for key in ("restarts", "max_evals", "n_steps"):
        if key in config:
            kwargs[key] = _int(config, key)
    if "fixed_delta" in config:
        kwargs["fixed_delta"] = _float(config, "fixed_delta")
    seed = seed_override if seed_override is not None else _int(config, "seed", 2024)
    kwargs["seed"] = seed
    return OptimizationProblem(**kwargs)


def _report_dict(rep) -> dict:
    return {
        "xi2_min": rep.xi2_min,
        "r_opt": rep.r_opt,
        "delta_opt": rep.delta_opt,
        "delta1_opt": rep.delta1_opt,
        "t_min": rep.t_min,
        "omega_1": rep.omega_1,
        "n_evaluations": rep.n_evaluations,
        "validity_ratios": rep.validity_ratios,
    }


def cmd_optimize(config: dict, out_dir: str, seed: int | None) -> int:
    problem = _problem_from_config(config, seed, need_rates=True)
    rep = optimize(problem)
    _atomic_write(os.path.join(out_dir, "optimum.json"),
                  _json_payload(config, {"optimum": _report_dict(rep),
                                         "seed": problem.seed}))
    print(f"xi^2_min = {rep.xi2_min:.6g} at r = {rep.r_opt:.4g}, "
          f"delta = {rep.delta_opt:.4g}, delta_1 = {rep.delta1_opt:.6g}")
    return EXIT_OK


def _sweep_rows(result: SweepResult):
    yield "cooperativity,xi2_min,r_opt,delta_opt,delta1_opt,t_min,C_fixed_slope"
    for pt in result.points:
        if pt.report is None:
            continue
        r = pt.report
        yield ",".join([_fmt(pt.cooperativity), _fmt(r.xi2_min), _fmt(r.r_opt),
                        _fmt(r.delta_opt), _fmt(r.delta1_opt), _fmt(r.t_min),
                        _fmt(result.prefactor_fixed_slope)])


def cmd_sweep(config: dict, out_dir: str, seed: int | None) -> int:
    template = _problem_from_config(config, seed, need_rates=False)
    coops = _float_list(config, "cooperativities")
    if not coops:
        raise ConfigError("cooperativities list is empty")
    ratio = _float(config, "kappa_over_gamma")
    result = scaling_sweep(coops, template, kappa_over_gamma=ratio)
    _atomic_write(os.path.join(out_dir, "sweep.csv"),
                  _csv_text(config, _sweep_rows(result)))
    failures = {f"{p.cooperativity:g}": p.error for p in result.points
                if p.report is None}
    payload = {"fit": {
        "prefactor_fixed_slope": result.prefactor_fixed_slope,
        "free_slope": result.free_slope,
        "free_intercept": result.free_intercept,
        "points": [{"cooperativity": p.cooperativity,
                    "xi2_min": None if p.report is None else p.report.xi2_min,
                    "error": p.error}
                   for p in result.points],
    }, "seed": template.seed}
    _atomic_write(os.path.join(out_dir, "fit.json"), _json_payload(config, payload))
    print(f"fixed-slope prefactor = {result.prefactor_fixed_slope:.4g}, "
          f"free slope = {result.free_slope:.4g}")
    if failures:
        print(f"failed points: {failures}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_validate(config_path: str) -> int:
    mapping = read_config(config_path)
    command = mapping.get("command")
    if command is None:
        raise ConfigError("config has no 'command' key to validate against")
    if command not in COMMAND_KEYS:
        raise ConfigError(f"unknown command {command!r}")
    _check_keys(command, mapping)
    if set(CONFIG_KEYS) <= set(mapping):
        params_from_mapping(mapping)
    print(f"config OK for command '{command}':")
    for key, value in sorted(mapping.items()):
        print(f"  {key} = {value}")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavspin",
        description="Spin squeezing of driven atoms in a lossy cavity: "
                    "moment dynamics, oracles and optimization.")
    parser.add_argument("--version", action="version", version=f"cavspin {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in ("evolve", "optimize", "sweep", "oracle", "budget", "validate"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="key = value config file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="optimizer seed override")
        p.add_argument("--ref-rate-hz", type=float, default=None,
                       help="reference rate nu in Hz (unit rate = 2*pi*nu)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.subcommand == "validate":
            return cmd_validate(args.config)
        config = read_config(args.config)
        _check_keys(args.subcommand, config)
        if args.subcommand == "evolve":
            return cmd_evolve(config, args.out, args.ref_rate_hz)
        if args.subcommand == "budget":
            return cmd_budget(config, args.out)
        if args.subcommand == "oracle":
            return cmd_oracle(config, args.out)
        if args.subcommand == "optimize":
            return cmd_optimize(config, args.out, args.seed)
        if args.subcommand == "sweep":
            return cmd_sweep(config, args.out, args.seed)
        raise ConfigError(f"unhandled subcommand {args.subcommand!r}")
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ModelError, IntegrationError, PropagationError, ValueError,
            RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
