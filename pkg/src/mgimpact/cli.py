"""Command-line front end.

Subcommands:
  solve        print the closed-form stationary solution for one (ns, np)
  critical     print the critical speculator density for a producer density
  simulate     run one raw ensemble and persist its CSVs
  impact       run a figure preset (fig1, fig2, fig4) at a chosen scale
  slope-vs-ns  measured saturation slope against theory (fig3 or phase grid)
  collapse     run the order-size collapse protocol and print the metric

Global flags --seed/--workers/--out-dir/--config apply to every subcommand;
--config points at an INI file whose key=value entries provide defaults that
explicit command-line flags override.  Exit codes: 0 success, 1 configuration
or usage error, 2 numerical or measurement error.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import ensemble as ens
from . import replica
from .engine import GameConfig
from .errors import MGError, ConfigurationError, MeasurementError, SymmetricPhaseError
from .metaorder import MetaOrderSpec

# Caption-scale bundles; scale s divides P and the realization count while
# keeping T and every window fixed in units of P, which preserves the curve
# shapes because all characteristic times grow linearly with P.
@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    ns_values: tuple[float, ...]
    h_values: tuple[float, ...] = (1.0,)
    P: int = 400
    T_over_P: int = 5
    realizations: int = 5000

    def scaled(self, scale: float) -> "ExperimentPreset":
        if scale <= 0:
            raise ConfigurationError("--scale must be positive")
        return dataclasses.replace(
            self,
            P=max(8, int(round(self.P / scale))),
            realizations=max(2, int(round(self.realizations / scale))),
        )

    @property
    def T(self) -> int:
        return self.T_over_P * self.P


PRESETS = {
    "fig1": ExperimentPreset(name="fig1", ns_values=(1.0, 5.0)),
    "fig2": ExperimentPreset(name="fig2", ns_values=(1.0,), h_values=(1.0, 2.0, 4.0)),
    "fig3": ExperimentPreset(name="fig3", ns_values=(0.5, 1.0, 2.0, 3.0)),
    "fig4": ExperimentPreset(name="fig4", ns_values=(1.0, 2.0, 5.0)),
    "phase": ExperimentPreset(name="phase",
                              ns_values=(0.5, 1.0, 2.0, 3.0, 3.5, 4.0)),
}


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigurationError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="mgimpact", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--seed", type=int, default=None, help="master seed")
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--out-dir", default=None)
    parser.add_argument("--config", default=None, metavar="FILE",
                        help="INI file with key=value defaults")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p_solve = sub.add_parser("solve", help="closed-form solution at (ns, np)")
    p_solve.add_argument("--ns", type=float, default=None)
    p_solve.add_argument("--np", dest="np_", type=float, default=None)

    p_crit = sub.add_parser("critical", help="critical speculator density")
    p_crit.add_argument("--np", dest="np_", type=float, default=None)

    p_sim = sub.add_parser("simulate", help="one raw ensemble")
    p_sim.add_argument("--P", type=int, default=None)
    p_sim.add_argument("--ns", type=float, default=None)
    p_sim.add_argument("--np", dest="np_", type=float, default=None)
    p_sim.add_argument("--h", type=float, default=None)
    p_sim.add_argument("--T", type=int, default=None)
    p_sim.add_argument("--t-max", type=int, default=None)
    p_sim.add_argument("--realizations", type=int, default=None)
    p_sim.add_argument("--baseline-window", type=int, default=None)
    p_sim.add_argument("--burn-in", type=int, default=None)

    p_imp = sub.add_parser("impact", help="figure preset at a chosen scale")
    p_imp.add_argument("--preset", choices=("fig1", "fig2", "fig4"), default=None)
    p_imp.add_argument("--scale", type=float, default=None)
    p_imp.add_argument("--realizations", type=int, default=None,
                       help="override the preset realization count")

    p_slope = sub.add_parser("slope-vs-ns", help="saturation slope against theory")
    p_slope.add_argument("--preset", choices=("fig3", "phase"), default=None)
    p_slope.add_argument("--scale", type=float, default=None)
    p_slope.add_argument("--realizations", type=int, default=None)

    p_col = sub.add_parser("collapse", help="order-size collapse metric")
    p_col.add_argument("--scale", type=float, default=None)
    p_col.add_argument("--realizations", type=int, default=None)

    return parser


def _load_file_defaults(path: str) -> dict:
    """Flatten an INI file into one key=value dict (later sections win)."""
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigurationError(f"cannot read config file {path!r}")
    merged = dict(cp.defaults())
    for section in cp.sections():
        merged.update(cp.items(section))
    return {k.replace("-", "_"): v for k, v in merged.items()}


_FILE_KEY_TYPES = {
    "seed": int, "workers": int, "out_dir": str, "ns": float, "np_": float,
    "p": int, "h": float, "t": int, "t_max": int, "realizations": int,
    "baseline_window": int, "burn_in": int, "scale": float, "preset": str,
}


def _setting(args, name: str, file_defaults: dict, fallback=None):
    """Resolution order: explicit flag, config file, fallback."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    key = name.lower()
    if key in file_defaults:
        caster = _FILE_KEY_TYPES.get(key, str)
        return caster(file_defaults[key])
    return fallback


def _print(line: str):
    sys.stdout.write(line + "\n")


def _theory_csv_lines(solutions, ns_star):
    yield "ns,np,zeta,chi,H_per_Ns,ns_star"
    for sol in solutions:
        yield (f"{sol.n_s:.10g},{sol.n_p:.10g},{sol.zeta:.10g},"
               f"{sol.chi:.10g},{sol.h_per_ns:.10g},{ns_star:.10g}")


def _cmd_solve(args, file_defaults) -> int:
    n_s = _setting(args, "ns", file_defaults, 1.0)
    n_p = _setting(args, "np_", file_defaults, 1.0)
    sol = replica.solve(n_s, n_p)
    _print(json.dumps(sol.as_dict(), sort_keys=True))
    out_dir = _setting(args, "out_dir", file_defaults)
    if out_dir:
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        lines = _theory_csv_lines([sol], replica.critical_ns(n_p))
        (path / "theory.csv").write_text("\n".join(lines) + "\n")
    return 0


def _cmd_critical(args, file_defaults) -> int:
    n_p = _setting(args, "np_", file_defaults, 1.0)
    _print(f"{replica.critical_ns(n_p):.12f}")
    return 0


def _ensemble_config(args, file_defaults, *, P, n_s, n_p, h, T, realizations,
                     t_max=None, baseline_window=None, burn_in=None,
                     stream_offset=0) -> ens.EnsembleConfig:
    return ens.EnsembleConfig(
        game=GameConfig(P=P, n_s=n_s, n_p=n_p,
                        seed=_setting(args, "seed", file_defaults, 0)),
        metaorder=MetaOrderSpec(h=h, T=T),
        realizations=realizations,
        t_max=t_max,
        baseline_window=baseline_window,
        burn_in=burn_in,
        workers=_setting(args, "workers", file_defaults, 1),
        stream_offset=stream_offset,
    )


def _cmd_simulate(args, file_defaults) -> int:
    P = _setting(args, "P", file_defaults, 128)
    T = _setting(args, "T", file_defaults, 5 * P)
    config = _ensemble_config(
        args, file_defaults,
        P=P,
        n_s=_setting(args, "ns", file_defaults, 1.0),
        n_p=_setting(args, "np_", file_defaults, 1.0),
        h=_setting(args, "h", file_defaults, 1.0),
        T=T,
        realizations=_setting(args, "realizations", file_defaults, 500),
        t_max=_setting(args, "t_max", file_defaults),
        baseline_window=_setting(args, "baseline_window", file_defaults),
        burn_in=_setting(args, "burn_in", file_defaults),
    )
    result = ens.run_ensemble(config)
    out_dir = _setting(args, "out_dir", file_defaults, "out")
    manifest = ens.save_result(result, out_dir, name="simulate")
    _print(json.dumps({"slope": result.slope, "permanent": result.permanent,
                       "cost_ratio": result.cost_ratio,
                       "config_sha1": manifest["config_sha1"],
                       "out_dir": str(out_dir)}, sort_keys=True))
    return 0


def _cmd_impact(args, file_defaults) -> int:
    name = _setting(args, "preset", file_defaults, "fig1")
    preset = PRESETS[name].scaled(_setting(args, "scale", file_defaults, 1.0))
    realizations = _setting(args, "realizations", file_defaults,
                            preset.realizations)
    out_dir = _setting(args, "out_dir", file_defaults, "out")
    block = 0
    for n_s in preset.ns_values:
        for h in preset.h_values:
            config = _ensemble_config(
                args, file_defaults, P=preset.P, n_s=n_s, n_p=1.0, h=h,
                T=preset.T, realizations=realizations,
                stream_offset=block * realizations)
            block += 1
            result = ens.run_ensemble(config)
            tag = f"{name}_ns{n_s:g}_h{h:g}"
            ens.save_result(result, out_dir, name=tag)
            _print(f"{tag}: slope={result.slope[0]:.4f} "
                   f"permanent={'n/a' if result.permanent is None else format(result.permanent[0], '.4f')} "
                   f"realizations={result.realizations_used}")
    return 0


def _cmd_slope_vs_ns(args, file_defaults) -> int:
    name = _setting(args, "preset", file_defaults, "fig3")
    preset = PRESETS[name].scaled(_setting(args, "scale", file_defaults, 1.0))
    realizations = _setting(args, "realizations", file_defaults,
                            preset.realizations)
    out_dir = Path(_setting(args, "out_dir", file_defaults, "out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    ns_star = replica.critical_ns(1.0)

    rows = ["ns,slope,slope_stderr,theory_response,chi,ns_star"]
    solutions = []
    for idx, n_s in enumerate(preset.ns_values):
        config = _ensemble_config(
            args, file_defaults, P=preset.P, n_s=n_s, n_p=1.0, h=1.0,
            T=preset.T, realizations=realizations,
            stream_offset=idx * realizations)
        result = ens.run_ensemble(config)
        if n_s < ns_star:
            sol = replica.solve(n_s, 1.0)
            solutions.append(sol)
            theory, chi = sol.rho, sol.chi
        else:
            theory, chi = 0.0, float("inf")
        rows.append(f"{n_s:g},{result.slope[0]:.10g},{result.slope[1]:.10g},"
                    f"{theory:.10g},{chi:.10g},{ns_star:.10g}")
        _print(rows[-1])
    (out_dir / f"{name}_slope.csv").write_text("\n".join(rows) + "\n")
    if solutions:
        lines = _theory_csv_lines(solutions, ns_star)
        (out_dir / f"{name}_theory.csv").write_text("\n".join(lines) + "\n")
    return 0


def _cmd_collapse(args, file_defaults) -> int:
    preset = PRESETS["fig2"].scaled(_setting(args, "scale", file_defaults, 1.0))
    realizations = _setting(args, "realizations", file_defaults,
                            preset.realizations)
    base = _ensemble_config(args, file_defaults, P=preset.P, n_s=1.0, n_p=1.0,
                            h=preset.h_values[0], T=preset.T,
                            realizations=realizations)
    swept = ens.sweep(base, "h", list(preset.h_values))
    metric = ens.collapse_metric([res for _, res in swept])
    _print(f"collapse_metric={metric:.4f}")
    out_dir = _setting(args, "out_dir", file_defaults)
    if out_dir:
        for h, res in swept:
            ens.save_result(res, out_dir, name=f"collapse_h{h:g}")
    return 0


_COMMANDS = {
    "solve": _cmd_solve,
    "critical": _cmd_critical,
    "simulate": _cmd_simulate,
    "impact": _cmd_impact,
    "slope-vs-ns": _cmd_slope_vs_ns,
    "collapse": _cmd_collapse,
}


def run_cli(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 1
        file_defaults = _load_file_defaults(args.config) if args.config else {}
        return _COMMANDS[args.command](args, file_defaults)
    except ConfigurationError as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return 1
    except (MeasurementError, SymmetricPhaseError, ArithmeticError, RuntimeError) as exc:
        sys.stderr.write(f"numerical error: {exc}\n")
        return 2
    except MGError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
