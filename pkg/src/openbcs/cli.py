"""Command-line front end.

Exit codes: 0 success, 1 check failure, 2 config error, 3 I/O error,
4 numerical failure.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import sys
from typing import Iterable, Sequence

import numpy as np

from openbcs import generator, meanfield, phase, reservoir, spin_algebra
from openbcs.config import ConfigError, RunConfig, build_config, parse_value, read_config_file

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3, 4
SCHEMA_VERSION = 1


class OutputError(OSError):
    pass


class NumericFailure(ArithmeticError):
    pass


def fmt(value) -> str:
    """CSV float format: 17 significant digits, scientific."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return "nan"
    return f"{v:.16e}"


def csv_text(cfg: RunConfig, header: Sequence[str], rows: Iterable[Sequence],
             trailer: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    buf.write(cfg.header() + "\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    for line in trailer:
        buf.write(f"# {line}\n")
    return buf.getvalue()


def emit(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def reservoir_spec(cfg: RunConfig, beta: float | None = None) -> reservoir.ReservoirSpec:
    return reservoir.ReservoirSpec(
        beta=cfg.resolved_beta() if beta is None else beta, mass=cfg.mass,
        f_width=cfg.f_width, f_amplitude=cfg.f_amplitude, test_function=cfg.test_function,
        eta=cfg.eta, n_radial=cfg.n_radial, p_max=cfg.p_max, k_B=cfg.k_B)


def config_point(cfg: RunConfig) -> meanfield.MeanFieldPoint:
    return meanfield.MeanFieldPoint(cfg.x, cfg.y, cfg.epsilon, cfg.g)


def _save_svg(fig, path: str):
    import matplotlib.pyplot as plt

    try:
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as exc:
        raise OutputError(f"cannot write plot {path}: {exc}") from exc
    finally:
        plt.close(fig)


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "openbcs"
    import matplotlib.pyplot as plt

    return plt


# --- subcommands --------------------------------------------------------------------

def cmd_gap(cfg: RunConfig) -> dict:
    beta = cfg.resolved_beta()
    sol = phase.gap_solution(beta, cfg.g, cfg.epsilon, cfg.k_B)
    return {
        "schema": SCHEMA_VERSION,
        "beta": beta,
        "g": cfg.g,
        "epsilon_tilde": cfg.epsilon,
        "k_B": cfg.k_B,
        "phase": sol.phase,
        "xi": sol.xi_star,
        "omega": sol.omega_star,
        "x": sol.x,
        "y": sol.y,
        "delta": sol.delta,
        "t_critical": sol.t_critical,
        "tanh_residual": sol.tanh_residual,
        "status": sol.status,
    }


PHASE_HEADER = ("T", "g", "epsilon", "phase", "xi", "omega", "x", "y", "delta", "status")


def cmd_phase_diagram(cfg: RunConfig) -> str:
    rows = phase.phase_diagram(cfg.t_grid, cfg.g_grid, cfg.epsilon, cfg.k_B)
    table = [(temp, r.g, r.epsilon_tilde, r.phase, r.xi_star, r.omega_star, r.x, r.y,
              r.delta, r.status)
             for temp, r in zip((t for t in cfg.t_grid for _ in cfg.g_grid), rows)]
    if cfg.plot:
        plt = _pyplot()
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for g in cfg.g_grid:
            pts = [(t, r.delta if r.delta is not None else 0.0)
                   for t, r in zip((t for t in cfg.t_grid for _ in cfg.g_grid), rows) if r.g == g]
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker=".", label=f"g = {g:g}")
        ax.set_xlabel("T")
        ax.set_ylabel("gap Delta")
        ax.legend()
        fig.tight_layout()
        _save_svg(fig, cfg.plot)
    return csv_text(cfg, PHASE_HEADER, table)


GENERATOR_HEADER = ("x", "y", "f1_closed", "f1_oracle", "f2_closed", "f2_oracle", "res1", "res2")


def generator_rows(cfg: RunConfig):
    """Reports for the (x, y) grid plus the gap-solution point; skipped points listed."""
    spec = reservoir_spec(cfg)
    points, skipped = [], []
    for x in cfg.x_grid:
        for y in cfg.y_grid:
            if y <= 0 or x * x + 4 * y > 1:
                skipped.append(f"skipped x={x!r} y={y!r}: inadmissible")
                continue
            points.append(meanfield.MeanFieldPoint(x, y, cfg.epsilon, cfg.g))
    sol = phase.gap_solution(spec.beta, cfg.g, cfg.epsilon, cfg.k_B)
    if sol.y is not None and sol.y > 0:
        points.append(meanfield.MeanFieldPoint(sol.x, sol.y, cfg.epsilon, cfg.g))
    reports = []
    for pt in points:
        omega, nu = meanfield.pulsation(pt)
        try:
            gammas = reservoir.gamma_resonant(spec, omega, nu)
            reports.append(generator.oracle_compare(pt, gammas))
        except (ValueError, ArithmeticError) as exc:
            skipped.append(f"skipped x={pt.x!r} y={pt.y!r}: {exc}")
    return reports, skipped


def cmd_generator_check(cfg: RunConfig) -> tuple[str, bool]:
    reports, skipped = generator_rows(cfg)
    table = [(r.point.x, r.point.y, r.f1_closed, r.f1_oracle, r.f2_closed, r.f2_oracle,
              r.res1, r.res2) for r in reports]
    rel = [v for r in reports for v, is_rel in ((r.res1, r.res1_relative),
                                                (r.res2, r.res2_relative)) if is_rel]
    absolute = [max(r.abs1, r.abs2) for r in reports]
    ok = all(r.passes(cfg.threshold) for r in reports)
    trailer = list(skipped)
    trailer.append(f"summary: points={len(reports)} max_relative_residual={fmt(max(rel, default=0.0))} "
                   f"max_absolute_residual={fmt(max(absolute, default=0.0))} "
                   f"threshold={fmt(cfg.threshold)} pass={'true' if ok else 'false'}")
    return csv_text(cfg, GENERATOR_HEADER, table, trailer), ok


FINITE_N_HEADER = ("N", "norm_comm_S_sigma", "res_H_R", "res_H_S0", "evolution_gap")


def finite_n_row(cfg: RunConfig, n: int, tau: np.ndarray, target: complex) -> tuple:
    mx = spin_algebra.max_abs
    comm = spin_algebra.commutator
    s_plus = spin_algebra.intensive("plus", n)
    sigma = spin_algebra.local_pauli("plus", 1, n)
    norm = spin_algebra.operator_norm(comm(s_plus, spin_algebra.local_pauli("zero", 1, n)))
    h = spin_algebra.bcs_hamiltonian(cfg.epsilon, cfg.g, n)
    res_r = mx(comm(h, spin_algebra.intensive("R", n)).matrix)
    res_s0 = mx(comm(h, spin_algebra.intensive("zero", n)).matrix)
    state = np.ones((1, 1), dtype=complex)
    for _ in range(n):
        state = np.kron(state, tau)
    evolved = spin_algebra.heisenberg_evolve(h, sigma, cfg.t_eval)
    gap = abs(np.trace(state @ evolved.matrix) - target)
    return n, norm, res_r, res_s0, gap


def cmd_finite_n(cfg: RunConfig) -> str:
    pt = config_point(cfg)
    tau = meanfield.meanfield_state(pt)
    target = complex(np.trace(tau @ meanfield.sigma_plus_evolution(pt, cfg.t_eval)))
    rows, notes = [], []
    for n in cfg.n_list:
        try:
            rows.append(finite_n_row(cfg, n, tau, target))
        except (spin_algebra.SiteLimitError, MemoryError) as exc:
            notes.append(f"N={n} skipped: {exc}")
    return csv_text(cfg, FINITE_N_HEADER, rows, notes)


SL_HEADER = ("lambda", "I_over_t_real", "I_over_t_imag", "abs_err_vs_limit")


def sl_converge_rows(cfg: RunConfig):
    spec = reservoir_spec(cfg)
    pt = config_point(cfg)
    tau = meanfield.meanfield_state(pt)
    gammas = reservoir.gamma_full(spec, pt, eta=0.0)
    limit = reservoir.stochastic_limit_rate(pt, gammas, tau)
    if not np.isfinite(limit):
        raise NumericFailure("stochastic-limit rate is not finite at this point")
    rows = []
    for lam in cfg.lambda_ladder:
        val = reservoir.second_order_term(spec, pt, tau, lam, cfg.time) / cfg.time
        rows.append((lam, val.real, val.imag, abs(val - limit)))
    rows.append((0.0, limit.real, limit.imag, 0.0))
    return rows, limit


def cmd_sl_converge(cfg: RunConfig) -> str:
    rows, _ = sl_converge_rows(cfg)
    if cfg.plot:
        plt = _pyplot()
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.loglog([r[0] for r in rows[:-1]], [r[3] for r in rows[:-1]], marker="o")
        ax.set_xlabel("lambda")
        ax.set_ylabel("|I/t - limit|")
        fig.tight_layout()
        _save_svg(fig, cfg.plot)
    return csv_text(cfg, SL_HEADER, rows)


EVOLVE_HEADER = ("t", "re_00", "im_00", "re_01", "im_01", "re_10", "im_10", "re_11", "im_11",
                 "ode_residual")


def _time_grid(cfg: RunConfig) -> list[float]:
    n = int(round(cfg.t_max / cfg.dt))
    return [i * cfg.dt for i in range(n + 1)]


def cmd_evolve(cfg: RunConfig) -> str:
    pt = config_point(cfg)
    rows = []
    for t in _time_grid(cfg):
        sp = meanfield.sigma_plus_evolution(pt, t)
        entries = [v for z in sp.ravel() for v in (z.real, z.imag)]
        rows.append((t, *entries, meanfield.classical_flow_residual(pt, t)))
    return csv_text(cfg, EVOLVE_HEADER, rows)


FLOW_HEADER = ("t", "x", "y", "f1", "f2", "status")


def cmd_flow(cfg: RunConfig) -> str:
    spec = reservoir_spec(cfg)
    rows = phase.meanfield_flow(config_point(cfg), spec, cfg.t_max, cfg.dt)
    return csv_text(cfg, FLOW_HEADER, [(r.t, r.x, r.y, r.f1, r.f2, r.status) for r in rows])


# --- argument handling ----------------------------------------------------------------

_FLAG_KEYS = {
    "g": "g", "epsilon": "epsilon", "k_B": "k_B", "beta": "beta", "temperature": "temperature",
    "mass": "mass", "f_width": "f_width", "f_amplitude": "f_amplitude",
    "test_function": "test_function", "eta": "eta", "n_radial": "n_radial", "p_max": "p_max",
    "x": "x", "y": "y", "t_grid": "t_grid", "g_grid": "g_grid", "x_grid": "x_grid",
    "y_grid": "y_grid", "n_list": "n_list", "lambda_ladder": "lambda_ladder", "time": "time",
    "t_eval": "t_eval", "t_max": "t_max", "dt": "dt", "threshold": "threshold",
    "output": "output", "plot": "plot",
}

COMMANDS = {
    "gap": "solve the gap equation (JSON)",
    "phase-diagram": "sweep temperature and coupling (CSV, optional SVG)",
    "generator-check": "closed-form generator vs first-principles oracle (CSV)",
    "finite-n": "exact finite-N checks (CSV)",
    "sl-converge": "second-order term along a lambda ladder (CSV, optional SVG)",
    "evolve": "semiclassical sigma^+(t) and its ODE residual (CSV)",
    "flow": "integrate the (x, y) mean-field flow (CSV)",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="openbcs", description="Open BCS model in the stochastic limit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_text in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat 'key = value' config file")
        for key in _FLAG_KEYS:
            flag = "--" + key.replace("_", "-")
            aliases = [flag] if flag == "--" + key else [flag, "--" + key]
            p.add_argument(*aliases, dest=key, default=None, metavar=key.upper())
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    file_values = read_config_file(args.config) if args.config else {}
    overrides = {key: parse_value(key, getattr(args, key))
                 for key in _FLAG_KEYS if getattr(args, key) is not None}
    return build_config(file_values, overrides)


def run(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except (ConfigError, OSError, TypeError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    status = EXIT_OK
    try:
        if args.command == "gap":
            text = json.dumps(cmd_gap(cfg), indent=2, allow_nan=True) + "\n"
        elif args.command == "phase-diagram":
            text = cmd_phase_diagram(cfg)
        elif args.command == "generator-check":
            text, ok = cmd_generator_check(cfg)
            status = EXIT_OK if ok else EXIT_CHECK
        elif args.command == "finite-n":
            text = cmd_finite_n(cfg)
        elif args.command == "sl-converge":
            text = cmd_sl_converge(cfg)
        elif args.command == "evolve":
            text = cmd_evolve(cfg)
        else:
            text = cmd_flow(cfg)
        emit(text, cfg.output)
    except OutputError as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return EXIT_IO
    except (reservoir.QuadratureError, NumericFailure, ArithmeticError,
            np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except ValueError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    return status


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
