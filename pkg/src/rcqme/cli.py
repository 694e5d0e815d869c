"""Command-line front end.

Subcommands:
  sweep       run a parameter sweep from a preset or a key=value config file
  converge-m  truncation-convergence table for one junction
  eff-params  effective-parameter grid (splitting and dressed couplings)
  verify      fast internal cross-checks (kernel equivalence, closed forms)

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from .bath import BathSpec, kernel_equivalence_residual
from .hamiltonian import (
    JunctionModel,
    build_enlarged,
    delta_eff_closed_form,
    diagonalize,
    effective_sb,
)
from .methods import bmr_closed_form, current_bmr
from .redfield import build_liouvillian, setup_junction, solve_junction, steady_state
from .sweep import (
    PRESET_NAMES,
    ConfigError,
    apply_overrides,
    config_from_text,
    m_convergence_report,
    preset,
    run_sweep,
)


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as config errors (exit 1)."""

    def error(self, message):
        raise ConfigError(message)


def build_parser() -> _Parser:
    parser = _Parser(
        prog="rcqme",
        description="Steady-state heat currents of a strongly coupled "
                    "two-bath spin junction (RC-mapped Redfield, "
                    "weak-coupling baseline, effective closed form).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser(
        "sweep", help="run a parameter sweep and write a CSV",
        description="Run a sweep from --preset or --config; trailing "
                    "key=value pairs override individual config fields.")
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--preset", choices=PRESET_NAMES,
                       help="named sweep configuration")
    group.add_argument("--config", metavar="PATH",
                       help="flat key=value configuration file")
    sp.add_argument("overrides", nargs="*", metavar="key=value",
                    help="field overrides, e.g. points=30 output=out.csv")
    sp.add_argument("--output", metavar="PATH", help="CSV output path")
    sp.add_argument("--workers", type=int, default=1, metavar="N",
                    help="parallel workers (output bytes are identical "
                         "for any value)")
    sp.add_argument("--tol", type=float, metavar="X",
                    help="effective-parameter convergence tolerance")
    sp.add_argument("--m-max", type=int, metavar="N",
                    help="truncation ceiling for effective parameters")
    sp.set_defaults(func=_cmd_sweep)

    cp = sub.add_parser(
        "converge-m", help="truncation-convergence report",
        description="Solve one junction at increasing truncation and report "
                    "current, relative change and wall time per level.")
    cp.add_argument("--preset", choices=PRESET_NAMES, default="fig4",
                    help="base junction parameters (default fig4)")
    cp.add_argument("--coupling", type=float, default=4.0, metavar="X",
                    help="coupling strength lambda (default 4)")
    cp.add_argument("--m-list", default="2,3,4,5", metavar="M1,M2,...",
                    help="ascending truncation levels (default 2,3,4,5)")
    cp.add_argument("--output", metavar="PATH", help="optional CSV path")
    cp.add_argument("--dump-debug", action="store_true",
                    help="write eigenvalues, couplings, generator singular "
                         "values and the steady state per level (slow: a "
                         "full SVD per truncation)")
    cp.set_defaults(func=_cmd_converge_m)

    ep = sub.add_parser(
        "eff-params", help="effective splitting and dressed couplings grid",
        description="Tabulate delta_eff(lambda), f_hot, f_cold and the "
                    "truncation used, on the grid of the chosen preset.")
    ep.add_argument("--preset", choices=PRESET_NAMES, default="fig3")
    ep.add_argument("overrides", nargs="*", metavar="key=value")
    ep.add_argument("--output", metavar="PATH")
    ep.add_argument("--workers", type=int, default=1, metavar="N")
    ep.add_argument("--tol", type=float, metavar="X")
    ep.add_argument("--m-max", type=int, metavar="N")
    ep.set_defaults(func=_cmd_eff_params)

    vp = sub.add_parser(
        "verify", help="fast internal cross-checks",
        description="Kernel equivalence of the two spectral-density "
                    "families, the effective-splitting closed form against "
                    "direct diagonalization, and the weak-coupling solver "
                    "against its closed form.")
    vp.set_defaults(func=_cmd_verify)
    return parser


def _finalize_config(config, args):
    if getattr(args, "overrides", None):
        config = apply_overrides(config, args.overrides)
    if getattr(args, "output", None):
        config = replace(config, output=args.output)
    if getattr(args, "tol", None) is not None:
        config = replace(config, tol=args.tol)
    if getattr(args, "m_max", None) is not None:
        config = replace(config, m_max=args.m_max)
    return config


def _print_summary(summary):
    print(f"wrote {summary.rows} rows to {summary.output}")
    for column, at, value in summary.peaks:
        print(f"  peak {column}: {value:.6g} at {at:.6g}")
    for failure in summary.failures:
        print(f"  failed {failure}")


def _cmd_sweep(args) -> int:
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}")
        config = config_from_text(text)
    else:
        config = preset(args.preset)
    config = _finalize_config(config, args)
    summary = run_sweep(config, workers=args.workers)
    _print_summary(summary)
    return 0 if summary.ok else 2


def _cmd_eff_params(args) -> int:
    config = replace(preset(args.preset), sweep_kind="eff_params",
                     methods=("effsb",))
    config = _finalize_config(config, args)
    summary = run_sweep(config, workers=args.workers)
    _print_summary(summary)
    return 0 if summary.ok else 2


def _parse_m_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"bad m-list {text!r}; expected e.g. 2,3,4,5")


def _write_matrix(fh, name: str, matrix: np.ndarray):
    fh.write(f"# {name} shape={matrix.shape[0]}x{matrix.shape[1] if matrix.ndim > 1 else 1}\n")
    rows = np.atleast_2d(matrix)
    for row in rows:
        fh.write(" ".join(f"{x:.17g}" for x in row) + "\n")


def _dump_debug(model, m, stem: str):
    path = f"{stem}_debug_M{m}.txt"
    enlarged = build_enlarged(model, m)
    spec = diagonalize(enlarged)
    setup, _ = setup_junction(model, m)
    lv = build_liouvillian(setup)
    singular = np.linalg.svd(lv, compute_uv=False)
    sol = steady_state(lv)
    with open(path, "w", newline="\n") as fh:
        _write_matrix(fh, "hamiltonian", enlarged.hamiltonian)
        _write_matrix(fh, "eigenvalues", spec.eigenvalues)
        _write_matrix(fh, "coupling_hot_d", spec.coupling_hot_d)
        _write_matrix(fh, "coupling_cold_d", spec.coupling_cold_d)
        _write_matrix(fh, "generator_singular_values", singular)
        _write_matrix(fh, "rho_real", sol.rho.real)
        _write_matrix(fh, "rho_imag", sol.rho.imag)
    print(f"  debug dump: {path}")


def _cmd_converge_m(args) -> int:
    ms = _parse_m_list(args.m_list)
    config = preset(args.preset)
    base = config.base_model()
    model = replace(base,
                    hot=replace(base.hot, coupling=args.coupling),
                    cold=replace(base.cold, coupling=args.coupling))
    rows = m_convergence_report(model, ms)
    print(f"{'M':>3} {'J_hot':>24} {'rel_change':>12} {'wall_s':>9}")
    for row in rows:
        print(f"{row.m:>3} {row.current:>24.17g} "
              f"{row.rel_change:>12.3e} {row.wall_time_s:>9.3f}")
    if args.output:
        with open(args.output, "w", newline="\n") as fh:
            fh.write("m (levels),J_hot (Delta^2),rel_change (dimensionless),"
                     "wall_time (s)\n")
            for row in rows:
                fh.write(f"{row.m},{row.current:.17g},{row.rel_change:.17g},"
                         f"{row.wall_time_s:.17g}\n")
        print(f"wrote {args.output}")
    if args.dump_debug:
        stem = (args.output.rsplit(".", 1)[0] if args.output
                else "converge_m")
        for m in ms:
            if m >= 2:
                _dump_debug(model, m, stem)
    return 0


def _check(name: str, value: float, bound: float, lines: list[str]) -> bool:
    ok = value < bound
    lines.append(f"{'PASS' if ok else 'FAIL'} {name}: {value:.3e} "
                 f"(bound {bound:.0e})")
    return ok


def _cmd_verify(args) -> int:
    lines: list[str] = []
    all_ok = True

    # spectral-density kernel equivalence on the standard junctions
    for label, omega_rc, gamma in (("omega28", 28.0, 0.0071 / np.pi),
                                   ("omega10", 10.0, 0.005),
                                   ("omega5", 5.0, 0.005)):
        bath = BathSpec(coupling=1.0, omega_rc=omega_rc, gamma=gamma,
                        cutoff=1000 * np.pi, temperature=1.0)
        grid = np.geomspace(1e-2, 5 * omega_rc, 50)
        residual = float(np.max(kernel_equivalence_residual(grid, bath)))
        all_ok &= _check(f"kernel equivalence [{label}]", residual, 1e-8,
                         lines)

    # effective-splitting closed form against direct diagonalization
    worst = 0.0
    for lam in np.linspace(0.0, 14.0, 29):
        closed = delta_eff_closed_form(1.0, 28.0, lam)
        bath_on = BathSpec(coupling=lam, omega_rc=28.0, gamma=1e-3,
                           cutoff=1000 * np.pi, temperature=1.0)
        bath_off = BathSpec(coupling=0.0, omega_rc=28.0, gamma=1e-3,
                            cutoff=1000 * np.pi, temperature=1.0)
        spec = diagonalize(build_enlarged(
            JunctionModel(epsilon=0.0, delta=1.0, hot=bath_on, cold=bath_off),
            2))
        numeric = effective_sb(spec).delta_eff
        worst = max(worst, abs(numeric - closed) / closed)
    all_ok &= _check("effective splitting closed form", worst, 1e-10, lines)

    # weak-coupling solver against its unbiased closed form
    model = JunctionModel(
        epsilon=0.0, delta=1.0,
        hot=BathSpec(coupling=1.0, omega_rc=28.0, gamma=0.0071 / np.pi,
                     cutoff=1000 * np.pi, temperature=1.0),
        cold=BathSpec(coupling=1.0, omega_rc=28.0, gamma=0.0071 / np.pi,
                      cutoff=1000 * np.pi, temperature=0.5))
    solver = current_bmr(model).current
    closed = bmr_closed_form(model)
    all_ok &= _check("weak-coupling closed form", abs(solver - closed) / abs(closed),
                     1e-8, lines)

    # current conservation on a strongly coupled junction
    result = solve_junction(replace(
        model,
        hot=replace(model.hot, coupling=4.0),
        cold=replace(model.cold, coupling=4.0)), 3)
    conservation = abs(result.current_hot + result.current_cold) / abs(
        result.current_hot)
    all_ok &= _check("current conservation", conservation, 1e-10, lines)

    print("\n".join(lines))
    return 0 if all_ok else 2


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (RuntimeError, MemoryError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
