"""Command-line surface: one binary, subcommand style.

Subcommands: measure conv|pow|exp|fourier|classify, kalish
apply|residual|matrix-check, gauss build|sample|invariance|coeff, hits
density|ubd|diff|gaps, lab orbit|classify, run <config>.  Global flags
--seed, --bins, --grid, --out, --format json|csv work before or after
the subcommand.  Configs are the source of truth for experiments; the
flags cover one-off exploration.

Measure arguments accept a path to a circle-measure JSON document or a
token: "uniform", "dirac:ANGLE[:MASS]", "probability[:SEED]".  System
arguments accept a path to a system JSON document or a token:
"kalish[:M]", "scalar-shift[:C[:DIM]]", "torus[:A:B...]".  Set
arguments accept a windowed-set JSON document or a newline-delimited
integer orbit log.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import circle_measure as cm
from . import dynamics_lab as lab
from . import gauss_model as gm
from . import hitting_sets as hs
from . import kalish as ka
from .config import parse_config
from .corpora import probability_measure, random_functional
from .jsonio import read_json, stable_dumps
from .runner import run as run_experiment
from .seeding import derive_seed

__all__ = ["main"]

_GLOBAL_DEFAULTS = {"seed": 0, "bins": 1024, "grid": 1024,
                    "out": None, "format": "json"}


# -- input loaders ------------------------------------------------------


def _load_measure(token: str, bins: int, seed: int) -> cm.CircleMeasure:
    if token == "uniform":
        return cm.CircleMeasure.uniform(1.0, bins=bins)
    if token.startswith("dirac:"):
        parts = token.split(":")[1:]
        angle = float(parts[0])
        mass = float(parts[1]) if len(parts) > 1 else 1.0
        return cm.CircleMeasure.dirac(angle, mass, bins=bins)
    if token == "probability" or token.startswith("probability:"):
        parts = token.split(":")[1:]
        use = int(parts[0]) if parts else seed
        return probability_measure(use, bins)
    return cm.CircleMeasure.from_dict(read_json(token))


def _load_function(token: str, grid: int) -> ka.CircleFunction:
    if token == "one":
        return ka.CircleFunction.constant(1.0, grid)
    if token.startswith("chi:"):
        return ka.chi(float(token.split(":")[1]), grid)
    return ka.CircleFunction.from_dict(read_json(token))


def _load_system(token: str, grid: int) -> lab.SystemSpec:
    if token == "kalish" or token.startswith("kalish:"):
        parts = token.split(":")[1:]
        return lab.kalish_system(int(parts[0]) if parts else grid)
    if token == "scalar-shift" or token.startswith("scalar-shift:"):
        parts = token.split(":")[1:]
        scalar = float(parts[0]) if parts else 2.0
        dim = int(parts[1]) if len(parts) > 1 else 160
        return lab.scalar_shift_system(scalar, dim)
    if token.startswith("torus:"):
        angles = tuple(float(a) for a in token.split(":")[1:])
        return lab.torus_system(angles)
    return lab.SystemSpec.from_dict(read_json(token))


def _load_set(path: str) -> hs.WindowedSet:
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return hs.WindowedSet.from_dict(json.loads(text))
    return hs.WindowedSet.from_lines(text)


# -- output helpers -----------------------------------------------------


def _flatten(prefix: str, value, rows: list):
    if isinstance(value, dict):
        for key in sorted(value):
            _flatten(f"{prefix}.{key}" if prefix else str(key), value[key], rows)
    elif isinstance(value, list):
        rows.append((prefix, json.dumps(value)))
    else:
        rows.append((prefix, value))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _doc_csv(doc: dict) -> str:
    rows: list = []
    _flatten("", doc, rows)
    return _csv_text(["field", "value"], rows)


def _measure_csv(m: cm.CircleMeasure) -> str:
    rows = [("atom", float(a), float(mass)) for a, mass in m.atoms()]
    rows += [("density", float(c), float(v))
             for c, v in zip(m.bin_centers, m.density)]
    return _csv_text(["kind", "angle", "value"], rows)


def _function_csv(f: ka.CircleFunction) -> str:
    theta = ka.grid_angles(f.grid_size)
    rows = [(j, float(theta[j]), float(f.values[j].real),
             float(f.values[j].imag)) for j in range(f.grid_size)]
    return _csv_text(["j", "theta", "re", "im"], rows)


def _emit(args, doc, csv_text=None) -> None:
    if args.format == "csv":
        text = csv_text if csv_text is not None else _doc_csv(doc)
    else:
        text = stable_dumps(doc) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


# -- measure ------------------------------------------------------------


def _cmd_measure_conv(args) -> int:
    mu = _load_measure(args.left, args.bins, args.seed)
    nu = _load_measure(args.right, args.bins, args.seed)
    result = cm.convolve(mu, nu)
    _emit(args, result.to_dict(), _measure_csv(result))
    return 0


def _cmd_measure_pow(args) -> int:
    rho = _load_measure(args.measure, args.bins, args.seed)
    result = cm.convolution_power(rho, args.power)
    _emit(args, result.to_dict(), _measure_csv(result))
    return 0


def _cmd_measure_exp(args) -> int:
    rho = _load_measure(args.measure, args.bins, args.seed)
    result = (cm.normalized_chaos(rho, tail_tol=args.tail_tol)
              if args.normalized else cm.exp_measure(rho, tail_tol=args.tail_tol))
    _emit(args, result.to_dict(), _measure_csv(result))
    return 0


def _cmd_measure_fourier(args) -> int:
    rho = _load_measure(args.measure, args.bins, args.seed)
    rows = []
    for n in range(-args.band, args.band + 1):
        c = cm.fourier_coefficient(rho, n)
        rows.append((n, c.real, c.imag, abs(c)))
    doc = {"schema": "fourier-table/1", "band": args.band,
           "coefficients": [[n, re, im] for n, re, im, _ in rows]}
    _emit(args, doc, _csv_text(["n", "re", "im", "abs"], rows))
    return 0


def _cmd_measure_classify(args) -> int:
    rho = _load_measure(args.measure, args.bins, args.seed)
    raj = cm.rajchman_probe(rho, n_max=args.band, epsilon=args.epsilon)
    diri = cm.dirichlet_probe(rho, n_max=args.band, epsilon=args.epsilon)
    mild = cm.mild_mixing_probe(rho, family_size=args.family_size,
                                n_max=args.band, delta=args.delta,
                                seed=args.seed)
    doc = {"schema": "measure-classify/1", "rajchman": raj.to_dict(),
           "dirichlet": diri.to_dict(), "mild_mixing": mild.to_dict()}
    rows = [("rajchman", raj.passed, raj.tail_sup),
            ("dirichlet", diri.passed, diri.best_value),
            ("mild_mixing", mild.passed, mild.worst_limsup)]
    _emit(args, doc, _csv_text(["probe", "passed", "statistic"], rows))
    return 0


# -- kalish -------------------------------------------------------------


def _cmd_kalish_apply(args) -> int:
    f = _load_function(args.function, args.grid)
    result = ka.apply_T(f)
    _emit(args, result.to_dict(), _function_csv(result))
    return 0


def _cmd_kalish_residual(args) -> int:
    angles = args.angle or [2.0 * np.pi / 3.0, float(np.pi), 2.0 * np.pi * 0.811]
    grids = args.grids or [1024, 2048, 4096]
    rows = []
    for lam in angles:
        prev = None
        for M in grids:
            r = ka.eigen_residual(lam, M)
            ratio = r / prev if prev is not None else float("nan")
            rows.append((lam, M, r, ratio))
            prev = r
    doc = {"schema": "residual-table/1",
           "rows": [[la, m, r] for la, m, r, _ in rows]}
    _emit(args, doc, _csv_text(["lambda", "grid", "residual", "ratio"], rows))
    return 0


def _cmd_kalish_matrix_check(args) -> int:
    M = args.grid
    T = ka.kalish_matrix(M)
    worst_apply = 0.0
    worst_solve = 0.0
    for k in range(args.count):
        rng = np.random.default_rng(derive_seed(args.seed, f"matrix-check:{k}"))
        v = rng.standard_normal(M) + 1j * rng.standard_normal(M)
        f = ka.CircleFunction(v.copy(), M)
        via_matrix = T @ v
        via_operator = ka.apply_T(f).values
        worst_apply = max(worst_apply, float(np.max(np.abs(via_matrix - via_operator))))
        recovered = np.linalg.solve(T, via_matrix)
        err = float(np.max(np.abs(recovered - v)) / max(1.0, np.max(np.abs(v))))
        worst_solve = max(worst_solve, err)
    passed = worst_apply <= 1e-12 and worst_solve <= 1e-6
    doc = {"schema": "matrix-check/1", "grid": M, "trials": args.count,
           "max_apply_difference": worst_apply,
           "max_solve_error": worst_solve, "passed": passed}
    _emit(args, doc)
    return 0 if passed else 1


# -- gauss --------------------------------------------------------------


def _gauss_model(args) -> gm.GaussModel:
    sigma = _load_measure(args.measure, args.bins, args.seed)
    field = gm.corrected_field(sigma, args.nodes, args.grid)
    return gm.build_model(field)


def _cmd_gauss_build(args) -> int:
    model = _gauss_model(args)
    _emit(args, model.to_manifest())
    return 0


def _cmd_gauss_sample(args) -> int:
    model = _gauss_model(args)
    draws = gm.sample(model, args.count, args.seed)
    if args.format == "csv":
        rows = []
        for s, f in enumerate(draws):
            for j in range(f.grid_size):
                rows.append((s, j, float(f.values[j].real),
                             float(f.values[j].imag)))
        _emit(args, {}, _csv_text(["sample", "j", "re", "im"], rows))
    else:
        doc = {"schema": "gauss-samples/1", "count": args.count,
               "samples": [f.to_dict() for f in draws]}
        _emit(args, doc)
    return 0


def _cmd_gauss_invariance(args) -> int:
    model = _gauss_model(args)
    if args.transport_scale == 1.0:
        transport = None
    else:
        scale = args.transport_scale

        def transport(X):
            out = np.empty_like(X)
            for j in range(X.shape[1]):
                out[:, j] = ka.apply_T(
                    ka.CircleFunction(X[:, j].copy(), X.shape[0])).values
            return scale * out

    rep = gm.invariance_check(model, transport, count=args.samples,
                              seed=args.seed,
                              statistical_tolerance=args.tolerance)
    doc = dict(rep.to_dict(), transport_scale=args.transport_scale)
    if args.transport_scale != 1.0:
        doc["control"] = "non-unimodular-transport"
    _emit(args, doc)
    return 0 if rep.passed else 1


def _cmd_gauss_coeff(args) -> int:
    model = _gauss_model(args)
    xstar = random_functional(derive_seed(args.seed, "functional"), args.grid)
    smeas = gm.spectral_measure_of_functional(model, xstar)
    rows = []
    for n in range(args.power + 1):
        a = gm.matrix_coefficient_analytic(model, xstar, n)
        mc = gm.matrix_coefficient_mc(model, xstar, n, count=args.samples,
                                      seed=derive_seed(args.seed, f"mc:{n}"))
        sf = cm.fourier_coefficient(smeas, n)
        rows.append((n, a.real, a.imag, mc.value.real, mc.value.imag,
                     mc.standard_error, sf.real, sf.imag))
    doc = {"schema": "coefficient-table/1", "samples": args.samples,
           "rows": [list(r) for r in rows]}
    _emit(args, doc, _csv_text(["n", "analytic_re", "analytic_im", "mc_re",
                                "mc_im", "mc_se", "spectral_re",
                                "spectral_im"], rows))
    return 0


# -- hits ---------------------------------------------------------------


def _cmd_hits_density(args) -> int:
    L = _load_set(args.set)
    doc = {"schema": "density-report/1", "window": L.window, "size": L.size,
           "upper_density": hs.upper_density(L),
           "lower_density": hs.lower_density(L),
           "upper_banach_density": hs.upper_banach_density(L, args.min_len),
           "min_len": args.min_len,
           "ladder": hs.density_ladder(L.window)}
    _emit(args, doc)
    return 0


def _cmd_hits_ubd(args) -> int:
    L = _load_set(args.set)
    doc = {"schema": "density-report/1", "window": L.window,
           "min_len": args.min_len,
           "upper_banach_density": hs.upper_banach_density(L, args.min_len)}
    _emit(args, doc)
    return 0


def _cmd_hits_diff(args) -> int:
    L = _load_set(args.set)
    D = hs.difference_set(L)
    _emit(args, D.to_dict(),
          _csv_text(["element"], [(int(v),) for v in D.elements]))
    return 0


def _cmd_hits_gaps(args) -> int:
    L = _load_set(args.set)
    doc = {"schema": "gap-report/1", "window": L.window, "size": L.size,
           "max_gap": hs.max_gap(L), "longest_interval": hs.longest_interval(L)}
    _emit(args, doc)
    return 0


# -- lab ----------------------------------------------------------------


def _cmd_lab_orbit(args) -> int:
    spec = _load_system(args.system, args.grid)
    x0 = lab.default_start(spec, args.seed)
    traj = lab.orbit(spec, x0, args.steps)
    norms = traj.norms()
    doc = {"schema": "orbit-report/1", "system": spec.label,
           "steps": args.steps, "norm_min": float(norms.min()),
           "norm_max": float(norms.max()),
           "norms": [float(v) for v in norms]}
    rows = [(t, float(norms[t])) for t in range(traj.length)]
    _emit(args, doc, _csv_text(["step", "norm"], rows))
    return 0


def _cmd_lab_classify(args) -> int:
    if args.systems:
        docs = read_json(args.systems)
        systems = [lab.SystemSpec.from_dict(d) for d in docs]
    else:
        systems = lab.default_battery(args.window)
    report = lab.classification_run(systems, window=args.window,
                                    seed=args.seed, mc_samples=args.samples,
                                    gap_bound=args.gap_bound)
    _emit(args, report.to_dict(), report.to_csv())
    return 0 if not report.flagged else 1


# -- run ----------------------------------------------------------------


def _cmd_run(args) -> int:
    config = parse_config(Path(args.config).read_text())
    return run_experiment(config, out_dir=args.out)


# -- parser -------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="root seed for all derived randomness")
    shared.add_argument("--bins", type=int, default=argparse.SUPPRESS,
                        help="circle-measure bin count (power of two)")
    shared.add_argument("--grid", type=int, default=argparse.SUPPRESS,
                        help="function grid size M")
    shared.add_argument("--out", default=argparse.SUPPRESS,
                        help="write output to this path (run: output directory)")
    shared.add_argument("--format", choices=["json", "csv"],
                        default=argparse.SUPPRESS, help="output format")

    parser = argparse.ArgumentParser(prog="hyperlab", parents=[shared])
    top = parser.add_subparsers(dest="command", required=True)

    def sub(group, name, handler, **kwargs):
        p = group.add_parser(name, parents=[shared], **kwargs)
        p.set_defaults(handler=handler)
        return p

    measure = top.add_parser("measure", parents=[shared]).add_subparsers(
        dest="subcommand", required=True)
    p = sub(measure, "conv", _cmd_measure_conv)
    p.add_argument("left")
    p.add_argument("right")
    p = sub(measure, "pow", _cmd_measure_pow)
    p.add_argument("measure")
    p.add_argument("power", type=int)
    p = sub(measure, "exp", _cmd_measure_exp)
    p.add_argument("measure")
    p.add_argument("--tail-tol", type=float, default=1e-12)
    p.add_argument("--normalized", action="store_true",
                   help="emit the chaos part, rescaled to a probability")
    p = sub(measure, "fourier", _cmd_measure_fourier)
    p.add_argument("measure")
    p.add_argument("--band", type=int, default=8)
    p = sub(measure, "classify", _cmd_measure_classify)
    p.add_argument("measure")
    p.add_argument("--band", type=int, default=64)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--family-size", type=int, default=16)

    kal = top.add_parser("kalish", parents=[shared]).add_subparsers(
        dest="subcommand", required=True)
    p = sub(kal, "apply", _cmd_kalish_apply)
    p.add_argument("function")
    p = sub(kal, "residual", _cmd_kalish_residual)
    p.add_argument("--angle", type=float, action="append",
                   help="eigenvalue angle; repeatable")
    p.add_argument("--grids", type=lambda s: [int(v) for v in s.split(",")],
                   help="comma-separated grid sizes")
    p = sub(kal, "matrix-check", _cmd_kalish_matrix_check)
    p.add_argument("--count", type=int, default=5)

    gauss = top.add_parser("gauss", parents=[shared]).add_subparsers(
        dest="subcommand", required=True)
    for name, handler in (("build", _cmd_gauss_build),
                          ("sample", _cmd_gauss_sample),
                          ("invariance", _cmd_gauss_invariance),
                          ("coeff", _cmd_gauss_coeff)):
        p = sub(gauss, name, handler)
        p.add_argument("--measure", default="uniform",
                       help="spectral measure sigma (token or path)")
        p.add_argument("--nodes", type=int, default=8)
        if name == "sample":
            p.add_argument("--count", type=int, default=8)
        if name == "invariance":
            p.add_argument("--samples", type=int, default=10_000)
            p.add_argument("--tolerance", type=float, default=0.05)
            p.add_argument("--transport-scale", type=float, default=1.0,
                           help="!= 1 runs the non-unimodular negative control")
        if name == "coeff":
            p.add_argument("--samples", type=int, default=10_000)
            p.add_argument("--power", type=int, default=8)

    hits = top.add_parser("hits", parents=[shared]).add_subparsers(
        dest="subcommand", required=True)
    for name, handler in (("density", _cmd_hits_density),
                          ("ubd", _cmd_hits_ubd),
                          ("diff", _cmd_hits_diff),
                          ("gaps", _cmd_hits_gaps)):
        p = sub(hits, name, handler)
        p.add_argument("set", help="windowed-set JSON or integer lines")
        if name in ("density", "ubd"):
            p.add_argument("--min-len", type=int, default=16)

    labp = top.add_parser("lab", parents=[shared]).add_subparsers(
        dest="subcommand", required=True)
    p = sub(labp, "orbit", _cmd_lab_orbit)
    p.add_argument("system")
    p.add_argument("--steps", type=int, default=512)
    p = sub(labp, "classify", _cmd_lab_classify)
    p.add_argument("--systems", help="JSON file with a list of system specs")
    p.add_argument("--window", type=int, default=1000)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--gap-bound", type=int, default=64)

    p = sub(top, "run", _cmd_run, help="execute an experiment config")
    p.add_argument("config")

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    for key, value in _GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, value)
    try:
        return args.handler(args)
    except Exception as exc:  # noqa: BLE001 - single CLI error surface
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
