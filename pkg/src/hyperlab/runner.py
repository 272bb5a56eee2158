"""Experiment runner: executes the probes of a config and writes artifacts.

Layout under the output directory: reports/ (JSON, schema-tagged),
tables/ (CSV), plotdata/ (whitespace-delimited columns), each file named
<probe>-<target>-<seed>.  All artifact bytes are a pure function of the
config; wall-clock metadata lives only in the run-meta.json sidecar.

Exit status: 0 when every exact-grade check passed, 1 when one failed,
2 when a probe raised (partial failure; the report carries the error).
Deliberate negative controls (a non-unimodular transport, a broken
sampler) are graded exact because their failure margin is macroscopic,
not a statistical wobble, so a control that fails flips the exit status.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import circle_measure as cm
from . import dynamics_lab as lab
from . import gauss_model as gm
from . import hitting_sets as hs
from .config import ExperimentConfig
from .corpora import probability_measure, random_functional, scaffold_set
from .jsonio import read_json, write_json
from .kalish import CircleFunction, apply_T, eigen_residual
from .seeding import derive_seed

__all__ = ["ProbeResult", "realize_measure", "run"]

REPORT_SCHEMA = "probe-report/1"
SUMMARY_SCHEMA = "run-summary/1"
META_SCHEMA = "run-meta/1"


@dataclass(frozen=True)
class ProbeResult:
    probe: str
    target: str
    passed: bool
    grade: str
    detail: dict
    table: str = ""
    plotdata: str = ""
    control: str = ""
    error: str = ""


def realize_measure(defn: dict) -> cm.CircleMeasure:
    kind = defn["kind"]
    if kind == "uniform":
        return cm.CircleMeasure.uniform(defn["mass"], bins=defn["bins"])
    if kind == "dirac":
        return cm.CircleMeasure.dirac(defn["angle"], defn["mass"], bins=defn["bins"])
    if kind == "atoms":
        pairs = [(float(a), float(m)) for a, m in defn["atoms"]]
        return cm.CircleMeasure.from_parts(defn["bins"], atoms=pairs)
    if kind == "probability":
        return probability_measure(defn["seed"], defn["bins"])
    if kind == "file":
        return cm.CircleMeasure.from_dict(read_json(defn["path"]))
    return cm.CircleMeasure.from_dict(defn["doc"])


@dataclass
class _RunContext:
    config: ExperimentConfig
    _measures: dict = field(default_factory=dict)
    _systems: dict = field(default_factory=dict)
    _models: dict = field(default_factory=dict)

    def measure(self, name: str) -> cm.CircleMeasure:
        if name not in self._measures:
            self._measures[name] = realize_measure(self.config.measures[name])
        return self._measures[name]

    def system(self, label: str) -> lab.SystemSpec:
        if not self._systems:
            for doc in self.config.systems:
                spec = lab.SystemSpec.from_dict(doc)
                self._systems[spec.label] = spec
        return self._systems[label]

    def model(self, measure_name: str, nodes: int, grid: int) -> gm.GaussModel:
        key = (measure_name, nodes, grid)
        if key not in self._models:
            fld = gm.corrected_field(self.measure(measure_name), nodes, grid)
            self._models[key] = gm.build_model(fld)
        return self._models[key]


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _columns(header, rows) -> str:
    lines = ["# " + " ".join(header)]
    for row in rows:
        lines.append(" ".join(_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def _scaled_transport(scale: float):
    """The true dynamics followed by a scalar stretch: non-unimodular for
    scale != 1, so the pushforward inflates the covariance by scale^2."""

    def transport(X: np.ndarray) -> np.ndarray:
        M = X.shape[0]
        out = np.empty_like(X)
        for j in range(X.shape[1]):
            out[:, j] = apply_T(CircleFunction(X[:, j].copy(), M)).values
        return scale * out

    return transport


def _run_convolve(ctx: _RunContext, p: dict) -> ProbeResult:
    mu, nu = ctx.measure(p["left"]), ctx.measure(p["right"])
    conv = cm.convolve(mu, nu)
    rows, worst = [], 0.0
    for n in range(-p["band"], p["band"] + 1):
        prod = cm.fourier_coefficient(mu, n) * cm.fourier_coefficient(nu, n)
        got = cm.fourier_coefficient(conv, n)
        err = abs(got - prod)
        worst = max(worst, err)
        rows.append((n, got.real, got.imag, prod.real, prod.imag, err))
    detail = {"max_error": worst, "tolerance": p["tolerance"], "band": p["band"],
              "result_atoms": conv.atom_count,
              "result_mass": cm.total_mass(conv)}
    return ProbeResult(
        probe="convolve", target=f"{p['left']}x{p['right']}",
        passed=worst <= p["tolerance"], grade="exact", detail=detail,
        table=_csv(["n", "conv_re", "conv_im", "product_re", "product_im",
                    "abs_error"], rows),
        plotdata=_columns(["n", "abs_error"], [(r[0], r[5]) for r in rows]))


def _run_exp(ctx: _RunContext, p: dict) -> ProbeResult:
    rho = ctx.measure(p["measure"])
    ex = cm.exp_measure(rho, tail_tol=p["tail_tol"])
    rows, worst = [], 0.0
    for n in range(-p["band"], p["band"] + 1):
        want = cmath.exp(cm.fourier_coefficient(rho, n))
        got = cm.fourier_coefficient(ex, n)
        err = abs(got - want)
        worst = max(worst, err)
        rows.append((n, got.real, got.imag, want.real, want.imag, err))
    detail = {"max_error": worst, "tolerance": p["tolerance"],
              "band": p["band"], "tail_tol": p["tail_tol"],
              "order": cm.truncation_order(p["tail_tol"]),
              "result_mass": cm.total_mass(ex)}
    return ProbeResult(
        probe="exp", target=p["measure"],
        passed=worst <= p["tolerance"], grade="exact", detail=detail,
        table=_csv(["n", "exp_re", "exp_im", "want_re", "want_im",
                    "abs_error"], rows),
        plotdata=_columns(["n", "abs_error"], [(r[0], r[5]) for r in rows]))


def _run_fourier(ctx: _RunContext, p: dict) -> ProbeResult:
    rho = ctx.measure(p["measure"])
    rows = []
    for n in range(-p["band"], p["band"] + 1):
        c = cm.fourier_coefficient(rho, n)
        rows.append((n, c.real, c.imag, abs(c)))
    detail = {"band": p["band"],
              "coefficients": [[r[0], r[1], r[2]] for r in rows]}
    return ProbeResult(
        probe="fourier", target=p["measure"], passed=True, grade="exact",
        detail=detail,
        table=_csv(["n", "re", "im", "abs"], rows),
        plotdata=_columns(["n", "abs"], [(r[0], r[3]) for r in rows]))


def _run_measure_classify(ctx: _RunContext, p: dict) -> ProbeResult:
    rho = ctx.measure(p["measure"])
    raj = cm.rajchman_probe(rho, n_max=p["band"], epsilon=p["epsilon"])
    diri = cm.dirichlet_probe(rho, n_max=p["band"], epsilon=p["epsilon"])
    mild = cm.mild_mixing_probe(rho, family_size=p["family_size"],
                                n_max=p["band"], delta=p["delta"],
                                seed=p["seed"])
    detail = {"rajchman": raj.to_dict(), "dirichlet": diri.to_dict(),
              "mild_mixing": mild.to_dict()}
    rows = [("rajchman", raj.passed, raj.tail_sup),
            ("dirichlet", diri.passed, diri.best_value),
            ("mild_mixing", mild.passed, mild.worst_limsup)]
    band = p["band"]
    if rho.has_density:
        band = min(band, rho.bins // 8)
    spectrum = [(n, abs(cm.fourier_coefficient(rho, n)))
                for n in range(1, band + 1)]
    return ProbeResult(
        probe="measure-classify", target=p["measure"], passed=True,
        grade="heuristic", detail=detail,
        table=_csv(["probe", "passed", "statistic"], rows),
        plotdata=_columns(["n", "abs_coefficient"], spectrum))


def _run_residual(ctx: _RunContext, p: dict) -> ProbeResult:
    rows, ratios_ok = [], True
    for lam in p["angles"]:
        prev = None
        for M in p["grids"]:
            r = eigen_residual(lam, M)
            ratio = r / prev if prev is not None else float("nan")
            if prev is not None and ratio > p["ratio_bound"]:
                ratios_ok = False
            rows.append((lam, M, r, ratio))
            prev = r
    t1_rows, t1_ok = [], True
    for M in p["grids"]:
        one = CircleFunction.constant(1.0, M)
        err = float(np.max(np.abs(apply_T(one).values - 1.0)))
        bound = p["t1_factor"] / M
        if err > bound:
            t1_ok = False
        t1_rows.append((M, err, bound))
    detail = {"ratio_bound": p["ratio_bound"], "ratios_ok": ratios_ok,
              "t1_ok": t1_ok,
              "t1_errors": [[int(m), e, b] for m, e, b in t1_rows],
              "residuals": [[la, int(m), r]
                            for la, m, r, _ in rows]}
    return ProbeResult(
        probe="residual", target="kalish", passed=ratios_ok and t1_ok,
        grade="exact", detail=detail,
        table=_csv(["lambda", "grid", "residual", "ratio"], rows),
        plotdata=_columns(["lambda", "grid", "residual"],
                          [(la, m, r) for la, m, r, _ in rows]))


def _run_invariance(ctx: _RunContext, p: dict) -> ProbeResult:
    model = ctx.model(p["measure"], p["nodes"], p["grid"])
    scale = p["transport_scale"]
    transport = None if scale == 1.0 else _scaled_transport(scale)
    rep = gm.invariance_check(model, transport, count=p["samples"],
                              seed=p["seed"],
                              statistical_tolerance=p["tolerance"])
    control = "" if scale == 1.0 else "non-unimodular-transport"
    detail = dict(rep.to_dict(), transport_scale=scale, nodes=p["nodes"],
                  grid=p["grid"], measure=p["measure"])
    if control:
        detail["control"] = control
    rows = [("cov_distance", rep.cov_distance), ("budget", rep.budget),
            ("intertwine", rep.intertwine), ("samples", rep.samples)]
    nodes = [(float(a), float(w)) for a, w in
             zip(model.field.angles, model.field.weights)]
    return ProbeResult(
        probe="invariance", target=p["measure"], passed=rep.passed,
        grade="exact" if control else "statistical", detail=detail,
        control=control,
        table=_csv(["metric", "value"], rows),
        plotdata=_columns(["angle", "weight"], nodes))


def _run_symmetry(ctx: _RunContext, p: dict) -> ProbeResult:
    model = ctx.model(p["measure"], p["nodes"], p["grid"])
    rows, reports = [], []
    for k in range(p["functionals"]):
        xstar = random_functional(derive_seed(p["seed"], f"functional:{k}"),
                                  p["grid"])
        rep = gm.symmetry_check(model, xstar, p["samples"],
                                seed=derive_seed(p["seed"], f"draw:{k}"),
                                sampler=p["sampler"])
        reports.append(rep.to_dict())
        rows.append((k, rep.second_moment.real, rep.second_moment.imag,
                     rep.second_moment_threshold, rep.re_im_correlation,
                     rep.passed))
    control = "real-gaussian-sampler" if p["sampler"] == "real" else ""
    passed = all(r["passed"] for r in reports)
    detail = {"functionals": reports, "sampler": p["sampler"],
              "samples": p["samples"], "measure": p["measure"]}
    if control:
        detail["control"] = control
    return ProbeResult(
        probe="symmetry", target=p["measure"], passed=passed,
        grade="exact" if control else "statistical", detail=detail,
        control=control,
        table=_csv(["functional", "pseudo_moment_re", "pseudo_moment_im",
                    "threshold", "re_im_correlation", "passed"], rows),
        plotdata=_columns(["functional", "abs_pseudo_moment"],
                          [(r[0], math.hypot(r[1], r[2])) for r in rows]))


def _run_coeff(ctx: _RunContext, p: dict) -> ProbeResult:
    model = ctx.model(p["measure"], p["nodes"], p["grid"])
    rows, all_ok = [], True
    for k in range(p["functionals"]):
        xstar = random_functional(derive_seed(p["seed"], f"functional:{k}"),
                                  p["grid"])
        smeas = gm.spectral_measure_of_functional(model, xstar)
        for n in range(p["max_power"] + 1):
            a = gm.matrix_coefficient_analytic(model, xstar, n)
            mc = gm.matrix_coefficient_mc(
                model, xstar, n, count=p["samples"],
                seed=derive_seed(p["seed"], f"mc:{k}:{n}"))
            sf = cm.fourier_coefficient(smeas, n)
            ref = max(abs(a), abs(mc.value), abs(sf))
            budget = p["rel_tol"] * ref + 3.0 * mc.standard_error
            ok = (abs(mc.value - a) <= budget
                  and abs(sf - a) <= p["rel_tol"] * ref + 1e-12
                  and abs(mc.value - sf) <= budget)
            all_ok = all_ok and ok
            rows.append((k, n, a.real, a.imag, mc.value.real, mc.value.imag,
                         mc.standard_error, sf.real, sf.imag, ok))
    detail = {"functionals": p["functionals"], "max_power": p["max_power"],
              "samples": p["samples"], "rel_tol": p["rel_tol"],
              "measure": p["measure"], "agreements": len(rows),
              "all_ok": all_ok}
    plot = [(r[1], math.hypot(r[2], r[3]), math.hypot(r[4], r[5]))
            for r in rows if r[0] == 0]
    return ProbeResult(
        probe="coeff", target=p["measure"], passed=all_ok,
        grade="statistical", detail=detail,
        table=_csv(["functional", "n", "analytic_re", "analytic_im",
                    "mc_re", "mc_im", "mc_se", "spectral_re", "spectral_im",
                    "ok"], rows),
        plotdata=_columns(["n", "abs_analytic", "abs_mc"], plot))


def _run_ubd(ctx: _RunContext, p: dict) -> ProbeResult:
    bound = math.ceil(2.0 / p["delta"])
    rows, all_ok = [], True
    for k in range(p["count"]):
        L = scaffold_set(derive_seed(p["seed"], f"set:{k}"),
                         p["window"], p["delta"])
        dens = hs.upper_banach_density(L, p["min_len"])
        gap = hs.max_gap(hs.difference_set(L))
        ok = dens >= p["delta"] and gap <= bound
        all_ok = all_ok and ok
        rows.append((k, L.size, dens, gap, ok))
    detail = {"delta": p["delta"], "gap_bound": bound, "count": p["count"],
              "window": p["window"], "min_len": p["min_len"],
              "all_ok": all_ok}
    return ProbeResult(
        probe="ubd", target=f"delta-{p['delta']}", passed=all_ok,
        grade="exact", detail=detail,
        table=_csv(["set", "size", "banach_density", "diff_max_gap", "ok"],
                   rows),
        plotdata=_columns(["set", "diff_max_gap"],
                          [(r[0], r[3]) for r in rows]))


def _run_orbit(ctx: _RunContext, p: dict) -> ProbeResult:
    spec = ctx.system(p["system"])
    x0 = lab.default_start(spec, p["seed"])
    traj = lab.orbit(spec, x0, p["steps"])
    norms = traj.norms()
    diffs = traj.states - x0[None, :]
    if spec.kind == "kalish":
        w = 2.0 * math.pi / spec.grid_size
        dist = np.sqrt(w * np.sum(np.abs(diffs) ** 2, axis=1))
    else:
        dist = np.linalg.norm(diffs, axis=1)
    radius = float(np.quantile(dist[1:], 0.35)) if traj.length > 1 else 1.0
    radius = max(radius, 1e-12)
    hits = lab.hitting_times(traj, lab.BallSpec(center=x0, radius=radius))
    gap = hs.max_gap(hs.difference_set(hits)) if hits.size else None
    detail = {"system": spec.label, "steps": p["steps"],
              "norm_min": float(norms.min()), "norm_max": float(norms.max()),
              "ball_radius": radius, "hit_count": hits.size,
              "hit_diff_max_gap": gap}
    rows = [(t, float(norms[t]), float(dist[t])) for t in range(traj.length)]
    return ProbeResult(
        probe="orbit", target=spec.label, passed=True, grade="exact",
        detail=detail,
        table=_csv(["step", "norm", "distance_to_start"], rows),
        plotdata=_columns(["step", "norm", "distance_to_start"], rows))


def _run_classification(ctx: _RunContext, p: dict) -> ProbeResult:
    systems = [lab.SystemSpec.from_dict(doc) for doc in ctx.config.systems]
    report = lab.classification_run(systems, window=p["window"],
                                    seed=ctx.config.seed,
                                    mc_samples=p["samples"],
                                    gap_bound=p["gap_bound"])
    verdict_num = {"yes": 1, "no": 0, "no-evidence": -1}
    plot_rows = []
    for i, row in enumerate(report.rows):
        plot_rows.append([i] + [verdict_num[row.outcomes[c].verdict]
                                for c in lab.PROBE_COLUMNS])
    return ProbeResult(
        probe="classification", target="battery", passed=not report.flagged,
        grade="exact", detail=report.to_dict(),
        table=report.to_csv(),
        plotdata=_columns(["system"] + list(lab.PROBE_COLUMNS), plot_rows))


_EXECUTORS = {
    "convolve": _run_convolve,
    "exp": _run_exp,
    "fourier": _run_fourier,
    "measure-classify": _run_measure_classify,
    "residual": _run_residual,
    "invariance": _run_invariance,
    "symmetry": _run_symmetry,
    "coeff": _run_coeff,
    "ubd": _run_ubd,
    "orbit": _run_orbit,
    "classification": _run_classification,
}


def _safe_name(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9._+-]+", "-", text) or "x"


def run(config: ExperimentConfig, out_dir=None) -> int:
    """Execute every probe of the config and write the artifact tree."""
    root = Path(out_dir if out_dir is not None else config.out)
    for sub in ("reports", "tables", "plotdata"):
        (root / sub).mkdir(parents=True, exist_ok=True)

    ctx = _RunContext(config)
    results, had_error = [], False
    for probe in config.probes:
        executor = _EXECUTORS[probe["probe"]]
        try:
            results.append(executor(ctx, probe))
        except Exception as exc:  # noqa: BLE001 - per-probe diagnostics
            had_error = True
            results.append(ProbeResult(
                probe=probe["probe"],
                target=str(probe.get("measure") or probe.get("system")
                           or probe.get("left") or "error"),
                passed=False, grade="exact", detail={},
                error=f"{type(exc).__name__}: {exc}"))

    used = set()
    for res in results:
        stem = f"{res.probe}-{_safe_name(res.target)}-{config.seed}"
        if stem in used:
            stem = f"{stem}-{len(used)}"
        used.add(stem)
        doc = {"schema": REPORT_SCHEMA, "probe": res.probe,
               "target": res.target, "seed": config.seed,
               "grade": res.grade, "passed": res.passed,
               "detail": res.detail}
        if res.control:
            doc["control"] = res.control
        if res.error:
            doc["error"] = res.error
        write_json(root / "reports" / f"{stem}.json", doc)
        if res.table:
            (root / "tables" / f"{stem}.csv").write_text(res.table)
        if res.plotdata:
            (root / "plotdata" / f"{stem}.dat").write_text(res.plotdata)

    exact_fail = any(r.grade == "exact" and not r.passed for r in results)
    status = 2 if had_error else (1 if exact_fail else 0)
    summary = {
        "schema": SUMMARY_SCHEMA, "seed": config.seed, "status": status,
        "probes": [{"probe": r.probe, "target": r.target, "grade": r.grade,
                    "passed": r.passed, "control": r.control,
                    "error": r.error} for r in results],
    }
    write_json(root / "reports" / f"summary-run-{config.seed}.json", summary)
    write_json(root / "run-meta.json", {
        "schema": META_SCHEMA,
        "written_at": datetime.now(timezone.utc).isoformat(),
        "probe_count": len(results),
    })
    return status
