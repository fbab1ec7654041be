"""Mode dispatch: build the experiment from a validated config, compute, write artifacts."""
from __future__ import annotations
import os
import platform
import time
from dataclasses import dataclass, field

import numpy as np
import orjson
import psutil
import scipy

from . import __version__
from .acoustics import BoundaryTrace, add_noise
from .checks import CheckContext, select_checks
from .config import ExperimentConfig
from .errors import AcceptanceError, ConfigError
from .gridio import ensure_dir, read_trace, write_grid, write_preview, write_trace, write_trace_csv
from .inverse import (MeasurementModel, assemble_kappa, domination_ratio, measurement_matrix,
                      poincare_constant, reconstruct, singular_values, smallness_margin,
                      stability_experiment, time_reversal_norm)
from .log import get_logger
from .optics import empirical_beta
from .phantom import generate_phantom, random_phantom_spec
from .pool import set_default_threads
from .rays import check_stability
from .report import (render_selftest, render_stability, render_visibility, write_history_csv,
                     write_spectrum_csv)

log = get_logger("rotopat.experiments")


@dataclass
class RunSummary:
    mode: str
    output: str
    artifacts: list[str] = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    seconds: float = 0.0


class _Run:
    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.out = ensure_dir(cfg.experiment.output)
        self.summary = RunSummary(cfg.experiment.mode, self.out)
        self.grid = cfg.geometry.grid()
        self.mask = cfg.geometry.mask(self.grid)
        self.setup = cfg.setup()
        self.c = cfg.medium.sound_speed.build(self.grid)
        self.rng = np.random.default_rng(cfg.experiment.seed)

    def path(self, name: str) -> str:
        self.summary.artifacts.append(name)
        return os.path.join(self.out, name)

    def model(self) -> MeasurementModel:
        s = self.cfg.solver
        return MeasurementModel(self.setup, self.c, tol=s.tol, cfl=s.cfl,
                                threads=self.cfg.experiment.threads,
                                sponge_strength=s.sponge_strength)

    def model_kwargs(self) -> dict:
        s = self.cfg.solver
        return {"tol": s.tol, "cfl": s.cfl, "sponge_strength": s.sponge_strength}

    def write_json(self, name: str, doc: dict) -> None:
        with open(self.path(name), "wb") as f:
            f.write(orjson.dumps(doc, option=orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY))

    def write_text(self, name: str, text: str) -> None:
        with open(self.path(name), "w", encoding="utf-8") as f:
            f.write(text)

    def noisy(self, data: list[BoundaryTrace]) -> list[BoundaryTrace]:
        level = self.cfg.solver.noise_level
        return [add_noise(d, level, self.rng) for d in data] if level > 0 else data


def _simulate(run: _Run) -> None:
    cfg = run.cfg
    phantom = generate_phantom(cfg.medium.phantom, run.mask)
    data = run.noisy(run.model().data(phantom.sigma))
    for i, tr in enumerate(data):
        write_trace(run.path(f"trace_{i:02d}.bin"), tr)
        if cfg.experiment.trace_csv:
            write_trace_csv(run.path(f"trace_{i:02d}.csv"), tr)
    write_grid(run.path("sigma.bin"), phantom.sigma.field)
    write_preview(run.path("sigma.png"), phantom.sigma.field.values)
    write_grid(run.path("sound_speed.bin"), run.c.field)
    margin = (smallness_margin(phantom.sigma, poincare_constant(run.mask))
              if run.mask.omega_count else 0.0)
    metrics = {"rotations": run.setup.m, "time_steps": data[0].n_time_steps, "dt": data[0].dt,
               "w1inf": phantom.w1inf, "max_slope": phantom.max_slope, "smallness_margin": margin}
    run.write_json("phantom.json", metrics)
    run.summary.metrics = metrics


def _load_data(run: _Run, model: MeasurementModel) -> list[BoundaryTrace]:
    src = run.cfg.experiment.data
    paths = [os.path.join(src, f"trace_{i:02d}.bin") for i in range(model.m)]
    missing = [p for p in paths if not os.path.exists(p)]
    if missing:
        raise ConfigError(f"experiment.data: missing {', '.join(missing)}")
    return [read_trace(p, model.boundary) for p in paths]


def _reconstruct(run: _Run) -> None:
    cfg = run.cfg
    s = cfg.solver
    model = run.model()
    truth = generate_phantom(cfg.medium.phantom, run.mask).sigma
    data = _load_data(run, model) if cfg.experiment.data else run.noisy(model.data(truth))
    sigma0 = generate_phantom(cfg.medium.background, run.mask).sigma
    state = reconstruct(data, run.setup, run.c, sigma0, max_iter=s.max_iter, step=s.step,
                        tol=s.recon_tol, truth=truth, n_dirs=s.n_dirs, w_floor=s.w_floor,
                        model=model)
    write_history_csv(run.path("history.csv"), state.history)
    write_grid(run.path("sigma_hat.bin"), state.sigma.field)
    write_preview(run.path("sigma_hat.png"), state.sigma.field.values)
    metrics = {"iterations": state.k, "converged": state.converged,
               "residual": state.history[-1].residual,
               "l2_error": state.l2_error, "h1_error": state.h1_error}
    run.write_json("reconstruction.json", metrics)
    run.summary.metrics = metrics


def _check_geometry(run: _Run) -> None:
    report = check_stability(run.setup, run.mask, run.c, n_dirs=run.cfg.solver.n_dirs)
    run.write_text("visibility.txt", render_visibility(report))
    run.write_json("visibility.json", report.to_dict())
    write_grid(run.path("coverage.bin"), report.coverage)
    write_preview(run.path("coverage.png"), report.coverage.values)
    run.summary.metrics = {"stability_ok": report.stability_ok,
                           "uniqueness_ok": all(report.uniqueness_ok),
                           "coverage_fraction": report.coverage_fraction}


def _analyze_operator(run: _Run) -> None:
    cfg = run.cfg
    exp = cfg.experiment
    background = generate_phantom(cfg.medium.background, run.mask).sigma
    doc: dict = {"kappa": {}}
    for n in exp.coarse_cells:
        K = assemble_kappa(background, run.setup, run.c, cfg.geometry.coarse_grid(n),
                           threads=exp.threads, **run.model_kwargs())
        sv = K.singular_values()
        write_spectrum_csv(run.path(f"spectrum_{n}.csv"), sv)
        doc["kappa"][str(n)] = {"size": K.size, "s_max": float(sv.max()), "s_min": float(sv.min()),
                                "condition": float(sv.max() / sv.min()) if sv.min() > 0 else None}
    finest = cfg.geometry.coarse_grid(exp.coarse_cells[-1])
    M = measurement_matrix(background, run.setup, run.c, finest, exp.measurement_rotation,
                           threads=exp.threads, **run.model_kwargs())
    sv = singular_values(M)
    write_spectrum_csv(run.path("measurement_spectrum.csv"), sv)
    doc["measurement"] = {"rotation": exp.measurement_rotation, "s_min": float(sv.min()),
                          "s_max": float(sv.max())}

    model = run.model()
    poincare = poincare_constant(run.mask)
    ratios = []
    for _ in range(exp.domination_samples):
        spec = random_phantom_spec(run.rng, run.mask, max_amplitude=exp.pair_amplitude)
        delta = generate_phantom(spec, run.mask).sigma.field
        ratios.append(domination_ratio(background, delta, run.setup, run.c, model))
    doc["time_reversal_norm"] = time_reversal_norm(model, run.mask,
                                                   cfg.geometry.coarse_grid(exp.coarse_cells[0]),
                                                   threads=exp.threads)
    doc.update(poincare=poincare, smallness_margin=smallness_margin(background, poincare),
               beta=empirical_beta(model.illuminate(background), run.mask),
               domination_ratios=ratios)
    run.write_json("operator.json", doc)
    run.summary.metrics = {"poincare": poincare, "max_domination": max(ratios),
                           **{f"s_min_{n}": v["s_min"] for n, v in doc["kappa"].items()}}


def _stability_sweep(run: _Run) -> None:
    exp = run.cfg.experiment

    def draw():
        spec = random_phantom_spec(run.rng, run.mask, max_amplitude=exp.pair_amplitude)
        return generate_phantom(spec, run.mask).sigma

    pairs = []
    for _ in range(exp.pairs):
        a = draw()
        pairs.append((a, draw()))
    report = stability_experiment(pairs, run.setup, run.c, run.model())
    run.write_text("stability.md", render_stability(report))
    run.write_json("stability.json", report.to_dict())
    run.summary.metrics = {"c_star": report.c_star,
                           "violations": len(report.injectivity_violations)}


def _selftest(run: _Run) -> None:
    exp = run.cfg.experiment
    ctx = CheckContext(scale=exp.scale, seed=exp.seed, threads=exp.threads)
    results = []
    for check in select_checks(exp.only):
        res = check(ctx)
        log.info("selftest.check", name=res.name, passed=res.passed, seconds=res.seconds)
        results.append(res)
    run.write_text("selftest.md", render_selftest(results))
    run.write_json("selftest.json", {"scale": exp.scale, "results": [r.to_dict() for r in results]})
    run.summary.metrics = {r.name: r.passed for r in results}


MODES = {
    "simulate": _simulate,
    "reconstruct": _reconstruct,
    "check-geometry": _check_geometry,
    "analyze-operator": _analyze_operator,
    "stability-sweep": _stability_sweep,
    "selftest": _selftest,
}


def _manifest(run: _Run) -> dict:
    return {
        "mode": run.summary.mode,
        "seed": run.cfg.experiment.seed,
        "config": run.cfg.model_dump(mode="json"),
        "versions": {"rotopat": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "host": {"platform": platform.platform(), "physical_cores": psutil.cpu_count(logical=False),
                 "memory_gb": round(psutil.virtual_memory().total / 2 ** 30, 2)},
        "wall_seconds": run.summary.seconds,
        "artifacts": sorted(run.summary.artifacts),
        "metrics": run.summary.metrics,
    }


def run(cfg: ExperimentConfig) -> RunSummary:
    """Validate, compute and write artifacts plus manifest.json; raises RotopatError subclasses."""
    cfg.check()
    set_default_threads(cfg.experiment.threads)
    t0 = time.perf_counter()
    r = _Run(cfg)
    log.info("run.start", mode=cfg.experiment.mode, output=r.out, seed=cfg.experiment.seed)
    MODES[cfg.experiment.mode](r)
    r.summary.seconds = round(time.perf_counter() - t0, 3)
    with open(os.path.join(r.out, "manifest.json"), "wb") as f:
        f.write(orjson.dumps(_manifest(r), option=orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY))
    log.info("run.done", mode=cfg.experiment.mode, seconds=r.summary.seconds,
             artifacts=len(r.summary.artifacts))
    if cfg.experiment.mode == "selftest" and not all(r.summary.metrics.values()):
        failed = [k for k, ok in r.summary.metrics.items() if not ok]
        raise AcceptanceError(f"self-test failed: {', '.join(failed)}")
    return r.summary
