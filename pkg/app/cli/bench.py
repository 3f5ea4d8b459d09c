"""
bench: residual trajectories of Picard, Mann and Ishikawa iterations on
operators whose fixed point set is {0}.

    rotation     pixel-pair rotation by 90 degrees (isometry, Picard cycles)
    contraction  0.5 * rotation
    antisym      I + A (pseudo-contractive, Lipschitz sqrt(2))
    spc          2 * rotation - I (1/2-strictly pseudo-contractive)
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from functools import partial

import numpy as np
import pandas as pd

from app.cli.runconfig import RunConfig
from app.config import EXIT_CODES
from app.core.io import write_csv
from app.core.operators import scaled_operator
from app.denoisers.zoo import make_antisymmetric_denoiser, make_spc_denoiser, pair_rotation_operator
from app.errors import ConfigError, DivergenceError
from app.solvers.ishikawa import ishikawa_iterate, mann_iterate, picard_iterate
from app.solvers.schedule import Schedule

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = [
    "family", "solver", "a", "b", "iterations", "initial_residual",
    "final_residual", "final_norm_ratio", "stopped", "file",
]


def make_family(name, shape):
    rot = pair_rotation_operator(shape)
    if name == "rotation":
        return make_spc_denoiser(rot, 0.0, text="rotation")
    if name == "contraction":
        return make_spc_denoiser(scaled_operator(rot, 0.5), 0.0, text="contraction")
    if name == "antisym":
        return make_antisymmetric_denoiser(1.0)
    if name == "spc":
        return make_spc_denoiser(rot, 0.5)
    raise ConfigError(f"unknown operator family '{name}', choose from rotation, contraction, antisym, spc")


def parse_grid(text):
    """'a1,b1;a2,b2' -> [(a1, b1), (a2, b2)]; an empty string gives no schedules."""
    grid = []
    for chunk in filter(None, (c.strip() for c in (text or "").split(";"))):
        parts = chunk.split(",")
        if len(parts) != 2:
            raise ConfigError(f"schedule grid entries are 'a,b', got '{chunk}'")
        try:
            grid.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise ConfigError(f"schedule grid entries must be numbers, got '{chunk}'") from exc
    return grid


def bench_jobs(families, solvers, grid):
    jobs = []
    for family in families:
        for solver in solvers:
            if solver == "ishikawa":
                jobs.extend((family, solver, a, b) for a, b in grid)
            elif solver in ("picard", "mann"):
                jobs.append((family, solver, None, None))
            else:
                raise ConfigError(f"unknown bench solver '{solver}', choose from picard, mann, ishikawa")
    return jobs


def run_job(job, rc: RunConfig, u0):
    family, solver, a, b = job
    D = make_family(family, u0.shape)
    iters = rc["iters"]
    common = {"tol": 0.0, "log_every": 0, "label": f"{family}/{solver}"}
    if solver == "picard":
        name = f"{family}__picard.csv"
        run = partial(picard_iterate, D.apply, u0, iters, **common)
    elif solver == "mann":
        name = f"{family}__mann.csv"
        run = partial(mann_iterate, D.apply, u0, rc["relaxation"], iters, **common)
    else:
        name = f"{family}__ishikawa_a{a:g}_b{b:g}.csv"
        run = partial(ishikawa_iterate, D.apply, u0, Schedule(a, b), iters, **common)
    try:
        trace = run()
    except DivergenceError as exc:
        logger.warning("bench: %s", exc)
        trace = exc.trace
    write_csv(rc.out / name, trace.to_frame(), meta={**rc.meta(), "family": family, "solver": solver})
    return {
        "family": family,
        "solver": solver,
        "a": a,
        "b": b,
        "iterations": len(trace),
        "initial_residual": trace.initial_residual,
        "final_residual": trace.final_residual,
        "final_norm_ratio": float(np.linalg.norm(trace.final) / np.linalg.norm(u0)),
        "stopped": trace.stopped,
        "file": name,
    }


def cmd_bench(rc: RunConfig):
    rc.out.mkdir(parents=True, exist_ok=True)
    grid = parse_grid(rc["grid"])
    jobs = bench_jobs(rc["families"], rc["solvers"], grid)
    u0 = np.random.default_rng(rc.seed).standard_normal((rc["size"], rc["size"]))

    if rc["workers"] > 1:
        with ThreadPoolExecutor(max_workers=rc["workers"]) as pool:
            rows = list(pool.map(lambda job: run_job(job, rc, u0), jobs))
    else:
        rows = [run_job(job, rc, u0) for job in jobs]

    summary = pd.DataFrame(rows, columns=SUMMARY_COLUMNS)
    write_csv(rc.out / "summary.csv", summary, meta=rc.meta())
    logger.info("bench: %d runs written to %s", len(rows), rc.out)
    return EXIT_CODES["ok"], {"runs": len(rows)}
