"""Reproducible experiment drivers and report writers.

Each experiment expands into a fixed-order list of (eps, start) cells;
cell i runs an independent Monte Carlo estimate with seed (base + i).
Cells may be farmed out to worker processes, but the merge is by cell
order, so reports are byte-identical for any worker count.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from contextlib import nullcontext
from dataclasses import asdict, dataclass
from typing import Sequence

from .bounds import small_noise_limit
from .characteristic import khasminskii_horizon
from .measure import WeightedMeasure, counterexample_measure
from .simulation import (
    abs_brownian_log_mgf,
    default_bandwidth,
    log_mean_exp,
    log_exp_moment,
    weighted_local_time_samples,
)

__all__ = [
    "SweepCell",
    "SweepRow",
    "AsymptoticsReport",
    "KhasminskiiRow",
    "KhasminskiiReport",
    "CounterexampleCell",
    "CounterexampleReport",
    "single_atom_lambda",
    "asymptotic_sweep",
    "khasminskii_check",
    "counterexample_run",
    "write_sweep_csv",
    "write_sweep_json",
    "write_khasminskii_csv",
    "write_khasminskii_json",
    "write_counterexample_csv",
    "write_counterexample_json",
]


def single_atom_lambda(mass: float, eps: float, t: float) -> float:
    """Exact eps^2 log E e^(local time) for one atom, started on the atom.

    The weighted local time is (mass/eps) |W_t| in law, so the value is
    mass^2 t / 2 + eps^2 log(2 Phi(mass sqrt(t) / eps)).
    """
    return eps * eps * abs_brownian_log_mgf(mass / eps, t)


def _check_eps_grid(eps_grid) -> tuple[float, ...]:
    grid = tuple(float(e) for e in eps_grid)
    if not grid:
        raise ValueError("eps_grid must be nonempty")
    for e in grid:
        if not math.isfinite(e) or e <= 0.0:
            raise ValueError(f"eps_grid entries must be positive, got {e}")
    for a, b in zip(grid, grid[1:]):
        if not b < a:
            raise ValueError(f"eps_grid must be strictly decreasing, got {grid}")
    return grid


def _check_starts(starts) -> tuple[float, ...]:
    out = tuple(float(s) for s in starts)
    if not out:
        raise ValueError("starts must be nonempty")
    for s in out:
        if not math.isfinite(s):
            raise ValueError(f"starts must be finite, got {s}")
    return out


def _estimate_cell(task):
    measure, eps, t, start, n_paths, n_steps, seed, eta = task
    result = log_exp_moment(measure, eps, t, start, n_paths, n_steps, seed, eta)
    return result.estimate, result.std_error


def _run_cells(tasks, workers: int):
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_estimate_cell, tasks))
    return [_estimate_cell(task) for task in tasks]


@dataclass(frozen=True)
class SweepCell:
    eps: float
    start: float
    seed: int
    log_moment: float
    log_moment_se: float
    lambda_hat: float
    lambda_se: float
    oracle: float | None


@dataclass(frozen=True)
class SweepRow:
    """Per-eps summary: the start with the largest scaled log moment."""

    eps: float
    start: float
    lambda_hat: float
    lambda_se: float
    oracle: float | None


@dataclass(frozen=True)
class AsymptoticsReport:
    measure: WeightedMeasure
    t: float
    eps_grid: tuple[float, ...]
    starts: tuple[float, ...]
    target: float
    n_paths: int
    n_steps: int
    seed: int
    eta: float
    cells: tuple[SweepCell, ...]
    rows: tuple[SweepRow, ...]


def asymptotic_sweep(
    measure: WeightedMeasure,
    t: float,
    eps_grid: Sequence[float],
    starts: Sequence[float] | None = None,
    n_paths: int = 100_000,
    n_steps: int = 10_000,
    seed: int = 42,
    eta: float | None = None,
    workers: int = 1,
) -> AsymptoticsReport:
    """Estimate eps^2 log E_x e^(L_t) on a decreasing eps grid.

    Default starts are the atom locations (0 when there are none).  Each
    cell records the exact single-atom oracle when the measure is one
    atom and the start sits on it.
    """
    eps_grid = _check_eps_grid(eps_grid)
    if starts is None:
        starts = tuple(a.location for a in measure.atoms) or (0.0,)
    starts = _check_starts(starts)
    resolved_eta = eta if eta is not None else default_bandwidth(t, n_steps)
    single = measure.atoms[0] if len(measure.atoms) == 1 and not measure.density else None

    tasks = []
    metas = []
    index = 0
    for eps in eps_grid:
        for start in starts:
            cell_seed = (seed + index) % 2 ** 64
            tasks.append((measure, eps, t, start, n_paths, n_steps, cell_seed, resolved_eta))
            metas.append((eps, start, cell_seed))
            index += 1
    results = _run_cells(tasks, workers)

    cells = []
    for (eps, start, cell_seed), (est, se) in zip(metas, results):
        oracle = None
        if single is not None and start == single.location:
            oracle = single_atom_lambda(single.mass, eps, t)
        cells.append(
            SweepCell(
                eps=eps,
                start=start,
                seed=cell_seed,
                log_moment=est,
                log_moment_se=se,
                lambda_hat=eps * eps * est,
                lambda_se=eps * eps * se,
                oracle=oracle,
            )
        )
    rows = []
    for eps in eps_grid:
        group = [c for c in cells if c.eps == eps]
        best = max(group, key=lambda c: c.lambda_hat)
        rows.append(
            SweepRow(
                eps=eps,
                start=best.start,
                lambda_hat=best.lambda_hat,
                lambda_se=best.lambda_se,
                oracle=best.oracle,
            )
        )
    return AsymptoticsReport(
        measure=measure,
        t=t,
        eps_grid=eps_grid,
        starts=starts,
        target=small_noise_limit(measure, t),
        n_paths=n_paths,
        n_steps=n_steps,
        seed=seed,
        eta=resolved_eta,
        cells=tuple(cells),
        rows=tuple(rows),
    )


@dataclass(frozen=True)
class KhasminskiiRow:
    start: float
    seed: int
    estimate: float
    std_error: float
    passed: bool


@dataclass(frozen=True)
class KhasminskiiReport:
    eps: float
    s_star: float
    bound: float
    n_paths: int
    n_steps: int
    seed: int
    eta: float | None
    rows: tuple[KhasminskiiRow, ...]
    passed: bool
    note: str


def khasminskii_check(
    measure: WeightedMeasure,
    eps: float,
    n_paths: int = 100_000,
    n_steps: int = 10_000,
    seed: int = 42,
    eta: float | None = None,
    starts: Sequence[float] | None = None,
) -> KhasminskiiReport:
    """Verify E e^(L) <= 2 by simulation on the certified horizon s*.

    Runs one estimate per candidate start (atom locations and density
    piece midpoints by default); a start passes when the estimated
    moment is within three standard errors of the bound 2.
    """
    if measure.is_zero:
        return KhasminskiiReport(
            eps=float(eps),
            s_star=math.inf,
            bound=2.0,
            n_paths=n_paths,
            n_steps=n_steps,
            seed=seed,
            eta=eta,
            rows=(),
            passed=True,
            note="zero measure: moment is identically 1",
        )
    s_star = khasminskii_horizon(measure, eps)
    if starts is None:
        starts = [a.location for a in measure.atoms]
        starts += [0.5 * (p.lo + p.hi) for p in measure.density]
    starts = _check_starts(starts)
    resolved_eta = eta if eta is not None else default_bandwidth(s_star, n_steps)
    rows = []
    for i, start in enumerate(starts):
        row_seed = (seed + i) % 2 ** 64
        samples = weighted_local_time_samples(
            measure, eps, s_star, start, n_paths, n_steps, row_seed, resolved_eta
        )
        log_est, log_se = log_mean_exp(samples)
        estimate = math.exp(log_est)
        std_error = estimate * log_se
        rows.append(
            KhasminskiiRow(
                start=start,
                seed=row_seed,
                estimate=estimate,
                std_error=std_error,
                passed=estimate <= 2.0 + 3.0 * std_error,
            )
        )
    return KhasminskiiReport(
        eps=float(eps),
        s_star=s_star,
        bound=2.0,
        n_paths=n_paths,
        n_steps=n_steps,
        seed=seed,
        eta=resolved_eta,
        rows=tuple(rows),
        passed=all(r.passed for r in rows),
        note="",
    )


@dataclass(frozen=True)
class CounterexampleCell:
    eps: float
    start: float
    k: int | None
    gap: float | None
    seed: int
    lambda_hat: float
    lambda_se: float
    pair_oracle: float | None
    single_oracle: float | None
    exceeds_limit: bool
    regime: str


@dataclass(frozen=True)
class CounterexampleReport:
    K: int
    t: float
    target: float
    eps_grid: tuple[float, ...]
    starts: tuple[float, ...]
    n_paths: int
    n_steps: int
    seed: int
    eta: float
    cells: tuple[CounterexampleCell, ...]
    all_exceed: bool


def counterexample_run(
    K: int,
    t: float,
    eps_grid: Sequence[float],
    n_paths: int = 100_000,
    n_steps: int = 10_000,
    seed: int = 42,
    eta: float | None = None,
    workers: int = 1,
    starts: Sequence[float] | None = None,
) -> CounterexampleReport:
    """Sweep the paired-atom measure from the pair base points.

    All atoms have mass 1, so the small-noise target is t/2; near a pair
    whose gap 2^-k is far below eps the two atoms act as one of mass 2
    and the scaled log moment tracks the mass-2 oracle instead.  Each
    cell records both oracles and whether it exceeds the target beyond
    three standard errors.
    """
    measure = counterexample_measure(K)
    eps_grid = _check_eps_grid(eps_grid)
    if starts is None:
        starts = [float(k * k) for k in range(1, K + 1)]
    starts = _check_starts(starts)
    resolved_eta = eta if eta is not None else default_bandwidth(t, n_steps)
    target = small_noise_limit(measure, t)

    tasks = []
    metas = []
    index = 0
    for eps in eps_grid:
        for start in starts:
            cell_seed = (seed + index) % 2 ** 64
            tasks.append((measure, eps, t, start, n_paths, n_steps, cell_seed, resolved_eta))
            metas.append((eps, start, cell_seed))
            index += 1
    results = _run_cells(tasks, workers)

    base_to_k = {float(k * k): k for k in range(1, K + 1)}
    cells = []
    for (eps, start, cell_seed), (est, se) in zip(metas, results):
        k = base_to_k.get(start)
        gap = 2.0 ** -k if k is not None else None
        pair_oracle = single_atom_lambda(2.0, eps, t) if k is not None else None
        single_oracle = single_atom_lambda(1.0, eps, t) if k is not None else None
        lambda_hat = eps * eps * est
        lambda_se = eps * eps * se
        if gap is not None and gap <= eps / 8.0:
            regime = "merged"
        elif gap is not None and gap >= 8.0 * eps:
            regime = "separated"
        else:
            regime = "intermediate"
        cells.append(
            CounterexampleCell(
                eps=eps,
                start=start,
                k=k,
                gap=gap,
                seed=cell_seed,
                lambda_hat=lambda_hat,
                lambda_se=lambda_se,
                pair_oracle=pair_oracle,
                single_oracle=single_oracle,
                exceeds_limit=lambda_hat - 3.0 * lambda_se > target,
                regime=regime,
            )
        )
    return CounterexampleReport(
        K=K,
        t=t,
        target=target,
        eps_grid=eps_grid,
        starts=starts,
        n_paths=n_paths,
        n_steps=n_steps,
        seed=seed,
        eta=resolved_eta,
        cells=tuple(cells),
        all_exceed=all(c.exceeds_limit for c in cells),
    )


# -- serialization ------------------------------------------------------

def _fmt(value) -> str:
    """Shortest round-trip decimal for floats; empty cell for None."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _json_ready(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else repr(obj)
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    return obj


def _open_out(path_or_file):
    if hasattr(path_or_file, "write"):
        return nullcontext(path_or_file)
    return open(path_or_file, "w", encoding="utf-8", newline="")


def _write_json(payload: dict, path) -> None:
    with _open_out(path) as fh:
        json.dump(_json_ready(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path, header: Sequence[str], rows) -> None:
    with _open_out(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_sweep_csv(report: AsymptoticsReport, path: str) -> None:
    """One row per (eps, start) cell; `best` marks the per-eps summary row."""
    best = {(r.eps, r.start) for r in report.rows}
    _write_csv(
        path,
        [
            "eps", "start", "seed", "n_paths", "n_steps", "log_moment",
            "log_moment_se", "lambda_hat", "lambda_se", "oracle", "target", "best",
        ],
        (
            [
                c.eps, c.start, c.seed, report.n_paths, report.n_steps,
                c.log_moment, c.log_moment_se, c.lambda_hat, c.lambda_se,
                c.oracle, report.target, (c.eps, c.start) in best,
            ]
            for c in report.cells
        ),
    )


def write_sweep_json(report: AsymptoticsReport, path: str) -> None:
    _write_json(
        {
            "schema": 1,
            "kind": "sweep",
            "measure": report.measure.as_dict(),
            "t": report.t,
            "target": report.target,
            "eps_grid": list(report.eps_grid),
            "starts": list(report.starts),
            "n_paths": report.n_paths,
            "n_steps": report.n_steps,
            "seed": report.seed,
            "eta": report.eta,
            "cells": [asdict(c) for c in report.cells],
            "rows": [asdict(r) for r in report.rows],
        },
        path,
    )


def write_khasminskii_csv(report: KhasminskiiReport, path: str) -> None:
    _write_csv(
        path,
        ["start", "seed", "estimate", "std_error", "bound", "passed"],
        ([r.start, r.seed, r.estimate, r.std_error, report.bound, r.passed] for r in report.rows),
    )


def write_khasminskii_json(report: KhasminskiiReport, path: str) -> None:
    _write_json(
        {
            "schema": 1,
            "kind": "khasminskii",
            "eps": report.eps,
            "s_star": report.s_star,
            "bound": report.bound,
            "n_paths": report.n_paths,
            "n_steps": report.n_steps,
            "seed": report.seed,
            "eta": report.eta,
            "rows": [asdict(r) for r in report.rows],
            "passed": report.passed,
            "note": report.note,
        },
        path,
    )


def write_counterexample_csv(report: CounterexampleReport, path: str) -> None:
    _write_csv(
        path,
        [
            "eps", "start", "k", "gap", "seed", "lambda_hat", "lambda_se",
            "pair_oracle", "single_oracle", "target", "exceeds_limit", "regime",
        ],
        (
            [
                c.eps, c.start, c.k, c.gap, c.seed, c.lambda_hat, c.lambda_se,
                c.pair_oracle, c.single_oracle, report.target, c.exceeds_limit,
                c.regime,
            ]
            for c in report.cells
        ),
    )


def write_counterexample_json(report: CounterexampleReport, path: str) -> None:
    _write_json(
        {
            "schema": 1,
            "kind": "counterexample",
            "K": report.K,
            "t": report.t,
            "target": report.target,
            "eps_grid": list(report.eps_grid),
            "starts": list(report.starts),
            "n_paths": report.n_paths,
            "n_steps": report.n_steps,
            "seed": report.seed,
            "eta": report.eta,
            "cells": [asdict(c) for c in report.cells],
            "all_exceed": report.all_exceed,
        },
        path,
    )
