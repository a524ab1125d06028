"""Batch experiment front-end: runs the solver and writes plot-ready artifacts.

Artifacts are plain CSV/JSON text with shortest-round-trip float formatting,
so a given (config, seed) regenerates every file byte-identically. The dB
columns in the correlation CSVs are normalized to the zero-lag
autocorrelation of the row's first target, which pins autocorrelation
curves to 0 dB at tau = 0.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from dfrcwave.config import ExperimentConfig, Problem, build_problem
from dfrcwave.model import WaveformMatrix, mat, save_waveform
from dfrcwave.radar import achieved_pattern, correlation_values, optimal_alpha
from dfrcwave.solver import SolverState, mm_solve

#: Environment variable overriding the artifact output root.
OUTPUT_ROOT_ENV = "DFRCWAVE_OUTPUT_ROOT"


def _fmt(v) -> str:
    return repr(float(v))


def _write_csv(path: Path, header: str, rows) -> None:
    lines = [header]
    lines.extend(",".join(cells) for cells in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _resolve_outdir(config: ExperimentConfig, base_dir) -> Path:
    if base_dir is None:
        base_dir = os.environ.get(OUTPUT_ROOT_ENV, ".")
    out = Path(base_dir) / config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    return out


def _level_db(chi: np.ndarray, ref: float) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return 10.0 * np.log10(chi / ref)


@dataclass
class ExperimentResult:
    artifact_dir: Path
    state: SolverState
    summary: dict


def _summarize(config: ExperimentConfig, state: SolverState, objective: float) -> dict:
    margins = state.final_margins
    return {
        "final_objective": objective,
        "terms": {
            "beampattern": state.final_terms[0],
            "autocorrelation_isl": state.final_terms[1],
            "crosscorrelation_isl": state.final_terms[2],
        },
        "iterations": {
            "outer": state.outer_iterations,
            "dual_sweeps": state.dual_sweeps,
            "bisection_steps": state.bisection_steps,
            "rejected_steps": state.rejected_steps,
        },
        "min_ci_margin": None if margins is None else float(margins.min()),
        "kkt_residual": state.kkt_residual,
        "termination": state.termination.value,
        "warnings": list(state.warnings),
        "seed": config.seed,
        "config": dataclasses.asdict(config),
    }


def _run_solver(problem: Problem) -> tuple[SolverState, float]:
    state = mm_solve(
        problem.scene,
        problem.comm,
        problem.weights,
        problem.solver,
        x0=problem.x0,
        p_total=problem.p_total,
    )
    w = problem.weights
    objective = (
        w.w_bp * state.final_terms[0]
        + w.w_ac * state.final_terms[1]
        + w.w_cc * state.final_terms[2]
    )
    return state, objective


def _write_artifacts(
    outdir: Path, config: ExperimentConfig, problem: Problem, state: SolverState
) -> dict:
    scene = problem.scene
    waveform = WaveformMatrix(
        mat(state.x, config.n_tx), p_total=config.p_total, constant_modulus=True
    )
    save_waveform(waveform, outdir / "waveform.txt")

    alpha = optimal_alpha(state.x, scene)
    pattern = achieved_pattern(state.x, scene)
    _write_csv(
        outdir / "beampattern.csv",
        "theta_deg,achieved,desired_scaled",
        (
            (_fmt(theta), _fmt(p), _fmt(alpha * g))
            for theta, p, g in zip(scene.grid.angles_deg, pattern, scene.desired.values)
        ),
    )

    chi = np.abs(correlation_values(state.x, scene)) ** 2
    p = scene.targets.max_lag
    taus = range(-p + 1, p)
    for q in range(scene.targets.n_targets):
        ref = chi[p - 1, q, q]
        _write_csv(
            outdir / f"autocorr_q{q + 1}.csv",
            "tau,level_db",
            (
                (str(tau), _fmt(level))
                for tau, level in zip(taus, _level_db(chi[:, q, q], ref))
            ),
        )
        for qp in range(scene.targets.n_targets):
            if qp == q:
                continue
            _write_csv(
                outdir / f"crosscorr_q{q + 1}_q{qp + 1}.csv",
                "tau,level_db",
                (
                    (str(tau), _fmt(level))
                    for tau, level in zip(taus, _level_db(chi[:, q, qp], ref))
                ),
            )

    _write_csv(
        outdir / "convergence.csv",
        "iteration,objective",
        ((str(i + 1), _fmt(g)) for i, g in enumerate(state.objective_trace)),
    )

    w = problem.weights
    objective = (
        w.w_bp * state.final_terms[0]
        + w.w_ac * state.final_terms[1]
        + w.w_cc * state.final_terms[2]
    )
    summary = _summarize(config, state, objective)
    (outdir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return summary


def run_experiment(config: ExperimentConfig, base_dir=None) -> ExperimentResult:
    """Solve one configured instance and write all artifacts.

    A failed strict-feasibility pre-check downgrades the run to a warning
    recorded in summary.json; it does not abort.
    """
    outdir = _resolve_outdir(config, base_dir)
    problem = build_problem(config)
    state, _ = _run_solver(problem)
    summary = _write_artifacts(outdir, config, problem, state)
    return ExperimentResult(artifact_dir=outdir, state=state, summary=summary)


def iterations_to_within(trace: np.ndarray, frac: float = 0.05) -> int:
    """First 1-based iteration whose objective is within frac of the final value."""
    trace = np.asarray(trace)
    if trace.size == 0:
        return 0
    final = trace[-1]
    band = final + frac * abs(final)
    hits = np.flatnonzero(trace <= band)
    return int(hits[0]) + 1


def compare_majorizers(config: ExperimentConfig, base_dir=None) -> ExperimentResult:
    """Run both majorizer kinds on the identical instance and seed.

    Writes convergence_diagonal.csv / convergence_max_eigen.csv plus a
    side-by-side summary; the returned state is the diagonal run's.
    """
    outdir = _resolve_outdir(config, base_dir)
    states: dict[str, SolverState] = {}
    comparison: dict[str, dict] = {}
    for kind in ("diagonal", "max_eigen"):
        cfg_k = dataclasses.replace(config, majorizer_kind=kind)
        problem = build_problem(cfg_k)
        state, objective = _run_solver(problem)
        states[kind] = state
        _write_csv(
            outdir / f"convergence_{kind}.csv",
            "iteration,objective",
            ((str(i + 1), _fmt(g)) for i, g in enumerate(state.objective_trace)),
        )
        comparison[kind] = {
            "final_objective": objective,
            "outer_iterations": state.outer_iterations,
            "iterations_to_within_5pct": iterations_to_within(state.objective_trace),
            "termination": state.termination.value,
            "warnings": list(state.warnings),
        }
    summary = {
        "comparison": comparison,
        "seed": config.seed,
        "config": dataclasses.asdict(config),
    }
    (outdir / "summary_compare.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return ExperimentResult(artifact_dir=outdir, state=states["diagonal"], summary=summary)
