"""Subcommand handlers. Each returns a process exit code and never raises."""

import hashlib
import itertools
import json
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.conversion.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from src.conversion.exports import (
    read_loss_columns,
    write_frame,
    write_front_csv,
    write_fronts_by_epoch_csv,
    write_history_csv,
    write_json,
)
from src.core.config import config, config_manager
from src.core.constants import Constants
from src.core.exceptions import ConfigError, PaloraError, classify_error
from src.core.logging import logger
from src.data.loader import load_splits
from src.metrics.moo import auto_reference, hypervolume, nondominated_filter, summarize_front
from src.models.config import AblationConfig, RunConfig
from src.models.records import FrontRecord, TrainHistory
from src.nn.network import PaLoRANetwork
from src.training.engine import build, default_probe_set, evaluate_front, expand, probe, train, validation_grid
from src.training.scheduler import uniform_preference


def parse_ref(ref: Optional[str]) -> Optional[List[float]]:
    """'v1,v2[,v3]' -> list of floats."""
    if ref is None:
        return None
    try:
        return [float(v) for v in ref.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"Reference point '{ref}' is not a comma-separated list of numbers")


def parse_lambdas(lambdas: Optional[str]) -> Optional[List[List[float]]]:
    """A JSON list of preference lists, given inline or as a path to a JSON file."""
    if lambdas is None:
        return None
    text = Path(lambdas).read_text() if os.path.isfile(lambdas) else lambdas
    try:
        parsed = json.loads(text)
        rows = [[float(v) for v in row] for row in parsed]
    except (json.JSONDecodeError, TypeError, ValueError):
        raise ConfigError(f"Preferences '{lambdas}' are not a JSON list of number lists")
    if not rows:
        raise ConfigError("Preference list is empty; omit --lambdas to use the default set")
    return rows


def _output_dir(run_config: Optional[RunConfig], out: Optional[str], leaf: str = "") -> Path:
    if out:
        return Path(out)
    if run_config is not None and run_config.outputs:
        return Path(run_config.outputs)
    return Path(config.output_dir) / (leaf or "default")


def _fail(error: BaseException, command: str) -> int:
    code, message = classify_error(error)
    logger.error(f"{command} failed (exit {code}): {message}")
    return code


def _run_config_from_checkpoint(checkpoint: Checkpoint, config_path: Optional[str]) -> RunConfig:
    if config_path:
        return config_manager.load_run_config(config_path)
    if checkpoint.run_config is None:
        raise ConfigError("Checkpoint carries no run config; pass --config")
    return config_manager.parse_run_config(checkpoint.run_config)


def _front_summary(front: Sequence[FrontRecord], ref: Optional[Sequence[float]], model: PaLoRANetwork) -> Dict[str, Any]:
    summary = summarize_front(front, ref)
    counts = model.param_count()
    summary["param_count"] = {
        "base": counts.base,
        "bias": counts.bias,
        "adapters": counts.adapters,
        "total": counts.total,
        "overhead": counts.overhead,
    }
    summary["settings"] = config.to_dict()
    return summary


def _anchor_preference(run_config: RunConfig) -> List[float]:
    schedule = run_config.train.schedule
    if schedule.fixed_preference is not None:
        return list(schedule.fixed_preference)
    return uniform_preference(run_config.model.task_count).tolist()


def _write_run_outputs(
    out_dir: Path,
    model: PaLoRANetwork,
    history: TrainHistory,
    front: Sequence[FrontRecord],
    summary: Dict[str, Any],
    run_config: RunConfig,
    step_offset: int = 0,
):
    save_checkpoint(
        out_dir / Constants.FILE_CHECKPOINT,
        Checkpoint(
            model=model,
            step=step_offset + history.steps,
            schedule_state={
                "mode": run_config.train.schedule.mode,
                "annealed": run_config.train.schedule.annealed,
                "total_steps": history.steps,
                "final_learning_rate": history.final_learning_rate or run_config.train.learning_rate,
                "anchor_preference": _anchor_preference(run_config),
            },
            run_config=run_config.model_dump(mode="json"),
        ),
    )
    write_history_csv(out_dir / Constants.FILE_HISTORY, history, model.num_tasks)
    write_front_csv(out_dir / Constants.FILE_FRONT, front)
    if history.epoch_fronts:
        write_fronts_by_epoch_csv(out_dir / Constants.FILE_FRONTS_BY_EPOCH, history)
    write_json(out_dir / Constants.FILE_SUMMARY, summary)
    logger.info(f"Wrote checkpoint, history, front and summary to {out_dir}")


def run_training(run_config: RunConfig) -> Dict[str, Any]:
    """Train per config; returns the model, its history, the final validation front and summary."""
    train_set, val_set = load_splits(run_config)
    model = build(run_config.model, run_config.train.seed)
    trained, history = train(model, train_set, val_set, run_config.train, workers=config.eval_workers)
    grid = validation_grid(trained.num_tasks, run_config.train.eval_grid_size)
    front = evaluate_front(trained, val_set, grid, workers=config.eval_workers)
    summary = _front_summary(front, run_config.train.hv_reference, trained)
    return {"model": trained, "history": history, "front": front, "summary": summary}


def cmd_train(config_path: str, seed: Optional[int] = None, out: Optional[str] = None) -> int:
    try:
        run_config = config_manager.load_run_config(config_path, seed, out)
        if run_config.train.mode != Constants.MODE_SCRATCH:
            raise ConfigError("train expects train.mode 'scratch'; use the expand command")
        result = run_training(run_config)
        _write_run_outputs(
            _output_dir(run_config, out),
            result["model"],
            result["history"],
            result["front"],
            result["summary"],
            run_config,
        )
        return Constants.EXIT_OK
    except Exception as e:
        return _fail(e, "train")


def cmd_eval(
    checkpoint_path: str,
    grid_size: Optional[int] = None,
    ref_point: Optional[str] = None,
    config_path: Optional[str] = None,
    out: Optional[str] = None,
) -> int:
    try:
        checkpoint = load_checkpoint(checkpoint_path)
        run_config = _run_config_from_checkpoint(checkpoint, config_path)
        _, val_set = load_splits(run_config)
        model = checkpoint.model
        grid = validation_grid(model.num_tasks, grid_size or run_config.train.eval_grid_size)
        front = evaluate_front(model, val_set, grid, workers=config.eval_workers)
        ref = parse_ref(ref_point) or run_config.train.hv_reference
        out_dir = Path(out) if out else Path(checkpoint_path).parent / "eval"
        write_front_csv(out_dir / Constants.FILE_FRONT, front)
        write_json(out_dir / Constants.FILE_SUMMARY, _front_summary(front, ref, model))
        logger.info(f"Evaluated {len(front)} preferences, wrote {out_dir}")
        return Constants.EXIT_OK
    except Exception as e:
        return _fail(e, "eval")


def cmd_expand(
    checkpoint_path: str, config_path: str, seed: Optional[int] = None, out: Optional[str] = None
) -> int:
    try:
        checkpoint = load_checkpoint(checkpoint_path)
        run_config = config_manager.load_run_config(config_path, seed, out)
        if run_config.train.mode != Constants.MODE_EXPAND:
            raise ConfigError("expand expects train.mode 'expand'")
        if run_config.model.model_dump() != checkpoint.model.spec.model_dump():
            raise ConfigError("model spec of the config does not match the checkpoint")
        train_config = run_config.train
        if train_config.learning_rate is None:
            inherited = checkpoint.schedule_state.get("final_learning_rate")
            if inherited is None:
                raise ConfigError("no learning_rate in config and none recorded in the checkpoint")
            train_config = train_config.model_copy(update={"learning_rate": float(inherited)})
            run_config = run_config.model_copy(update={"train": train_config})
            logger.info(f"Expanding with the checkpoint's final learning rate {inherited}")

        train_set, val_set = load_splits(run_config)
        anchor = checkpoint.schedule_state.get("anchor_preference") or _anchor_preference(run_config)
        start = probe(checkpoint.model, val_set, [anchor])[0]

        expanded, history = expand(checkpoint.model, train_set, train_config, val_set, workers=config.eval_workers)
        grid = validation_grid(expanded.num_tasks, train_config.eval_grid_size)
        front = evaluate_front(expanded, val_set, grid, workers=config.eval_workers)

        ref = train_config.hv_reference
        if ref is None:
            ref = auto_reference([r.losses for r in front] + [start.losses]).tolist()
        summary = _front_summary(front, ref, expanded)
        summary["checkpoint_hv"] = hypervolume([start.losses], ref)
        summary["hv_delta"] = summary["hv"] - summary["checkpoint_hv"]
        summary["checkpoint_losses"] = start.losses
        _write_run_outputs(_output_dir(run_config, out), expanded, history, front, summary, run_config, checkpoint.step)
        return Constants.EXIT_OK
    except Exception as e:
        return _fail(e, "expand")


def cmd_probe(
    checkpoint_path: str,
    lambdas_json: Optional[str] = None,
    config_path: Optional[str] = None,
    out: Optional[str] = None,
) -> int:
    try:
        checkpoint = load_checkpoint(checkpoint_path)
        run_config = _run_config_from_checkpoint(checkpoint, config_path)
        lambdas = parse_lambdas(lambdas_json)
        if lambdas is None:
            lambdas = default_probe_set(checkpoint.model.num_tasks)
        _, val_set = load_splits(run_config)
        records = probe(checkpoint.model, val_set, lambdas, workers=config.eval_workers)
        out_dir = Path(out) if out else Path(checkpoint_path).parent / "probe"
        write_front_csv(out_dir / Constants.FILE_PROBE, records, include_nondominated=False)
        logger.info(f"Probed {len(records)} preferences, wrote {out_dir / Constants.FILE_PROBE}")
        return Constants.EXIT_OK
    except Exception as e:
        return _fail(e, "probe")


def sweep_runs(ablation: AblationConfig) -> List[Dict[str, Any]]:
    """Cross product of the sweep axes in a fixed order; temperatures pair with deterministic
    schedules and concentrations with Dirichlet ones."""
    sweep = ablation.sweep
    runs = []
    for m, alpha, mode, annealed in itertools.product(
        sweep.samples_per_batch, sweep.alpha, sweep.mode, sweep.annealed
    ):
        knobs = sweep.temperature if mode == Constants.SCHEDULE_DETERMINISTIC else sweep.concentration
        for knob, seed in itertools.product(knobs, sweep.seeds):
            runs.append(
                {"m": m, "alpha": alpha, "mode": mode, "annealed": annealed, "temperature_or_p": knob, "seed": seed}
            )
    return runs


def _ablation_run_config(base: RunConfig, run: Dict[str, Any]) -> RunConfig:
    data = base.model_dump(mode="json")
    data["model"]["alpha"] = run["alpha"]
    data["train"]["seed"] = run["seed"]
    schedule = data["train"]["schedule"]
    schedule.update({"samples_per_batch": run["m"], "mode": run["mode"], "annealed": run["annealed"], "seed": None})
    if run["mode"] == Constants.SCHEDULE_DETERMINISTIC:
        schedule["temperature"] = run["temperature_or_p"]
    else:
        schedule["concentration"] = run["temperature_or_p"]
    return config_manager.parse_run_config(data)


def cmd_ablate(config_path: str, out: Optional[str] = None) -> int:
    try:
        ablation = config_manager.load_ablation_config(config_path)
        T = ablation.base.model.task_count
        rows = []
        for index, run in enumerate(sweep_runs(ablation)):
            row: Dict[str, Any] = dict(run)
            try:
                run_config = _ablation_run_config(ablation.base, run)
                digest = json.dumps(run_config.model_dump(mode="json"), sort_keys=True).encode("utf-8")
                row["run_id"] = hashlib.sha256(digest).hexdigest()[:12]
                summary = run_training(run_config)["summary"]
                row["hv"] = summary["hv"]
                for t in range(T):
                    row[f"rho_{t + 1}"] = summary["alignment"][t]
                row["nondominated_count"] = summary["nondominated_count"]
                row["error"] = ""
                logger.info(f"Ablation run {index}: {run} hv={summary['hv']:.6f}")
            except PaloraError as e:
                row.setdefault("run_id", f"run{index:04d}")
                row["hv"] = float("nan")
                for t in range(T):
                    row[f"rho_{t + 1}"] = float("nan")
                row["nondominated_count"] = 0
                row["error"] = classify_error(e)[1]
                logger.error(f"Ablation run {index} failed: {row['error']}")
            rows.append(row)

        columns = (
            ["run_id", "m", "alpha", "mode", "annealed", "temperature_or_p", "seed", "hv"]
            + [f"rho_{t + 1}" for t in range(T)]
            + ["nondominated_count", "error"]
        )
        frame = pd.DataFrame(rows, columns=columns)
        out_dir = _output_dir(ablation.base, out, "ablation")
        write_frame(out_dir / Constants.FILE_ABLATION, frame)
        write_json(out_dir / Constants.FILE_ABLATION_SUMMARY, summarize_ablation(frame, T))
        return Constants.EXIT_OK
    except Exception as e:
        return _fail(e, "ablate")


def summarize_ablation(frame: pd.DataFrame, num_tasks: int) -> Dict[str, Any]:
    """Seed-averaged HV and rho per configuration, and the configuration with best mean HV."""
    frame = frame.copy()
    frame["mean_rho"] = frame[[f"rho_{t + 1}" for t in range(num_tasks)]].mean(axis=1)
    keys = ["m", "alpha", "mode", "annealed", "temperature_or_p"]

    configs = []
    for key, group in frame.groupby(keys, sort=False):
        entry = {name: (value.item() if hasattr(value, "item") else value) for name, value in zip(keys, key)}
        entry["mean_hv"] = float(group["hv"].mean())
        entry["mean_rho"] = float(group["mean_rho"].mean())
        entry["seeds"] = int(len(group))
        configs.append(entry)

    valid = [entry for entry in configs if np.isfinite(entry["mean_hv"])]
    best = max(valid, key=lambda entry: entry["mean_hv"]) if valid else None
    by_schedule = {
        f"{mode}_{'annealed' if annealed else 'fixed'}": float(group["mean_rho"].mean())
        for (mode, annealed), group in frame.groupby(["mode", "annealed"], sort=False)
    }
    return {"configs": configs, "best": best, "mean_rho_by_schedule": by_schedule}


def cmd_hv(csv_path: str, ref_point: Optional[str] = None) -> int:
    try:
        losses = read_loss_columns(csv_path)
        ref = parse_ref(ref_point)
        reference = auto_reference(losses) if ref is None else np.asarray(ref, dtype=np.float64)
        result = {
            "hv": hypervolume(losses, reference),
            "nondominated_count": len(nondominated_filter(losses)),
            "reference": reference.tolist(),
        }
        sys.stdout.write(json.dumps(result, sort_keys=True) + "\n")
        return Constants.EXIT_OK
    except Exception as e:
        return _fail(e, "hv")
