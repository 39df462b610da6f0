"""
Run orchestration: execute an experiment, write its data files and manifest.

Layout of an output directory::

    config.json       canonical config snapshot
    <table>.csv       one file per result table, 17 significant digits
    summary.json      headline scalars
    manifest.json     provenance, seeds, failure counts, SHA-256 of the above

Everything except ``manifest.json`` is a pure function of the config and the
code version.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .. import __version__
from ..disorder import mix_seed
from ..errors import BudgetExceeded, FailureBudgetExceeded, QuadratureError, ScanFailure, SingularAtE, SolverError
from .config import ConfigError, ExperimentConfig, scalar_fields
from .experiments import RUNNERS, ExperimentResult, Table, realizations_used

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2
EXIT_FAILURE = 3


def format_value(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def table_csv(t: Table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(t.columns)
    for row in t.rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else repr(f)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def canonical_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def sha256(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunOutcome:
    exit_code: int
    manifest: dict
    result: ExperimentResult | None
    error: str | None = None


def run(config: ExperimentConfig, output_dir: str | Path | None = None) -> RunOutcome:
    """Execute ``config`` and persist its outputs.

    The exit code is 0 on success, 1 when the experiment reports an
    invariant violation, and 3 when a budget, solver or failure-budget error
    aborts it.  Parameter errors that surface inside the run give 2; errors
    in the config file itself are raised before a run exists.
    """
    out = Path(config.output_dir if output_dir is None else output_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = _now()
    files: dict[str, str] = {}

    def emit(name: str, text: str):
        (out / name).write_text(text)
        files[name] = sha256(text)

    emit("config.json", config.to_json())
    result, error = None, None
    try:
        result = RUNNERS[config.kind](config)
    except FailureBudgetExceeded as exc:
        code, error = EXIT_FAILURE, str(exc)
        failures = {"n_failed": exc.n_failed, "n_total": exc.n_total}
    except (BudgetExceeded, SolverError, SingularAtE, ScanFailure, QuadratureError) as exc:
        code, error = EXIT_FAILURE, f"{type(exc).__name__}: {exc}"
        failures = {"n_failed": 0, "n_total": 0}
    except ValueError as exc:
        # invalid parameter combinations that only surface inside the run,
        # e.g. an energy grid point at the resonance
        code, error = EXIT_CONFIG, f"{type(exc).__name__}: {exc}"
        failures = {"n_failed": 0, "n_total": 0}
    if result is not None:
        for name, t in result.tables.items():
            emit(f"{name}.csv", table_csv(t))
        emit("summary.json", canonical_json(result.summary))
        code = EXIT_VIOLATION if result.violations else EXIT_OK
        failures = {"n_failed": result.n_failed, "n_total": result.n_total}

    manifest = {
        "config": config.to_dict(),
        "code_version": __version__,
        "started": started,
        "finished": _now(),
        "seeds": [mix_seed(config.master_seed, i) for i in range(realizations_used(config))],
        "failures": failures,
        "violations": [] if result is None else list(result.violations),
        "error": error,
        "exit_code": code,
        "files": files,
    }
    (out / "manifest.json").write_text(canonical_json(manifest))
    return RunOutcome(code, manifest, result, error)


def _coerce(field: str, value: str):
    base = ExperimentConfig(kind="theta")
    cur = getattr(base, field)
    if value in ("null", "None"):
        return None
    if field in ("d", "L", "n_realizations", "master_seed", "oversample"):
        return int(value)
    if isinstance(cur, float) or field in ("mu", "epsilon"):
        return float(value)
    return value


HEADLINE_KEYS = ("xi", "criterion", "K", "E0", "window_low", "window_high", "r_mean", "ipr_ratio",
                 "fit_fraction", "kappa", "worst_sigma_min_relative", "nonreal_fraction", "C1", "C2")


def sweep(base: ExperimentConfig, parameter: str, values: Sequence, output_dir: str | Path | None = None) -> RunOutcome:
    """One child run per value, in ``<output>/<parameter>-<i>``; a summary
    table collects each child's exit code and headline scalars.  Children
    reuse the base master seed, so a swept parameter sees common disorder."""
    if parameter not in scalar_fields():
        raise ConfigError(f"cannot sweep {parameter!r}; scalar fields are {scalar_fields()}")
    out = Path(base.output_dir if output_dir is None else output_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = _now()
    children, rows = [], []
    keys: list[str] = []
    for i, raw in enumerate(values):
        v = _coerce(parameter, raw) if isinstance(raw, str) else raw
        child_dir = out / f"{parameter}-{i:03d}"
        try:
            child = base.replace(**{parameter: v}, output_dir=str(child_dir))
            oc = run(child)
            summ = oc.result.summary if oc.result is not None else {}
            code, err = oc.exit_code, oc.error
        except ConfigError as exc:
            summ, code, err = {}, EXIT_CONFIG, str(exc)
        present = {k: summ[k] for k in HEADLINE_KEYS if k in summ and isinstance(summ[k], (int, float))}
        keys += [k for k in present if k not in keys]
        rows.append((v, code, present))
        children.append({"directory": child_dir.name, "value": v, "exit_code": code, "error": err})
    t = Table([parameter, "exit_code", *keys])
    t.rows = [(v, code, *[p.get(k, float("nan")) for k in keys]) for v, code, p in rows]
    text = table_csv(t)
    (out / "sweep_summary.csv").write_text(text)
    manifest = {
        "base_config": base.to_dict(),
        "parameter": parameter,
        "values": list(values),
        "code_version": __version__,
        "started": started,
        "finished": _now(),
        "children": children,
        "files": {"sweep_summary.csv": sha256(text)},
    }
    (out / "manifest.json").write_text(canonical_json(manifest))
    worst = EXIT_OK if not children else max(c["exit_code"] for c in children)
    return RunOutcome(worst, manifest, None)
