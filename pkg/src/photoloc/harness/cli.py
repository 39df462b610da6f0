"""
``photoloc`` command line.

    photoloc run CONFIG            run a config file
    photoloc sweep CONFIG -p L -v 64,128,256
    photoloc schema                print the config JSON schema
    photoloc <kind> [--config F] [--<key> VALUE ...]

Per-kind subcommands take one flag per config key; flags override values
read from ``--config``.  List-valued keys take comma-separated numbers.
"""

from __future__ import annotations

import sys
from dataclasses import fields

import click

from .. import __version__
from .config import KINDS, ConfigError, ExperimentConfig, schema_json
from .runner import EXIT_CONFIG, run, sweep

_INT_KEYS = {"d", "L", "n_realizations", "master_seed", "oversample"}
_LIST_KEYS = {f.name for f in fields(ExperimentConfig) if isinstance(f.default, tuple)}


def _parse_list(text: str) -> list[float]:
    text = text.strip()
    return [float(x) for x in text.split(",") if x.strip()] if text else []


def _report(outcome) -> None:
    m = outcome.manifest
    click.echo(f"exit_code={outcome.exit_code}")
    for v in m.get("violations", []):
        click.echo(f"violation: {v}", err=True)
    if outcome.error:
        click.echo(f"error: {outcome.error}", err=True)
    if outcome.result is not None:
        for k in sorted(outcome.result.summary):
            click.echo(f"{k}={outcome.result.summary[k]}")


def _load(path: str | None, kind: str | None, overrides: dict) -> ExperimentConfig:
    data = ExperimentConfig.load(path).to_dict() if path else {}
    if kind is not None:
        if data and data.get("kind") != kind:
            raise ConfigError(f"config file is for kind {data.get('kind')!r}, not {kind!r}")
        data["kind"] = kind
    data.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(data)


@click.group()
@click.version_option(__version__, prog_name="photoloc")
def main():
    """Lattice photon localization experiments."""


@main.command("run")
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--output-dir", default=None, help="override the config's output directory")
def run_cmd(config, output_dir):
    """Run the experiment described by CONFIG."""
    try:
        cfg = _load(config, None, {"output_dir": output_dir})
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    oc = run(cfg)
    _report(oc)
    sys.exit(oc.exit_code)


@main.command("sweep")
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("-p", "--parameter", required=True, help="scalar config key to vary")
@click.option("-v", "--values", default="", help="comma-separated values (empty: no runs)")
@click.option("--output-dir", default=None)
def sweep_cmd(config, parameter, values, output_dir):
    """Run CONFIG once per value of PARAMETER."""
    try:
        cfg = _load(config, None, {"output_dir": output_dir})
        vals = [v.strip() for v in values.split(",") if v.strip()]
        oc = sweep(cfg, parameter, vals)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    click.echo(f"exit_code={oc.exit_code} children={len(oc.manifest['children'])}")
    sys.exit(oc.exit_code)


@main.command("schema")
def schema_cmd():
    """Print the JSON schema of config files."""
    click.echo(schema_json(), nl=False)


def _kind_command(kind: str):
    def callback(config, **kw):
        over = {}
        for k, v in kw.items():
            if v is None:
                continue
            over[k] = _parse_list(v) if k in _LIST_KEYS else v
        try:
            cfg = _load(config, kind, over)
        except (ConfigError, ValueError) as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        oc = run(cfg)
        _report(oc)
        sys.exit(oc.exit_code)

    params = [click.Option(["--config"], type=click.Path(exists=True, dir_okay=False), default=None,
                           help="config file; flags override its values")]
    for f in fields(ExperimentConfig):
        if f.name == "kind":
            continue
        if f.name in _LIST_KEYS:
            typ = str
        elif f.name in _INT_KEYS:
            typ = int
        elif f.name in ("boundary", "variant", "reduction", "output_dir"):
            typ = str
        else:
            typ = float
        decls = [f"--{f.name}"] + ([f"--{f.name.replace('_', '-')}"] if "_" in f.name else []) + [f.name]
        params.append(click.Option(decls, type=typ, default=None, show_default=False,
                                   help=f"config key {f.name} (default {f.default!r})"))
    return click.Command(kind, callback=callback, params=params, help=f"Run one {kind} experiment.")


for _k in KINDS:
    main.add_command(_kind_command(_k))


if __name__ == "__main__":  # pragma: no cover
    main()
