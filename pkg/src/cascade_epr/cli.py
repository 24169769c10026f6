"""Command-line front end: a thin client over the compute layer.

By default the requested command runs in-process through the same handlers the
HTTP service exposes; with ``--server`` the request is POSTed to a running
service instead and the CSV is written locally from the response.  Either way
the CSV bytes are identical.

Usage:
    cascade-epr --config run.cfg --output out.csv [--threads N]
                [--command NAME] [--server http://host:port]
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, GridSpec, RunConfig, parse_config_text
from .csvio import write_csv
from .runner import TableResult, run_command

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cascade-epr",
        description="Steady-state entanglement and force sensing for the cascaded "
        "spin-mechanics hybrid system.",
    )
    parser.add_argument("--config", required=True, help="path to the run configuration file")
    parser.add_argument("--output", required=True, help="path for the CSV result")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker processes for sweeps (0 = auto, default 1)")
    parser.add_argument("--command", default=None,
                        help="command name, overriding any 'command =' line in the config")
    parser.add_argument("--server", default=None,
                        help="base URL of a running service; when set, the run is "
                        "delegated over HTTP instead of computed in-process")
    return parser


def _params_to_wire(params: dict) -> dict:
    """Undo ingestion typing so the service re-validates the same content."""
    from .config import TWO_PI, _K

    wire = {}
    for key, val in params.items():
        kind = _K[key][0]
        if kind in ("rate_hz", "signed_hz"):
            wire[key] = val / TWO_PI
        elif kind == "grid_hz":
            wire[key] = f"{val.start / TWO_PI:.17g}:{val.stop / TWO_PI:.17g}:{val.count}:{val.scale}"
        elif isinstance(val, GridSpec):
            wire[key] = f"{val.start:.17g}:{val.stop:.17g}:{val.count}:{val.scale}"
        elif isinstance(val, tuple):
            wire[key] = ",".join(val)
        else:
            wire[key] = val
    return wire


def _run_remote(server: str, command: str, params: dict, threads: int) -> TableResult:
    import httpx

    body = dict(_params_to_wire(params))
    body["threads"] = threads
    url = server.rstrip("/") + f"/v1/{command}"
    resp = httpx.post(url, json=body, timeout=None)
    if resp.status_code != 200:
        raise RuntimeError(f"service error {resp.status_code}: {resp.text}")
    payload = resp.json()
    return TableResult(
        command=payload["command"],
        columns=payload["columns"],
        rows=payload["rows"],
        meta=payload["meta"],
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        print(f"cascade-epr: cannot read config: {err}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config_text(text, command_override=args.command)
        cfg = RunConfig(command=cfg.command, parameters=cfg.parameters,
                        output_path=args.output)
    except ConfigError as err:
        print(f"cascade-epr: config error: {err}", file=sys.stderr)
        return 2
    try:
        if args.server:
            table = _run_remote(args.server, cfg.command, cfg.parameters, args.threads)
        else:
            table = run_command(cfg.command, cfg.parameters, threads=args.threads)
    except Exception as err:  # solver diagnostics surface as nonzero exit
        print(f"cascade-epr: {type(err).__name__}: {err}", file=sys.stderr)
        return 1
    try:
        write_csv(cfg.output_path, table)
    except OSError as err:
        print(f"cascade-epr: cannot write output: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
