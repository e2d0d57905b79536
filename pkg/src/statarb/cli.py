"""Command-line interface.

Subcommands: synth, features, backtest, report, serve. Each command builds the
same request model the HTTP service accepts and either executes it in-process
(default) or POSTs it to a running service via --server.

Exit codes: 0 success, 2 configuration/validation failure (machine-readable
report on stderr and, for backtest, error.json in the output directory),
1 any other error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from .backtest import write_error_report
from .config import load_config
from .errors import ConfigError, StatArbError
from .service import ops
from .service.schemas import (
    BacktestRequest,
    FeaturesRequest,
    ReportRequest,
    SynthRequest,
    SynthSpec,
)


def _csv_ints(text):
    return tuple(int(p) for p in text.split(",") if p.strip())


def _csv_floats(text):
    return tuple(float(p) for p in text.split(",") if p.strip())


def _csv_modes(text):
    return tuple(p.strip().upper() for p in text.split(",") if p.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="statarb",
        description="State-space factor-model statistical arbitrage engine",
    )
    parser.add_argument("--server", help="URL of a running service; POST instead of local run")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic market panel")
    p_synth.add_argument("--config", help="INI file; [synth] section supplies parameters")
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.add_argument("--seed", type=int)
    p_synth.add_argument("--assets", type=int, dest="n_assets")
    p_synth.add_argument("--factors", type=int, dest="n_factors")
    p_synth.add_argument("--days", type=int)
    p_synth.add_argument("--sigma-f", type=float, dest="sigma_f")
    p_synth.add_argument("--sigma-r", type=float, dest="sigma_r")
    p_synth.add_argument("--market-vol", type=float, dest="market_vol")
    p_synth.add_argument("--mispricing-scale", type=float, dest="mispricing_scale")

    p_feat = sub.add_parser("features", help="compute risk-factor exposures from CSVs")
    p_feat.add_argument("--assets-csv", required=True)
    p_feat.add_argument("--index-csv", required=True)
    p_feat.add_argument("--out", required=True, help="output CSV path")

    p_bt = sub.add_parser("backtest", help="run the full backtest grid")
    p_bt.add_argument("--config", help="INI configuration file")
    p_bt.add_argument("--out", help="output directory (overrides config)")
    p_bt.add_argument("--seed", type=int)
    p_bt.add_argument("--mode", type=_csv_modes, help="comma list from KF,UKF,OLS,BENCH")
    p_bt.add_argument("--tc-bps", type=_csv_floats, dest="tc_bps")
    p_bt.add_argument("--ws", type=_csv_ints)
    p_bt.add_argument("--long-z", type=float, dest="long_z")
    p_bt.add_argument("--short-z", type=float, dest="short_z")
    p_bt.add_argument("--hedge", action=argparse.BooleanOptionalAction, default=None)
    p_bt.add_argument("--blend", action=argparse.BooleanOptionalAction, default=None)
    p_bt.add_argument("--transition", choices=["neural", "identity"])
    p_bt.add_argument("--emit-signals", action="store_true", default=None)
    p_bt.add_argument("--emit-diagnostics", action="store_true", default=None)

    p_rep = sub.add_parser("report", help="recompute summaries from an emitted run")
    p_rep.add_argument("--run-dir", required=True)

    p_srv = sub.add_parser("serve", help="run the HTTP service")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8000)

    return parser


def _remote(server: str, path: str, payload: dict, http_client=None) -> dict:
    import httpx

    if http_client is not None:
        response = http_client.post(path, json=payload)
    else:
        with httpx.Client(base_url=server, timeout=3600.0) as client:
            response = client.post(path, json=payload)
    body = response.json()
    if response.status_code != 200:
        raise StatArbError(f"server error {response.status_code}: {json.dumps(body)}")
    return body


def _synth_request(args) -> SynthRequest:
    if args.config:
        spec = SynthSpec.from_config(load_config(args.config).synth)
    else:
        spec = SynthSpec()
    for name in (
        "seed", "n_assets", "n_factors", "days", "sigma_f", "sigma_r",
        "market_vol", "mispricing_scale",
    ):
        value = getattr(args, name, None)
        if value is not None:
            spec = spec.model_copy(update={name: value})
    return SynthRequest(synth=spec, out_dir=args.out)


def _backtest_request(args) -> BacktestRequest:
    overrides = {}
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.mode is not None:
        overrides["modes"] = args.mode
    if args.tc_bps is not None:
        overrides["tc_bps_list"] = args.tc_bps
    if args.ws is not None:
        overrides["ws_list"] = args.ws
    if (args.long_z is None) != (args.short_z is None):
        raise ConfigError(["--long-z and --short-z must be given together"])
    if args.long_z is not None:
        overrides["thresholds"] = ((args.long_z, args.short_z),)
    for name in ("hedge", "blend", "transition", "emit_signals", "emit_diagnostics"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    cfg = load_config(args.config, overrides)
    cfg.validated()
    return BacktestRequest.from_run_config(cfg)


def main(argv=None, http_client=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out_dir_for_errors: Optional[str] = None
    try:
        if args.command == "synth":
            req = _synth_request(args)
            if args.server:
                body = _remote(args.server, "/synth", req.model_dump(), http_client)
            else:
                body = ops.run_synth(req).model_dump()
            print(json.dumps(body, indent=2, sort_keys=True))
            return 0

        if args.command == "features":
            req = FeaturesRequest(
                assets_csv=args.assets_csv, index_csv=args.index_csv, out_csv=args.out
            )
            if args.server:
                body = _remote(args.server, "/features", req.model_dump(), http_client)
            else:
                body = ops.run_features(req).model_dump()
            print(json.dumps(body, indent=2, sort_keys=True))
            return 0

        if args.command == "backtest":
            req = _backtest_request(args)
            out_dir_for_errors = req.out_dir
            if args.server:
                body = _remote(args.server, "/backtest", req.model_dump(), http_client)
            else:
                body = ops.run_backtest_op(req).model_dump()
            _print_backtest_digest(body)
            return 0

        if args.command == "report":
            req = ReportRequest(run_dir=args.run_dir)
            if args.server:
                body = _remote(args.server, "/report", req.model_dump(), http_client)
            else:
                body = ops.run_report(req).model_dump()
            print(json.dumps({k: body[k] for k in ("consistent", "max_rel_diff")}, indent=2))
            return 0 if body["consistent"] else 1

        if args.command == "serve":
            import uvicorn

            from .service import app

            uvicorn.run(app, host=args.host, port=args.port)
            return 0
    except ConfigError as exc:
        report = {
            "error_type": "ConfigError",
            "message": str(exc),
            "problems": exc.problems,
        }
        print(json.dumps(report, indent=2, sort_keys=True), file=sys.stderr)
        if out_dir_for_errors:
            write_error_report(out_dir_for_errors, exc)
        return 2
    except StatArbError as exc:
        print(
            json.dumps(
                {"error_type": type(exc).__name__, "message": str(exc)},
                indent=2,
                sort_keys=True,
            ),
            file=sys.stderr,
        )
        if out_dir_for_errors:
            write_error_report(out_dir_for_errors, exc)
        return 1
    parser.error(f"unknown command {args.command!r}")
    return 1


def _print_backtest_digest(body: dict) -> None:
    summary = body["summary"]
    print(f"run complete: {body['out_dir']}")
    panel = summary["panel"]
    print(
        f"panel: {panel['assets']} assets x {panel['days']} days "
        f"({panel['first_date']} .. {panel['last_date']})"
    )
    header = f"{'grid point':<34}{'mean ann Sharpe':>16}{'pooled':>10}{'max DD':>10}"
    print(header)
    for point_id in sorted(summary["results"]):
        perf = summary["results"][point_id]["perf"]

        def fmt(v, width):
            return f"{'NA':>{width}}" if v is None else f"{v:>{width}.3f}"

        print(
            f"{point_id:<34}"
            f"{fmt(perf['mean_annual_sharpe'], 16)}"
            f"{fmt(perf['pooled_sharpe'], 10)}"
            f"{fmt(perf['max_drawdown'], 10)}"
        )


if __name__ == "__main__":
    sys.exit(main())
