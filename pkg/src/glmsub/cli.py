"""Thin command-line client for the HTTP service.

Every subcommand builds a request, sends it to the service and formats
the response.  By default the service runs in-process, so no server is
needed; pass --server to talk to a remote instance instead.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path


def _ints(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _names(text: str) -> list[str]:
    return [tok.strip() for tok in text.split(",") if tok.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glmsub",
        description="Subsampled estimation for generalized linear models.",
    )
    parser.add_argument(
        "--server",
        metavar="URL",
        default=None,
        help="base URL of a running service; default runs it in-process",
    )

    data = argparse.ArgumentParser(add_help=False)
    src = data.add_argument_group("dataset")
    src.add_argument("--case", type=int, choices=(1, 2, 3, 4), help="synthetic design 1-4")
    src.add_argument("--csv", metavar="PATH", help="CSV file with a header row")
    src.add_argument("--family", default=None, choices=("gaussian", "poisson", "bernoulli"))
    src.add_argument("--n", type=int, default=10000, help="rows for synthetic designs")
    src.add_argument("--p", type=int, default=7, help="columns for synthetic designs")
    src.add_argument("--beta-true", type=_floats, default=None, metavar="B1,B2,...")
    src.add_argument("--data-seed", type=int, default=0, help="seed for the synthetic draw")
    src.add_argument("--response-col", default="y", help="CSV response column name")
    src.add_argument("--covariate-cols", type=_names, default=None, metavar="C1,C2,...")
    src.add_argument("--add-intercept", action="store_true")
    src.add_argument("--standardize", action="store_true")

    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("--seed", type=int, default=0, help="master seed for replicates")
    run.add_argument("--delta", type=float, default=1e-6, help="residual floor")
    run.add_argument("--level", type=float, default=0.95, help="confidence level")
    run.add_argument("--out", metavar="PATH", help="write the JSON report here")
    run.add_argument("--methods", type=_names, default=["mV", "mVc", "UNIF"])
    run.add_argument("--r0", type=int, default=200, help="pilot subsample size")
    run.add_argument("--k-reps", type=int, default=500, help="Monte Carlo replicates")

    sub = parser.add_subparsers(dest="command", required=True)

    q = sub.add_parser("fit", parents=[data], help="full-data maximum likelihood fit")
    q.add_argument("--out", metavar="PATH")

    q = sub.add_parser("probs", parents=[data], help="per-row sampling probabilities")
    q.add_argument("--method", default="mV", choices=("UNIF", "mV", "mVc", "Lev", "LevA"))
    q.add_argument("--mode", default="oracle", choices=("oracle", "pilot"))
    q.add_argument("--r0", type=int, default=200, help="pilot size for --mode pilot")
    q.add_argument("--delta", type=float, default=1e-6)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--head", type=int, default=8, help="rows to print")
    q.add_argument("--out", metavar="PATH")

    q = sub.add_parser("mse", parents=[data, run], help="error versus the full-data fit")
    q.add_argument("--r", type=_ints, default=[300, 500, 700, 1000, 1200, 1400],
                   metavar="R1,R2,...", help="refine sizes")
    q.add_argument("--squared", action="store_true", help="average squared distances")
    q.add_argument("--mspe", action="store_true", help="also track prediction error")
    q.add_argument("--raw-csv", metavar="PATH", help="write per-replicate errors")

    q = sub.add_parser("coverage", parents=[data, run], help="interval coverage study")
    q.add_argument("--r", type=_ints, default=[500, 1000], metavar="R1,R2,...")
    q.add_argument("--coord", type=int, default=1, help="0-based coefficient index")

    q = sub.add_parser("allocation", parents=[data, run], help="pilot share sweep")
    q.add_argument("--budget", type=int, required=True, help="total draws per replicate")
    q.add_argument("--proportions", type=_floats,
                   default=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
                   metavar="Q1,Q2,...", help="pilot shares of the budget")

    q = sub.add_parser("timing", parents=[data, run], help="wall-clock comparison")
    q.add_argument("--r", type=int, default=1000, help="refine size")
    q.add_argument("--reps", type=int, default=50)
    q.add_argument("--warmup", type=int, default=5)
    q.add_argument("--no-full", action="store_true", help="skip the full-data baseline")

    q = sub.add_parser("serve", help="run the HTTP service")
    q.add_argument("--host", default="127.0.0.1")
    q.add_argument("--port", type=int, default=8000)

    return parser


def _dataset_payload(args) -> dict:
    if args.csv and args.case:
        raise SystemExit("choose either --case or --csv, not both")
    if args.csv:
        payload = {
            "kind": "csv",
            "path": args.csv,
            "response_column": args.response_col,
            "family": args.family or "gaussian",
            "add_intercept": args.add_intercept,
            "standardize": args.standardize,
        }
        if args.covariate_cols:
            payload["covariate_columns"] = args.covariate_cols
        return payload
    if args.case:
        payload = {
            "kind": "case",
            "case_id": args.case,
            "n": args.n,
            "p": args.p,
            "family": args.family or "poisson",
            "seed": args.data_seed,
        }
        if args.beta_true is not None:
            payload["beta_true"] = args.beta_true
        return payload
    raise SystemExit("a dataset is required: pass --case N or --csv PATH")


def _request(args, path: str, payload: dict) -> dict:
    import httpx

    if args.server:
        with httpx.Client(base_url=args.server, timeout=None) as client:
            resp = client.post(path, json=payload)
    else:
        from fastapi.testclient import TestClient

        from .service.app import app

        with TestClient(app) as client:
            resp = client.post(path, json=payload)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        raise SystemExit(f"request failed ({resp.status_code}): {detail}")
    return resp.json()


def _write_json(path: str, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _emit_report(args, body: dict) -> None:
    print(body["text"])
    if args.out:
        _write_json(args.out, body["report"])
    raw_csv = getattr(args, "raw_csv", None)
    if raw_csv:
        with open(raw_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "r0", "r", "replicate", "value"])
            for cell in body["report"]["cells"]:
                for k, value in enumerate(cell.get("values") or []):
                    writer.writerow(
                        [cell["method"], cell["pilot_size"], cell["refine_size"], k, value]
                    )


def _experiment_payload(args) -> dict:
    return {
        "dataset": _dataset_payload(args),
        "methods": args.methods,
        "pilot_size": args.r0,
        "n_reps": args.k_reps,
        "seed": args.seed,
        "delta": args.delta,
        "ci_level": args.level,
    }


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "serve":
        import uvicorn

        uvicorn.run("glmsub.service.app:app", host=args.host, port=args.port)
        return 0

    if args.command == "fit":
        body = _request(args, "/fit", {"dataset": _dataset_payload(args)})
        state = "converged" if body["converged"] else f"NOT converged ({body['message']})"
        print(f"{body['family']} fit on {body['n']} x {body['p']}: "
              f"{state} after {body['iterations']} iterations")
        for j, b in enumerate(body["beta"]):
            print(f"  beta[{j}] = {b: .6f}")
        if args.out:
            _write_json(args.out, body)
        return 0

    if args.command == "probs":
        payload = {
            "dataset": _dataset_payload(args),
            "method": args.method,
            "delta": args.delta,
            "mode": args.mode,
            "pilot_size": args.r0,
            "seed": args.seed,
        }
        body = _request(args, "/probs", payload)
        probs = body["probs"]
        print(f"{body['method']} probabilities for {len(probs)} rows "
              f"(delta={body['delta']:g})")
        for i, q in enumerate(probs[: args.head]):
            print(f"  row {i}: {q:.3e}")
        if len(probs) > args.head:
            print(f"  ... {len(probs) - args.head} more rows")
        if args.out:
            _write_json(args.out, body)
        return 0

    if args.command == "mse":
        payload = _experiment_payload(args)
        payload.update(
            r_grid=args.r,
            squared_error=args.squared,
            include_mspe=args.mspe,
            include_raw=bool(args.raw_csv),
        )
        _emit_report(args, _request(args, "/experiments/mse", payload))
        return 0

    if args.command == "coverage":
        payload = _experiment_payload(args)
        payload.update(r_grid=args.r, coverage_coord=args.coord)
        _emit_report(args, _request(args, "/experiments/coverage", payload))
        return 0

    if args.command == "allocation":
        payload = _experiment_payload(args)
        payload.update(budget=args.budget, proportions=args.proportions)
        _emit_report(args, _request(args, "/experiments/allocation", payload))
        return 0

    if args.command == "timing":
        payload = _experiment_payload(args)
        payload.update(
            refine_size=args.r,
            n_reps=args.reps,
            warmup=args.warmup,
            include_full=not args.no_full,
        )
        _emit_report(args, _request(args, "/experiments/timing", payload))
        return 0

    raise SystemExit(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
