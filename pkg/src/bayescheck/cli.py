"""Command-line frontend for consistency checks, search, and inference.

The command line is a thin client: every subcommand parses its local files,
builds a JSON payload, calls the HTTP service (an in-process instance by
default, or a remote one via --server), and renders the response. Reports
go to standard output -- human-readable text by default, a JSON envelope
with --json -- and all progress notes go to standard error.

Exit codes: 0 success/consistent, 1 reproduction mismatch, 2 inconsistent,
3 undetermined, 4 search found nothing, 64 usage error, 65 parse error,
70 internal error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

from . import __version__
from .distributions import distribution_to_dict, load_distribution
from .errors import BayescheckError, InvalidDistribution, ParseError
from .inference import load_scores, scores_to_dict

EX_OK = 0
EX_MISMATCH = 1
EX_INCONSISTENT = 2
EX_UNDETERMINED = 3
EX_NOTHING_FOUND = 4
EX_USAGE = 64
EX_PARSE = 65
EX_SOFTWARE = 70

SPACE_CHOICES = {
    "bio": "bio",
    "dep": "dep_multi",
    "dep-multi": "dep_multi",
    "dep-single": "dep_single",
}

LOSS_CHOICES = ("nll", "one-vs-all", "sep-bio", "sep-dep")


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 64."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit a JSON report instead of text")
    common.add_argument("--seed", type=int, default=0, help="PRNG seed (echoed in every report)")
    common.add_argument("--jobs", type=int, default=1, help="worker threads for search trials")
    common.add_argument("--tie-tolerance", type=float, default=1e-9,
                        help="score gaps at or below this count as ties")
    common.add_argument("--server", default=None,
                        help="base URL of a running service (default: in-process)")
    return common


def build_parser() -> _Parser:
    parser = _Parser(prog="bayescheck",
                     description="Bayes-consistency checks for structured-prediction losses")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = _common_flags()
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("reproduce", parents=[common],
                       help="replay the bundled counterexample arguments")
    p.add_argument("target", choices=("ner", "dep", "singleroot", "all"))
    p.add_argument("--fixture-dir", default=None,
                   help="load fixtures from this directory instead of the bundled ones")

    p = sub.add_parser("check", parents=[common],
                       help="consistency verdict for a loss on a distribution file")
    p.add_argument("dist_file", help="distribution JSON file")
    p.add_argument("--loss", required=True, choices=LOSS_CHOICES)

    p = sub.add_parser("search", parents=[common],
                       help="random search for inconsistency counterexamples")
    p.add_argument("--loss", required=True, choices=LOSS_CHOICES)
    p.add_argument("--space", required=True, choices=sorted(SPACE_CHOICES))
    p.add_argument("--n", required=True, type=int, help="space size parameter")
    p.add_argument("--trials", required=True, type=int)
    p.add_argument("--alpha", type=float, default=1.0,
                   help="symmetric Dirichlet concentration for the draws")
    p.add_argument("--out", default="counterexamples",
                   help="directory for found counterexample files")

    p = sub.add_parser("infer", parents=[common],
                       help="MAP or marginal inference on a scores file")
    p.add_argument("scores_file", help="score-vector JSON file")
    p.add_argument("--mode", required=True, choices=("map", "marginal"))
    p.add_argument("--algo", default="auto", choices=("auto", "brute", "fast"))

    p = sub.add_parser("enumerate", parents=[common],
                       help="list every output of a space in enumeration order")
    p.add_argument("--space", required=True, choices=sorted(SPACE_CHOICES))
    p.add_argument("--n", required=True, type=int)

    p = sub.add_parser("serve", parents=[common], help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


# ---------------------------------------------------------------------------
# service client


class ServiceClient:
    """POSTs payloads to the service, in-process unless a URL is given."""

    def __init__(self, server: str | None):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server.rstrip("/"), timeout=600.0)
        else:
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app())

    def post(self, path: str, payload: dict) -> dict:
        response = self._client.post(path, json=payload)
        try:
            body = response.json()
        except ValueError:
            raise ServiceError(EX_SOFTWARE, f"service returned non-JSON for {path}")
        if response.status_code == 200:
            return body
        if response.status_code == 400:
            error = body.get("error", "")
            detail = body.get("detail", "")
            code = EX_PARSE if error in ("ParseError", "InvalidDistribution") else EX_SOFTWARE
            raise ServiceError(code, f"{error}: {detail}")
        if response.status_code == 422:
            raise ServiceError(EX_USAGE, f"service rejected the request shape: {body}")
        raise ServiceError(EX_SOFTWARE, f"service error {response.status_code}: {body}")


class ServiceError(Exception):
    def __init__(self, exit_code: int, message: str):
        super().__init__(message)
        self.exit_code = exit_code


# ---------------------------------------------------------------------------
# report envelope


def _digest(payload: dict) -> str:
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _report(args, payload: dict, results: dict, wall: float) -> dict:
    return {
        "command": args.command,
        "inputs_digest": _digest(payload),
        "seed": args.seed,
        "version": __version__,
        "wall_time_s": round(wall, 6),
        "results": results,
    }


def _emit(args, report: dict, text_lines: list[str]) -> None:
    if args.json:
        sys.stdout.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write("\n".join(text_lines) + "\n")


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    return repr(value)


def _parts(output: dict | None) -> str:
    if output is None:
        return "none"
    return "{" + ", ".join("(" + ", ".join(map(str, p)) + ")" for p in output["parts"]) + "}"


# ---------------------------------------------------------------------------
# subcommands


def _verdict_lines(results: dict) -> list[str]:
    lines = [
        f"status: {results['status']}",
        f"loss: {results['loss']}",
        f"space: {results['space']['kind']} n={results['space']['n']}",
        f"minimizer source: {results['minimizer_source']}"
        + (" (empirical)" if results["flags"]["empirical"] else ""),
    ]
    if results.get("minimizer"):
        coords = "  ".join(
            f"{tuple(e['part'])}={_fmt(e['value'])}" for e in results["minimizer"]
        )
        lines.append(f"minimizer: {coords}")
    if results.get("nll_residual") is not None:
        lines.append(f"nll residual: {_fmt(results['nll_residual'])}"
                     + (" (realizable)" if results["flags"]["realizable"] else ""))
    lines.append("modes: " + ", ".join(_parts(m) for m in results["modes"]))
    if results.get("witness"):
        lines.append(
            f"witness: mode {_parts(results['witness']['mode'])}"
            f" outscored by {_parts(results['witness']['other'])}"
            f" gap {_fmt(results['gap'])}"
        )
    elif results.get("gap") is not None:
        lines.append(f"mode score margin: {_fmt(results['gap'])}")
    if results.get("map_output") is not None:
        lines.append(f"map output: {_parts(results['map_output'])}")
    if results.get("zero_one") is not None:
        z = results["zero_one"]
        opt = "optimal" if z["is_optimal"] else "suboptimal"
        lines.append(f"zero-one risk: {_fmt(z['value'])} (bayes {_fmt(z['bayes'])}, {opt})")
    if results.get("reason"):
        lines.append(f"reason: {results['reason']}")
    return lines


def _cmd_check(args, client: ServiceClient) -> int:
    try:
        dist = load_distribution(args.dist_file)
    except (ParseError, InvalidDistribution) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_PARSE
    payload = {
        "loss": args.loss,
        "distribution": distribution_to_dict(dist),
        "tie_tolerance": args.tie_tolerance,
    }
    started = time.monotonic()
    results = client.post("/check", payload)
    report = _report(args, payload, results, time.monotonic() - started)
    _emit(args, report, _verdict_lines(results))
    return {
        "consistent": EX_OK,
        "inconsistent": EX_INCONSISTENT,
        "undetermined": EX_UNDETERMINED,
    }[results["status"]]


def _cmd_infer(args, client: ServiceClient) -> int:
    try:
        space, w = load_scores(args.scores_file)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_PARSE
    payload = {
        "mode": args.mode,
        "scores": scores_to_dict(space, w),
        "algo": args.algo,
    }
    started = time.monotonic()
    results = client.post("/infer", payload)
    lines = [f"space: {results['space']['kind']} n={results['space']['n']}",
             f"algorithm: {results['algorithm']}"]
    if args.mode == "map":
        lines.append(f"map output: {_parts(results['output'])}")
        lines.append(f"score: {_fmt(results['score'])}")
    else:
        for entry in results["marginals"]:
            lines.append(f"part {tuple(entry['part'])}: {_fmt(entry['value'])}")
        lines.append(f"log partition: {_fmt(results['log_partition'])}")
    report = _report(args, payload, results, time.monotonic() - started)
    _emit(args, report, lines)
    return EX_OK


def _cmd_search(args, client: ServiceClient) -> int:
    if args.trials < 0:
        print("error: --trials must be nonnegative", file=sys.stderr)
        return EX_USAGE
    payload = {
        "loss": args.loss,
        "space": {"kind": SPACE_CHOICES[args.space], "n": args.n},
        "trials": args.trials,
        "seed": args.seed,
        "alpha": args.alpha,
        "jobs": args.jobs,
        "tie_tolerance": args.tie_tolerance,
    }
    started = time.monotonic()
    results = client.post("/search", payload)
    wall = time.monotonic() - started
    # the worker count cannot change the result set, so it stays out of the digest
    digest_src = {k: v for k, v in payload.items() if k != "jobs"}

    out_dir = Path(args.out)
    written = []
    if results["counterexamples"]:
        out_dir.mkdir(parents=True, exist_ok=True)
        for entry in results["counterexamples"]:
            name = f"counterexample-{entry['trial']:04d}.json"
            (out_dir / name).write_text(
                json.dumps(entry["distribution"], indent=2, sort_keys=True) + "\n"
            )
            written.append(name)
        summary = {k: v for k, v in results.items() if k != "counterexamples"}
        summary["files"] = written
        (out_dir / "summary.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n"
        )
        print(f"wrote {len(written)} counterexample files to {out_dir}", file=sys.stderr)

    lines = [
        f"loss: {results['loss']}",
        f"space: {results['space']['kind']} n={results['space']['n']}",
        f"trials: {results['trials']}  seed: {results['seed']}  alpha: {_fmt(results['alpha'])}",
        f"found: {results['found']}",
    ]
    for entry in results["counterexamples"]:
        v = entry["verdict"]
        lines.append(
            f"  trial {entry['trial']}: witness {_parts(v['witness']['mode'])}"
            f" outscored by {_parts(v['witness']['other'])} gap {_fmt(v['gap'])}"
        )
    report = _report(args, digest_src, results, wall)
    _emit(args, report, lines)
    if results["found"] > 0:
        return EX_OK
    if args.loss == "nll" and args.trials > 0:
        return EX_OK
    return EX_NOTHING_FOUND


def _cmd_reproduce(args, client: ServiceClient) -> int:
    payload = {
        "target": args.target,
        "fixture_dir": args.fixture_dir,
        "tie_tolerance": args.tie_tolerance,
    }
    started = time.monotonic()
    results = client.post("/reproduce", payload)
    lines = []
    for target in results["targets"]:
        lines.append(f"== {target['target']} ==")
        for check in target["checks"]:
            tag = "info" if check["informational"] else ("PASS" if check["ok"] else "FAIL")
            lines.append(f"[{tag}] {check['name']}")
            lines.append(f"       expected: {check['expected']}")
            lines.append(f"       computed: {check['computed']}")
    lines.append("all checks passed" if results["ok"] else "MISMATCH: some checks failed")
    report = _report(args, payload, results, time.monotonic() - started)
    _emit(args, report, lines)
    return EX_OK if results["ok"] else EX_MISMATCH


def _cmd_enumerate(args, client: ServiceClient) -> int:
    payload = {"space": {"kind": SPACE_CHOICES[args.space], "n": args.n}}
    started = time.monotonic()
    results = client.post("/enumerate", payload)
    lines = [f"space: {results['space']['kind']} n={results['space']['n']}",
             f"count: {results['count']}"]
    lines.extend(_parts(y) for y in results["outputs"])
    report = _report(args, payload, results, time.monotonic() - started)
    _emit(args, report, lines)
    return EX_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EX_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "serve":
        return _cmd_serve(args)
    try:
        client = ServiceClient(args.server)
        handler = {
            "check": _cmd_check,
            "infer": _cmd_infer,
            "search": _cmd_search,
            "reproduce": _cmd_reproduce,
            "enumerate": _cmd_enumerate,
        }[args.command]
        return handler(args, client)
    except ServiceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except BayescheckError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_SOFTWARE


if __name__ == "__main__":
    sys.exit(main())
