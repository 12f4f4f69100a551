"""Command-line front end; a thin client over the analysis service.

By default requests run against an in-process service instance; pass
--server to target a running one.  Exit codes: 0 success, 2 invalid spec,
3 numerical failure."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

EXIT_OK, EXIT_SPEC, EXIT_NUMERIC = 0, 2, 3


class ServiceClient:
    def __init__(self, server=None):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=600.0)
        else:
            import warnings

            with warnings.catch_warnings():
                warnings.filterwarnings("ignore", message="Using .httpx.")
                from fastapi.testclient import TestClient

                from .service import create_app

                self._client = TestClient(create_app())

    def request(self, method, path, **kwargs):
        return self._client.request(method, path, **kwargs)


def _read_spec(path):
    p = Path(path)
    if not p.exists():
        print(f"error: spec file not found: {path}", file=sys.stderr)
        raise SystemExit(EXIT_SPEC)
    return p.read_text()


def _handle_error(resp):
    try:
        payload = resp.json()
    except json.JSONDecodeError:
        payload = {"kind": "numeric", "message": resp.text}
    kind = payload.get("kind")
    message = payload.get("message", payload.get("detail", resp.text))
    where = ""
    if payload.get("line") is not None:
        where = f" (line {payload['line']}"
        where += f", col {payload['col']})" if payload.get("col") is not None else ")"
    print(f"error: {message}{where}", file=sys.stderr)
    if resp.status_code == 422 and kind != "numeric":
        raise SystemExit(EXIT_SPEC)
    raise SystemExit(EXIT_NUMERIC)


def _write_out(text, out):
    if out:
        Path(out).write_text(text)
    else:
        print(text)


def cmd_analyze(args, client):
    body = {"spec_text": _read_spec(args.spec), "samples": args.samples,
            "seed": args.seed, "tol": args.tol}
    resp = client.request("POST", "/analyze", json=body)
    if resp.status_code != 200:
        _handle_error(resp)
    data = resp.json()
    if args.json or args.out:
        _write_out(data["canonical"], args.out)
        if args.out and not args.json:
            _print_summary(data["report"])
    else:
        _print_summary(data["report"])
    return EXIT_OK


def _print_summary(rep):
    from .report import human_summary

    print(human_summary(rep))


def cmd_verify(args, client):
    body = {"spec_text": _read_spec(args.spec), "samples": args.samples,
            "seed": args.seed, "tol": args.tol}
    resp = client.request("POST", "/verify", json=body)
    if resp.status_code != 200:
        _handle_error(resp)
    data = resp.json()
    for check in data["checks"]:
        status = "ok  " if check["passed"] else "FAIL"
        print(f"[{status}] {check['name']}: {check['detail']}")
    if not data["passed"]:
        print("verification failed", file=sys.stderr)
        return EXIT_NUMERIC
    print("all checks passed")
    return EXIT_OK


def cmd_transform(args, client):
    body = {"spec_text": _read_spec(args.spec), "op": args.op}
    if args.q:
        body["q"] = json.loads(args.q)
    if args.c_e is not None:
        body["c_e"] = args.c_e
    if args.axis is not None:
        body["axis"] = args.axis
    if args.l is not None:
        body["l"] = args.l
    if args.f is not None:
        body["f"] = args.f
    resp = client.request("POST", "/transform", json=body)
    if resp.status_code != 200:
        _handle_error(resp)
    _write_out(resp.json()["spec_text"], args.out)
    return EXIT_OK


def cmd_couple(args, client):
    body = {"spec_texts": [_read_spec(p) for p in args.specs],
            "strategy": args.strategy, "c_lambda": args.c_lambda}
    if args.copies:
        body["copies"] = args.copies
    if args.e:
        body["e"] = json.loads(args.e)
    if args.lam:
        body["lam"] = json.loads(args.lam)
    if args.b:
        body["b"] = json.loads(args.b)
    if args.rank1:
        body["rank1"] = args.rank1
    resp = client.request("POST", "/couple", json=body)
    if resp.status_code != 200:
        _handle_error(resp)
    _write_out(resp.json()["spec_text"], args.out)
    return EXIT_OK


def cmd_catalog(args, client):
    params = {"count": args.samples or 256, "seed": args.seed or 0}
    if args.n is not None:
        params["n"] = args.n
    if args.gamma is not None:
        params["gamma"] = args.gamma
    resp = client.request("GET", f"/catalog/{args.id}", params=params)
    if resp.status_code != 200:
        _handle_error(resp)
    _write_out(resp.json()["spec_text"], args.out)
    return EXIT_OK


def cmd_serve(args, client=None):
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def _add_common(p):
    p.add_argument("--samples", type=int, default=None, help="sample count override")
    p.add_argument("--seed", type=int, default=None, help="sampling seed override")
    p.add_argument("--tol", type=float, default=None, help="nullspace tolerance")
    p.add_argument("--out", default=None, help="write output to this path")
    p.add_argument("--server", default=None, help="base URL of a running service")


def build_parser():
    parser = argparse.ArgumentParser(prog="consym",
                                     description="Symmetry analysis of conservation-law systems")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="run the full analysis pipeline on a spec file")
    p.add_argument("spec")
    p.add_argument("--json", action="store_true", help="print the canonical machine report")
    _add_common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", help="run the invariant suite for a spec file")
    p.add_argument("spec")
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("transform", help="apply a system transformation")
    p.add_argument("spec")
    p.add_argument("--op", required=True, choices=["qu", "reduce", "exchange", "zeta-f"])
    p.add_argument("--q", help="matrix for op=qu as a JSON list of rows")
    p.add_argument("--c-e", dest="c_e", type=float, help="fixed value for reduce/exchange")
    p.add_argument("--axis", type=int, help="component to fix for reduce (default: last)")
    p.add_argument("--l", type=int, help="coordinate for exchange")
    p.add_argument("--f", help="level map expression in z1 for zeta-f")
    _add_common(p)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("couple", help="couple systems with strategy A or B")
    p.add_argument("specs", nargs="+")
    p.add_argument("--strategy", required=True, choices=["A", "B"])
    p.add_argument("--copies", type=int, help="copy count when a single spec is given (A)")
    p.add_argument("--e", help="phase direction as JSON (strategy A)")
    p.add_argument("--lam", help="weight vector as JSON (strategy A)")
    p.add_argument("--c-lambda", dest="c_lambda", type=float, default=0.0)
    p.add_argument("--b", help="mixing matrix as JSON rows (strategy B)")
    p.add_argument("--rank1", nargs=2, type=float, metavar=("ALPHA", "BETA"),
                   help="rank-one mixing weights (strategy B)")
    _add_common(p)
    p.set_defaults(func=cmd_couple)

    p = sub.add_parser("catalog", help="emit a built-in system as a spec file")
    p.add_argument("id")
    p.add_argument("--n", type=int)
    p.add_argument("--gamma", type=float)
    _add_common(p)
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("serve", help="run the analysis service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8410)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        return cmd_serve(args)
    client = ServiceClient(getattr(args, "server", None))
    return args.func(args, client)


if __name__ == "__main__":
    sys.exit(main())
