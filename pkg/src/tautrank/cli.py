"""Command-line entry point: ``tautrank <command> ...``.

Every command prints one JSON document (``schema: 1``) unless ``--text`` is
given.  Exit codes: 0 success / stabilized, 1 bad input or internal error,
2 computed but not stabilized (or too few routes to compare), 3 capability
error, 4 routes disagree.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .errors import CapabilityError, OracleInapplicable, ParseError, TautrankError

SCHEMA = 1
EXIT_OK, EXIT_ERROR, EXIT_UNSTABLE, EXIT_CAPABILITY, EXIT_DISAGREE = 0, 1, 2, 3, 4

log = logging.getLogger("tautrank")


@dataclass
class RunConfig:
    command: str
    model: str | None = None
    section: str | None = None
    dmax: int | None = None
    tmax: int | None = None
    stab_window: int = 2
    mode: str = "auto"
    output: str | None = None
    weight_zero: bool = False
    long_tests: bool = False
    experimental_g2n_derham: bool = False
    seed: int = 0
    text: bool = False
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("dmax", "tmax"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ParseError(f"--{name} must be positive", token=str(v))
        if self.stab_window < 2:
            raise ParseError("--stab-window must be at least 2", token=str(self.stab_window))


def _read_section_text(arg: str) -> str:
    if arg.startswith("@"):
        path = Path(arg[1:])
        try:
            return path.read_text().strip()
        except OSError as exc:
            raise ParseError(f"cannot read section file {path}: {exc.strerror}", token=arg) from None
    return arg


def load(cfg: RunConfig):
    from .models import parse_model, parse_section

    model = parse_model(cfg.model)
    section = parse_section(model, _read_section_text(cfg.section))
    return model, section


def _emit(cfg: RunConfig, payload: dict, headline) -> None:
    payload = {"schema": SCHEMA, **payload}
    text = json.dumps(payload, indent=2, default=str)
    if cfg.output:
        Path(cfg.output).write_text(text + "\n")
    if cfg.text:
        print(headline)
    elif not cfg.output:
        print(text)


# ---------------------------------------------------------------------------
# commands


def _max_rows(cfg: RunConfig):
    from .coinv import DEFAULT_MAX_ROWS

    # --long-tests lifts the row guard for slow instances
    return 10**9 if cfg.long_tests else DEFAULT_MAX_ROWS


def cmd_rank(cfg: RunConfig) -> int:
    from .coinv import coinvariant_rank

    model, f = load(cfg)
    rep = coinvariant_rank(model, f, cfg.dmax, cfg.stab_window, mode=cfg.mode, weight_zero=cfg.weight_zero,
                           max_rows=_max_rows(cfg))
    _emit(cfg, {"command": "rank", **rep.to_dict()}, rep.rank if rep.stabilized else "not stabilized")
    return EXIT_OK if rep.stabilized else EXIT_UNSTABLE


def cmd_derham(cfg: RunConfig) -> int:
    from .derham import twisted_cohomology_dim

    model, f = load(cfg)
    k = cfg.extra.get("k")
    mode = "exact" if cfg.mode == "auto" and model.kind == "pn" else cfg.mode
    rep = twisted_cohomology_dim(model, f, k, cfg.tmax, mode=mode, experimental=cfg.experimental_g2n_derham)
    _emit(cfg, {"command": "derham", **rep.to_dict()}, rep.dim if rep.stabilized else "not stabilized")
    if rep.finding and rep.finding.startswith("MISMATCH"):
        log.warning(rep.finding)
    return EXIT_OK if rep.stabilized else EXIT_UNSTABLE


def cmd_straighten(cfg: RunConfig) -> int:
    from .graphcalc import GraphSum, parse_graph, straighten_traced

    g = parse_graph(cfg.extra["graph"], cfg.extra["n"])
    steps = []
    out = straighten_traced(GraphSum.single(g), steps)
    _emit(cfg, {
        "command": "straighten",
        "input": str(g),
        "result": str(out),
        "terms": [{"graph": str(h), "coefficient": str(c)} for h, c in out.items()],
        "steps": [s.to_dict() for s in steps],
    }, str(out))
    return EXIT_OK


def cmd_rank1(cfg: RunConfig) -> int:
    from .coinv import verify_trace
    from .graphcalc import parse_graph, rank1_reduce

    N = cfg.extra["n"]
    g = parse_graph(cfg.extra["graph"], N)
    c, trace = rank1_reduce(N, g, cfg.extra.get("budget", 20_000))
    payload = {"command": "rank1", "constant": None if c is None else str(c), "trace": trace.to_dict()}
    ok = c is not None
    if ok:
        chk = verify_trace(trace)
        payload["verification"] = {
            "relations_verified": chk.relations_verified,
            "relations_total": chk.relations_total,
            "certificate_exact": chk.certificate_exact,
            "plucker_monotone": chk.plucker_monotone,
            "membership_constant": None if chk.membership_constant is None else str(chk.membership_constant),
            "ok": chk.ok,
        }
        ok = chk.ok
    _emit(cfg, payload, "unknown" if c is None else str(c))
    return EXIT_OK if ok else EXIT_UNSTABLE


def cmd_nu(cfg: RunConfig) -> int:
    from .oracle import count_a, nu

    n = cfg.extra["n"]
    v = nu(n)
    _emit(cfg, {"command": "nu", "n": n, "nu": v, "count_a": count_a(n)}, v)
    return EXIT_OK


def cmd_hilbert(cfg: RunConfig) -> int:
    from .oracle import hilbert_g2n

    N, d = cfg.extra["n"], cfg.extra["d"]
    v = hilbert_g2n(N, d)
    _emit(cfg, {"command": "hilbert", "N": N, "d": d, "value": v}, v)
    return EXIT_OK


def compare_routes(cfg: RunConfig) -> dict:
    """Run every applicable route and compare each stabilized pair as integers."""
    from .coinv import coinvariant_rank, jacobian_oracle
    from .derham import twisted_cohomology_dim
    from .oracle import is_complete, nu

    model, f = load(cfg)
    routes = {}
    rep = coinvariant_rank(model, f, cfg.dmax, cfg.stab_window, mode=cfg.mode, weight_zero=cfg.weight_zero,
                           confirm=False, max_rows=_max_rows(cfg))
    routes["coinvariants"] = {"value": rep.rank, "stabilized": rep.stabilized, "dims": rep.interior_dims}
    if model.kind == "pn" or cfg.experimental_g2n_derham:
        mode = "exact" if cfg.mode == "auto" and model.kind == "pn" else cfg.mode
        dr = twisted_cohomology_dim(model, f, None, cfg.tmax, mode=mode, experimental=cfg.experimental_g2n_derham)
        routes["derham"] = {"value": dr.dim, "stabilized": dr.stabilized, "dims": dr.interior_dims,
                            "experimental": dr.experimental}
    else:
        routes["derham"] = {"skipped": "G(2,N) form model is experimental; pass --experimental-g2n-derham"}
    if model.kind == "pn":
        try:
            routes["jacobian_oracle"] = {"value": jacobian_oracle(model.param, f), "stabilized": True}
        except OracleInapplicable as exc:
            routes["jacobian_oracle"] = {"skipped": str(exc)}
        if str(f) == "fermat":
            routes["nu_formula"] = {"value": nu(model.param), "stabilized": True}
    live = {k: v for k, v in routes.items() if v.get("stabilized")}
    pairs = []
    names = sorted(live)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            va, vb = live[a]["value"], live[b]["value"]
            pairs.append({"routes": [a, b], "values": [va, vb],
                          "agree": isinstance(va, int) and isinstance(vb, int) and va == vb})
    return {
        "model": model.id,
        "section": str(f),
        "complete": is_complete(model),
        "routes": routes,
        "pairs": pairs,
        "agree": bool(pairs) and all(p["agree"] for p in pairs),
    }


def cmd_compare(cfg: RunConfig) -> int:
    result = compare_routes(cfg)
    _emit(cfg, {"command": "compare", **result}, "agree" if result["agree"] else "no agreement")
    if not result["pairs"]:
        return EXIT_UNSTABLE
    return EXIT_OK if result["agree"] else EXIT_DISAGREE


COMMANDS = {
    "rank": cmd_rank,
    "derham": cmd_derham,
    "straighten": cmd_straighten,
    "rank1": cmd_rank1,
    "nu": cmd_nu,
    "hilbert": cmd_hilbert,
    "compare": cmd_compare,
}


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help="also write the JSON report to this file")
    common.add_argument("--text", action="store_true", help="print only the headline value")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    common.add_argument("--threads", type=int, help="worker threads (sets TAUTRANK_THREADS)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    truncation = argparse.ArgumentParser(add_help=False)
    truncation.add_argument("--model", required=True, help="pn:<n> or g2n:<N>")
    truncation.add_argument("--section", required=True, help="fermat, cyclic, @file or an inline polynomial")
    truncation.add_argument("--dmax", type=int, help="largest truncation degree for coinvariants")
    truncation.add_argument("--tmax", type=int, help="largest t for the twisted complex")
    truncation.add_argument("--stab-window", type=int, default=2)
    truncation.add_argument("--mode", choices=["auto", "exact", "modular"], default="auto")
    truncation.add_argument("--weight-zero", action="store_true", help="restrict to torus weight zero")
    truncation.add_argument("--long-tests", action="store_true", help="allow the slow instances")
    truncation.add_argument("--experimental-g2n-derham", action="store_true")

    p = argparse.ArgumentParser(prog="tautrank", description="Holonomic rank of tautological systems.")
    p.add_argument("--version", action="version", version=f"tautrank {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("rank", parents=[common, truncation], help="coinvariant dimension")
    d = sub.add_parser("derham", parents=[common, truncation], help="twisted de Rham cohomology")
    d.add_argument("--k", type=int, help="cohomological degree (default dim X)")
    sub.add_parser("compare", parents=[common, truncation], help="run all routes and compare")
    for name, helptext in (("straighten", "straighten a Plücker graph"), ("rank1", "certified rank-one reduction")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("--n", type=int, required=True, help="number of vertices N")
        s.add_argument("--graph", required=True, help="edges i-j,i-j,...")
        if name == "rank1":
            s.add_argument("--budget", type=int, default=20_000, help="maximum number of relations")
    s = sub.add_parser("nu", parents=[common], help="closed-form rank for P^n")
    s.add_argument("--n", type=int, required=True)
    s = sub.add_parser("hilbert", parents=[common], help="crossing-free graph count")
    s.add_argument("--n", type=int, required=True, help="number of vertices N")
    s.add_argument("--d", type=int, required=True, help="number of edges")
    return p


def config_from_args(ns) -> RunConfig:
    extra = {k: getattr(ns, k) for k in ("n", "d", "graph", "k", "budget") if getattr(ns, k, None) is not None}
    return RunConfig(
        command=ns.command,
        model=getattr(ns, "model", None),
        section=getattr(ns, "section", None),
        dmax=getattr(ns, "dmax", None),
        tmax=getattr(ns, "tmax", None),
        stab_window=getattr(ns, "stab_window", 2),
        mode=getattr(ns, "mode", "auto"),
        output=ns.output,
        weight_zero=getattr(ns, "weight_zero", False),
        long_tests=getattr(ns, "long_tests", False),
        experimental_g2n_derham=getattr(ns, "experimental_g2n_derham", False),
        seed=ns.seed,
        text=ns.text,
        extra=extra,
    )


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=[logging.WARNING, logging.INFO, logging.DEBUG][min(ns.verbose, 2)],
                        format="%(levelname)s %(name)s: %(message)s")
    if ns.threads:
        os.environ["TAUTRANK_THREADS"] = str(ns.threads)
    try:
        cfg = config_from_args(ns)
        return COMMANDS[cfg.command](cfg)
    except CapabilityError as exc:
        print(f"tautrank: capability error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except ParseError as exc:
        where = f" (at {exc.token!r})" if exc.token is not None else ""
        print(f"tautrank: parse error: {exc}{where}", file=sys.stderr)
        return EXIT_ERROR
    except TautrankError as exc:
        print(f"tautrank: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
