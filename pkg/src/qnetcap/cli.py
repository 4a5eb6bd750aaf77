"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 physics-domain error,
4 unknown node id.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import random
import sys
import warnings
from importlib import resources

from .config import PRESETS, ScenarioConfig, get_preset, trajectory_from_args
from .errors import (
    ChannelError,
    ConfigError,
    DomainError,
    NoSolution,
    NodeNotFound,
    NotRegular,
    QuadratureError,
    SameCommunity,
    SpecMismatch,
    TooLarge,
    WeakTurbulenceViolated,
)
from .modular import (
    IdealModularSpec,
    ModularNetwork,
    edge_connectivity,
    fig2_layout,
    h_min,
    h_min_formula,
    isolation_oracle,
    random_ideal_network,
    theorem1_thresholds,
)
from .network import Network, brute_force_min_cut, capacities_from_channels, flooding_capacity, single_path_capacity
from .optics import build_channel
from .planner import sweep_csv

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_NODE = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(f"{self.prog}: {message}")


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True, default=_json_default))
    else:
        print(text)


def _json_default(x):
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, (set, frozenset, tuple)):
        return sorted(map(str, x))
    return str(x)


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    return x


# ---------------------------------------------------------------- channel

def cmd_channel(args) -> int:
    cfg = ScenarioConfig.load(args.config) if args.config else ScenarioConfig.from_preset(args.preset)
    if args.set:
        cfg = cfg.with_overrides(args.set)
    traj = trajectory_from_args(args.kind, {
        "z": args.z, "h": args.h, "h_sat": args.h_sat, "theta": args.theta, "h1": args.h1, "h2": args.h2,
    }, default_h=cfg.community_altitude)
    condition = args.condition or cfg.condition
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ch = build_channel(cfg.setup, cfg.atmosphere, traj, condition=condition, strict=not args.lenient)
        cap = ch.capacity()
    notes = [str(w.message) for w in caught]
    for n in notes:
        print(f"warning: {n}", file=sys.stderr)
    payload = {
        "kind": traj.kind.value, "z_m": traj.z, "eta": ch.eta, "n_bar": ch.n_bar,
        "capacity": cap.value, "bound_kind": cap.kind.value,
        "diagnostics": _clean(dict(ch.diagnostics)), "warnings": notes,
    }
    lines = [f"{traj.kind.value} link, z = {traj.z:.6g} m",
             f"  eta       = {ch.eta:.6g}",
             f"  n_bar     = {ch.n_bar:.6g}",
             f"  capacity  = {cap.value:.6g} bits/use ({cap.kind.value})"]
    lines += [f"  {k:<9} = {v:.6g}" if isinstance(v, float) else f"  {k:<9} = {v}" for k, v in ch.diagnostics.items()]
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK


# ---------------------------------------------------------------- network

def _load_network(path) -> Network:
    if path == "example":
        text = resources.files("qnetcap").joinpath("data/example_network.json").read_text()
        net = Network.from_dict(json.loads(text))
    elif path == "theorem1-demo":
        text = resources.files("qnetcap").joinpath("data/theorem1_demo.json").read_text()
        net = Network.from_dict(json.loads(text))
    else:
        net = Network.load(path)
    if any(e.channel is not None for e in net.edges):
        net = capacities_from_channels(net)
    return net


def cmd_network(args) -> int:
    net = _load_network(args.network)
    net.index(args.alpha)
    net.index(args.beta)
    if args.mode == "single":
        res = single_path_capacity(net, args.alpha, args.beta)
        payload = {"mode": "single", "value": res.value, "route": list(res.route), "kind": res.kind.value}
        text = f"single-path capacity {res.value:.10g} ({res.kind.value})\n  route: {' -> '.join(map(str, res.route)) or '(none)'}"
    else:
        res = flooding_capacity(net, args.alpha, args.beta)
        cut = res.min_cut
        payload = {"mode": "multi", "value": res.value, "kind": res.kind.value,
                   "cut_A": sorted(map(str, cut.A)), "cut_B": sorted(map(str, cut.B)),
                   "cut_edges": [[str(e.u), str(e.v), e.capacity] for e in cut.cut_set]}
        text = (f"flooding capacity {res.value:.10g} ({res.kind.value})\n"
                f"  min cut A: {', '.join(sorted(map(str, cut.A)))}\n"
                f"  cut-set:  " + "; ".join(f"{e.u}-{e.v} ({e.capacity:.6g})" for e in cut.cut_set))
        if args.check:
            bf = brute_force_min_cut(net, args.alpha, args.beta, "multi")
            payload["brute_force"] = bf.multi_edge_capacity
            text += f"\n  brute force: {bf.multi_edge_capacity:.10g}"
    _emit(args, payload, text)
    return EXIT_OK


# ---------------------------------------------------------------- modular

def _threshold_report(mod: ModularNetwork, alpha, beta, k_b: int, args) -> int:
    ca, cb = mod.community_of(alpha), mod.community_of(beta)
    k_c = {c: edge_connectivity(mod.community_graph(c)) for c in (ca, cb)}
    spec = IdealModularSpec(k_b, k_c)
    th = theorem1_thresholds(mod, spec, alpha, beta)
    flood = flooding_capacity(mod.base, alpha, beta).value
    payload = {
        "global_community": th.global_community, "flooding": flood, "k_c": {str(k): v for k, v in k_c.items()},
        "h_min_star": th.h_min_star, "c_min_backbone": th.c_min_backbone,
        "c_min_community": {str(k): v for k, v in th.c_min_community.items()},
        "thresholds_satisfied": th.satisfied,
    }
    if th.satisfied:
        head = f"thresholds satisfied; flooding = global-community = {th.global_community:.10g}"
        if abs(flood - th.global_community) > 1e-9 * max(1.0, th.global_community):
            head += f" (VIOLATION: flooding is {flood:.10g})"
    else:
        head = f"thresholds violated; flooding = {flood:.10g} <= global-community = {th.global_community:.10g}"
    text = "\n".join([
        head,
        f"  H*_min = {th.h_min_star}, backbone threshold = {th.c_min_backbone:.6g}",
        "  community thresholds: " + ", ".join(f"{c}: {v:.6g} (k_c={k_c[c]})" for c, v in th.c_min_community.items()),
    ])
    _emit(args, payload, text)
    return EXIT_OK


def cmd_modular(args) -> int:
    if args.action == "report":
        mod = ModularNetwork(_load_network(args.network))
        if args.alpha is None or args.beta is None:
            raise ConfigError("modular report needs --alpha and --beta")
        mod.base.index(args.alpha)
        mod.base.index(args.beta)
        return _threshold_report(mod, args.alpha, args.beta, args.k_b, args)
    if args.action == "demo":
        r = random_ideal_network(random.Random(args.seed))
        if args.verbose:
            print(f"seed {args.seed}: alpha={r.alpha} beta={r.beta}", file=sys.stderr)
        return _threshold_report(r.mod, r.alpha, r.beta, r.spec.k_b, args)
    if args.action == "hmin":
        net, targets = fig2_layout(args.layout)
        f, o, h = h_min_formula(4, targets, net), isolation_oracle(net, targets), h_min(4, targets, net)
        _emit(args, {"layout": args.layout, "formula": f, "oracle": o, "h_min": h},
              f"{args.layout}: H_min = {h} (closed form {f}, max-flow oracle {o})")
        return EXIT_OK
    raise ConfigError(f"unknown modular action {args.action!r}")


# ---------------------------------------------------------------- sweep / presets

def cmd_sweep(args) -> int:
    cfg = ScenarioConfig.load(args.config) if args.config else ScenarioConfig.from_preset(args.preset)
    overrides = list(args.set or [])
    if args.figure:
        overrides.append(f"sweep.figure={args.figure}")
    if overrides:
        cfg = cfg.with_overrides(overrides)
    text = sweep_csv(cfg)
    if args.output and args.output != "-":
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_presets(args) -> int:
    if args.action == "list":
        payload = {n: p.title for n, p in PRESETS.items()}
        _emit(args, payload, "\n".join(f"{n:<15} {p.title}" for n, p in PRESETS.items()))
        return EXIT_OK
    if args.action == "config":
        print(ScenarioConfig.from_preset(args.name).to_json())
        return EXIT_OK
    p = get_preset(args.name)
    width = max(len(r[0]) for r in p.rows)
    lines = [p.title, ""] + [f"{a:<{width}}  {b:<10} {c}" for a, b, c in p.rows]
    _emit(args, p.to_dict(), "\n".join(lines))
    return EXIT_OK


# ---------------------------------------------------------------- wiring

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--seed", type=int, default=0, help="RNG seed for generated instances")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="qnetcap", description="End-to-end capacities of hybrid quantum networks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("channel", parents=[common], help="capacity of one link")
    c.add_argument("--preset", default="table2", choices=sorted(PRESETS))
    c.add_argument("--config", help="scenario JSON (overrides --preset)")
    c.add_argument("--kind", default="ground", choices=["ground", "uplink", "downlink", "intersat", "intersatellite"])
    c.add_argument("--z", help="link length (m, or with m/km suffix)")
    c.add_argument("--h", help="ground altitude")
    c.add_argument("--h-sat", dest="h_sat", help="satellite altitude")
    c.add_argument("--theta", type=float, default=0.0, help="zenith angle (rad)")
    c.add_argument("--h1")
    c.add_argument("--h2")
    c.add_argument("--condition", choices=["clear-night", "cloudy-day", "clear-day"])
    c.add_argument("--lenient", action="store_true", help="downgrade weak-turbulence errors to warnings")
    c.add_argument("--set", action="append", metavar="KEY=VALUE", help="dotted config override")
    c.set_defaults(func=cmd_channel)

    n = sub.add_parser("network", parents=[common], help="end-to-end capacity of a network file")
    n.add_argument("network", help="network JSON path, or 'example' / 'theorem1-demo'")
    n.add_argument("--alpha", required=True)
    n.add_argument("--beta", required=True)
    n.add_argument("--mode", choices=["single", "multi"], default="multi")
    n.add_argument("--check", action="store_true", help="also run exhaustive cut enumeration")
    n.set_defaults(func=cmd_network)

    m = sub.add_parser("modular", parents=[common], help="modular-network thresholds and H_min")
    m.add_argument("action", choices=["report", "demo", "hmin"])
    m.add_argument("network", nargs="?", default="theorem1-demo")
    m.add_argument("--alpha")
    m.add_argument("--beta")
    m.add_argument("--k-b", dest="k_b", type=int, default=4)
    m.add_argument("--layout", choices=["sparse", "shared", "single"], default="shared")
    m.set_defaults(func=cmd_modular)

    s = sub.add_parser("sweep", parents=[common], help="constraint or capacity curves as CSV")
    s.add_argument("--preset", default="table1-setup1", choices=sorted(PRESETS))
    s.add_argument("--config")
    s.add_argument("--figure", choices=["fig1", "fig3a", "fig3c", "fig4a", "fig4b"])
    s.add_argument("--set", action="append", metavar="KEY=VALUE")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_sweep)

    pr = sub.add_parser("presets", parents=[common], help="list or show parameter presets")
    pr.add_argument("action", choices=["list", "show", "config"])
    pr.add_argument("name", nargs="?", default="table1-setup1")
    pr.set_defaults(func=cmd_presets)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
        return args.func(args)
    except NodeNotFound as exc:
        print(f"error: unknown node {exc.args[0]!r}", file=sys.stderr)
        return EXIT_NODE
    except (ConfigError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, WeakTurbulenceViolated, QuadratureError, ChannelError, NoSolution,
            SameCommunity, SpecMismatch, NotRegular, TooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
