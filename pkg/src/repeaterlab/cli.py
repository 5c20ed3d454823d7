"""Command-line entry point: ``python3 -m repeaterlab <mode> [options]``.

Every mode reads an optional JSON config (``--config``) and lets the common
chain parameters be overridden by flags. Results go to ``<out>/<mode>.csv``
and ``<out>/<mode>.json``; the JSON copy carries the config echo, the root
seed and the package version. Sub-seeds (batches, sweep points) are spawned
from the root seed with ``numpy.random.SeedSequence``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .chain import ChainConfig
from .correlations import Observable, equal_time_correlator, unequal_time_correlator
from .exact import evaluate_exact, value_iteration_optimal
from .io import load_json, result_row, save_qtable, version_string, write_results
from .montecarlo import average_cutoff, evaluate_policy
from .nesting import NestedConfig, effective_upper_config, nested_simulate, split_chain
from .policies import policy_from_descriptor
from .qlearning import Hyperparams, train

MODES = ("train", "evaluate", "exact", "optimal", "correlate", "cutoffs", "nest", "sweep")


class UsageError(ValueError):
    pass


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON experiment config")
    common.add_argument("--seed", type=int, default=None, help="root seed (default 0, or the config's)")
    common.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    common.add_argument("--transfer", action="store_true", help="allow Q-tables trained for other probabilities")
    common.add_argument("--include-noop-action", action="store_true", help="add the do-nothing action")
    common.add_argument("--n", type=int)
    common.add_argument("--m-star", type=int)
    common.add_argument("--p-link", type=str, help="one value, or comma-separated per link")
    common.add_argument("--p-swap", type=float)
    common.add_argument("--policy", type=str, help="swap-asap-fixed, swap-asap-dynamic, random, wait-for-all, tabular")
    common.add_argument("--qtable", type=Path, help="Q-table file for --policy tabular")
    common.add_argument("--batches", type=int)
    common.add_argument("--runs", type=int)
    common.add_argument("--episodes", type=int, help="training episodes")

    p = argparse.ArgumentParser(prog="repeaterlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=version_string())
    sub = p.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        sub.add_parser(mode, parents=[common])
    return p


def _parse_plink(text: str):
    vals = [float(x) for x in text.split(",")]
    return vals[0] if len(vals) == 1 else vals


def _merged_config(args) -> dict:
    doc = load_json(args.config) if args.config else {}
    chain = dict(doc.get("chain", {}))
    for key, val in (("n", args.n), ("m_star", args.m_star), ("p_swap", args.p_swap)):
        if val is not None:
            chain[key] = val
    if args.p_link is not None:
        chain["p_link"] = _parse_plink(args.p_link)
    if args.include_noop_action:
        chain["allow_noop"] = True
    doc["chain"] = chain
    if args.policy is not None:
        doc["policy"] = {"kind": args.policy}
    if args.qtable is not None:
        doc.setdefault("policy", {"kind": "tabular"})["qtable"] = str(args.qtable)
    if args.transfer:
        doc.setdefault("policy", {})["transfer"] = True
    for key in ("batches", "runs"):
        if getattr(args, key) is not None:
            doc[key] = getattr(args, key)
    if args.episodes is not None:
        doc.setdefault("hyper", {})["episodes"] = args.episodes
    doc["seed"] = args.seed if args.seed is not None else int(doc.get("seed", 0))
    return doc


def _chain(doc: dict) -> ChainConfig:
    chain = doc.get("chain") or {}
    missing = [k for k in ("n", "m_star", "p_link", "p_swap") if k not in chain]
    if missing:
        raise UsageError(f"chain config is missing {', '.join(missing)}")
    return ChainConfig.from_dict(chain)


def _policy(doc: dict, config: ChainConfig, key: str = "policy"):
    desc = doc.get(key)
    if not desc:
        raise UsageError(f"no {key} given")
    return policy_from_descriptor(desc, config)


def _policy_name(doc: dict, key: str = "policy") -> str:
    return doc.get(key, {}).get("kind", "?")


def run_train(doc, seed):
    cfg = _chain(doc)
    hyper = Hyperparams(**doc.get("hyper", {}))
    reward = doc.get("reward", "waiting")
    table = train(cfg, hyper, reward, seed)
    out = Path(doc["_out"])
    out.mkdir(parents=True, exist_ok=True)
    save_qtable(table, out / "qtable.json")
    ex = evaluate_exact(table.greedy_policy(), cfg)
    return [result_row("train", cfg, "tabular", "waiting_exact", ex["waiting"], 0.0, seed=seed),
            result_row("train", cfg, "tabular", "fidelity_exact", ex["fidelity"], 0.0, seed=seed)]


def _eval_rows(mode, cfg, name, ev, batches, runs, seed):
    return [result_row(mode, cfg, name, m, getattr(ev, m).mean, getattr(ev, m).std_error, batches, runs, seed)
            for m in ("waiting", "age", "fidelity")]


def run_evaluate(doc, seed):
    cfg = _chain(doc)
    batches, runs = int(doc.get("batches", 50)), int(doc.get("runs", 1000))
    ev = evaluate_policy(_policy(doc, cfg), cfg, batches, runs, seed)
    return _eval_rows("evaluate", cfg, _policy_name(doc), ev, batches, runs, seed)


def run_exact(doc, seed):
    cfg = _chain(doc)
    ex = evaluate_exact(_policy(doc, cfg), cfg)
    return [result_row("exact", cfg, _policy_name(doc), m, ex[m], 0.0, seed=seed) for m in ("waiting", "age", "fidelity")]


def run_optimal(doc, seed):
    cfg = _chain(doc)
    _, value, _ = value_iteration_optimal(cfg)
    return [result_row("optimal", cfg, "value-iteration", "waiting", value, 0.0, seed=seed)]


def run_correlate(doc, seed):
    cfg = _chain(doc)
    block = doc.get("correlate") or {}
    pair = block.get("pair")
    if not pair or len(pair) != 2:
        raise UsageError('correlate needs "correlate": {"pair": ["request:1", "request:2"]}')
    obs = (Observable.parse(pair[0]), Observable.parse(pair[1]))
    pol = _policy(doc, cfg)
    batches, runs = int(doc.get("batches", 50)), int(doc.get("runs", 1000))
    name = _policy_name(doc)
    label = f"r[{obs[0]},{obs[1]}]"
    if block.get("protocol", "equal") == "equal":
        est = equal_time_correlator(pol, cfg, obs, batches, runs, seed)
        return [result_row("correlate", cfg, name, label, est.mean, est.std_error, batches, runs, seed)]
    taus = block.get("taus", list(range(0, 11)))
    res = unequal_time_correlator(pol, cfg, obs, int(block.get("t", 5)), taus, batches, runs, seed)
    return [result_row("correlate", cfg, name, f"{label}@tau={tau}", e.mean, e.std_error, batches, runs, seed)
            for tau, e in res.items()]


def run_cutoffs(doc, seed):
    cfg = _chain(doc)
    runs = int(doc.get("runs", 10_000))
    cut = average_cutoff(_policy(doc, cfg), cfg, runs, seed)
    return [result_row("cutoffs", cfg, _policy_name(doc), f"cutoff_link_{i + 1}", float(c), math.nan, 1, runs, seed)
            for i, c in enumerate(cut)]


def run_nest(doc, seed):
    block = doc.get("nesting")
    if not block:
        raise UsageError('nest needs a "nesting" block')
    chain = doc.get("chain") or {}
    total, seg_n = int(block["total_nodes"]), int(block["segment_nodes"])
    segs = split_chain(total, seg_n, int(chain["m_star"]), chain["p_link"], float(chain["p_swap"]))
    lower = [policy_from_descriptor(block["lower"], s) for s in segs]
    upper_cfg = effective_upper_config(segs, lower, float(chain["p_swap"]))
    up_desc = block["upper"]
    if up_desc.get("kind") == "tabular" and not up_desc.get("qtable"):
        hyper = Hyperparams(**doc.get("hyper", {}))
        upper = train(upper_cfg, hyper, "waiting", seed).greedy_policy()
    else:
        upper = policy_from_descriptor(dict(up_desc, transfer=True), upper_cfg)
    nc = NestedConfig(segs, tuple(lower), upper_cfg, upper)
    batches, runs = int(doc.get("batches", 50)), int(doc.get("runs", 1000))
    w, a = nested_simulate(nc, batches, runs, seed)
    full = ChainConfig(total, int(chain["m_star"]), tuple(p for s in segs for p in s.p_link), float(chain["p_swap"]))
    name = f"{block['lower'].get('kind')}/{up_desc.get('kind')}"
    return [result_row("nest", full, name, "waiting", w.mean, w.std_error, batches, runs, seed),
            result_row("nest", full, name, "age", a.mean, a.std_error, batches, runs, seed)]


def _sweep_point(args):
    doc, p, seed, metric = args
    d = json.loads(json.dumps(doc))
    d["chain"]["p_link"] = p
    cfg = _chain(d)
    pol = _policy(d, cfg)
    name = _policy_name(d)
    if metric == "exact":
        return [result_row("sweep", cfg, name, "waiting", evaluate_exact(pol, cfg)["waiting"], 0.0, seed=seed)]
    batches, runs = int(d.get("batches", 50)), int(d.get("runs", 1000))
    ev = evaluate_policy(pol, cfg, batches, runs, seed)
    return _eval_rows("sweep", cfg, name, ev, batches, runs, seed)


def run_sweep(doc, seed):
    block = doc.get("sweep") or {}
    grid = block.get("p_link")
    if not grid:
        raise UsageError('sweep needs "sweep": {"p_link": [...]}')
    metric = block.get("metric", "evaluate")
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(len(grid))]
    jobs = [(doc, p, s, metric) for p, s in zip(grid, seeds)]
    workers = max(1, min(int(os.environ.get("REPEATER_LAB_THREADS", "1")), len(jobs)))
    if workers == 1:
        parts = [_sweep_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_sweep_point, jobs))
    return [r for part in parts for r in part]


RUNNERS = {
    "train": run_train,
    "evaluate": run_evaluate,
    "exact": run_exact,
    "optimal": run_optimal,
    "correlate": run_correlate,
    "cutoffs": run_cutoffs,
    "nest": run_nest,
    "sweep": run_sweep,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    out = args.out
    try:
        doc = _merged_config(args)
        seed = doc["seed"]
        doc["_out"] = str(out)
        rows = RUNNERS[args.mode](doc, seed)
        echo = {k: v for k, v in doc.items() if not k.startswith("_")}
        write_results(rows, out, args.mode, {"mode": args.mode, "seed": seed, "config": echo,
                                             "version": version_string()})
    except Exception as exc:  # every failure leaves a machine-readable record
        record = {"error": type(exc).__name__, "message": str(exc), "mode": args.mode}
        print(json.dumps(record), file=sys.stderr)
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.json").write_text(json.dumps(record))
        except OSError:
            pass
        return 2 if isinstance(exc, UsageError) else 1
    for r in rows:
        print(f"{r['policy']:>20} {r['metric']:>24} {r['mean']:.6g} ± {r['std_error']:.3g}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
