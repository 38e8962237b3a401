"""Command-line front end.

Subcommands: verify (named checks, JSON reports + summary figure), scan
(phase-diagram CSV + figure), exact / mc (disorder-average tables), sample
(one realization's bond table). Numeric tables are CSV with '.' decimals and a
header row; structured reports are JSON. Figures are rendered next to every
table unless --no-plot.

Exit codes: 0 all checks pass, 1 any FAIL, 3 INCONCLUSIVE (and no FAIL),
2 usage or configuration errors. All randomness flows from one seed
(--seed > config file > NLGLASS_SEED > 0).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import mc, theory, verify
from .exact import EnumerationCapError
from .model import ModelSpec, build_laws, realization_to_csv, realize

CHECK_NAMES = ("nishimori", "internal-energy", "p-mono", "n-mono", "lemma5",
               "lemma6", "lemma7", "lemma8-chain", "thm2-couplings",
               "thm2-correlations", "thm3-decay", "dq-dt", "mc-crosscheck", "all")


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.entry(args)
    except EnumerationCapError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def _build_parser():
    p = argparse.ArgumentParser(prog="nlglass",
                                description="Nishimori-line spin-glass laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, help="JSON configuration document")
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--beta", type=float)
        sp.add_argument("--N", type=int)
        sp.add_argument("--L", type=int)
        sp.add_argument("--family", choices=("dyson", "long_range"))
        sp.add_argument("--samples", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--k-sigma", type=float, dest="k_sigma")
        sp.add_argument("--engine", choices=("exact", "mc"))
        sp.add_argument("--out", type=Path, default=Path("out"))
        sp.add_argument("--no-plot", action="store_true")

    sp = sub.add_parser("verify", help="run named verification checks")
    common(sp)
    sp.add_argument("--check", required=True, choices=CHECK_NAMES)
    sp.add_argument("--pair", type=str, help="site pair i,j")
    sp.add_argument("--sizes", type=str, help="comma list of L values (thm3-decay)")
    sp.add_argument("--t", type=float, default=0.5, help="interpolation point (dq-dt)")
    sp.set_defaults(entry=cmd_verify)

    sp = sub.add_parser("scan", help="parameter grid of the closed-form bounds")
    common(sp)
    sp.add_argument("--alpha-min", type=float, default=1.05)
    sp.add_argument("--alpha-max", type=float, default=1.45)
    sp.add_argument("--alpha-step", type=float, default=0.05)
    sp.add_argument("--beta-min", type=float, default=0.05)
    sp.add_argument("--beta-max", type=float, default=16.0)
    sp.add_argument("--beta-points", type=int, default=25)
    sp.set_defaults(entry=cmd_scan)

    sp = sub.add_parser("exact", help="exact disorder-average tables")
    common(sp)
    sp.set_defaults(entry=cmd_exact)

    sp = sub.add_parser("mc", help="Monte Carlo disorder-average tables")
    common(sp)
    sp.add_argument("--sweeps", type=int)
    sp.add_argument("--burn-in", type=int, dest="burn_in")
    sp.add_argument("--thin", type=int)
    sp.add_argument("--ladder", type=str, help="comma list of beta rungs")
    sp.add_argument("--swap-interval", type=int, dest="swap_interval")
    sp.add_argument("--trace", action="store_true",
                    help="also dump the kept-sample trace CSV")
    sp.set_defaults(entry=cmd_mc)

    sp = sub.add_parser("sample", help="dump one disorder realization as CSV")
    common(sp)
    sp.add_argument("--sample-index", type=int, default=0)
    sp.set_defaults(entry=cmd_sample)
    return p


# ---------------------------------------------------------------------------
# configuration assembly

def _load_config(args) -> dict:
    doc = {}
    if args.config:
        doc = json.loads(Path(args.config).read_text())
        if not isinstance(doc, dict):
            raise ValueError("config document must be a JSON object")
    return doc


def _seed_of(args, doc) -> int:
    if args.seed is not None:
        return args.seed
    if "seed" in doc:
        return int(doc["seed"])
    return int(os.environ.get("NLGLASS_SEED", "0"))


def _policy_of(args, doc, default_samples=None) -> verify.VerifyPolicy:
    kw = {}
    samples = args.samples if args.samples is not None else doc.get("samples", default_samples)
    if samples is not None:
        kw["n_samples"] = int(samples)
    if args.k_sigma is not None:
        kw["k_sigma"] = args.k_sigma
    elif "k_sigma" in doc:
        kw["k_sigma"] = float(doc["k_sigma"])
    if args.workers is not None:
        kw["workers"] = args.workers
    elif "workers" in doc:
        kw["workers"] = int(doc["workers"])
    if args.engine is not None:
        kw["engine"] = args.engine
    elif "engine" in doc:
        kw["engine"] = doc["engine"]
    kw["seed"] = _seed_of(args, doc)
    return verify.VerifyPolicy(**kw)


def _spec_of(args, doc, default_family="dyson", **defaults) -> ModelSpec:
    get = lambda flag, key, dv: flag if flag is not None else doc.get(key, dv)
    family = get(args.family, "family", defaults.get("family", default_family))
    alpha = float(get(args.alpha, "alpha", defaults.get("alpha", 1.25)))
    beta = float(get(args.beta, "beta", defaults.get("beta", 1.0)))
    kw = dict(family=family, alpha=alpha, beta=beta)
    if family == "dyson":
        kw["N"] = int(get(args.N, "N", defaults.get("N", 3)))
        if doc.get("variance_overrides") is not None:
            kw["variance_overrides"] = tuple(doc["variance_overrides"])
    elif family == "long_range":
        kw["L"] = int(get(args.L, "L", defaults.get("L", 8)))
    return ModelSpec(**kw)


def _mc_config_of(args, doc, seed, **defaults) -> mc.MCConfig:
    sub = doc.get("mc", {})
    get = lambda flag, key, dv: flag if flag is not None else sub.get(key, dv)
    sweeps = int(get(getattr(args, "sweeps", None), "sweeps", defaults.get("sweeps", 200000)))
    burn = int(get(getattr(args, "burn_in", None), "burn_in", defaults.get("burn_in", max(1, sweeps // 10))))
    thin = int(get(getattr(args, "thin", None), "thinning", defaults.get("thinning", 2)))
    swap = int(get(getattr(args, "swap_interval", None), "swap_interval", 10))
    ladder = getattr(args, "ladder", None)
    if ladder is not None:
        ladder = tuple(float(x) for x in str(ladder).split(","))
    elif sub.get("ladder") is not None:
        ladder = tuple(float(x) for x in sub["ladder"])
    else:
        ladder = ()
    return mc.MCConfig(sweeps=sweeps, burn_in=burn, thinning=thin, ladder=ladder,
                       swap_interval=swap, chain_seed=sub.get("chain_seed", seed))


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# verify

def cmd_verify(args) -> int:
    doc = _load_config(args)
    policy = _policy_of(args, doc)
    out = _outdir(args)
    names = [c for c in CHECK_NAMES if c != "all"] if args.check == "all" else [args.check]
    reports = [_run_check(name, args, doc, policy) for name in names]

    for rep in reports:
        (out / f"check-{rep.name}.json").write_text(rep.to_json() + "\n")
        print(rep.summary())
    if not args.no_plot:
        from . import plots
        plots.render_check_margins(reports, out / "verify-margins.png")
    statuses = {r.status for r in reports}
    if verify.FAIL in statuses:
        return 1
    if verify.INCONCLUSIVE in statuses:
        return 3
    return 0


def _pair_arg(args, default=(1, 2)):
    if args.pair:
        i, j = (int(v) for v in args.pair.split(","))
        return (i, j)
    return default


def _run_check(name, args, doc, policy) -> verify.CheckReport:
    spec = lambda **kw: _spec_of(args, doc, **kw)
    if name == "nishimori":
        return verify.check_nishimori_identity(spec(), _pair_arg(args), policy)
    if name == "internal-energy":
        return verify.check_internal_energy(spec(), policy)
    if name == "p-mono":
        return verify.check_block_monotonicity(spec(N=4, beta=2.0), policy)
    if name == "n-mono":
        small = spec(N=2)
        large = replace(small, N=small.N + 1)
        return verify.check_growth_monotonicity(small, large, 1, policy)
    if name == "lemma5":
        s = spec(N=2)
        return verify.check_lemma5(s.N, s.alpha, s.beta, policy)
    if name == "lemma6":
        s = spec(N=2)
        return verify.check_lemma6(s.N, s.alpha, s.beta, policy)
    if name == "lemma7":
        s = spec(N=2)
        return verify.check_lemma7(s.N, s.alpha, s.beta, policy)
    if name == "lemma8-chain":
        s = spec(N=3, beta=8.0)
        return verify.check_lemma8_chain(s.N, s.alpha, s.beta, policy)
    if name == "thm2-couplings":
        s = spec(N=10)
        return verify.check_thm2_couplings(s.N, s.alpha, policy)
    if name == "thm2-correlations":
        s = spec(N=3)
        pairs = ((1, 2), (1, 2 ** s.N), (2 ** (s.N - 1), 2 ** (s.N - 1) + 1))
        return verify.check_thm2_correlations(s.N, s.alpha, s.beta, pairs, policy)
    if name == "thm3-decay":
        sizes = [int(v) for v in args.sizes.split(",")] if args.sizes else [8, 12, 16]
        s = spec(family="long_range", alpha=2.0, beta=0.06)
        return verify.check_thm3_decay(sizes, s.alpha, s.beta, policy)
    if name == "dq-dt":
        s = spec(N=2)
        return verify.check_dq_dt(s.N, s.alpha, s.beta, args.t, policy)
    if name == "mc-crosscheck":
        s = spec(family="long_range", L=12, beta=0.4)
        cfg = _mc_config_of(args, doc, policy.seed)
        return verify.check_mc_crosscheck(s, cfg, policy)
    raise ValueError(f"unknown check {name!r}")


# ---------------------------------------------------------------------------
# scan

def cmd_scan(args) -> int:
    doc = _load_config(args)
    out = _outdir(args)
    alphas = np.arange(args.alpha_min, args.alpha_max + 1e-12, args.alpha_step)
    betas = np.geomspace(args.beta_min, args.beta_max, args.beta_points)
    if len(alphas) == 0 or len(betas) == 0:
        print("error: empty grid", file=sys.stderr)
        return 2
    rows = []
    for a in alphas:
        a = float(a)
        # 1e-6 on zeta keeps small alphas affordable; the threshold column is
        # for plotting, not certification
        threshold = theory.thm3_threshold(a, tol=1e-6)
        for b in betas:
            b = float(b)
            valid = 1.0 < a < 1.5
            total = math.nan
            if valid:
                rep = theory.thm1_lower_bound(b, a)
                valid = rep.valid
                total = rep.total
            rows.append({"alpha": a, "beta": b, "thm1_valid": valid,
                         "thm1_total": total, "thm3_threshold": threshold,
                         "below_threshold": b < threshold})
    path = out / "scan.csv"
    with path.open("w") as fh:
        fh.write("alpha,beta,thm1_valid,thm1_total,thm3_threshold,below_threshold\n")
        for r in rows:
            fh.write(f"{r['alpha']!r},{r['beta']!r},{str(r['thm1_valid']).lower()},"
                     f"{r['thm1_total']!r},{r['thm3_threshold']!r},"
                     f"{str(r['below_threshold']).lower()}\n")
    print(f"wrote {path} ({len(rows)} rows)")
    if not args.no_plot:
        from . import plots
        plots.render_scan(rows, out / "scan.png")
    return 0


# ---------------------------------------------------------------------------
# exact / mc tables

def _write_estimates_csv(path, rows):
    with path.open("w") as fh:
        fh.write("observable,mean,se,n_samples\n")
        for name, est in rows:
            fh.write(f"{name},{est.mean!r},{est.se!r},{est.n_samples}\n")


def cmd_exact(args) -> int:
    doc = _load_config(args)
    policy = _policy_of(args, doc, default_samples=2000)
    spec = _spec_of(args, doc)
    out = _outdir(args)
    rows = []
    if spec.family == "dyson":
        for p in range(spec.N + 1):
            rows.append((f"f_{p}", verify.disorder_average(spec, f"f_{p}", policy)))
        rows.append(("corr_1_2", verify.disorder_average(spec, "corr_1_2", policy)))
    else:
        for j in range(2, min(spec.L, 8) + 1):
            rows.append((f"corr_1_{j}", verify.disorder_average(spec, f"corr_1_{j}", policy)))
    path = out / "exact.csv"
    _write_estimates_csv(path, rows)
    print(f"wrote {path}")
    for name, est in rows:
        print(f"  {name:<12} {est.mean:+.6f} +- {est.se:.6f}  (n={est.n_samples})")
    if not args.no_plot:
        from . import plots
        plots.render_estimates([n for n, _ in rows], [e.mean for _, e in rows],
                               [e.se for _, e in rows], out / "exact.png",
                               title="exact disorder averages")
    return 0


def cmd_mc(args) -> int:
    doc = _load_config(args)
    seed = _seed_of(args, doc)
    spec = _spec_of(args, doc)
    cfg = _mc_config_of(args, doc, seed)
    out = _outdir(args)
    laws = build_laws(spec)
    real = realize(laws, seed, 0)
    pairs = [(1, 2)]
    trace = {} if args.trace else None
    if cfg.ladder:
        est = mc.tempering_run(real, spec, cfg, pairs=pairs, blocks=True, trace=trace)
    else:
        est = mc.metropolis_run(real, cfg, pairs=pairs, blocks=True, trace=trace)
    if trace is not None and "snapshots" in trace:
        (out / "trace.csv").write_text(mc.trace_to_csv(trace, real, cfg))
    rows = [(name, verify.DisorderEstimate(o.mean, o.se, est.n_kept))
            for name, o in sorted(est.estimates.items())]
    path = out / "mc.csv"
    _write_estimates_csv(path, rows)
    print(f"wrote {path}  (acceptance={est.acceptance:.3f}"
          + (f", swaps={[round(s, 3) for s in est.swap_acceptance]}" if cfg.ladder else "")
          + ")")
    if not args.no_plot:
        from . import plots
        plots.render_estimates([n for n, _ in rows], [e.mean for _, e in rows],
                               [e.se for _, e in rows], out / "mc.png",
                               title="MC estimates (single realization)")
    return 0


def cmd_sample(args) -> int:
    doc = _load_config(args)
    seed = _seed_of(args, doc)
    spec = _spec_of(args, doc)
    out = _outdir(args)
    laws = build_laws(spec)
    real = realize(laws, seed, args.sample_index)
    path = out / "sample.csv"
    path.write_text(realization_to_csv(real))
    print(f"wrote {path} ({len(laws)} bonds)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
