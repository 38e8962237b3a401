"""Metropolis and replica-exchange sampling for realizations past the
enumeration cap, with blocking error bars.

The sweep kernel is shared by both entry points: a metropolis run is a
one-rung ladder. Replica-exchange rungs do not share couplings -- on the
Nishimori line the coupling distribution itself moves with beta -- they share
the underlying standard normals of one realization, so every rung samples the
correct ensemble for its own temperature while swaps stay highly correlated.

All randomness is drawn from counter-based streams keyed by (chain_seed, rung),
so runs are reproducible regardless of scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from . import rng
from .model import DisorderRealization, ModelSpec, build_laws
from .exact import complete_blocks, _reduce_couplings

_SWEEP_BLOCK = 4096


@dataclass(frozen=True)
class MCConfig:
    sweeps: int
    burn_in: int
    thinning: int = 1
    ladder: tuple = ()
    swap_interval: int = 10
    chain_seed: int = 0

    def __post_init__(self):
        if self.sweeps <= 0 or self.burn_in < 0 or self.thinning <= 0:
            raise ValueError("sweeps, thinning must be positive; burn_in >= 0")
        if self.burn_in >= self.sweeps:
            raise ValueError("burn_in must be < sweeps")
        if self.swap_interval <= 0:
            raise ValueError("swap_interval must be positive")
        if self.ladder:
            lad = tuple(float(b) for b in self.ladder)
            if list(lad) != sorted(lad):
                raise ValueError("ladder must be sorted")
            object.__setattr__(self, "ladder", lad)


@dataclass(frozen=True)
class ObservableEstimate:
    mean: float
    se: float
    tau_int: float
    n_eff: float
    inconclusive: bool = False


@dataclass(frozen=True)
class MCEstimate:
    """Blocking-based estimates keyed by observable name.

    Pair correlations are named "corr_i_j", normalized block moments
    "m2_p_r". acceptance is the mean single-flip acceptance at the target
    rung; swap_acceptance the per-adjacent-pair exchange rates.
    """

    estimates: dict
    acceptance: float
    swap_acceptance: tuple = ()
    n_kept: int = 0

    def __getitem__(self, name) -> ObservableEstimate:
        return self.estimates[name]

    def inconclusive(self) -> bool:
        return any(e.inconclusive for e in self.estimates.values())


@njit(cache=True)
def _sweep_kernel(spins, nbr_start, nbr_idx, nbr_w, order, u, rec, rec_mask):
    nsw, n = order.shape
    row = 0
    accepted = 0
    for t in range(nsw):
        for k in range(n):
            s = order[t, k]
            h = 0.0
            for a in range(nbr_start[s], nbr_start[s + 1]):
                h += nbr_w[a] * spins[nbr_idx[a]]
            dk = -2.0 * spins[s] * h
            if dk >= 0.0 or u[t, k] < math.exp(dk):
                spins[s] = -spins[s]
                accepted += 1
        if rec_mask[t]:
            for i in range(n):
                rec[row, i] = spins[i]
            row += 1
    return accepted


def _csr_adjacency(n_sites, pairs, w):
    deg = np.zeros(n_sites + 1, dtype=np.int64)
    for (i, j) in pairs:
        deg[i + 1] += 1
        deg[j + 1] += 1
    start = np.cumsum(deg)
    idx = np.zeros(start[-1], dtype=np.int64)
    wgt = np.zeros(start[-1], dtype=np.float64)
    fill = start[:-1].copy()
    for k, (i, j) in enumerate(pairs):
        idx[fill[i]], wgt[fill[i]] = j, w[k]
        fill[i] += 1
        idx[fill[j]], wgt[fill[j]] = i, w[k]
        fill[j] += 1
    return start, idx, wgt


def blocking_error(x: np.ndarray):
    """(se, tau_int, n_eff, inconclusive) by block-size doubling.

    Doubles the block size until the error estimate plateaus; if the series is
    too short for the estimate to flatten, the largest-block value is returned
    and flagged inconclusive.
    """
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    if n < 2:
        return 0.0, 0.5, float(n), True
    se0 = float(np.std(x, ddof=1)) / math.sqrt(n)
    if se0 == 0.0:
        return 0.0, 0.5, float(n), False
    ses = []
    level = x
    while len(level) >= 32:
        nb = len(level)
        ses.append(float(np.std(level, ddof=1)) / math.sqrt(nb))
        m = nb // 2
        level = 0.5 * (level[0:2 * m:2] + level[1:2 * m:2])
    if len(ses) < 2:
        return se0, 0.5, float(n), True
    se_fin = ses[0]
    plateaued = False
    for k in range(1, len(ses)):
        # relative statistical wobble of an se estimate on nb blocks ~ 1/sqrt(2 nb)
        nb = max(32, n >> k)
        if ses[k] <= se_fin * (1.0 + 2.0 / math.sqrt(2.0 * nb)):
            plateaued = True
            se_fin = max(se_fin, ses[k])
            break
        se_fin = ses[k]
    tau = 0.5 * (se_fin / se0) ** 2
    n_eff = min(float(n), n / (2.0 * tau)) if tau > 0 else float(n)
    return se_fin, tau, n_eff, not plateaued


def _block_sums(snapshots):
    cols = []
    sums = snapshots.astype(np.int32)
    while sums.shape[1] >= 1:
        cols.append(sums)
        m = sums.shape[1] // 2
        if m == 0:
            break
        sums = sums[:, 0:2 * m:2] + sums[:, 1:2 * m:2]
    return np.concatenate([c * c for c in cols], axis=1)


def _estimates_from_snapshots(snapshots, n_sites, pairs_req, want_blocks):
    out = {}
    for (i, j) in pairs_req:
        series = (snapshots[:, i - 1] * snapshots[:, j - 1]).astype(np.float64)
        se, tau, neff, inc = blocking_error(series)
        out[f"corr_{i}_{j}"] = ObservableEstimate(float(series.mean()), se, tau, neff, inc)
    if want_blocks:
        labels = complete_blocks(n_sites)
        sq = _block_sums(snapshots)
        for col, (p, r) in enumerate(labels):
            series = sq[:, col].astype(np.float64)
            se, tau, neff, inc = blocking_error(series)
            out[f"m2_{p}_{r}"] = ObservableEstimate(float(series.mean()), se, tau, neff, inc)
    return out


def _rung_weights(spec: ModelSpec, z: np.ndarray, beta: float):
    laws = build_laws(replace(spec, beta=beta))
    x = np.array([law.x for law in laws])
    coup = x + np.sqrt(x) * z
    pairs, W, const = _reduce_couplings(laws, coup[:, None])
    return pairs, W[:, 0], float(const[0])


def _pair_energy(spins, ij, w):
    return float(w @ (spins[ij[:, 0]] * spins[ij[:, 1]]).astype(np.float64))


def _run_ladder(n_sites, rung_pairs, rung_w, config: MCConfig, target_rung: int,
                pairs_req, want_blocks, trace=None):
    n_r = len(rung_w)
    adj = [_csr_adjacency(n_sites, rung_pairs[k], rung_w[k]) for k in range(n_r)]
    rung_ij = [np.array(rung_pairs[k], dtype=np.int64).reshape(-1, 2) for k in range(n_r)]
    spins = np.empty((n_r, n_sites), dtype=np.int8)
    for k in range(n_r):
        g = rng.generator(config.chain_seed, k, lane=2)
        spins[k] = np.where(g.random(n_sites) < 0.5, 1, -1).astype(np.int8)
    swap_gen = rng.generator(config.chain_seed, 1 << 20, lane=3)

    keep = np.zeros(config.sweeps, dtype=bool)
    keep[config.burn_in::config.thinning] = True
    n_kept = int(keep.sum())
    snapshots = np.empty((n_kept, n_sites), dtype=np.int8)
    kept_rows = 0
    accepted = 0
    swap_tries = np.zeros(max(n_r - 1, 1))
    swap_acc = np.zeros(max(n_r - 1, 1))

    sweep = 0
    block_no = 0
    while sweep < config.sweeps:
        nsw = min(_SWEEP_BLOCK, config.sweeps - sweep)
        until_swap = config.swap_interval - (sweep % config.swap_interval)
        if n_r > 1:
            nsw = min(nsw, until_swap)
        for k in range(n_r):
            g = rng.generator(config.chain_seed, k, lane=4 + block_no)
            u = g.random((nsw, n_sites))
            # i.i.d. site picks: a fixed scan order would freeze relative signs
            # at zero coupling, where every proposal is accepted
            order = g.integers(0, n_sites, size=(nsw, n_sites), dtype=np.int64)
            mask = keep[sweep:sweep + nsw] if k == target_rung else np.zeros(nsw, dtype=bool)
            rec = snapshots[kept_rows:kept_rows + int(mask.sum())] if k == target_rung \
                else np.empty((0, n_sites), dtype=np.int8)
            acc = _sweep_kernel(spins[k], adj[k][0], adj[k][1], adj[k][2],
                                order, u, rec, mask)
            if k == target_rung:
                accepted += acc
                kept_rows += int(mask.sum())
        sweep += nsw
        block_no += 1
        if n_r > 1 and sweep % config.swap_interval == 0 and sweep < config.sweeps:
            for k in range(n_r - 1):
                d = (_pair_energy(spins[k], rung_ij[k + 1], rung_w[k + 1])
                     + _pair_energy(spins[k + 1], rung_ij[k], rung_w[k])
                     - _pair_energy(spins[k], rung_ij[k], rung_w[k])
                     - _pair_energy(spins[k + 1], rung_ij[k + 1], rung_w[k + 1]))
                # d is the log weight-ratio of the swapped vs current pair
                swap_tries[k] += 1
                if d >= 0.0 or swap_gen.random() < math.exp(d):
                    swap_acc[k] += 1
                    tmp = spins[k].copy()
                    spins[k] = spins[k + 1]
                    spins[k + 1] = tmp

    est = _estimates_from_snapshots(snapshots, n_sites, pairs_req, want_blocks)
    rate = accepted / (config.sweeps * n_sites)
    swaps = tuple((swap_acc[k] / swap_tries[k]) if swap_tries[k] else float("nan")
                  for k in range(n_r - 1))
    if trace is not None:
        trace["snapshots"] = snapshots
    return MCEstimate(estimates=est, acceptance=rate, swap_acceptance=swaps,
                      n_kept=n_kept)


def metropolis_run(real: DisorderRealization, config: MCConfig,
                   pairs=(), blocks=True, trace=None) -> MCEstimate:
    """Single-spin-flip Metropolis on one realization.

    pairs: 1-based site pairs whose correlations are estimated; blocks adds
    squared block sums over complete binary blocks.
    """
    if not np.all(np.isfinite(real.couplings)):
        raise ValueError("non-finite coupling")
    prs, W, const = _reduce_couplings(real.laws, real.couplings[:, None])
    pairs0 = [tuple(p) for p in prs]
    return _run_ladder(real.n_sites, [pairs0], [W[:, 0]], config, 0,
                       [tuple(p) for p in pairs], blocks, trace)


def trace_to_csv(trace: dict, real: DisorderRealization, config: MCConfig) -> str:
    """Kept-sample trace as CSV: sweep index, energy, and all block sums."""
    snaps = trace["snapshots"]
    pairs, W, const = _reduce_couplings(real.laws, real.couplings[:, None])
    ij = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    prod = (snaps[:, ij[:, 0]] * snaps[:, ij[:, 1]]).astype(np.float64)
    energy = prod @ W[:, 0] + const[0]
    labels = complete_blocks(real.n_sites)
    sums = snaps.astype(np.int32)
    cols = []
    while sums.shape[1] >= 1:
        cols.append(sums)
        m = sums.shape[1] // 2
        if m == 0:
            break
        sums = sums[:, 0:2 * m:2] + sums[:, 1:2 * m:2]
    block = np.concatenate(cols, axis=1)
    header = "sweep,energy," + ",".join(f"S_{p}_{r}" for p, r in labels)
    lines = [header]
    for k in range(snaps.shape[0]):
        sweep = config.burn_in + k * config.thinning
        lines.append(f"{sweep},{float(energy[k])!r},"
                     + ",".join(str(int(v)) for v in block[k]))
    return "\n".join(lines) + "\n"


def tempering_run(z_real: DisorderRealization, spec: ModelSpec, config: MCConfig,
                  pairs=(), blocks=True, trace=None) -> MCEstimate:
    """Replica exchange across the beta ladder, reusing z_real's normals.

    Every rung's couplings are x(beta') + sqrt(x(beta')) * z, so each rung is a
    faithful draw of its own temperature's ensemble. Observables are reported
    at spec.beta, which must appear in the ladder.
    """
    if not config.ladder:
        raise ValueError("tempering needs a ladder of beta values")
    if spec.beta not in config.ladder:
        raise ValueError("target beta must be one of the ladder values")
    target = config.ladder.index(spec.beta)
    rung_pairs, rung_w = [], []
    for b in config.ladder:
        prs, w, _ = _rung_weights(spec, z_real.z, b)
        rung_pairs.append([tuple(p) for p in prs])
        rung_w.append(w)
    return _run_ladder(z_real.n_sites, rung_pairs, rung_w, config, target,
                       [tuple(p) for p in pairs], blocks, trace)
