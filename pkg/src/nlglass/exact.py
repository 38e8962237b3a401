"""Exact Gibbs computation by full configuration enumeration.

Configurations are the integers 0..2^n-1 (bit k of c is spin k+1, sigma = +1
for bit 0). Couplings on the same site pair add, so the energy of every
configuration is a single matrix product between a {-1,+1} pair-parity matrix
and the vector of summed pair couplings; diagonal bonds contribute a constant
that is added to log Z directly. Everything downstream (weights, correlations,
block moments, restricted traces) is streamed in log domain over configuration
blocks, so memory stays bounded at any size up to the enumeration cap and
large couplings cannot overflow.

The same machinery evaluates restricted traces: a configuration's half block
sums are popcounts of its low/high bit fields, and the interval membership of
a block sum is pure integer arithmetic, so boundary ties are exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .model import Bond, DisorderRealization, EffectiveBondLaw, ModelSpec
from .theory import num_intervals

DEFAULT_CAP = 24
_SIGN_CACHE_BYTES = 200 * 1024 * 1024
_BLOCK_BYTES = 64 * 1024 * 1024


class EnumerationCapError(ValueError):
    """Raised when a call would enumerate more spins than the cap allows."""

    def __init__(self, n_sites, cap):
        super().__init__(
            f"{n_sites} spins exceeds the enumeration cap of {cap} "
            f"(2^{cap} configurations)")
        self.n_sites = n_sites
        self.cap = cap


def _check_cap(n_sites, cap):
    if n_sites > cap:
        raise EnumerationCapError(n_sites, cap)


# ---------------------------------------------------------------------------
# configuration tables

def _sigma_block(n, start, count):
    """Spins of configurations start..start+count-1 as (count, n) int8 in {-1,+1}."""
    idx = np.arange(start, start + count, dtype=np.uint64)
    bits = (idx[:, None] >> np.arange(n, dtype=np.uint64)[None, :]) & np.uint64(1)
    return (1 - 2 * bits.astype(np.int8)).astype(np.int8)


def _pair_signs_block(n, pairs, start, count):
    sigma = _sigma_block(n, start, count)
    out = np.empty((count, len(pairs)), dtype=np.float64)
    for k, (i, j) in enumerate(pairs):
        out[:, k] = sigma[:, i] * sigma[:, j]
    return out


@lru_cache(maxsize=6)
def _pair_signs_cached(n, pairs):
    return _pair_signs_block(n, pairs, 0, 1 << n)


def _config_ranges(n, row_items):
    """(start, count) blocks covering 0..2^n-1, sized by float64 row width."""
    total = 1 << n
    if total * row_items * 8 <= _SIGN_CACHE_BYTES:
        return [(0, total)], True
    count = max(1024, _BLOCK_BYTES // max(row_items * 8, 8))
    return [(s, min(count, total - s)) for s in range(0, total, count)], False


def complete_blocks(n):
    """(p, r) labels of all complete 2^p-site blocks, p = 0..floor(log2 n)."""
    labels = []
    p = 0
    while (1 << p) <= n:
        labels.extend((p, r) for r in range(1, n // (1 << p) + 1))
        p += 1
    return labels


def _block_sq_block(n, start, count):
    """(count, NB) float64 of squared block sums, columns as complete_blocks(n)."""
    sigma = _sigma_block(n, start, count).astype(np.int32)
    cols = []
    sums = sigma
    while sums.shape[1] >= 1:
        cols.append(sums)
        m = sums.shape[1] // 2
        if m == 0:
            break
        sums = sums[:, 0:2 * m:2] + sums[:, 1:2 * m:2]
    sq = np.concatenate([c * c for c in cols], axis=1)
    return sq.astype(np.float64)


@lru_cache(maxsize=6)
def _block_sq_cached(n):
    return _block_sq_block(n, 0, 1 << n)


# ---------------------------------------------------------------------------
# coupling reduction: bonds -> unique off-diagonal pairs + diagonal constant

def _reduce_couplings(laws, couplings):
    """Sum couplings on each unique off-diagonal pair (0-based, i < j).

    couplings may be (B,) or (B, S). Returns (pairs tuple, W (P, S),
    const (S,)) with const the diagonal contribution to every energy.
    """
    couplings = np.atleast_2d(np.asarray(couplings, dtype=np.float64))
    if couplings.shape[0] != len(laws):
        couplings = couplings.T
    n_s = couplings.shape[1]
    pair_of_bond = []
    pairs = {}
    diag = np.zeros(n_s)
    for law in laws:
        i, j = law.bond.i - 1, law.bond.j - 1
        if i == j:
            pair_of_bond.append(-1)
            continue
        key = (min(i, j), max(i, j))
        pair_of_bond.append(pairs.setdefault(key, len(pairs)))
    W = np.zeros((len(pairs), n_s))
    for b, law in enumerate(laws):
        p = pair_of_bond[b]
        if p < 0:
            diag += couplings[b]
        else:
            W[p] += couplings[b]
    return tuple(pairs), W, diag


def _as_pair0(pair):
    i, j = pair
    i, j = i - 1, j - 1
    return (min(i, j), max(i, j))


# ---------------------------------------------------------------------------
# core enumeration

def _enumerate(n, pairs, W, const, corr_cols, want_blocks, mask_fn=None):
    """Streamed log-domain enumeration.

    pairs: unique 0-based site pairs carrying the energy; W (P, S) their summed
    couplings; const (S,) added to log Z. corr_cols: indices into pairs whose
    correlations are requested. mask_fn(start, count) -> bool array restricts
    the configuration set (None = all). Returns (log_z (S,), corr (C, S),
    m2 (NB, S) or None).
    """
    n_s = W.shape[1]
    m = np.full(n_s, -np.inf)
    s = np.zeros(n_s)
    a_corr = np.zeros((len(corr_cols), n_s))
    blocks = complete_blocks(n) if want_blocks else []
    a_blk = np.zeros((len(blocks), n_s))
    row_items = len(pairs) + (len(blocks) if want_blocks else 0)
    ranges, cached = _config_ranges(n, row_items)

    for start, count in ranges:
        signs = (_pair_signs_cached(n, pairs) if cached
                 else _pair_signs_block(n, pairs, start, count))
        sq = None
        if want_blocks:
            sq = _block_sq_cached(n) if cached else _block_sq_block(n, start, count)
        if mask_fn is not None:
            keep = mask_fn(start, count)
            if not np.any(keep):
                continue
            signs = signs[keep]
            if sq is not None:
                sq = sq[keep]
        e = signs @ W
        bm = e.max(axis=0)
        m_new = np.maximum(m, bm)
        scale = np.exp(m - m_new)
        wgt = np.exp(e - m_new)
        s = s * scale + wgt.sum(axis=0)
        if len(corr_cols):
            a_corr = a_corr * scale + signs[:, corr_cols].T @ wgt
        if want_blocks:
            a_blk = a_blk * scale + sq.T @ wgt
        m = m_new

    with np.errstate(divide="ignore"):
        log_z = m + np.log(s) + const
    corr = a_corr / s if len(corr_cols) else a_corr
    m2 = (a_blk / s) if want_blocks else None
    return log_z, corr, m2


# ---------------------------------------------------------------------------
# public reports

@dataclass(frozen=True)
class GibbsRequest:
    """Which observables to compute.

    pairs: "bonds" (unique site pairs of the bond list), "all", or an explicit
    list of 1-based (i, j). blocks: squared block sums over complete binary
    blocks. bond_energy: per-bond coupling-weighted correlation.
    """

    pairs: object = "bonds"
    blocks: bool = True
    bond_energy: bool = False


@dataclass(frozen=True)
class GibbsReport:
    """Exact observables for one realization."""

    log_z: float
    pair_corr: dict
    block_m2: dict
    bond_energy: dict

    def f_moment(self, p: int) -> float:
        """Mean over r of <S_{p,r}^2> / 2^(2p)."""
        vals = [v for (pp, _), v in self.block_m2.items() if pp == p]
        if not vals:
            raise KeyError(f"no complete blocks at level {p}")
        return float(np.mean(vals)) / 4.0 ** p

    def to_json(self) -> str:
        doc = {
            "log_z": self.log_z,
            "pair_corr": {f"{i},{j}": v for (i, j), v in self.pair_corr.items()},
            "block_m2": {f"{p},{r}": v for (p, r), v in self.block_m2.items()},
            "bond_energy": {f"{b.i},{b.j},{b.level},{b.tag}": v
                            for b, v in self.bond_energy.items()},
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GibbsReport":
        doc = json.loads(text)
        split = lambda s: tuple(int(v) for v in s.split(","))
        bonds = {}
        for key, v in doc["bond_energy"].items():
            i, j, level, tag = key.split(",")
            bonds[Bond(int(i), int(j), int(level), tag)] = v
        return cls(log_z=doc["log_z"],
                   pair_corr={split(k): v for k, v in doc["pair_corr"].items()},
                   block_m2={split(k): v for k, v in doc["block_m2"].items()},
                   bond_energy=bonds)

    def block_moments_csv(self) -> str:
        lines = ["p,r,m2,normalized"]
        for (p, r), v in sorted(self.block_m2.items()):
            lines.append(f"{p},{r},{v!r},{v / 4.0 ** p!r}")
        return "\n".join(lines) + "\n"


@dataclass
class ExactBatch:
    """Column-per-sample exact observables for a batch of realizations."""

    n_sites: int
    log_z: np.ndarray             # (S,)
    pair_list: list               # 1-based (i, j)
    pair_corr: np.ndarray         # (P, S)
    block_labels: list            # (p, r)
    block_m2: Optional[np.ndarray]  # (NB, S)
    bond_energy: Optional[np.ndarray]  # (B, S)

    def corr(self, pair) -> np.ndarray:
        return self.pair_corr[self.pair_list.index(tuple(pair))]

    def f_moment(self, p: int) -> np.ndarray:
        rows = [k for k, (pp, _) in enumerate(self.block_labels) if pp == p]
        if not rows:
            raise KeyError(f"no complete blocks at level {p}")
        return self.block_m2[rows].mean(axis=0) / 4.0 ** p


def _resolve_pairs(request, laws, n_sites):
    if request is None:
        req = []
    elif request == "all":
        req = [(i, j) for i in range(1, n_sites + 1) for j in range(i + 1, n_sites + 1)]
    elif request == "bonds":
        seen = dict()
        for law in laws:
            if law.bond.i != law.bond.j:
                key = (min(law.bond.i, law.bond.j), max(law.bond.i, law.bond.j))
                seen.setdefault(key, None)
        req = list(seen)
    else:
        req = [(min(i, j), max(i, j)) for i, j in request]
    return req


def gibbs_exact_batch(laws, couplings, n_sites, request: GibbsRequest = GibbsRequest(),
                      cap: int = DEFAULT_CAP) -> ExactBatch:
    """Exact observables for every column of a coupling matrix (B, S)."""
    _check_cap(n_sites, cap)
    couplings = np.atleast_2d(np.asarray(couplings, dtype=np.float64))
    if couplings.ndim != 2 or couplings.shape[0] != len(laws):
        raise ValueError("couplings must have shape (n_bonds, n_samples)")
    if not np.all(np.isfinite(couplings)):
        raise ValueError("non-finite coupling")
    pairs, W, const = _reduce_couplings(laws, couplings)
    pair_index = {p: k for k, p in enumerate(pairs)}

    req_pairs = _resolve_pairs(request.pairs, laws, n_sites)
    if request.bond_energy:
        for key in _resolve_pairs("bonds", laws, n_sites):
            if key not in req_pairs:
                req_pairs.append(key)

    # requested pairs may not carry a bond; extend the pair set with zero rows
    all_pairs = list(pairs)
    for (i, j) in req_pairs:
        p = (i - 1, j - 1)
        if p not in pair_index:
            pair_index[p] = len(all_pairs)
            all_pairs.append(p)
    if len(all_pairs) > W.shape[0]:
        W = np.vstack([W, np.zeros((len(all_pairs) - W.shape[0], W.shape[1]))])
    corr_cols = [pair_index[(i - 1, j - 1)] for (i, j) in req_pairs]

    log_z, corr, m2 = _enumerate(n_sites, tuple(all_pairs), W, const,
                                 corr_cols, request.blocks)

    bond_e = None
    if request.bond_energy:
        bond_e = np.empty((len(laws), couplings.shape[1]))
        row_of_pair = {rp: k for k, rp in enumerate(req_pairs)}
        for b, law in enumerate(laws):
            i, j = law.bond.i, law.bond.j
            if i == j:
                bond_e[b] = couplings[b]
            else:
                bond_e[b] = couplings[b] * corr[row_of_pair[(min(i, j), max(i, j))]]

    return ExactBatch(
        n_sites=n_sites, log_z=log_z,
        pair_list=[tuple(p) for p in req_pairs], pair_corr=corr,
        block_labels=complete_blocks(n_sites) if request.blocks else [],
        block_m2=m2, bond_energy=bond_e,
    )


def gibbs_exact(realization: DisorderRealization, request: GibbsRequest = GibbsRequest(),
                cap: int = DEFAULT_CAP) -> GibbsReport:
    """Exact observables for one realization (thin wrapper over the batch path)."""
    batch = gibbs_exact_batch(realization.laws, realization.couplings[:, None],
                              realization.n_sites, request, cap)
    pair_corr = {p: float(v) for p, v in zip(batch.pair_list, batch.pair_corr[:, 0])}
    block_m2 = {}
    if batch.block_m2 is not None:
        block_m2 = {lab: float(v) for lab, v in zip(batch.block_labels, batch.block_m2[:, 0])}
    bond_energy = {}
    if batch.bond_energy is not None:
        bond_energy = {law.bond: float(v)
                       for law, v in zip(realization.laws, batch.bond_energy[:, 0])}
    return GibbsReport(log_z=float(batch.log_z[0]), pair_corr=pair_corr,
                       block_m2=block_m2, bond_energy=bond_energy)


# ---------------------------------------------------------------------------
# interval partitions and restricted traces

@dataclass(frozen=True)
class IntervalPartition:
    """r equal subintervals of the half-block-sum range [-2^(N-1), +2^(N-1)].

    Membership is half-open [a, b) except the last interval, which is closed;
    indexing is exact integer arithmetic, so boundary sums are unambiguous.
    """

    N: int
    r: int

    def __post_init__(self):
        if self.N < 1 or self.r < 1:
            raise ValueError("need N >= 1 and r >= 1")

    @property
    def half_range(self) -> int:
        return 2 ** (self.N - 1)

    def boundaries(self) -> np.ndarray:
        h = self.half_range
        return -h + 2.0 * h * np.arange(self.r + 1) / self.r

    def index_of(self, s):
        """0-based interval index of integer block sums (array ok)."""
        s = np.asarray(s, dtype=np.int64)
        h = self.half_range
        if np.any((s < -h) | (s > h)):
            raise ValueError("block sum outside partition range")
        idx = (s + h) * self.r // (2 * h)
        return np.minimum(idx, self.r - 1)

    def empty_intervals(self, n_spins: int) -> np.ndarray:
        """True where no achievable sum of n_spins +-1 spins lands in the interval."""
        sums = np.arange(-n_spins, n_spins + 1, 2)
        occupied = np.zeros(self.r, dtype=bool)
        occupied[self.index_of(sums)] = True
        return ~occupied

    @classmethod
    def for_spec(cls, spec: ModelSpec) -> "IntervalPartition":
        if spec.family != "dyson":
            raise ValueError("interval partitions apply to the hierarchical family")
        return cls(N=spec.N, r=num_intervals(spec.N, spec.beta, spec.alpha))


@dataclass(frozen=True)
class RestrictedTraces:
    """Per-interval log partition sums of the two half systems."""

    partition: IntervalPartition
    log_z1: np.ndarray
    log_z2: np.ndarray
    empty: np.ndarray

    def log_sum(self, which: int) -> float:
        vals = self.log_z1 if which == 1 else self.log_z2
        return float(_logsumexp(vals[~self.empty]))


def _logsumexp(a, axis=None):
    a = np.asarray(a, dtype=np.float64)
    if a.size == 0:
        return -np.inf
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    out = np.squeeze(m, axis=axis) if axis is not None else m.reshape(())
    return out + np.log(np.sum(np.exp(a - m), axis=axis))


def _total_spin(n, start, count):
    idx = np.arange(start, start + count, dtype=np.uint64)
    pop = np.bitwise_count(idx).astype(np.int64)
    return n - 2 * pop


def restricted_half_traces_block(laws, couplings, n_sites, partition: IntervalPartition,
                                 cap: int = DEFAULT_CAP) -> np.ndarray:
    """(r, S) log partition sums of one half system restricted per interval."""
    _check_cap(n_sites, cap)
    couplings = np.atleast_2d(np.asarray(couplings, dtype=np.float64))
    pairs, W, const = _reduce_couplings(laws, couplings)
    n_s = W.shape[1]
    r = partition.r
    m = np.full((r, n_s), -np.inf)
    s = np.zeros((r, n_s))
    ranges, cached = _config_ranges(n_sites, len(pairs))
    for start, count in ranges:
        signs = (_pair_signs_cached(n_sites, pairs) if cached
                 else _pair_signs_block(n_sites, pairs, start, count))
        e = signs @ W
        idx = partition.index_of(_total_spin(n_sites, start, count))
        for k in np.unique(idx):
            ek = e[idx == k]
            bm = ek.max(axis=0)
            m_new = np.maximum(m[k], bm)
            s[k] = s[k] * np.exp(m[k] - m_new) + np.exp(ek - m_new).sum(axis=0)
            m[k] = m_new
    with np.errstate(divide="ignore"):
        out = m + np.log(np.where(s > 0, s, 1.0)) + const
        out[s == 0] = -np.inf
    return out


def restricted_traces(half1: DisorderRealization, half2: DisorderRealization,
                      partition: IntervalPartition, cap: int = DEFAULT_CAP) -> RestrictedTraces:
    """Restricted log traces of both halves of a split system (single sample)."""
    z1 = restricted_half_traces_block(half1.laws, half1.couplings[:, None],
                                      half1.n_sites, partition, cap)[:, 0]
    z2 = restricted_half_traces_block(half2.laws, half2.couplings[:, None],
                                      half2.n_sites, partition, cap)[:, 0]
    return RestrictedTraces(partition=partition, log_z1=z1, log_z2=z2,
                            empty=partition.empty_intervals(half1.n_sites))


def dyson_halves(real: DisorderRealization):
    """Split an interpolated-family realization into its two half systems.

    Keeps every bond strictly inside one half whose level is below the top
    (sub-level and split-variance bonds); top-level bonds are dropped, so this
    is the exact decomposition of the decoupled endpoint.
    """
    n = real.n_sites
    nh = n // 2
    top = max(law.bond.level for law in real.laws)
    halves = []
    for lo, hi in ((1, nh), (nh + 1, n)):
        keep = [k for k, law in enumerate(real.laws)
                if law.bond.level < top and lo <= law.bond.i <= hi and lo <= law.bond.j <= hi]
        laws = tuple(
            EffectiveBondLaw(Bond(real.laws[k].bond.i - lo + 1, real.laws[k].bond.j - lo + 1,
                                  real.laws[k].bond.level, real.laws[k].bond.tag),
                             real.laws[k].x)
            for k in keep)
        halves.append(DisorderRealization(
            laws=laws, n_sites=nh, seed=real.seed, sample_index=real.sample_index,
            couplings=real.couplings[keep], z=real.z[keep]))
    return halves[0], halves[1]


def _half_spin_indexer(n, partition):
    nh = n // 2
    mask_lo = np.uint64((1 << nh) - 1)

    def idx_pair(start, count):
        idx = np.arange(start, start + count, dtype=np.uint64)
        s1 = nh - 2 * np.bitwise_count(idx & mask_lo).astype(np.int64)
        s2 = nh - 2 * np.bitwise_count(idx >> np.uint64(nh)).astype(np.int64)
        return partition.index_of(s1), partition.index_of(s2)

    return idx_pair


def q_restricted_pressure_block(laws, couplings, n_sites, partition: IntervalPartition,
                                cap: int = DEFAULT_CAP) -> np.ndarray:
    """(S,) log of the same-interval-restricted partition sum of the full system."""
    _check_cap(n_sites, cap)
    couplings = np.atleast_2d(np.asarray(couplings, dtype=np.float64))
    pairs, W, const = _reduce_couplings(laws, couplings)
    indexer = _half_spin_indexer(n_sites, partition)

    def mask(start, count):
        i1, i2 = indexer(start, count)
        return i1 == i2

    log_z, _, _ = _enumerate(n_sites, pairs, W, const, [], False, mask_fn=mask)
    return log_z


def q_restricted_pressure_sample(spec: ModelSpec, t: float, real: DisorderRealization,
                                 cap: int = DEFAULT_CAP) -> float:
    """Single-sample restricted pressure of an interpolated realization."""
    if spec.family != "dyson":
        raise ValueError("restricted pressure applies to the hierarchical family")
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    partition = IntervalPartition.for_spec(spec)
    return float(q_restricted_pressure_block(real.laws, real.couplings[:, None],
                                             real.n_sites, partition, cap)[0])


def two_replica_restricted_moments_block(laws, couplings, n_sites,
                                         partition: IntervalPartition,
                                         cap: int = DEFAULT_CAP):
    """Restricted one- and two-replica block-sum moments, batched over samples.

    Returns (s_moment (S,), q_moment (S,)): the restricted averages of
    (S_half1 - S_half2)^2 within a replica and of (q_half1 - q_half2)^2 across
    two independent replicas sharing the disorder. Both reduce to sums of
    restricted pair correlations C_ij with half signs eps_i: sum eps_i eps_j C_ij
    and sum eps_i eps_j C_ij^2 (replica independence squares the correlations).
    """
    if 2 * n_sites > cap:
        raise EnumerationCapError(2 * n_sites, cap)
    couplings = np.atleast_2d(np.asarray(couplings, dtype=np.float64))
    pairs_all = [(i, j) for i in range(n_sites) for j in range(i + 1, n_sites)]
    pairs, W, const = _reduce_couplings(laws, couplings)
    pair_index = {p: k for k, p in enumerate(pairs)}
    all_pairs = list(pairs)
    for p in pairs_all:
        if p not in pair_index:
            pair_index[p] = len(all_pairs)
            all_pairs.append(p)
    if len(all_pairs) > len(pairs):
        W = np.vstack([W, np.zeros((len(all_pairs) - len(pairs), W.shape[1]))])
    corr_cols = [pair_index[p] for p in pairs_all]

    indexer = _half_spin_indexer(n_sites, partition)

    def mask(start, count):
        i1, i2 = indexer(start, count)
        return i1 == i2

    _, corr, _ = _enumerate(n_sites, tuple(all_pairs), W, const, corr_cols,
                            False, mask_fn=mask)
    nh = n_sites // 2
    eps = np.where(np.arange(n_sites) < nh, 1.0, -1.0)
    s_m = np.full(corr.shape[1], float(n_sites))
    q_m = np.full(corr.shape[1], float(n_sites))
    for (i, j), row in zip(pairs_all, corr):
        w = 2.0 * eps[i] * eps[j]
        s_m += w * row
        q_m += w * row * row
    return s_m, q_m


def two_replica_restricted_moments(real: DisorderRealization, partition: IntervalPartition,
                                   cap: int = DEFAULT_CAP):
    """Single-sample version; returns (s_moment, q_moment) floats."""
    s_m, q_m = two_replica_restricted_moments_block(
        real.laws, real.couplings[:, None], real.n_sites, partition, cap)
    return float(s_m[0]), float(q_m[0])
