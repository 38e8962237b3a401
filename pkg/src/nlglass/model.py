"""Model definitions: bond laws on the Nishimori line and disorder draws.

Everything downstream works in the effective-coupling convention: each bond b
carries a single Gaussian coupling Jt_b ~ N(x_b, x_b) and the Boltzmann weight
is exp(sum_b Jt_b * s_i * s_j). The inverse temperature and the decay exponent
enter only through the per-bond variance x_b, so mean == variance holds for
every bond by construction (the Nishimori condition).

Two built-in families:

* ``long_range``: L sites on a line, one bond per unordered pair (i < j) with
  x_ij = 4 beta^2 / |i - j|^alpha.
* ``dyson``: 2^N sites coupled in nested binary blocks. At level q every block
  of 2^q consecutive sites carries one bond per *ordered* pair (i, j) -- the
  diagonal i == j included -- with x = beta^2 * b_q / 2^(2q), b_q = 2^((2-alpha)q).
  Diagonal bonds only shift log Z, but pressure-based identities need them, so
  they are generated by default (``include_diagonal``).

Site labels are 1-based throughout the public surface.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import rng

FAMILIES = ("long_range", "dyson", "custom")


@dataclass(frozen=True)
class Bond:
    """Bond identifier: site pair, hierarchy level, and an origin tag.

    level is the hierarchy level q for the dyson family and 0 for long_range.
    tag distinguishes coexisting laws on the same (i, j, level): "" for bonds
    of the plain families, "interp" for the extra split-variance bonds of the
    interpolating family.
    """

    i: int
    j: int
    level: int = 0
    tag: str = ""


@dataclass(frozen=True)
class EffectiveBondLaw:
    """One bond plus the variance x of its effective coupling N(x, x)."""

    bond: Bond
    x: float

    def __post_init__(self):
        if not np.isfinite(self.x) or self.x < 0:
            raise ValueError(f"effective variance must be finite and >= 0, got {self.x}")


@dataclass(frozen=True)
class ModelSpec:
    """Declarative model instance.

    family: "long_range" (needs L), "dyson" (needs N), or "custom" (needs
    custom_bonds as a sequence of (i, j, x) triples and n_sites).
    variance_overrides replaces the per-level dyson variances x_1..x_N.
    """

    family: str
    beta: float
    alpha: Optional[float] = None
    L: Optional[int] = None
    N: Optional[int] = None
    variance_overrides: Optional[tuple] = None
    include_diagonal: bool = True
    custom_bonds: Optional[tuple] = None
    n_sites_custom: Optional[int] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}, expected one of {FAMILIES}")
        if not np.isfinite(self.beta) or self.beta < 0:
            raise ValueError("beta must be finite and >= 0")
        if self.family == "long_range":
            if self.L is None or self.L < 2:
                raise ValueError("long_range needs L >= 2")
            if self.alpha is None or self.alpha <= 0:
                raise ValueError("long_range needs alpha > 0")
        elif self.family == "dyson":
            if self.N is None or self.N < 1:
                raise ValueError("dyson needs N >= 1")
            if self.alpha is None or self.alpha <= 1:
                raise ValueError("dyson needs alpha > 1")
            if self.variance_overrides is not None:
                ov = tuple(float(v) for v in self.variance_overrides)
                if len(ov) != self.N:
                    raise ValueError(f"variance_overrides must have length N={self.N}")
                if any(v < 0 or not np.isfinite(v) for v in ov):
                    raise ValueError("variance_overrides entries must be finite and >= 0")
                object.__setattr__(self, "variance_overrides", ov)
        else:
            if not self.custom_bonds:
                raise ValueError("custom needs custom_bonds")
            bonds = tuple((int(i), int(j), float(x)) for i, j, x in self.custom_bonds)
            if any(x < 0 for _, _, x in bonds):
                raise ValueError("custom bond variances must be >= 0")
            object.__setattr__(self, "custom_bonds", bonds)

    @property
    def n_sites(self) -> int:
        if self.family == "long_range":
            return self.L
        if self.family == "dyson":
            return 2 ** self.N
        if self.n_sites_custom is not None:
            return self.n_sites_custom
        return max(max(i, j) for i, j, _ in self.custom_bonds)

    def to_json(self) -> str:
        doc = {"family": self.family, "beta": self.beta}
        if self.alpha is not None:
            doc["alpha"] = self.alpha
        if self.family == "long_range":
            doc["L"] = self.L
        elif self.family == "dyson":
            doc["N"] = self.N
            if self.variance_overrides is not None:
                doc["variance_overrides"] = list(self.variance_overrides)
            if not self.include_diagonal:
                doc["include_diagonal"] = False
        else:
            doc["custom_bonds"] = [list(b) for b in self.custom_bonds]
            if self.n_sites_custom is not None:
                doc["n_sites"] = self.n_sites_custom
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelSpec":
        doc = json.loads(text)
        return cls.from_dict(doc)

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelSpec":
        kwargs = dict(
            family=doc["family"],
            beta=float(doc["beta"]),
            alpha=float(doc["alpha"]) if doc.get("alpha") is not None else None,
        )
        if "L" in doc and doc["L"] is not None:
            kwargs["L"] = int(doc["L"])
        if "N" in doc and doc["N"] is not None:
            kwargs["N"] = int(doc["N"])
        if doc.get("variance_overrides") is not None:
            kwargs["variance_overrides"] = tuple(doc["variance_overrides"])
        if "include_diagonal" in doc:
            kwargs["include_diagonal"] = bool(doc["include_diagonal"])
        if doc.get("custom_bonds") is not None:
            kwargs["custom_bonds"] = tuple(tuple(b) for b in doc["custom_bonds"])
        if doc.get("n_sites") is not None:
            kwargs["n_sites_custom"] = int(doc["n_sites"])
        return cls(**kwargs)


def level_amplitude(N: int, alpha: float) -> float:
    """Hierarchical amplitude b_N = 2^((2-alpha)N)."""
    return 2.0 ** ((2.0 - alpha) * N)


def level_variance(p: int, beta: float, alpha: float) -> float:
    """Effective per-bond variance at level p: beta^2 * b_p / 2^(2p)."""
    return beta * beta * level_amplitude(p, alpha) / 4.0 ** p


def build_long_range(spec: ModelSpec) -> list[EffectiveBondLaw]:
    """One law per unordered pair (i < j): x = 4 beta^2 / |i-j|^alpha."""
    if spec.family != "long_range":
        raise ValueError("spec.family must be 'long_range'")
    b2 = 4.0 * spec.beta * spec.beta
    laws = []
    for i in range(1, spec.L + 1):
        for j in range(i + 1, spec.L + 1):
            laws.append(EffectiveBondLaw(Bond(i, j, 0), b2 / (j - i) ** spec.alpha))
    return laws


def build_dyson(spec: ModelSpec) -> list[EffectiveBondLaw]:
    """Ordered-pair laws for every block at every level q = 1..N."""
    if spec.family != "dyson":
        raise ValueError("spec.family must be 'dyson'")
    laws = []
    for q in range(1, spec.N + 1):
        if spec.variance_overrides is not None:
            x = float(spec.variance_overrides[q - 1])
        else:
            x = level_variance(q, spec.beta, spec.alpha)
        laws.extend(_block_laws(spec.N, q, x, spec.include_diagonal))
    return laws


def _block_laws(N, q, x, include_diagonal, tag=""):
    size = 2 ** q
    out = []
    for block in range(2 ** (N - q)):
        lo = block * size + 1
        for i in range(lo, lo + size):
            for j in range(lo, lo + size):
                if i == j and not include_diagonal:
                    continue
                out.append(EffectiveBondLaw(Bond(i, j, q, tag), x))
    return out


def interpolate_dyson(spec: ModelSpec, t: float) -> list[EffectiveBondLaw]:
    """Laws of the one-parameter family joining the split halves to the full model.

    Sub-levels q <= N-1 are untouched. The top level carries t * x_N over all
    2^(2N) ordered pairs; each half additionally carries (1-t) * 2 * x_N over
    its own ordered pairs (tagged "interp"). At t = 1 the extra laws have zero
    variance and the model is the plain hierarchical one; at t = 0 the halves
    decouple and each extra layer, added to level N-1, reproduces an (N-1)-level
    model with top variance 2 x_N + x_(N-1).

    The bond list has the same structure for every t, so a fixed (seed, index)
    realizes the whole family with common random numbers.
    """
    if spec.family != "dyson":
        raise ValueError("spec.family must be 'dyson'")
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    if spec.variance_overrides is not None:
        x_top = float(spec.variance_overrides[spec.N - 1])
    else:
        x_top = level_variance(spec.N, spec.beta, spec.alpha)

    laws = []
    for q in range(1, spec.N):
        if spec.variance_overrides is not None:
            x = float(spec.variance_overrides[q - 1])
        else:
            x = level_variance(q, spec.beta, spec.alpha)
        laws.extend(_block_laws(spec.N, q, x, spec.include_diagonal))
    laws.extend(_block_laws(spec.N, spec.N, t * x_top, spec.include_diagonal))
    # Split variance on the halves: level-(N-1)-shaped bonds, 2x_N total at t=0.
    laws.extend(_block_laws(spec.N, spec.N - 1, (1.0 - t) * 2.0 * x_top,
                            spec.include_diagonal, tag="interp"))
    return laws


def build_custom(spec: ModelSpec) -> list[EffectiveBondLaw]:
    if spec.family != "custom":
        raise ValueError("spec.family must be 'custom'")
    return [EffectiveBondLaw(Bond(i, j, 0), x) for i, j, x in spec.custom_bonds]


def build_laws(spec: ModelSpec) -> list[EffectiveBondLaw]:
    """Family dispatch."""
    if spec.family == "long_range":
        return build_long_range(spec)
    if spec.family == "dyson":
        return build_dyson(spec)
    return build_custom(spec)


@dataclass(frozen=True)
class DisorderRealization:
    """One seeded draw of all effective couplings for a fixed bond-law list.

    couplings[b] = x_b + sqrt(x_b) * z[b] exactly, with z the (seed,
    sample_index)-keyed standard-normal stream; re-realizing with the same
    arguments is bit-identical.
    """

    laws: tuple
    n_sites: int
    seed: int
    sample_index: int
    couplings: np.ndarray
    z: np.ndarray

    def coupling_map(self) -> dict:
        """bond -> realized coupling; only for lists with unique bonds."""
        out = {law.bond: float(c) for law, c in zip(self.laws, self.couplings)}
        if len(out) != len(self.laws):
            raise ValueError("bond identifiers are not unique in this law list")
        return out

    def site_pairs(self) -> np.ndarray:
        """(n_bonds, 2) array of 0-based site indices."""
        return np.array([(law.bond.i - 1, law.bond.j - 1) for law in self.laws],
                        dtype=np.int64)

    def x(self) -> np.ndarray:
        return np.array([law.x for law in self.laws], dtype=np.float64)


def realize(laws: Sequence[EffectiveBondLaw], seed: int, sample_index: int,
            n_sites: Optional[int] = None) -> DisorderRealization:
    """Draw one disorder realization of the given laws."""
    laws = tuple(laws)
    x = np.array([law.x for law in laws], dtype=np.float64)
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise ValueError("all effective variances must be finite and >= 0")
    z = rng.normal_stream(seed, sample_index, len(laws))
    couplings = x + np.sqrt(x) * z
    if n_sites is None:
        n_sites = max(max(law.bond.i, law.bond.j) for law in laws)
    return DisorderRealization(laws=laws, n_sites=n_sites, seed=seed,
                               sample_index=sample_index, couplings=couplings, z=z)


def realize_block(laws: Sequence[EffectiveBondLaw], seed: int, sample_indices,
                  n_sites: Optional[int] = None):
    """Coupling matrix (n_bonds, n_samples) for a batch of sample indices.

    Column k equals realize(laws, seed, sample_indices[k]).couplings.
    """
    laws = tuple(laws)
    x = np.array([law.x for law in laws], dtype=np.float64)
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise ValueError("all effective variances must be finite and >= 0")
    z = rng.normal_block(seed, sample_indices, len(laws))
    couplings = x[:, None] + np.sqrt(x)[:, None] * z
    if n_sites is None:
        n_sites = max(max(law.bond.i, law.bond.j) for law in laws)
    return couplings, z, n_sites


def realization_to_csv(real: DisorderRealization) -> str:
    """Bond table as CSV text: bond_i, bond_j, level, x, coupling."""
    lines = ["bond_i,bond_j,level,x,coupling"]
    for law, c in zip(real.laws, real.couplings):
        lines.append(f"{law.bond.i},{law.bond.j},{law.bond.level},{law.x!r},{float(c)!r}")
    return "\n".join(lines) + "\n"
