"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s`. Sample counts, tolerances,
and parameter points are fixed here; all randomness flows from one seed, so
the whole suite is reproducible bit for bit.
"""

import math
import time

import numpy as np
import pytest

from nlglass import exact as ex
from nlglass import mc
from nlglass import verify as vf
from nlglass.model import DisorderRealization, ModelSpec, build_laws

SEED = 20260810
K = 4.0


def _policy(n, workers=1):
    return vf.VerifyPolicy(n_samples=n, k_sigma=K, seed=SEED, workers=workers)


def _line(num, ok, text):
    status = "PASS" if ok else "FAIL"
    print(f"[criterion {num:2d}] {status} - {text}")
    assert ok, text


def test_criterion_01_two_spin_closed_form():
    rng = np.random.default_rng(SEED)
    spec = ModelSpec(family="custom", beta=1.0, custom_bonds=((1, 2, 1.0),),
                     n_sites_custom=2)
    laws = tuple(build_laws(spec))
    t0 = time.time()
    worst = 0.0
    for _ in range(100):
        j = float(rng.normal(0.0, 2.0))
        real = DisorderRealization(laws=laws, n_sites=2, seed=0, sample_index=0,
                                   couplings=np.array([j]), z=np.array([0.0]))
        rep = ex.gibbs_exact(real, ex.GibbsRequest(pairs=[(1, 2)], blocks=False))
        worst = max(worst, abs(rep.pair_corr[(1, 2)] - math.tanh(j)))
    elapsed = time.time() - t0
    _line(1, worst < 1e-12 and elapsed < 1.0,
          f"two-spin tanh reproduced, worst |dev| = {worst:.2e}, {elapsed:.2f}s")


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_criterion_02_nishimori_identity(beta):
    spec = ModelSpec(family="dyson", beta=beta, alpha=1.25, N=3)
    rep = vf.check_nishimori_identity(spec, (1, 2), _policy(20000))
    _line(2, rep.status == vf.PASS,
          f"Nishimori identity at beta={beta}: |z| = {abs(rep.margin):.2f} <= {K}")


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_criterion_03_internal_energy(beta):
    spec = ModelSpec(family="dyson", beta=beta, alpha=1.25, N=3)
    rep = vf.check_internal_energy(spec, _policy(20000))
    _line(3, rep.status == vf.PASS,
          f"per-bond energy identity at beta={beta}: worst |z| = {abs(rep.margin):.2f} "
          f"over {rep.details['n_bonds']} bonds")


def test_criterion_04_deterministic_p_monotonicity():
    spec = ModelSpec(family="dyson", beta=2.0, alpha=1.25, N=4)
    t0 = time.time()
    rep = vf.check_block_monotonicity(spec, _policy(1000))
    elapsed = time.time() - t0
    ok = rep.status == vf.PASS and elapsed < 60.0
    _line(4, ok, f"block moments non-increasing in p on 1000 realizations, "
                 f"max violation = {rep.details['max_violation']:.2e}, {elapsed:.1f}s")


def test_criterion_05_growth_monotonicity():
    small = ModelSpec(family="dyson", beta=1.0, alpha=1.25, N=2)
    large = ModelSpec(family="dyson", beta=1.0, alpha=1.25, N=3)
    rep = vf.check_growth_monotonicity(small, large, 1, _policy(20000))
    _line(5, rep.status == vf.PASS,
          f"f_3(1) - f_2(1) = {rep.details['diff']:+.5f}, z = {rep.margin:+.2f} >= -{K}")


@pytest.mark.parametrize("N", [2, 3])
def test_criterion_06_restricted_below_full(N):
    rep = vf.check_lemma6(N, 1.25, 1.0, _policy(2000), det_samples=1000)
    viol = rep.details["max_violation_a"]
    _line(6, rep.status == vf.PASS and viol <= 1e-9,
          f"restricted pressure <= full on 1000 realizations at N={N}, "
          f"max violation = {viol:.2e}")


@pytest.mark.parametrize("N,beta", [(2, 1.0), (2, 2.0), (3, 1.0), (3, 2.0)])
def test_criterion_07_pressure_recursion(N, beta):
    rep = vf.check_lemma5(N, 1.25, beta, _policy(20000))
    _line(7, rep.status == vf.PASS,
          f"recursion inequality at N={N}, beta={beta}: z = {rep.margin:+.2f} >= -{K}")


def test_criterion_08_concentration_bound():
    rep = vf.check_lemma7(2, 1.25, 1.0, _policy(10000))
    est = rep.details["estimate"]["mean"]
    bound = rep.details["bound"]
    ok = rep.status == vf.PASS and est < bound
    _line(8, ok, f"E[max_k log ratio] = {est:.3f} <= {bound:.3f} with positive slack")


def test_criterion_09_recursion_chain_and_base_term():
    rep = vf.check_lemma8_chain(3, 1.25, 8.0, _policy(20000))
    ok = rep.status == vf.PASS and abs(rep.details["z_f1"]) <= K
    _line(9, ok, f"all chain steps pass at beta=8; one-level estimate matches "
                 f"quadrature (|z| = {abs(rep.details['z_f1']):.2f})")


def test_criterion_10_coupling_domination():
    t0 = time.time()
    rep = vf.check_thm2_couplings(20, 1.25)
    elapsed = time.time() - t0
    ok = rep.status == vf.PASS and rep.margin > 0 and elapsed < 1.0
    _line(10, ok, f"strict domination over all {rep.details['n_pairs_covered']} pairs "
                  f"at N=20, min slack = {rep.margin:.3e}, {elapsed * 1000:.0f}ms")


def test_criterion_11_correlation_dominance():
    rep = vf.check_thm2_correlations(3, 1.25, 1.0, ((1, 2), (1, 8), (4, 5)),
                                     _policy(20000))
    _line(11, rep.status == vf.PASS,
          f"long-range correlations dominate hierarchical ones, "
          f"min z = {rep.margin:+.2f} >= -{K}")


def test_criterion_12_high_temperature_bound():
    rep = vf.check_thm3_decay([8, 12, 16], 2.0, 0.06, _policy(2000))
    vals = {L: row["max_sum"]["mean"] for L, row in rep.details["per_L"].items()}
    _line(12, rep.status == vf.PASS,
          f"max_j correlation sums {vals} all below B = {rep.details['bound']:.4f}, "
          f"no growth (z = {rep.details['z_no_growth']:+.2f})")


def test_criterion_13_interpolation_derivative():
    rep = vf.check_dq_dt(2, 1.25, 1.0, 0.5, _policy(20000), h=1e-3)
    d = rep.details["difference"]
    _line(13, rep.status == vf.PASS,
          f"IBP derivative vs finite difference: |mean| = {abs(d['mean']):.2e} "
          f"<= {rep.details['tolerance']:.2e}")


def test_criterion_14_mc_exact_crosscheck():
    spec = ModelSpec(family="long_range", beta=0.4, alpha=1.25, L=12)
    cfg = mc.MCConfig(sweeps=600000, burn_in=20000, thinning=5, chain_seed=SEED)
    rep = vf.check_mc_crosscheck(spec, cfg, _policy(2000))
    _line(14, rep.status == vf.PASS,
          f"all {rep.details['n_blocks']} block moments at n=12 within {K} SE "
          f"(worst slack = {rep.margin:.2f})")


def test_criterion_15_beta_monotonicity():
    hi = ModelSpec(family="dyson", beta=2.0, alpha=1.25, N=3)
    lo = ModelSpec(family="dyson", beta=1.0, alpha=1.25, N=3)
    rep = vf.check_griffiths_dominance(hi, lo, [(1, 2)], _policy(20000),
                                       name="beta-mono")
    _line(15, rep.status == vf.PASS,
          f"E<s1 s2> grows with beta: z = {rep.margin:+.2f} >= -{K}")


def test_criterion_16_reproducibility_across_workers():
    spec = ModelSpec(family="dyson", beta=1.0, alpha=1.25, N=2)
    docs = {}
    for workers in (1, 8):
        a = vf.check_nishimori_identity(spec, (1, 2), _policy(4096, workers))
        b = vf.check_block_monotonicity(spec, _policy(1024, workers))
        docs[workers] = (a.to_json(), b.to_json())
    rerun = vf.check_nishimori_identity(spec, (1, 2), _policy(4096, 1))
    ok = docs[1] == docs[8] and rerun.to_json() == docs[1][0]
    _line(16, ok, "identical report JSON for reruns and for 1 vs 8 workers")
