"""Simulation and verification laboratory for Gaussian Ising spin glasses on
the Nishimori line: a 1D long-range chain and its hierarchical counterpart,
exact enumeration and Monte Carlo over quenched disorder, and statistical
checks of the closed-form identities, monotonicities, and bounds."""

from .model import (Bond, DisorderRealization, EffectiveBondLaw, ModelSpec,
                    build_dyson, build_laws, build_long_range, interpolate_dyson,
                    realize, realize_block)
from .exact import (EnumerationCapError, GibbsReport, GibbsRequest,
                    IntervalPartition, RestrictedTraces, dyson_halves,
                    gibbs_exact, gibbs_exact_batch, q_restricted_pressure_sample,
                    restricted_traces, two_replica_restricted_moments)
from .mc import MCConfig, MCEstimate, metropolis_run, tempering_run
from .verify import (CheckReport, DisorderEstimate, VerifyPolicy, disorder_average,
                     FAIL, INCONCLUSIVE, PASS)
from . import theory

__version__ = "0.1.0"
