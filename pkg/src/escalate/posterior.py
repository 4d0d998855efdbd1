"""Bayesian engine: discretised posterior over model parameters.

The posterior is represented on a fixed deterministic quadrature grid built
from the prior (equally spaced nodes over mean +- 8 sd per dimension).  The
observed data enter only through per-(dose, outcome) counts, and weights are
always recomputed from the prior plus those counts in log space.  That makes
updates exactly order-independent: applying observations in any order, or in
one batch, yields bit-identical weights after normalisation.

No sampling is involved anywhere; every expectation is a weighted sum over
the grid, which keeps trial simulation deterministic and fast.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MIN_NODES = 32
_TINY = 1e-300
_ONE_MINUS = 1.0 - 1e-16


def _likelihood_rows(rep, model, dose):
    """Cached (psi, log psi, log(1-psi)) rows for one standardised dose."""
    key = float(dose)
    rows = rep.cache.get(key)
    if rows is None:
        psi = model.prob(key, rep.nodes)[0]
        safe = np.clip(psi, _TINY, _ONE_MINUS)
        rows = (psi, np.log(safe), np.log1p(-safe))
        rep.cache[key] = rows
    return rows


def _materialize(rep, model):
    """Recompute normalised weights from the prior and observation counts."""
    lw = rep.log_prior.copy()
    for (dose, outcome), count in rep.counts:
        _, log_psi, log_1m = _likelihood_rows(rep, model, dose)
        lw += count * (log_psi if outcome == 1 else log_1m)
    peak = lw.max()
    if not np.isfinite(peak):
        raise ValueError("posterior mass underflowed: no grid node is consistent with the data")
    scaled = np.exp(lw - peak)
    norm = peak + np.log(scaled.sum())
    lw -= norm
    object.__setattr__(rep, "log_weights", lw)
    object.__setattr__(rep, "weights", np.exp(lw))
    object.__setattr__(rep, "normalized", True)


@dataclass(frozen=True)
class PosteriorRep:
    """Immutable discretised posterior: nodes, weights and the data counts.

    ``counts`` is a sorted tuple of ``((dose, outcome), n)`` pairs; the
    weights are a pure function of the prior and these counts.  The
    likelihood cache is shared across updates of the same grid and must only
    ever be fed by one model instance's ``prob``.
    """

    nodes: np.ndarray
    log_prior: np.ndarray
    counts: tuple = ()
    cache: dict = field(default_factory=dict, repr=False, compare=False)
    log_weights: np.ndarray = None
    weights: np.ndarray = None
    normalized: bool = False

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_observations(self):
        return int(sum(c for _, c in self.counts))


def build_grid(model, n_nodes=None):
    """Prior-state posterior for ``model`` on a deterministic grid.

    ``n_nodes`` is the per-dimension node count (201 for one-parameter
    models, 101 for two-parameter models by default).  Grids with fewer
    than 32 total nodes are rejected.
    """
    if n_nodes is None:
        n_nodes = 201 if model.n_params == 1 else 101
    nodes, log_prior = model.grid(n_nodes)
    if nodes.shape[0] < MIN_NODES:
        raise ValueError(f"grid must have at least {MIN_NODES} nodes; got {nodes.shape[0]}")
    rep = PosteriorRep(nodes=nodes, log_prior=log_prior)
    _materialize(rep, model)
    return rep


def update(post, model, dose, outcome):
    """Posterior after one additional binary observation at ``dose``.

    Returns a new :class:`PosteriorRep`; the input is unchanged.  Outcome
    order never matters because weights are recomputed from counts.
    """
    if not post.normalized:
        raise ValueError("update requires a normalized posterior")
    outcome = int(outcome)
    if outcome not in (0, 1):
        raise ValueError(f"outcome must be 0 or 1; got {outcome!r}")
    key = (float(dose), outcome)
    tally = dict(post.counts)
    tally[key] = tally.get(key, 0) + 1
    rep = PosteriorRep(
        nodes=post.nodes,
        log_prior=post.log_prior,
        counts=tuple(sorted(tally.items())),
        cache=post.cache,
    )
    _materialize(rep, model)
    return rep


def _psi_matrix(post, model, doses):
    doses = np.atleast_1d(np.asarray(doses, dtype=float))
    key = ("psi", doses.tobytes())
    psi = post.cache.get(key)
    if psi is None:
        psi = np.vstack([_likelihood_rows(post, model, d)[0] for d in doses])
        post.cache[key] = psi
    return doses, psi


def post_mean_tox(post, model, dose):
    """Posterior mean DLT probability at one or several doses."""
    if not post.normalized:
        raise ValueError("posterior must be normalized")
    doses, psi = _psi_matrix(post, model, dose)
    out = psi @ post.weights
    return float(out[0]) if np.ndim(dose) == 0 else out


def post_expect(post, model, dose, functional, floor=1e-12, cache_token=None):
    """Posterior expectation of ``functional(psi(dose, params))``.

    Node probabilities are clamped to ``[floor, 1 - floor]`` before the
    functional is applied, so losses that diverge at the probability bounds
    stay finite on saturated grid nodes.  ``cache_token`` (hashable) lets a
    fixed functional reuse its node values across repeated calls on the
    same grid.
    """
    if not post.normalized:
        raise ValueError("posterior must be normalized")
    doses, psi = _psi_matrix(post, model, dose)
    values = None
    if cache_token is not None:
        values = post.cache.get(("fn", cache_token, floor, doses.tobytes()))
    if values is None:
        values = np.asarray(functional(np.clip(psi, floor, 1.0 - floor)), dtype=float)
        if values.shape != psi.shape:
            raise ValueError("functional must map probabilities elementwise, preserving shape")
        if not np.all(np.isfinite(values)):
            raise ValueError("functional returned non-finite values on clamped nodes")
        if cache_token is not None:
            post.cache[("fn", cache_token, floor, doses.tobytes())] = values
    out = values @ post.weights
    return float(out[0]) if np.ndim(dose) == 0 else out
