"""Brute-force exact inference for small models.

Enumerates all 2^p configurations to evaluate the log-partition function,
the exact mean parameters, and the exact average log-likelihood.  This is
the ground-truth oracle used by the test suite and the rate experiment;
it is deliberately structure-blind and refuses p beyond a hard limit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .model import DomainError, IsingModel, MeanVector

__all__ = [
    "OracleLimit",
    "exact_log_partition",
    "exact_mean_parameters",
    "exact_avg_loglik",
]


@dataclass
class OracleLimit:
    """Enumeration guard: operations refuse p > max_p.

    The default keeps every oracle call to at most 2^16 states, which is
    comfortably below a second of work.
    """

    max_p: int = 16


_DEFAULT_LIMIT = OracleLimit()


def _check_limit(p: int, limit: OracleLimit | None) -> None:
    max_p = (limit or _DEFAULT_LIMIT).max_p
    if p > max_p:
        raise DomainError(f"p={p} exceeds the exact-oracle limit max_p={max_p}")


def _all_states(p: int) -> np.ndarray:
    """All 2^p configurations as a (2^p, p) array of -1/+1 (int8).

    Plain binary counting: bit v of the row index gives the sign of
    variable v, so the enumeration order is deterministic.
    """
    idx = np.arange(2 ** p, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(p)) & 1
    return (2 * bits - 1).astype(np.int8)


def _energies(model: IsingModel, states: np.ndarray) -> np.ndarray:
    s = states.astype(np.float64)
    e = s @ model.node_params
    for (u, v), w in model.edge_params.items():
        e += w * s[:, u] * s[:, v]
    return e


def exact_log_partition(model: IsingModel, limit: OracleLimit | None = None) -> float:
    """log-partition A(theta) = log sum_x exp<theta, phi(x)>, stabilized."""
    _check_limit(model.p, limit)
    return float(logsumexp(_energies(model, _all_states(model.p))))


def exact_mean_parameters(model: IsingModel, limit: OracleLimit | None = None) -> MeanVector:
    """Exact moments eta = E[phi(x)], the gradient of the log-partition."""
    _check_limit(model.p, limit)
    states = _all_states(model.p)
    energies = _energies(model, states)
    logz = logsumexp(energies)
    probs = np.exp(energies - logz)
    s = states.astype(np.float64)
    node_means = probs @ s
    second = s.T @ (s * probs[:, None])
    np.fill_diagonal(second, 0.0)
    second = (second + second.T) / 2.0
    return MeanVector(p=model.p, node_means=node_means, pair_means=second)


def exact_avg_loglik(model: IsingModel, data, limit: OracleLimit | None = None) -> float:
    """Average log-likelihood <theta, eta_hat> - A(theta) of a dataset.

    Parameters
    ----------
    model : IsingModel
    data : Dataset or array_like, shape (n, p)
        Rows of -1/+1 configurations; n >= 1.
    """
    x = np.asarray(getattr(data, "x", data), dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("dataset must be a nonempty (n, p) array")
    if x.shape[1] != model.p:
        raise ValueError(f"dataset has p={x.shape[1]}, model has p={model.p}")
    _check_limit(model.p, limit)
    n = x.shape[0]
    inner = float(np.mean(x @ model.node_params))
    for (u, v), w in model.edge_params.items():
        inner += w * float(np.dot(x[:, u], x[:, v])) / n
    return inner - exact_log_partition(model, limit)
