"""Effect estimation and error summaries."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from casbr.cascade import CascadeTrace
from casbr.designs import BYSTANDER, CONTROL, TREATMENT
from casbr.errors import InvalidParameterError, UndefinedQuantityError


def estimated_tte(trace: CascadeTrace, a, t: int) -> float:
    """Difference in mean outcome at step ``t`` between treated and control nodes.

    Bystanders count in neither group. Steps past the horizon read the
    final states.
    """
    a = np.asarray(a)
    y = trace.outcomes(t)
    treated, control = a == TREATMENT, a == CONTROL
    if not treated.any() or not control.any():
        raise UndefinedQuantityError("difference in means needs nonempty treatment and control groups")
    return float(y[treated].mean() - y[control].mean())


def estimated_tte_series(trace: CascadeTrace, a, length: int) -> np.ndarray:
    """:func:`estimated_tte` for steps ``0..length-1`` in one pass."""
    a = np.asarray(a)
    treated, control = a == TREATMENT, a == CONTROL
    n1, n0 = int(treated.sum()), int(control.sum())
    if n1 == 0 or n0 == 0:
        raise UndefinedQuantityError("difference in means needs nonempty treatment and control groups")
    s = trace.activation_step
    hit = (s >= 0) & (s < length)
    c1 = np.cumsum(np.bincount(s[hit & treated], minlength=length))
    c0 = np.cumsum(np.bincount(s[hit & control], minlength=length))
    return c1 / n1 - c0 / n0


def rmse(estimates, truth) -> float | np.ndarray:
    """Root mean squared deviation of per-simulation estimates from the truth.

    ``estimates`` may be a vector (one scalar per simulation) or a matrix
    of simulations by steps paired with a per-step ``truth``; the mean is
    taken over simulations.
    """
    est = np.asarray(estimates, dtype=float)
    if est.size == 0 or est.shape[0] == 0:
        raise InvalidParameterError("rmse needs at least one estimate")
    err = est - np.asarray(truth, dtype=float)
    out = np.sqrt(np.mean(err * err, axis=0))
    return float(out) if np.ndim(out) == 0 else out


def excluded_fraction(a) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return int(np.count_nonzero(a == BYSTANDER)) / a.size


@dataclass
class ExperimentResult:
    """Everything measured for one design in one repetition."""

    design: str
    repetition: int
    estimates: np.ndarray  # simulations x steps
    truth: np.ndarray
    rmse_by_step: np.ndarray
    cut_edge_fraction: float
    excluded_fraction: float
    cross_group_counts: list[dict] = field(default_factory=list)

    @property
    def steps(self) -> int:
        return len(self.truth)

    @property
    def final_rmse(self) -> float:
        return float(self.rmse_by_step[-1])

    @property
    def mean_estimate(self) -> np.ndarray:
        return self.estimates.mean(axis=0)

    @property
    def std_estimate(self) -> np.ndarray:
        # population std across simulations; zero for a single simulation
        return self.estimates.std(axis=0)
