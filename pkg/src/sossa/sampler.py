"""Low-depth expectation estimation: shot allocation and Bernoulli model.

Each SOS term is measured through a Hadamard test on its shifted-square
block-encoding; the ``|0>`` outcome fires with probability ``phi_j / 2``
where ``phi_j`` is the rescaled term expectation.  With per-term upper
bounds ``delta_j`` the Lagrange-optimal shot counts are
``N_j = (4/sigma^2) sqrt(L_j d_j) sum_k sqrt(L_k d_k)`` for ``L_j = a_j^2/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .operators import ValidationError


@dataclass(frozen=True)
class ShotRow:
    lam: float      # a_j^2 / 2
    delta: float    # upper bound on the raw term expectation <A^dag A>
    shots: int


@dataclass(frozen=True)
class ShotPlan:
    rows: tuple
    sigma: float

    @property
    def total_cost(self) -> int:
        return int(sum(r.shots for r in self.rows))

    def predicted_cost(self) -> float:
        """Closed form ``2 (sum_j sqrt(a_j^2 delta_j) / sigma)^2``."""
        s = sum(math.sqrt(2.0 * r.lam * r.delta) for r in self.rows)
        return 2.0 * (s / self.sigma) ** 2

    def predicted_variance_bound(self) -> float:
        return float(
            sum(4.0 * r.lam * r.delta / r.shots for r in self.rows if r.shots)
        )


def allocate_shots(terms: Sequence[tuple], sigma: float) -> ShotPlan:
    """Optimal shot counts for target standard deviation ``sigma``.

    ``terms`` is a list of ``(a_j, delta_j)`` rows.  A zero ``delta_j``
    against a nonzero ``a_j`` would demand exactness at zero cost and is
    rejected; zero-weight rows are dropped.
    """
    if sigma <= 0:
        raise ValidationError("sigma must be positive")
    rows = []
    weights = []
    for a, delta in terms:
        if a == 0.0:
            continue
        if delta <= 0.0:
            raise ValidationError("delta must be positive for a nonzero term")
        lam = a * a / 2.0
        rows.append((lam, float(delta)))
        weights.append(math.sqrt(lam * delta))
    total_weight = sum(weights)
    out = []
    for (lam, delta), w in zip(rows, weights):
        n = (4.0 / sigma ** 2) * w * total_weight
        out.append(ShotRow(lam=lam, delta=delta, shots=max(1, math.ceil(n))))
    return ShotPlan(rows=tuple(out), sigma=float(sigma))


@dataclass(frozen=True)
class HadamardTestResult:
    estimates: np.ndarray
    mean: float
    empirical_variance: float


def hadamard_test_simulate(
    plan: ShotPlan, truths: Sequence[float], rng: np.random.Generator,
    repetitions: int = 1,
) -> HadamardTestResult:
    """Sample the per-term Bernoulli outcomes and form the estimator.

    ``truths`` are the rescaled expectations ``phi_j = <A^dag A> / L_j``
    in [0, 2]; the unbiased estimator is
    ``sum_j L_j * (2/N_j) * Binomial(N_j, phi_j/2)``.
    """
    truths = [float(t) for t in truths]
    if len(truths) != len(plan.rows):
        raise ValidationError("one truth per plan row required")
    if any(t < -1e-12 or t > 2.0 + 1e-12 for t in truths):
        raise ValidationError("rescaled expectations must lie in [0, 2]")
    lams = np.array([r.lam for r in plan.rows])
    shots = np.array([r.shots for r in plan.rows])
    probs = np.clip(np.array(truths) / 2.0, 0.0, 1.0)
    counts = rng.binomial(
        shots[None, :].repeat(repetitions, axis=0),
        probs[None, :].repeat(repetitions, axis=0),
    )
    phi_hat = 2.0 * counts / shots[None, :]
    estimates = phi_hat @ lams
    mean = float(np.mean(estimates))
    var = float(np.var(estimates, ddof=1)) if repetitions > 1 else 0.0
    return HadamardTestResult(estimates=estimates, mean=mean, empirical_variance=var)
