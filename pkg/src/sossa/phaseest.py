"""Statistical simulation of the estimation algorithms with query ledgers.

Quantum states are replaced by finite weighted spectra; the gapped
phase-estimation primitive is an analytic response model whose outcome
probabilities satisfy the required domain bounds with margin.  Estimators
charge block-encoding and state-preparation queries exactly as their cost
formulas dictate, so the ledgers expose the asymptotics while the sampled
outcomes exercise the search logic honestly.

Phase convention: an energy ``E`` in ``[-lambda, lambda]`` sits at
``theta = pi - arccos(E / lambda)``, so the low-energy edge maps to
``theta = 0`` and ``E = -lambda * cos(theta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.special import erf, erfinv

from .operators import ValidationError

_HALF_PI = math.pi / 2.0
_STAGE2_C = 2.0 / (math.sqrt(3.0) * math.pi)


def _log_inv_r(x: float) -> float:
    return math.log(x) / math.log(1.5)


def _fold_phase(theta: float) -> float:
    t = abs(theta) % (2.0 * math.pi)
    return 2.0 * math.pi - t if t > math.pi else t


def energy_to_phase(energy: float, lam: float) -> float:
    x = max(-1.0, min(1.0, energy / lam))
    return math.pi - math.acos(x)


# ---------------------------------------------------------------------------
# Gapped phase estimation response model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GpeResponse:
    """Analytic outcome model for one gapped phase-estimation unitary.

    ``prob_one`` is a smooth error-function window in the folded phase,
    calibrated so that for any phase at distance >= ``eps`` from
    ``theta0`` the passing/blocking bounds hold with margin:
    within the pass band ``|beta - 1| <= q`` (sign flips near ``pi``) and
    within the stop band ``|beta|^2 <= 2 q``.
    """

    theta0: float
    eps: float
    q: float
    width: float = field(init=False)

    def __post_init__(self):
        if not (0.0 < self.eps <= self.theta0):
            raise ValidationError("need 0 < eps <= theta0")
        if self.theta0 + self.eps > _HALF_PI + 1e-12:
            raise ValidationError("need eps + theta0 <= pi/2")
        if not (0.0 < self.q < 1.0):
            raise ValidationError("need 0 < q < 1")
        # in-band mass tau >= (1-q)^2 makes the domain bounds hold; the 0.9
        # floor keeps the window sharp even at loose confidences, where the
        # overlap-threshold margins of the nested estimators are tight
        tau = max((1.0 - 0.8 * self.q) ** 2, 0.9)
        x = float(erfinv(2.0 * tau - 1.0))
        object.__setattr__(self, "width", self.eps / x)

    def _effective(self, theta: float) -> float:
        t = _fold_phase(theta)
        return min(t, math.pi - t)

    def prob_one(self, theta: float) -> float:
        s = 0.5 * (1.0 + erf((self.theta0 - self._effective(theta)) / self.width))
        return float(min(max(s, 0.0), 1.0))

    def beta_amplitude(self, theta: float) -> float:
        """Signed flag amplitude: ~+1 near theta=0, ~-1 near theta=pi."""
        mag = math.sqrt(self.prob_one(theta))
        return mag if _fold_phase(theta) <= _HALF_PI else -mag

    def alpha_amplitude(self, theta: float) -> float:
        return math.sqrt(max(0.0, 1.0 - self.prob_one(theta)))


def gpe_charge(eps: float, q: float, cost_constant: float) -> int:
    """Block-encoding queries for one invocation: ceil(C/eps)*ceil(ln(1/q))."""
    return int(math.ceil(cost_constant / eps)) * int(
        max(1, math.ceil(math.log(1.0 / q)))
    )


def gpe_sample(
    resp: GpeResponse, theta: float, rng: np.random.Generator,
    cost_constant: float = 4.0,
) -> tuple[int, int]:
    """Sample the flag outcome; returns ``(m, query charge)``."""
    m = 1 if rng.random() < resp.prob_one(theta) else 0
    return m, gpe_charge(resp.eps, resp.q, cost_constant)


def cgpe_branch(
    resp: GpeResponse, theta: float, rng: np.random.Generator,
    cost_constant: float = 4.0,
) -> tuple[str, int]:
    """Controlled variant resolving the ``theta`` versus ``pi - theta`` branch.

    Internally tightens the confidence to ``q' = 4q/5`` so that the
    failure chain ``q'^2/4 + q' <= 5q'/4 <= q`` closes; outcomes are
    ``'01'`` (phase near 0), ``'11'`` (phase near pi) or ``'other'``.
    """
    inner = GpeResponse(resp.theta0, resp.eps, 0.8 * resp.q)
    beta = inner.beta_amplitude(theta)
    p01 = abs(1.0 + beta) ** 2 / 4.0
    p11 = abs(1.0 - beta) ** 2 / 4.0
    p_other = max(0.0, 1.0 - p01 - p11)
    u = rng.random() * (p01 + p11 + p_other)
    outcome = "01" if u < p01 else ("11" if u < p01 + p11 else "other")
    return outcome, gpe_charge(inner.eps, inner.q, cost_constant)


def union_budget_schedule(total: float, i_max: int) -> list[float]:
    """Per-iteration confidences ``(6/pi^2) total / (i_max - i + 1)^2``."""
    return [
        (6.0 / math.pi ** 2) * total / (i_max - i + 1) ** 2 for i in range(i_max)
    ]


# ---------------------------------------------------------------------------
# Scenarios, configuration, run records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralScenario:
    """Finite weighted spectrum standing in for a quantum state."""

    eigenvalues: tuple
    weights: tuple
    lam: float

    def __post_init__(self):
        if len(self.eigenvalues) != len(self.weights) or not self.eigenvalues:
            raise ValidationError("eigenvalues and weights must align")
        if abs(sum(self.weights) - 1.0) > 1e-9 or min(self.weights) < 0:
            raise ValidationError("weights must be a distribution")
        if any(abs(e) > self.lam * (1 + 1e-12) for e in self.eigenvalues):
            raise ValidationError("eigenvalue outside [-lambda, lambda]")

    @classmethod
    def single(cls, energy: float, lam: float) -> "SpectralScenario":
        return cls((float(energy),), (1.0,), float(lam))

    @property
    def ground_energy(self) -> float:
        return float(min(self.eigenvalues))

    @property
    def ground_weight(self) -> float:
        e0 = self.ground_energy
        return float(
            sum(w for e, w in zip(self.eigenvalues, self.weights) if e == e0)
        )


@dataclass(frozen=True)
class EstimatorConfig:
    epsilon: float = 1e-2
    q: float = 0.05
    r: float = 2.0 / 3.0
    gpe_cost_constant: float = 4.0
    rng_seed: int = 0
    inner_sp_constant: float = 2.0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValidationError("epsilon must be positive")
        if not (0.0 < self.q < 1.0):
            raise ValidationError("q must lie in (0, 1)")
        if abs(self.r - 2.0 / 3.0) > 1e-12:
            raise ValidationError("interval ratio is fixed at 2/3")


@dataclass
class Ledger:
    q_h: int = 0
    q_p: int = 0

    def charge(self, q_h: int = 0, q_p: int = 0) -> None:
        if q_h < 0 or q_p < 0:
            raise ValidationError("ledger charges must be nonnegative")
        self.q_h += int(q_h)
        self.q_p += int(q_p)


@dataclass(frozen=True)
class SearchState:
    """Snapshot of one search iteration, with cumulative ledger readings."""

    iteration: int
    interval: tuple
    theta_mid: float
    phi_gap: float
    outcome: int
    epsilon_i: float
    q_h_cum: int
    q_p_cum: int


@dataclass(frozen=True)
class EstimationRun:
    estimate: float
    claimed_error: float
    ledger: Ledger
    converged: bool
    trace: tuple
    flags: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Interval-splitting search (shared by the adaptive estimators)
# ---------------------------------------------------------------------------

@dataclass
class _Interval:
    lo: Fraction = Fraction(0)
    hi: Fraction = Fraction(1)  # in units of pi/2

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def lo_rad(self) -> float:
        return float(self.lo) * _HALF_PI

    def hi_rad(self) -> float:
        return float(self.hi) * _HALF_PI

    def mid_rad(self) -> float:
        return float(self.lo + self.hi) / 2.0 * _HALF_PI

    def descend(self, keep_low: bool) -> None:
        third = self.width / 3
        if keep_low:
            self.hi -= third
        else:
            self.lo += third


def _run_search(
    schedule: Sequence[float],
    decide_low: Callable[[int, float, float, float], int],
    trace: list,
    ledger: Ledger,
    start: _Interval | None = None,
    stop_rule: Callable[[int, "_Interval"], bool] | None = None,
) -> _Interval:
    """Shrink [0, pi/2] by thirds; ``decide_low`` returns 1 to keep the
    lower two-thirds and 0 to keep the upper, charging the ledger itself.
    ``stop_rule(completed, box)`` may end the stage before the schedule."""
    box = start or _Interval()
    for i in range(len(schedule)):
        theta_mid = box.mid_rad()
        phi = float(box.width) * _HALF_PI / 6.0
        outcome = decide_low(i, theta_mid, phi, schedule[i])
        eps_i = 2.0 * math.sin(theta_mid) * math.sin(float(box.width) * _HALF_PI / 2.0)
        box.descend(bool(outcome))
        trace.append(
            SearchState(
                iteration=len(trace),
                interval=(box.lo_rad(), box.hi_rad()),
                theta_mid=theta_mid,
                phi_gap=phi,
                outcome=int(outcome),
                epsilon_i=eps_i,
                q_h_cum=ledger.q_h,
                q_p_cum=ledger.q_p,
            )
        )
        if stop_rule is not None and stop_rule(i + 1, box):
            break
    return box


def _stage1_stop_rule(i_max1: int, d_extra: int) -> Callable[[int, _Interval], bool]:
    """Stop once the case is decided: either the low edge is still pinned at
    the checkpoint depth, or the first up-step happened ``d_extra``
    iterations ago (which certifies the constant-factor proxy)."""
    first_up: dict = {}

    def rule(completed: int, box: _Interval) -> bool:
        if box.lo != 0 and "i_f" not in first_up:
            first_up["i_f"] = completed
        if box.lo == 0:
            return completed >= i_max1
        return completed >= first_up["i_f"] + d_extra

    return rule


def _resolve_sign(
    right_edge: Fraction, magnitude: float, theta_true: float, budget: float,
    cfg: EstimatorConfig, rng, ledger: Ledger, flags: dict,
) -> float:
    """Decide the ``theta`` versus ``pi - theta`` branch with one CGPE call."""
    i_r = float(right_edge) * _HALF_PI
    if i_r >= _HALF_PI - 1e-12:
        flags["sign"] = "skipped-degenerate"
        return -magnitude
    theta0 = (i_r + _HALF_PI) / 2.0
    eps = (_HALF_PI - i_r) / 2.0
    resp = GpeResponse(theta0, eps, budget)
    outcome, charge = cgpe_branch(resp, theta_true, rng, cfg.gpe_cost_constant)
    ledger.charge(q_h=charge, q_p=charge)
    flags["sign"] = outcome
    return magnitude if outcome == "11" else -magnitude


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------

def _require_single(scenario: SpectralScenario) -> float:
    if len(scenario.eigenvalues) != 1:
        raise ValidationError("expectation estimators take a single-value scenario")
    return float(scenario.eigenvalues[0])


def estimate_energy_with_prior(
    scenario: SpectralScenario, delta: float, cfg: EstimatorConfig,
    rng: np.random.Generator | None = None,
) -> EstimationRun:
    """Non-adaptive estimation under a known bound ``E <= -lambda + delta``.

    One phase-estimation round at angular precision
    ``eps_pea = epsilon / sqrt(2 delta lambda)``; the arccos nonlinearity
    turns that into an energy error below ``epsilon`` on the promised
    low-energy input.
    """
    rng = rng if rng is not None else np.random.default_rng(cfg.rng_seed)
    if delta <= 0:
        raise ValidationError("delta must be positive")
    lam = scenario.lam
    energy = _require_single(scenario)
    if energy > -lam + delta + 1e-12:
        raise ValidationError("scenario violates the low-energy promise")
    eps_pea = cfg.epsilon / math.sqrt(2.0 * delta * lam)
    charge = gpe_charge(eps_pea, cfg.q, cfg.gpe_cost_constant)
    ledger = Ledger()
    ledger.charge(q_h=charge, q_p=charge)
    theta = energy_to_phase(energy, lam)
    if rng.random() < cfg.q:
        theta_hat = rng.uniform(0.0, math.pi)
    else:
        theta_hat = _fold_phase(theta + rng.uniform(-eps_pea, eps_pea))
    return EstimationRun(
        estimate=-lam * math.cos(theta_hat),
        claimed_error=cfg.epsilon,
        ledger=ledger,
        converged=True,
        trace=(),
        flags={"eps_pea": eps_pea},
    )


def estimate_energy_adaptive(
    scenario: SpectralScenario, cfg: EstimatorConfig,
    rng: np.random.Generator | None = None,
) -> EstimationRun:
    """Expectation estimation with no prior bound on the energy.

    Stage 1 resolves the phase to ``~sqrt(eps/lambda)``: either the
    interval pins the low edge (return ``-lambda``-side estimate) or its
    right edge gives a constant-factor proxy for ``lambda - |E|``.  Stage 2
    reruns the search to the depth that proxy prescribes, and a single
    controlled round resolves the sign.  Failure budget q splits in three.
    """
    rng = rng if rng is not None else np.random.default_rng(cfg.rng_seed)
    lam = scenario.lam
    energy = _require_single(scenario)
    theta_true = energy_to_phase(energy, lam)
    eps_prime = cfg.epsilon
    d1 = d2 = d3 = cfg.q / 3.0
    ledger = Ledger()
    trace: list = []
    flags: dict = {}

    def decide(i, theta_mid, phi, q_i):
        resp = GpeResponse(theta_mid, phi, q_i)
        m, charge = gpe_sample(resp, theta_true, rng, cfg.gpe_cost_constant)
        ledger.charge(q_h=charge, q_p=charge)
        return m

    i_max1 = max(0, math.ceil(0.5 * _log_inv_r(math.pi ** 2 * lam / (8.0 * eps_prime))))
    d_extra = math.ceil(_log_inv_r(16.0 * math.pi))
    stage1 = union_budget_schedule(d1, i_max1 + d_extra)
    box = _run_search(
        stage1, decide, trace, ledger,
        stop_rule=_stage1_stop_rule(i_max1, d_extra),
    )
    flags["i_max1"] = i_max1
    if box.lo == 0:
        # low edge pinned: |E| is lambda up to eps; only the sign remains
        magnitude = lam * math.cos(box.mid_rad())
        estimate = _resolve_sign(
            box.hi, magnitude, theta_true, d3, cfg, rng, ledger, flags
        )
        flags["stage"] = "edge-terminated"
        return EstimationRun(
            estimate=estimate, claimed_error=eps_prime, ledger=ledger,
            converged=True, trace=tuple(trace), flags=flags,
        )

    proxy = lam * (1.0 - math.cos(box.hi_rad()))  # ~ lambda - |E|
    i_max2 = max(
        1,
        math.ceil(_log_inv_r(math.sqrt(proxy * lam) / (_STAGE2_C * eps_prime))),
    )
    flags["i_max2"] = i_max2
    # the search continues from the stage-1 interval; only depths beyond it
    # cost anything, with a fresh failure budget over the new iterations
    extra = i_max2 - len(trace)
    box2 = (
        _run_search(union_budget_schedule(d2, extra), decide, trace, ledger, start=box)
        if extra > 0
        else box
    )
    magnitude = lam * math.cos(box2.mid_rad())
    if magnitude <= eps_prime / 2.0:
        flags["sign"] = "skipped-small"
        estimate = -magnitude
    else:
        estimate = _resolve_sign(
            box2.hi, magnitude, theta_true, d3, cfg, rng, ledger, flags
        )
    return EstimationRun(
        estimate=estimate, claimed_error=eps_prime, ledger=ledger,
        converged=True, trace=tuple(trace), flags=flags,
    )


def sa_phase_estimation(
    scenario: SpectralScenario, delta: float, epsilon: float,
    cfg: EstimatorConfig, rng: np.random.Generator | None = None,
) -> EstimationRun:
    """Square-root phase estimation of an eigenvalue of a squared operator.

    The scenario lists eigenvalues of ``H_sa^dag H_sa`` (all >= 0) with the
    state's weights; the doubled Hermitian operator exposes ``+/- sqrt(E)``,
    estimated to ``eps_pea = epsilon / (3 sqrt(delta))`` and squared back.
    Support above ``delta`` is flagged post hoc rather than rejected.
    """
    rng = rng if rng is not None else np.random.default_rng(cfg.rng_seed)
    if delta <= 0 or epsilon <= 0:
        raise ValidationError("delta and epsilon must be positive")
    if min(scenario.eigenvalues) < -1e-12:
        raise ValidationError("squared-operator scenario needs eigenvalues >= 0")
    lam = scenario.lam
    branch = int(rng.choice(len(scenario.eigenvalues), p=scenario.weights))
    value = float(scenario.eigenvalues[branch])
    eps_pea = epsilon / (3.0 * math.sqrt(delta))
    charge = int(math.ceil(cfg.gpe_cost_constant * math.sqrt(lam) / eps_pea)) * int(
        max(1, math.ceil(math.log(1.0 / cfg.q)))
    )
    ledger = Ledger()
    ledger.charge(q_h=charge, q_p=1)
    if rng.random() < cfg.q:
        zeta = rng.uniform(0.0, math.sqrt(lam))
    else:
        zeta = math.sqrt(value) + rng.uniform(-eps_pea, eps_pea)
    flags = {
        "branch": branch,
        "eps_pea": eps_pea,
        "promise_violated": bool(value > delta * (1 + 1e-12)),
    }
    return EstimationRun(
        estimate=zeta ** 2,
        claimed_error=epsilon,
        ledger=ledger,
        converged=not flags["promise_violated"],
        trace=(),
        flags=flags,
    )


def estimate_ground_energy(
    scenario: SpectralScenario, p: float, cfg: EstimatorConfig,
    rng: np.random.Generator | None = None,
) -> EstimationRun:
    """Ground-energy estimation from a state with overlap at least sqrt(p).

    Each search decision runs nested amplitude estimation on the flag
    probability ``kappa``: confidence ``delta_i = p/4`` per invocation,
    ``~log(1/q_i)/sqrt(p)`` invocations, threshold at ``p/2``.  Two search
    stages mirror the expectation estimator; the stated range is
    ``E in [-lambda, 0]`` (mirror by negating the spectrum outside it).
    """
    rng = rng if rng is not None else np.random.default_rng(cfg.rng_seed)
    if not (0.0 < p <= 1.0):
        raise ValidationError("need 0 < p <= 1")
    if scenario.ground_weight < p - 1e-9:
        raise ValidationError("scenario ground weight is below the promised p")
    if scenario.ground_energy > 1e-12:
        raise ValidationError("ground energy must lie in [-lambda, 0]")
    lam = scenario.lam
    thetas = [energy_to_phase(e, lam) for e in scenario.eigenvalues]
    weights = list(scenario.weights)
    eps_prime = cfg.epsilon
    d1 = d2 = cfg.q / 2.0
    delta_inner = p / 4.0
    ledger = Ledger()
    trace: list = []
    flags: dict = {}

    def decide(i, theta_mid, phi, q_i):
        resp = GpeResponse(theta_mid, phi, delta_inner)
        kappa = float(sum(w * resp.prob_one(t) for w, t in zip(weights, thetas)))
        n_inner = max(
            1,
            math.ceil(
                cfg.inner_sp_constant / math.sqrt(p) * max(1.0, math.log(1.0 / q_i))
            ),
        )
        charge = gpe_charge(phi, delta_inner, cfg.gpe_cost_constant)
        ledger.charge(q_h=n_inner * charge, q_p=n_inner)
        if rng.random() < q_i:
            kappa_hat = rng.random()
        else:
            kappa_hat = kappa + (p / 4.0) * rng.uniform(-1.0, 1.0)
        return 1 if kappa_hat > p / 2.0 else 0

    i_max1 = max(0, math.ceil(0.5 * _log_inv_r(math.pi ** 2 * lam / (8.0 * eps_prime))))
    d_extra = math.ceil(_log_inv_r(16.0 * math.pi))
    stage1 = union_budget_schedule(d1, i_max1 + d_extra)
    box = _run_search(
        stage1, decide, trace, ledger,
        stop_rule=_stage1_stop_rule(i_max1, d_extra),
    )
    flags["i_max1"] = i_max1
    if box.lo == 0:
        flags["stage"] = "edge-terminated"
        return EstimationRun(
            estimate=-lam * math.cos(box.mid_rad()),
            claimed_error=eps_prime,
            ledger=ledger,
            converged=True,
            trace=tuple(trace),
            flags=flags,
        )
    proxy = lam * (1.0 - math.cos(box.hi_rad()))
    i_max2 = max(
        1,
        math.ceil(_log_inv_r(math.sqrt(proxy * lam) / (_STAGE2_C * eps_prime))),
    )
    flags["i_max2"] = i_max2
    extra = i_max2 - len(trace)
    box2 = (
        _run_search(union_budget_schedule(d2, extra), decide, trace, ledger, start=box)
        if extra > 0
        else box
    )
    return EstimationRun(
        estimate=-lam * math.cos(box2.mid_rad()),
        claimed_error=eps_prime,
        ledger=ledger,
        converged=True,
        trace=tuple(trace),
        flags=flags,
    )


def amplified_amplitude_estimation(
    a_true: float, epsilon: float, q: float, cfg: EstimatorConfig | None = None,
    rng: np.random.Generator | None = None,
) -> EstimationRun:
    """Projector-expectation estimation through the shifted square.

    The projector expectation ``a`` maps to the block-encoded value
    ``E = 2a - 1`` at unit normalization; the adaptive estimator then
    delivers ``sqrt(max(eps, a(1-a)))/eps``-type query scaling.
    """
    if not (0.0 <= a_true <= 1.0):
        raise ValidationError("projector expectation must lie in [0, 1]")
    base = cfg or EstimatorConfig()
    inner_cfg = replace(base, epsilon=2.0 * epsilon, q=q)
    rng = rng if rng is not None else np.random.default_rng(inner_cfg.rng_seed)
    run = estimate_energy_adaptive(
        SpectralScenario.single(2.0 * a_true - 1.0, 1.0), inner_cfg, rng
    )
    return EstimationRun(
        estimate=(run.estimate + 1.0) / 2.0,
        claimed_error=epsilon,
        ledger=run.ledger,
        converged=run.converged,
        trace=run.trace,
        flags=dict(run.flags, amplitude=True),
    )


# ---------------------------------------------------------------------------
# Trial harness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrialSummary:
    trials: int
    failures: int
    estimates: tuple
    q_h_total: int
    q_p_total: int
    q_h_mean: float

    @property
    def failure_rate(self) -> float:
        return self.failures / self.trials if self.trials else 0.0


def run_trials(
    single_trial: Callable[[np.random.Generator], EstimationRun],
    truth: float,
    tolerance: float,
    trials: int,
    master_seed: int = 0,
) -> TrialSummary:
    """Repeat an estimator with per-trial generators seeded from the master.

    Trial k uses ``default_rng([master_seed, k])`` so results are
    reproducible and order-independent; ledgers merge by summation.
    """
    failures = 0
    estimates = []
    q_h = q_p = 0
    for k in range(trials):
        rng = np.random.default_rng([master_seed, k])
        run = single_trial(rng)
        estimates.append(run.estimate)
        q_h += run.ledger.q_h
        q_p += run.ledger.q_p
        if abs(run.estimate - truth) > tolerance:
            failures += 1
    return TrialSummary(
        trials=trials,
        failures=failures,
        estimates=tuple(estimates),
        q_h_total=q_h,
        q_p_total=q_p,
        q_h_mean=q_h / trials if trials else 0.0,
    )
