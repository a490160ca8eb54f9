"""SYK instances, exact diagonalization, dual bound, scaling experiment.

Couplings are standard normals drawn from a counter-based generator keyed
by ``(seed, sorted 4-tuple)``, so any subset of couplings regenerates
independently of enumeration order.  The scaling experiment runs the full
certification pipeline per ``(N, seed)`` cell and fits log-log slopes of
the normalization quantities against the mode count.
"""

from __future__ import annotations

import hashlib
import math
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import doublefact, specamp
from .operators import LcuHamiltonian, MajoranaPolynomial, ValidationError
from .sosopt import (
    DEFAULT_RANK_TOL,
    DEFAULT_SOLVER_TOL,
    SosBasis,
    build_sos_sdp,
    dual_norm_bound,
    extract_generators,
    solve_sdp,
)

DENSE_MODE_CAP = 28  # 2^(N/2) <= 16384


def _coupling_normal(seed: int, key: tuple) -> float:
    """One standard normal per (seed, 4-tuple) via keyed hashing."""
    payload = struct.pack(">q4H", seed, *key)
    digest = hashlib.blake2b(payload, digest_size=16).digest()
    a, b = struct.unpack(">QQ", digest)
    u1 = ((a >> 11) + 0.5) / 2.0 ** 53
    u2 = ((b >> 11) + 0.5) / 2.0 ** 53
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


@dataclass(frozen=True)
class SykInstance:
    """All-to-all degree-4 Majorana model with Gaussian couplings."""

    n_modes: int
    seed: int
    couplings: dict = field(repr=False)  # (a<b<c<d) -> float

    @property
    def normalization(self) -> float:
        return 1.0 / math.sqrt(math.comb(self.n_modes, 4))


def generate_syk(n_modes: int, seed: int) -> SykInstance:
    if n_modes < 4 or n_modes % 2:
        raise ValidationError("n_modes must be even and at least 4")
    couplings = {
        key: _coupling_normal(seed, key)
        for key in combinations(range(1, n_modes + 1), 4)
    }
    return SykInstance(n_modes, seed, couplings)


def syk_hamiltonian(inst: SykInstance) -> MajoranaPolynomial:
    poly = MajoranaPolynomial(inst.n_modes)
    norm = inst.normalization
    for key, g in inst.couplings.items():
        poly.add(key, norm * g)
    return poly


def syk_lambda_lcu(inst: SykInstance) -> float:
    """l1-norm of the monomial presentation: each 4-tuple is one term."""
    return inst.normalization * float(
        sum(abs(g) for g in inst.couplings.values())
    )


def syk_to_lcu(inst: SykInstance) -> LcuHamiltonian:
    return syk_hamiltonian(inst).to_lcu()


def ground_energy(inst: SykInstance, cap: int = DENSE_MODE_CAP) -> float:
    if inst.n_modes > cap:
        raise ValidationError(f"n_modes {inst.n_modes} exceeds dense cap {cap}")
    return syk_to_lcu(inst).min_eigenvalue(cap=cap // 2)


def j_matrix(inst: SykInstance) -> np.ndarray:
    """Pair-indexed coupling matrix with one symmetric placement per tuple.

    Rows and columns run over size-2 subsets in lexicographic order; the
    coupling of ``(a<b<c<d)`` sits at ``({a,b}, {c,d})`` and its transpose.
    """
    pairs = list(combinations(range(1, inst.n_modes + 1), 2))
    index = {p: i for i, p in enumerate(pairs)}
    mat = np.zeros((len(pairs), len(pairs)))
    norm = inst.normalization
    for (a, b, c, d), g in inst.couplings.items():
        i, j = index[(a, b)], index[(c, d)]
        mat[i, j] = mat[j, i] = norm * g
    return mat


def j_matrix_norm(inst: SykInstance) -> tuple[float, float]:
    """Spectral norm of the pair matrix and the dual-bound magnitude."""
    mat = j_matrix(inst)
    norm = float(np.linalg.norm(mat, 2))
    return norm, dual_norm_bound(mat)


# ---------------------------------------------------------------------------
# Scaling experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingConfig:
    solver_tol: float = DEFAULT_SOLVER_TOL
    rank_tol: float = DEFAULT_RANK_TOL
    max_iterations: int = 40000
    workers: int = 1


@dataclass(frozen=True)
class ScalingRow:
    n_modes: int
    seed: int
    lambda_lcu: float
    beta: float
    ground: float
    delta_sos: float
    delta_lcu: float
    lambda_sos: float
    lambda_df: float
    sqrt_delta_lambda: float
    j_norm_scaled: float
    residual: float
    converged: bool

    def as_dict(self) -> dict:
        return {
            "n_modes": self.n_modes,
            "seed": self.seed,
            "lambda_lcu": self.lambda_lcu,
            "beta": self.beta,
            "ground": self.ground,
            "delta_sos": self.delta_sos,
            "delta_lcu": self.delta_lcu,
            "lambda_sos": self.lambda_sos,
            "lambda_df": self.lambda_df,
            "sqrt_delta_lambda": self.sqrt_delta_lambda,
            "j_norm_scaled": self.j_norm_scaled,
            "residual": self.residual,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    intercept: float

    @property
    def confidence95(self) -> tuple[float, float]:
        return (self.slope - 1.96 * self.stderr, self.slope + 1.96 * self.stderr)


@dataclass(frozen=True)
class ScalingReport:
    rows: tuple
    excluded: int

    def converged_rows(self) -> list:
        return [r for r in self.rows if r.converged]

    def fit(self, column: str) -> SlopeFit:
        """Log-log slope of the per-N mean of a column against N.

        Averaging within each N before taking logs keeps the fit defined
        when individual seeds sit at zero slack (tight certificates).
        """
        rows = self.converged_rows()
        by_n: dict[int, list] = {}
        for r in rows:
            by_n.setdefault(r.n_modes, []).append(float(getattr(r, column)))
        if len(by_n) < 2:
            return SlopeFit(float("nan"), float("nan"), float("nan"))
        xs = np.log(sorted(by_n))
        ys = np.log([np.mean(by_n[n]) for n in sorted(by_n)])
        n = len(xs)
        xbar, ybar = xs.mean(), ys.mean()
        sxx = float(np.sum((xs - xbar) ** 2))
        slope = float(np.sum((xs - xbar) * (ys - ybar)) / sxx)
        intercept = float(ybar - slope * xbar)
        resid = ys - (intercept + slope * xs)
        stderr = math.sqrt(float(np.sum(resid ** 2)) / max(n - 2, 1) / sxx)
        return SlopeFit(slope, stderr, intercept)

    def slopes(self) -> dict:
        return {
            name: self.fit(name)
            for name in (
                "lambda_lcu", "beta", "delta_sos", "lambda_sos",
                "lambda_df", "sqrt_delta_lambda",
            )
        }


def certify_instance(
    inst: SykInstance,
    solver_tol: float = DEFAULT_SOLVER_TOL,
    rank_tol: float = DEFAULT_RANK_TOL,
    max_iterations: int = 40000,
):
    """Run SOS solve + extraction + double factorization for one instance."""
    poly = syk_hamiltonian(inst)
    basis = SosBasis.majorana_degree2(inst.n_modes)
    problem = build_sos_sdp(poly, basis)
    cert = solve_sdp(problem, tol=solver_tol, max_iterations=max_iterations)
    gens = extract_generators(cert, rank_tol=rank_tol)
    dfgens = doublefact.double_factorize(gens)
    return cert, gens, dfgens


def _scaling_cell(args) -> ScalingRow:
    n, seed, cfg = args
    inst = generate_syk(n, seed)
    cert, gens, dfgens = certify_instance(
        inst, cfg.solver_tol, cfg.rank_tol, cfg.max_iterations
    )
    lam_lcu = syk_lambda_lcu(inst)
    lam_sos = specamp.lambda_sos_value(gens)
    lam_df = doublefact.df_lambda(dfgens)
    e0 = ground_energy(inst)
    delta_sos = e0 + cert.beta
    _, j_scaled = j_matrix_norm(inst)
    return ScalingRow(
        n_modes=n,
        seed=seed,
        lambda_lcu=lam_lcu,
        beta=cert.beta,
        ground=e0,
        delta_sos=delta_sos,
        delta_lcu=e0 + lam_lcu,
        lambda_sos=lam_sos,
        lambda_df=lam_df,
        sqrt_delta_lambda=math.sqrt(max(delta_sos, 0.0) * lam_df),
        j_norm_scaled=j_scaled / math.comb(n, 2) * n,
        residual=cert.residual,
        converged=cert.converged,
    )


def run_scaling_experiment(
    n_list, seeds_per_n: int, cfg: ScalingConfig | None = None
) -> ScalingReport:
    """Full pipeline per (N, seed); non-converged cells are excluded."""
    cfg = cfg or ScalingConfig()
    jobs = [(n, seed, cfg) for n in n_list for seed in range(seeds_per_n)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_scaling_cell, jobs))
    else:
        rows = [_scaling_cell(job) for job in jobs]
    rows.sort(key=lambda r: (r.n_modes, r.seed))
    excluded = sum(1 for r in rows if not r.converged)
    return ScalingReport(rows=tuple(rows), excluded=excluded)
