"""Spectral-amplification operators and their normalization accounting.

An amplified operator is a stack of rows ``|j> (x) A_j`` with per-row
normalizations ``a_j >= ||A_j||``; the stack squares to the shifted
Hamiltonian and carries the block-encoding normalization
``lambda = sum a_j^2``.  Everything here is realized densely at desk scale;
the qubitization walk is modeled through the standard two-block dilation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .operators import (
    DEFAULT_DENSE_QUBIT_CAP,
    ValidationError,
    majorana_dense,
    word_dense,
)
from .sosopt import SosGenerators


@dataclass(frozen=True)
class SaRow:
    """One row ``A_j`` as a weighted monomial list with normalization a_j."""

    normalization: float
    terms: tuple  # ((coeff, key), ...) keys per `kind`
    kind: str  # "pauli" | "majorana"
    system_size: int

    def dense(self, cap: int = DEFAULT_DENSE_QUBIT_CAP) -> np.ndarray:
        dim = (
            1 << self.system_size
            if self.kind == "pauli"
            else 1 << (self.system_size // 2)
        )
        acc = np.zeros((dim, dim), dtype=complex)
        for coeff, key in self.terms:
            if self.kind == "pauli":
                acc += coeff * word_dense(key, self.system_size)
            elif key:
                acc += coeff * majorana_dense(key, self.system_size, cap=cap)
            else:
                acc += coeff * np.eye(dim)
        return acc

    def l1_norm(self) -> float:
        return float(sum(abs(c) for c, _ in self.terms))


@dataclass(frozen=True)
class SaOperator:
    """Rows of a square root of ``H + shift * 1`` with lambda accounting."""

    rows: tuple
    shift: float

    def __post_init__(self):
        for row in self.rows:
            if not row.terms or row.l1_norm() == 0.0:
                raise ValidationError("zero generator row")

    @property
    def lambda_(self) -> float:
        return float(sum(row.normalization ** 2 for row in self.rows))

    def dense_rows(self, cap: int = DEFAULT_DENSE_QUBIT_CAP) -> list:
        return [row.dense(cap=cap) for row in self.rows]

    def square_dense(self, cap: int = DEFAULT_DENSE_QUBIT_CAP) -> np.ndarray:
        mats = self.dense_rows(cap=cap)
        return sum(m.conj().T @ m for m in mats)


def sa_dense_rows(sa: SaOperator, cap: int = DEFAULT_DENSE_QUBIT_CAP) -> list:
    return sa.dense_rows(cap=cap)


@dataclass(frozen=True)
class SossaOperator:
    """Amplified operator built from optimized SOS generators."""

    generators: SosGenerators
    sa: SaOperator
    lambda_sos: float
    beta: float


def build_sa_from_generators(
    gens: SosGenerators, beta: float, norms: str = "l1",
    cap: int = DEFAULT_DENSE_QUBIT_CAP,
):
    """Stack generator rows into an amplified operator.

    With the default l1 normalization each row gets ``a_j = ||b_j||_1``,
    which reproduces the LCU-of-rows accounting
    ``lambda = sum_j ||b_j||_1^2``.  ``norms='spectral'`` instead uses the
    dense operator norm of each row (tighter, but not compilable termwise).
    """
    basis = gens.basis
    rows = []
    for j in range(gens.rank):
        terms = []
        for l in range(basis.size):
            v = complex(gens.vectors[j, l])
            if v == 0.0:
                continue
            key, phase = basis.elements[l]
            terms.append((v * phase, key))
        if not terms:
            raise ValidationError("zero generator row")
        row_kind = basis.kind
        row = SaRow(
            normalization=0.0,
            terms=tuple(terms),
            kind=row_kind,
            system_size=basis.system_size,
        )
        if norms == "l1":
            a = row.l1_norm()
        elif norms == "spectral":
            a = float(np.linalg.norm(row.dense(cap=cap), 2))
        else:
            raise ValidationError(f"unknown normalization rule {norms!r}")
        rows.append(
            SaRow(a, row.terms, row.kind, row.system_size)
        )
    sa = SaOperator(rows=tuple(rows), shift=float(beta))
    lambda_sos = float(sum(r.l1_norm() ** 2 for r in rows))
    return SossaOperator(gens, sa, lambda_sos, float(beta))


def lambda_sos_value(gens: SosGenerators) -> float:
    """``sum_j (sum_l |b_jl|)^2`` over the generator rows."""
    return float(np.sum(np.sum(np.abs(gens.vectors), axis=1) ** 2))


def l2_mass(gens: SosGenerators) -> float:
    """``sum_j ||b_j||_2^2``; equals the normalized trace of ``H + beta``."""
    return float(np.sum(np.abs(gens.vectors) ** 2))


# ---------------------------------------------------------------------------
# Spectral models
# ---------------------------------------------------------------------------

def shifted_square_spectrum(sa: SaOperator, cap: int = DEFAULT_DENSE_QUBIT_CAP) -> np.ndarray:
    """Eigenvalues of ``2 H_sa^dag H_sa / lambda - 1`` (all within [-1, 1])."""
    lam = sa.lambda_
    square = sa.square_dense(cap=cap)
    vals = np.linalg.eigvalsh(2.0 * square / lam - np.eye(square.shape[0]))
    return vals


def doubled_hermitian_spectrum(sa: SaOperator, cap: int = DEFAULT_DENSE_QUBIT_CAP) -> np.ndarray:
    """Spectrum of ``[[0, H_sa^dag], [H_sa, 0]]`` via singular values.

    Contains ``+/- sqrt(E_j)`` for each eigenvalue ``E_j`` of the squared
    operator, padded with exact zeros for the rectangular kernel.
    """
    mats = sa.dense_rows(cap=cap)
    if not mats:
        return np.zeros(0)
    stacked = np.vstack(mats)
    sigma = np.linalg.svd(stacked, compute_uv=False)
    n_rows, n_cols = stacked.shape
    zeros = np.zeros(max(n_rows + n_cols - 2 * len(sigma), 0))
    return np.sort(np.concatenate([-sigma, sigma, zeros]))


@dataclass(frozen=True)
class WalkModel:
    """Qubitization-walk spectrum: phases ``+/- arccos(E_j / lambda)``."""

    eigenvalues: tuple
    lambda_: float
    phases: tuple

    def __post_init__(self):
        if any(abs(e) > self.lambda_ * (1 + 1e-12) for e in self.eigenvalues):
            raise ValidationError("eigenvalue outside [-lambda, lambda]")


def walk_phases(spectrum: Sequence[float], lambda_: float) -> WalkModel:
    spectrum = [float(e) for e in spectrum]
    if any(abs(e) > lambda_ * (1 + 1e-12) for e in spectrum):
        raise ValidationError("eigenvalue outside [-lambda, lambda]")
    phases = []
    for e in spectrum:
        theta = math.acos(max(-1.0, min(1.0, e / lambda_)))
        phases.extend((theta, -theta))
    return WalkModel(tuple(spectrum), float(lambda_), tuple(phases))


def qubitization_walk_dense(h: np.ndarray, lambda_: float) -> np.ndarray:
    """Explicit walk ``Ref . Be[H/lambda]`` on the two-block dilation."""
    h = np.asarray(h, dtype=complex)
    dim = h.shape[0]
    hn = h / lambda_
    vals, vecs = np.linalg.eigh(hn)
    if np.max(np.abs(vals)) > 1.0 + 1e-12:
        raise ValidationError("lambda must dominate the spectral norm")
    root = (vecs * np.sqrt(np.clip(1.0 - vals ** 2, 0.0, None))) @ vecs.conj().T
    be = np.block([[hn, root], [root, -hn]])
    ref = np.block(
        [[np.eye(dim), np.zeros((dim, dim))], [np.zeros((dim, dim)), -np.eye(dim)]]
    )
    return ref @ be


def walk_eigenphases_dense(h: np.ndarray, lambda_: float) -> np.ndarray:
    """Sorted eigenphases of the explicit dilation walk."""
    w = qubitization_walk_dense(h, lambda_)
    return np.sort(np.angle(np.linalg.eigvals(w)))


# ---------------------------------------------------------------------------
# PARITY-of-OR optimality gadget
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GadgetSpec:
    """K independent search blocks of size N with one marked item each."""

    K: int
    N: int
    marked: tuple

    def __post_init__(self):
        if self.K < 1 or self.N < 2 or self.N & (self.N - 1):
            raise ValidationError("need K >= 1 and N a power of two")
        if len(self.marked) != self.K:
            raise ValidationError("need one marked element per block")
        if any(x < 0 or x >= self.N for x in self.marked):
            raise ValidationError("marked element out of range")

    @property
    def delta(self) -> float:
        return 2.0 * self.K / self.N

    @property
    def first_half_count(self) -> int:
        return sum(1 for x in self.marked if x < self.N // 2)

    @property
    def parity(self) -> int:
        return self.first_half_count % 2


@dataclass(frozen=True)
class GadgetBuild:
    hamiltonian: np.ndarray
    sa_rows: tuple
    eigenvalue: float
    parity: int
    uniform_state: np.ndarray


def build_parity_or_gadget(
    spec: GadgetSpec, cap: int = DEFAULT_DENSE_QUBIT_CAP
) -> GadgetBuild:
    """Dense ``H = sum_k (1 - |x_k><x_k| - |s><s|)^2`` over K blocks.

    ``|s>`` is uniform over the first N/2 items; ``|s>^K`` is an eigenvector
    with eigenvalue ``(2/N) * #{k : x_k < N/2}``.  The returned square-root
    rows square to the per-block terms.
    """
    if spec.K * int(math.log2(spec.N)) > cap:
        raise ValidationError("gadget dimension exceeds dense cap")
    N, K = spec.N, spec.K
    s = np.zeros(N)
    s[: N // 2] = math.sqrt(2.0 / N)
    dim = N ** K
    h = np.zeros((dim, dim))
    rows = []
    for k, x in enumerate(spec.marked):
        m = np.eye(N)
        m[x, x] -= 1.0
        m -= np.outer(s, s)
        block = np.eye(N ** k)
        tail = np.eye(N ** (K - k - 1))
        lifted = np.kron(np.kron(block, m), tail)
        rows.append(lifted)
        h += lifted @ lifted
    s_k = s.copy()
    for _ in range(K - 1):
        s_k = np.kron(s_k, s)
    eigenvalue = (2.0 / N) * spec.first_half_count
    return GadgetBuild(
        hamiltonian=h,
        sa_rows=tuple(rows),
        eigenvalue=eigenvalue,
        parity=spec.parity,
        uniform_state=s_k,
    )


# ---------------------------------------------------------------------------
# Query-cost accounting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QueryCostTable:
    """Leading-order query counts for the three Hamiltonian presentations."""

    lcu_energy: float
    termwise_sa_energy: float
    sossa_energy: float
    time_evolution_termwise: float
    time_evolution_sossa: float
    sa_over_lcu: float
    sossa_over_lcu: float


def query_cost_table(
    lambda_lcu: float,
    lambda_sa: float,
    lambda_sos: float,
    delta_lcu: float,
    delta_sos: float,
    epsilon: float,
    evolution_time: float = 1.0,
) -> QueryCostTable:
    """Tabulate ``lambda/eps`` against ``sqrt(delta*lambda)/eps`` costs.

    The time-evolution numbers use
    ``sqrt(delta*lambda)*t + sqrt(lambda/delta)*log(1/eps)`` and are
    reported only; no evolution is simulated.
    """
    for name, v in (
        ("lambda_lcu", lambda_lcu), ("lambda_sa", lambda_sa),
        ("lambda_sos", lambda_sos), ("delta_lcu", delta_lcu),
        ("delta_sos", delta_sos), ("epsilon", epsilon),
    ):
        if v <= 0:
            raise ValidationError(f"{name} must be positive")
    lcu = lambda_lcu / epsilon
    sa = math.sqrt(delta_lcu * lambda_sa) / epsilon
    sossa = math.sqrt(delta_sos * lambda_sos) / epsilon
    log_term = math.log(1.0 / epsilon) if epsilon < 1 else 0.0
    te_sa = (
        math.sqrt(delta_lcu * lambda_sa) * evolution_time
        + math.sqrt(lambda_sa / delta_lcu) * log_term
    )
    te_sossa = (
        math.sqrt(delta_sos * lambda_sos) * evolution_time
        + math.sqrt(lambda_sos / delta_sos) * log_term
    )
    return QueryCostTable(
        lcu_energy=lcu,
        termwise_sa_energy=sa,
        sossa_energy=sossa,
        time_evolution_termwise=te_sa,
        time_evolution_sossa=te_sossa,
        sa_over_lcu=sa / lcu,
        sossa_over_lcu=sossa / lcu,
    )
