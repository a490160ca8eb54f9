"""Sum-of-squares lower-bound SDP: build, solve, extract, verify.

The program is ``min Tr(G)`` subject to ``(X^dag)^T G X = H + beta * 1`` and
``G >= 0``, with ``beta`` eliminated through the identity-monomial equation
(``beta = Tr(G) - h_identity``).  Because the product of two basis monomials
is a phase times a single canonical monomial, the equality constraints have
pairwise disjoint supports on the Gram matrix; projection onto the affine
set is therefore exact in one pass, which the splitting solver exploits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .operators import (
    DEFAULT_DENSE_QUBIT_CAP,
    LcuHamiltonian,
    MajoranaPolynomial,
    ValidationError,
    letters_from_word,
    majorana_dagger_sign,
    majorana_dense,
    majorana_mul,
    pauli_mul,
    pauli_weight,
    word_dense,
    word_from_letters,
)

DEFAULT_SOLVER_TOL = 1e-7
DEFAULT_RANK_TOL = 1e-8


class NonConvergenceError(RuntimeError):
    """Raised by callers that treat a non-converged solve as fatal."""


# ---------------------------------------------------------------------------
# Basis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SosBasis:
    """Ordered operator monomials spanning the generator ansatz.

    ``elements`` are ``(key, phase)`` pairs; the operator is
    ``phase * canonical(key)``.  Keys are ``(x, z)`` masks for Pauli words and
    strictly increasing index tuples for Majorana monomials.  The first
    element is always the identity.
    """

    kind: str  # "pauli" | "majorana"
    system_size: int  # qubits or modes
    elements: tuple
    degree: int

    def __post_init__(self):
        if self.kind not in ("pauli", "majorana"):
            raise ValidationError(f"unknown basis kind {self.kind!r}")
        if not self.elements:
            raise ValidationError("empty basis")
        identity = (0, 0) if self.kind == "pauli" else ()
        if self.elements[0][0] != identity:
            raise ValidationError("first basis monomial must be the identity")
        keys = [k for k, _ in self.elements]
        if len(set(keys)) != len(keys):
            raise ValidationError("duplicate monomials in basis")

    @property
    def size(self) -> int:
        return len(self.elements)

    @classmethod
    def from_pauli_words(cls, n_qubits: int, letters: Sequence[str]) -> "SosBasis":
        elements = tuple((word_from_letters(s), 1.0 + 0j) for s in letters)
        degree = max(pauli_weight(k) for k, _ in elements)
        return cls("pauli", n_qubits, elements, degree)

    @classmethod
    def pauli_up_to_degree(cls, n_qubits: int, degree: int) -> "SosBasis":
        """All Pauli words of weight <= degree, identity first."""
        words = [(0, 0)]
        for mask in range(1, 1 << n_qubits):
            if mask.bit_count() > degree:
                continue
            positions = [p for p in range(n_qubits) if (mask >> p) & 1]
            for assign in range(3 ** len(positions)):
                x = z = 0
                a = assign
                for p in positions:
                    letter = a % 3
                    a //= 3
                    if letter in (0, 1):
                        x |= 1 << p
                    if letter in (1, 2):
                        z |= 1 << p
                words.append((x, z))
        elements = tuple((w, 1.0 + 0j) for w in words)
        return cls("pauli", n_qubits, elements, degree)

    @classmethod
    def majorana_degree2(cls, n_modes: int) -> "SosBasis":
        """The basis {1, gamma_a, i gamma_a gamma_b} with a < b."""
        elements: list = [((), 1.0 + 0j)]
        elements += [((a,), 1.0 + 0j) for a in range(1, n_modes + 1)]
        elements += [
            ((a, b), 1j)
            for a in range(1, n_modes + 1)
            for b in range(a + 1, n_modes + 1)
        ]
        return cls("majorana", n_modes, elements, 2)

    def element_dense(self, index: int, cap: int = DEFAULT_DENSE_QUBIT_CAP) -> np.ndarray:
        key, phase = self.elements[index]
        if self.kind == "pauli":
            return phase * word_dense(key, self.system_size)
        if not key:
            dim = 1 << (self.system_size // 2)
            return phase * np.eye(dim, dtype=complex)
        return phase * majorana_dense(key, self.system_size, cap=cap)

    def element_label(self, index: int) -> str:
        key, phase = self.elements[index]
        pre = {1.0: "", -1.0: "-"}.get(complex(phase).real if phase.imag == 0 else None)
        if pre is None:
            pre = "i*" if phase == 1j else f"({phase})*"
        if self.kind == "pauli":
            return pre + letters_from_word(key, self.system_size)
        if not key:
            return pre + "1"
        return pre + "g" + ".".join(str(i) for i in key)

    def product_dagger(self, iu: int, iv: int) -> tuple[complex, tuple]:
        """Coefficient and canonical key of ``element[iu]^dag . element[iv]``."""
        ku, pu = self.elements[iu]
        kv, pv = self.elements[iv]
        if self.kind == "pauli":
            phase, key = pauli_mul(ku, kv)  # words are Hermitian
            return np.conj(pu) * pv * phase, key
        ds = majorana_dagger_sign(len(ku))
        sign, key = majorana_mul(ku, kv)
        return np.conj(pu) * pv * ds * sign, key


# ---------------------------------------------------------------------------
# Problem construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SdpConstraint:
    """One scalar equality ``sum(coeffs * G[rows, cols]) = target``.

    The representer is symmetric (rows/cols hold both triangles) and
    orthogonal to every other constraint's representer.
    """

    label: str
    rows: np.ndarray
    cols: np.ndarray
    coeffs: np.ndarray
    target: float

    @property
    def norm_sq(self) -> float:
        return float(np.dot(self.coeffs, self.coeffs))


@dataclass(frozen=True)
class SdpProblem:
    """Trace-minimization SDP over the Gram matrix of an SOS basis."""

    basis: SosBasis
    gram_dim: int
    constraints: tuple
    h_identity: float = 0.0

    def constraint_residual(self, gram: np.ndarray) -> float:
        worst = 0.0
        for c in self.constraints:
            val = float(np.real(np.sum(c.coeffs * gram[c.rows, c.cols])))
            worst = max(worst, abs(val - c.target))
        return worst


def _hamiltonian_coefficients(h, basis: SosBasis) -> dict:
    if basis.kind == "pauli":
        if not isinstance(h, LcuHamiltonian):
            raise ValidationError("Pauli basis requires an LcuHamiltonian")
        if h.qubit_count != basis.system_size:
            raise ValidationError("qubit count mismatch between H and basis")
        return dict(h.terms)
    if not isinstance(h, MajoranaPolynomial):
        raise ValidationError("Majorana basis requires a MajoranaPolynomial")
    if h.n_modes > basis.system_size:
        raise ValidationError("mode count mismatch between H and basis")
    return dict(h.terms)


def build_sos_sdp(h, basis: SosBasis) -> SdpProblem:
    """Expand ``basis^dag . basis`` and equate coefficients against ``H``.

    Every ordered pair of basis monomials multiplies to a phase times a
    single canonical monomial, so the equality constraints partition the
    Gram entries.  The identity monomial is not constrained; it defines the
    shift via ``beta = Tr(G) - h_identity``.
    """
    h_coeffs = _hamiltonian_coefficients(h, basis)
    L = basis.size
    identity = (0, 0) if basis.kind == "pauli" else ()

    groups: dict[tuple, list] = {}
    for iu in range(L):
        for iv in range(L):
            coeff, key = basis.product_dagger(iu, iv)
            if key == identity:
                if iu != iv or abs(coeff - 1.0) > 1e-12:
                    raise AssertionError("identity reached off the diagonal")
                continue
            groups.setdefault(key, []).append((iu, iv, coeff))

    missing = [k for k in h_coeffs if k != identity and k not in groups]
    if missing:
        raise ValidationError(
            f"H contains monomials outside basis products: {missing[:3]}"
        )

    constraints = []
    for key in sorted(groups):
        entries = groups[key]
        rep: dict[tuple[int, int], complex] = {}
        for iu, iv, c in entries:
            rep[(iu, iv)] = rep.get((iu, iv), 0.0) + c / 2.0
            rep[(iv, iu)] = rep.get((iv, iu), 0.0) + c / 2.0
        target = complex(h_coeffs.get(key, 0.0))
        label = str(key)
        for part, comp, tgt in (
            ("re", np.real, target.real),
            ("im", np.imag, target.imag),
        ):
            rows, cols, coeffs = [], [], []
            for (iu, iv), val in rep.items():
                v = float(comp(val))
                if v != 0.0:
                    rows.append(iu)
                    cols.append(iv)
                    coeffs.append(v)
            if not coeffs:
                if abs(tgt) > 1e-13:
                    raise ValidationError(
                        f"monomial {label} ({part}) unreachable with a "
                        "symmetric Gram matrix; use a Hermitian-closed basis"
                    )
                continue
            constraints.append(
                SdpConstraint(
                    label=f"{label}:{part}",
                    rows=np.asarray(rows, dtype=np.intp),
                    cols=np.asarray(cols, dtype=np.intp),
                    coeffs=np.asarray(coeffs, dtype=float),
                    target=float(tgt),
                )
            )

    h_id = complex(h_coeffs.get(identity, 0.0))
    return SdpProblem(basis, L, tuple(constraints), h_identity=h_id.real)


def build_majorana2_sdp(K: np.ndarray, J: dict, n_modes: int) -> SdpProblem:
    """Degree-2 Majorana SOS program for a quadratic-plus-quartic Hamiltonian.

    The Hamiltonian is ``H = 2i sum_{a<b} K[a,b] g_a g_b
    - sum_{a<b<c<d} J[(a,b,c,d)] g_a g_b g_c g_d`` over the basis
    ``{1, g_a, i g_a g_b}``; the constraint families for degree-1 through
    degree-4 monomials come out of the generic expansion.
    """
    K = np.asarray(K, dtype=float)
    if K.shape != (n_modes, n_modes):
        raise ValidationError("K must be n_modes x n_modes")
    if np.max(np.abs(K + K.T)) > 1e-12:
        raise ValidationError("K must be antisymmetric")
    poly = MajoranaPolynomial(n_modes)
    for a in range(1, n_modes + 1):
        for b in range(a + 1, n_modes + 1):
            if K[a - 1, b - 1] != 0.0:
                poly.add((a, b), 2j * K[a - 1, b - 1])
    for key, val in J.items():
        t = tuple(key)
        if len(t) != 4 or any(x >= y for x, y in zip(t, t[1:])):
            raise ValidationError("J keys must be strictly increasing 4-tuples")
        if val != 0.0:
            poly.add(t, -float(val))
    return build_sos_sdp(poly, SosBasis.majorana_degree2(n_modes))


# ---------------------------------------------------------------------------
# Solver
# ---------------------------------------------------------------------------

@dataclass
class _FlatConstraints:
    pos: np.ndarray      # flat indices into the Gram matrix
    coeffs: np.ndarray
    cid: np.ndarray      # constraint id per entry
    targets: np.ndarray
    norm_sq: np.ndarray
    count: int

    @classmethod
    def from_problem(cls, problem: SdpProblem) -> "_FlatConstraints":
        L = problem.gram_dim
        pos, coeffs, cid = [], [], []
        targets, norms = [], []
        for k, c in enumerate(problem.constraints):
            pos.append(c.rows * L + c.cols)
            coeffs.append(c.coeffs)
            cid.append(np.full(len(c.coeffs), k, dtype=np.intp))
            targets.append(c.target)
            norms.append(c.norm_sq)
        if not targets:
            return cls(
                np.zeros(0, np.intp), np.zeros(0), np.zeros(0, np.intp),
                np.zeros(0), np.ones(0), 0,
            )
        return cls(
            np.concatenate(pos), np.concatenate(coeffs), np.concatenate(cid),
            np.asarray(targets), np.asarray(norms), len(targets),
        )

    def values(self, mat: np.ndarray) -> np.ndarray:
        if self.count == 0:
            return np.zeros(0)
        return np.bincount(
            self.cid, weights=self.coeffs * mat.ravel()[self.pos],
            minlength=self.count,
        )

    def residual(self, mat: np.ndarray) -> float:
        if self.count == 0:
            return 0.0
        return float(np.max(np.abs(self.values(mat) - self.targets)))

    def project(self, mat: np.ndarray) -> np.ndarray:
        """Exact projection onto the affine set (orthogonal representers)."""
        if self.count == 0:
            return mat
        out = mat.copy()
        delta = (self.targets - self.values(mat)) / self.norm_sq
        out.ravel()[self.pos] += self.coeffs * delta[self.cid]
        return out


def _project_psd(mat: np.ndarray) -> np.ndarray:
    sym = (mat + mat.T) / 2.0
    vals, vecs = np.linalg.eigh(sym)
    if vals[0] >= 0.0:
        return sym
    clipped = np.clip(vals, 0.0, None)
    return (vecs * clipped) @ vecs.T


@dataclass(frozen=True)
class SosCertificate:
    """PSD Gram matrix certifying ``H + beta >= 0`` over the basis.

    ``beta`` is exactly the Gram trace (minus any identity component of H);
    ``beta_certified`` additionally absorbs the l1 constraint residual,
    which makes ``-beta_certified <= E_0`` rigorous rather than
    tolerance-level: the reconstruction is PSD exactly, and the leftover
    operator is bounded in norm by the residual sum over unit-norm
    monomials.
    """

    basis: SosBasis
    gram: np.ndarray
    beta: float
    residual: float
    solver_tol: float
    converged: bool
    iterations: int
    gap_estimate: float
    residual_l1: float = 0.0

    def __post_init__(self):
        min_eig = float(np.linalg.eigvalsh((self.gram + self.gram.T) / 2.0)[0])
        if min_eig < -10.0 * self.solver_tol:
            raise ValidationError(
                f"Gram matrix not PSD to tolerance (min eig {min_eig:.3e})"
            )

    @property
    def beta_certified(self) -> float:
        return self.beta + self.residual_l1


def solve_sdp(
    problem: SdpProblem,
    tol: float = DEFAULT_SOLVER_TOL,
    max_iterations: int = 40000,
    polish_iterations: int = 4000,
    over_relaxation: float = 1.6,
    method: str = "admm",
) -> SosCertificate:
    """Minimize ``Tr(G)`` over the PSD/affine intersection.

    ``method='admm'`` runs over-relaxed splitting iterations (exact affine
    projection, eigenvalue clipping for the cone) followed by alternating
    projections that polish the PSD iterate to the requested constraint
    residual.  ``method='bisect'`` brackets the optimal trace with pure
    feasibility solves; it is slower and serves as an independent
    cross-check.  The duality-gap estimate is reported, not enforced.
    """
    flat = _FlatConstraints.from_problem(problem)
    L = problem.gram_dim
    if method == "bisect":
        gram, iters = _solve_by_bisection(flat, L, tol)
        dual_gap = 0.0
    elif method == "admm":
        gram, iters, dual_gap = _solve_by_admm(
            flat, L, tol, max_iterations, over_relaxation
        )
    else:
        raise ValidationError(f"unknown method {method!r}")

    # Alternating-projection polish: land on the PSD side with a small
    # constraint residual without moving the trace appreciably.
    residual = flat.residual(gram)
    polish = 0
    while residual > tol and polish < polish_iterations:
        gram = _project_psd(flat.project(gram))
        residual = flat.residual(gram)
        polish += 1

    beta = float(np.trace(gram)) - problem.h_identity
    residual_l1 = (
        float(np.sum(np.abs(flat.values(gram) - flat.targets)))
        if flat.count
        else 0.0
    )
    return SosCertificate(
        basis=problem.basis,
        gram=gram,
        beta=beta,
        residual=residual,
        solver_tol=tol,
        converged=bool(residual <= tol),
        iterations=iters + polish,
        gap_estimate=dual_gap,
        residual_l1=residual_l1,
    )


def _solve_by_admm(flat, L, tol, max_iterations, alpha):
    rho = 1.0
    eye = np.eye(L)
    z = np.zeros((L, L))
    u = np.zeros((L, L))
    inner_tol = max(tol / 10.0, 1e-12)
    it = 0
    for it in range(1, max_iterations + 1):
        x = flat.project(z - u - eye / rho)
        x_hat = alpha * x + (1.0 - alpha) * z
        z_new = _project_psd(x_hat + u)
        u = u + x_hat - z_new
        primal = float(np.max(np.abs(x - z_new)))
        dual = rho * float(np.max(np.abs(z_new - z)))
        z = z_new
        if primal <= inner_tol and dual <= inner_tol:
            break
        if it % 100 == 0:
            if primal > 10.0 * dual:
                rho *= 2.0
                u /= 2.0
            elif dual > 10.0 * primal:
                rho /= 2.0
                u *= 2.0
    # Dual estimate: S = rho * u approximates I - sum_k y_k A_k at optimality,
    # so b^T y recovers from the per-constraint components of rho * u.
    if flat.count:
        s_flat = rho * u.ravel()[flat.pos]
        y = np.bincount(
            flat.cid, weights=flat.coeffs * s_flat, minlength=flat.count
        ) / flat.norm_sq
        dual_obj = float(np.dot(flat.targets, y))
    else:
        dual_obj = 0.0
    gap = abs(float(np.trace(z)) - dual_obj) / max(1.0, abs(float(np.trace(z))))
    return z, it, gap


def _solve_by_bisection(flat, L, tol, max_rounds=60, feas_iterations=8000):
    """Bracket min Tr(G) by alternating-projection feasibility probes."""

    def feasible_point(trace_target):
        mat = np.zeros((L, L))
        extra_pos = np.concatenate([flat.pos, (L * np.arange(L) + np.arange(L))])
        extra_coef = np.concatenate([flat.coeffs, np.ones(L)])
        extra_cid = np.concatenate(
            [flat.cid, np.full(L, flat.count, dtype=np.intp)]
        )
        targets = np.concatenate([flat.targets, [trace_target]])
        norms = np.concatenate([flat.norm_sq, [float(L)]])
        aug = _FlatConstraints(
            extra_pos, extra_coef, extra_cid, targets, norms, flat.count + 1
        )
        for _ in range(feas_iterations):
            mat = _project_psd(aug.project(mat))
            if aug.residual(mat) <= tol:
                return mat
        return None

    lo, hi = 0.0, 1.0
    sol = feasible_point(hi)
    while sol is None:
        hi *= 4.0
        if hi > 1e12:
            raise NonConvergenceError("bisection failed to find a feasible trace")
        sol = feasible_point(hi)
    best = sol
    for _ in range(max_rounds):
        if hi - lo <= max(tol, 1e-9 * hi):
            break
        mid = (lo + hi) / 2.0
        sol = feasible_point(mid)
        if sol is None:
            lo = mid
        else:
            best, hi = sol, mid
    return best, max_rounds


# ---------------------------------------------------------------------------
# Generator extraction and verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SosGenerators:
    """Rows of coefficients over the basis reconstructing the Gram matrix."""

    basis: SosBasis
    vectors: np.ndarray      # (R, L)
    eigenvalues: np.ndarray  # (R,)

    @property
    def rank(self) -> int:
        return self.vectors.shape[0]

    def generator_dense(self, j: int, cap: int = DEFAULT_DENSE_QUBIT_CAP) -> np.ndarray:
        mats = [
            self.vectors[j, l] * self.basis.element_dense(l, cap=cap)
            for l in range(self.basis.size)
            if self.vectors[j, l] != 0.0
        ]
        return sum(mats) if mats else 0.0 * self.basis.element_dense(0, cap=cap)

    def reconstruction_dense(self, cap: int = DEFAULT_DENSE_QUBIT_CAP) -> np.ndarray:
        elements = [
            self.basis.element_dense(l, cap=cap) for l in range(self.basis.size)
        ]
        dim = elements[0].shape[0]
        acc = np.zeros((dim, dim), dtype=complex)
        for j in range(self.rank):
            b = np.zeros((dim, dim), dtype=complex)
            for l in range(self.basis.size):
                v = self.vectors[j, l]
                if v != 0.0:
                    b += v * elements[l]
            acc += b.conj().T @ b
        return acc


def extract_generators(
    cert: SosCertificate, rank_tol: float = DEFAULT_RANK_TOL
) -> SosGenerators:
    """Eigendecompose the Gram matrix and keep the significant directions."""
    gram = (cert.gram + cert.gram.T) / 2.0
    vals, vecs = np.linalg.eigh(gram)
    if vals[0] < -10.0 * cert.solver_tol:
        raise ValidationError("Gram matrix has a significant negative eigenvalue")
    cutoff = rank_tol * max(float(vals[-1]), 0.0)
    keep = [i for i in range(len(vals)) if vals[i] > cutoff]
    keep.reverse()  # largest first
    vectors = np.array([math.sqrt(vals[i]) * vecs[:, i] for i in keep])
    if vectors.size == 0:
        vectors = np.zeros((0, cert.basis.size))
    eigenvalues = np.array([vals[i] for i in keep])
    return SosGenerators(cert.basis, vectors, eigenvalues)


@dataclass(frozen=True)
class CertificateCheck:
    residual_rel_fro: float
    ground_energy: float
    slack: float
    valid: bool


def verify_certificate(
    h, gens: SosGenerators, beta: float,
    cap: int = DEFAULT_DENSE_QUBIT_CAP, slack_tol: float = 1e-6,
) -> CertificateCheck:
    """Dense check of ``H + beta ~ sum B_j^dag B_j`` and the energy slack."""
    if isinstance(h, MajoranaPolynomial):
        dense_h = h.to_dense(cap=cap).entries
    elif isinstance(h, LcuHamiltonian):
        dense_h = h.to_dense(cap=cap).entries
    else:
        dense_h = np.asarray(h, dtype=complex)
    dim = dense_h.shape[0]
    shifted = dense_h + beta * np.eye(dim)
    recon = gens.reconstruction_dense(cap=cap)
    denom = max(float(np.linalg.norm(shifted)), 1e-30)
    residual = float(np.linalg.norm(shifted - recon)) / denom
    e0 = float(np.linalg.eigvalsh(dense_h)[0])
    slack = e0 + beta
    return CertificateCheck(
        residual_rel_fro=residual,
        ground_energy=e0,
        slack=slack,
        valid=bool(slack >= -slack_tol * max(1.0, abs(beta))),
    )


def dual_norm_bound(J: np.ndarray) -> float:
    """Magnitude of the pseudoexpectation bound: ``dim(J) * ||J||``."""
    J = np.asarray(J, dtype=float)
    if J.ndim != 2 or J.shape[0] != J.shape[1]:
        raise ValidationError("J must be square")
    if J.shape[0] == 0:
        return 0.0
    return float(J.shape[0] * np.linalg.norm(J, 2))
