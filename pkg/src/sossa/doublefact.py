"""Double factorization of degree-2 Majorana SOS generators.

A real antisymmetric coefficient matrix rotates into 2x2 canonical blocks
under an orthogonal transformation; rewriting each generator this way
shrinks the l1 accounting from entrywise sums to sums over block values.
The canonical form is computed from the eigendecomposition of ``-g @ g``,
pairing each eigenvector ``u`` with ``g u / b`` and fixing the block
orientation so every block value is nonnegative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .operators import DEFAULT_DENSE_QUBIT_CAP, ValidationError, majorana_dense
from .sosopt import SosGenerators

_ANTISYM_TOL = 1e-12


@dataclass(frozen=True)
class AntisymCanonicalForm:
    """``g = O^T . blockdiag([[0, b_a], [-b_a, 0]]) . O`` with O orthogonal."""

    orthogonal: np.ndarray
    block_values: np.ndarray  # nonnegative, descending
    residual: float
    dim: int

    def canonical_matrix(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim))
        for a, b in enumerate(self.block_values):
            out[2 * a, 2 * a + 1] = b
            out[2 * a + 1, 2 * a] = -b
        return out

    def reconstruct(self) -> np.ndarray:
        return self.orthogonal.T @ self.canonical_matrix() @ self.orthogonal


def antisymmetric_canonical_form(g: np.ndarray) -> AntisymCanonicalForm:
    """Block-diagonalize a real antisymmetric matrix by an orthogonal map.

    Eigenvalues of ``-g^2`` come in pairs ``b^2``; each unit eigenvector
    ``u`` pairs with ``w = g u / b`` so that rows ``(w, u)`` of the
    orthogonal matrix produce the block ``[[0, b], [-b, 0]]``.  Degenerate
    eigenvalues are handled by deflating the shared eigenspace pair by
    pair; blocks come out sorted descending.
    """
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValidationError("input must be square")
    n = g.shape[0]
    scale = max(1.0, float(np.max(np.abs(g))) if n else 1.0)
    if n and float(np.max(np.abs(g + g.T))) > _ANTISYM_TOL * scale:
        raise ValidationError("input must be antisymmetric")

    vals, vecs = np.linalg.eigh(-g @ g)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    # squaring halves the resolvable digits; values at the eigh noise floor
    # are kernel directions, not blocks
    zero_cut = float(vals[0]) * 1e-13 * max(1, n) if n and vals[0] > 0 else 0.0

    rows: list[np.ndarray] = []
    blocks: list[float] = []
    kernel: list[np.ndarray] = []
    i = 0
    while i < n and vals[i] > zero_cut:
        # cluster near-equal eigenvalues to stay stable under degeneracy
        j = i + 1
        while j < n and vals[j] > zero_cut and (
            vals[i] - vals[j] <= 1e-9 * max(vals[0], 1.0)
        ):
            j += 1
        if (j - i) % 2:
            # a lone direction above the cut can only be noise; spill it
            j -= 1
            if j == i:
                kernel.append(vecs[:, i])
                i += 1
                continue
        space = vecs[:, i:j].copy()
        b = math.sqrt((vals[i] + vals[j - 1]) / 2.0)
        while space.shape[1] > 0:
            u = space[:, 0]
            u = u / np.linalg.norm(u)
            k = int(np.argmax(np.abs(u)))
            if u[k] < 0:
                u = -u
            w = g @ u / b
            w = w - u * (u @ w)
            w = w / np.linalg.norm(w)
            rows.append(w)
            rows.append(u)
            blocks.append(b)
            cols = space.shape[1]
            if cols <= 2:
                space = np.zeros((n, 0))
            else:
                proj = space - np.outer(u, u @ space) - np.outer(w, w @ space)
                left, sing, _ = np.linalg.svd(proj, full_matrices=False)
                space = left[:, : cols - 2]
        i = j

    # kernel rows (remaining eigenvectors), sign-fixed for determinism
    kernel.extend(vecs[:, k] for k in range(i, n))
    for u in kernel:
        m = int(np.argmax(np.abs(u)))
        rows.append(u if u[m] >= 0 else -u)

    orthogonal = np.array(rows) if rows else np.eye(0)
    form = AntisymCanonicalForm(
        orthogonal=orthogonal,
        block_values=np.asarray(blocks, dtype=float),
        residual=0.0,
        dim=n,
    )
    residual = float(np.max(np.abs(form.reconstruct() - g))) if n else 0.0
    return AntisymCanonicalForm(orthogonal, form.block_values, residual, n)


@dataclass(frozen=True)
class DfGenerator:
    """A degree-2 generator split into scalar, linear and rotated-pair parts.

    ``real_part``/``imag_part`` canonicalize twice the antisymmetric
    coefficient matrices, so their block values are exactly the l1 weights
    of the rotated pair monomials (one weight per 2x2 block).
    """

    e: complex
    f: np.ndarray
    real_part: AntisymCanonicalForm
    imag_part: AntisymCanonicalForm
    n_modes: int

    def dense(self, cap: int = DEFAULT_DENSE_QUBIT_CAP) -> np.ndarray:
        dim = 1 << (self.n_modes // 2)
        gammas = [
            majorana_dense((a,), self.n_modes, cap=cap)
            for a in range(1, self.n_modes + 1)
        ]
        acc = self.e * np.eye(dim, dtype=complex)
        for a in range(self.n_modes):
            if self.f[a] != 0.0:
                acc += self.f[a] * gammas[a]
        for form, unit in ((self.real_part, 1.0), (self.imag_part, 1j)):
            if not len(form.block_values):
                continue
            rotated = [
                sum(form.orthogonal[c, d] * gammas[d] for d in range(self.n_modes))
                for c in range(self.n_modes)
            ]
            for a, b in enumerate(form.block_values):
                if b != 0.0:
                    acc += unit * b * (rotated[2 * a] @ rotated[2 * a + 1])
        return acc

    def df_l1(self) -> float:
        return float(
            abs(self.e)
            + np.sum(np.abs(self.f))
            + np.sum(np.abs(self.real_part.block_values))
            + np.sum(np.abs(self.imag_part.block_values))
        )

    def direct_l1(self) -> float:
        """Entrywise accounting over all ordered pairs of the raw matrices."""
        gr = self.real_part.reconstruct() / 2.0
        gi = self.imag_part.reconstruct() / 2.0
        return float(
            abs(self.e)
            + np.sum(np.abs(self.f))
            + np.sum(np.abs(gr + 1j * gi))
        )


def _quadratic_matrices(basis, vector) -> tuple:
    """Split a generator row over {1, g_a, i g_a g_b} into (e, f, gR, gI)."""
    n = basis.system_size
    e = 0.0 + 0j
    f = np.zeros(n, dtype=complex)
    gr = np.zeros((n, n))
    gi = np.zeros((n, n))
    for l, (key, phase) in enumerate(basis.elements):
        coeff = complex(vector[l]) * complex(phase)
        if coeff == 0.0:
            continue
        if len(key) == 0:
            e += coeff
        elif len(key) == 1:
            f[key[0] - 1] += coeff
        elif len(key) == 2:
            a, b = key[0] - 1, key[1] - 1
            gr[a, b] += coeff.real / 2.0
            gr[b, a] -= coeff.real / 2.0
            gi[a, b] += coeff.imag / 2.0
            gi[b, a] -= coeff.imag / 2.0
        else:
            raise ValidationError("generator is not degree-2 in the modes")
    return e, f, gr, gi


def double_factorize(gens: SosGenerators) -> list:
    """Canonicalize the quadratic part of every generator row.

    Writing the quadratic coefficients ``sum_{ab} g_ab gamma_a gamma_b``
    with ``g = gR + i gI`` (both real antisymmetric), each part rotates to
    ``sum_a btilde_a gamma'_{2a-1} gamma'_{2a}``; the dense operator is
    preserved exactly.
    """
    basis = gens.basis
    if basis.kind != "majorana" or basis.degree != 2:
        raise ValidationError("double factorization needs the degree-2 Majorana basis")
    out = []
    for j in range(gens.rank):
        e, f, gr, gi = _quadratic_matrices(basis, gens.vectors[j])
        out.append(
            DfGenerator(
                e=e,
                f=f,
                real_part=antisymmetric_canonical_form(2.0 * gr),
                imag_part=antisymmetric_canonical_form(2.0 * gi),
                n_modes=basis.system_size,
            )
        )
    return out


def df_lambda(dfgens) -> float:
    """Block-encoding normalization after rotation: ``sum_j (df l1)^2``."""
    return float(sum(d.df_l1() ** 2 for d in dfgens))


def direct_lambda(dfgens) -> float:
    """Entrywise (unrotated) accounting for the same generators."""
    return float(sum(d.direct_l1() ** 2 for d in dfgens))


@dataclass(frozen=True)
class LambdaBoundReport:
    lambda_df: float
    bound: float
    slack: float
    holds: bool


def lambda_4n_beta_check(
    dfgens, beta: float, n_modes: int, rel_tol: float = 1e-6
) -> LambdaBoundReport:
    """Check ``lambda_df <= 4 N beta`` (Cauchy-Schwarz over 2N+1 weights)."""
    lam = df_lambda(dfgens)
    bound = 4.0 * n_modes * beta
    slack = bound - lam
    holds = lam <= bound * (1.0 + rel_tol) + 1e-12
    return LambdaBoundReport(lam, bound, slack, bool(holds))
