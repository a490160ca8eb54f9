"""Pauli-string and Majorana-monomial algebra with dense realization.

Pauli words are stored as a pair of bitmasks ``(x, z)`` over the qubits,
with the phase convention ``P(x, z) = prod_q i^{x_q z_q} X_q^{x_q} Z_q^{z_q}``
so that every word is Hermitian (``P(1,1) = Y``).  Majorana monomials are
tuples of strictly increasing 1-based mode indices; reordering tracks the
transposition parity.  Dense matrices are only built below a configurable
qubit cap and serve as the oracle for everything downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse.linalg

DEFAULT_DENSE_QUBIT_CAP = 14
MERGE_TOLERANCE = 1e-14

_LETTER_TO_XZ = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_XZ_TO_LETTER = {v: k for k, v in _LETTER_TO_XZ.items()}

_I2 = np.eye(2, dtype=complex)
_X2 = np.array([[0, 1], [1, 0]], dtype=complex)
_Y2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z2 = np.array([[1, 0], [0, -1]], dtype=complex)
_LETTER_MATRICES = {"I": _I2, "X": _X2, "Y": _Y2, "Z": _Z2}


class ValidationError(ValueError):
    """Raised when inputs violate a documented precondition."""


# ---------------------------------------------------------------------------
# Pauli word algebra on (x_mask, z_mask) keys
# ---------------------------------------------------------------------------

def word_from_letters(letters: str) -> tuple[int, int]:
    """Convert a letter string like ``'XIZ'`` (qubit 1 leftmost) to masks."""
    x = z = 0
    for pos, letter in enumerate(letters):
        try:
            xb, zb = _LETTER_TO_XZ[letter]
        except KeyError:
            raise ValidationError(f"invalid Pauli letter {letter!r}") from None
        x |= xb << pos
        z |= zb << pos
    return x, z


def letters_from_word(word: tuple[int, int], n_qubits: int) -> str:
    x, z = word
    return "".join(
        _XZ_TO_LETTER[((x >> pos) & 1, (z >> pos) & 1)] for pos in range(n_qubits)
    )


def pauli_mul(w1: tuple[int, int], w2: tuple[int, int]) -> tuple[complex, tuple[int, int]]:
    """Product of two Hermitian Pauli words: returns ``(phase, word)``.

    The phase lies in {1, -1, i, -i}; words are closed under multiplication.
    """
    x1, z1 = w1
    x2, z2 = w2
    x3, z3 = x1 ^ x2, z1 ^ z2
    # i-exponent from the per-qubit i^{xz} normalization plus X/Z reordering.
    k = (
        (x1 & z1).bit_count()
        + (x2 & z2).bit_count()
        - (x3 & z3).bit_count()
        + 2 * (z1 & x2).bit_count()
    ) % 4
    return (1j) ** k, (x3, z3)


def pauli_weight(word: tuple[int, int]) -> int:
    x, z = word
    return (x | z).bit_count()


@dataclass(frozen=True)
class PauliTerm:
    """A weighted Pauli word; ``letters`` has one letter per qubit."""

    coefficient: complex
    letters: str

    @property
    def word(self) -> tuple[int, int]:
        return word_from_letters(self.letters)

    def __mul__(self, other: "PauliTerm") -> "PauliTerm":
        if len(self.letters) != len(other.letters):
            raise ValidationError("PauliTerm lengths differ")
        phase, word = pauli_mul(self.word, other.word)
        return PauliTerm(
            self.coefficient * other.coefficient * phase,
            letters_from_word(word, len(self.letters)),
        )


def _merge_terms(pairs: Iterable[tuple[tuple[int, int], complex]]) -> dict:
    merged: dict[tuple[int, int], complex] = {}
    for word, coeff in pairs:
        merged[word] = merged.get(word, 0.0) + complex(coeff)
    return {w: c for w, c in merged.items() if abs(c) > MERGE_TOLERANCE}


@dataclass(frozen=True)
class LcuHamiltonian:
    """A Hamiltonian as merged weighted Pauli words with cached l1-norm."""

    qubit_count: int
    terms: dict = field(default_factory=dict)  # (x, z) -> complex

    def __post_init__(self):
        limit = 1 << self.qubit_count
        for (x, z) in self.terms:
            if x >= limit or z >= limit or x < 0 or z < 0:
                raise ValidationError("Pauli word exceeds declared qubit count")

    @classmethod
    def from_terms(cls, qubit_count: int, terms: Iterable[PauliTerm]) -> "LcuHamiltonian":
        pairs = []
        for t in terms:
            if len(t.letters) != qubit_count:
                raise ValidationError("term length does not match qubit count")
            pairs.append((t.word, t.coefficient))
        return cls(qubit_count, _merge_terms(pairs))

    @classmethod
    def from_word_dict(cls, qubit_count: int, terms: dict) -> "LcuHamiltonian":
        return cls(qubit_count, _merge_terms(terms.items()))

    def term_list(self) -> list[PauliTerm]:
        return [
            PauliTerm(c, letters_from_word(w, self.qubit_count))
            for w, c in sorted(self.terms.items())
        ]

    @property
    def lambda_lcu(self) -> float:
        return float(sum(abs(c) for c in self.terms.values()))

    def is_real(self, tol: float = 1e-12) -> bool:
        return all(abs(c.imag) <= tol for c in self.terms.values())

    def coefficient(self, word: tuple[int, int]) -> complex:
        return self.terms.get(word, 0.0)

    def to_dense(self, cap: int = DEFAULT_DENSE_QUBIT_CAP) -> "DenseOperator":
        return to_dense(self, cap=cap)

    def min_eigenvalue(self, cap: int = DEFAULT_DENSE_QUBIT_CAP) -> float:
        """Smallest eigenvalue; matrix-free Lanczos above 8 qubits."""
        if self.qubit_count > cap:
            raise ValidationError(
                f"{self.qubit_count} qubits exceeds dense cap {cap}"
            )
        if not self.terms:
            return 0.0
        if self.qubit_count <= 8:
            return float(np.linalg.eigvalsh(self.to_dense(cap).entries)[0])
        op = self._linear_operator()
        vals = scipy.sparse.linalg.eigsh(
            op, k=1, which="SA", return_eigenvectors=False, maxiter=5000,
            v0=np.ones(op.shape[0]) / math.sqrt(op.shape[0]),
        )
        return float(vals[0])

    def _linear_operator(self) -> scipy.sparse.linalg.LinearOperator:
        dim = 1 << self.qubit_count
        idx = np.arange(dim, dtype=np.uint64)
        by_x: dict[int, np.ndarray] = {}
        for (x, z), coeff in self.terms.items():
            const = coeff * (1j) ** ((x & z).bit_count() % 4)
            signs = 1.0 - 2.0 * (
                np.bitwise_count(idx & np.uint64(z)).astype(np.int64) & 1
            )
            acc = by_x.setdefault(x, np.zeros(dim, dtype=complex))
            acc += const * signs
        masks = [(np.uint64(x), amp) for x, amp in by_x.items()]

        def matvec(v):
            v = np.asarray(v).reshape(dim)
            out = np.zeros(dim, dtype=complex)
            for x, amp in masks:
                np.add.at(out, (idx ^ x).astype(np.int64), amp * v)
            return out

        return scipy.sparse.linalg.LinearOperator(
            (dim, dim), matvec=matvec, dtype=complex
        )


@dataclass(frozen=True)
class DenseOperator:
    """Dense matrix realization used as the verification oracle."""

    entries: np.ndarray
    dim: int

    @classmethod
    def from_matrix(cls, entries: np.ndarray) -> "DenseOperator":
        entries = np.asarray(entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValidationError("DenseOperator requires a square matrix")
        return cls(entries, entries.shape[0])

    @property
    def is_hermitian(self) -> bool:
        return bool(np.max(np.abs(self.entries - self.entries.conj().T)) <= 1e-12)

    def eigenvalues(self) -> np.ndarray:
        if not self.is_hermitian:
            raise ValidationError("eigenvalues() requires a Hermitian operator")
        return np.linalg.eigvalsh(self.entries)


def word_dense(word: tuple[int, int], n_qubits: int) -> np.ndarray:
    """Dense matrix of a single Hermitian Pauli word (bitmask fast path).

    Basis-index bit p corresponds to qubit p+1, i.e. qubit 1 is the least
    significant bit of the computational index.
    """
    x, z = word
    dim = 1 << n_qubits
    idx = np.arange(dim, dtype=np.uint64)
    phase = (1j) ** ((x & z).bit_count() % 4)
    signs = 1.0 - 2.0 * (np.bitwise_count(idx & np.uint64(z)).astype(np.int64) & 1)
    mat = np.zeros((dim, dim), dtype=complex)
    mat[(idx ^ np.uint64(x)).astype(np.int64), idx.astype(np.int64)] = phase * signs
    return mat


def to_dense(h: LcuHamiltonian, cap: int = DEFAULT_DENSE_QUBIT_CAP) -> DenseOperator:
    """Dense realization of an LCU Hamiltonian; errors above the qubit cap."""
    if h.qubit_count > cap:
        raise ValidationError(f"{h.qubit_count} qubits exceeds dense cap {cap}")
    dim = 1 << h.qubit_count
    mat = np.zeros((dim, dim), dtype=complex)
    for word, coeff in h.terms.items():
        mat += coeff * word_dense(word, h.qubit_count)
    op = DenseOperator.from_matrix(mat)
    if h.is_real() and not op.is_hermitian:
        raise AssertionError("real-coefficient LCU produced a non-Hermitian matrix")
    return op


def lcu_l1_norm(h: LcuHamiltonian) -> float:
    """Sum of term magnitudes over merged terms."""
    return h.lambda_lcu


# ---------------------------------------------------------------------------
# Majorana monomials
# ---------------------------------------------------------------------------

def canonical_majorana(indices: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    """Sort indices and reduce repeated modes; returns ``(sign, tuple)``.

    Adjacent equal indices annihilate (gamma^2 = 1); each transposition
    flips the sign.
    """
    items = list(indices)
    sign = 1
    # insertion sort, counting swaps of distinct neighbours
    for i in range(1, len(items)):
        j = i
        while j > 0 and items[j - 1] > items[j]:
            items[j - 1], items[j] = items[j], items[j - 1]
            sign = -sign
            j -= 1
    out: list[int] = []
    for v in items:
        if out and out[-1] == v:
            out.pop()
        else:
            out.append(v)
    return sign, tuple(out)


def majorana_mul(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    """Product of two canonical monomials: ``(sign, canonical tuple)``."""
    return canonical_majorana(tuple(a) + tuple(b))


def majorana_dagger_sign(degree: int) -> int:
    """Sign of m^dag relative to m for a canonical degree-d monomial."""
    return -1 if (degree * (degree - 1) // 2) % 2 else 1


@dataclass(frozen=True)
class MajoranaMonomial:
    """A weighted product of Majorana operators, canonically ordered."""

    indices: tuple[int, ...]
    coefficient: complex = 1.0

    def __post_init__(self):
        if any(i < 1 for i in self.indices):
            raise ValidationError("mode indices are 1-based")
        if any(a >= b for a, b in zip(self.indices, self.indices[1:])):
            raise ValidationError("indices must be strictly increasing")

    @classmethod
    def from_unordered(cls, indices: Sequence[int], coefficient: complex = 1.0):
        sign, canon = canonical_majorana(indices)
        return cls(canon, sign * coefficient)

    @property
    def degree(self) -> int:
        return len(self.indices)


class MajoranaPolynomial:
    """Sparse real/complex combination of canonical Majorana monomials."""

    def __init__(self, n_modes: int, terms: dict | None = None):
        if n_modes < 1:
            raise ValidationError("n_modes must be positive")
        self.n_modes = n_modes
        self.terms: dict[tuple[int, ...], complex] = {}
        for key, coeff in (terms or {}).items():
            self.add(key, coeff)

    def add(self, indices: Sequence[int], coeff: complex) -> None:
        sign, canon = canonical_majorana(indices)
        if canon and canon[-1] > self.n_modes:
            raise ValidationError("mode index exceeds n_modes")
        new = self.terms.get(canon, 0.0) + sign * complex(coeff)
        if abs(new) <= MERGE_TOLERANCE:
            self.terms.pop(canon, None)
        else:
            self.terms[canon] = new

    def coefficient(self, indices: Sequence[int]) -> complex:
        sign, canon = canonical_majorana(indices)
        return sign * self.terms.get(canon, 0.0)

    def to_lcu(self, n_modes: int | None = None) -> LcuHamiltonian:
        n = n_modes or self.n_modes
        pairs = []
        for key, coeff in self.terms.items():
            term = jordan_wigner(MajoranaMonomial(key, coeff), n)
            pairs.append((term.word, term.coefficient))
        return LcuHamiltonian(max(1, n // 2), _merge_terms(pairs))

    def to_dense(self, cap: int = DEFAULT_DENSE_QUBIT_CAP) -> DenseOperator:
        return to_dense(self.to_lcu(), cap=cap)


def jordan_wigner(m: MajoranaMonomial, n_modes: int) -> PauliTerm:
    """Standard Jordan-Wigner image of a Majorana monomial.

    Mode 2k-1 maps to Z_1 ... Z_{k-1} X_k and mode 2k to Z_1 ... Z_{k-1} Y_k,
    with the accumulated product phase folded into the coefficient.
    """
    if n_modes % 2:
        raise ValidationError("n_modes must be even")
    if m.indices and m.indices[-1] > n_modes:
        raise ValidationError("mode index out of range")
    n_qubits = n_modes // 2
    coeff = complex(m.coefficient)
    word = (0, 0)
    for mode in m.indices:
        k = (mode + 1) // 2  # 1-based qubit
        string = (1 << (k - 1)) - 1  # Z on qubits 1..k-1
        bit = 1 << (k - 1)
        gamma = (bit, string) if mode % 2 else (bit, string | bit)
        phase, word = pauli_mul(word, gamma)
        coeff *= phase
    return PauliTerm(coeff, letters_from_word(word, n_qubits))


def majorana_dense(indices: Sequence[int], n_modes: int,
                   cap: int = DEFAULT_DENSE_QUBIT_CAP) -> np.ndarray:
    term = jordan_wigner(MajoranaMonomial.from_unordered(indices), n_modes)
    if n_modes // 2 > cap:
        raise ValidationError("n_modes exceeds dense cap")
    return term.coefficient * word_dense(term.word, n_modes // 2)


# ---------------------------------------------------------------------------
# Termwise spectral amplification
# ---------------------------------------------------------------------------

def termwise_sa(h: LcuHamiltonian):
    """Per-term projector square root of ``H + lambda_lcu * I``.

    Row j is ``sqrt(2|g_j|) * (1 + sign(g_j) sigma_j) / 2``; the stacked rows
    square back to the shifted Hamiltonian and the normalization sums to
    ``2 * lambda_lcu``.
    """
    from .specamp import SaOperator, SaRow  # deferred to avoid an import cycle

    rows = []
    identity = (0, 0)
    for word, coeff in sorted(h.terms.items()):
        if abs(coeff.imag) > 1e-12:
            raise ValidationError("termwise SA requires real coefficients")
        g = coeff.real
        if g == 0.0:
            raise ValidationError("termwise SA requires nonzero coefficients")
        sign = 1.0 if g > 0 else -1.0
        scale = math.sqrt(abs(g) / 2.0)
        rows.append(
            SaRow(
                normalization=math.sqrt(2.0 * abs(g)),
                terms=((scale, identity), (sign * scale, word)),
                kind="pauli",
                system_size=h.qubit_count,
            )
        )
    return SaOperator(rows=tuple(rows), shift=h.lambda_lcu)
