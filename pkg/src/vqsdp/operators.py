"""Dense Hermitian-operator algebra.

Pauli decomposition, Choi-matrix construction and application, adjoint maps
and PSD checks.  Everything is dense ``numpy``: target dimensions are N <= 64,
so sparsity machinery would cost more than it saves.

Conventions
-----------
* Matrix units ``|i><j|`` use zero-based column indices.
* A Pauli word is a string over ``{I, X, Y, Z}``; ``word[0]`` is the most
  significant tensor factor, i.e. the word's matrix is
  ``kron(P[word[0]], kron(P[word[1]], ...))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Callable, Sequence

import numpy as np

from .exceptions import DimensionError, HermiticityError, MapShapeError

HERMITICITY_TOL = 1e-10
WEIGHT_PRUNE_TOL = 1e-12

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


class HermitianOperator:
    """Dense N-by-N complex Hermitian matrix, validated at construction.

    Inputs failing the entrywise Hermiticity tolerance are rejected rather
    than symmetrized, to surface construction bugs early.  The stored array
    is made read-only; treat instances as immutable values.
    """

    __slots__ = ("matrix", "_pauli_cache")

    def __init__(self, matrix) -> None:
        arr = np.array(matrix, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {arr.shape}")
        if not np.all(np.abs(arr - arr.conj().T) <= HERMITICITY_TOL):
            worst = float(np.max(np.abs(arr - arr.conj().T)))
            raise HermiticityError(
                f"matrix deviates from its conjugate transpose by {worst:.3e}"
            )
        arr.setflags(write=False)
        self.matrix = arr
        self._pauli_cache = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_qubits(self) -> int:
        """Number of qubits this operator acts on; requires dim = 2**n."""
        n = self.dim.bit_length() - 1
        if 2**n != self.dim:
            raise DimensionError(f"dimension {self.dim} is not a power of two")
        return n

    def norm(self) -> float:
        """Spectral norm (largest singular value)."""
        return float(np.linalg.norm(self.matrix, 2))

    def transpose(self) -> "HermitianOperator":
        return HermitianOperator(self.matrix.T)

    def pauli_terms(self) -> "PauliDecomposition":
        """Pauli decomposition, computed lazily and cached."""
        if self._pauli_cache is None:
            self._pauli_cache = pauli_decompose(self)
        return self._pauli_cache

    def __add__(self, other: "HermitianOperator") -> "HermitianOperator":
        return HermitianOperator(self.matrix + other.matrix)

    def __sub__(self, other: "HermitianOperator") -> "HermitianOperator":
        return HermitianOperator(self.matrix - other.matrix)

    def __rmul__(self, scalar: float) -> "HermitianOperator":
        return HermitianOperator(float(scalar) * self.matrix)

    def __neg__(self) -> "HermitianOperator":
        return HermitianOperator(-self.matrix)

    def __repr__(self) -> str:
        return f"HermitianOperator(dim={self.dim})"


def identity_operator(dim: int) -> HermitianOperator:
    return HermitianOperator(np.eye(dim, dtype=complex))


def zero_operator(dim: int) -> HermitianOperator:
    return HermitianOperator(np.zeros((dim, dim), dtype=complex))


@dataclass(frozen=True)
class PauliDecomposition:
    """Weighted sum of Pauli words: sum_t weight_t * word_t.

    All weights are real (guaranteed for Hermitian input); terms with
    |weight| < 1e-12 are pruned.
    """

    num_qubits: int
    terms: tuple[tuple[float, str], ...]

    def to_matrix(self) -> np.ndarray:
        dim = 2**self.num_qubits
        out = np.zeros((dim, dim), dtype=complex)
        for weight, word in self.terms:
            out += weight * pauli_word_matrix(word)
        return out

    def __len__(self) -> int:
        return len(self.terms)


def pauli_word_matrix(word: str) -> np.ndarray:
    """Dense matrix of a Pauli word; word[0] is the most significant factor."""
    out = PAULI_MATRICES[word[0]]
    for ch in word[1:]:
        out = np.kron(out, PAULI_MATRICES[ch])
    return out


def pauli_decompose(op: HermitianOperator) -> PauliDecomposition:
    """Expand a Hermitian operator over the 4**n Pauli words.

    The weight of a word P is Tr[P H] / 2**n.  Zero-weight terms
    (|w| < 1e-12) are omitted so that sparse operators stay sparse.

    Raises:
        DimensionError: if op.dim is not a power of two.
    """
    n = op.num_qubits
    dim = op.dim
    flat = op.matrix.reshape(-1)
    terms = []
    for letters in product("IXYZ", repeat=n):
        word = "".join(letters)
        # Tr[P H] = vdot(P, H) because P is Hermitian.
        weight = np.vdot(pauli_word_matrix(word).reshape(-1), flat) / dim
        if abs(weight) >= WEIGHT_PRUNE_TOL:
            terms.append((float(weight.real), word))
    return PauliDecomposition(num_qubits=n, terms=tuple(terms))


@dataclass(frozen=True)
class ChoiMatrix:
    """Choi representation of a linear map from N-dim to N'-dim operators.

    The matrix is (N*N')-by-(N*N'), with the row index grouped as (i, a)
    where i indexes the input space (major) and a the output space (minor).
    It is Hermitian exactly when the source map is Hermiticity preserving.
    """

    in_dim: int
    out_dim: int
    matrix: np.ndarray

    def is_hermitian(self, tol: float = HERMITICITY_TOL) -> bool:
        return bool(np.all(np.abs(self.matrix - self.matrix.conj().T) <= tol))

    def as_operator(self) -> HermitianOperator:
        """View as a Hermitian observable; raises HermiticityError if not HP."""
        return HermitianOperator(self.matrix)


def choi_of_map(
    map_action: Callable[[np.ndarray], np.ndarray], in_dim: int
) -> ChoiMatrix:
    """Build the Choi matrix sum_ij |i><j| (x) Phi(|i><j|) of a linear map.

    Args:
        map_action: callable evaluating the map on a dense matrix; it is
            probed on all in_dim**2 matrix units.
        in_dim: dimension N of the map's input space.

    Raises:
        MapShapeError: if outputs are not square or vary in shape.
    """
    out_dim = None
    blocks = None
    for i in range(in_dim):
        for j in range(in_dim):
            unit = np.zeros((in_dim, in_dim), dtype=complex)
            unit[i, j] = 1.0
            out = np.asarray(map_action(unit), dtype=complex)
            if out.ndim != 2 or out.shape[0] != out.shape[1]:
                raise MapShapeError(
                    f"map output for unit ({i},{j}) has shape {out.shape}"
                )
            if out_dim is None:
                out_dim = out.shape[0]
                blocks = np.zeros((in_dim * out_dim, in_dim * out_dim), dtype=complex)
            elif out.shape[0] != out_dim:
                raise MapShapeError(
                    f"map output dimension changed from {out_dim} to {out.shape[0]}"
                )
            blocks[i * out_dim : (i + 1) * out_dim, j * out_dim : (j + 1) * out_dim] = out
    return ChoiMatrix(in_dim=in_dim, out_dim=out_dim, matrix=blocks)


def apply_via_choi(choi: ChoiMatrix, x: HermitianOperator) -> HermitianOperator:
    """Evaluate the map as Tr_1[Gamma (X^T (x) I)] (partial trace over input).

    Raises:
        DimensionError: if x.dim != choi.in_dim.
        HermiticityError: if the result is not Hermitian (non-HP map).
    """
    if x.dim != choi.in_dim:
        raise DimensionError(f"operand dim {x.dim} != map input dim {choi.in_dim}")
    n, m = choi.in_dim, choi.out_dim
    gamma = choi.matrix.reshape(n, m, n, m)
    # out[a, b] = sum_{i,k} Gamma[(i,a),(k,b)] X^T[k, i] = Gamma[(i,a),(k,b)] X[i, k]
    out = np.einsum("iakb,ik->ab", gamma, x.matrix)
    return HermitianOperator(out)


def adjoint_via_choi(choi: ChoiMatrix, y: HermitianOperator) -> HermitianOperator:
    """Adjoint map via the Choi matrix: Phi^dag(Y) = Tr_2[Gamma (I (x) Y)]^T."""
    if y.dim != choi.out_dim:
        raise DimensionError(f"operand dim {y.dim} != map output dim {choi.out_dim}")
    n, m = choi.in_dim, choi.out_dim
    gamma = choi.matrix.reshape(n, m, n, m)
    # <Y, Phi(X)> = <Phi^dag(Y), X> pins down Phi^dag(Y)[k, i] = sum_ab Gamma[(i,a),(k,b)] Y[b, a]
    out = np.einsum("iakb,ba->ki", gamma, y.matrix)
    return HermitianOperator(out)


@dataclass(frozen=True)
class DiagonalMap:
    """The vector constraint map X -> (Tr[A_1 X], ..., Tr[A_M X])."""

    constraint_ops: tuple[HermitianOperator, ...]

    def __post_init__(self):
        dims = {op.dim for op in self.constraint_ops}
        if len(dims) > 1:
            raise DimensionError(f"constraint operators mix dimensions {sorted(dims)}")

    @property
    def num_constraints(self) -> int:
        return len(self.constraint_ops)

    @property
    def dim(self) -> int:
        return self.constraint_ops[0].dim

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Componentwise traces (Tr[A_1 X], ..., Tr[A_M X]) as a real vector."""
        return np.array(
            [np.einsum("ij,ji->", op.matrix, x).real for op in self.constraint_ops]
        )


def adjoint_apply(diag_map: DiagonalMap, y: Sequence[float]) -> HermitianOperator:
    """Adjoint of a diagonal map: Phi^dag(y) = sum_m y_m A_m.

    Raises:
        DimensionError: if len(y) != number of constraints.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (diag_map.num_constraints,):
        raise DimensionError(
            f"dual vector length {y.shape} != {diag_map.num_constraints} constraints"
        )
    acc = np.zeros((diag_map.dim, diag_map.dim), dtype=complex)
    for coeff, op in zip(y, diag_map.constraint_ops):
        acc += coeff * op.matrix
    return HermitianOperator(acc)


def min_eigenvalue(op: HermitianOperator) -> float:
    """Smallest eigenvalue via dense symmetric eigensolve.

    The operator is PSD (to working tolerance) iff the result >= -1e-9.
    """
    return float(np.linalg.eigvalsh(op.matrix)[0])
