"""Dense complex linear algebra on composite Hilbert spaces.

Every operator carries the ordered list of subsystem dimensions of its output
(rows) and input (columns) spaces. Subsystem order is positional and never
reshuffled implicitly; use :func:`permute_subsystems` when registers have to
be brought into a different order.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from math import prod
from typing import Iterable, Sequence

import numpy as np

#: tolerance used when validating inputs (hermiticity, trace, positivity)
VALIDATION_TOL = 1e-10
#: tolerance used after arithmetic (e.g. positivity of a channel output)
ARITHMETIC_TOL = 1e-9


class DimensionError(ValueError):
    """Raised when subsystem dimensions or masks are inconsistent."""


@dataclass(frozen=True, eq=False)
class LabeledOperator:
    """A matrix tagged with the subsystem dimensions of its row and column spaces.

    Kets are stored as ``D x 1`` operators with ``dims_in == ()``.
    """

    data: np.ndarray
    dims_out: tuple[int, ...]
    dims_in: tuple[int, ...]

    def __post_init__(self):
        data = np.array(self.data, dtype=complex)
        if data.ndim != 2:
            raise DimensionError(f"expected a 2-d array, got shape {data.shape}")
        dims_out = tuple(int(d) for d in self.dims_out)
        dims_in = tuple(int(d) for d in self.dims_in)
        if any(d < 1 for d in dims_out + dims_in):
            raise DimensionError("subsystem dimensions must be positive")
        if data.shape != (prod(dims_out), prod(dims_in)):
            raise DimensionError(
                f"shape {data.shape} does not match dims {dims_out} x {dims_in}"
            )
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "dims_out", dims_out)
        object.__setattr__(self, "dims_in", dims_in)

    @classmethod
    def square(cls, data, dims: Sequence[int]) -> LabeledOperator:
        return cls(data, tuple(dims), tuple(dims))

    @classmethod
    def ket(cls, vector, dims: Sequence[int]) -> LabeledOperator:
        vector = np.asarray(vector, dtype=complex).reshape(-1, 1)
        return cls(vector, tuple(dims), ())

    @property
    def dims(self) -> tuple[int, ...]:
        if not self.is_square:
            raise DimensionError("operator is not square")
        return self.dims_out

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def is_square(self) -> bool:
        return self.dims_out == self.dims_in

    @property
    def is_ket(self) -> bool:
        return self.dims_in == ()

    @property
    def num_subsystems(self) -> int:
        return len(self.dims_out)

    # --- elementwise structure -------------------------------------------
    @property
    def dag(self) -> LabeledOperator:
        return LabeledOperator(self.data.conj().T, self.dims_in, self.dims_out)

    @property
    def T(self) -> LabeledOperator:
        return LabeledOperator(self.data.T, self.dims_in, self.dims_out)

    def conj(self) -> LabeledOperator:
        return LabeledOperator(self.data.conj(), self.dims_out, self.dims_in)

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def projector(self) -> LabeledOperator:
        """``|v><v|`` for a ket ``v``."""
        if not self.is_ket:
            raise DimensionError("projector() needs a ket")
        vec = self.data[:, 0]
        return LabeledOperator.square(np.outer(vec, vec.conj()), self.dims_out)

    def vector(self) -> np.ndarray:
        if not self.is_ket:
            raise DimensionError("vector() needs a ket")
        return self.data[:, 0]

    # --- arithmetic --------------------------------------------------------
    def __matmul__(self, other: LabeledOperator) -> LabeledOperator:
        if self.dims_in != other.dims_out:
            raise DimensionError(f"cannot compose {self.dims_in} with {other.dims_out}")
        return LabeledOperator(self.data @ other.data, self.dims_out, other.dims_in)

    def __add__(self, other: LabeledOperator) -> LabeledOperator:
        self._check_same(other)
        return LabeledOperator(self.data + other.data, self.dims_out, self.dims_in)

    def __sub__(self, other: LabeledOperator) -> LabeledOperator:
        self._check_same(other)
        return LabeledOperator(self.data - other.data, self.dims_out, self.dims_in)

    def __mul__(self, scalar) -> LabeledOperator:
        return LabeledOperator(self.data * scalar, self.dims_out, self.dims_in)

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> LabeledOperator:
        return LabeledOperator(self.data / scalar, self.dims_out, self.dims_in)

    def __neg__(self) -> LabeledOperator:
        return LabeledOperator(-self.data, self.dims_out, self.dims_in)

    def _check_same(self, other: LabeledOperator):
        if self.dims_out != other.dims_out or self.dims_in != other.dims_in:
            raise DimensionError("operands have different subsystem structure")

    # --- predicates --------------------------------------------------------
    def max_abs_diff(self, other: LabeledOperator) -> float:
        self._check_same(other)
        return float(np.max(np.abs(self.data - other.data)))

    def allclose(self, other: LabeledOperator, atol: float = ARITHMETIC_TOL) -> bool:
        return self.max_abs_diff(other) <= atol

    def is_hermitian(self, tol: float = VALIDATION_TOL) -> bool:
        return self.is_square and float(np.max(np.abs(self.data - self.data.conj().T))) <= tol

    def is_isometry(self, tol: float = VALIDATION_TOL) -> bool:
        gram = self.data.conj().T @ self.data
        return float(np.max(np.abs(gram - np.eye(gram.shape[0])))) <= tol

    def is_density(self, tol: float = VALIDATION_TOL) -> bool:
        if not self.is_hermitian(tol):
            return False
        if abs(self.trace() - 1) > tol:
            return False
        return min_eigenvalue(self) >= -tol

    def check_density(self, tol: float = VALIDATION_TOL) -> LabeledOperator:
        """Return ``self`` if it is a density operator, raise ``ValueError`` otherwise."""
        if not self.is_hermitian(tol):
            raise ValueError("operator is not hermitian")
        if abs(self.trace() - 1) > tol:
            raise ValueError(f"trace is {self.trace().real:.12g}, expected 1")
        lam = min_eigenvalue(self)
        if lam < -tol:
            raise ValueError(f"operator has negative eigenvalue {lam:.3e}")
        return self


def identity(dims: Sequence[int]) -> LabeledOperator:
    return LabeledOperator.square(np.eye(prod(dims)), dims)


def as_mask(indices: Iterable[int], n: int) -> frozenset[int]:
    """Validate a set of subsystem positions against ``n`` subsystems."""
    indices = list(indices)
    mask = frozenset(int(i) for i in indices)
    if len(mask) != len(indices):
        raise DimensionError(f"duplicate subsystem indices in {indices}")
    bad = [i for i in mask if not 0 <= i < n]
    if bad:
        raise DimensionError(f"subsystem indices {sorted(bad)} out of range for {n} subsystems")
    return mask


def kron(ops: Sequence[LabeledOperator]) -> LabeledOperator:
    if not ops:
        raise ValueError("kron needs at least one operator")
    data = reduce(np.kron, (op.data for op in ops))
    dims_out = sum((op.dims_out for op in ops), ())
    dims_in = sum((op.dims_in for op in ops), ())
    return LabeledOperator(data, dims_out, dims_in)


def _as_tensor(op: LabeledOperator) -> np.ndarray:
    return op.data.reshape(op.dims_out + op.dims_in)


def permute_subsystems(op: LabeledOperator, perm: Sequence[int]) -> LabeledOperator:
    """Reorder tensor factors so that new position ``i`` holds old subsystem ``perm[i]``.

    Applies to both sides of a square operator; for a ket only the output side
    is permuted.
    """
    n = op.num_subsystems
    perm = list(perm)
    if sorted(perm) != list(range(n)):
        raise DimensionError(f"{perm} is not a permutation of {n} subsystems")
    t = _as_tensor(op)
    if op.is_ket:
        dims = tuple(op.dims_out[p] for p in perm)
        return LabeledOperator.ket(t.transpose(perm).reshape(-1), dims)
    if not op.is_square:
        raise DimensionError("permute_subsystems needs a square operator or a ket")
    axes = perm + [n + p for p in perm]
    dims = tuple(op.dims_out[p] for p in perm)
    return LabeledOperator.square(t.transpose(axes).reshape(prod(dims), prod(dims)), dims)


def partial_trace(op: LabeledOperator, discard: Iterable[int]) -> LabeledOperator:
    """Trace out the subsystems in ``discard``; kept subsystems stay in order."""
    if not op.is_square:
        raise DimensionError("partial_trace needs a square operator")
    n = op.num_subsystems
    mask = as_mask(discard, n)
    keep = [i for i in range(n) if i not in mask]
    t = _as_tensor(op)
    # bring discarded row/column axes to the end, then trace them pairwise
    order = keep + sorted(mask) + [n + i for i in keep] + [n + i for i in sorted(mask)]
    t = t.transpose(order)
    dk = prod(op.dims_out[i] for i in keep)
    dd = prod(op.dims_out[i] for i in mask)
    t = t.reshape(dk, dd, dk, dd)
    reduced = np.einsum("ajbj->ab", t)
    return LabeledOperator.square(reduced, tuple(op.dims_out[i] for i in keep))


def partial_transpose(op: LabeledOperator, mask: Iterable[int]) -> LabeledOperator:
    """Transpose (in the computational basis) the tensor factors listed in ``mask``."""
    if not op.is_square:
        raise DimensionError("partial_transpose needs a square operator")
    n = op.num_subsystems
    mask = as_mask(mask, n)
    if not mask:
        return op
    axes = list(range(2 * n))
    for i in mask:
        axes[i], axes[n + i] = n + i, i
    t = _as_tensor(op).transpose(axes)
    return LabeledOperator.square(t.reshape(op.shape), op.dims)


def hermitian_eigs(op: LabeledOperator, tol: float = VALIDATION_TOL):
    """Eigenvalues (descending) and orthonormal eigenvectors (columns) of a hermitian operator."""
    if not op.is_hermitian(tol):
        raise ValueError("hermitian_eigs: operator is not hermitian within tolerance")
    sym = (op.data + op.data.conj().T) / 2
    vals, vecs = np.linalg.eigh(sym)
    return vals[::-1].copy(), vecs[:, ::-1].copy()


def min_eigenvalue(op: LabeledOperator) -> float:
    sym = (op.data + op.data.conj().T) / 2
    return float(np.linalg.eigvalsh(sym)[0])


def apply(channel, state: LabeledOperator, *, require_tp: bool = True) -> LabeledOperator:
    """Apply an isometry or a Kraus list to a state: ``sum_K K rho K^dagger``.

    ``require_tp=False`` allows trace non-increasing Kraus lists, e.g. single
    instrument branches.
    """
    if isinstance(channel, LabeledOperator):
        if not channel.is_isometry():
            raise ValueError("map flagged as isometry is not isometric")
        kraus = [channel]
    else:
        kraus = list(channel)
        if not kraus:
            raise ValueError("empty Kraus list")
        check_kraus(kraus, require_tp=require_tp)
    if state.is_ket:
        state = state.projector()
    out = None
    for k in kraus:
        term = k @ state @ k.dag
        out = term if out is None else out + term
    return out


def check_kraus(kraus: Sequence[LabeledOperator], *, require_tp: bool = True, tol: float = VALIDATION_TOL):
    dims_in = kraus[0].dims_in
    dims_out = kraus[0].dims_out
    for k in kraus:
        if k.dims_in != dims_in or k.dims_out != dims_out:
            raise DimensionError("Kraus operators have inconsistent dimensions")
    total = sum(k.data.conj().T @ k.data for k in kraus)
    eye = np.eye(total.shape[0])
    if require_tp:
        if np.max(np.abs(total - eye)) > tol:
            raise ValueError("Kraus list is not trace preserving")
    elif np.linalg.eigvalsh((eye - total + (eye - total).conj().T) / 2)[0] < -tol:
        raise ValueError("Kraus list is not trace non-increasing")
