"""Standard qubit objects: Paulis, Bell states, POVMs, instruments and state families."""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Sequence

import numpy as np

from .tensor import (
    VALIDATION_TOL,
    DimensionError,
    LabeledOperator,
    apply,
    check_kraus,
    hermitian_eigs,
    kron,
    min_eigenvalue,
)

_PAULI = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.array([[1, 0], [0, -1]]),
}
#: index m -> Pauli label, with sigma_0 = I
PAULI_LABELS = ("I", "X", "Y", "Z")


def pauli(label: str | int) -> LabeledOperator:
    if isinstance(label, (int, np.integer)):
        if not 0 <= label < 4:
            raise ValueError(f"Pauli index must be 0..3, got {label}")
        label = PAULI_LABELS[label]
    try:
        return LabeledOperator.square(_PAULI[label], (2,))
    except KeyError:
        raise ValueError(f"unknown Pauli label {label!r}") from None


def pauli_string(labels: Sequence[str | int]) -> LabeledOperator:
    return kron([pauli(lab) for lab in labels])


def phi_plus() -> LabeledOperator:
    return LabeledOperator.ket(np.array([1, 0, 0, 1]) / np.sqrt(2), (2, 2))


def bell_state(index: int) -> LabeledOperator:
    """Bell vector ``(sigma_m x 1)|Phi+>``: 0 -> Phi+, 1 -> Psi+, 2 -> i Psi-, 3 -> Phi-."""
    if not 0 <= index < 4:
        raise ValueError(f"Bell index must be 0..3, got {index}")
    return kron([pauli(index), pauli("I")]) @ phi_plus()


def singlet() -> LabeledOperator:
    return LabeledOperator.ket(np.array([0, 1, -1, 0]) / np.sqrt(2), (2, 2))


def basis_ket(bits: Sequence[int], dims: Sequence[int] | None = None) -> LabeledOperator:
    dims = tuple(dims) if dims is not None else (2,) * len(bits)
    vec = np.zeros(prod(dims))
    vec[np.ravel_multi_index(tuple(bits), dims)] = 1
    return LabeledOperator.ket(vec, dims)


@dataclass(frozen=True, eq=False)
class Povm:
    """Per-setting lists of effects acting on the subsystems ``acting_on`` of some register."""

    effects: tuple[tuple[LabeledOperator, ...], ...]
    settings: tuple[int, ...]
    acting_on: frozenset[int] = frozenset()

    def __post_init__(self):
        effects = tuple(tuple(e) for e in self.effects)
        settings = tuple(self.settings)
        if len(effects) != len(settings):
            raise ValueError("one effect list per setting required")
        if len(set(settings)) != len(settings):
            raise ValueError("duplicate setting labels")
        dims = effects[0][0].dims
        for label, group in zip(settings, effects):
            total = np.zeros((prod(dims), prod(dims)), dtype=complex)
            for e in group:
                if e.dims_out != dims or e.dims_in != dims:
                    raise DimensionError("all effects must act on the same space")
                if not e.is_hermitian(VALIDATION_TOL) or min_eigenvalue(e) < -VALIDATION_TOL:
                    raise ValueError(f"setting {label}: effect is not positive semidefinite")
                total += e.data
            if np.max(np.abs(total - np.eye(len(total)))) > VALIDATION_TOL:
                raise ValueError(f"setting {label}: effects do not sum to the identity")
        object.__setattr__(self, "effects", effects)
        object.__setattr__(self, "settings", settings)
        object.__setattr__(self, "acting_on", frozenset(self.acting_on))

    @property
    def dims(self) -> tuple[int, ...]:
        return self.effects[0][0].dims

    @property
    def outcome_counts(self) -> tuple[int, ...]:
        return tuple(len(g) for g in self.effects)

    def effect(self, setting: int, outcome: int) -> LabeledOperator:
        return self.effects[self.settings.index(setting)][outcome]

    def transposed(self) -> Povm:
        return Povm(tuple(tuple(e.T for e in g) for g in self.effects), self.settings, self.acting_on)

    def permuted(self, perm: Sequence[int]) -> Povm:
        from .tensor import permute_subsystems

        return Povm(
            tuple(tuple(permute_subsystems(e, perm) for e in g) for g in self.effects),
            self.settings,
            self.acting_on,
        )


def binary_povm(observable: LabeledOperator, tol: float = 1e-9) -> tuple[LabeledOperator, LabeledOperator]:
    """Effects ``(1 + A)/2`` and ``(1 - A)/2`` of a binary measurement with observable ``A``."""
    vals, _ = hermitian_eigs(observable)
    if vals[0] > 1 + tol or vals[-1] < -1 - tol:
        raise ValueError("observable spectrum outside [-1, 1]; effects would not be positive")
    eye = LabeledOperator.square(np.eye(observable.shape[0]), observable.dims)
    return (eye + observable) / 2, (eye - observable) / 2


@dataclass(frozen=True, eq=False)
class Instrument:
    """Outcome-indexed Kraus lists whose total map is trace preserving."""

    branches: tuple[tuple[LabeledOperator, ...], ...]

    def __post_init__(self):
        branches = tuple(tuple(b) for b in self.branches)
        if not branches or any(not b for b in branches):
            raise ValueError("instrument needs non-empty branches")
        check_kraus([k for b in branches for k in b], require_tp=True)
        object.__setattr__(self, "branches", branches)

    @property
    def input_dims(self) -> tuple[int, ...]:
        return self.branches[0][0].dims_in

    @property
    def output_dims(self) -> tuple[int, ...]:
        return self.branches[0][0].dims_out

    @property
    def num_outcomes(self) -> int:
        return len(self.branches)

    def branch(self, outcome: int, rho: LabeledOperator) -> LabeledOperator:
        """Unnormalized post-measurement state for ``outcome``."""
        return apply(self.branches[outcome], rho, require_tp=False)

    def channel(self) -> tuple[LabeledOperator, ...]:
        """Kraus list of the map obtained by forgetting the outcome."""
        return tuple(k for b in self.branches for k in b)


def effect_kraus(effect: LabeledOperator, tol: float = 1e-12) -> list[LabeledOperator]:
    """Rank-one Kraus rows ``sqrt(lam) <v|`` with ``sum K^dag K = effect``."""
    vals, vecs = hermitian_eigs(effect)
    out = []
    for lam, v in zip(vals, vecs.T):
        if lam > tol:
            out.append(LabeledOperator(np.sqrt(lam) * v.conj()[None, :], (), effect.dims))
    return out


# --- state families ----------------------------------------------------------


def werner_state(v: float) -> LabeledOperator:
    """``v |psi-><psi-| + (1 - v) 1/4``."""
    if not 0 <= v <= 1:
        raise ValueError(f"visibility must be in [0, 1], got {v}")
    return v * singlet().projector() + (1 - v) * LabeledOperator.square(np.eye(4) / 4, (2, 2))


def maximally_mixed(dims: Sequence[int]) -> LabeledOperator:
    d = prod(dims)
    return LabeledOperator.square(np.eye(d) / d, dims)


def ghz(n: int) -> LabeledOperator:
    if n < 2:
        raise ValueError("GHZ state needs n >= 2")
    vec = np.zeros(2**n)
    vec[0] = vec[-1] = 1 / np.sqrt(2)
    return LabeledOperator.ket(vec, (2,) * n)


def w_state(n: int) -> LabeledOperator:
    if n < 2:
        raise ValueError("W state needs n >= 2")
    vec = np.zeros(2**n)
    for i in range(n):
        vec[1 << i] = 1 / np.sqrt(n)
    return LabeledOperator.ket(vec, (2,) * n)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _check_dims(dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise ValueError(f"invalid dimensions {dims}")
    return dims


def random_pure(dims: Sequence[int], seed=None) -> LabeledOperator:
    """Haar-random ket (normalized complex Gaussian vector)."""
    dims = _check_dims(dims)
    rng = _rng(seed)
    vec = rng.normal(size=prod(dims)) + 1j * rng.normal(size=prod(dims))
    return LabeledOperator.ket(vec / np.linalg.norm(vec), dims)


def random_density(dims: Sequence[int], rank: int | None = None, seed=None) -> LabeledOperator:
    """``G G^dag / tr`` with ``G`` a complex Gaussian ``d x rank`` matrix."""
    dims = _check_dims(dims)
    d = prod(dims)
    rank = d if rank is None else int(rank)
    if not 1 <= rank <= d:
        raise ValueError(f"rank must be in 1..{d}, got {rank}")
    rng = _rng(seed)
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return LabeledOperator.square(rho / np.trace(rho).real, dims)


def random_product(dims: Sequence[int], seed=None, rank: int | None = None) -> LabeledOperator:
    """Tensor product of independent random densities, one per subsystem."""
    dims = _check_dims(dims)
    rng = _rng(seed)
    return kron([random_density((d,), rank=None if rank is None else min(rank, d), seed=rng) for d in dims])


def purify(rho: LabeledOperator, tol: float = 1e-12) -> LabeledOperator:
    """Ket on ``dims + (r,)`` whose marginal is ``rho``; ``r`` is the numerical rank."""
    rho.check_density()
    vals, vecs = hermitian_eigs(rho)
    keep = vals > tol
    vals, vecs = vals[keep], vecs[:, keep]
    r = len(vals)
    psi = np.zeros((rho.shape[0], r), dtype=complex)
    for i in range(r):
        psi[:, i] = np.sqrt(vals[i]) * vecs[:, i]
    return LabeledOperator.ket(psi.reshape(-1), rho.dims + (r,))
