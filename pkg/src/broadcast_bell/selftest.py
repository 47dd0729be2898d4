"""Extraction instruments, flag-labelled branch states and the partial-transpose toolkit.

The extraction instrument of a party applies its broadcast isometry, performs
the Bell measurement on ``(X1in, X1aux)``, keeps ``X2`` as the extracted qubit
``X2'`` and attaches a dephased flag qubit ``X2''``. The flag is set
constructively: ``|0>`` for an honest party, ``|1>`` for a transposed one.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import prod
from typing import Sequence

import numpy as np

from .kit import PAULI_LABELS, Instrument, basis_ket, effect_kraus, pauli, pauli_string
from .network import LOWER_OBSERVABLES, Behavior, PartyModel, honest_model, transpose_model
from .tensor import (
    ARITHMETIC_TOL,
    DimensionError,
    LabeledOperator,
    apply,
    hermitian_eigs,
    identity,
    kron,
    min_eigenvalue,
    partial_trace,
    partial_transpose,
    permute_subsystems,
)

#: branches whose trace does not exceed this are dropped from reports
PRUNE_TOL = 1e-9


class NotGMEError(ValueError):
    """Target state is not entangled across every bipartition."""


def flag_string(k: Sequence[int]) -> str:
    return "".join(str(int(b)) for b in k)


def _dephasing() -> list[LabeledOperator]:
    return [basis_ket([k]).projector() for k in (0, 1)]


def extraction_instrument(party: PartyModel, flag: int | None = None) -> Instrument:
    """Four-outcome instrument ``X -> (X2', X2'')`` of one party."""
    if party.isometry.dims_out != (2, 2, 2) or party.isometry.dims_in != (2,):
        raise DimensionError("extraction needs a party with isometry X -> X1in X1aux X2 on qubits")
    if 0 not in party.upper.settings or party.upper.outcome_counts[party.upper.settings.index(0)] != 4:
        raise DimensionError("extraction needs a four-outcome Bell measurement at setting 0")
    flag = int(party.transposed) if flag is None else flag
    flag_ket = basis_ket([flag])
    eye2 = identity((2,))
    branches = []
    for s in range(4):
        kraus = []
        for row in effect_kraus(party.upper.effect(0, s)):
            k = kron([row, eye2]) @ party.isometry
            k = kron([k, flag_ket])
            for d in _dephasing():
                kd = kron([eye2, d]) @ k
                if np.max(np.abs(kd.data)) > 1e-15:
                    kraus.append(kd)
        branches.append(tuple(kraus))
    return Instrument(tuple(branches))


def corrected_channel(instr: Instrument) -> tuple[LabeledOperator, ...]:
    """Kraus list of ``sum_s (sigma_s . sigma_s on X2') o E^(s)``."""
    if instr.num_outcomes != 4 or instr.output_dims != (2, 2):
        raise DimensionError("corrected_channel needs a four-outcome extraction instrument")
    out = []
    for s, branch in enumerate(instr.branches):
        corr = kron([pauli(s), identity((2,))])
        out.extend(corr @ k for k in branch)
    return tuple(out)


@dataclass(frozen=True, eq=False)
class BranchDecomposition:
    """Unnormalized states on the extracted qubits, keyed by flag pattern."""

    branches: dict[tuple[int, ...], LabeledOperator]
    num_parties: int
    validated: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self.validated:
            for k, rho in self.branches.items():
                if len(k) != self.num_parties:
                    raise DimensionError(f"flag {k} has wrong length")
                if min_eigenvalue(rho) < -ARITHMETIC_TOL:
                    raise ValueError(f"branch {flag_string(k)} is not positive")

    def traces(self, prune: float = PRUNE_TOL) -> dict[str, float]:
        out = {}
        for k in sorted(self.branches):
            t = self.branches[k].trace().real
            if t > prune:
                out[flag_string(k)] = t
        return out

    def total_trace(self) -> float:
        return float(sum(rho.trace().real for rho in self.branches.values()))

    def get(self, k: Sequence[int]) -> LabeledOperator:
        k = tuple(k)
        if k in self.branches:
            return self.branches[k]
        return LabeledOperator.square(np.zeros((2**self.num_parties,) * 2), (2,) * self.num_parties)


def _split_flags(state: LabeledOperator, n: int) -> dict[tuple[int, ...], LabeledOperator]:
    """Read off the blocks ``<k| state |k>`` of the dephased flag registers."""
    perm = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
    t = permute_subsystems(state, perm).data.reshape(2**n, 2**n, 2**n, 2**n)
    out = {}
    for idx, k in enumerate(itertools.product((0, 1), repeat=n)):
        out[k] = LabeledOperator.square(t[:, idx, :, idx], (2,) * n)
    return out


def extract_branches(
    source: LabeledOperator,
    model_mix: Sequence[tuple[float, Sequence[int]]],
    outcome: Sequence[int] | None = None,
) -> BranchDecomposition:
    """Apply the extraction maps of each mixture component and split by flags.

    Each component is ``(weight, flags)``: party ``i`` is transposed iff
    ``flags[i] == 1``. With ``outcome=None`` the Pauli-corrected channels are
    used; otherwise the uncorrected instrument branch ``outcome`` (one Bell
    outcome per party).
    """
    if source.is_ket:
        source = source.projector()
    weights = np.array([w for w, _ in model_mix], dtype=float)
    if len(weights) == 0 or np.any(weights < 0) or abs(weights.sum() - 1) > 1e-10:
        raise ValueError("mixture weights must be non-negative and sum to 1")
    n = source.num_subsystems
    total: dict[tuple[int, ...], LabeledOperator] = {}
    for weight, flags in model_mix:
        flags = tuple(int(f) for f in flags)
        if len(flags) != n:
            raise DimensionError(f"flags {flags} do not match {n} parties")
        if weight == 0:
            continue
        model = honest_model(source)
        if any(flags):
            model = transpose_model(model, [i for i, f in enumerate(flags) if f])
        maps = []
        for i, party in enumerate(model.parties):
            instr = extraction_instrument(party)
            maps.append(corrected_channel(instr) if outcome is None else instr.branches[outcome[i]])
        kraus = [kron(list(ks)) for ks in itertools.product(*maps)]
        out = apply(kraus, model.source, require_tp=outcome is None)
        for k, rho in _split_flags(out, n).items():
            total[k] = total[k] + weight * rho if k in total else weight * rho
    return BranchDecomposition(total, n)


def reconstruct(dec: BranchDecomposition) -> LabeledOperator:
    """``sum_k (rho^(k))^T_k``."""
    out = None
    for k, rho in dec.branches.items():
        term = partial_transpose(rho, [i for i, f in enumerate(k) if f])
        out = term if out is None else out + term
    return out


def purity(rho: LabeledOperator) -> float:
    return float((rho.data @ rho.data).trace().real)


def bipartitions(n: int):
    """Nonempty proper subsets up to complement (each cut listed once)."""
    for r in range(1, n // 2 + 1):
        for subset in itertools.combinations(range(n), r):
            if 2 * r == n and 0 not in subset:
                continue
            yield subset


def is_gme_pure(psi: LabeledOperator, tol: float = 1e-9) -> bool:
    rho = psi.projector() if psi.is_ket else psi
    n = rho.num_subsystems
    if n < 2:
        return False
    return all(purity(partial_trace(rho, cut)) < 1 - tol for cut in bipartitions(n))


@dataclass
class RefinementReport:
    passed: bool
    p: float
    offending: list[tuple[str, float]]
    message: str = ""


def pure_refinement_check(dec: BranchDecomposition, target: LabeledOperator, tol: float = 1e-9) -> RefinementReport:
    """Check ``branches = p psi (x) |0..0> + (1 - p) psi^T (x) |1..1>``."""
    psi = target.projector() if target.is_ket else target
    if abs(purity(psi) - 1) > tol:
        raise NotGMEError("target is not pure")
    if not is_gme_pure(psi, tol):
        raise NotGMEError("target is not entangled across every bipartition")
    n = dec.num_parties
    zeros, ones = (0,) * n, (1,) * n
    offending = []
    for k, rho in sorted(dec.branches.items()):
        t = rho.trace().real
        if k not in (zeros, ones) and t > tol:
            offending.append((flag_string(k), t))
    messages = []
    for k, ref in ((zeros, psi), (ones, psi.T)):
        rho = dec.get(k)
        t = rho.trace().real
        if t > tol and rho.max_abs_diff(t * ref) > tol:
            offending.append((flag_string(k), t))
            messages.append(f"branch {flag_string(k)} is not proportional to the expected state")
    if offending and not messages:
        messages.append("non-global transposition branches carry weight: " + ", ".join(f for f, _ in offending))
    p = dec.get(zeros).trace().real
    return RefinementReport(not offending, p, offending, "; ".join(messages))


# --- partial-transpose spectra ---------------------------------------------------


def schmidt_coefficients(psi: LabeledOperator, mask: Sequence[int]) -> np.ndarray:
    """Schmidt coefficients (descending) of a ket across ``mask | rest``."""
    n = psi.num_subsystems
    mask = sorted(mask)
    rest = [i for i in range(n) if i not in mask]
    ordered = permute_subsystems(psi, rest + mask)
    da = prod(psi.dims_out[i] for i in rest)
    db = prod(psi.dims_out[i] for i in mask)
    return np.linalg.svd(ordered.vector().reshape(da, db), compute_uv=False)


@dataclass
class PTSpectrum:
    min: float
    max: float
    min_vector: np.ndarray
    max_vector: np.ndarray
    top_second_schmidt: float | None
    top_is_product: bool | None


def pt_spectrum_report(state: LabeledOperator, mask: Sequence[int], tol: float = 1e-9) -> PTSpectrum:
    """Extreme eigenvalues of ``state^T_mask``; at eigenvalue 1 the top vector must be a product."""
    rho = state.projector() if state.is_ket else state
    rho.check_density()
    vals, vecs = hermitian_eigs(partial_transpose(rho, mask))
    top_second, top_product = None, None
    if vals[0] >= 1 - tol and 0 < len(mask) < rho.num_subsystems:
        coeffs = schmidt_coefficients(LabeledOperator.ket(vecs[:, 0], rho.dims), mask)
        top_second = float(coeffs[1]) if len(coeffs) > 1 else 0.0
        top_product = top_second <= 1e-6
    return PTSpectrum(float(vals[-1]), float(vals[0]), vecs[:, -1], vecs[:, 0], top_second, top_product)


def analytic_pt_spectrum(psi: LabeledOperator, mask: Sequence[int]) -> np.ndarray:
    """Spectrum of ``|psi><psi|^T_mask`` from Schmidt coefficients, descending.

    ``lambda_i^2`` for each Schmidt pair, ``+-lambda_i lambda_j`` for each pair
    ``i < j``, zeros on the complement of the supporting subspace.
    """
    lam = schmidt_coefficients(psi, mask)
    vals = list(lam**2)
    for i, j in itertools.combinations(range(len(lam)), 2):
        vals += [lam[i] * lam[j], -lam[i] * lam[j]]
    d = psi.shape[0]
    vals += [0.0] * (d - len(vals))
    return np.sort(np.array(vals))[::-1]


# --- tomography ------------------------------------------------------------------


def pauli_tomography(
    b: Behavior, s: Sequence[int], *, normalize: bool = True, correct: bool = False
) -> LabeledOperator:
    """Operator ``R`` with ``P(a, s | x, 0) = tr[(x_i Pi^(a_i|x_i)) R]``.

    Pauli coefficients are read from the lower-branch correlators; a party
    whose Pauli label is the identity has its outcomes summed at setting 1.
    ``normalize`` divides by ``P(s)``; ``correct`` undoes the teleportation
    byproduct ``sigma_s``.
    """
    n = b.num_sites // 2
    s = tuple(int(v) for v in s)
    if len(s) != n:
        raise ValueError(f"need one Bell outcome per party, got {s}")
    uppers = [b.site(f"{chr(65 + i)}1") for i in range(n)]
    lowers = [b.site(f"{chr(65 + i)}2") for i in range(n)]
    sub = b.marginal(lowers + uppers)
    try:
        zero = tuple(sub.setting_index(n + i, 0) for i in range(n))
    except KeyError as err:
        raise ValueError("behavior lacks the Bell-measurement setting") from err
    setting_of = {lab: x for x, lab in LOWER_OBSERVABLES.items()}
    missing = [lab for lab in ("X", "Y", "Z") if lab not in setting_of]
    if missing:
        raise ValueError(f"incomplete slice: no setting measures {missing}")
    d = 2**n
    out = np.zeros((d, d), dtype=complex)
    for labels in itertools.product(PAULI_LABELS, repeat=n):
        settings = [setting_of.get(lab, 1) for lab in labels]
        idx = tuple(sub.setting_index(i, x) for i, x in enumerate(settings))
        p = sub.table[idx + zero][(slice(0, 2),) * n + s]
        signs = np.ones((2,) * n)
        for i, lab in enumerate(labels):
            if lab != "I":
                shape = [1] * n
                shape[i] = 2
                signs = signs * np.array([1, -1]).reshape(shape)
        coeff = float(np.sum(signs * p))
        out += coeff * pauli_string(labels).data
    R = LabeledOperator.square(out / d, (2,) * n)
    if correct:
        corr = kron([pauli(v) for v in s])
        R = corr @ R @ corr
    if normalize:
        t = R.trace().real
        if t <= 0:
            raise ValueError(f"outcome {s} has zero probability")
        R = R / t
    return R
