import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from broadcast_bell.kit import (
    maximally_mixed,
    pauli,
    random_density,
    random_product,
    random_pure,
    singlet,
    werner_state,
)
from broadcast_bell.network import behavior, honest_model, mixture_behavior, transpose_model
from broadcast_bell.selftest import extract_branches
from broadcast_bell.tensor import LabeledOperator, kron, partial_transpose
from broadcast_bell.witness import (
    HONEST_WEIGHT,
    NotNPTError,
    branch_contributions,
    broadcast_functional,
    expectation,
    honest_witness_value,
    npt_witness,
    pauli_expansion,
    pt_min_eig,
    separable_value,
    verify_honest_identity,
    werner_sweep,
)
import oracle

SWAP = LabeledOperator.square(np.eye(4)[[0, 2, 1, 3]], (2, 2))


def npt_sources(count):
    """Seeded random two-qubit densities that have an NPT witness."""
    out, seed = [], 0
    while len(out) < count:
        rho = random_density((2, 2), rank=1 + seed % 3, seed=seed)
        if pt_min_eig(rho) < -1e-6:
            out.append(rho)
        seed += 1
    return out


def test_singlet_witness_is_half_swap():
    wit = npt_witness(singlet())
    assert wit.W.max_abs_diff(SWAP / 2) <= 1e-12
    assert np.isclose(expectation(wit.W, singlet().projector()), -0.5)
    assert np.isclose(wit.certified_value, -0.5)


def test_ppt_input_raises():
    with pytest.raises(NotNPTError):
        npt_witness(werner_state(1 / 3))
    with pytest.raises(NotNPTError):
        npt_witness(maximally_mixed((2, 2)))


def test_pauli_expansion_roundtrip():
    exp = pauli_expansion(SWAP / 2)
    assert np.allclose(exp.c, np.diag([1, 1, 1, 1]) / 4)
    assert exp.pauli_sum().max_abs_diff(SWAP / 2) <= 1e-12
    assert exp.projector_sum().max_abs_diff(SWAP / 2) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31))
def test_pauli_and_projector_sums_reconstruct(seed):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    W = LabeledOperator.square(g + g.conj().T, (2, 2))
    exp = pauli_expansion(W)
    assert exp.pauli_sum().max_abs_diff(W) <= 1e-12
    assert exp.projector_sum().max_abs_diff(W) <= 1e-12


def test_projector_coefficients_route_identity_through_setting_3():
    exp = pauli_expansion(LabeledOperator.square(np.eye(4), (2, 2)))
    nonzero = np.argwhere(np.abs(exp.w) > 0)
    assert all(x == 2 and y == 2 for _, _, x, y in nonzero)


def test_honest_value_singlet():
    wit = npt_witness(singlet())
    value = broadcast_functional(behavior(honest_model(singlet())), wit)
    assert abs(value - (-1 / 32)) <= 1e-12
    assert abs(value - oracle.broadcast_functional(singlet().projector().data, wit.W.data)) <= 1e-12


def test_honest_value_maximally_mixed():
    rho = maximally_mixed((2, 2))
    W = LabeledOperator.square(np.diag([1.0, -0.5, 2.0, 0.25]), (2, 2))
    value, quarter = verify_honest_identity(rho, W)
    assert abs(value - HONEST_WEIGHT * W.trace().real / 4) <= 1e-12
    assert abs(quarter - W.trace().real / 16) <= 1e-12


def test_honest_value_werner_half():
    rho = werner_state(0.5)
    wit = npt_witness(rho)
    assert np.isclose(expectation(wit.W, rho), (1 - 3 * 0.5) / 4)
    value, _ = verify_honest_identity(rho, wit.W)
    assert abs(value - (1 - 3 * 0.5) / 64) <= 1e-12


@pytest.mark.parametrize("rho", npt_sources(20), ids=lambda _: "")
def test_honest_identity_random_npt(rho):
    wit = npt_witness(rho)
    b = behavior(honest_model(rho))
    value = broadcast_functional(b, wit)
    assert abs(value - honest_witness_value(rho, wit.W)) <= 1e-9
    assert abs(value - oracle.broadcast_functional(rho.data, wit.W.data)) <= 1e-9
    assert value < 0


@pytest.mark.parametrize("seed", range(5))
def test_honest_identity_random_hermitian(seed):
    rng = np.random.default_rng(100 + seed)
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    W = LabeledOperator.square(g + g.conj().T, (2, 2))
    rho = random_density((2, 2), seed=seed)
    value, quarter = verify_honest_identity(rho, W)
    assert abs(value - quarter / 4) <= 1e-9
    assert abs(value - oracle.broadcast_functional(rho.data, W.data)) <= 1e-9


@pytest.mark.parametrize("cond", [(0, 1), (2, 3), (3, 3)])
def test_conditioning_on_other_outcomes(cond):
    rho = random_density((2, 2), seed=8)
    wit = npt_witness(singlet())
    value = broadcast_functional(behavior(honest_model(rho)), wit, conditioning=cond)
    corr = kron([pauli(cond[0]), pauli(cond[1])])
    assert abs(value - HONEST_WEIGHT * expectation(wit.W, corr @ rho @ corr)) <= 1e-12
    assert abs(value - oracle.broadcast_functional(rho.data, wit.W.data, cond)) <= 1e-12


def test_werner_sweep_threshold():
    grid = [round(0.01 * k, 2) for k in range(101)]
    rows = werner_sweep(grid)
    for r in rows:
        assert r.detected == (r.v > 1 / 3)
        assert np.isclose(r.min_pt_eig, (1 - 3 * r.v) / 4, atol=1e-12)
    by_v = {r.v: r for r in rows}
    assert abs(by_v[1.0].I - (-1 / 32)) <= 1e-10
    assert abs(by_v[0.4].I - (1 - 3 * 0.4) / 64) <= 1e-12
    assert by_v[0.33].I is None and not by_v[0.33].detected


def test_separable_positivity_products():
    witnesses = [npt_witness(rho).W for rho in npt_sources(5)]
    for seed in range(200):
        sigma = random_product((2, 2), seed=seed)
        for W in witnesses:
            assert min(separable_value(W, sigma).values()) >= -1e-9


def test_separable_positivity_local_unitary_orbit():
    W = npt_witness(werner_state(0.9)).W
    for seed in range(200):
        a, b = random_pure((2,), seed=2 * seed), random_pure((2,), seed=2 * seed + 1)
        sigma = kron([a, b]).projector()
        assert min(separable_value(W, sigma).values()) >= -1e-9


def test_branch_decomposition_honest_and_mixture():
    rho = random_density((2, 2), seed=21)
    wit = npt_witness(singlet())
    model = honest_model(rho)
    value = broadcast_functional(behavior(model), wit)
    dec = extract_branches(rho, [(1.0, (0, 0))], outcome=(0, 0))
    contrib = branch_contributions(dec.branches, wit.W)
    assert abs(contrib[(0, 0)] - value) <= 1e-12
    assert all(abs(v) <= 1e-12 for k, v in contrib.items() if k != (0, 0))

    p = 0.3
    mixed = mixture_behavior([(p, model), (1 - p, transpose_model(model))])
    mixed_value = broadcast_functional(mixed, wit)
    assert abs(mixed_value - value) <= 1e-12
    dec = extract_branches(rho, [(p, (0, 0)), (1 - p, (1, 1))], outcome=(0, 0))
    contrib = branch_contributions(dec.branches, wit.W)
    assert abs(sum(contrib.values()) - mixed_value) <= 1e-12
    assert abs(contrib[(0, 0)] - p * value) <= 1e-12
    assert abs(contrib[(1, 1)] - (1 - p) * value) <= 1e-12


def test_witness_requires_two_qubits():
    with pytest.raises(ValueError):
        npt_witness(random_density((2, 3), seed=0))
    with pytest.raises(ValueError):
        pauli_expansion(LabeledOperator.square(np.eye(9), (3, 3)))


def test_witness_is_pt_of_rank_one_projector():
    rho = npt_sources(1)[0]
    W = npt_witness(rho).W
    back = partial_transpose(W, [1])
    vals = np.linalg.eigvalsh(back.data)
    assert np.allclose(vals, [0, 0, 0, 1], atol=1e-12)
