import numpy as np
import pytest

from qmsdecomp import models
from qmsdecomp.algebra import wedderburn
from qmsdecomp.errors import BlockMismatch, NoFaithfulState
from qmsdecomp.generator import QmsModel, df_subalgebra
from qmsdecomp.structure import (
    build_df_da_generators,
    df_action_residual,
    extract_block_data,
    factorization_residuals,
    reversible_block_structure,
    verify_central_block_restriction,
    verify_component_triviality,
    verify_df_action,
)


def data_for(m, rng=None):
    return extract_block_data(m, wedderburn(df_subalgebra(m), rng=rng))


def test_tensor_block_extraction():
    n0 = np.diag([0.5, -0.5])
    m = models.tensor_block_model(n0)
    data = data_for(m)
    assert data.decomposition.blocks == ((2, 2),)
    assert data.max_residual <= 1e-9
    b = data.blocks[0]
    # the tensor frame is fixed only up to a unitary on each factor; compare invariants
    assert np.allclose(np.linalg.eigvalsh(b.H), [-0.5, 0.5])
    assert np.allclose(np.linalg.eigvalsh(b.N0), np.linalg.eigvalsh(n0 + 1.5 * np.eye(2)))
    assert np.isclose(np.linalg.norm(b.N[0]), 1.0)
    assert np.isclose(np.trace(b.H), 0)


def test_reconstruction_is_exact():
    m = models.tensor_block_model(np.diag([0.5, -0.5]))
    rec = data_for(m).reconstruct()
    assert np.linalg.norm(rec.H - m.H) <= 1e-9
    assert np.linalg.norm(rec.lindblads[0] - m.lindblads[0]) <= 1e-9


def test_extraction_strict_mismatch():
    m = models.amplitude_damping()
    wrong = wedderburn(df_subalgebra(models.dephasing()))
    with pytest.raises(BlockMismatch):
        extract_block_data(m, wrong, strict=True)
    assert extract_block_data(m, wrong).max_residual > 0.1


def test_df_da_commute_and_factorize():
    m = models.tensor_block_model(np.diag([0.5, -0.5]))
    data = data_for(m)
    ldf, lda = build_df_da_generators(data)
    assert np.linalg.norm(ldf.matrix @ lda.matrix - lda.matrix @ ldf.matrix) <= 1e-8
    fr = factorization_residuals(m, data)
    assert fr.sum_residual <= 1e-8 and max(fr.factorization.values()) <= 1e-8


def test_df_da_commute_even_for_a_wrong_split(rng):
    # (+) H_i (x) 1 and (+) 1 (x) N commute by construction, so the strict check is a numerical guard
    from qmsdecomp.algebra import OperatorAlgebra
    m = models.random_model(4, rng)
    a = OperatorAlgebra.from_span([np.kron(e, np.eye(2)) for e in np.eye(4).reshape(4, 2, 2)])
    data = extract_block_data(m, wedderburn(a))
    assert data.max_residual > 0.1
    ldf, lda = build_df_da_generators(data)
    assert np.linalg.norm(ldf.matrix @ lda.matrix - lda.matrix @ ldf.matrix) <= 1e-10


def test_df_action_identities():
    m = models.tensor_block_model(np.diag([0.5, -0.5]))
    data = data_for(m)
    assert verify_df_action(m, data)
    assert df_action_residual(m, data, ts=(0.0,)) <= 1e-12


def test_component_triviality_examples():
    m = models.tensor_block_model(np.diag([0.5, -0.5]))
    assert verify_component_triviality(data_for(m)) == [True]
    assert verify_component_triviality(data_for(models.dephasing())) == [True, True]
    # a block whose N-data is zero: its own N is everything
    degenerate = QmsModel(np.zeros((4, 4)), (np.zeros((4, 4)),))
    from qmsdecomp.algebra import OperatorAlgebra
    dec = wedderburn(OperatorAlgebra.from_span([np.kron(e, np.eye(2)) for e in np.eye(4).reshape(4, 2, 2)]))
    assert verify_component_triviality(extract_block_data(degenerate, dec)) == [False]


def test_central_block_restriction_examples():
    vs = verify_central_block_restriction(models.dephasing())
    assert [v.rank for v in vs] == [1, 1] and all(v.passed() for v in vs)
    vs = verify_central_block_restriction(models.tensor_block_model())
    assert len(vs) == 1 and vs[0].passed()
    vs = verify_central_block_restriction(models.direct_sum_model())
    assert all(v.passed() for v in vs) and sum(v.rank for v in vs) == 4


def test_reversible_block_structure_examples():
    rb = reversible_block_structure(models.dephasing())
    assert rb.coincides and rb.pure_point
    assert rb.data.decomposition.blocks == rb.nt_data.decomposition.blocks
    rb = reversible_block_structure(models.unitary_only())
    assert rb.data.decomposition.blocks == ((2, 1),)
    assert np.allclose(sorted(np.linalg.eigvalsh(rb.data.blocks[0].H)), [-0.5, 0.5])
    with pytest.raises(NoFaithfulState):
        reversible_block_structure(models.amplitude_damping())


def test_round_trip_constructed_models(rng):
    for _ in range(8):
        sig = models.random_signature(rng, max_dim=8)
        c = models.block_model(sig, rng)
        m = c.model
        data = data_for(m, rng)
        assert sorted(data.decomposition.blocks) == sorted(sig)
        rec = data.reconstruct()
        assert np.linalg.norm(rec.H - m.H) <= 1e-9
        assert max(np.linalg.norm(a - b) for a, b in zip(rec.lindblads, m.lindblads)) <= 1e-9
        assert max(factorization_residuals(m, data).factorization.values()) <= 1e-8
        flags = verify_component_triviality(data)
        for i, (k, mm) in enumerate(data.decomposition.blocks):
            j = [n for n, s in enumerate(sig) if s == (k, mm)][0]
            if c.component_trivial(j):
                assert flags[i]


def test_gauge_invariance_of_reconstruction(rng):
    c = models.block_model(((2, 2),), rng)
    data = data_for(c.model, rng)
    b = data.blocks[0]
    assert abs(np.trace(b.H)) <= 1e-12
    # shifting c between H_i and N0_i leaves the reconstruction unchanged
    from qmsdecomp.structure import BlockComponents, BlockLindbladData
    shifted = BlockLindbladData(data.decomposition, (BlockComponents(b.k, b.m, b.H + 0.3 * np.eye(2),
                                                                     b.N0 - 0.3 * np.eye(2), b.N),), {})
    assert np.allclose(shifted.reconstruct().H, data.reconstruct().H)
