import numpy as np
import pytest

from qmsdecomp import models
from qmsdecomp.algebra import OperatorAlgebra, algebra_equal
from qmsdecomp.asymptotics import (
    cesaro_mean,
    decay_check_time,
    decay_constant,
    ergodic_projection,
    invariant_state_block_structure,
    invariant_states,
    predual_ergodic_projection,
    reversible_algebra,
    search_faithful_state,
    spectral_projector,
    spectral_split,
    stable_space,
    verify_nt_equals_mr,
    z_nt_annihilated,
)
from qmsdecomp.errors import NoFaithfulState, NonSemisimplePeripheral, NotInvariant
from qmsdecomp.generator import QmsModel, build_generator, df_subalgebra
from qmsdecomp.linalg import Superoperator, expm, vec

from conftest import E11, E12, E21, E22, cplx

ZERO2 = QmsModel(np.zeros((2, 2)), (np.zeros((2, 2)),))


def spectrum_multiset(split):
    return sorted((round(z.real, 8), round(z.imag, 8), k) for z, k in split.spectrum())


def in_span(cols, x):
    v = vec(x)
    return np.linalg.norm(v - cols @ (cols.conj().T @ v)) <= 1e-8


def test_dephasing_spectrum_and_subspaces():
    s = spectral_split(build_generator(models.dephasing()))
    assert spectrum_multiset(s) == [(-2.0, 0.0, 2), (0.0, 0.0, 2)]
    assert all(abs(z - w) <= 1e-9 for z, w in zip(sorted(np.diag(s.schur_t).real), [-2, -2, 0, 0]))
    assert s.peripheral_subspace.shape[1] == 2 and s.stable_subspace.shape[1] == 2
    assert in_span(s.peripheral_subspace, E11) and in_span(s.peripheral_subspace, E22)
    assert in_span(s.stable_subspace, E12) and in_span(s.stable_subspace, E21)
    assert s.schur_residual() <= 1e-8


def test_amplitude_damping_spectrum():
    s = spectral_split(build_generator(models.amplitude_damping()))
    assert spectrum_multiset(s) == [(-1.0, 0.0, 1), (-0.5, 0.0, 2), (0.0, 0.0, 1)]


def test_zero_generator_spectrum():
    s = spectral_split(build_generator(ZERO2))
    assert spectrum_multiset(s) == [(0.0, 0.0, 4)]
    assert s.peripheral_subspace.shape[1] == 4
    assert stable_space(s).dimension == 0


def test_spectrum_in_left_half_plane(rng):
    for d in (2, 3, 4):
        s = spectral_split(build_generator(models.random_model(d, rng)))
        assert s.max_real_part <= 1e-8


def test_spectral_projector_is_riesz(rng):
    a = cplx(rng, 5, 5)
    p = spectral_projector(a, lambda z: z.real > 0)
    assert np.linalg.norm(p @ p - p) <= 1e-8
    assert np.linalg.norm(p @ a - a @ p) <= 1e-8
    assert round(np.trace(p).real) == int(np.sum(np.linalg.eigvals(a).real > 0))


def test_invariant_states_examples():
    st = invariant_states(build_generator(models.dephasing()))
    assert st.faithful and np.allclose(st.state, np.eye(2) / 2) and np.isclose(st.min_eigenvalue, 0.5)
    assert st.dimension == 2
    st = invariant_states(build_generator(models.amplitude_damping()))
    assert not st.faithful and np.allclose(st.state, E11)
    st = invariant_states(build_generator(ZERO2))
    assert np.allclose(st.state, np.eye(2) / 2) and st.dimension == 4


def test_faithful_search_agrees_with_ergodic_state(rng):
    # grid/gradient search is an independent route to the same decision
    for m in (models.dephasing(), models.amplitude_damping(), models.detailed_balance_model(3, rng, sparse=True),
              models.tensor_block_model(np.diag([0.5, -0.5]))):
        g = build_generator(m)
        st = invariant_states(g)
        sigma, lam = search_faithful_state(st.basis, rng=rng)
        assert (lam >= 1e-9) == st.faithful
        assert np.linalg.norm(g.predual(sigma)) <= 1e-8
        assert np.isclose(np.trace(sigma).real, 1)


def test_reversible_algebra_examples():
    mr = reversible_algebra(spectral_split(build_generator(models.dephasing())))
    assert algebra_equal(mr.algebra, OperatorAlgebra.diagonal(2)) and mr.span_is_algebra
    mr = reversible_algebra(spectral_split(build_generator(models.amplitude_damping())))
    assert mr.dimension == 1
    mr = reversible_algebra(spectral_split(build_generator(models.unitary_only())))
    assert mr.dimension == 4 and mr.span_dimension == 4


def test_reversible_algebra_rejects_jordan_block():
    # a non-semigroup "generator" with a Jordan block at 0 exercises the guard
    from qmsdecomp.generator import GeneratorPair

    n = np.zeros((4, 4), dtype=complex)
    n[0, 3] = 1.0
    sup = Superoperator(2, n)
    s = spectral_split(GeneratorPair(sup, sup, sup, Superoperator.zero(2)))
    with pytest.raises(NonSemisimplePeripheral):
        reversible_algebra(s, strict=True)
    assert not reversible_algebra(s, strict=False).semisimple


def test_stable_space_examples():
    st = stable_space(spectral_split(build_generator(models.dephasing())))
    assert st.dimension == 2 and st.t_check == 10.0 and st.certified
    t10 = expm(build_generator(models.dephasing()).heisenberg, 10.0)(E12)
    assert abs(np.linalg.norm(t10) - np.exp(-20)) <= 1e-6 * np.exp(-20)
    assert stable_space(spectral_split(build_generator(models.amplitude_damping()))).dimension == 3


def test_decay_check_time():
    assert decay_check_time(2.0) == 10.0
    assert decay_check_time(0.5) == 40.0
    assert decay_check_time(np.inf) == 10.0


def test_decay_envelope(rng):
    for d in (2, 3):
        m = models.random_model(d, rng)
        g = build_generator(m)
        s = spectral_split(g)
        k = decay_constant(s)
        q = s.stable_subspace
        for t in (0.0, 0.5, 2.0, 8.0):
            flow = expm(g.heisenberg, t).matrix
            worst = np.linalg.norm(flow @ q, 2)
            assert worst <= k * np.exp(-s.gap * t / 2) * (1 + 1e-8)


def test_ergodic_projection_examples():
    e = ergodic_projection(build_generator(models.dephasing()))
    x = np.array([[1, 2], [3, 4]], dtype=complex)
    assert np.allclose(e(x), np.diag([1, 4]))
    assert np.allclose(ergodic_projection(build_generator(ZERO2)).matrix, np.eye(4))
    e = ergodic_projection(build_generator(models.unitary_only()))
    assert np.allclose(e(x), np.diag([1, 4]))


def test_ergodic_projection_consistency(rng):
    g = build_generator(models.random_model(3, rng))
    e = ergodic_projection(g).matrix
    assert np.linalg.norm(e @ e - e) <= 1e-8
    for t in (0.5, 3.0):
        tt = expm(g.heisenberg, t).matrix
        assert np.linalg.norm(e @ tt - e) <= 1e-8
        assert np.linalg.norm(tt @ e - e) <= 1e-8


def test_cesaro_mean_dephasing_closed_form():
    g = build_generator(models.dephasing())
    for t in (1.0, 10.0, 1000.0):
        c = cesaro_mean(g, t)
        assert np.isclose(c(E12)[0, 1], (1 - np.exp(-2 * t)) / (2 * t), rtol=1e-10, atol=1e-14)
        assert np.allclose(c(E11), E11)


def test_cesaro_mean_converges_like_one_over_t(rng):
    g = build_generator(models.random_model(3, rng))
    e = ergodic_projection(g).matrix
    errs = [np.linalg.norm(cesaro_mean(g, t).matrix - e, 2) for t in (50.0, 400.0)]
    assert errs[1] <= errs[0] / 4


def test_verify_nt_equals_mr_examples(rng):
    v = verify_nt_equals_mr(models.dephasing())
    assert v.faithful and v.equal and v.blocks == ((1, 1), (1, 1)) and v.status == "pass"
    v = verify_nt_equals_mr(models.amplitude_damping())
    assert not v.faithful and v.status == "skipped" and v.equal
    for _ in range(5):
        v = verify_nt_equals_mr(models.detailed_balance_model(3, rng))
        assert v.status == "pass"


def test_state_block_structure_dephasing():
    blocks, off = invariant_state_block_structure(models.dephasing(), np.diag([0.3, 0.7]))
    assert off == 0.0
    got = sorted((round(b.weight, 12), round(np.linalg.matrix_rank(b.state))) for b in blocks)
    assert got == [(0.3, 1), (0.7, 1)]


def test_state_block_structure_errors():
    with pytest.raises(NotInvariant):
        invariant_state_block_structure(models.dephasing(), np.array([[0.5, 0.5], [0.5, 0.5]]))
    with pytest.raises(NoFaithfulState):
        invariant_state_block_structure(models.amplitude_damping(), E11)


def test_state_block_structure_single_block():
    m = models.unitary_only(np.kron(np.diag([1.0, 2.0]), np.eye(2)))
    blocks, off = invariant_state_block_structure(m, np.eye(4) / 4)
    assert off <= 1e-12 and sum(b.weight for b in blocks) == pytest.approx(1.0, abs=1e-12)


def test_center_of_nt_is_fixed(rng):
    for m in (models.dephasing(), models.direct_sum_model(), models.detailed_balance_model(4, rng, sparse=True)):
        g = build_generator(m)
        assert z_nt_annihilated(g, df_subalgebra(m)) <= 1e-8


def test_predual_projection_gives_invariant_states(rng):
    g = build_generator(models.detailed_balance_model(3, rng))
    v = cplx(rng, 3)
    rho = predual_ergodic_projection(g)(np.outer(v, v.conj()) / np.vdot(v, v).real)
    assert np.linalg.norm(g.predual(rho)) <= 1e-10
    assert np.isclose(np.trace(rho).real, 1)
