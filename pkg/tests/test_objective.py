import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import commutation_dense, dense_cell_matrix
from nfwave.correlation import correlation_matrix
from nfwave.model import (
    ArrayConfig,
    DesiredBeampattern,
    WaveformMatrix,
    WislProfile,
    build_grid,
    build_wisl_profile,
    vec,
)
from nfwave.nearfield import beampattern_point, build_steering_context, dft_vector
from nfwave.objective import (
    BeampatternOperator,
    CombinedOperator,
    WislOperator,
    apply_J,
    build_wisl_gram,
    estimate_lambda_max,
    kahan_sum,
    lag_kernels,
)
from nfwave.solver import init_waveform


def random_vec(dim, rng):
    return rng.standard_normal(dim) + 1j * rng.standard_normal(dim)


def flat_desired(ctx, value=0.0):
    grid = ctx.grid
    return DesiredBeampattern(np.full((grid.num_angles, grid.num_ranges, grid.num_bins), value))


class TestKahanSum:
    def test_matches_fsum_on_mixed_magnitudes(self):
        rng = np.random.default_rng(0)
        vals = np.concatenate([rng.normal(size=500) * 1e12, rng.normal(size=500)])
        rng.shuffle(vals)
        out = kahan_sum(vals.reshape(-1, 1), axis=0)[0]
        assert np.isclose(out, math.fsum(vals), rtol=1e-15)

    def test_reduces_along_requested_axis(self):
        arr = np.arange(24.0).reshape(2, 3, 4)
        assert np.allclose(kahan_sum(arr, axis=1), arr.sum(axis=1))


class TestLagKernels:
    def test_literal_reconstruction(self):
        prof = WislProfile.uniform(3)
        kernels = lag_kernels(prof)
        assert kernels.shape == (6, 3, 3)
        for k in range(6):
            expected = np.outer(prof.harmonics[k], prof.harmonics[k].conj()) * prof.weight_matrix
            assert np.allclose(kernels[k], expected, atol=1e-15)

    def test_hermitian_for_symmetric_weights(self):
        rng = np.random.default_rng(1)
        half = rng.uniform(0.1, 2.0, size=4)
        w = np.concatenate([half[::-1][:-1], half])  # symmetric lags, N=4
        prof = build_wisl_profile(w, 4)
        for kern in lag_kernels(prof):
            assert np.allclose(kern, kern.conj().T, atol=1e-14)


class TestApplyG:
    def test_zero_response_vector_maps_to_zero(self, tiny_context):
        bp = BeampatternOperator(tiny_context, flat_desired(tiny_context))
        # columns that cancel in the projection for the chosen cell
        a = tiny_context.alpha[0, 0, 0]
        fu = dft_vector(2, 0)
        g = vec(np.outer(fu.conj(), a))
        rng = np.random.default_rng(3)
        v = random_vec(4, rng)
        v -= g * (g.conj() @ v) / (g.conj() @ g)  # orthogonalize against g
        out = bp.apply_G(v, (0, 0, 0))
        assert np.allclose(out, 0.0, atol=1e-12)

    def test_quadratic_form_equals_beampattern(self, tiny_context):
        bp = BeampatternOperator(tiny_context, flat_desired(tiny_context))
        rng = np.random.default_rng(5)
        for _ in range(20):
            x = WaveformMatrix(np.exp(2j * np.pi * rng.random((2, 2))))
            v = x.vec()
            for cell in np.ndindex(2, 2, 2):
                quad = np.real(np.vdot(v, bp.apply_G(v, cell)))
                assert np.isclose(quad, beampattern_point(x, tiny_context, *cell), rtol=1e-12)

    def test_matches_dense_factorization(self, tiny_context):
        bp = BeampatternOperator(tiny_context, flat_desired(tiny_context))
        rng = np.random.default_rng(7)
        for cell in np.ndindex(2, 2, 2):
            k1, k2, u = cell
            dense = dense_cell_matrix(tiny_context.alpha[k1, k2, u], dft_vector(2, u), 2, 2)
            for _ in range(5):
                v = random_vec(4, rng)
                assert np.allclose(bp.apply_G(v, cell), dense @ v, rtol=1e-12, atol=1e-12)

    def test_rejects_wrong_length(self, tiny_context):
        bp = BeampatternOperator(tiny_context, flat_desired(tiny_context))
        with pytest.raises(ValueError):
            bp.apply_G(np.ones(3), (0, 0, 0))


class TestApplyGhat:
    def test_quartic_identity_many_random_waveforms(self, small_context):
        rng = np.random.default_rng(11)
        grid = small_context.grid
        desired = DesiredBeampattern(rng.uniform(0.0, 2.0, size=(2, 2, 4)))
        bp = BeampatternOperator(small_context, desired)
        for _ in range(100):
            x = WaveformMatrix(np.exp(2j * np.pi * rng.random((4, 2))))
            v = x.vec()
            quad = np.real(np.vdot(v, bp.apply_Ghat(x, v)))
            direct = sum(
                (desired.values[c] - beampattern_point(x, small_context, *c)) ** 2
                for c in np.ndindex(2, 2, 4)
            )
            assert np.isclose(quad + bp.desired_power, direct, rtol=1e-8)

    def test_zero_target_gives_nonnegative_power_sum(self, small_context):
        bp = BeampatternOperator(small_context, flat_desired(small_context, 0.0))
        x = init_waveform(4, 2, seed=3)
        v = x.vec()
        quad = np.real(np.vdot(v, bp.apply_Ghat(x, v)))
        direct = sum(beampattern_point(x, small_context, *c) ** 2 for c in np.ndindex(2, 2, 4))
        assert quad >= 0.0
        assert np.isclose(quad, direct, rtol=1e-10)

    def test_single_cell_reproduces_scalar_expansion(self):
        cfg = ArrayConfig(2, 1, 1.0e9, 2.0e8)
        ctx = build_steering_context(cfg, build_grid(1, 1, 1))
        desired = DesiredBeampattern(np.full((1, 1, 1), 1.7))
        bp = BeampatternOperator(ctx, desired)
        x = init_waveform(1, 2, seed=1)
        v = x.vec()
        p = beampattern_point(x, ctx, 0, 0, 0)
        quad = np.real(np.vdot(v, bp.apply_Ghat(x, v)))
        assert np.isclose(quad, (p - 1.7) ** 2 - 1.7**2, rtol=1e-12)

    def test_matches_dense_operator(self, tiny_context):
        rng = np.random.default_rng(13)
        desired = DesiredBeampattern(rng.uniform(0.0, 1.0, size=(2, 2, 2)))
        bp = BeampatternOperator(tiny_context, desired)
        x = WaveformMatrix(np.exp(2j * np.pi * rng.random((2, 2))))
        xv = x.vec()
        dense = np.zeros((4, 4), dtype=complex)
        for cell in np.ndindex(2, 2, 2):
            k1, k2, u = cell
            g_dense = dense_cell_matrix(tiny_context.alpha[k1, k2, u], dft_vector(2, u), 2, 2)
            gx = g_dense @ xv
            dense += np.outer(gx, xv.conj()) @ g_dense - 2.0 * desired.values[cell] * g_dense
        for _ in range(10):
            v = random_vec(4, rng)
            assert np.allclose(bp.apply_Ghat(x, v), dense @ v, rtol=1e-10, atol=1e-10)

    def test_quadratic_form_is_real(self, small_context):
        rng = np.random.default_rng(17)
        desired = DesiredBeampattern(rng.uniform(0.0, 3.0, size=(2, 2, 4)))
        bp = BeampatternOperator(small_context, desired)
        x = init_waveform(4, 2, seed=5)
        for _ in range(10):
            v = random_vec(8, rng)
            val = np.vdot(v, bp.apply_Ghat(x, v))
            assert abs(val.imag) <= 1e-10 * max(abs(val), 1.0)


class TestWislGram:
    def test_zero_matrix_gives_zero_gram(self):
        prof = WislProfile.uniform(3)
        q = build_wisl_gram(np.zeros((3, 2), dtype=complex), prof)
        assert np.allclose(q, 0.0)

    def test_scalar_hand_value(self):
        # N=1: both kernels equal [[1]], so Q = 2 |x|^2 = 2
        prof = WislProfile.uniform(1)
        q = build_wisl_gram(WaveformMatrix(np.ones((1, 1), dtype=complex)), prof)
        assert np.allclose(q, [[2.0]])

    def test_hermitian_and_psd(self):
        prof = WislProfile.uniform(6)
        x = init_waveform(6, 2, seed=9)
        q = build_wisl_gram(x, prof)
        norm = np.linalg.norm(q)
        assert np.linalg.norm(q - q.conj().T) <= 1e-12 * norm
        eigs = np.linalg.eigvalsh(0.5 * (q + q.conj().T))
        assert eigs.min() >= -1e-8 * norm


class TestApplyJ:
    def test_identity_gram_is_identity_map(self):
        rng = np.random.default_rng(19)
        v = random_vec(12, rng)
        assert np.allclose(apply_J(np.eye(4), v), v)

    def test_quadratic_form_matches_direct_frobenius_sums(self):
        for n, m in [(2, 1), (4, 2), (6, 3)]:
            prof = WislProfile.uniform(n)
            x = init_waveform(n, m, seed=n + m)
            q = build_wisl_gram(x, prof)
            v = x.vec()
            quad = np.real(np.vdot(v, apply_J(q, v)))
            kernels = lag_kernels(prof)
            direct = sum(
                np.linalg.norm(x.values.conj().T @ kern @ x.values, "fro") ** 2 for kern in kernels
            )
            assert np.isclose(quad, direct, rtol=1e-10)

    def test_matches_dense_kronecker(self):
        rng = np.random.default_rng(23)
        prof = WislProfile.uniform(2)
        x = init_waveform(2, 2, seed=2)
        q = build_wisl_gram(x, prof)
        dense = np.kron(np.eye(2), q)
        for _ in range(10):
            v = random_vec(4, rng)
            assert np.allclose(apply_J(q, v), dense @ v, rtol=1e-12, atol=1e-12)

    def test_literal_transpose_factorization_matches(self):
        # dense build following the (I kron X^T K*)^T (I kron X^H K) layout
        prof = WislProfile.uniform(2)
        x = init_waveform(2, 2, seed=6)
        kernels = lag_kernels(prof)
        dense = np.zeros((4, 4), dtype=complex)
        for kern in kernels:
            left = np.kron(np.eye(2), x.values.T @ kern.conj()).T
            right = np.kron(np.eye(2), x.values.conj().T @ kern)
            dense += left @ right
        q = build_wisl_gram(x, prof)
        assert np.allclose(dense, np.kron(np.eye(2), q), atol=1e-12)

    def test_rejects_mismatched_vector(self):
        with pytest.raises(ValueError):
            apply_J(np.eye(3), np.ones(4))


class TestSpectralCorrelationIdentity:
    @pytest.mark.parametrize("n,m", [(2, 1), (4, 2), (5, 3), (8, 3)])
    def test_uniform_weights(self, n, m):
        x = init_waveform(n, m, seed=n * 10 + m)
        op = WislOperator(WislProfile.uniform(n))
        quad = op.quad_form(x)
        r = correlation_matrix(x)
        direct = float(np.sum(np.abs(r) ** 2))
        assert np.isclose(quad, 2 * n * direct, rtol=1e-8)

    @given(seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=15, deadline=None)
    def test_general_weights(self, seed):
        rng = np.random.default_rng(seed)
        n, m = 4, 2
        w = rng.uniform(0.0, 2.0, size=2 * n - 1)
        x = init_waveform(n, m, seed)
        op = WislOperator(build_wisl_profile(w, n))
        quad = op.quad_form(x)
        r = correlation_matrix(x)
        direct = float(np.sum(w[None, None, :] ** 2 * np.abs(r) ** 2))
        assert np.isclose(quad, 2 * n * direct, rtol=1e-8)

    def test_quad_form_agrees_with_gram_route(self):
        n, m = 6, 2
        prof = WislProfile.uniform(n)
        x = init_waveform(n, m, seed=44)
        op = WislOperator(prof)
        v = x.vec()
        via_gram = np.real(np.vdot(v, apply_J(op.gram(x), v)))
        assert np.isclose(op.quad_form(x), via_gram, rtol=1e-10)


class TestCombinedOperator:
    def _setup(self, gamma, seed=21):
        cfg = ArrayConfig(2, 4, 1.0e9, 2.0e8)
        ctx = build_steering_context(cfg, build_grid(2, 2, 4))
        rng = np.random.default_rng(seed)
        desired = DesiredBeampattern(rng.uniform(0.0, 2.0, size=(2, 2, 4)))
        bp = BeampatternOperator(ctx, desired)
        sidelobe = WislOperator(WislProfile.uniform(4))
        x = init_waveform(4, 2, seed)
        return CombinedOperator(bp, sidelobe, x, gamma, 2.0), bp, sidelobe, x

    def test_gamma_one_is_pure_matching(self):
        op, bp, _, x = self._setup(1.0)
        rng = np.random.default_rng(1)
        v = random_vec(8, rng)
        assert np.array_equal(op.apply(v), bp.apply_Ghat(x, v))

    def test_gamma_zero_is_pure_sidelobe(self):
        op, _, sidelobe, x = self._setup(0.0)
        rng = np.random.default_rng(2)
        v = random_vec(8, rng)
        assert np.array_equal(op.apply(v), apply_J(sidelobe.gram(x), v))

    def test_linearity(self):
        op, *_ = self._setup(0.4)
        rng = np.random.default_rng(3)
        v1, v2 = random_vec(8, rng), random_vec(8, rng)
        a, b = 1.3 - 0.2j, -0.7 + 2.1j
        lhs = op.apply(a * v1 + b * v2)
        rhs = a * op.apply(v1) + b * op.apply(v2)
        assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-10)

    def test_loading_identity_for_unimodular_vectors(self):
        op, *_ = self._setup(0.5)
        est = estimate_lambda_max(op.apply, op.dim)
        op.lambda_max = est.value
        rng = np.random.default_rng(4)
        for _ in range(10):
            v = np.exp(2j * np.pi * rng.random(8))
            loaded = np.real(np.vdot(v, op.apply_loaded(v)))
            plain = np.real(np.vdot(v, op.apply(v)))
            assert np.isclose(loaded, op.lambda_max * 8 - plain, rtol=1e-10)
            assert np.isclose(loaded + plain, op.lambda_max * 8, rtol=1e-12)

    def test_momentum_tracks_loading_scale(self):
        op, *_ = self._setup(0.5)
        op.lambda_max = 10.0
        assert np.isclose(op.momentum, 0.5 * 2.0 * 10.0)

    def test_rejects_bad_gamma(self):
        with pytest.raises(ValueError):
            self._setup(1.5)


class TestEstimateLambdaMax:
    def test_identity_operator(self):
        est = estimate_lambda_max(lambda v: v, 6, tol=1e-8)
        assert est.converged
        assert np.isclose(est.value, 1.05, rtol=1e-6)

    def test_known_diagonal_spectrum(self):
        diag = np.array([1.0, 2.0, 3.0])
        est = estimate_lambda_max(lambda v: diag * v, 3, tol=1e-10, max_iters=2000)
        assert est.converged
        assert np.isclose(est.value, 3.0 * 1.05, rtol=1e-5)

    def test_random_hermitian_psd_against_dense_solver(self):
        rng = np.random.default_rng(31)
        a = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        mat = a @ a.conj().T
        est = estimate_lambda_max(lambda v: mat @ v, 8, tol=1e-9, max_iters=5000)
        top = np.linalg.eigvalsh(mat)[-1]
        assert est.converged
        assert abs(est.value / 1.05 - top) <= 1e-6 * top

    def test_negative_dominant_spectrum_recovers_signed_top(self):
        diag = np.array([-5.0, 1.0, 0.5])
        est = estimate_lambda_max(lambda v: diag * v, 3, tol=1e-10, max_iters=5000)
        assert est.converged
        assert np.isclose(est.value, 1.0 * 1.05, rtol=1e-4)

    def test_non_hermitian_map_uses_symmetrization(self):
        mat = np.array([[1.0, 1.0], [0.0, 1.0]])
        est = estimate_lambda_max(
            lambda v: mat @ v, 2, adjoint_matvec=lambda v: mat.T @ v, tol=1e-10, max_iters=2000
        )
        top = np.linalg.eigvalsh(0.5 * (mat + mat.T))[-1]
        assert np.isclose(est.value / 1.05, top, rtol=1e-6)

    def test_non_convergence_widens_margin_and_flags(self):
        diag = np.array([1.0, 0.999999])
        est = estimate_lambda_max(lambda v: diag * v, 2, tol=1e-14, max_iters=3)
        assert not est.converged
        assert est.value >= 1.4  # last Rayleigh estimate times 1.5

    def test_warm_start_is_used(self):
        diag = np.array([1.0, 5.0])
        v0 = np.array([0.0, 1.0], dtype=complex)  # already the top eigenvector
        est = estimate_lambda_max(lambda v: diag * v, 2, v0=v0, tol=1e-9)
        assert est.converged
        assert est.iterations <= 3
