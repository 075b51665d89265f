import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dral.errors import UnsupportedError
from dral.gp import GpState
from dral.kernel import KernelKind, KernelSpec, eval_kernel, gram, sigma_lipschitz_constant
from oracles import looped_gram, matern_bessel

KERNELS = [
    KernelSpec("se", lengthscale=0.7),
    KernelSpec("matern", lengthscale=0.4, nu=1.5),
    KernelSpec("matern", lengthscale=1.3, nu=2.5, output_scale=0.6),
    KernelSpec("linear"),
]


class TestEval:
    def test_se_zero_distance(self):
        assert eval_kernel(KernelSpec("se", lengthscale=1.0), [0.3, -0.2], [0.3, -0.2]) == 1.0

    def test_se_known_value(self):
        k = eval_kernel(KernelSpec("se", lengthscale=1.0), [0.0, 0.0], [1.0, 1.0])
        assert k == pytest.approx(math.exp(-1), abs=1e-15)

    def test_matern52_against_bessel_form(self):
        # frozen from the modified-Bessel definition: 0.5239941088318205
        k = eval_kernel(KernelSpec("matern", lengthscale=1.0, nu=2.5), [0.0], [1.0])
        assert k == pytest.approx(0.5239941088318205, abs=1e-14)

    @pytest.mark.parametrize("nu", [1.5, 2.5])
    @pytest.mark.parametrize("r", [0.05, 0.3, 1.0, 2.7])
    def test_matern_closed_form_matches_bessel(self, nu, r):
        spec = KernelSpec("matern", lengthscale=0.8, nu=nu, output_scale=0.9)
        assert eval_kernel(spec, [0.0, 0.0], [r, 0.0]) == pytest.approx(matern_bessel(r, 0.8, nu, 0.9), rel=1e-12)

    def test_linear_is_dot_product(self):
        assert eval_kernel(KernelSpec("linear"), [1.0, 2.0], [3.0, -1.0]) == 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            eval_kernel(KernelSpec("se"), [0.0, 1.0], [0.0])

    @given(
        x=arrays(np.float64, 3, elements=st.floats(-3, 3)),
        z=arrays(np.float64, 3, elements=st.floats(-3, 3)),
        idx=st.integers(0, len(KERNELS) - 1),
    )
    def test_symmetric_and_bounded(self, x, z, idx):
        spec = KERNELS[idx]
        assert eval_kernel(spec, x, z) == eval_kernel(spec, z, x)
        if spec.is_stationary:
            assert eval_kernel(spec, x, z) <= spec.output_scale <= 1.0
            assert eval_kernel(spec, x, x) == spec.output_scale


class TestSpec:
    def test_output_scale_clamped(self):
        assert KernelSpec("se", output_scale=3.0).output_scale == 1.0

    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            KernelSpec("se", lengthscale=0.0)
        with pytest.raises(UnsupportedError):
            KernelSpec("matern", nu=0.5)
        with pytest.raises(ValueError):
            KernelSpec("periodic")

    def test_kind_aliases(self):
        assert KernelSpec("squared_exponential").kind is KernelKind.SE
        assert KernelSpec("RBF").kind is KernelKind.SE


class TestGram:
    def test_single_point(self):
        assert gram(KernelSpec("se"), [[0.1, 0.2]]).tolist() == [[1.0]]

    def test_duplicate_point(self):
        assert gram(KernelSpec("se"), [[0.5], [0.5]]).tolist() == [[1.0, 1.0], [1.0, 1.0]]

    @pytest.mark.parametrize("spec", KERNELS, ids=lambda s: f"{s.kind.value}-{s.nu}")
    def test_matches_looped_eval(self, spec, rng):
        P = rng.uniform(0, 1, size=(5, 3))
        np.testing.assert_allclose(gram(spec, P), looped_gram(spec, P), rtol=0, atol=1e-12)

    @pytest.mark.parametrize("spec", KERNELS, ids=lambda s: f"{s.kind.value}-{s.nu}")
    def test_symmetric_psd(self, spec, rng):
        P = rng.uniform(-1, 1, size=(40, 2))
        K = gram(spec, P)
        assert np.array_equal(K, K.T)
        assert np.linalg.eigvalsh(K).min() >= -1e-8
        np.linalg.cholesky(K + 1e-8 * np.eye(len(K)))

    def test_empty(self):
        with pytest.raises(ValueError):
            gram(KernelSpec("se"), np.zeros((0, 2)))


class TestLipschitz:
    def test_values(self):
        assert sigma_lipschitz_constant(KernelSpec("linear")) == 1.0
        assert sigma_lipschitz_constant(KernelSpec("se", lengthscale=2.0)) == pytest.approx(0.70711, abs=1e-5)
        assert sigma_lipschitz_constant(KernelSpec("matern", lengthscale=1.0, nu=2.5)) == pytest.approx(1.82574, abs=1e-5)

    @pytest.mark.parametrize("spec", KERNELS[:3], ids=lambda s: f"{s.kind.value}-{s.nu}")
    def test_posterior_std_is_lipschitz(self, spec, rng):
        # 20 random observations; 10^4 random pairs drawn from a shared point cloud
        pts = rng.uniform(-1, 1, size=(400, 2))
        obs = rng.choice(400, size=20, replace=False)
        state = GpState.build(spec, 1e-2, pts, obs)
        sd = np.sqrt(state.var_vector())
        a = rng.integers(400, size=10_000)
        b = rng.integers(400, size=10_000)
        lhs = np.abs(sd[a] - sd[b])
        rhs = sigma_lipschitz_constant(spec) * np.abs(pts[a] - pts[b]).sum(axis=1)
        assert np.all(lhs <= rhs + 1e-12)


@settings(max_examples=30)
@given(st.integers(2, 25), st.sampled_from(KERNELS[:3]), st.integers(0, 2**31))
def test_gram_plus_jitter_factorizes(n, spec, seed):
    P = np.random.default_rng(seed).uniform(-2, 2, size=(n, 2))
    np.linalg.cholesky(gram(spec, P) + 1e-8 * np.eye(n))
