import math

import numpy as np
import pytest

from shiftadd.errors import ContractError
from shiftadd.factors import (
    Factor,
    TransformChain,
    apply,
    catalog_b,
    catalog_hadamard4,
    catalog_o,
    factor_matrix,
    materialize,
)
from shiftadd.scoring import (
    SweepContext,
    b_scores,
    b_scores_grid,
    block_score,
    build_tables,
    o_local_optimality,
    o_scores,
    o_scores_grid,
    project_pow2,
    scaling_init_score,
    shear_init_scores,
)
from fractions import Fraction


def dense_objective(y, mat, x):
    return float(((y - mat @ x) ** 2).sum())


def embed(n, idx, blk):
    m = np.eye(n)
    m[np.ix_(idx, idx)] = blk
    return m


def quad_fit_minimum(fn):
    """Exact vertex of a quadratic sampled at -1, 0, 1 (independent oracle)."""
    f_m, f_0, f_p = fn(-1.0), fn(0.0), fn(1.0)
    a = 0.5 * (f_p + f_m) - f_0
    b = 0.5 * (f_p - f_m)
    t = -b / (2.0 * a)
    return t, fn(t)


@pytest.fixture(params=[(4, 24, 0), (6, 24, 1), (4, 24, 2)])
def tables(request):
    n, num, seed = request.param
    rng = np.random.default_rng(seed)
    y = rng.normal(size=(n, num))
    x = rng.normal(size=(n, num))
    return y, x, build_tables(y, x)


class TestBuildTables:
    def test_self_pair(self):
        rng = np.random.default_rng(0)
        y = rng.normal(size=(3, 9))
        t = build_tables(y, y)
        np.testing.assert_allclose(t.z, t.w)
        assert abs(t.baseline) <= 1e-9 * t.norm_y_sq

    def test_identity_vs_zero(self):
        t = build_tables(np.eye(3), np.zeros((3, 3)))
        np.testing.assert_array_equal(t.z, np.zeros((3, 3)))
        assert t.baseline == 3.0

    def test_baseline_matches_dense(self, tables):
        y, x, t = tables
        assert abs(t.baseline - ((y - x) ** 2).sum()) <= 1e-9 * (1 + t.baseline)


class TestBlockScores:
    def test_identity_variant_is_zero(self, tables):
        _, _, t = tables
        assert b_scores(t, 0, 1)[15] == 0.0

    def test_sign_flip_closed_forms(self, tables):
        _, _, t = tables
        c = b_scores(t, 0, 2)
        assert c[10] == pytest.approx(4 * t.z[2, 2], rel=1e-12)
        assert c[11] == pytest.approx(4 * t.z[0, 0], rel=1e-12)

    def test_all_variants_match_dense(self, tables):
        y, x, t = tables
        n = y.shape[0]
        for i in range(n - 1):
            for j in range(i + 1, n):
                c = b_scores(t, i, j)
                for v, blk in enumerate(catalog_b()):
                    dense = dense_objective(y, embed(n, (i, j), blk), x)
                    assert abs(t.baseline + c[v] - dense) <= 1e-8 * (1 + abs(dense))

    def test_grid_matches_pointwise(self, tables):
        _, _, t = tables
        grid = b_scores_grid(t.z)
        n = t.n
        for i in range(n - 1):
            for j in range(i + 1, n):
                np.testing.assert_allclose(grid[:, i, j], b_scores(t, i, j), rtol=1e-12)

    def test_rejects_bad_pair(self, tables):
        _, _, t = tables
        with pytest.raises(ContractError):
            b_scores(t, 2, 2)


class TestGenericBlockScore:
    def test_identity_block(self, tables):
        _, _, t = tables
        assert block_score(t, (0, 1, 2), np.eye(3)) == 0.0

    def test_reproduces_pair_scores(self, tables):
        _, _, t = tables
        for i, j in ((0, 1), (1, 3), (0, 2)):
            c = b_scores(t, i, j)
            for v, blk in enumerate(catalog_b()):
                assert abs(block_score(t, (i, j), blk) - c[v]) <= 1e-12 * (1 + abs(c[v]))

    def test_four_index_blocks_match_dense(self, tables):
        y, x, t = tables
        n = y.shape[0]
        rng = np.random.default_rng(42)
        cat = catalog_hadamard4()
        for _ in range(12):
            idx = tuple(sorted(rng.choice(n, size=4, replace=False).tolist()))
            blk = cat[int(rng.integers(len(cat)))]
            dense = dense_objective(y, embed(n, idx, blk), x)
            score = block_score(t, idx, blk)
            assert abs(t.baseline + score - dense) <= 1e-8 * (1 + abs(dense))

    def test_rejects_non_orthonormal(self, tables):
        _, _, t = tables
        with pytest.raises(ContractError):
            block_score(t, (0, 1), np.array([[1.0, 1.0], [0.0, 1.0]]))


class TestUnnormalizedScores:
    def test_all_patterns_match_dense(self, tables):
        y, x, t = tables
        n = y.shape[0]
        for i in range(n - 1):
            for j in range(i + 1, n):
                h = o_scores(t, i, j)
                for v, blk in enumerate(catalog_o()):
                    dense = dense_objective(y, embed(n, (i, j), blk), x)
                    assert abs(t.baseline + h[v] - dense) <= 1e-8 * (1 + abs(dense))

    def test_identity_tables_spot_value(self):
        # pattern [[1, 1], [1, -1]] against Z = W = I gives 6 by hand
        t = build_tables(np.eye(2), np.eye(2))
        h = o_scores(t, 0, 1)
        v = next(
            k for k, blk in enumerate(catalog_o())
            if np.array_equal(blk, [[1.0, 1.0], [1.0, -1.0]])
        )
        assert h[v] == pytest.approx(6.0, abs=1e-12)

    def test_zero_codes(self):
        y = np.random.default_rng(1).normal(size=(3, 6))
        t = build_tables(y, np.zeros((3, 6)))
        np.testing.assert_allclose(o_scores(t, 0, 2), np.zeros(8), atol=1e-12)

    def test_grid_matches_pointwise(self, tables):
        _, _, t = tables
        grid = o_scores_grid(t.z, t.w)
        for i in range(t.n - 1):
            for j in range(i + 1, t.n):
                np.testing.assert_allclose(grid[:, i, j], o_scores(t, i, j), rtol=1e-12)


class TestLocalOptimality:
    def test_self_codes(self):
        y = np.random.default_rng(2).normal(size=(3, 8))
        ok, witness = o_local_optimality(y, y)
        assert ok and witness is None

    def test_zero_row_violates(self):
        rng = np.random.default_rng(3)
        y = rng.normal(size=(3, 8))
        x = y + 0.1 * rng.normal(size=(3, 8))
        x[1, :] = 0.0
        ok, witness = o_local_optimality(y, x)
        assert not ok
        assert witness[1] == 1  # the zero row is the violating target

    def test_certificate_implies_no_single_block_improves(self):
        rng = np.random.default_rng(4)
        found = 0
        for _ in range(200):
            n = int(rng.integers(3, 6))
            x = rng.normal(size=(n, 12))
            y = x + 0.05 * rng.normal(size=(n, 12))
            ok, _ = o_local_optimality(y, x)
            if not ok:
                continue
            found += 1
            t = build_tables(y, x)
            for i in range(n - 1):
                for j in range(i + 1, n):
                    assert o_scores(t, i, j).min() >= -1e-10
        assert found > 10  # the construction must actually exercise the branch


class TestShearInitScores:
    def test_hand_example(self):
        y = np.array([[1.0, 0.0], [1.0, 1.0]])  # rows e1 and e1+e2
        x = np.eye(2)
        t = build_tables(y, x)
        d1, d2, b_opt, c_opt = shear_init_scores(t, 0, 1)
        assert b_opt == pytest.approx(1.0)
        assert d1 == pytest.approx(-1.0)
        mat = factor_matrix(Factor("SHEAR", (0, 1), coeff=b_opt, side="lower"), 2)
        assert dense_objective(y, mat, x) == pytest.approx(t.baseline + d1, abs=1e-12)

    def test_stationary_case(self):
        # make Z[1,0] equal W[0,1] so the lower side cannot improve
        x = np.array([[1.0, 0.0, 2.0], [0.0, 1.0, 1.0]])
        y = x.copy()
        t = build_tables(y, x)
        d1, _, b_opt, _ = shear_init_scores(t, 0, 1)
        assert d1 == 0.0 and b_opt == 0.0

    def test_matches_scalar_minimization(self, tables):
        y, x, t = tables
        n = y.shape[0]
        for i in range(n - 1):
            for j in range(i + 1, n):
                d1, d2, b_opt, c_opt = shear_init_scores(t, i, j)
                for side, score, coeff in (
                    ("lower", d1, b_opt),
                    ("upper", d2, c_opt),
                ):
                    def obj(c, side=side):
                        mat = factor_matrix(
                            Factor("SHEAR", (i, j), coeff=float(c), side=side), n
                        )
                        return dense_objective(y, mat, x)

                    c_star, f_star = quad_fit_minimum(obj)
                    assert coeff == pytest.approx(c_star, abs=1e-6 * (1 + abs(c_star)))
                    assert t.baseline + score == pytest.approx(
                        f_star, rel=1e-8, abs=1e-8
                    )

    def test_degenerate_row(self):
        y = np.random.default_rng(5).normal(size=(2, 4))
        x = np.zeros((2, 4))
        x[1, :] = 1.0
        t = build_tables(y, x)
        d1, d2, b_opt, c_opt = shear_init_scores(t, 0, 1)
        assert (d1, b_opt) == (0.0, 0.0)
        assert d2 <= 0.0


class TestScalingInitScore:
    def test_power_of_two_already(self):
        x = np.ones((1, 4))
        y = 2.0 * x
        t = build_tables(y, x)
        f, coeff = scaling_init_score(t, 0, power_of_two=True)
        assert coeff == 2.0

    def test_projection_of_three(self):
        x = np.ones((1, 4))
        y = 3.0 * x
        t = build_tables(y, x)
        f, coeff = scaling_init_score(t, 0, power_of_two=True)
        assert coeff == 4.0
        a_star = 3.0
        alpha = coeff / a_star
        assert abs(alpha - 1.0) <= abs(1.0 - a_star) / abs(a_star)
        assert f <= 0.0

    def test_identity_scaling(self):
        x = np.ones((1, 4))
        t = build_tables(x, x)
        f, coeff = scaling_init_score(t, 0, power_of_two=False)
        assert f == pytest.approx(0.0, abs=1e-12)
        assert coeff == pytest.approx(1.0)

    def test_degenerate(self):
        y = np.ones((2, 3))
        x = np.zeros((2, 3))
        t = build_tables(y, x)
        assert scaling_init_score(t, 0, power_of_two=True) == (0.0, 1.0)

    def test_matches_scalar_minimization(self, tables):
        y, x, t = tables
        n = y.shape[0]
        for i in range(n):
            f, coeff = scaling_init_score(t, i, power_of_two=False)

            def obj(a, i=i):
                mat = np.eye(n)
                mat[i, i] = a
                return dense_objective(y, mat, x)

            a_star, f_star = quad_fit_minimum(obj)
            assert coeff == pytest.approx(a_star, abs=1e-8 * (1 + abs(a_star)))
            assert t.baseline + f == pytest.approx(f_star, rel=1e-8)

    def test_pow2_score_matches_dense(self, tables):
        y, x, t = tables
        n = y.shape[0]
        for i in range(n):
            f, coeff = scaling_init_score(t, i, power_of_two=True)
            assert math.frexp(abs(coeff))[0] == 0.5
            mat = np.eye(n)
            mat[i, i] = coeff
            dense = dense_objective(y, mat, x)
            assert t.baseline + f == pytest.approx(dense, rel=1e-8)


def random_shear_chain(rng, n, m):
    factors = []
    for _ in range(m):
        i, j = sorted(rng.choice(n, size=2, replace=False).tolist())
        side = str(rng.choice(["lower", "upper"]))
        factors.append(
            Factor("SHEAR", (int(i), int(j)), coeff=float(rng.normal()), side=side)
        )
    return factors


class TestSweepContext:
    def test_identity_surroundings_reduce_to_init(self, tables):
        y, x, t = tables
        n = y.shape[0]
        ctx = SweepContext.build(y, np.eye(n), x)
        for i in range(n - 1):
            for j in range(i + 1, n):
                d1, d2, b_opt, c_opt = shear_init_scores(t, i, j)
                e1, e2, b_k, c_k = ctx.shear_update_scores(i, j)
                assert e1 == pytest.approx(-d1, rel=1e-10, abs=1e-12)
                assert e2 == pytest.approx(-d2, rel=1e-10, abs=1e-12)
                assert b_k == pytest.approx(b_opt, rel=1e-10, abs=1e-12)
                assert c_k == pytest.approx(c_opt, rel=1e-10, abs=1e-12)
        for i in range(n):
            f, coeff = scaling_init_score(t, i, power_of_two=False)
            g, a_k = ctx.scaling_update_score(i, power_of_two=False)
            assert g == pytest.approx(-f, rel=1e-10, abs=1e-12)
            assert a_k == pytest.approx(coeff, rel=1e-10, abs=1e-12)

    def test_inserted_factor_reduces_dense_objective(self):
        rng = np.random.default_rng(6)
        n, num, m = 4, 12, 3
        y = rng.normal(size=(n, num))
        x = rng.normal(size=(n, num))
        factors = random_shear_chain(rng, n, m)
        for k in range(m):
            left = materialize(
                TransformChain(n, tuple(factors[k + 1 :]), Fraction(0), "S")
            )
            codes = apply(
                TransformChain(n, tuple(factors[:k]), Fraction(0), "S"), x
            )
            ctx = SweepContext.build(y, left, codes)
            base = ctx.residual_sq
            for i in range(n - 1):
                for j in range(i + 1, n):
                    e1, e2, b_k, c_k = ctx.shear_update_scores(i, j)
                    for side, gain, coeff in (
                        ("lower", e1, b_k),
                        ("upper", e2, c_k),
                    ):
                        mat = factor_matrix(
                            Factor("SHEAR", (i, j), coeff=float(coeff), side=side), n
                        )
                        dense = dense_objective(y, left @ mat, codes)
                        assert dense == pytest.approx(
                            base - gain, rel=1e-8, abs=1e-8 * (1 + base)
                        )
            for i in range(n):
                g, a_k = ctx.scaling_update_score(i, power_of_two=False)
                mat = np.eye(n)
                mat[i, i] = a_k
                dense = dense_objective(y, left @ mat, codes)
                assert dense == pytest.approx(base - g, rel=1e-8, abs=1e-8 * (1 + base))

    def test_orthogonal_residual_gives_zero_gain(self):
        rng = np.random.default_rng(7)
        n, num = 3, 9
        x = rng.normal(size=(n, num))
        # target = codes, so the residual vanishes and every gain is zero
        ctx = SweepContext.build(x, np.eye(n), x)
        e1, e2, b_k, c_k = ctx.shear_update_scores(0, 2)
        assert (e1, e2) == pytest.approx((0.0, 0.0), abs=1e-18)

    def test_reconstruction_consistency(self):
        rng = np.random.default_rng(8)
        n, num = 4, 10
        y = rng.normal(size=(n, num))
        x = rng.normal(size=(n, num))
        factors = random_shear_chain(rng, n, 4)
        k = 2
        left = materialize(TransformChain(n, tuple(factors[k + 1 :]), Fraction(0), "S"))
        codes = apply(TransformChain(n, tuple(factors[:k]), Fraction(0), "S"), x)
        ctx = SweepContext.build(y, left, codes)
        np.testing.assert_allclose(
            ctx.residual, y - left @ codes, atol=1e-9 * (1 + np.abs(y).max())
        )


class TestStationarityAndPadding:
    def test_orthogonal_errors_zero_all_shear_scores(self):
        rng = np.random.default_rng(9)
        n, num = 4, 20
        x = rng.normal(size=(n, num))
        # error rows orthogonal to every code row
        g = rng.normal(size=(n, num))
        proj = x.T @ np.linalg.solve(x @ x.T, x @ g.T)
        e = g - proj.T
        assert np.abs(x @ e.T).max() < 1e-10
        y = x + e
        t = build_tables(y, x)
        for i in range(n - 1):
            for j in range(i + 1, n):
                d1, d2, _, _ = shear_init_scores(t, i, j)
                assert abs(d1) <= 1e-10 * (1 + t.norm_y_sq)
                assert abs(d2) <= 1e-10 * (1 + t.norm_y_sq)

    def test_padding_invariance(self, tables):
        y, x, t = tables
        pad = np.zeros((y.shape[0], 5))
        t2 = build_tables(np.hstack([y, pad]), np.hstack([x, pad]))
        np.testing.assert_allclose(b_scores(t, 0, 1), b_scores(t2, 0, 1), rtol=1e-12)
        np.testing.assert_allclose(o_scores(t, 0, 1), o_scores(t2, 0, 1), rtol=1e-12)
        assert shear_init_scores(t, 0, 1) == pytest.approx(
            shear_init_scores(t2, 0, 1)
        )
        assert scaling_init_score(t, 0, False) == pytest.approx(
            scaling_init_score(t2, 0, False)
        )


class TestPow2Projection:
    def test_round_half_away(self):
        assert project_pow2(3.0) == 4.0
        assert project_pow2(-3.0) == -4.0
        assert project_pow2(1.4) == 1.0
        assert project_pow2(0.3) == 0.25

    def test_rejects_zero(self):
        with pytest.raises(ContractError):
            project_pow2(0.0)
