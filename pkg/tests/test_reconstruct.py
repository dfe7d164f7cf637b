import numpy as np
import pytest

from gradstyle import ReconstructionProblem, Tensor, apply_system, dense_oracle_solve, reconstruct
from gradstyle.errors import NumericError
from gradstyle.gradients import forward_gradients, grad_h, grad_v

from oracles import inner


def random_problem(rng, H=8, W=8, lam=10.0, **kw):
    return ReconstructionProblem(
        image=rng.random((3, H, W)).astype(np.float32),
        grad_x=rng.uniform(-1, 1, (3, H, W)).astype(np.float32),
        grad_y=rng.uniform(-1, 1, (3, H, W)).astype(np.float32),
        lam=lam, **kw,
    )


def residuals(p, s):
    s64 = s.astype(np.float64)
    gres = (np.sum((grad_h(s64) - p.grad_x) ** 2)
            + np.sum((grad_v(s64) - p.grad_y) ** 2))
    cres = np.sum((s64 - p.image) ** 2)
    return gres, cres


def objective(p, s):
    gres, cres = residuals(p, s)
    return cres + p.lam * gres


def test_lambda_zero_returns_input_exactly(rng):
    p = random_problem(rng, lam=0.0)
    out = reconstruct(p)
    assert np.array_equal(out, p.image)


def test_consistent_gradients_return_input(rng):
    img = rng.random((3, 10, 12)).astype(np.float32)
    field = forward_gradients(Tensor(img[None])).data[0]
    for lam in (0.0, 1.0, 10.0, 100.0):
        p = ReconstructionProblem(image=img, grad_x=field[3:], grad_y=field[:3], lam=lam)
        out = reconstruct(p)
        assert np.abs(out - img).max() < 1e-6, lam


def test_cg_matches_dense_oracle(rng):
    for lam in (0.0, 1.0, 10.0, 100.0):
        for _ in range(4):
            p = random_problem(rng, lam=lam)
            cg = reconstruct(p)
            dense = dense_oracle_solve(p)
            assert np.abs(cg - dense).max() < 1e-5, lam


def test_dense_1x1_returns_input(rng):
    p = ReconstructionProblem(
        image=rng.random((3, 1, 1)).astype(np.float32),
        grad_x=np.zeros((3, 1, 1), np.float32),
        grad_y=np.zeros((3, 1, 1), np.float32),
        lam=123.0,
    )
    assert np.allclose(dense_oracle_solve(p), p.image, atol=1e-7)
    assert np.allclose(reconstruct(p), p.image, atol=1e-7)


def test_dense_size_limit(rng):
    p = ReconstructionProblem(
        image=np.zeros((3, 80, 80), np.float32),
        grad_x=np.zeros((3, 80, 80), np.float32),
        grad_y=np.zeros((3, 80, 80), np.float32),
    )
    with pytest.raises(ValueError, match="dense"):
        dense_oracle_solve(p)


def test_apply_system_lambda_zero_is_identity(rng):
    u = rng.standard_normal((3, 6, 6)).astype(np.float32)
    assert np.array_equal(apply_system(u, 0.0), u)


def test_apply_system_symmetric(rng):
    for _ in range(10):
        u = rng.standard_normal((3, 7, 5))
        v = rng.standard_normal((3, 7, 5))
        lhs = inner(apply_system(u, 10.0), v)
        rhs = inner(u, apply_system(v, 10.0))
        assert abs(lhs - rhs) <= 1e-5 * max(abs(lhs), abs(rhs))


def test_apply_system_positive_definite(rng):
    for _ in range(10):
        u = rng.standard_normal((3, 6, 6))
        quad = inner(apply_system(u, 10.0), u)
        assert quad >= inner(u, u) - 1e-9


def test_gradient_residual_monotone_in_lambda(rng):
    # larger lambda trades color fidelity for gradient fidelity
    for _ in range(5):
        p1 = random_problem(rng, lam=1.0, clamp=False, cg_tol=1e-10)
        results = []
        for lam in (1.0, 10.0, 100.0):
            p = ReconstructionProblem(image=p1.image, grad_x=p1.grad_x, grad_y=p1.grad_y,
                                      lam=lam, clamp=False, cg_tol=1e-10)
            results.append(residuals(p, reconstruct(p)))
        (g1, c1), (g2, c2), (g3, c3) = results
        assert g1 >= g2 - 1e-7 and g2 >= g3 - 1e-7
        assert c1 <= c2 + 1e-7 and c2 <= c3 + 1e-7


def test_smoothing_increases_with_lambda_flat_targets(rng):
    # zero target gradients: larger lambda flattens the image more
    img = rng.random((3, 8, 8)).astype(np.float32)
    zero = np.zeros_like(img)
    prev = None
    for lam in (1.0, 10.0, 100.0):
        p = ReconstructionProblem(image=img, grad_x=zero, grad_y=zero, lam=lam, clamp=False)
        s = dense_oracle_solve(p).astype(np.float64)
        smoothness = np.sum(grad_h(s) ** 2) + np.sum(grad_v(s) ** 2)
        if prev is not None:
            assert smoothness <= prev + 1e-9
        prev = smoothness


def test_solution_minimizes_objective(rng):
    p = random_problem(rng, lam=10.0, clamp=False)
    s = reconstruct(p)
    base = objective(p, s)
    assert base <= objective(p, p.image) + 1e-6
    for _ in range(10):
        perturbed = s + rng.standard_normal(s.shape).astype(np.float32) * 0.01
        assert base <= objective(p, perturbed) + 1e-9


def test_cg_and_dense_agree_unclamped(rng):
    p = random_problem(rng, lam=10.0, clamp=False)
    assert np.abs(reconstruct(p) - dense_oracle_solve(p)).max() < 1e-5


def test_nonconvergence_raises(rng):
    p = random_problem(rng, lam=100.0, cg_max_iter=2)
    with pytest.raises(NumericError, match="did not converge"):
        reconstruct(p)


def test_shape_validation(rng):
    with pytest.raises(ValueError, match="must match"):
        ReconstructionProblem(
            image=np.zeros((3, 4, 4), np.float32),
            grad_x=np.zeros((3, 4, 5), np.float32),
            grad_y=np.zeros((3, 4, 4), np.float32),
        )


def test_output_clamped_by_default(rng):
    p = random_problem(rng, lam=10.0)
    out = reconstruct(p)
    assert out.min() >= 0.0 and out.max() <= 1.0