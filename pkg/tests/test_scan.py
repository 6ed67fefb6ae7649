"""Recurrence correctness: closed forms, oracle equivalence, and the
direction-aware 2D composition properties."""

import numpy as np
import pytest

from plainscan import (
    ScanInputs,
    SsmCore,
    direction_aware_scan_2d,
    generate_continuous_paths,
    invert_path,
    selective_scan_fused,
    selective_scan_ref,
    zoh_discretize,
)
from plainscan.errors import NumericalError, ShapeError
from plainscan.ops import grad_check
from plainscan.paths import apply_path
from plainscan.tensor import Tensor


def _rand_core(rng, d, m, theta_scale=0.0):
    return SsmCore(
        A=Tensor(-np.abs(rng.standard_normal((d, m))) - 0.05),
        D=Tensor(rng.standard_normal(d)),
        Theta=Tensor(theta_scale * rng.standard_normal((5, m))),
    )


def _rand_inputs(rng, n, d, m):
    return ScanInputs(
        x=Tensor(rng.standard_normal((n, d))),
        B_seq=Tensor(rng.standard_normal((n, m))),
        C_seq=Tensor(rng.standard_normal((n, m))),
        Delta_seq=Tensor(rng.uniform(0.01, 1.5, (n, d))),
    )


# -- discretization -----------------------------------------------------


def test_zoh_closed_form_half_life():
    # dA = -ln 2: the state halves and B_bar = (1 - e^{dA}) * B / |A|
    A = Tensor(np.array([[-1.0]]))
    ab, bb = zoh_discretize(A, Tensor(np.array([1.0])), Tensor(np.array([np.log(2.0)])))
    assert abs(ab.data[0, 0] - 0.5) < 1e-10
    assert abs(bb.data[0, 0] - 0.5) < 1e-10


def test_zoh_closed_form_general():
    A = Tensor(np.array([[-2.0]]))
    ab, bb = zoh_discretize(A, Tensor(np.array([3.0])), Tensor(np.array([0.5])))
    assert abs(ab.data[0, 0] - np.exp(-1.0)) < 1e-10
    # B_bar = phi(-1) * 0.5 * 3 = (1 - e^{-1}) * 1.5
    assert abs(bb.data[0, 0] - (1.0 - np.exp(-1.0)) * 1.5) < 1e-10


def test_zoh_small_delta_limit():
    A = Tensor(np.array([[-1.0]]))
    ab, bb = zoh_discretize(A, Tensor(np.array([1.0])), Tensor(np.array([1e-12])))
    assert abs(ab.data[0, 0] - 1.0) < 2e-12  # A_bar -> 1
    assert abs(bb.data[0, 0] - 1e-12) < 1e-22  # B_bar -> Delta * B


def test_zoh_matches_exact_matrix_solution_per_channel():
    # for diagonal dynamics: B_bar = (A_bar - 1)/A * B, any Delta
    rng = np.random.default_rng(0)
    d, m = 3, 4
    A = -np.abs(rng.standard_normal((d, m))) - 0.1
    B = rng.standard_normal(m)
    delta = rng.uniform(0.05, 2.0, d)
    ab, bb = zoh_discretize(Tensor(A), Tensor(B), Tensor(delta))
    exact_ab = np.exp(delta[:, None] * A)
    exact_bb = (exact_ab - 1.0) / A * B[None, :]
    assert np.abs(ab.data - exact_ab).max() < 1e-12
    assert np.abs(bb.data - exact_bb).max() < 1e-12


def test_zoh_validation():
    A = Tensor(np.array([[-1.0]]))
    with pytest.raises(NumericalError, match="positive"):
        zoh_discretize(A, Tensor(np.array([1.0])), Tensor(np.array([0.0])))
    with pytest.raises(ShapeError):
        zoh_discretize(A, Tensor(np.array([1.0, 2.0])), Tensor(np.array([1.0])))


# -- 1D scans -----------------------------------------------------------


def test_reference_scan_hand_recurrence():
    # A_bar = B_bar = 1/2, unit input, C = 1, D = 0:
    # h: 1/2, 3/4, 7/8 -> y equals h
    core = SsmCore(
        A=Tensor(np.array([[-1.0]])),
        D=Tensor(np.array([0.0])),
        Theta=Tensor(np.zeros((5, 1))),
    )
    inp = ScanInputs(
        x=Tensor(np.ones((3, 1))),
        B_seq=Tensor(np.ones((3, 1))),
        C_seq=Tensor(np.ones((3, 1))),
        Delta_seq=Tensor(np.full((3, 1), np.log(2.0))),
    )
    y = selective_scan_ref(inp, core)
    assert np.abs(y.data.ravel() - [0.5, 0.75, 0.875]).max() < 1e-12


def test_skip_term():
    core = SsmCore(
        A=Tensor(np.array([[-1.0]])),
        D=Tensor(np.array([2.0])),
        Theta=Tensor(np.zeros((5, 1))),
    )
    inp = ScanInputs(
        x=Tensor(np.ones((2, 1))),
        B_seq=Tensor(np.ones((2, 1))),
        C_seq=Tensor(np.zeros((2, 1))),  # emission silenced
        Delta_seq=Tensor(np.full((2, 1), 0.3)),
    )
    for scan in (selective_scan_ref, selective_scan_fused):
        assert np.abs(scan(inp, core).data - 2.0).max() < 1e-14


def test_fused_equals_reference_random():
    rng = np.random.default_rng(1)
    for _ in range(25):
        n, d, m = rng.integers(1, 9), rng.integers(1, 5), rng.integers(1, 5)
        core = _rand_core(rng, int(d), int(m))
        inp = _rand_inputs(rng, int(n), int(d), int(m))
        yr = selective_scan_ref(inp, core)
        yf = selective_scan_fused(inp, core)
        assert np.abs(yr.data - yf.data).max() < 1e-10


def test_scan_linearity_in_x():
    # with B, C, Delta held fixed the scan is linear in x
    rng = np.random.default_rng(2)
    n, d, m = 12, 3, 4
    core = _rand_core(rng, d, m)
    b = Tensor(rng.standard_normal((n, m)))
    c = Tensor(rng.standard_normal((n, m)))
    delta = Tensor(rng.uniform(0.05, 1.0, (n, d)))
    x1 = rng.standard_normal((n, d))
    x2 = rng.standard_normal((n, d))

    def run(x):
        return selective_scan_fused(
            ScanInputs(x=Tensor(x), B_seq=b, C_seq=c, Delta_seq=delta), core
        ).data

    lhs = run(x1 + 2.5 * x2)
    rhs = run(x1) + 2.5 * run(x2)
    assert np.abs(lhs - rhs).max() < 1e-10


def test_scan_flags_nonfinite():
    core = SsmCore(
        A=Tensor(np.array([[-1.0]])),
        D=Tensor(np.array([2.0])),
        Theta=Tensor(np.zeros((5, 1))),
    )
    inp = ScanInputs(
        x=Tensor(np.full((2, 1), 1e308)),
        B_seq=Tensor(np.ones((2, 1))),
        C_seq=Tensor(np.ones((2, 1))),
        Delta_seq=Tensor(np.ones((2, 1))),
    )
    with np.errstate(over="ignore"):  # the overflow is the point
        with pytest.raises(NumericalError, match="step 0"):
            selective_scan_ref(inp, core)


def test_core_validation():
    with pytest.raises(NumericalError, match="negative"):
        SsmCore(
            A=Tensor(np.array([[1.0]])),
            D=Tensor(np.array([0.0])),
            Theta=Tensor(np.zeros((5, 1))),
        )
    with pytest.raises(ShapeError):
        SsmCore(
            A=Tensor(np.array([[-1.0]])),
            D=Tensor(np.array([0.0])),
            Theta=Tensor(np.zeros((4, 1))),
        )
    with pytest.raises(NumericalError, match="positive"):
        ScanInputs(
            x=Tensor(np.ones((2, 1))),
            B_seq=Tensor(np.ones((2, 1))),
            C_seq=Tensor(np.ones((2, 1))),
            Delta_seq=Tensor(np.zeros((2, 1))),
        )


# -- 2D direction-aware scan -------------------------------------------


def _rand_grids(rng, H, W, d, m):
    return (
        Tensor(rng.standard_normal((H, W, d))),
        Tensor(rng.standard_normal((H, W, m))),
        Tensor(rng.standard_normal((H, W, m))),
        Tensor(rng.uniform(0.05, 1.0, (H, W, d))),
    )


def test_2d_scan_matches_per_path_reference():
    # oracle: B_bar + Theta_bar collapse to a plain scan over B + theta[dir]
    rng = np.random.default_rng(3)
    H, W, d, m = 3, 4, 2, 3
    core = _rand_core(rng, d, m, theta_scale=0.4)
    x, b, c, delta = _rand_grids(rng, H, W, d, m)
    ps = generate_continuous_paths(H, W)
    out = direction_aware_scan_2d(x, b, c, delta, core, ps)
    total = np.zeros((H, W, d))
    for p, inv in zip(ps.paths, ps.inverse_orders):
        b_aug = apply_path(b.data, p) + core.Theta.data[p.directions]
        inp = ScanInputs(
            x=Tensor(apply_path(x.data, p)),
            B_seq=Tensor(b_aug),
            C_seq=Tensor(apply_path(c.data, p)),
            Delta_seq=Tensor(apply_path(delta.data, p)),
        )
        total += invert_path(selective_scan_ref(inp, core).data, p, inv)
    assert np.abs(out.data - total).max() < 1e-10


def test_2d_scan_zero_theta_equals_sum_of_plain_scans():
    rng = np.random.default_rng(4)
    H, W, d, m = 4, 3, 3, 2
    core = _rand_core(rng, d, m, theta_scale=0.0)
    x, b, c, delta = _rand_grids(rng, H, W, d, m)
    ps = generate_continuous_paths(H, W)
    out = direction_aware_scan_2d(x, b, c, delta, core, ps)
    total = np.zeros((H, W, d))
    for p, inv in zip(ps.paths, ps.inverse_orders):
        inp = ScanInputs(
            x=Tensor(apply_path(x.data, p)),
            B_seq=Tensor(apply_path(b.data, p)),
            C_seq=Tensor(apply_path(c.data, p)),
            Delta_seq=Tensor(apply_path(delta.data, p)),
        )
        total += invert_path(selective_scan_fused(inp, core).data, p, inv)
    assert np.abs(out.data - total).max() < 1e-10


def test_2d_scan_zero_c_reduces_to_skips():
    rng = np.random.default_rng(5)
    H, W, d, m = 3, 3, 2, 2
    core = _rand_core(rng, d, m, theta_scale=0.3)
    x, _, _, delta = _rand_grids(rng, H, W, d, m)
    zero = Tensor(np.zeros((H, W, m)))
    ps = generate_continuous_paths(H, W)
    out = direction_aware_scan_2d(x, zero, zero, delta, core, ps)
    # Theta feeds the state, but C == 0 silences emission: only skips remain
    expected = 4.0 * x.data * core.D.data
    assert np.abs(out.data - expected).max() < 1e-12
    single = direction_aware_scan_2d(x, zero, zero, delta, core, ps, single_skip=True)
    assert np.abs(single.data - x.data * core.D.data).max() < 1e-12


def test_2d_scan_batched_equals_loop():
    rng = np.random.default_rng(6)
    H, W, d, m, Bn = 3, 3, 2, 2, 3
    core = _rand_core(rng, d, m, theta_scale=0.2)
    x = Tensor(rng.standard_normal((Bn, H, W, d)))
    b = Tensor(rng.standard_normal((Bn, H, W, m)))
    c = Tensor(rng.standard_normal((Bn, H, W, m)))
    delta = Tensor(rng.uniform(0.05, 1.0, (Bn, H, W, d)))
    ps = generate_continuous_paths(H, W)
    batched = direction_aware_scan_2d(x, b, c, delta, core, ps)
    for i in range(Bn):
        one = direction_aware_scan_2d(
            Tensor(x.data[i]), Tensor(b.data[i]), Tensor(c.data[i]),
            Tensor(delta.data[i]), core, ps,
        )
        assert np.abs(batched.data[i] - one.data).max() < 1e-12


def test_direction_labels_change_the_output():
    # swapping two rows of a non-degenerate Theta must move the result
    rng = np.random.default_rng(7)
    H, W, d, m = 3, 3, 2, 3
    x, b, c, delta = _rand_grids(rng, H, W, d, m)
    A = Tensor(-np.abs(rng.standard_normal((d, m))) - 0.05)
    D = Tensor(rng.standard_normal(d))
    theta = 0.5 * rng.standard_normal((5, m))
    swapped = theta[[1, 0, 2, 3, 4]]
    ps = generate_continuous_paths(H, W)
    y1 = direction_aware_scan_2d(x, b, c, delta, SsmCore(A, D, Tensor(theta)), ps)
    y2 = direction_aware_scan_2d(x, b, c, delta, SsmCore(A, D, Tensor(swapped)), ps)
    assert np.abs(y1.data - y2.data).max() > 1e-6


def test_2d_scan_gradients():
    rng = np.random.default_rng(8)
    H, W, d, m = 3, 3, 2, 2
    ps = generate_continuous_paths(H, W)
    x = Tensor(rng.standard_normal((H, W, d)), name="x")
    A = Tensor(-np.abs(rng.standard_normal((d, m))) - 0.1, name="A")
    theta = Tensor(0.3 * rng.standard_normal((5, m)), name="theta")
    D = Tensor(rng.standard_normal(d), name="D")
    b = Tensor(rng.standard_normal((H, W, m)))
    c = Tensor(rng.standard_normal((H, W, m)))
    delta = Tensor(rng.uniform(0.05, 0.6, (H, W, d)))

    def f(x, A, theta, D):
        return direction_aware_scan_2d(x, b, c, delta, SsmCore(A, D, theta), ps).sum()

    assert grad_check(f, [x, A, theta, D]) < 1e-3


def test_2d_scan_shape_checks():
    rng = np.random.default_rng(9)
    core = _rand_core(rng, 2, 2)
    x, b, c, delta = _rand_grids(rng, 3, 3, 2, 2)
    ps = generate_continuous_paths(4, 4)
    with pytest.raises(ShapeError, match="does not match"):
        direction_aware_scan_2d(x, b, c, delta, core, ps)
