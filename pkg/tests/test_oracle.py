import io

import numpy as np
import pytest

from helpers import INF_INF, SUPPORTED_PAIRS, abs_net, constant_net, linear_net, random_net, relu_net
from lipsample.domain import Box
from lipsample.errors import ConfigError, DimensionMismatch, GridTooLarge
from lipsample.estimators import sample_value, sample_values
from lipsample.net import activation_pattern, forward
from lipsample.norms import induced_norm
from lipsample.oracle import GridSpec, breakpoint_oracle_1d, enumerate_breakpoints, grid_oracle, write_heatmap

I1 = Box.cube(1)


def test_breakpoints_relu_and_abs():
    np.testing.assert_array_equal(enumerate_breakpoints(relu_net(), I1), [0.0])
    np.testing.assert_array_equal(enumerate_breakpoints(abs_net(), I1), [0.0])
    assert breakpoint_oracle_1d(abs_net(), I1, INF_INF)[0] == 1.0


def test_breakpoints_need_one_input():
    with pytest.raises(DimensionMismatch):
        enumerate_breakpoints(random_net([2, 4, 1], 0), Box.cube(2))


def test_breakpoints_zero_hidden_preactivation():
    for seed in range(20):
        net = random_net([1, 8, 8, 1], seed)
        for b in enumerate_breakpoints(net, I1):
            z = forward(net, [b]).preactivations
            assert min(np.abs(v).min() for v in z) <= 1e-9


def test_affine_between_breakpoints_and_constant_pattern():
    rng = np.random.default_rng(0)
    for seed in range(20):
        net = random_net([1, 8, 8, 1], seed)
        edges = np.concatenate([[-1.0], enumerate_breakpoints(net, I1), [1.0]])
        for a, b in zip(edges[:-1], edges[1:]):
            if b - a < 1e-6:
                continue
            ts = a + (b - a) * np.sort(rng.uniform(0.01, 0.99, 5))
            pats = [activation_pattern(net, [t]).tobytes() for t in ts]
            assert len(set(pats)) == 1
            ys = [forward(net, [t]).output[0] for t in ts]
            slope = (ys[-1] - ys[0]) / (ts[-1] - ts[0])
            for t, y in zip(ts, ys):
                assert y == pytest.approx(ys[0] + slope * (t - ts[0]), abs=1e-9)


def test_breakpoint_oracle_dominates_dense_grid():
    for seed in range(10):
        net = random_net([1, 8, 8, 1], seed)
        grid = np.linspace(-1, 1, 10**6)[:, None]
        dense = sample_values(net, INF_INF, grid).max()
        exact, x = breakpoint_oracle_1d(net, I1, INF_INF)
        assert dense <= exact + 1e-9
        assert dense == pytest.approx(exact, abs=1e-9)
        assert I1.contains(x)


def test_grid_linear_and_constant():
    W = np.array([[1.0, 2.0], [-3.0, 0.5]])
    for pair in SUPPORTED_PAIRS:
        v, _ = grid_oracle(linear_net(W), Box.cube(2), GridSpec(5), pair)
        assert v == pytest.approx(induced_norm(W, pair), rel=1e-12)
    assert grid_oracle(constant_net([2, 3, 1]), Box.cube(2), GridSpec(7), INF_INF)[0] == 0.0


def test_grid_includes_faces_and_tie_break():
    v, x = grid_oracle(linear_net([[1.0, 1.0]]), Box([0, 0], [1, 1]), GridSpec(3), INF_INF)
    assert v == 2.0
    np.testing.assert_array_equal(x, [0.0, 0.0])


def test_grid_nested_refinement_monotone():
    for seed in range(5):
        net = random_net([2, 16, 16, 1], seed)
        prev = -1.0
        for p in (5, 9, 17, 33, 65, 129):
            v, _ = grid_oracle(net, Box.cube(2), GridSpec(p), INF_INF)
            assert v >= prev
            prev = v


def test_grid_jitter_only_adds():
    net = random_net([2, 8, 8, 1], 3)
    a, _ = grid_oracle(net, Box.cube(2), GridSpec(11), INF_INF)
    b, x = grid_oracle(net, Box.cube(2), GridSpec(11, True), INF_INF)
    assert b >= a
    assert sample_value(net, INF_INF, x) == pytest.approx(b, rel=1e-12)


def test_grid_threads_agree():
    net = random_net([2, 8, 8, 1], 1)
    a = grid_oracle(net, Box.cube(2), GridSpec(300), INF_INF, threads=1)
    b = grid_oracle(net, Box.cube(2), GridSpec(300), INF_INF, threads=3)
    assert a[0] == b[0] and a[1].tobytes() == b[1].tobytes()


def test_grid_guards():
    with pytest.raises(GridTooLarge):
        grid_oracle(random_net([7, 4, 1], 0), Box.cube(7), GridSpec(400), INF_INF)
    with pytest.raises(ConfigError):
        GridSpec(1)
    with pytest.raises(DimensionMismatch):
        grid_oracle(random_net([3, 4, 1], 0), Box.cube(2), GridSpec(3), INF_INF)


def test_heatmap_rows_and_values():
    net = random_net([2, 8, 1], 2)
    buf = io.StringIO()
    assert write_heatmap(net, Box.cube(2), 20, INF_INF, buf) == 400
    lines = buf.getvalue().splitlines()
    assert lines[0] == "x0,x1,norm" and len(lines) == 401
    data = np.loadtxt(lines[1:], delimiter=",")
    np.testing.assert_array_equal(data[:2, :2], [[-1, -1], [-1, -1 + 2 / 19]])
    for row in data[::37]:
        assert row[2] == pytest.approx(sample_value(net, INF_INF, row[:2]), rel=1e-12)
    assert data[:, 2].max() == grid_oracle(net, Box.cube(2), GridSpec(20), INF_INF)[0]
