import numpy as np
from django.test import SimpleTestCase
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from forecasting.engine import (
    FlopCounter,
    Tensor,
    backward,
    check_gradients,
    deterministic,
    finite_difference_gradient,
    no_grad,
)
from forecasting.engine import ops
from forecasting.exceptions import GradientCheckError, GraphError, NonFiniteError, ShapeError

# Magnitudes in [0.5, 2] keep analytic gradients away from zero and kinks.
away_from_zero = st.one_of(st.floats(-2.0, -0.5), st.floats(0.5, 2.0))
positive = st.floats(0.5, 2.0)


def weighted_sum(out, seed=0):
    weights = np.random.default_rng(seed).uniform(0.5, 1.5, size=out.shape)
    return ops.reduce_sum(ops.mul(out, Tensor(weights)))


class PrimitiveTests(SimpleTestCase):
    def test_relu(self):
        out = ops.relu(Tensor([-1.0, 0.0, 2.0]))
        self.assertEqual(out.values.tolist(), [0.0, 0.0, 2.0])

    def test_matmul_identity(self):
        a = np.arange(12.0).reshape(3, 4)
        out = ops.matmul(Tensor(np.eye(3)), Tensor(a))
        np.testing.assert_array_equal(out.values, a)

    def test_exp(self):
        out = ops.exp(ops.scale(Tensor([[0.5]]), 10.0))
        self.assertAlmostEqual(out.values[0, 0], 148.4131591025766, places=9)

    def test_shape_error_names_primitive_and_shapes(self):
        with self.assertRaises(ShapeError) as caught:
            ops.add(Tensor([1.0, 2.0]), Tensor([1.0, 2.0, 3.0]))
        self.assertEqual(caught.exception.primitive, 'add')
        self.assertEqual(caught.exception.shapes, ((2,), (3,)))
        self.assertIn('(2,)', str(caught.exception))

    def test_matmul_shape_error(self):
        with self.assertRaises(ShapeError):
            ops.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))

    def test_exp_overflow_raises_by_default(self):
        with self.assertRaises(NonFiniteError) as caught:
            ops.exp(Tensor([1000.0]))
        self.assertEqual(caught.exception.primitive, 'exp')

    def test_exp_saturates_with_warning(self):
        with self.assertLogs('forecasting.engine.ops', level='WARNING'):
            out = ops.exp(Tensor([1000.0, 0.0]), saturate=True)
        self.assertEqual(out.values[0], ops.MAX_FINITE)
        self.assertEqual(out.values[1], 1.0)

    def test_div_floor_keeps_sign(self):
        out = ops.div(Tensor([1.0, 1.0, 1.0]), Tensor([0.001, -0.001, 4.0]), floor=0.01)
        np.testing.assert_allclose(out.values, [100.0, -100.0, 0.25])
        self.assertEqual(out.clamped_count, 2)

    def test_div_zero_divisor_counts_as_positive(self):
        out = ops.div(Tensor([3.0]), Tensor([0.0]), floor=0.5)
        self.assertEqual(out.values.tolist(), [6.0])

    def test_sqrt_of_negative(self):
        with self.assertRaises(NonFiniteError):
            ops.sqrt(Tensor([-1.0]))

    def test_max_rows_and_reduce_sum(self):
        x = Tensor([[1.0, 5.0, 3.0], [2.0, 0.0, 4.0]])
        self.assertEqual(ops.max_rows(x).values.tolist(), [[5.0], [4.0]])
        self.assertEqual(ops.reduce_sum(x, axis=0).values.tolist(), [3.0, 5.0, 7.0])
        self.assertEqual(ops.reduce_sum(x).item(), 15.0)

    def test_concat_and_broadcast(self):
        a = Tensor(np.ones((2, 1)))
        b = Tensor(np.zeros((2, 2)))
        self.assertEqual(ops.concat([a, b], axis=-1).shape, (2, 3))
        self.assertEqual(ops.broadcast_to(a, (2, 4)).shape, (2, 4))
        with self.assertRaises(ShapeError):
            ops.broadcast_to(b, (3, 2))

    def test_reshape_rejects_wrong_size(self):
        with self.assertRaises(ShapeError):
            ops.reshape(Tensor(np.ones(6)), (4, 2))

    def test_tensor_rejects_empty_extent(self):
        with self.assertRaises(ShapeError):
            Tensor(np.ones((0, 3)))

    def test_softmax_rows_sum_to_one(self):
        x = Tensor(np.random.default_rng(1).normal(size=(4, 5)) * 10)
        rows = ops.softmax_rows(x).values.sum(axis=-1)
        np.testing.assert_allclose(rows, np.ones(4), rtol=0, atol=1e-12)


class BackwardTests(SimpleTestCase):
    def test_relu_subgradient(self):
        x = Tensor([-1.0, 2.0], requires_grad=True)
        backward(ops.reduce_sum(ops.relu(x)))
        self.assertEqual(x.grad.tolist(), [0.0, 1.0])

    def test_relu_gradient_at_zero_is_zero(self):
        x = Tensor([0.0], requires_grad=True)
        backward(ops.reduce_sum(ops.relu(x)))
        self.assertEqual(x.grad.tolist(), [0.0])

    def test_product_rule(self):
        a = Tensor([2.0, 3.0], requires_grad=True)
        b = Tensor([5.0, 7.0], requires_grad=True)
        backward(ops.reduce_sum(ops.mul(a, b)))
        self.assertEqual(a.grad.tolist(), [5.0, 7.0])
        self.assertEqual(b.grad.tolist(), [2.0, 3.0])

    def test_shared_operand_accumulates(self):
        x = Tensor([1.5, -2.0], requires_grad=True)
        backward(ops.reduce_sum(ops.mul(x, x)))
        self.assertEqual(x.grad.tolist(), [3.0, -4.0])

    def test_replay_is_rejected(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        loss = ops.reduce_sum(ops.mul(x, x))
        backward(loss)
        with self.assertRaises(GraphError):
            backward(loss)
        self.assertEqual(x.grad.tolist(), [2.0, 4.0])

    def test_non_scalar_loss(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        with self.assertRaises(GraphError):
            backward(ops.scale(x, 2.0))

    def test_loss_without_graph(self):
        with self.assertRaises(GraphError):
            backward(Tensor(1.0))

    def test_no_grad_records_nothing(self):
        x = Tensor([1.0], requires_grad=True)
        with no_grad():
            out = ops.scale(x, 3.0)
        self.assertFalse(out.requires_grad)
        with self.assertRaises(GraphError):
            backward(ops.reduce_sum(out))

    def test_graph_is_topologically_ordered(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        y = ops.scale(x, 2.0)
        z = ops.add(y, ops.mul(y, x))
        graph = backward(ops.reduce_sum(z))
        position = {id(node.output): index for index, node in enumerate(graph.nodes)}
        for index, node in enumerate(graph.nodes):
            for operand in node.inputs:
                if id(operand) in position:
                    self.assertLess(position[id(operand)], index)
        # d/dx (2x + 2x^2) = 2 + 4x
        self.assertEqual(x.grad.tolist(), [6.0, 10.0])


class FiniteDifferenceTests(SimpleTestCase):
    def test_square(self):
        p = Tensor([3.0])
        estimate = finite_difference_gradient(lambda t: ops.reduce_sum(ops.mul(t, t)), p, h=1e-5)
        self.assertAlmostEqual(estimate.values[0], 6.0, delta=1e-8)
        self.assertEqual(p.values[0], 3.0)

    def test_absolute(self):
        p = Tensor([0.5])
        estimate = finite_difference_gradient(lambda t: ops.reduce_sum(ops.absolute(t)), p, h=1e-6)
        self.assertAlmostEqual(estimate.values[0], 1.0, delta=1e-8)

    def test_non_finite_evaluation_names_coordinate(self):
        p = Tensor([[1.0, 2.0]])
        with self.assertRaises(GradientCheckError) as caught:
            finite_difference_gradient(lambda t: float('inf') if t.values[0, 0] > 1.0 else 0.0, p)
        self.assertEqual(caught.exception.coordinate, (0, 0))

    def test_rejects_non_positive_step(self):
        with self.assertRaises(ValueError):
            finite_difference_gradient(lambda t: 0.0, Tensor([1.0]), h=0.0)


class PrimitiveGradientPropertyTests(SimpleTestCase):
    """Analytic backward against central differences on random operands."""

    def assert_gradients(self, loss_fn, named, floor=1e-4):
        report = check_gradients(loss_fn, named, h=1e-6, floor=floor)
        self.assertLess(report.max_error, 1e-6, report.errors)

    @settings(max_examples=20, deadline=None)
    @given(arrays(np.float64, (2, 3), elements=away_from_zero), arrays(np.float64, (3, 2), elements=away_from_zero))
    def test_matmul(self, a_values, b_values):
        a, b = Tensor(a_values, requires_grad=True), Tensor(b_values, requires_grad=True)
        self.assert_gradients(lambda: weighted_sum(ops.matmul(a, b)), {'a': a, 'b': b})

    @settings(max_examples=20, deadline=None)
    @given(arrays(np.float64, (2, 3), elements=away_from_zero), arrays(np.float64, (2, 3), elements=away_from_zero))
    def test_elementwise(self, a_values, b_values):
        a, b = Tensor(a_values, requires_grad=True), Tensor(b_values, requires_grad=True)
        for primitive in (ops.add, ops.sub, ops.mul, lambda x, y: ops.div(x, y, floor=0.01)):
            self.assert_gradients(lambda: weighted_sum(primitive(a, b)), {'a': a, 'b': b})

    @settings(max_examples=20, deadline=None)
    @given(arrays(np.float64, (3, 2), elements=away_from_zero))
    def test_unary(self, values):
        x = Tensor(values, requires_grad=True)

        def loss():
            parts = [ops.relu(x), ops.exp(x), ops.absolute(x), ops.sqrt(ops.absolute(x)), ops.scale(x, -1.5)]
            total = parts[0]
            for part in parts[1:]:
                total = ops.add(total, part)
            return weighted_sum(total)

        self.assert_gradients(loss, {'x': x})

    @settings(max_examples=20, deadline=None)
    @given(arrays(np.float64, (3, 4), elements=positive, unique=True))
    def test_reductions_and_layout(self, values):
        ordered = np.sort(values, axis=-1)
        assume(np.all(np.diff(ordered[:, -2:], axis=-1) > 1e-3))
        x = Tensor(values, requires_grad=True)

        def loss():
            peak = ops.broadcast_to(ops.max_rows(x), x.shape)
            rows = ops.broadcast_to(ops.reduce_sum(x, axis=0, keepdims=True), x.shape)
            stacked = ops.concat([ops.transpose(ops.add(peak, rows)), ops.transpose(x)], axis=0)
            return weighted_sum(ops.reshape(stacked, (2, 12)))

        self.assert_gradients(loss, {'x': x})

    @settings(max_examples=20, deadline=None)
    @given(arrays(np.float64, (2, 4), elements=st.floats(-2.0, 2.0)))
    def test_softmax(self, values):
        x = Tensor(values, requires_grad=True)
        self.assert_gradients(lambda: weighted_sum(ops.softmax_rows(x)), {'x': x}, floor=1e-2)


class FlopCounterTests(SimpleTestCase):
    def test_matmul_count_is_exact(self):
        with FlopCounter() as counter:
            ops.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((3, 4))))
        self.assertEqual(counter.matmul, 2 * 4 * 3)
        self.assertEqual(counter.total, 24)

    def test_categories(self):
        x = Tensor(np.ones((3, 5)))
        with FlopCounter() as counter:
            ops.add(x, x)
            ops.max_rows(x)
            ops.reshape(x, (5, 3))
        self.assertEqual(counter.as_dict(), {'matmul': 0, 'elementwise': 15, 'reduction': 15, 'total': 30})

    def test_nested_counters_both_receive(self):
        x = Tensor(np.ones((2, 2)))
        with FlopCounter() as outer:
            ops.relu(x)
            with FlopCounter() as inner:
                ops.relu(x)
        self.assertEqual(inner.total, 4)
        self.assertEqual(outer.total, 8)

    def test_negative_counts_rejected(self):
        with self.assertRaises(ValueError):
            FlopCounter().add('matmul', -1)


class DeterminismTests(SimpleTestCase):
    def test_deterministic_matmul_is_reproducible(self):
        rng = np.random.default_rng(7)
        a, b = rng.normal(size=(16, 32)), rng.normal(size=(32, 8))
        with deterministic(True):
            first = ops.matmul(Tensor(a), Tensor(b)).values
            second = ops.matmul(Tensor(a), Tensor(b)).values
        np.testing.assert_array_equal(first, second)
        with deterministic(False):
            fast = ops.matmul(Tensor(a), Tensor(b)).values
        np.testing.assert_allclose(first, fast, rtol=1e-12, atol=1e-12)
