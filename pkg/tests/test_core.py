from concurrent.futures import ThreadPoolExecutor
import os
import tempfile
from unittest import TestCase

import numpy as np
from mockito import unstub, when
from parameterized import parameterized as p

from toda_spectra.core import exceptions, runtime, store
from toda_spectra.core.fns import group_by, maybe
from toda_spectra.core.quadrature import (
    adaptive,
    band_distance,
    band_rule,
    chebyshev_nodes,
    nesting_meter,
)
from toda_spectra.core.roots import bisect, newton_polish, safeguarded_newton
from toda_spectra.core.settings import DEFAULTS, SpectraSettings, read_settings_file


class TestChebyshevNodes(TestCase):
    @p.expand([
        (lambda t: np.ones_like(t), 1.0),
        (lambda t: t * t, 0.5),
        (lambda t: t ** 4, 0.375),
        (lambda t: t ** 3, 0.0),
    ])
    def test_mean_is_the_weighted_integral(self, f, expected):
        self.assertAlmostEqual(np.mean(f(chebyshev_nodes(32))), expected, places=14)

    def test_nodes_are_descending_and_read_only(self):
        nodes = chebyshev_nodes(8)
        self.assertTrue(np.all(np.diff(nodes) < 0))
        with self.assertRaises(ValueError):
            nodes[0] = 0.0


class TestBandRule(TestCase):
    @p.expand([(True,), (False,)])
    def test_square_root_endpoints(self, graded):
        nodes = band_rule(0.0, 1.0, 24, graded=graded)
        value = np.sum(np.sqrt(nodes.left * nodes.right) * nodes.weights)
        self.assertAlmostEqual(value, np.pi / 8, places=9)

    def test_edge_distances_add_up_to_the_width(self):
        nodes = band_rule(-1.5, 2.5, 8)
        np.testing.assert_allclose(nodes.left + nodes.right, 4.0, rtol=1e-14)

    def test_band_distance_uses_the_edge_offsets(self):
        nodes = band_rule(0.0, 1.0, 8, graded=False)
        points = np.array([-2.0, 3.0])
        expected = np.abs(nodes.mu[:, None] - points)
        np.testing.assert_allclose(band_distance(nodes, 0.0, 1.0, points), expected, rtol=1e-13)


class TestAdaptive(TestCase):
    def test_stops_once_two_estimates_agree(self):
        value, count = adaptive(lambda n: 1.0 + 2.0 ** -n, 4, 1024, 1e-6)
        self.assertAlmostEqual(value, 1.0, places=6)
        self.assertEqual(count, 64)

    def test_raises_when_the_node_limit_is_hit(self):
        with self.assertRaises(exceptions.NoConvergence) as cm:
            adaptive(lambda n: float(n), 4, 64, 1e-12, what="divergent", n=3)
        self.assertEqual(cm.exception.n, 3)

    def test_absolute_floor_accepts_noise_at_its_level(self):
        def estimate(count):
            return 1e-7 + (3e-12 if count.bit_length() % 2 else -3e-12)

        value, count = adaptive(estimate, 4, 64, 1e-11, atol=1e-11)
        self.assertAlmostEqual(value, 1e-7, delta=1e-11)
        self.assertEqual(count, 8)
        with self.assertRaises(exceptions.NoConvergence):
            adaptive(estimate, 4, 64, 1e-11)

    def test_nesting_depth_is_counted_per_thread(self):
        def depth_elsewhere():
            with nesting_meter() as depth:
                return depth

        with nesting_meter() as outer:
            with nesting_meter() as inner:
                self.assertEqual(inner, outer + 1)
                with ThreadPoolExecutor(max_workers=1) as pool:
                    self.assertEqual(pool.submit(depth_elsewhere).result(), 0)


class TestRoots(TestCase):
    def test_bisect_many_brackets(self):
        targets = np.array([2.0, 3.0, 5.0])
        roots, lo, hi = bisect(lambda x, i: x * x - targets[i], [1.0, 1.0, 2.0], [2.0, 2.0, 3.0])
        np.testing.assert_allclose(roots, np.sqrt(targets), rtol=1e-12)
        self.assertTrue(np.all(lo <= roots) and np.all(roots <= hi))

    def test_bisect_rejects_brackets_without_sign_change(self):
        with self.assertRaises(exceptions.BracketFailure) as cm:
            bisect(lambda x, i: x * x + 1.0, [0.0, -1.0], [1.0, 1.0], indices=[4, 7])
        self.assertEqual(cm.exception.n, 4)

    def test_newton_polish_stays_in_bracket(self):
        x = newton_polish(lambda x, i: (x ** 3 - 2.0, 3 * x * x), [1.3], [1.0], [1.5], steps=6)
        self.assertAlmostEqual(float(x[0]), 2.0 ** (1.0 / 3.0), places=13)

    def test_safeguarded_newton(self):
        roots = safeguarded_newton(
            lambda x, i: (np.cos(x) - x, -np.sin(x) - 1.0), [0.0], [1.0])
        self.assertAlmostEqual(float(roots[0]), 0.7390851332151607, places=12)


class TestSettings(TestCase):
    def test_overrides_layer_over_defaults(self):
        settings = SpectraSettings({"quad_tol": 1e-6})
        self.assertEqual(settings["quad_tol"], 1e-6)
        self.assertEqual(settings["K"], DEFAULTS["K"])

    def test_unknown_key_raises(self):
        with self.assertRaises(KeyError):
            SpectraSettings()["no_such_setting"]

    def test_fingerprint_tracks_overrides(self):
        a = SpectraSettings({"K": 4})
        b = a.copy()
        self.assertEqual(a.fingerprint(), b.fingerprint())
        b.set("K", 5)
        self.assertNotEqual(a.fingerprint(), b.fingerprint())
        self.assertEqual(a["K"], 4)

    def test_settings_file_rejects_unknown_keys(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "settings.yaml")
            with open(path, "w", encoding="utf-8") as f:
                f.write("quad_tol: 1.0e-9\nbogus: 1\n")
            with self.assertRaises(exceptions.ConfigError) as cm:
                read_settings_file(path)
        self.assertEqual(cm.exception.key, "bogus")

    def test_settings_file_reports_parse_position(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "settings.yaml")
            with open(path, "w", encoding="utf-8") as f:
                f.write("quad_tol: [1,\n")
            with self.assertRaises(exceptions.ConfigError) as cm:
                read_settings_file(path)
        self.assertIsNotNone(cm.exception.line)


class TestRuntime(TestCase):
    def tearDown(self):
        unstub()

    @p.expand([("", None), ("3", 3), ("1", 1)])
    def test_thread_count(self, raw, expected):
        when(os.environ).get(runtime.THREADS_ENV, "0").thenReturn(raw)
        if expected is None:
            self.assertGreaterEqual(runtime.thread_count(), 1)
        else:
            self.assertEqual(runtime.thread_count(), expected)

    @p.expand([("many",), ("-2",)])
    def test_thread_count_rejects(self, raw):
        when(os.environ).get(runtime.THREADS_ENV, "0").thenReturn(raw)
        with self.assertRaises(exceptions.ConfigError):
            runtime.thread_count()

    def test_parallel_map_keeps_order(self):
        self.assertEqual(runtime.parallel_map(lambda x: x * x, range(10)), [x * x for x in range(10)])


class TestStore(TestCase):
    def setUp(self):
        store.clear()

    def test_computes_once_per_key(self):
        calls = []

        def compute():
            calls.append(1)
            return 42

        self.assertEqual(store.cached(("answer",), compute), 42)
        self.assertEqual(store.cached(("answer",), compute), 42)
        self.assertEqual(len(calls), 1)


class TestFns(TestCase):
    def test_group_by_keeps_first_seen_order(self):
        groups = group_by(lambda x: x % 3, [4, 3, 1, 6, 2])
        self.assertEqual(list(groups), [1, 0, 2])
        self.assertEqual(groups[1], [4, 1])

    def test_maybe_swallows_errors(self):
        self.assertIsNone(maybe(lambda: 1 / 0))
        self.assertEqual(maybe(lambda: 3), 3)
