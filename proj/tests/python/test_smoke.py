"""Smoke test for the _triage extension: end-to-end on the worked pool."""

import unittest

import _triage as t


def reference_pool():
    pool = t.TaskPool()
    pool.id = "smoke"
    pool.dataset = "test"
    costs = [100, 200, 300, 400]
    solvable = [True, True, False, True]
    for i, (c, y) in enumerate(zip(costs, solvable), start=1):
        pool.problems = pool.problems + [t.Problem(f"q{i}", f"problem {i}")]
        pool.truth = {**pool.truth, f"q{i}": t.GroundTruth(f"q{i}", y, c)}
    t.compute_budget(pool, 0.5)
    return pool


class SmokeTest(unittest.TestCase):
    def test_budget_and_references(self):
        pool = reference_pool()
        self.assertEqual(pool.budget, 500)
        self.assertEqual(t.oracle_value(pool), 2.0)
        self.assertEqual(t.exact_random_reference(pool), 1.25)
        refs = t.random_reference(pool, samples=1000, seed=42)
        self.assertAlmostEqual(refs.v_random_mean, 1.25, delta=0.05)

    def test_plan_round_trip_and_execution(self):
        pool = reference_pool()
        raw = 'Here: {"plan":[{"id":"q1","tokens":100},{"id":"q2","tokens":200}]}'
        status, plan = t.parse_and_repair(raw, pool)
        self.assertEqual(status, "repaired")
        self.assertEqual(
            t.plan_to_json(plan),
            '{"plan":[{"id":"q1","tokens":100},{"id":"q2","tokens":200}]}',
        )
        trace = t.execute_unconstrained(plan, pool)
        self.assertEqual(trace.achieved_value, 2.0)
        self.assertEqual(trace.total_charged, 300)
        enforced = t.execute_enforced_simulated(plan, pool)
        self.assertEqual(enforced.achieved_value, 2.0)

    def test_metrics(self):
        self.assertEqual(t.eta(2.0, 2.0, 1.25), 1.0)
        self.assertAlmostEqual(t.eta(1.0, 2.0, 1.25), -1 / 3, places=12)
        self.assertEqual(t.regret(1.0, 2.0), 0.5)
        self.assertIsNone(t.regret(0.0, 0.5))
        self.assertEqual(t.kendall_tau_b([1, 2, 3, 4], [4, 3, 2, 1]), -1.0)

    def test_prompt_rendering(self):
        pool = reference_pool()
        prompt = t.render_planner_prompt(pool, variant="A")
        self.assertIn("total budget of 500 output tokens", prompt)
        self.assertIn("[id: q1] (points: 1)", prompt)

    def test_error_mapping(self):
        pool = reference_pool()
        pool.problems = pool.problems + [t.Problem("orphan", "no truth")]
        with self.assertRaises(t.TriageError):
            t.compute_budget(pool, 0.5)


if __name__ == "__main__":
    unittest.main()
