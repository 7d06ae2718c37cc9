"""End-to-end checks of the sketchkit command-line tool."""

import argparse
import json
import os
import random
import subprocess
import sys
import tempfile
import unittest

import jsonschema

CLI = None
SCHEMA = None


def write_coordinate(path, rows, cols, entries):
    with open(path, "w") as f:
        f.write("%%MatrixMarket matrix coordinate real general\n")
        f.write(f"{rows} {cols} {len(entries)}\n")
        for i, j, v in entries:
            f.write(f"{i + 1} {j + 1} {v!r}\n")


def write_array(path, values):
    with open(path, "w") as f:
        f.write("%%MatrixMarket matrix array real general\n")
        f.write(f"{len(values)} 1\n")
        for v in values:
            f.write(f"{v!r}\n")


def run(*args, env=None):
    proc = subprocess.run([CLI, *map(str, args)], capture_output=True, text=True, env=env, timeout=600)
    return proc


def report_of(proc):
    return json.loads(proc.stdout)


class CliTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.tmp = tempfile.TemporaryDirectory()
        d = cls.tmp.name
        rng = random.Random(7)
        cls.i5 = os.path.join(d, "i5.mtx")
        write_coordinate(cls.i5, 5, 5, [(i, i, 1.0) for i in range(5)])

        n, k = 600, 6
        cols = [[rng.gauss(0, 1) for _ in range(k)] for _ in range(n)]
        cls.a = os.path.join(d, "a.mtx")
        write_coordinate(cls.a, n, k, [(i, j, cols[i][j]) for i in range(n) for j in range(k)])
        cls.b = os.path.join(d, "b.mtx")
        write_array(cls.b, [sum(cols[i]) for i in range(n)])

        # Rank-4 plus small noise, 120 x 90.
        left = [[rng.gauss(0, 1) for _ in range(4)] for _ in range(120)]
        right = [[rng.gauss(0, 1) for _ in range(90)] for _ in range(4)]
        entries = []
        for i in range(120):
            for j in range(90):
                v = sum(left[i][t] * right[t][j] for t in range(4)) + 0.01 * rng.gauss(0, 1)
                entries.append((i, j, v))
        cls.lra = os.path.join(d, "lra.mtx")
        write_coordinate(cls.lra, 120, 90, entries)

        with open(SCHEMA) as f:
            cls.schema = json.load(f)

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()

    def validate(self, rep):
        jsonschema.validate(rep, self.schema)

    def test_rank_identity(self):
        p = run("rank", self.i5, "--oracle", "on")
        self.assertEqual(p.returncode, 0, p.stderr)
        rep = report_of(p)
        self.validate(rep)
        self.assertEqual(rep["rank"], 5)
        self.assertTrue(rep["results"][0]["oracle"]["match"])

    def test_consistent_regression(self):
        out = os.path.join(self.tmp.name, "x.mtx")
        p = run("regress", self.a, self.b, "--eps", "0.1", "--oracle", "on", "-o", out)
        self.assertEqual(p.returncode, 0, p.stderr)
        rep = report_of(p)
        self.validate(rep)
        self.assertLessEqual(rep["residual"], 1e-6 * rep["results"][0]["b_norm"])
        self.assertTrue(rep["results"][0]["oracle"]["within_bound"])
        self.assertTrue(os.path.exists(out))

    def test_lra_trials(self):
        p = run("lra", self.lra, "--k", "4", "--eps", "0.5", "--trials", "20", "--oracle", "on")
        self.assertEqual(p.returncode, 0, p.stderr)
        rep = report_of(p)
        self.validate(rep)
        self.assertEqual(len(rep["results"]), 20)
        self.assertGreaterEqual(rep["success_fraction"], 0.8)
        self.assertEqual([r["seed"] for r in rep["results"]], list(range(20)))

    def test_embed_and_leverage(self):
        for cmd in ("embed", "leverage"):
            p = run(cmd, self.a, "--oracle", "on", "--seed", "3")
            self.assertEqual(p.returncode, 0, p.stderr)
            self.validate(report_of(p))

    def test_indep_rows(self):
        p = run("indep-rows", self.i5, "--oracle", "on")
        self.assertEqual(p.returncode, 0, p.stderr)
        rep = report_of(p)
        self.validate(rep)
        self.assertEqual(sorted(rep["indices"]), [0, 1, 2, 3, 4])

    def test_bench_schema_and_csv(self):
        csv = os.path.join(self.tmp.name, "bench.csv")
        rep_path = os.path.join(self.tmp.name, "bench.json")
        p = run("bench", "--rows", "3000", "--cols", "6", "--k", "6", "--nnz", "6000", "12000", "--runs", "1",
                "--csv", csv, "--report", rep_path)
        self.assertEqual(p.returncode, 0, p.stderr)
        with open(rep_path) as f:
            self.validate(json.load(f))
        with open(csv) as f:
            lines = f.read().strip().splitlines()
        self.assertEqual(lines[0], "nnz,n,d,k,stage,seconds,time_ratio")
        self.assertEqual(len(lines), 5)

    def test_determinism(self):
        reps = []
        for _ in range(2):
            p = run("lra", self.lra, "--k", "4", "--seed", "11", "--oracle", "on")
            self.assertEqual(p.returncode, 0, p.stderr)
            reps.append(report_of(p)["results"][0]["oracle"])
        self.assertEqual(reps[0], reps[1])

    def test_seed_from_environment(self):
        env = dict(os.environ, SKETCHKIT_SEED="42")
        p = run("rank", self.i5, env=env)
        self.assertEqual(report_of(p)["seed"], 42)

    def test_exit_codes(self):
        missing = run("rank", os.path.join(self.tmp.name, "missing.mtx"))
        self.assertEqual(missing.returncode, 4)
        rep = report_of(missing)
        self.validate(rep)
        self.assertEqual(rep["error"]["name"], "IoError")

        self.assertEqual(run("rank", self.i5, "--oracle", "maybe").returncode, 2)
        self.assertEqual(run("frobnicate").returncode, 2)
        self.assertEqual(run("rank", self.i5, "--set", "no_such=1").returncode, 6)
        self.assertEqual(run("lra", self.i5, "--k", "5").returncode, 8)

        bad = os.path.join(self.tmp.name, "bad.mtx")
        with open(bad, "w") as f:
            f.write("not a matrix market file\n")
        self.assertEqual(run("rank", bad).returncode, 3)

    def test_constant_override_recorded(self):
        p = run("rank", self.i5, "--set", "rank_c=13")
        self.assertEqual(p.returncode, 0, p.stderr)
        self.assertEqual(report_of(p)["constants"]["rank_c"], 13)


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--cli", required=True)
    parser.add_argument("--schema", required=True)
    args, rest = parser.parse_known_args()
    CLI, SCHEMA = args.cli, args.schema
    unittest.main(argv=[sys.argv[0], *rest])
