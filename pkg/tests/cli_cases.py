"""CLI golden cases shared by the tests and the regeneration script.

Each case is ``(name, argv, produced_file, accepts_workers)``. Paths are
relative to a working directory holding a copy of ``tests/golden``.
"""
from pathlib import Path

GOLDEN = Path(__file__).resolve().parent / "golden"

SIMULATE = [
    ("simulate_collider", ["simulate", "--graph", "collider.dag", "--params", "collider.params",
                           "--n", "2000", "--seed", "1", "--out", "collider.csv"], "collider.csv", False),
    ("simulate_independent", ["simulate", "--graph", "collider.dag", "--params", "independent.params",
                              "--n", "2000", "--seed", "2", "--out", "independent.csv"], "independent.csv", False),
    ("simulate_five", ["simulate", "--graph", "five.dag", "--params", "five.params",
                       "--n", "300", "--seed", "3", "--out", "five.csv"], "five.csv", False),
    ("simulate_empty", ["simulate", "--graph", "collider.dag", "--params", "collider.params",
                        "--n", "0", "--seed", "4", "--out", "empty.csv"], "empty.csv", False),
]

REPORTS = [
    ("score_equivalent", ["score", "--data", "collider.csv", "--graph", "chain.dag", "--graph", "chain_rev.dag",
                          "--graph", "fork.dag", "--graph", "collider.dag"], None, False),
    ("score_complete", ["score", "--data", "collider.csv", "--prior", "prior3.cfg",
                        "--graph", "complete_012.dag", "--graph", "complete_210.dag"], None, False),
    ("score_empty_data", ["score", "--data", "empty.csv", "--graph", "collider.dag", "--graph", "empty3.dag"],
     None, False),
    ("learn_collider", ["learn", "--data", "collider.csv", "--restarts", "4", "--seed", "0"], None, True),
    ("learn_collider_exhaustive", ["learn", "--data", "collider.csv", "--exhaustive"], None, False),
    ("learn_independent", ["learn", "--data", "independent.csv", "--restarts", "3"], None, True),
    ("learn_five", ["learn", "--data", "five.csv", "--restarts", "20", "--seed", "2"],
     None, True),
    ("learn_prior_capped", ["learn", "--data", "collider.csv", "--prior", "prior3.cfg", "--restarts", "2", "--max-parents", "1",
                          "--max-iter", "2"], None, True),
    ("verify_small", ["verify", "--samples", "1000", "--seed", "0"], None, True),
]

CASES = SIMULATE + REPORTS
