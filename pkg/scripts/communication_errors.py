#!/usr/bin/env python3
"""Cumulative communication errors for every teacher/learner pair.

Communication only (oracle executor, p=1). Writes one tidy row per episode:

  python scripts/communication_errors.py --episodes 2000 --seeds 0 1 2 3 4 --out results/comm_errors.csv
"""

import argparse
import csv
import statistics
from pathlib import Path

from pedprag.harness import LEARNERS, TEACHERS, ExperimentConfig, run_experiment
from pedprag.protocol import communication_error_rate


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--episodes", type=int, default=2000)
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    parser.add_argument("--beta", type=float, default=10.0)
    parser.add_argument("--max_retries", type=int, default=20)
    parser.add_argument("--out", default="results/comm_errors.csv")
    args = parser.parse_args()

    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["seed", "teacher", "learner", "episode", "instructions_given", "comm_errors"])
        for teacher in TEACHERS:
            for learner in LEARNERS:
                cfg = ExperimentConfig(teacher=teacher, learner=learner, executor="oracle", episodes=args.episodes,
                                       seeds=args.seeds, beta=args.beta, max_retries=args.max_retries,
                                       eval_every=args.episodes)
                results, _ = run_experiment(cfg)
                for res in results:
                    for rec in res.session.records:
                        w.writerow([res.seed, teacher, learner, rec.episode, rec.instructions_given, rec.comm_errors])
                final = statistics.median(r.session.comm_errors for r in results)
                tail = statistics.median(communication_error_rate(r.session, 3 * args.episodes // 4)
                                         for r in results)
                print(f"{teacher:>13}+{learner:<9} median errors {final:8g}  tail rate {tail:.4f}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
