#!/usr/bin/env python3
"""GRA against instructions given, with the Q-learning executor.

  python scripts/gra_curves.py --episodes 30000 --seeds 0 1 2 --out results/gra.csv
"""

import argparse
from pathlib import Path

from pedprag.harness import LEARNERS, TEACHERS, ExperimentConfig, compare_combos, format_report, run_experiment


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--episodes", type=int, default=30_000)
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    parser.add_argument("--horizon", type=int, default=12)
    parser.add_argument("--teachers", nargs="+", default=list(TEACHERS))
    parser.add_argument("--out", default="results/gra.csv")
    args = parser.parse_args()

    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    configs, runs = [], {}
    with open(args.out, "w", newline="") as f:
        for k, (teacher, learner) in enumerate((t, l) for t in args.teachers for l in LEARNERS):
            cfg = ExperimentConfig(teacher=teacher, learner=learner, executor="qlearning", episodes=args.episodes,
                                   seeds=args.seeds, horizon=args.horizon)
            buf_out = f if k == 0 else _SkipHeader(f)
            runs[k], _ = run_experiment(cfg, buf_out)
            configs.append(cfg)
            print(f"done {cfg.label}", flush=True)
    report = format_report(compare_combos(configs, runs=runs))
    Path(args.out).with_suffix(".report.csv").write_text(report)
    print(report)


class _SkipHeader:
    """Forwards writes to ``f`` except the first line (the repeated CSV header)."""

    def __init__(self, f):
        self.f = f
        self.skipped = False

    def write(self, s):
        if not self.skipped:
            self.skipped = True
            return len(s)
        return self.f.write(s)

    def flush(self):
        self.f.flush()


if __name__ == "__main__":
    main()
