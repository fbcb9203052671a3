#!/usr/bin/env python3
"""Exact per-goal exchange success for literal learners, and retry-cap sensitivity.

For a fixed learner, one attempt at goal g succeeds with probability

    sum_i pi_T(i|g) sum_h D_L(h|i) sum_f pi_L(f|h) D_T(g|f)

where D_* is the MAP decoder (uniform tie-break, validity-uniform fallback).
Errors per episode under a cap of R attempts are sum_{k=1..R} (1-p_g)^k,
averaged over goals. The second half of the output simulates pragmatic vs
literal learners for several caps.
"""

import argparse
import random
import statistics

import numpy as np

from pedprag.harness import teacher_policy
from pedprag.policy import bgi_posterior, build_validity_uniform
from pedprag.protocol import Agent, run_teaching_session
from pedprag.world import default_world


def decoder(policy):
    w = policy.world
    out = np.zeros((len(w.instructions), len(w.goals)))
    for k, instr in enumerate(w.instructions):
        p = bgi_posterior(policy, instr).probs
        ties = np.abs(p.max() - p) <= 1e-12
        out[k] = ties / ties.sum()
    return out


def attempt_success(teacher, learner):
    # (G x I) @ (I x G) -> P(learner reads h | g); then speak and decode back
    read = teacher.table @ decoder(learner)
    back = learner.table @ decoder(teacher)
    return np.diag(read @ back)


def expected_errors(p, cap):
    return float(np.mean([sum((1 - x) ** k for k in range(1, cap + 1)) for x in p]))


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--episodes", type=int, default=2000)
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    parser.add_argument("--caps", type=int, nargs="+", default=[10, 20, 50])
    args = parser.parse_args()

    w = default_world()
    lit = build_validity_uniform(w)
    print("literal learner, exact:")
    for kind in ("naive", "pedagogical", "pref_color", "pref_texture"):
        p = attempt_success(teacher_policy(w, kind), lit)
        print(f"  {kind:>12}: per-goal success {np.round(p, 3)}  errors/episode (cap 20) {expected_errors(p, 20):.3f}")

    print("simulated median errors, pragmatic / literal:")
    for kind in ("pref_color", "pref_texture"):
        for cap in args.caps:
            med = {}
            for pragmatic in (True, False):
                errs = []
                for seed in args.seeds:
                    t = Agent("teacher", teacher_policy(w, kind))
                    l = Agent("learner", lit, pragmatic=pragmatic)
                    log = run_teaching_session(t, l, None, args.episodes, random.Random(f"{seed}:exchange"),
                                               random.Random(f"{seed}:goals"), max_retries=cap)
                    errs.append(log.comm_errors)
                med[pragmatic] = statistics.median(errs)
            print(f"  {kind:>12} cap {cap:>3}: {med[True]:g} / {med[False]:g} = {med[True] / med[False]:.3f}")


if __name__ == "__main__":
    main()
