"""Fruit-count and placement statistics on one fixed skeleton over many scatter seeds."""
import argparse

import numpy as np
from scipy import stats

from orchard.scatter import AttachmentKind, ScatterParams, eligible_branches, scatter_attachments
from orchard.treegen import TreeParams, generate_skeleton


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=500)
    ap.add_argument("--density", type=float, default=ScatterParams().fruit_density)
    args = ap.parse_args()

    sk = generate_skeleton(TreeParams(), 7)
    params = ScatterParams(fruit_density=args.density)
    ids, lengths = eligible_branches(sk, params.eligible_min_level)
    start = dict(zip(ids.tolist(), np.concatenate([[0.0], np.cumsum(lengths)[:-1]])))
    size = dict(zip(ids.tolist(), lengths))
    total = lengths.sum()
    counts, u = [], []
    for seed in range(args.seeds):
        fruit = [a for a in scatter_attachments(sk, params, np.random.default_rng(seed))
                 if a.kind == AttachmentKind.FRUIT]
        counts.append(len(fruit))
        u += [(start[a.branch_id] + a.t * size[a.branch_id]) / total for a in fruit]
    lam = params.fruit_density * total
    print(f"eligible length {total:.3f}, expected fruit {lam:.2f}")
    print(f"observed mean {np.mean(counts):.2f}, variance {np.var(counts):.2f}")
    print(f"arc-length KS vs uniform: p = {stats.kstest(u, 'uniform').pvalue:.3f}")


if __name__ == "__main__":
    main()
