"""Compare the four correction weightings against the oracle on one scenario.

The composition leaves a scalar correction (the gap between the product of
the part baselines and the product model's own baseline) to spread across
features.  This scores each spreading rule against exact attributions of
the product model.
"""

import mshap

spec = mshap.ScenarioSpec(y1="Y1B", y2="Y2C", theta1=1.5, theta2=1.0, n=100, seed=5)
result = mshap.run_scenario(spec)

print(f"scenario: y1={spec.y1}, y2={spec.y2}, n={spec.n}, "
      f"theta=({spec.theta1}, {spec.theta2}), seed={spec.seed}")
if result.advisories:
    print("advisories:", "; ".join(result.advisories))

print(f"\n{'weighting':>10} {'score':>7} {'direction':>10} {'value':>7} "
      f"{'rank':>7} {'same sign':>10} {'same rank':>10}")
ordered = sorted(result.scores.items(), key=lambda kv: -kv[1].score)
for method, b in ordered:
    print(f"{method.value:>10} {b.score:7.3f} {b.direction_score:10.3f} "
          f"{b.relative_value_score:7.3f} {b.rank_score:7.3f} "
          f"{b.pct_same_sign:9.1%} {b.pct_same_rank:9.1%}")

best = ordered[0][0]
print(f"\nbest weighting on this cell: {best.value}")
