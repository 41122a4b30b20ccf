"""
Classical bound by enumeration
==============================

The hybrid five-party inequality mixes two- and four-party correlators.
Enumerating all 2**10 deterministic strategies gives its LHV bound.
"""
from collections import Counter

from lhvcompat.bell import DeterministicStrategy, build_ineq5, chsh, evaluate_deterministic, lhv_bound

expr = build_ineq5()
print(len(expr), "terms, by order:", expr.count_by_order())

res = lhv_bound(expr)
print("bound:", res.max_value, "values:", res.value_set)
print("one optimal strategy:\n", res.argmax.outcomes)

hist = Counter(evaluate_deterministic(expr, DeterministicStrategy.from_mask(m, 5, 2)) for m in range(1024))
print("how often each value occurs:", dict(sorted(hist.items())))

print("CHSH bound:", lhv_bound(chsh()).max_value)
print(chsh().dumps())
