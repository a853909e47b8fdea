"""Reference computations kept independent of the package code paths.

High-precision arithmetic uses mpmath; optimal average costs come from
brute force over every deterministic stationary policy.
"""
import itertools

from mpmath import exp, mp, mpf

mp.dps = 40


def exp_complement(gamma, h):
    return 1 - exp(-mpf(gamma) * h)


def cycle_cost(H, backhaul, scale, probs, beta=0):
    """Average cost of refreshing at age H, in high precision."""
    return (sum(beta + scale * probs[h] for h in range(H + 1)) + backhaul) / (H + 1)


def brute_force_average_cost(stay_cost, backhaul):
    """Minimum over all 2**(T+1) stationary policies of the long-run average
    cost started from age 0.

    Refreshing at age h costs ``stay_cost[h] + backhaul`` and returns to age 0;
    waiting costs ``stay_cost[h]`` and moves to ``min(h + 1, T)``.
    Returns ``(cost, policy)`` for the best policy (first found on ties).
    """
    t_max = len(stay_cost) - 1
    best = None
    for rule in itertools.product((0, 1), repeat=t_max + 1):
        h, seen, path = 0, {}, []
        while h not in seen:
            seen[h] = len(path)
            path.append(h)
            h = 0 if rule[h] else min(h + 1, t_max)
        cycle = path[seen[h]:]
        cost = sum(mpf(stay_cost[x]) + rule[x] * mpf(backhaul) for x in cycle) / len(cycle)
        if best is None or cost < best[0]:
            best = (cost, rule)
    return best


# Frozen outputs (mp.dps = 40) for the single-content setup:
# lambda=100, p=1, alpha=10, beta=0, E=500, P(h) = 1 - exp(-0.4 h), T_max=20.
ONE_MINUS_EXP_MINUS_8 = 0.99966453737209748816
REDIRECT_COST_AGE_1 = 329.67995396436069926
REF_TABLE = [
    500.0,
    414.83997698218034963,
    460.11699661571303594,
    519.7891944837342528,
    575.45205198805632054,
    623.65416278394481847,
    664.45814620203662963,
    698.7996200986298053,
    727.73719520118580303,
    752.23110343633796665,
    773.0904904976950442,
    790.97650463096475375,
    806.42217757865823201,
    819.8551245786997317,
    831.61825869235422086,
    841.98719551304043466,
    851.18432770208664823,
    859.38998865486823427,
    866.75122157785534408,
    873.38863792729054634,
    879.40177599609087691,
]
REF_NEVER = 999.66453737209748816
REF_BEST_THRESHOLD = 1
REF_BEST_COST = 414.83997698218034963
ZIPF_2_1_1 = (0.68188799981826, 0.31811200018174)
