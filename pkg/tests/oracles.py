"""Independent brute-force oracles, written before the engine paths they
check and kept free of any pdcf internals.

Everything here works on plain dicts and lists in linear probability
space: posterior by direct product of normalized Gaussian terms, the
predictive distribution by explicit mixture, and information gain by
enumerating every possible answer and recomputing the posterior from
scratch.  Deliberately slow and obvious.
"""

import itertools
import math


def gauss_likelihood(x, y, sigma, scale_values):
    """Pr(reported = x | true = y), normalized over the scale; y=None
    (no rating) gives the uniform distribution."""
    if y is None:
        return 1.0 / len(scale_values)
    num = math.exp(-((x - y) ** 2) / (2.0 * sigma * sigma))
    den = sum(
        math.exp(-((xp - y) ** 2) / (2.0 * sigma * sigma)) for xp in scale_values
    )
    return num / den


def posterior(active, entries, n_users, sigma, scale_values):
    """Posterior over database users given active ratings.

    active: dict title -> value; entries: dict (user, title) -> value.
    """
    weights = []
    for i in range(n_users):
        w = 1.0 / n_users
        for j, x in sorted(active.items()):
            y = entries.get((i, j))
            w *= gauss_likelihood(x, y, sigma, scale_values)
        weights.append(w)
    total = sum(weights)
    return [w / total for w in weights]


def predictive(j, active, entries, n_users, sigma, scale_values):
    """Distribution over scale values for the active user's rating of j."""
    post = posterior(active, entries, n_users, sigma, scale_values)
    out = {}
    for x in scale_values:
        p = 0.0
        for i in range(n_users):
            y = entries.get((i, j))
            p += gauss_likelihood(x, y, sigma, scale_values) * post[i]
        out[x] = p
    return out


def most_probable(dist, scale_values):
    """Argmax with ties broken toward the value nearest the mean, then
    toward the smaller value."""
    top = max(dist.values())
    tied = [v for v in scale_values if dist[v] == top]
    if len(tied) == 1:
        return tied[0]
    mean = sum(v * p for v, p in dist.items())
    return min(tied, key=lambda v: (abs(v - mean), v))


def entropy(probs):
    return -sum(p * math.log(p) for p in probs if p > 0)


def information_gain(q, active, entries, n_users, sigma, scale_values):
    """Expected entropy drop of the posterior from observing a rating of q,
    by full enumeration of the possible answers."""
    post = posterior(active, entries, n_users, sigma, scale_values)
    pred = predictive(q, active, entries, n_users, sigma, scale_values)
    h_now = entropy(post)
    expected = 0.0
    for x in scale_values:
        augmented = dict(active)
        augmented[q] = x
        post_x = posterior(augmented, entries, n_users, sigma, scale_values)
        expected += pred[x] * entropy(post_x)
    return h_now - expected


def exhaustive_randomization(devs_a, devs_b):
    """Exact two-sided significance level by enumerating every partition
    of the pooled scores into the original sizes."""
    pool = list(devs_a) + list(devs_b)
    n_a = len(devs_a)
    obs = abs(
        sum(devs_a) / n_a - sum(devs_b) / len(devs_b)
    )
    hits = 0
    total = 0
    for combo in itertools.combinations(range(len(pool)), n_a):
        chosen = set(combo)
        sa = sum(pool[i] for i in chosen)
        sb = sum(pool[i] for i in range(len(pool)) if i not in chosen)
        diff = abs(sa / n_a - sb / (len(pool) - n_a))
        total += 1
        if diff >= obs - 1e-12:
            hits += 1
    return hits / total
