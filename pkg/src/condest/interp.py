"""Empirical conditional distributions and deleted-interpolation smoothing.

Shared between the tagging models (three-way mixtures over tags) and the
conditional shift-reduce parser (two-way mixtures over moves).  Mixture
weights are tied across contexts bucketed by frequency and fitted on
heldout data by EM on the weight simplex.
"""

import math
from collections import defaultdict

BUCKET_CAP = 16


def bucket_id(count, cap=BUCKET_CAP):
    """Frequency bucket: floor(log2(count + 1)), capped."""
    return min(cap, int(math.floor(math.log2(count + 1))))


class CondTable:
    """Empirical conditional distribution P(outcome | context) from counts."""

    def __init__(self):
        self.counts = defaultdict(dict)   # ctx -> {outcome: count}
        self.totals = defaultdict(float)  # ctx -> total count

    def add(self, ctx, out, k=1.0):
        d = self.counts[ctx]
        d[out] = d.get(out, 0.0) + k
        self.totals[ctx] += k

    def prob(self, ctx, out):
        tot = self.totals.get(ctx, 0.0)
        if tot <= 0.0:
            return 0.0
        return self.counts[ctx].get(out, 0.0) / tot

    def total(self, ctx):
        return self.totals.get(ctx, 0.0)

    def dist(self, ctx):
        tot = self.totals.get(ctx, 0.0)
        if tot <= 0.0:
            return {}
        return {o: c / tot for o, c in self.counts[ctx].items()}

    def contexts(self):
        return self.counts.keys()

    def items(self):
        for ctx, d in self.counts.items():
            for out, c in d.items():
                yield ctx, out, c


def fit_mixture_weights(events, k, max_iters=100, tol=1e-7):
    """EM for bucket-tied mixture weights.

    ``events`` is a sequence of (bucket, (p_1, ..., p_k)) heldout items,
    where p_i is component i's probability for the observed outcome.
    Events whose component probabilities are all zero are skipped.

    Returns (lambdas, trace): ``lambdas`` maps bucket -> k-tuple on the
    simplex; ``trace`` is the per-iteration heldout log-likelihood, which
    is non-decreasing.  Buckets with no usable events get uniform weights.
    """
    by_bucket = defaultdict(list)
    for bucket, probs in events:
        if any(p > 0.0 for p in probs):
            by_bucket[bucket].append(probs)

    uniform = tuple([1.0 / k] * k)
    lambdas = {b: uniform for b in by_bucket}
    trace = []
    prev_ll = None
    for _ in range(max_iters):
        ll = 0.0
        new = {}
        for b, items in by_bucket.items():
            lam = lambdas[b]
            acc = [0.0] * k
            for probs in items:
                mix = sum(l * p for l, p in zip(lam, probs))
                ll += math.log(mix)
                for i in range(k):
                    acc[i] += lam[i] * probs[i] / mix
            tot = sum(acc)
            new[b] = tuple(a / tot for a in acc) if tot > 0 else uniform
        trace.append(ll)
        lambdas = new
        if prev_ll is not None:
            if ll - prev_ll < tol * (abs(prev_ll) + 1.0):
                break
        prev_ll = ll
    return lambdas, trace


class InterpolatedCondDist:
    """Bucket-tied mixture of empirical conditional distributions.

    Each component is a CondTable paired with an index tuple projecting the
    full context onto that component's conditioning variables.  The bucket
    of a full context is derived from the finest (last) component's context
    count.
    """

    def __init__(self, components, lambdas, trace=None):
        self.components = list(components)  # [(CondTable, ctx index tuple)]
        self.lambdas = dict(lambdas)
        self.trace = list(trace) if trace is not None else []
        self._k = len(self.components)
        self._uniform = tuple([1.0 / self._k] * self._k)

    def project(self, full_ctx, i):
        _, idx = self.components[i]
        return tuple(full_ctx[j] for j in idx)

    def bucket(self, full_ctx):
        table, _ = self.components[-1]
        return bucket_id(table.total(self.project(full_ctx, self._k - 1)))

    def weights(self, full_ctx):
        return self.lambdas.get(self.bucket(full_ctx), self._uniform)

    def component_probs(self, full_ctx, out):
        return tuple(
            table.prob(self.project(full_ctx, i), out)
            for i, (table, _) in enumerate(self.components))

    def prob(self, full_ctx, out):
        lam = self.weights(full_ctx)
        return sum(l * p for l, p in zip(lam, self.component_probs(full_ctx, out)))

    def dist(self, full_ctx):
        lam = self.weights(full_ctx)
        out = defaultdict(float)
        for i, (table, _) in enumerate(self.components):
            for o, p in table.dist(self.project(full_ctx, i)).items():
                out[o] += lam[i] * p
        return dict(out)


def fit_interpolation(components, heldout_events, max_iters=100, tol=1e-7):
    """Fit an InterpolatedCondDist.

    ``heldout_events`` is a sequence of (full_ctx, outcome) pairs.
    """
    k = len(components)
    probe = InterpolatedCondDist(components, {})
    events = []
    for full_ctx, out in heldout_events:
        events.append((probe.bucket(full_ctx), probe.component_probs(full_ctx, out)))
    lambdas, trace = fit_mixture_weights(events, k, max_iters=max_iters, tol=tol)
    return InterpolatedCondDist(components, lambdas, trace)
