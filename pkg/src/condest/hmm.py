"""Bitag tagging models: one conditional and three joint chain models over
(word, tag) sequences, with deleted-interpolation smoothing and
posterior-marginal decoding.

All four variants factor over positions j = 1..m+1 with end-markers at
both boundaries, so a single forward-backward pass over the tag lattice
decodes any of them; only the per-edge factor differs.
"""

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .interp import CondTable, InterpolatedCondDist, fit_interpolation

END = "<end>"
UNK = "<unk>"
UNK_THRESHOLD = 2  # words with training count below this are mapped to UNK

VARIANTS = ("joint", "conditional", "joint-prevword", "joint-nextemit")


class TaggingError(ValueError):
    pass


@dataclass
class TaggedCorpus:
    sentences: list  # [(words tuple, tags tuple)]

    def __post_init__(self):
        for words, tags in self.sentences:
            if len(words) != len(tags) or not words:
                raise TaggingError("words/tags length mismatch or empty sentence")
            if END in words or END in tags:
                raise TaggingError("reserved end-marker appears in data")

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)


def read_tagged(text):
    """One sentence per line, space-separated ``word_tag`` tokens."""
    sentences = []
    for lineno, line in enumerate(text.split("\n"), 1):
        line = line.strip()
        if not line:
            continue
        words, tags = [], []
        for tok in line.split():
            if "_" not in tok:
                raise TaggingError("line %d: token %r lacks '_'" % (lineno, tok))
            w, t = tok.rsplit("_", 1)
            words.append(w)
            tags.append(t)
        sentences.append((tuple(words), tuple(tags)))
    return TaggedCorpus(sentences)


def write_tagged(corpus):
    return "".join(
        " ".join("%s_%s" % (w, t) for w, t in zip(words, tags)) + "\n"
        for words, tags in corpus)


class EmpiricalTables:
    """Count tables for every conditional factor the four models need."""

    def __init__(self):
        self.word_counts = defaultdict(float)  # raw, pre-UNK
        self.trans = CondTable()               # P(T_j | T_{j-1})
        self.emit = CondTable()                # P(W_j | T_j)
        self.emit_prev = CondTable()           # P(W_j | T_{j-1})
        self.tag_given_word = CondTable()      # P(T_j | W_j)
        self.tag_given_prevword = CondTable()  # P(T_j | W_{j-1})
        self.full0 = CondTable()               # P(T_j | W_j, T_{j-1})
        self.full1 = CondTable()               # P(T_j | W_{j-1}, T_{j-1})
        self.tagset = ()

    def map_word(self, w):
        if w == END:
            return w
        return w if self.word_counts.get(w, 0) >= UNK_THRESHOLD else UNK


def collect_tables(train):
    """Exact counts over a corpus, including both end-marker transitions."""
    if not len(train):
        raise TaggingError("empty training corpus")
    tables = EmpiricalTables()
    for words, _tags in train:
        for w in words:
            tables.word_counts[w] += 1
    tagset = set()
    for words, tags in train:
        tagset.update(tags)
        ws = [END] + [tables.map_word(w) for w in words] + [END]
        ts = [END] + list(tags) + [END]
        for j in range(1, len(ws)):
            w, t = ws[j], ts[j]
            wp, tp = ws[j - 1], ts[j - 1]
            tables.trans.add((tp,), t)
            tables.emit.add((t,), w)
            tables.emit_prev.add((tp,), w)
            tables.tag_given_word.add((w,), t)
            tables.tag_given_prevword.add((wp,), t)
            tables.full0.add((w, tp), t)
            tables.full1.add((wp, tp), t)
    tables.tagset = tuple(sorted(tagset))
    return tables


def _heldout_events(tables, heldout, target):
    events = []
    for words, tags in heldout:
        ws = [END] + [tables.map_word(w) for w in words] + [END]
        ts = [END] + list(tags) + [END]
        for j in range(1, len(ws)):
            if target == "pr0":
                events.append(((ws[j], ts[j - 1]), ts[j]))
            else:
                events.append(((ws[j - 1], ts[j - 1]), ts[j]))
    return events


def fit_deleted_interpolation(tables, heldout, target="pr0",
                              max_iters=100, tol=1e-7):
    """Fit bucketed mixture weights on heldout data by EM.

    target "pr0" mixes P(T|W), P(T|T_prev), P(T|W,T_prev); target "pr1"
    mixes the previous-word analogues.
    """
    if not len(heldout):
        raise TaggingError("empty heldout corpus")
    if target == "pr0":
        components = [(tables.tag_given_word, (0,)),
                      (tables.trans, (1,)),
                      (tables.full0, (0, 1))]
    elif target == "pr1":
        components = [(tables.tag_given_prevword, (0,)),
                      (tables.trans, (1,)),
                      (tables.full1, (0, 1))]
    else:
        raise ValueError("target must be 'pr0' or 'pr1'")
    return fit_interpolation(components, _heldout_events(tables, heldout, target),
                             max_iters=max_iters, tol=tol)


class TaggerModel:
    """One of the four chain tagging models over a shared table set."""

    def __init__(self, variant, tables, pr0=None, pr1=None):
        if variant not in VARIANTS:
            raise ValueError("unknown variant %r" % (variant,))
        if variant in ("conditional", "joint-nextemit") and pr0 is None:
            raise ValueError("variant %r needs the pr0 mixture" % (variant,))
        if variant == "joint-prevword" and pr1 is None:
            raise ValueError("variant %r needs the pr1 mixture" % (variant,))
        self.variant = variant
        self.tables = tables
        self.pr0 = pr0
        self.pr1 = pr1

    @classmethod
    def train(cls, variant, train, heldout=None):
        tables = collect_tables(train)
        pr0 = pr1 = None
        if variant in ("conditional", "joint-nextemit"):
            if heldout is None:
                raise TaggingError("variant %r needs heldout data" % (variant,))
            pr0 = fit_deleted_interpolation(tables, heldout, "pr0")
        if variant == "joint-prevword":
            if heldout is None:
                raise TaggingError("variant %r needs heldout data" % (variant,))
            pr1 = fit_deleted_interpolation(tables, heldout, "pr1")
        return cls(variant, tables, pr0=pr0, pr1=pr1)

    def edge_weight(self, wprev, w, tprev, t):
        """Position factor for the transition tprev -> t reading w (w and
        wprev already UNK-mapped)."""
        tb = self.tables
        if self.variant == "joint":
            return tb.trans.prob((tprev,), t) * tb.emit.prob((t,), w)
        if self.variant == "conditional":
            return self.pr0.prob((w, tprev), t)
        if self.variant == "joint-prevword":
            return tb.emit.prob((t,), w) * self.pr1.prob((wprev, tprev), t)
        return self.pr0.prob((w, tprev), t) * tb.emit_prev.prob((tprev,), w)

    def sequence_log_prob(self, words, tags):
        if len(words) != len(tags):
            raise TaggingError("words/tags length mismatch")
        ws = [END] + [self.tables.map_word(w) for w in words] + [END]
        ts = [END] + list(tags) + [END]
        lp = 0.0
        for j in range(1, len(ws)):
            p = self.edge_weight(ws[j - 1], ws[j], ts[j - 1], ts[j])
            if p <= 0.0:
                return float("-inf")
            lp += math.log(p)
        return lp

    def _lattice(self, words):
        """Per-position weight arrays over the tag lattice.

        Returns (first, mats, final): first[t] covers j=1, mats[j-2] is the
        (tprev, t) matrix for j=2..m, final[t] is the j=m+1 end transition.
        An all-zero column falls back to the tag-bigram distribution.
        """
        tags = self.tables.tagset
        ws = [END] + [self.tables.map_word(w) for w in words] + [END]
        m = len(words)
        trans = self.tables.trans

        first = np.array([self.edge_weight(ws[0], ws[1], END, t) for t in tags])
        if first.max() <= 0.0:
            first = np.array([trans.prob((END,), t) for t in tags])
            if first.max() <= 0.0:
                raise TaggingError("no tag has nonzero probability at position 1")
        mats = []
        for j in range(2, m + 1):
            mat = np.array([[self.edge_weight(ws[j - 1], ws[j], tp, t)
                             for t in tags] for tp in tags])
            if mat.max() <= 0.0:
                mat = np.array([[trans.prob((tp,), t) for t in tags]
                                for tp in tags])
                if mat.max() <= 0.0:
                    raise TaggingError(
                        "no tag has nonzero probability at position %d" % j)
            mats.append(mat)
        final = np.array([self.edge_weight(ws[m], END, t, END) for t in tags])
        if final.max() <= 0.0:
            final = np.array([trans.prob((t,), END) for t in tags])
            if final.max() <= 0.0:
                raise TaggingError("no tag can reach the end marker")
        return first, mats, final

    def log_partition(self, words):
        """Log of the sum over all tag sequences of the chain product."""
        first, mats, final = self._lattice(words)
        alpha = first.astype(float)
        logz = 0.0
        for mat in mats:
            s = alpha.sum()
            if s <= 0.0:
                return float("-inf")
            logz += math.log(s)
            alpha = (alpha / s) @ mat
        total = float(alpha @ final)
        if total <= 0.0:
            return float("-inf")
        return logz + math.log(total)

    def posterior_marginals(self, words):
        """Per-position posterior over tags, shape (m, |tagset|)."""
        if not words:
            raise TaggingError("empty sentence")
        first, mats, final = self._lattice(words)
        m = len(words)
        alphas = [first]
        for mat in mats:
            a = alphas[-1]
            s = a.sum()
            if s <= 0.0:
                raise TaggingError("dead lattice: sentence has zero probability")
            alphas.append((a / s) @ mat)
        betas = [None] * m
        betas[m - 1] = final
        for j in range(m - 2, -1, -1):
            b = betas[j + 1]
            s = b.sum()
            if s <= 0.0:
                raise TaggingError("dead lattice: sentence has zero probability")
            betas[j] = mats[j] @ (b / s)
        out = np.empty((m, len(self.tables.tagset)))
        for j in range(m):
            prod = alphas[j] * betas[j]
            s = prod.sum()
            if s <= 0.0:
                raise TaggingError("dead lattice: sentence has zero probability")
            out[j] = prod / s
        return out

    def posterior_decode(self, words):
        """Tag each position by its maximum posterior marginal; ties go to
        the lexicographically smallest tag."""
        marg = self.posterior_marginals(words)
        tags = self.tables.tagset
        return tuple(tags[int(np.argmax(row))] for row in marg)


def tagging_accuracy(pred, gold):
    """Fraction of aligned positions with equal tags.

    Both arguments are sequences of tag sequences.
    """
    if len(pred) != len(gold):
        raise TaggingError("corpora have different sentence counts")
    total = correct = 0
    for i, (p, g) in enumerate(zip(pred, gold)):
        if len(p) != len(g):
            raise TaggingError("sentence %d: length mismatch" % i)
        total += len(g)
        correct += sum(1 for a, b in zip(p, g) if a == b)
    if total == 0:
        raise TaggingError("empty corpora")
    return correct / total


# ---------------------------------------------------------------------------
# Persistence: sectioned text file with count tables and per-bucket lambdas.

_TABLE_FIELDS = ("trans", "emit", "emit_prev", "tag_given_word",
                 "tag_given_prevword", "full0", "full1")


def save_tagger(model, path):
    tb = model.tables
    with open(path, "w", encoding="utf-8") as f:
        f.write("[meta]\nvariant\t%s\n" % model.variant)
        f.write("[word_counts]\n")
        for w in sorted(tb.word_counts):
            f.write("%s\t%.17g\n" % (w, tb.word_counts[w]))
        for name in _TABLE_FIELDS:
            f.write("[table:%s]\n" % name)
            table = getattr(tb, name)
            for ctx, out, c in sorted(table.items()):
                f.write("%s\t%s\t%.17g\n" % (" ".join(ctx), out, c))
        for name, mix in (("pr0", model.pr0), ("pr1", model.pr1)):
            if mix is None:
                continue
            f.write("[lambdas:%s]\n" % name)
            for b in sorted(mix.lambdas):
                f.write("%d\t%s\n"
                        % (b, " ".join("%.17g" % l for l in mix.lambdas[b])))


def load_tagger(path):
    tables = EmpiricalTables()
    variant = None
    lambdas = {"pr0": None, "pr1": None}
    section = None
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("["):
                section = line.strip("[]")
                if section.startswith("lambdas:"):
                    lambdas[section.split(":", 1)[1]] = {}
                continue
            if section == "meta":
                key, val = line.split("\t")
                if key == "variant":
                    variant = val
            elif section == "word_counts":
                w, c = line.split("\t")
                tables.word_counts[w] = float(c)
            elif section.startswith("table:"):
                table = getattr(tables, section.split(":", 1)[1])
                ctx, out, c = line.split("\t")
                table.add(tuple(ctx.split(" ")), out, float(c))
            elif section.startswith("lambdas:"):
                b, ls = line.split("\t")
                lambdas[section.split(":", 1)[1]][int(b)] = \
                    tuple(float(x) for x in ls.split())
    tagset = set()
    for (tp,), t, _ in tables.trans.items():
        if tp != END:
            tagset.add(tp)
        if t != END:
            tagset.add(t)
    tables.tagset = tuple(sorted(tagset))
    pr0 = pr1 = None
    if lambdas["pr0"] is not None:
        pr0 = InterpolatedCondDist(
            [(tables.tag_given_word, (0,)), (tables.trans, (1,)),
             (tables.full0, (0, 1))], lambdas["pr0"])
    if lambdas["pr1"] is not None:
        pr1 = InterpolatedCondDist(
            [(tables.tag_given_prevword, (0,)), (tables.trans, (1,)),
             (tables.full1, (0, 1))], lambdas["pr1"])
    return TaggerModel(variant, tables, pr0=pr0, pr1=pr1)
