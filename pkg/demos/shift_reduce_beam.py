"""Joint vs conditional stochastic shift-reduce parsing with beam search.

Trees are head-binarized, turned into oracle move sequences, and a move
distribution is estimated either jointly, P(move | top two stack labels),
or conditionally with a look-ahead, mixing P(move | s1, s2, word) with
P(move | s1, s2) by deleted interpolation.  Both enforce structural zeros
(no reduce on a too-short stack; the accept shift only on the bare start
stack) by masking and renormalizing.  Parsing runs a beam synchronized on
the number of words shifted, and the results are compared against a plain
PCFG baseline on the same binarized treebank.

Run:  python3 demos/shift_reduce_beam.py
"""

from condest import toydata
from condest.evaluation import score_corpus
from condest.pcfg import estimate_mle, extract_counts, viterbi_parse
from condest.shiftreduce import (BeamConfig, estimate_conditional,
                                 estimate_joint, parse_corpus)
from condest.trees import Corpus, binarize, debinarize, tree_yield

train, heldout, test = toydata.sr_corpora()
btrain = Corpus([binarize(t) for t in train])
bheldout = Corpus([binarize(t) for t in heldout])
sentences = [tree_yield(t) for t in test]
gold = list(test)

joint = estimate_joint(btrain)
cond = estimate_conditional(btrain, bheldout)

print("%-12s %8s %8s %8s %8s %9s" % ("parser", "beam", "P", "R", "F",
                                     "failures"))
for name, model in (("joint", joint), ("conditional", cond)):
    for thr in (1e-6, 1e-9):
        pred, failures = parse_corpus(model, sentences,
                                      BeamConfig(threshold=thr))
        rep = score_corpus(gold, pred)
        print("%-12s %8g %8.4f %8.4f %8.4f %9d"
              % (name, thr, rep.precision, rep.recall, rep.f_score, failures))

baseline = estimate_mle(extract_counts(btrain))
pred = []
failures = 0
for words in sentences:
    t = viterbi_parse(baseline, words)
    if t is None:
        failures += 1
        pred.append(None)
    else:
        pred.append(debinarize(t))
rep = score_corpus(gold, pred)
print("%-12s %8s %8.4f %8.4f %8.4f %9d"
      % ("pcfg", "-", rep.precision, rep.recall, rep.f_score, failures))
