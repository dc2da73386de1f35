import math

import numpy as np
import pytest

from condest import toydata
from condest.hmm import (END, UNK, VARIANTS, TaggedCorpus, TaggerModel,
                         TaggingError, collect_tables,
                         fit_deleted_interpolation, load_tagger, read_tagged,
                         save_tagger, tagging_accuracy, write_tagged)
from oracles import brute_tag_decode, brute_tag_marginals, brute_tag_partition


@pytest.fixture
def det_corpus():
    # every word seen twice, fully deterministic chain
    return TaggedCorpus([(("ka", "li"), ("X", "Y"))] * 2)


def test_read_write_round_trip():
    text = "ka_X li_Y\nmo_Z\n"
    corpus = read_tagged(text)
    assert corpus.sentences == [(("ka", "li"), ("X", "Y")), (("mo",), ("Z",))]
    assert write_tagged(corpus) == text


def test_read_tagged_word_with_underscore():
    corpus = read_tagged("a_b_X\n")
    assert corpus.sentences == [(("a_b",), ("X",))]


def test_read_tagged_malformed():
    with pytest.raises(TaggingError, match="line 1"):
        read_tagged("ka\n")


def test_corpus_validation():
    with pytest.raises(TaggingError):
        TaggedCorpus([(("a",), ("X", "Y"))])
    with pytest.raises(TaggingError, match="end-marker"):
        TaggedCorpus([((END,), ("X",))])


def test_collect_tables_counts(det_corpus):
    tb = collect_tables(det_corpus)
    assert tb.tagset == ("X", "Y")
    # both words occur twice, so neither maps to UNK
    assert tb.map_word("ka") == "ka"
    assert tb.map_word("unseen") == UNK
    assert tb.trans.prob((END,), "X") == 1.0
    assert tb.trans.prob(("X",), "Y") == 1.0
    assert tb.trans.prob(("Y",), END) == 1.0
    assert tb.emit.prob(("X",), "ka") == 1.0
    assert tb.emit_prev.prob((END,), "ka") == 1.0
    assert tb.emit_prev.prob(("X",), "li") == 1.0
    assert tb.tag_given_word.prob(("ka",), "X") == 1.0
    assert tb.full0.prob(("ka", END), "X") == 1.0
    assert tb.full1.prob((END, END), "X") == 1.0


def test_rare_words_mapped_to_unk():
    corpus = TaggedCorpus([(("ka", "rare"), ("X", "Y")),
                           (("ka", "other"), ("X", "Y"))])
    tb = collect_tables(corpus)
    assert tb.emit.prob(("Y",), UNK) == 1.0
    assert tb.emit.prob(("X",), "ka") == 1.0


def test_collect_tables_empty():
    with pytest.raises(TaggingError, match="empty"):
        collect_tables(TaggedCorpus([]))


def test_joint_sequence_log_prob(det_corpus):
    model = TaggerModel.train("joint", det_corpus)
    assert model.sequence_log_prob(("ka", "li"), ("X", "Y")) == pytest.approx(0.0)
    assert model.sequence_log_prob(("ka", "li"), ("Y", "X")) == float("-inf")


def test_joint_decode_degenerate(det_corpus):
    model = TaggerModel.train("joint", det_corpus)
    assert model.posterior_decode(("ka", "li")) == ("X", "Y")
    assert model.log_partition(("ka", "li")) == pytest.approx(0.0)


def test_variant_validation(det_corpus):
    with pytest.raises(ValueError, match="unknown variant"):
        TaggerModel.train("bogus", det_corpus)
    with pytest.raises(TaggingError, match="heldout"):
        TaggerModel.train("conditional", det_corpus)


def test_decode_tie_breaks_lexicographically():
    corpus = TaggedCorpus([(("w", "w"), ("A", "A")), (("w", "w"), ("B", "B"))])
    model = TaggerModel.train("joint", corpus)
    # A and B are exactly symmetric; ties go to the smaller tag
    assert model.posterior_decode(("w", "w")) == ("A", "A")


def test_marginals_rows_sum_to_one():
    train, heldout, test = toydata.hmm_corpora(n_train=60, n_heldout=20,
                                               n_test=10)
    for variant in VARIANTS:
        model = TaggerModel.train(variant, train, heldout)
        for words, _tags in list(test)[:5]:
            marg = model.posterior_marginals(words)
            assert np.allclose(marg.sum(axis=1), 1.0, atol=1e-12)


def test_lattice_matches_brute_force():
    train, heldout, test = toydata.hmm_corpora(n_train=60, n_heldout=20,
                                               n_test=20)
    short = [(w[:4], t[:4]) for w, t in test][:6]
    for variant in VARIANTS:
        model = TaggerModel.train(variant, train, heldout)
        for words, _tags in short:
            want = brute_tag_partition(model, words)
            assert model.log_partition(words) == pytest.approx(want, abs=1e-10)
            marg = model.posterior_marginals(words)
            bmarg = brute_tag_marginals(model, words)
            for j, d in enumerate(bmarg):
                for i, tag in enumerate(model.tables.tagset):
                    assert marg[j, i] == pytest.approx(d.get(tag, 0.0),
                                                       abs=1e-10)
            assert model.posterior_decode(words) == brute_tag_decode(model,
                                                                     words)


def test_conditional_variant_normalizes_over_tag_sequences():
    # Pr0 factors are conditional per position, so the partition over all
    # tag sequences is 1 whenever no lattice fallback fires.
    train, heldout, test = toydata.hmm_corpora(n_train=60, n_heldout=20,
                                               n_test=20)
    model = TaggerModel.train("conditional", train, heldout)
    checked = 0
    for words, _tags in test:
        words = words[:4]
        first, mats, final = model._lattice(words)
        logz = brute_tag_partition(model, words)
        if logz > float("-inf"):
            assert logz == pytest.approx(0.0, abs=1e-9)
            checked += 1
    assert checked > 0


def test_deleted_interpolation_recovers_full_context():
    train, heldout = toydata.xor_tagged_corpora()
    tb = collect_tables(train)
    mix = fit_deleted_interpolation(tb, heldout, "pr0")
    assert mix.lambdas
    for lam in mix.lambdas.values():
        assert sum(lam) == pytest.approx(1.0, abs=1e-12)
        assert lam[2] > 0.95
    for a, b in zip(mix.trace, mix.trace[1:]):
        assert b >= a - 1e-9


def test_deleted_interpolation_validation(det_corpus):
    tb = collect_tables(det_corpus)
    with pytest.raises(TaggingError, match="empty heldout"):
        fit_deleted_interpolation(tb, TaggedCorpus([]), "pr0")
    with pytest.raises(ValueError, match="pr0"):
        fit_deleted_interpolation(tb, det_corpus, "pr2")


def test_tagging_accuracy():
    assert tagging_accuracy([("X", "Y")], [("X", "Z")]) == pytest.approx(0.5)
    with pytest.raises(TaggingError):
        tagging_accuracy([("X",)], [("X",), ("Y",)])
    with pytest.raises(TaggingError):
        tagging_accuracy([("X",)], [("X", "Y")])


def test_save_load_round_trip(tmp_path):
    train, heldout, test = toydata.hmm_corpora(n_train=60, n_heldout=20,
                                               n_test=10)
    for variant in VARIANTS:
        model = TaggerModel.train(variant, train, heldout)
        path = tmp_path / ("tagger_%s.txt" % variant)
        save_tagger(model, path)
        loaded = load_tagger(path)
        assert loaded.variant == variant
        assert loaded.tables.tagset == model.tables.tagset
        for words, tags in list(test)[:5]:
            assert loaded.posterior_decode(words) == \
                model.posterior_decode(words)
            assert loaded.sequence_log_prob(words, tags) == pytest.approx(
                model.sequence_log_prob(words, tags))
