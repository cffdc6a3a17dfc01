from __future__ import annotations

import random

import pytest

from conftest import make_corpus, make_item
from hypeval.corpus import (
    AgreementSubset,
    CorpusLoadError,
    EvalItem,
    GoldPreference,
    annotator_agreement,
    gold_preference,
    load_corpus,
    subset,
    write_corpus,
)


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def record_line(item_id="i1", reference="a b", hyp_a="a c", hyp_b="b b", votes_a=3, votes_b=1):
    import json

    return json.dumps(
        {
            "id": item_id,
            "reference": reference,
            "hyp_a": hyp_a,
            "hyp_b": hyp_b,
            "votes_a": votes_a,
            "votes_b": votes_b,
        }
    )


class TestLoadCorpus:
    def test_three_line_jsonl_preserves_order(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_lines(path, [record_line(item_id=f"i{k}") for k in (3, 1, 2)])
        corpus = load_corpus(path)
        assert [item.id for item in corpus.items] == ["i3", "i1", "i2"]
        assert corpus.name == "c"

    def test_zero_votes_rejected_with_line_number(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_lines(path, [record_line(), record_line(item_id="i2", votes_a=0, votes_b=0)])
        with pytest.raises(CorpusLoadError, match=r"line 2: no votes"):
            load_corpus(path)

    def test_missing_field_reported(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"id": "x", "reference": "a"}\n', encoding="utf-8")
        with pytest.raises(CorpusLoadError, match="line 1: missing field"):
            load_corpus(path)

    def test_duplicate_id_reported(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_lines(path, [record_line(), record_line()])
        with pytest.raises(CorpusLoadError, match=r"line 2: duplicate id 'i1'"):
            load_corpus(path)

    def test_empty_text_reported(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_lines(path, [record_line(hyp_b="   ")])
        with pytest.raises(CorpusLoadError, match="empty text"):
            load_corpus(path)

    def test_non_numeric_votes_reported(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_lines(path, [record_line(votes_a="seven")])
        with pytest.raises(CorpusLoadError, match="non-numeric votes_a"):
            load_corpus(path)

    def test_bool_votes_rejected(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text(record_line().replace('"votes_a": 3', '"votes_a": true') + "\n")
        with pytest.raises(CorpusLoadError, match="non-numeric votes_a"):
            load_corpus(path)

    def test_invalid_json_line_reported(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_lines(path, [record_line(), "{notjson"])
        with pytest.raises(CorpusLoadError, match="line 2: invalid JSON"):
            load_corpus(path)

    def test_all_errors_collected(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_lines(
            path,
            [record_line(votes_a=0, votes_b=0), record_line(item_id="i2", reference=" ")],
        )
        with pytest.raises(CorpusLoadError, match="2 invalid record"):
            load_corpus(path)

    def test_csv_header_and_rows(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text(
            "id,reference,hyp_a,hyp_b,votes_a,votes_b\n"
            'x1,"one, two, three",one too three,one two tree,4,1\n',
            encoding="utf-8",
        )
        corpus = load_corpus(path, format="csv")
        assert corpus.items[0].reference == "one, two, three"
        assert corpus.items[0].votes_a == 4


class TestRoundTrip:
    def rand_text(self, rng: random.Random) -> str:
        alphabet = list("abcdefgh ,\"'éà-") + ["  "]
        while True:
            text = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 30)))
            if text.strip():
                return text

    def rand_corpus(self, rng: random.Random):
        items = []
        for k in range(rng.randint(1, 12)):
            items.append(
                EvalItem(
                    id=f"item{k}",
                    reference=self.rand_text(rng),
                    hyp_a=self.rand_text(rng),
                    hyp_b=self.rand_text(rng),
                    votes_a=rng.randint(0, 9),
                    votes_b=rng.randint(1, 9),
                )
            )
        return make_corpus(items)

    @pytest.mark.parametrize("fmt", ["jsonl", "csv"])
    def test_write_then_load_is_identity(self, tmp_path, fmt):
        rng = random.Random(20240601)
        for trial in range(25):
            corpus = self.rand_corpus(rng)
            path = tmp_path / f"t{trial}.{fmt}"
            write_corpus(corpus, path, fmt)
            loaded = load_corpus(path, fmt)
            assert loaded.items == corpus.items


class TestAnnotatorAgreement:
    def test_unanimous(self):
        assert annotator_agreement(10, 0) == 1.0

    def test_direct_arithmetic(self):
        assert annotator_agreement(7, 3) == 0.7

    def test_perfect_tie(self):
        assert annotator_agreement(5, 5) == 0.5

    def test_zero_total_is_domain_error(self):
        with pytest.raises(ValueError, match="no votes"):
            annotator_agreement(0, 0)

    def test_bounds_hold_for_random_votes(self):
        rng = random.Random(7)
        for _ in range(500):
            a, b = rng.randint(0, 50), rng.randint(0, 50)
            if a + b == 0:
                continue
            assert 0.5 <= annotator_agreement(a, b) <= 1.0


class TestSubset:
    def test_threshold_definition(self):
        items = [
            make_item("i1", votes_a=10, votes_b=0),  # 1.0
            make_item("i2", votes_a=7, votes_b=3),  # 0.7
            make_item("i3", votes_a=6, votes_b=4),  # 0.6
        ]
        corpus = make_corpus(items)
        kept = subset(corpus, AgreementSubset.AT_LEAST_70)
        assert [item.id for item in kept.items] == ["i1", "i2"]

    def test_exactly_100_excludes_nine_to_one(self):
        corpus = make_corpus([make_item(votes_a=9, votes_b=1)])
        assert len(subset(corpus, AgreementSubset.EXACTLY_100)) == 0

    def test_full_is_identity(self):
        corpus = make_corpus([make_item()])
        assert subset(corpus, AgreementSubset.FULL) is corpus

    def test_exact_rational_boundary(self):
        # 14/20 is exactly 0.7; float slop must not drop it.
        corpus = make_corpus([make_item(votes_a=14, votes_b=6)])
        assert len(subset(corpus, AgreementSubset.AT_LEAST_70)) == 1

    def test_nesting_on_random_corpora(self):
        rng = random.Random(99)
        for _ in range(50):
            items = [
                make_item(f"i{k}", votes_a=rng.randint(0, 12), votes_b=rng.randint(0, 12))
                for k in range(rng.randint(1, 20))
            ]
            items = [i for i in items if i.votes_a + i.votes_b >= 1]
            if not items:
                continue
            corpus = make_corpus(items)
            full = {i.id for i in subset(corpus, AgreementSubset.FULL).items}
            at70 = {i.id for i in subset(corpus, AgreementSubset.AT_LEAST_70).items}
            at100 = {i.id for i in subset(corpus, AgreementSubset.EXACTLY_100).items}
            assert at100 <= at70 <= full


class TestGoldPreference:
    @pytest.mark.parametrize(
        "votes_a,votes_b,expected",
        [(7, 3, GoldPreference.A), (3, 7, GoldPreference.B), (5, 5, GoldPreference.NO_MAJORITY)],
    )
    def test_majority(self, votes_a, votes_b, expected):
        assert gold_preference(make_item(votes_a=votes_a, votes_b=votes_b)) is expected

    def test_antisymmetric_under_vote_swap(self):
        rng = random.Random(13)
        flip = {
            GoldPreference.A: GoldPreference.B,
            GoldPreference.B: GoldPreference.A,
            GoldPreference.NO_MAJORITY: GoldPreference.NO_MAJORITY,
        }
        for _ in range(200):
            a, b = rng.randint(0, 20), rng.randint(0, 20)
            if a + b == 0:
                continue
            forward = gold_preference(make_item(votes_a=a, votes_b=b))
            backward = gold_preference(make_item(votes_a=b, votes_b=a))
            assert backward is flip[forward]


class TestEvalItemInvariants:
    def test_no_votes_rejected(self):
        with pytest.raises(ValueError, match="no votes"):
            make_item(votes_a=0, votes_b=0)

    def test_negative_votes_rejected(self):
        with pytest.raises(ValueError, match="negative"):
            make_item(votes_a=-1, votes_b=2)

    def test_blank_reference_rejected(self):
        with pytest.raises(ValueError, match="empty text"):
            make_item(reference="  \t ")
