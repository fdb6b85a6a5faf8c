import os
from pathlib import Path

import pytest

import docparse_eval as de

FIXTURES = Path(os.environ.get("DOCPARSE_EVAL_FIXTURE_DIR", Path(__file__).resolve().parents[1] / "fixtures"))


@pytest.fixture(scope="module")
def dataset():
    return de.Dataset.load(str(FIXTURES / "gt_fixtures.json"))


def test_edit_distance():
    assert de.levenshtein("kitten", "sitting") == 3
    assert de.normalized_edit_distance("kitten", "sitting") == pytest.approx(3 / 7)
    assert de.normalized_edit_distance("", "") == 0.0


def test_teds_and_bleu():
    gt = "<table><tr><td>a</td><td>b</td></tr></table>"
    assert de.teds(gt, gt) == 1.0
    assert de.teds(gt, "no table here") == 0.0
    assert de.bleu("x + y", "x + y + z") == pytest.approx(0.4949232003839765, abs=1e-12)


def test_extract_elements():
    doc = de.extract_elements("Intro text.\n\n$$x^2$$\n\nMore text.")
    kinds = [e["kind"] for e in doc["elements"]]
    assert kinds == ["text_paragraph", "display_formula", "text_paragraph"]
    assert doc["elements"][1]["content"] == "x^2"
    assert doc["warnings"] == []


def test_match_paragraphs_merges_split():
    r = de.match_paragraphs(["one long paragraph of text here"], ["one long paragraph", "of text here"])
    assert r["pairs"] == [([0], [0, 1], 0.0)]
    assert r["cost"] == 0.0


def test_dataset_identity(dataset):
    assert len(dataset) == 60
    page = dataset.page_ids()[0]
    scores = dataset.evaluate_page(page, dataset.page_markdown(page))
    for key in ("text_edit", "formula_edit", "table_edit", "read_order_edit"):
        assert scores[key] in (None, 0.0)
    assert de.dataset_stats(dataset)["pages"] == 60


def test_evaluate_report():
    report = de.evaluate(FIXTURES / "gt_fixtures.json", FIXTURES / "pred_identity.jsonl", jobs=2)
    assert report["overall"]["all"]["overall_edit"] == 0.0
    assert report["overall"]["all"]["pages"] == 60


def test_bad_input_raises():
    with pytest.raises(de.InputError):
        de.evaluate(FIXTURES / "missing.json", FIXTURES / "pred_identity.jsonl")
    with pytest.raises(ValueError):
        de.Dataset.load(str(FIXTURES / "missing.json"))
