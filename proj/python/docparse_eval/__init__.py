"""Evaluation of document-parsing output against annotated ground truth."""

import json

from ._core import (
    Dataset,
    InputError,
    bleu,
    canonical_table,
    extract_elements,
    levenshtein,
    match_paragraphs,
    normalize_text,
    normalized_edit_distance,
    order_distance,
    preprocess,
    run_cli,
    teds,
    tokenize_latex,
)

__all__ = [
    "Dataset",
    "InputError",
    "bleu",
    "canonical_table",
    "dataset_stats",
    "evaluate",
    "evaluate_layout",
    "extract_elements",
    "levenshtein",
    "match_paragraphs",
    "normalize_text",
    "normalized_edit_distance",
    "order_distance",
    "preprocess",
    "run_cli",
    "teds",
    "tokenize_latex",
]


def dataset_stats(dataset):
    return json.loads(dataset.stats_json())


def evaluate_layout(dataset, detections_text):
    return json.loads(dataset.evaluate_layout_json(detections_text))


def evaluate(gt, pred, task="end2end", jobs=1, group_by=(), **flags):
    """Run an evaluation and return the report as a dict.

    Extra keyword flags map to command-line options: match_threshold=0.8
    becomes --match-threshold 0.8.
    """
    args = ["--task", task, "--gt", str(gt), "--pred", str(pred), "--format", "json", "--jobs", str(jobs)]
    for g in group_by:
        args += ["--group-by", g]
    for key, value in flags.items():
        args += ["--" + key.replace("_", "-"), str(value)]
    code, out, err = run_cli(args)
    if code != 0:
        raise InputError(err.strip() or f"evaluation failed with status {code}")
    return json.loads(out)
