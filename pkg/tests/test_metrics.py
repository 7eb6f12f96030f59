import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bwvnet.errors import InvalidInputError
from bwvnet.metrics import ConfusionMatrix, auc, balanced_point_auc, compute_metrics, report

from oracles import count_confusion, metric_row, pairwise_auc


def test_agreement_row_66_1_0_137():
    rep = compute_metrics(ConfusionMatrix(66, 1, 0, 137))
    pct = rep.as_percentages()
    assert (pct["ac"], pct["pr"], pct["se"]) == (99.51, 98.51, 100.0)


def test_twenty_sample_prelu_row():
    assert metric_row(4, 0, 1, 15) == (95.0, 100.0, 80.0, 88.89, 100.0)
    pct = compute_metrics(ConfusionMatrix(4, 0, 1, 15)).as_percentages()
    assert [pct[k] for k in ("ac", "pr", "se", "f1", "sp")] == [95.0, 100.0, 80.0, 88.89, 100.0]


def test_twenty_sample_matrix_is_unique():
    target = (95.0, 100.0, 80.0, 88.89, 100.0)
    hits = [c for c in itertools.product(range(21), repeat=4)
            if sum(c) == 20 and metric_row(*c) == target]
    assert hits == [(4, 0, 1, 15)]


def test_report_row_format():
    assert report(ConfusionMatrix(4, 0, 1, 15)) == "95.00 100.00 80.00 88.89 100.00 —"


def test_report_with_auc():
    out = report(ConfusionMatrix(1, 0, 0, 1), scores=[0.9, 0.1], labels=[1, 0])
    assert out == "100.00 100.00 100.00 100.00 100.00 100.00"


def test_undefined_precision_footnoted():
    cm = ConfusionMatrix(0, 0, 3, 7)
    rep = compute_metrics(cm)
    assert rep.pr is None and "pr" in rep.undefined
    lines = report(cm).splitlines()
    assert lines[0].split()[1] == "—"
    assert lines[1].startswith("* PR undefined")


def test_all_negative_reference():
    rep = compute_metrics(ConfusionMatrix(0, 2, 0, 8))
    assert rep.se is None and rep.pr == 0.0 and rep.sp == 0.8


def test_empty_matrix_rejected():
    with pytest.raises(InvalidInputError):
        compute_metrics(ConfusionMatrix(0, 0, 0, 0))


@pytest.mark.parametrize("bad", [-1, 1.5])
def test_counts_validated(bad):
    with pytest.raises(InvalidInputError):
        ConfusionMatrix(bad, 0, 0, 1)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=50))
def test_from_predictions_matches_counting(pairs):
    pred, ref = zip(*pairs)
    cm = ConfusionMatrix.from_predictions(pred, ref, positive=0)
    assert (cm.tp, cm.fp, cm.fn, cm.tn) == count_confusion(pred, ref, 0)
    rep = compute_metrics(cm)
    expected = metric_row(cm.tp, cm.fp, cm.fn, cm.tn)
    got = rep.as_percentages()
    assert tuple(got[k] for k in ("ac", "pr", "se", "f1", "sp")) == expected


def test_from_predictions_length_mismatch():
    with pytest.raises(InvalidInputError):
        ConfusionMatrix.from_predictions([0, 1], [0])


# -- AUC ------------------------------------------------------------------------------


@pytest.mark.parametrize("seed", range(25))
def test_auc_matches_pairwise(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 30))
    labels = rng.integers(0, 2, n)
    labels[:2] = [0, 1]
    scores = rng.integers(0, 6, n) / 5  # coarse values force ties
    assert auc(scores, labels) == pytest.approx(pairwise_auc(scores, labels), abs=1e-12)


def test_auc_perfect_and_inverted():
    assert auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert auc([0.9, 0.8, 0.2, 0.1], [0, 0, 1, 1]) == 0.0


def test_auc_all_ties():
    assert auc([0.5] * 6, [0, 1, 0, 1, 1, 0]) == 0.5


def test_auc_single_class():
    with pytest.raises(InvalidInputError):
        auc([0.1, 0.2], [1, 1])


def test_auc_non_binary_labels():
    with pytest.raises(InvalidInputError):
        auc([0.1, 0.2], [0, 2])


def test_balanced_point_auc():
    assert balanced_point_auc(ConfusionMatrix(4, 0, 1, 15)) == pytest.approx(0.9)
    assert balanced_point_auc(ConfusionMatrix(0, 0, 0, 5)) is None
