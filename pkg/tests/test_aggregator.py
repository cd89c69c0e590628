import pytest

from opinion_fit.aggregator import (
    EngagementRecord, blog_sentiment, build_panel, cell_counts, natural_key, post_sentiment
)
from opinion_fit.exceptions import DimensionMismatch, EmptyCommentSet, EmptyPostSet, MissingCell, RecordError


def _record(blog, period, post, score, likes, post_likes):
    return EngagementRecord(blog_id=blog, period=period, post_id=post, comment_score=score,
                            comment_likes=likes, post_likes=post_likes)


@pytest.fixture
def records():
    return [
        _record('blog1', 1, 'a', 0.2, 1, 10),
        _record('blog1', 1, 'a', 0.8, 3, 10),
        _record('blog1', 1, 'b', 0.5, 0, 30),
        _record('blog1', 2, 'c', 0.4, 2, 0),
        _record('blog2', 1, 'd', 0.9, 0, 5),
        _record('blog2', 1, 'd', 0.3, 0, 5),
        _record('blog2', 2, 'e', 0.1, 7, 1),
    ]


def test_post_sentiment_is_like_weighted():
    assert post_sentiment([(0.2, 1), (0.8, 3)]) == pytest.approx(0.65)


def test_post_sentiment_without_likes_is_plain_mean():
    assert post_sentiment([(0.2, 0), (0.6, 0)]) == pytest.approx(0.4)


def test_weighted_mean_stays_within_scores():
    value = blog_sentiment([(0.31, 4), (0.37, 9), (0.35, 1)])
    assert 0.31 <= value <= 0.37


def test_post_sentiment_ignores_input_order():
    items = [(0.1, 3), (0.7, 5), (0.4, 2)]
    assert post_sentiment(items) == post_sentiment(list(reversed(items)))


def test_empty_inputs_raise():
    with pytest.raises(EmptyCommentSet):
        post_sentiment([])
    with pytest.raises(EmptyPostSet):
        blog_sentiment([])


def test_record_validation():
    with pytest.raises(RecordError):
        _record('blog1', 1, 'a', 1.5, 0, 0)
    with pytest.raises(RecordError):
        _record('blog1', 0, 'a', 0.5, 0, 0)
    with pytest.raises(RecordError):
        _record('blog1', 1, 'a', 0.5, -1, 0)
    with pytest.raises(RecordError):
        _record('', 1, 'a', 0.5, 0, 0)


def test_build_panel_two_level_average(records):
    panel = build_panel(records, B=2, T=2)
    assert panel.blog_ids == ('blog1', 'blog2')
    assert panel.period_labels == ('p1', 'p2')
    # 帖子 a: 0.65，点赞 10；帖子 b: 0.5，点赞 30
    assert panel.values[0, 0] == pytest.approx((0.65 * 10 + 0.5 * 30) / 40)
    # 单帖子、帖子点赞为0
    assert panel.values[0, 1] == pytest.approx(0.4)
    assert panel.values[1, 0] == pytest.approx(0.6)
    assert panel.values[1, 1] == pytest.approx(0.1)


def test_build_panel_reports_missing_cell(records):
    incomplete = [r for r in records if not (r.blog_id == 'blog2' and r.period == 2)]
    with pytest.raises(MissingCell) as excinfo:
        build_panel(incomplete, B=2, T=2)
    assert excinfo.value.blog_id == 'blog2'
    assert excinfo.value.period == 2


def test_build_panel_rejects_inconsistent_post_likes(records):
    records.append(_record('blog2', 2, 'e', 0.5, 1, 2))
    with pytest.raises(RecordError):
        build_panel(records, B=2, T=2)


def test_build_panel_blog_without_records_is_missing_cell(records):
    only_first = [r for r in records if r.blog_id == 'blog1']
    with pytest.raises(MissingCell) as excinfo:
        build_panel(only_first, B=2, T=2)
    assert (excinfo.value.blog_id, excinfo.value.period) == ('2', 1)

    with pytest.raises(MissingCell) as excinfo:
        build_panel(only_first, B=2, T=2, blog_ids=['blog1', 'blog2'])
    assert (excinfo.value.blog_id, excinfo.value.period) == ('blog2', 1)


def test_build_panel_blog_count_mismatch(records):
    with pytest.raises(DimensionMismatch):
        build_panel(records, B=1, T=2)
    with pytest.raises(DimensionMismatch):
        build_panel(records, B=2, T=2, blog_ids=['blog1'])


def test_build_panel_rejects_records_beyond_horizon(records):
    with pytest.raises(RecordError):
        build_panel(records, B=2, T=1)


def test_cell_counts(records):
    counts = cell_counts(records)
    assert counts[('blog1', 1)] == 3
    assert counts[('blog2', 2)] == 1


def test_natural_key_orders_numbered_blogs():
    assert sorted(['blog10', 'blog2', 'blog1'], key=natural_key) == ['blog1', 'blog2', 'blog10']
