"""
情感聚合模块
评论 → 帖子 → 博客 两级点赞加权平均，生成情感面板
"""
import logging
import os
import re
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import DimensionMismatch, EmptyCommentSet, EmptyPostSet, MissingCell, RecordError
from .panel import SentimentPanel, validate_panel

# 配置日志
logger = logging.getLogger(__name__)
logger.setLevel(logging.DEBUG)
if not logger.handlers:
    handler = logging.StreamHandler()
    handler.setLevel(os.getenv('OPINIONFIT_LOG_LEVEL', 'INFO').upper())
    formatter = logging.Formatter('%(asctime)s - [Aggregator] - %(levelname)s - %(message)s')
    handler.setFormatter(formatter)
    logger.addHandler(handler)


@dataclass(frozen=True)
class EngagementRecord:
    """一条已打分的一级评论"""
    blog_id: str
    period: int
    post_id: str
    comment_score: float
    comment_likes: int
    post_likes: int

    def __post_init__(self):
        object.__setattr__(self, 'blog_id', str(self.blog_id))
        object.__setattr__(self, 'post_id', str(self.post_id))
        if not self.blog_id or not self.post_id:
            raise RecordError("blog_id 与 post_id 不能为空")
        if int(self.period) != self.period or self.period < 1:
            raise RecordError(f"期号必须是正整数: {self.period}")
        if not 0.0 <= float(self.comment_score) <= 1.0:
            raise RecordError(f"评论情感分必须位于 [0,1]: {self.comment_score}")
        for name in ('comment_likes', 'post_likes'):
            count = getattr(self, name)
            if int(count) != count or count < 0:
                raise RecordError(f"{name} 必须是非负整数: {count}")
        object.__setattr__(self, 'period', int(self.period))
        object.__setattr__(self, 'comment_score', float(self.comment_score))
        object.__setattr__(self, 'comment_likes', int(self.comment_likes))
        object.__setattr__(self, 'post_likes', int(self.post_likes))


def _weighted_mean(items: Sequence[Tuple[float, int]]) -> float:
    """点赞加权平均；总点赞为0时退化为简单平均"""
    items = sorted((float(score), int(likes)) for score, likes in items)
    scores = np.array([score for score, _ in items])
    likes = np.array([likes for _, likes in items], dtype=float)
    total = likes.sum()
    if total == 0:
        return float(np.clip(scores.mean(), scores.min(), scores.max()))
    return float(np.clip(np.dot(likes, scores) / total, scores.min(), scores.max()))


def post_sentiment(comments: Sequence[Tuple[float, int]]) -> float:
    """
    帖子情感：Σλ_c σ_c / Σλ_c

    Args:
        comments: [(评论情感分, 评论点赞数), ...]
    """
    if not comments:
        raise EmptyCommentSet("帖子没有一级评论")
    return _weighted_mean(comments)


def blog_sentiment(posts: Sequence[Tuple[float, int]]) -> float:
    """
    博客情感：Σλ_p σ_p / Σλ_p

    Args:
        posts: [(帖子情感, 帖子点赞数), ...]
    """
    if not posts:
        raise EmptyPostSet("博客在该期没有帖子")
    return _weighted_mean(posts)


def natural_key(value: str):
    """blog2 排在 blog10 之前"""
    return [int(part) if part.isdigit() else part for part in re.split(r'(\d+)', value)]


def _group(records: Iterable[EngagementRecord]) -> Dict[Tuple[str, int], Dict[str, List[EngagementRecord]]]:
    cells: Dict[Tuple[str, int], Dict[str, List[EngagementRecord]]] = {}
    for record in records:
        cells.setdefault((record.blog_id, record.period), {}).setdefault(record.post_id, []).append(record)
    return cells


def cell_counts(records: Iterable[EngagementRecord]) -> Dict[Tuple[str, int], int]:
    """每个 (博客, 期) 单元的记录数"""
    counts: Dict[Tuple[str, int], int] = {}
    for record in records:
        key = (record.blog_id, record.period)
        counts[key] = counts.get(key, 0) + 1
    return counts


def build_panel(records: Sequence[EngagementRecord], B: int, T: int,
                blog_ids: Optional[Sequence[str]] = None) -> SentimentPanel:
    """
    由评论记录构造 B×T 面板

    Args:
        records: 评论记录
        B: 博客数
        T: 期数
        blog_ids: 博客顺序（默认按自然顺序排列记录中出现的博客；
            不足 B 个时，缺失的行以行号命名并报告为 MissingCell）

    Returns:
        SentimentPanel，期标签为 p1..pT
    """
    cells = _group(records)
    if blog_ids is None:
        blog_ids = sorted({blog for blog, _ in cells}, key=natural_key)
        if len(blog_ids) > B:
            raise DimensionMismatch(f"记录中博客数 {len(blog_ids)} 超过 B={B}: {blog_ids}")
        blog_ids += [str(row + 1) for row in range(len(blog_ids), B)]
    blog_ids = [str(b) for b in blog_ids]
    if len(blog_ids) != B:
        raise DimensionMismatch(f"博客ID数 {len(blog_ids)} 与 B={B} 不一致: {blog_ids}")
    unknown = sorted({(blog, period) for blog, period in cells
                      if blog not in blog_ids or period > T})
    if unknown:
        raise RecordError(f"记录超出面板范围: {unknown[:5]}")

    values = np.zeros((B, T))
    for row, blog in enumerate(blog_ids):
        for period in range(1, T + 1):
            posts = cells.get((blog, period))
            if not posts:
                raise MissingCell(blog, period)
            post_items = []
            for post_id in sorted(posts):
                post_records = posts[post_id]
                likes = {record.post_likes for record in post_records}
                if len(likes) != 1:
                    raise RecordError(
                        f"帖子点赞数不一致: blog={blog}, period={period}, post={post_id}, likes={sorted(likes)}"
                    )
                score = post_sentiment([(r.comment_score, r.comment_likes) for r in post_records])
                post_items.append((score, likes.pop()))
            values[row, period - 1] = blog_sentiment(post_items)

    logger.info(f"面板聚合完成: B={B}, T={T}, 记录数={len(records)}")
    return validate_panel(values, blog_ids, [f"p{t}" for t in range(1, T + 1)])
