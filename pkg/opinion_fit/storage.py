"""
文件操作管理模块
面板/记录 CSV、拟合结果 JSON 与导出表的读写
"""
import json
import logging
import os
from typing import Dict, List

import pandas as pd

from .aggregator import EngagementRecord, natural_key
from .exceptions import RecordError, StorageError
from .panel import SentimentPanel, validate_panel

# 配置日志
logger = logging.getLogger(__name__)
logger.setLevel(logging.DEBUG)
if not logger.handlers:
    handler = logging.StreamHandler()
    handler.setLevel(os.getenv('OPINIONFIT_LOG_LEVEL', 'INFO').upper())
    formatter = logging.Formatter('%(asctime)s - [FileManager] - %(levelname)s - %(message)s')
    handler.setFormatter(formatter)
    logger.addHandler(handler)

RECORD_COLUMNS = ['blog_id', 'period', 'post_id', 'comment_score', 'comment_likes', 'post_likes']
FLOAT_FORMAT = '%.6g'


class FileManager:
    """处理所有本地文件读写（UTF-8，逗号分隔，LF 换行）"""

    def __init__(self, float_format: str = FLOAT_FORMAT):
        """
        初始化文件管理器

        Args:
            float_format: CSV 浮点输出格式
        """
        self.float_format = float_format

    @staticmethod
    def _ensure_parent(path: str) -> None:
        parent = os.path.dirname(os.path.abspath(path))
        os.makedirs(parent, exist_ok=True)

    # === CSV ===
    def read_records(self, path: str) -> List[EngagementRecord]:
        """
        读取评论记录 CSV

        Returns:
            EngagementRecord 列表（解析失败时抛出带行号的 RecordError）
        """
        try:
            frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding='utf-8')
        except pd.errors.EmptyDataError:
            raise RecordError("记录文件为空", line=1)
        except Exception as e:
            logger.error(f"❌ 读取记录文件失败: {str(e)}", exc_info=True)
            raise StorageError(f"读取记录文件失败 {path}: {str(e)}")

        missing = [column for column in RECORD_COLUMNS if column not in frame.columns]
        if missing:
            raise RecordError(f"缺少列: {missing}", line=1)
        if frame.empty:
            raise RecordError("记录文件没有数据行", line=1)

        records = []
        for offset, row in enumerate(frame[RECORD_COLUMNS].itertuples(index=False)):
            line = offset + 2
            try:
                records.append(EngagementRecord(
                    blog_id=row.blog_id.strip(),
                    period=int(row.period),
                    post_id=row.post_id.strip(),
                    comment_score=float(row.comment_score),
                    comment_likes=int(row.comment_likes),
                    post_likes=int(row.post_likes),
                ))
            except RecordError as e:
                raise RecordError(str(e), line=line)
            except (TypeError, ValueError) as e:
                raise RecordError(f"无法解析: {str(e)}", line=line)
        logger.info(f"✅ 读取记录 {len(records)} 条: {path}")
        return records

    def read_panel(self, path: str) -> SentimentPanel:
        """读取面板 CSV（表头 blog_id,p1,...,pT）"""
        try:
            frame = pd.read_csv(path, dtype={'blog_id': str}, encoding='utf-8')
        except Exception as e:
            logger.error(f"❌ 读取面板文件失败: {str(e)}", exc_info=True)
            raise StorageError(f"读取面板文件失败 {path}: {str(e)}")
        if 'blog_id' not in frame.columns or frame.columns[0] != 'blog_id':
            raise StorageError(f"面板文件首列必须是 blog_id: {path}")
        periods = [str(column) for column in frame.columns[1:]]
        try:
            values = frame[frame.columns[1:]].to_numpy(dtype=float)
        except ValueError as e:
            raise StorageError(f"面板文件包含非数值单元 {path}: {str(e)}")
        return validate_panel(values, frame['blog_id'].tolist(), periods)

    def write_panel(self, panel: SentimentPanel, path: str) -> str:
        frame = pd.DataFrame(panel.values, columns=list(panel.period_labels))
        frame.insert(0, 'blog_id', list(panel.blog_ids))
        return self.write_frame(frame, path)

    def write_frame(self, frame: pd.DataFrame, path: str) -> str:
        """写出 CSV，浮点保留6位有效数字"""
        try:
            self._ensure_parent(path)
            frame.to_csv(path, index=False, float_format=self.float_format,
                         encoding='utf-8', lineterminator='\n')
            logger.debug(f"写出 CSV: {path}（{len(frame)} 行）")
            return path
        except Exception as e:
            logger.error(f"❌ 写出 CSV 失败: {str(e)}", exc_info=True)
            raise StorageError(f"写出文件失败 {path}: {str(e)}")

    # === JSON ===
    def write_json(self, payload: Dict, path: str) -> str:
        try:
            self._ensure_parent(path)
            with open(path, 'w', encoding='utf-8', newline='\n') as f:
                json.dump(payload, f, indent=2, ensure_ascii=False)
                f.write('\n')
            return path
        except Exception as e:
            logger.error(f"❌ 写出 JSON 失败: {str(e)}", exc_info=True)
            raise StorageError(f"写出文件失败 {path}: {str(e)}")

    def read_json(self, path: str) -> Dict:
        try:
            with open(path, 'r', encoding='utf-8') as f:
                payload = json.load(f)
        except Exception as e:
            raise StorageError(f"读取文件失败 {path}: {str(e)}")
        if not isinstance(payload, dict):
            raise StorageError(f"JSON 顶层必须是对象: {path}")
        return payload

    def list_json(self, directory: str) -> List[str]:
        """列出目录中的 JSON 文件（按文件名自然顺序）"""
        try:
            names = [name for name in os.listdir(directory) if name.lower().endswith('.json')]
        except Exception as e:
            raise StorageError(f"列出目录失败 {directory}: {str(e)}")
        files = [os.path.join(directory, name) for name in sorted(names, key=natural_key)]
        logger.debug(f"目录 {directory} 中找到 {len(files)} 个 JSON 文件")
        return files

