import json
import os

import numpy as np
import pandas as pd
import pytest

from opinion_fit.exceptions import RecordError, StorageError
from opinion_fit.storage import RECORD_COLUMNS, FileManager


@pytest.fixture
def files():
    return FileManager()


def _write_records(path, rows):
    lines = [','.join(RECORD_COLUMNS)] + [','.join(str(v) for v in row) for row in rows]
    path.write_text('\n'.join(lines) + '\n', encoding='utf-8')


def test_panel_csv_round_trip(files, panel, tmp_path):
    path = str(tmp_path / 'panel.csv')
    files.write_panel(panel, path)
    restored = files.read_panel(path)
    np.testing.assert_allclose(restored.values, panel.values, rtol=0, atol=1e-15)
    assert restored.blog_ids == panel.blog_ids
    assert restored.period_labels == panel.period_labels


def test_panel_csv_format(files, panel, tmp_path):
    path = tmp_path / 'panel.csv'
    files.write_panel(panel, str(path))
    raw = path.read_bytes()
    assert b'\r\n' not in raw
    lines = raw.decode('utf-8').splitlines()
    assert lines[0] == 'blog_id,' + ','.join(f"p{t}" for t in range(1, 13))
    assert lines[1].startswith('blog1,0.542237,0.69269,')


def test_read_panel_requires_blog_column(files, tmp_path):
    path = tmp_path / 'bad.csv'
    path.write_text('id,p1,p2\na,0.1,0.2\n', encoding='utf-8')
    with pytest.raises(StorageError):
        files.read_panel(str(path))


def test_read_panel_missing_file(files, tmp_path):
    with pytest.raises(StorageError):
        files.read_panel(str(tmp_path / 'missing.csv'))


def test_read_records(files, tmp_path):
    path = tmp_path / 'records.csv'
    _write_records(path, [('blog1', 1, 'a', 0.5, 2, 10), ('blog2', 1, 'b', 0.25, 0, 0)])
    records = files.read_records(str(path))
    assert len(records) == 2
    assert records[1].comment_score == 0.25
    assert records[0].post_likes == 10


def test_read_records_reports_line_number(files, tmp_path):
    path = tmp_path / 'records.csv'
    _write_records(path, [('blog1', 1, 'a', 0.5, 2, 10), ('blog1', 1, 'a', 'high', 2, 10)])
    with pytest.raises(RecordError) as excinfo:
        files.read_records(str(path))
    assert excinfo.value.line == 3


def test_read_records_rejects_out_of_range_score(files, tmp_path):
    path = tmp_path / 'records.csv'
    _write_records(path, [('blog1', 1, 'a', 1.5, 2, 10)])
    with pytest.raises(RecordError) as excinfo:
        files.read_records(str(path))
    assert excinfo.value.line == 2


def test_read_records_empty_file(files, tmp_path):
    path = tmp_path / 'empty.csv'
    path.write_text('', encoding='utf-8')
    with pytest.raises(RecordError) as excinfo:
        files.read_records(str(path))
    assert excinfo.value.line == 1


def test_read_records_missing_columns(files, tmp_path):
    path = tmp_path / 'records.csv'
    path.write_text('blog_id,period\nblog1,1\n', encoding='utf-8')
    with pytest.raises(RecordError):
        files.read_records(str(path))


def test_write_frame_uses_six_significant_digits(files, tmp_path):
    path = tmp_path / 'out' / 'frame.csv'
    files.write_frame(pd.DataFrame({'x': [1.0 / 3.0, 0.0]}), str(path))
    assert path.read_text(encoding='utf-8') == 'x\n0.333333\n0\n'


def test_json_round_trip_and_listing(files, tmp_path):
    for name in ('m10.json', 'm2.json', 'notes.txt'):
        (tmp_path / name).write_text('{}', encoding='utf-8')
    files.write_json({'objective': 0.1 + 0.2}, str(tmp_path / 'm1.json'))
    assert files.read_json(str(tmp_path / 'm1.json')) == {'objective': 0.1 + 0.2}
    names = [os.path.basename(p) for p in files.list_json(str(tmp_path))]
    assert names == ['m1.json', 'm2.json', 'm10.json']


def test_read_json_requires_object(files, tmp_path):
    path = tmp_path / 'list.json'
    path.write_text(json.dumps([1, 2]), encoding='utf-8')
    with pytest.raises(StorageError):
        files.read_json(str(path))
    with pytest.raises(StorageError):
        files.read_json(str(tmp_path / 'absent.json'))
