"""
约束投影模块
概率单纯形与盒约束的欧氏投影
"""
import numpy as np


def project_simplex(v) -> np.ndarray:
    """
    欧氏投影到概率单纯形 {p : p ≥ 0, Σp = 1}

    基于排序的精确算法，O(B log B)。

    Args:
        v: 一维向量

    Returns:
        投影结果（新数组）
    """
    v = np.asarray(v, dtype=float)
    return project_simplex_rows(v[None, :])[0]


def project_simplex_rows(M) -> np.ndarray:
    """逐行投影到单纯形"""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    n = M.shape[1]
    u = -np.sort(-M, axis=1)
    cssv = np.cumsum(u, axis=1) - 1.0
    ind = np.arange(1, n + 1)
    cond = u - cssv / ind > 0
    rho = n - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = cssv[np.arange(M.shape[0]), rho] / (rho + 1.0)
    projected = np.maximum(M - theta[:, None], 0.0)
    # 抵消舍入误差，保证行和在 1e-12 内
    projected /= projected.sum(axis=1, keepdims=True)
    return projected


def project_box(v, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """逐元素截断到 [lo, hi]"""
    if lo > hi:
        raise ValueError(f"盒约束下界大于上界: {lo} > {hi}")
    return np.clip(np.asarray(v, dtype=float), lo, hi)


def project_offdiagonal_rows(A) -> np.ndarray:
    """
    A 的逐行投影：对角元固定为0，其余元素投影到单纯形

    要求 B ≥ 2。
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    mask = ~np.eye(n, dtype=bool)
    off = A[mask].reshape(n, n - 1)
    projected = np.zeros_like(A)
    projected[mask] = project_simplex_rows(off).ravel()
    return projected
