#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
计数器型随机数流
每个路径块由 (seed, 块号) 作为 Philox 密钥派生独立的流，
块的划分固定，与线程数和执行顺序无关
"""

from typing import List, Tuple

import numpy as np

# 每块的对偶路径对数
BLOCK_PAIRS = 2048


def block_generator(seed: int, block: int) -> np.random.Generator:
    """返回 (seed, block) 对应的 Philox 生成器"""
    if seed < 0 or block < 0:
        raise ValueError(f"种子与块号不能为负: seed={seed}, block={block}")
    key = np.array([seed, block], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def split_pairs(n_pairs: int, block_pairs: int = BLOCK_PAIRS) -> List[Tuple[int, int]]:
    """把对偶路径对划分为固定大小的块，返回 [(块号, 本块对数)]"""
    if n_pairs <= 0:
        return []
    blocks = []
    start = 0
    index = 0
    while start < n_pairs:
        count = min(block_pairs, n_pairs - start)
        blocks.append((index, count))
        start += count
        index += 1
    return blocks

