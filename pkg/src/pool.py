#!/usr/bin/env python3

import multiprocessing
from typing import Callable, List, Sequence, TypeVar


T = TypeVar('T')
R = TypeVar('R')


def parallel_map(worker: Callable[[T], R], tasks: Sequence[T], jobs: int = 1) -> List[R]:
    """Run worker over tasks, in order; jobs > 1 uses a process pool.

    Workers must be module-level functions taking and returning picklable
    values. Results come back in task order regardless of scheduling.
    """
    if jobs <= 1 or len(tasks) <= 1:
        return [worker(task) for task in tasks]
    with multiprocessing.Pool(min(jobs, len(tasks))) as pool:
        return pool.map(worker, tasks, chunksize=1)


def chunked(values: Sequence[T], size: int) -> List[List[T]]:
    return [list(values[i:i + size]) for i in range(0, len(values), size)]
