# src/scan.py
import os
import json
import random
import logging
import itertools
import threading
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Iterator, List, Optional, Sequence, Set

from src.curve import CountingInconsistency, CurveSpec
from src.field import BudgetExceeded
from src.records import RunRecord, analyze_curve

FAMILIES = ('monomial', 'all', 'random')


class ScanWriter:
    """Append-only JSON-lines store of run records, keyed by the canonical curve string."""

    def __init__(self, path: str):
        self.path = path
        self.logger = logging.getLogger(__name__)
        self._lock = threading.Lock()

        directory = os.path.dirname(os.path.abspath(path))
        if not os.path.exists(directory):
            os.makedirs(directory)

        self.keys: Set[str] = self._load_keys()

    def _load_keys(self) -> Set[str]:
        keys = set()
        if not os.path.exists(self.path):
            return keys
        with open(self.path, 'r', encoding='utf-8') as f:
            for lineno, line in enumerate(f, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    keys.add(json.loads(line)['curve'])
                except (json.JSONDecodeError, KeyError, TypeError):
                    self.logger.error(f"Corrupted scan line {lineno} in {self.path}")
        self.logger.info(f"Scan file {self.path} holds {len(keys)} records")
        return keys

    def __contains__(self, key: str) -> bool:
        return key in self.keys

    def append(self, record: RunRecord) -> bool:
        """Write one record; False when its key is already present."""
        with self._lock:
            if record.key in self.keys:
                return False
            line = json.dumps(record.to_dict())
            try:
                with open(self.path, 'a', encoding='utf-8') as f:
                    f.write(line + '\n')
                    f.flush()
                    os.fsync(f.fileno())
            except OSError as e:
                self.logger.error(f"Failed to append to {self.path}: {e}")
                raise
            self.keys.add(record.key)
            return True

    def records(self) -> Iterator[RunRecord]:
        if not os.path.exists(self.path):
            return
        with open(self.path, 'r', encoding='utf-8') as f:
            for line in f:
                if line.strip():
                    try:
                        yield RunRecord.from_dict(json.loads(line))
                    except (json.JSONDecodeError, KeyError, TypeError):
                        continue


def family_curves(family: str, p: int, u: int, s: int, degrees: Sequence[int],
                  limit: Optional[int] = None, count: int = 10, seed: int = 0) -> List[CurveSpec]:
    """
    Curves y^q - y = f(x) over F_Q for a family of f.

    Args:
        family: monomial (f = x^d), all (monic, a_0 = 0, capped by limit) or random
        degrees: candidate degrees; multiples of p are dropped
    """
    logger = logging.getLogger(__name__)
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")
    usable = [d for d in degrees if d >= 1 and d % p]
    if len(usable) != len(degrees):
        logger.warning(f"Dropping degrees divisible by p={p}: {sorted(set(degrees) - set(usable))}")
    size = p ** s
    curves: List[CurveSpec] = []

    if family == 'monomial':
        curves = [CurveSpec(p, u, s, (0,) * d + (1,)) for d in usable]
    elif family == 'all':
        for d in usable:
            for middle in itertools.product(range(size), repeat=d - 1):
                if limit is not None and len(curves) >= limit:
                    return curves
                curves.append(CurveSpec(p, u, s, (0,) + middle + (1,)))
    else:
        rng = random.Random(seed)
        seen = set()
        attempts = 0
        while len(curves) < count and attempts < 100 * count and usable:
            attempts += 1
            d = rng.choice(usable)
            spec = CurveSpec(p, u, s, tuple(rng.randrange(size) for _ in range(d)) + (rng.randrange(1, size),))
            if spec.to_string() not in seen:
                seen.add(spec.to_string())
                curves.append(spec)
    return curves


def _scan_job(spec: CurveSpec, budget: Optional[int], verify: bool) -> dict:
    return analyze_curve(spec, budget=budget, verify=verify, timing=True).to_dict()


@dataclass
class ScanSummary:
    total: int = 0
    written: int = 0
    existing: int = 0
    errors: int = 0
    failures: int = 0


def run_scan(curves: Iterable[CurveSpec], path: str, budget: Optional[int] = None,
             workers: int = 1, verify: bool = False) -> ScanSummary:
    """Analyse every curve not yet in the file; one writer appends in input order."""
    logger = logging.getLogger(__name__)
    writer = ScanWriter(path)
    summary = ScanSummary()
    pending = []
    for spec in curves:
        summary.total += 1
        if spec.to_string() in writer:
            summary.existing += 1
        else:
            pending.append(spec)
    logger.info(f"Scan: {len(pending)} curves to analyse, {summary.existing} already recorded")

    def handle(spec: CurveSpec, outcome):
        if isinstance(outcome, Exception):
            summary.errors += 1
            logger.error(f"Scan of {spec.to_string()} failed: {outcome}")
            return
        record = RunRecord.from_dict(outcome)
        if writer.append(record):
            summary.written += 1
            if record.status == 'FAIL':
                summary.failures += 1

    if workers > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_scan_job, spec, budget, verify) for spec in pending]
            for spec, future in zip(pending, futures):
                try:
                    outcome = future.result()
                except (BudgetExceeded, CountingInconsistency, ValueError) as e:
                    outcome = e
                handle(spec, outcome)
    else:
        for spec in pending:
            try:
                outcome = _scan_job(spec, budget, verify)
            except (BudgetExceeded, CountingInconsistency, ValueError) as e:
                outcome = e
            handle(spec, outcome)

    logger.info(f"Scan finished: {summary.written} written, {summary.errors} errors, {summary.failures} failures")
    return summary
