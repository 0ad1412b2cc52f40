"""Stage timing, memory tracking and optional prometheus export."""

import time
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Optional

import psutil
from prometheus_client import CollectorRegistry, Counter, Gauge, Histogram, write_to_textfile

from config.settings import settings
from utils.logger import get_logger

logger = get_logger('monitoring')


class PerformanceMonitor:
    """Per-stage performance bookkeeping for one command run."""

    def __init__(self, enable_metrics: Optional[bool] = None):
        self.start_time = time.time()
        self.enable_metrics = settings.enable_metrics if enable_metrics is None else enable_metrics
        self.stage_stats: Dict[str, Dict[str, Any]] = {}
        self.registry = CollectorRegistry()
        self._items_total = Counter(
            'morphsuite_items_total', 'Items processed per stage', ['stage'], registry=self.registry
        )
        self._stage_duration = Histogram(
            'morphsuite_stage_duration_seconds', 'Stage wall time', ['stage'], registry=self.registry
        )
        self._memory_usage = Gauge(
            'morphsuite_memory_usage_bytes', 'Resident memory after the last stage', registry=self.registry
        )

    @contextmanager
    def stage(self, name: str, items: Optional[int] = None):
        """Time a pipeline stage; the yielded dict may be updated with an item count."""
        info: Dict[str, Any] = {'items': items}
        started = time.perf_counter()
        try:
            yield info
        finally:
            duration = time.perf_counter() - started
            self.record_stage(name, duration, info.get('items'))

    def record_stage(self, name: str, duration: float, items: Optional[int] = None):
        rss = psutil.Process().memory_info().rss
        stats = self.stage_stats.setdefault(name, {'calls': 0, 'duration': 0.0, 'items': 0})
        stats['calls'] += 1
        stats['duration'] += duration
        stats['items'] += items or 0

        if self.enable_metrics:
            self._stage_duration.labels(stage=name).observe(duration)
            if items:
                self._items_total.labels(stage=name).inc(items)
            self._memory_usage.set(rss)

        logger.info(
            "Stage finished",
            stage=name,
            duration=round(duration, 4),
            items=items,
            memory_mb=round(rss / 1024 / 1024, 1),
        )

    def write_metrics(self, path: Path) -> bool:
        """Write the prometheus textfile; returns False when metrics are disabled."""
        if not self.enable_metrics:
            return False
        path.parent.mkdir(parents=True, exist_ok=True)
        write_to_textfile(str(path), self.registry)
        logger.debug("Metrics written", path=str(path))
        return True

    def get_stats(self) -> Dict[str, Any]:
        return {
            'uptime': time.time() - self.start_time,
            'stages': {name: dict(stats) for name, stats in self.stage_stats.items()},
        }
