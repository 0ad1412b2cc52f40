import time
from pathlib import Path
from typing import List, Optional, Sequence

from config.settings import RunConfig, settings
from morph.builder import BuildConfig
from morph.corpus_io import AnnotatedSentencePair, load_parallel
from morph.matcher import PatternPair, load_patterns
from morph.morphemes import Alphabets, MorphemeInventory, MorphemeSpec
from utils.exceptions import ConfigurationError
from utils.logger import LoggerMixin
from utils.monitoring import PerformanceMonitor


class CommandGroup(LoggerMixin):
    """Shared loading helpers for the command groups."""

    def __init__(self, monitor: Optional[PerformanceMonitor] = None):
        self.monitor = monitor or PerformanceMonitor()

    def load_patterns(self, config: RunConfig) -> List[PatternPair]:
        config.require("patterns")
        return load_patterns(config.patterns)

    def load_corpus(self, config: RunConfig) -> List[AnnotatedSentencePair]:
        config.require("src_conllu", "trg_conllu", "align")
        with self.monitor.stage("load_corpus") as info:
            pairs = load_parallel(config.src_conllu, config.trg_conllu, config.align)
            info["items"] = len(pairs)
        return pairs

    def load_test_corpus(self, config: RunConfig) -> Optional[List[AnnotatedSentencePair]]:
        if not config.has_test_corpus:
            return None
        config.require("test_src_conllu", "test_trg_conllu", "test_align")
        with self.monitor.stage("load_test_corpus") as info:
            pairs = load_parallel(config.test_src_conllu, config.test_trg_conllu, config.test_align)
            info["items"] = len(pairs)
        return pairs

    def load_inventory(self, config: RunConfig, patterns: Sequence[PatternPair]) -> MorphemeInventory:
        config.require("inventory")
        return MorphemeInventory.from_tsv(config.inventory, patterns)

    @staticmethod
    def morpheme_spec(config: RunConfig) -> MorphemeSpec:
        try:
            source = Alphabets(config.consonants, config.source_vowels)
            target = Alphabets(config.consonants, config.target_vowels)
        except ValueError as e:
            raise ConfigurationError(str(e)) from e
        return MorphemeSpec(
            source=source,
            target=target,
            isolated_length=tuple(config.isolated_length),
            bound_length=tuple(config.bound_length),
            circumfix_length=tuple(config.circumfix_length),
            max_rejections=config.max_rejections,
        )

    @staticmethod
    def build_config(config: RunConfig) -> BuildConfig:
        return BuildConfig(
            seed=config.seed,
            caps=dict(config.caps),
            enable_surface=config.enable_surface,
            enable_abstract=config.enable_abstract,
            test_fraction=config.test_fraction,
            threads=config.threads,
            vowels=config.vowels,
        )

    def finish(self, config: RunConfig, command: str, started: float) -> None:
        """Log the command's duration and write metrics when enabled."""
        self.log_performance(command, time.perf_counter() - started, stages=len(self.monitor.stage_stats))
        metrics_path = config.metrics_file or Path(config.out_dir) / settings.metrics_file
        self.monitor.write_metrics(Path(metrics_path))
