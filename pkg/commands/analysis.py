import sys
import time
from pathlib import Path

from commands.base import CommandGroup
from config.settings import RunConfig
from morph.builder import read_lines, read_manifest, read_test_meta, recount_train, validate_build
from morph.corpus_io import read_wordlist
from morph.evaluator import evaluate, write_report
from utils.constants import MANIFEST_FILE, REPORT_FILE, TRAIN_SRC, TRAIN_TRG, TRG_VOCAB_FILE
from utils.exceptions import ValidationError


class AnalysisCommands(CommandGroup):
    """evaluate and report."""

    def cmd_evaluate(self, config: RunConfig) -> int:
        """Score system outputs against test metadata and write the report tables."""
        started = time.perf_counter()
        config.require("outputs", "meta")
        patterns = self.load_patterns(config)
        inventory = self.load_inventory(config, patterns)

        manifest = read_manifest(config.manifest) if config.manifest else None
        trg_vocab = read_wordlist(config.trg_vocab) if config.trg_vocab else None
        if trg_vocab is None:
            self.logger.warning("No target vocabulary given; T5 falls back to a word-shape test")

        outputs = read_lines(config.outputs)
        meta = read_test_meta(config.meta)
        with self.monitor.stage("evaluate", items=len(outputs)):
            report = evaluate(
                outputs,
                meta,
                inventory,
                manifest=manifest,
                trg_vocab=trg_vocab,
                vowels=config.vowels,
                similarity_threshold=config.similarity_threshold,
            )

        out_dir = Path(config.out_dir)
        write_report(report, out_dir)
        overall = report.overall
        self.log_command(
            "evaluate", out_dir=str(out_dir), lines=overall.n, accuracy=round(overall.accuracy, 4)
        )
        self.finish(config, "evaluate", started)
        return 0

    def cmd_report(self, config: RunConfig) -> int:
        """Re-validate an output directory and print its manifest and accuracy table."""
        started = time.perf_counter()
        out_dir = Path(config.out_dir)
        manifest_path = Path(config.manifest or out_dir / MANIFEST_FILE)
        if not manifest_path.exists():
            raise ValidationError(f"no manifest in {out_dir}", path=str(manifest_path))
        manifest = read_manifest(manifest_path)

        problems = []
        for name in (TRAIN_SRC, TRAIN_TRG, TRG_VOCAB_FILE):
            if not (out_dir / name).exists():
                problems.append(f"missing {name}")
        if not problems and config.inventory is not None:
            patterns = self.load_patterns(config)
            inventory = self.load_inventory(config, patterns)
            with self.monitor.stage("recount"):
                recount = recount_train(out_dir / TRAIN_SRC, out_dir / TRAIN_TRG, inventory, patterns)
            problems += validate_build(manifest, recount)
        elif config.inventory is None:
            self.logger.warning("No inventory given; training counts are not recounted")

        sys.stdout.write(manifest.to_tsv())
        report_path = out_dir / REPORT_FILE
        if report_path.exists():
            sys.stdout.write("\n" + report_path.read_text(encoding="utf-8"))

        if problems:
            for problem in problems:
                self.logger.error("Report validation failed", problem=problem)
            raise ValidationError(f"output directory failed validation: {problems[0]}", problems=len(problems))

        self.log_command("report", out_dir=str(out_dir), seed=manifest.seed, digest=manifest.digest)
        self.finish(config, "report", started)
        return 0
