import argparse
import time
from pathlib import Path
from typing import Callable, Dict, List, Optional

from commands.analysis import AnalysisCommands
from commands.generation import GenerationCommands
from config.settings import RunConfig, read_config_file, settings
from utils.error_handler import ErrorHandler
from utils.logger import get_logger, setup_logger
from utils.monitoring import PerformanceMonitor

COMMANDS = ("gen-morphemes", "build", "evaluate", "augment", "report")


def _shared_options() -> argparse.ArgumentParser:
    """Options accepted by every subcommand; each defaults to None so config files can fill gaps."""
    parent = argparse.ArgumentParser(add_help=False)
    inputs = parent.add_argument_group("inputs")
    inputs.add_argument("--config", type=Path, help="key<TAB>value file with defaults for any option")
    inputs.add_argument("--src-conllu", type=Path, help="source side CoNLL-U")
    inputs.add_argument("--trg-conllu", type=Path, help="target side CoNLL-U")
    inputs.add_argument("--align", type=Path, help="Pharaoh word alignments, one line per pair")
    inputs.add_argument("--test-src-conllu", type=Path, help="separate test corpus, source side")
    inputs.add_argument("--test-trg-conllu", type=Path, help="separate test corpus, target side")
    inputs.add_argument("--test-align", type=Path, help="separate test corpus alignments")
    inputs.add_argument("--vocab", type=Path, help="word list that morphemes must avoid")
    inputs.add_argument("--patterns", type=Path, help="pattern table (TSV)")
    inputs.add_argument("--inventory", type=Path, help="morpheme inventory (TSV)")
    inputs.add_argument("--scores", type=Path, help="candidate_id<TAB>src_delta<TAB>trg_delta")
    inputs.add_argument("--outputs", type=Path, help="system outputs, line-parallel with --meta")
    inputs.add_argument("--meta", type=Path, help="test metadata TSV")
    inputs.add_argument("--manifest", type=Path, help="manifest.tsv of a build")
    inputs.add_argument("--trg-vocab", type=Path, help="target training vocabulary")

    run = parent.add_argument_group("run")
    run.add_argument("--seed", type=int, help="master seed; required by generating commands")
    run.add_argument("--out-dir", type=Path, help="output directory")
    run.add_argument("-o", "--output", type=Path, help="output file (gen-morphemes)")
    run.add_argument("--cap", dest="caps", action="append", metavar="PATTERN=N",
                     help="training insertion cap; may be repeated")
    run.add_argument("--no-abstract", dest="enable_abstract", action="store_const", const=False,
                     help="skip the abstract variant")
    run.add_argument("--no-surface", dest="enable_surface", action="store_const", const=False,
                     help="skip the surface variant")
    run.add_argument("--test-fraction", type=float, help="held-out fraction when no test corpus is given")
    run.add_argument("--threads", type=int, help="worker processes for matching and rewriting")
    run.add_argument("--bucket-cap", type=int, help="items per (pattern, bucket) in augmented sets")
    run.add_argument("--candidates-per-pair", type=int, help="substitution candidates kept per pair")
    run.add_argument("--similarity-threshold", type=float, help="normalized edit distance for S3/T2")
    run.add_argument("--dry-run", action="store_const", const=True, help="print the manifest only")
    run.add_argument("--metrics-file", type=Path, help="prometheus textfile destination")
    run.add_argument("--log-level", help="override MORPHSUITE_LOG_LEVEL")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parent = _shared_options()
    parser = argparse.ArgumentParser(
        prog="morphsuite",
        description="Inject artificial morphological phenomena into a parallel corpus and evaluate MT outputs.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "gen-morphemes": "draw the artificial-morpheme inventory",
        "build": "generate training corpora, test sets and manifest",
        "evaluate": "score system outputs against a test set",
        "augment": "assemble frequency-balanced test sets",
        "report": "re-validate an output directory and print its tables",
    }
    for name in COMMANDS:
        subparsers.add_parser(name, parents=[parent], help=helps[name])
    return parser


class MorphSuiteCLI:
    """Resolves configuration and dispatches to the command groups."""

    def __init__(self, monitor: Optional[PerformanceMonitor] = None):
        self.logger = get_logger('cli')
        self.monitor = monitor or PerformanceMonitor()
        self.error_handler = ErrorHandler(self.logger)
        generation = GenerationCommands(self.monitor)
        analysis = AnalysisCommands(self.monitor)
        self.handlers: Dict[str, Callable[[RunConfig], int]] = {
            "gen-morphemes": generation.cmd_gen_morphemes,
            "build": generation.cmd_build,
            "augment": generation.cmd_augment,
            "evaluate": analysis.cmd_evaluate,
            "report": analysis.cmd_report,
        }

    def resolve(self, args: argparse.Namespace) -> RunConfig:
        flags = vars(args).copy()
        command = flags.pop("command")
        config_path = flags.pop("config")
        flags.pop("log_level", None)
        file_values = read_config_file(config_path) if config_path else None
        config = RunConfig.from_sources(command, settings, file_values, flags)
        config.check_referenced_paths()
        return config

    def run(self, argv: Optional[List[str]] = None) -> int:
        args = build_parser().parse_args(argv)
        setup_logger(level=args.log_level)
        started = time.perf_counter()
        try:
            config = self.resolve(args)
            self.logger.debug("Configuration resolved", **config.model_dump(mode="json"))
            code = self.handlers[config.command](config)
        except Exception as e:
            return self.error_handler.handle_error(e)
        self.logger.info("Command finished", command=args.command,
                         duration=round(time.perf_counter() - started, 4), exit_code=code)
        return code


def main(argv: Optional[List[str]] = None) -> int:
    return MorphSuiteCLI().run(argv)
