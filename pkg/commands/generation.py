import random
import sys
import time
from pathlib import Path
from typing import Dict, List

from commands.base import CommandGroup
from config.settings import RunConfig
from morph.augmenter import (
    AugCandidate,
    UnigramScorer,
    assemble_balanced,
    attach_scores,
    candidate_items,
    generate_candidates,
    read_scores,
)
from morph.builder import (
    AUG_META_COLUMNS,
    TestItem,
    build_dataset,
    is_held_out,
    read_lines,
    read_manifest,
    read_test_meta,
    recount_train,
    validate_build,
    write_dataset,
    write_test_set,
)
from morph.corpus_io import corpus_token_types, read_wordlist, render
from morph.morphemes import AbsenceIndex, build_inventory, check_inventory
from utils.constants import MANIFEST_FILE, TRAIN_SRC, TRAIN_TRG, Variant
from utils.exceptions import ValidationError

INVENTORY_FILE = "inventory.tsv"


class GenerationCommands(CommandGroup):
    """gen-morphemes, build and augment."""

    def cmd_gen_morphemes(self, config: RunConfig) -> int:
        """Draw the artificial-morpheme inventory and write it as TSV."""
        started = time.perf_counter()
        config.require("vocab")
        patterns = self.load_patterns(config)
        spec = self.morpheme_spec(config)

        corpus_tokens = set()
        if config.src_conllu is not None:
            corpus_tokens |= corpus_token_types(self.load_corpus(config))
        test_pairs = self.load_test_corpus(config)
        if test_pairs:
            corpus_tokens |= corpus_token_types(test_pairs)
        if not corpus_tokens:
            self.logger.warning("No corpus given; absence is checked against the vocabulary only")
        vocab = read_wordlist(config.vocab)

        with self.monitor.stage("gen_morphemes") as info:
            index = AbsenceIndex(
                corpus_tokens,
                vocab,
                max_length=max(spec.isolated_length[1], spec.bound_length[1]),
                consonants=spec.source.consonants + spec.target.consonants,
                vowels=spec.source.vowels + spec.target.vowels,
            )
            inventory = build_inventory(patterns, corpus_tokens, vocab, config.seed, spec, index)
            info["items"] = len(inventory.all_surfaces())

        problems = check_inventory(inventory, index)
        if problems:
            raise ValidationError(f"inventory failed its checks: {problems[0]}", problems=len(problems))

        output = Path(config.output or Path(config.out_dir) / INVENTORY_FILE)
        output.parent.mkdir(parents=True, exist_ok=True)
        inventory.to_tsv(output)
        self.log_command("gen-morphemes", output=str(output), seed=config.seed, patterns=len(patterns))
        self.finish(config, "gen-morphemes", started)
        return 0

    def cmd_build(self, config: RunConfig) -> int:
        """Generate training corpora, test sets and the manifest."""
        started = time.perf_counter()
        patterns = self.load_patterns(config)
        inventory = self.load_inventory(config, patterns)
        pairs = self.load_corpus(config)
        test_pairs = self.load_test_corpus(config)

        with self.monitor.stage("build", items=len(pairs)):
            result = build_dataset(pairs, patterns, inventory, self.build_config(config), test_pairs)

        if config.dry_run:
            sys.stdout.write(result.manifest.to_tsv())
            self.log_command("build", dry_run=True, train_lines=len(result.train_src))
            return 0

        out_dir = Path(config.out_dir)
        with self.monitor.stage("write", items=len(result.train_src)):
            write_dataset(result, out_dir)

        with self.monitor.stage("validate"):
            recount = recount_train(out_dir / TRAIN_SRC, out_dir / TRAIN_TRG, inventory, patterns)
            problems = validate_build(result.manifest, recount)
            originals = read_lines(out_dir / TRAIN_SRC)[:result.originals]
            if originals != result.train_src[:result.originals]:
                problems.append("original source lines were not written back unchanged")
        if problems:
            for problem in problems:
                self.logger.error("Build validation failed", problem=problem)
            raise ValidationError(f"build validation failed: {problems[0]}", problems=len(problems))

        self.log_command("build", out_dir=str(out_dir), train_lines=len(result.train_src),
                         digest=result.manifest.digest)
        self.finish(config, "build", started)
        return 0

    def _candidate_pool(self, config: RunConfig):
        """Pairs to draw substitutions from: the test corpus, or the held-out split."""
        test_pairs = self.load_test_corpus(config)
        if test_pairs is not None:
            return test_pairs, None
        pairs = self.load_corpus(config)
        pool = [p for p in pairs if is_held_out(p.pair_id, config.seed, config.test_fraction)]
        train = [p for p in pairs if not is_held_out(p.pair_id, config.seed, config.test_fraction)]
        return pool, train

    def _fallback_scorer(self, config: RunConfig, train_pairs) -> UnigramScorer:
        out_dir = Path(config.out_dir)
        if (out_dir / TRAIN_SRC).exists() and (out_dir / TRAIN_TRG).exists():
            return UnigramScorer(read_lines(out_dir / TRAIN_SRC), read_lines(out_dir / TRAIN_TRG))
        pairs = train_pairs or []
        return UnigramScorer((render(p.src) for p in pairs), (render(p.trg) for p in pairs))

    def _read_originals(self, out_dir: Path, variant: Variant) -> List[TestItem]:
        meta_path = out_dir / f"test.{variant.value}.meta.tsv"
        if not meta_path.exists():
            self.logger.warning("No test set for variant", variant=variant.value, path=str(meta_path))
            return []
        rows = read_test_meta(meta_path)
        src = read_lines(out_dir / f"test.{variant.value}.src")
        trg = read_lines(out_dir / f"test.{variant.value}.trg")
        return [TestItem(row, s, t) for row, s, t in zip(rows, src, trg)]

    def cmd_augment(self, config: RunConfig) -> int:
        """Assemble frequency-balanced test sets from originals and scored substitutions."""
        started = time.perf_counter()
        out_dir = Path(config.out_dir)
        patterns = self.load_patterns(config)
        inventory = self.load_inventory(config, patterns)
        manifest_path = Path(config.manifest or out_dir / MANIFEST_FILE)
        if not manifest_path.exists():
            config.require("manifest")
        manifest = read_manifest(manifest_path)

        pool, train_pairs = self._candidate_pool(config)
        with self.monitor.stage("generate_candidates", items=len(pool)) as info:
            candidates: List[AugCandidate] = []
            for pair in pool:
                rng = random.Random(f"{config.seed}:augment:{pair.pair_id}")
                candidates.extend(generate_candidates(pair, patterns, rng, config.candidates_per_pair))
            info["items"] = len(candidates)

        scores = read_scores(config.scores) if config.scores else None
        if scores is None:
            self.logger.info("No score file given, using the unigram fallback scorer")
        candidates = attach_scores(
            candidates, scores, self._fallback_scorer(config, train_pairs), {p.pair_id: p for p in pool}
        )

        variants = [v for v, on in ((Variant.SURFACE, config.enable_surface),
                                    (Variant.ABSTRACT, config.enable_abstract)) if on]
        with self.monitor.stage("transform_candidates", items=len(candidates)):
            items = candidate_items(candidates, patterns, inventory, manifest, variants, config.vowels)

        pattern_order = [p.id for p in patterns]
        written: Dict[str, int] = {}
        for variant in variants:
            balanced = assemble_balanced(
                self._read_originals(out_dir, variant), items[variant], config.bucket_cap, pattern_order
            )
            write_test_set(out_dir, "aug_test", variant, balanced, AUG_META_COLUMNS)
            written[variant.value] = len(balanced)

        self.log_command("augment", out_dir=str(out_dir), candidates=len(candidates), **written)
        self.finish(config, "augment", started)
        return 0
