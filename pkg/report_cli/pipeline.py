import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

from blocking.block_index import BlockIndex, build_blocks, size_distribution
from corpus_ingest.dblp_parser import CorpusBuilder, default_entity_table, load_entity_table
from corpus_ingest.loaders import (
    load_citation_graph,
    load_labeled_dataset,
    load_orcid_links,
    load_synonym_pairs,
)
from corpus_ingest.models import CorpusStore, SynonymSet
from disambiguators.clustering import Clustering, run_method
from labeling.labels import AmbiguityReport, MatchedLabels, PairLabels
from labeling.orcid_labels import (
    build_orcid_labels,
    extract_orcid_homonym_subset,
    extract_orcid_synonym_subset,
)
from labeling.record_matcher import RecordMatcher
from labeling.self_citation import extract_self_citation_pairs
from metrics.aggregate import aggregate_scores, pair_recall_scores
from metrics.bcubed import bcubed_prf
from metrics.pairwise import pairwise_prf
from report_cli import __version__
from report_cli.config import (
    FAMILY_MANUAL,
    FAMILY_ORCID,
    FAMILY_ORCID_HOMONYM,
    FAMILY_ORCID_SYNONYM,
    FAMILY_SELF_CITATION,
    PipelineConfig,
)
from report_cli.report import CombinationFailure, CombinationResult, EvaluationReport

logger = logging.getLogger(__name__)


@dataclass
class LabelFamily:
    name: str
    labels: Optional[MatchedLabels] = None
    pairs: Optional[PairLabels] = None
    ambiguity: Optional[AmbiguityReport] = None
    stats: Dict[str, object] = field(default_factory=dict)

    def universe(self) -> Tuple[int, ...]:
        if self.labels is not None:
            return self.labels.mention_ids
        return self.pairs.mention_ids()

    def match_stats(self) -> Dict[str, object]:
        if self.labels is not None:
            return self.labels.match_stats.to_dict()
        return dict(self.pairs.stats)


class EvaluationPipeline:
    """ingest -> label -> block -> disambiguate -> score -> aggregate."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self._corpus: Optional[CorpusStore] = None
        self._synonyms: Optional[SynonymSet] = None
        self._families: Optional[Dict[str, LabelFamily]] = None

    @property
    def entity_table(self):
        if self.config.inputs.entity_table:
            return load_entity_table(self.config.inputs.entity_table)
        return default_entity_table()

    def ingest(self) -> CorpusStore:
        if self._corpus is None:
            builder = CorpusBuilder(pub_types=self.config.pub_types,
                                    entity_table=self.entity_table)
            self._corpus = builder.ingest(self.config.inputs.dump)
        return self._corpus

    def synonyms(self) -> SynonymSet:
        if self._synonyms is None:
            if self.config.inputs.synonyms:
                self._synonyms = load_synonym_pairs(self.config.inputs.synonyms)
            else:
                self._synonyms = SynonymSet(pairs=frozenset())
        return self._synonyms

    def _manual_families(self, corpus: CorpusStore) -> List[LabelFamily]:
        matcher = RecordMatcher(corpus)
        families = []
        for spec in self.config.inputs.labeled_datasets:
            dataset = load_labeled_dataset(spec.path, name=spec.name)
            labels, ambiguity = matcher.match(
                dataset, resolve_ambiguous=self.config.flags.resolve_ambiguous
            )
            families.append(LabelFamily(
                name=f"{FAMILY_MANUAL}:{spec.name}",
                labels=labels,
                ambiguity=ambiguity,
                stats={
                    "entries": len(dataset),
                    "distinct_authors_in": dataset.distinct_authors,
                    "mentions": len(labels),
                    "distinct_authors": labels.distinct_authors,
                    "ambiguities": len(ambiguity),
                    "line_errors": len(dataset.errors),
                },
            ))
        return families

    def _orcid_families(self, corpus: CorpusStore) -> List[LabelFamily]:
        inputs = self.config.inputs
        links = load_orcid_links(
            corpus,
            mapping=inputs.orcid_mapping,
            person_records=inputs.dump if inputs.orcid_from_dump else None,
            entity_table=self.entity_table,
        )
        labels = build_orcid_labels(corpus, links)
        wanted = set(self.config.families)
        families = []
        if FAMILY_ORCID in wanted:
            families.append(labels)
        if wanted & {FAMILY_ORCID_HOMONYM, FAMILY_ORCID_SYNONYM}:
            labeled = [corpus.mention(m) for m in labels.mention_ids]
            blocks = build_blocks(labeled, "first_initial")
            if FAMILY_ORCID_HOMONYM in wanted:
                families.append(extract_orcid_homonym_subset(
                    labels, corpus, blocks, match_on=self.config.flags.homonym_match_on))
            if FAMILY_ORCID_SYNONYM in wanted:
                families.append(extract_orcid_synonym_subset(
                    labels, corpus, blocks, synonym_only=self.config.flags.synonym_only))

        return [
            LabelFamily(
                name=subset.source_tag,
                labels=subset,
                stats={
                    "mentions": len(subset),
                    "distinct_authors": subset.distinct_authors,
                    "rejected_orcids": links.rejected_orcids,
                    "conflicting_names": len(links.conflicts),
                },
            )
            for subset in families
        ]

    def _self_citation_family(self, corpus: CorpusStore) -> LabelFamily:
        graph = load_citation_graph(self.config.inputs.citation_graph,
                                    fmt=self.config.inputs.citation_format, corpus=corpus)
        pairs = extract_self_citation_pairs(corpus, graph)
        stats = dict(pairs.stats)
        stats.update({
            "pairs": len(pairs),
            "edges": len(graph),
            "duplicate_edges": graph.duplicates,
            "self_loops": graph.self_loops,
            "unresolved_endpoints": graph.unresolved_endpoints,
        })
        return LabelFamily(name=FAMILY_SELF_CITATION, pairs=pairs, stats=stats)

    def label(self) -> Dict[str, LabelFamily]:
        if self._families is None:
            corpus = self.ingest()
            wanted = set(self.config.families)
            families: List[LabelFamily] = []
            if FAMILY_MANUAL in wanted:
                families += self._manual_families(corpus)
            if wanted & {FAMILY_ORCID, FAMILY_ORCID_HOMONYM, FAMILY_ORCID_SYNONYM}:
                families += self._orcid_families(corpus)
            if FAMILY_SELF_CITATION in wanted:
                families.append(self._self_citation_family(corpus))
            self._families = {family.name: family for family in families}
        return self._families

    def cluster(self, method: str, mention_ids) -> Clustering:
        corpus = self.ingest()
        mentions = [corpus.mention(m) for m in mention_ids]
        return run_method(method, corpus, mentions, synonyms=self.synonyms(),
                          strip_suffix=self.config.flags.strip_suffix)

    def _blocks(self, universe, key_fn: str) -> Tuple[BlockIndex, Dict[str, int]]:
        corpus = self.ingest()
        blocks = build_blocks([corpus.mention(m) for m in universe], key_fn)
        if not self.config.flags.corpus_wide_blocking:
            return blocks, {key: len(members) for key, members in blocks.blocks.items()}
        everything = build_blocks(corpus.mentions, key_fn)
        return blocks, {key: len(everything.blocks[key]) for key in blocks.blocks}

    def evaluate_combination(self, family: LabelFamily, method: str) -> CombinationResult:
        universe = family.universe()
        # self-citation pairs are mined on first-initial keys and must share a block
        key_fn = self.config.block_key if family.labels is not None else "first_initial"
        blocks, sizes = self._blocks(universe, key_fn)
        clustering = self.cluster(method, universe)

        if family.labels is not None:
            scores = [
                pairwise_prf(clustering, family.labels, members, block_key=key)
                for key, members in blocks.blocks.items()
            ]
            bcubed = bcubed_prf(clustering, family.labels, universe) if universe else None
        else:
            scores = pair_recall_scores(clustering, family.pairs, blocks)
            bcubed = None
        scores = [replace(score, block_size=sizes[score.block_key]) for score in scores]

        return CombinationResult(
            family=family.name,
            method=method,
            aggregate=aggregate_scores(scores, sd_flavor=self.config.flags.sd_flavor),
            distribution=size_distribution(sizes.values()),
            block_scores=tuple(scores),
            match_stats=family.match_stats(),
            bcubed=bcubed,
        )

    def _safe_evaluate(self, family: LabelFamily, method: str):
        try:
            return self.evaluate_combination(family, method)
        except Exception as exc:
            logger.error("Evaluation of %s x %s failed: %s", family.name, method, exc)
            return CombinationFailure(family=family.name, method=method, error=str(exc))

    def run(self) -> EvaluationReport:
        self.config.validate()
        families = self.label()
        self.synonyms()
        combinations = [
            (family, method)
            for family in families.values()
            for method in self.config.disambiguators
        ]
        with ThreadPoolExecutor(max_workers=self.config.threads) as executor:
            outcomes = list(executor.map(lambda combo: self._safe_evaluate(*combo), combinations))

        results = tuple(o for o in outcomes if isinstance(o, CombinationResult))
        failures = tuple(o for o in outcomes if isinstance(o, CombinationFailure))
        logger.info("Scored %d combinations (%d failed)", len(results), len(failures))
        return EvaluationReport(
            toolkit_version=__version__,
            config=self.config.to_dict(),
            results=results,
            failures=failures,
            label_stats={name: dict(family.stats) for name, family in families.items()},
        )

    # Intermediate artifacts for the stage subcommands

    def write_ingest(self, out_dir: str) -> List[str]:
        os.makedirs(out_dir, exist_ok=True)
        corpus = self.ingest()
        builder = CorpusBuilder(data_dir=out_dir)
        paths = [builder.save_store(corpus, "corpus.jsonl")]
        stats_path = os.path.join(out_dir, "ingest_stats.json")
        with open(stats_path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(corpus.counts.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")
        return paths + [stats_path]

    def write_labels(self, out_dir: str) -> List[str]:
        os.makedirs(out_dir, exist_ok=True)
        paths = []
        for name, family in self.label().items():
            slug = name.replace(":", "_")
            if family.labels is not None:
                path = os.path.join(out_dir, f"labels_{slug}.csv")
                family.labels.to_csv(path)
                paths.append(path)
            if family.pairs is not None:
                path = os.path.join(out_dir, f"pairs_{slug}.csv")
                family.pairs.to_csv(path)
                paths.append(path)
            if family.ambiguity is not None:
                path = os.path.join(out_dir, f"ambiguity_{name.split(':')[-1]}.jsonl")
                family.ambiguity.write(path)
                paths.append(path)
        return paths

    def write_clusterings(self, out_dir: str) -> List[str]:
        os.makedirs(out_dir, exist_ok=True)
        universe = sorted({m for family in self.label().values() for m in family.universe()})
        paths = []
        for method in self.config.disambiguators:
            path = os.path.join(out_dir, f"clustering_{method}.csv")
            self.cluster(method, universe).to_csv(path)
            paths.append(path)
        return paths


def run_pipeline(config: PipelineConfig) -> EvaluationReport:
    return EvaluationPipeline(config).run()
