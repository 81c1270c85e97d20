"""Per-question orchestration: retrieval, the sufficiency judgment, and
the bounded exploration loop (decomposition, frontier selection,
retriever-assisted relation exploration, entity exploration, path update,
answer generation).

The loop never runs more than ``max_rounds`` rounds and never spends more
than ``call_budget`` LLM attempts. Selections are only ever accepted from
the candidate lists offered in the prompts; anything else the model names
is dropped and counted. With the mock backend and the lexical scorer the
whole run is deterministic, trace included.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence

from .dataset import QuestionRecord
from .kg import Entity, GraphBackend
from .llm import CallBudget, LlmGateway
from .errors import KgqaError, ReplyParseError
from .paths import PathStep, ReasoningPath, ScoredPath, path_text
from .prompts import PromptKind
from .parsing import filter_selection
from .relevance import ScoreRequest, ScorerBackend, score_batch
from .retrieval import RetrievalConfig, retrieve_ranked_paths
from .telemetry import Telemetry, Trace
from .text import jaccard

FRONTIER_CAP = 10  # hard limit from the selection prompt contract


@dataclass(frozen=True)
class TopicQuestion:
    """The sub-question scoped to one topic entity."""

    topic: Entity
    text: str


@dataclass(frozen=True)
class PipelineConfig:
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    max_rounds: int = 2
    entity_filter_top: int = 20
    call_budget: int = 40
    sep_token: str = "[SEP]"

    def __post_init__(self):
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be a positive integer")
        if self.entity_filter_top < 1:
            raise ValueError("entity_filter_top must be a positive integer")
        if self.call_budget < 1:
            raise ValueError("call_budget must be a positive integer")


@dataclass
class RoundRecord:
    round: int
    frontier: list[str]
    relations: dict[str, list[str]]
    steps: dict[str, list[PathStep]]


@dataclass
class ExplorationState:
    topic_questions: list[TopicQuestion]
    paths: dict[str, list[ReasoningPath]]
    round: int = 0
    frontier: list[tuple[Entity, TopicQuestion]] = field(default_factory=list)
    history: list[RoundRecord] = field(default_factory=list)


@dataclass
class PipelineResult:
    """Outcome of one question.

    ``stage`` is ``judgment`` when the initial paths sufficed,
    ``exploration`` when the loop produced the answer (including
    dead-end and budget cutoffs), and ``forced`` when the round cap was
    exhausted and the answer had to be coerced from accumulated paths.
    ``rounds_used`` counts fully explored rounds.
    """

    question_id: str
    question: str
    answers: list[str]
    stage: str
    rounds_used: int
    telemetry: Telemetry
    trace: list[dict]
    sufficient: bool | None = None
    failed: bool = False
    error: str | None = None


class EntityFilter(Protocol):
    def top(self, question: str, candidates: Sequence[Entity], keep: int) -> list[Entity]: ...


class LexicalEntityFilter:
    """Keeps the candidates whose display names are most Jaccard-similar to
    the topic question; ties resolve by entity id."""

    def top(self, question: str, candidates: Sequence[Entity], keep: int) -> list[Entity]:
        ranked = sorted(candidates, key=lambda e: (-jaccard(question, e.display), e.id))
        return ranked[:keep]


def partition_paths(
    topics: Sequence[Entity], ranked: Sequence[ScoredPath]
) -> dict[str, list[ReasoningPath]]:
    """Split the globally ranked paths by topic entity; a topic with no
    surviving path keeps a zero-hop path so exploration can root there."""
    by_topic: dict[str, list[ReasoningPath]] = {t.id: [] for t in topics}
    for sp in ranked:
        by_topic.setdefault(sp.path.topic.id, []).append(sp.path)
    for t in topics:
        if not by_topic[t.id]:
            by_topic[t.id] = [ReasoningPath(t)]
    return by_topic


def update_paths(
    paths_by_topic: Mapping[str, Sequence[ReasoningPath]],
    extensions: Mapping[str, Mapping[str, Sequence[PathStep]]],
) -> dict[str, list[ReasoningPath]]:
    """Extend each frontier entity's owning paths with its selected steps.

    A path ending at a frontier entity is replaced by its extensions; a
    path merely containing the entity keeps its tail and additionally
    spawns extensions of the prefix up to that entity. Untouched paths
    carry over; duplicates are dropped.
    """
    updated: dict[str, list[ReasoningPath]] = {}
    for topic_id, paths in paths_by_topic.items():
        topic_exts = extensions.get(topic_id, {})
        result: list[ReasoningPath] = []
        for p in paths:
            additions: list[ReasoningPath] = []
            consumed = False
            for eid in sorted(topic_exts):
                steps = topic_exts[eid]
                if not steps:
                    continue
                prefix = p.prefix_through(eid)
                if prefix is None:
                    continue
                additions.extend(prefix.extend(step) for step in steps)
                if p.end.id == eid:
                    consumed = True
            if not consumed:
                result.append(p)
            result.extend(additions)
        seen: set[tuple] = set()
        deduped = []
        for p in result:
            key = (p.topic.id, tuple((s.relation, s.entity.id, s.inverse) for s in p.steps))
            if key not in seen:
                seen.add(key)
                deduped.append(p)
        updated[topic_id] = deduped
    return updated


class Pipeline:
    """Answers questions over a graph backend with a scorer and an LLM
    gateway. Instances are stateless across questions and safe to share
    between threads; pass ``clock=None`` (the default) for deterministic
    wall times derived from backend-reported latencies."""

    def __init__(
        self,
        graph: GraphBackend,
        scorer: ScorerBackend,
        gateway: LlmGateway,
        config: PipelineConfig | None = None,
        entity_filter: EntityFilter | None = None,
        clock=None,
    ):
        self.graph = graph
        self.scorer = scorer
        self.gateway = gateway
        self.config = config or PipelineConfig()
        self.entity_filter = entity_filter or LexicalEntityFilter()
        self.clock = clock

    # ----- prompt-block rendering -----

    def _paths_block(self, paths: Sequence[ReasoningPath]) -> str:
        return "\n".join(path_text(p) for p in paths)

    def _topic_sections(
        self,
        topic_questions: Sequence[TopicQuestion],
        paths_by_topic: Mapping[str, Sequence[ReasoningPath]],
    ) -> str:
        sections = []
        for i, tq in enumerate(topic_questions, start=1):
            sections.append(
                f"Topic {i}:\n\n"
                f"Topic Question:\n{tq.text}\n\n"
                f"Topic Entity:\n{tq.topic.display}\n\n"
                f"Triplets:\n{self._paths_block(paths_by_topic.get(tq.topic.id, []))}"
            )
        return "\n\n".join(sections)

    # ----- pipeline stages -----

    def judge(
        self,
        question: str,
        top_paths: Sequence[ScoredPath],
        telemetry: Telemetry,
        trace: Trace,
        budget: CallBudget,
    ) -> tuple[bool, list[str]]:
        """Single sufficiency call over the ranked paths. Parse failures
        (after the re-ask) count as insufficient."""
        slots = {
            "question": question,
            "paths": self._paths_block([sp.path for sp in top_paths]),
        }
        try:
            outcome = self.gateway.ask_json(PromptKind.JUDGMENT, slots, telemetry, budget)
        except ReplyParseError:
            trace.add("judge", verdict="parse_failure")
            return False, []
        reply = outcome.parsed
        sufficient = bool(reply.sufficient and reply.answers)
        trace.add(
            "judge",
            verdict="sufficient" if sufficient else "insufficient",
            answers=list(reply.answers),
            prompt_hash=outcome.prompt_hash,
        )
        return sufficient, list(reply.answers)

    def decompose(
        self,
        question: str,
        topics: Sequence[Entity],
        telemetry: Telemetry,
        trace: Trace,
        budget: CallBudget,
    ) -> list[TopicQuestion]:
        """One sub-question per topic entity, order-aligned. Malformed
        replies fall back to the original question for every topic."""
        slots = {
            "question": question,
            "topic_entities": "\n".join(t.display for t in topics),
        }
        subs: list[str] | None = None
        prompt_hash = None
        try:
            outcome = self.gateway.ask_json(PromptKind.DECOMPOSITION, slots, telemetry, budget)
            prompt_hash = outcome.prompt_hash
            parsed = outcome.parsed
            if len(parsed) == len(topics) and all(isinstance(s, str) and s.strip() for s in parsed):
                subs = [s.strip() for s in parsed]
        except ReplyParseError:
            pass
        fallback = subs is None
        if subs is None:
            subs = [question] * len(topics)
        trace.add("decompose", sub_questions=subs, fallback=fallback, prompt_hash=prompt_hash)
        return [TopicQuestion(t, s) for t, s in zip(topics, subs)]

    def _frontier_candidates(
        self, state: ExplorationState
    ) -> list[tuple[Entity, TopicQuestion]]:
        candidates: list[tuple[Entity, TopicQuestion]] = []
        seen: set[str] = set()
        for tq in state.topic_questions:
            pool = [tq.topic] + [
                e for p in state.paths.get(tq.topic.id, []) for e in p.entities()
            ]
            for e in pool:
                if e.id not in seen:
                    seen.add(e.id)
                    candidates.append((e, tq))
        return candidates

    def select_frontier(
        self,
        question: str,
        state: ExplorationState,
        telemetry: Telemetry,
        trace: Trace,
        budget: CallBudget,
    ) -> list[tuple[Entity, TopicQuestion]]:
        """Pick the entities to explore this round, strictly from entities
        present in the previous round's paths (or the topics), capped at
        the prompt's limit of ten."""
        candidates = self._frontier_candidates(state)
        by_display: dict[str, tuple[Entity, TopicQuestion]] = {}
        for e, tq in candidates:
            by_display.setdefault(e.display, (e, tq))
        offered = list(by_display)
        slots = {
            "question": question,
            "topics": self._topic_sections(state.topic_questions, state.paths),
            "entity_list": "\n".join(offered),
        }
        try:
            outcome = self.gateway.ask_json(PromptKind.ENTITY_SELECTION, slots, telemetry, budget)
            items = outcome.parsed
            prompt_hash = outcome.prompt_hash
        except ReplyParseError:
            items, prompt_hash = [], None
        kept, violations = filter_selection(items, offered)
        kept = kept[:FRONTIER_CAP]
        trace.add(
            "frontier",
            round=state.round + 1,
            offered=offered,
            selected=kept,
            violations=violations,
            prompt_hash=prompt_hash,
        )
        return [by_display[name] for name in kept]

    def explore_relations(
        self,
        entity: Entity,
        topic_q: TopicQuestion,
        telemetry: Telemetry,
        trace: Trace,
        budget: CallBudget,
        round_no: int,
    ) -> list[str]:
        """Offer the retriever's top-N relations at ``entity`` to the model
        and return the subset it picks (always within the offer)."""
        cfg = self.config.retrieval
        candidates = sorted(
            self.graph.out_relations(entity) | self.graph.in_relations(entity)
        )
        if not candidates:
            trace.add("relations", round=round_no, entity=entity.id, offered=[],
                      selected=[], violations=[], dead_end=True)
            return []
        if len(candidates) > cfg.top_n_relations:
            scores = score_batch(
                [ScoreRequest(topic_q.text, r, "relation") for r in candidates],
                self.scorer,
            )
            order = sorted(zip(candidates, scores), key=lambda rs: (-rs[1], rs[0]))
            offered = [r for r, _ in order[: cfg.top_n_relations]]
        else:
            offered = candidates
        slots = {
            "question": topic_q.text,
            "entity": entity.display,
            "relations": "\n".join(offered),
        }
        try:
            outcome = self.gateway.ask_json(
                PromptKind.RELATION_EXPLORATION, slots, telemetry, budget
            )
            items = outcome.parsed
            prompt_hash = outcome.prompt_hash
        except ReplyParseError:
            items, prompt_hash = [], None
        kept, violations = filter_selection(items, offered)
        trace.add(
            "relations",
            round=round_no,
            entity=entity.id,
            offered=offered,
            selected=kept,
            violations=violations,
            prompt_hash=prompt_hash,
        )
        return kept

    def explore_entities(
        self,
        entity: Entity,
        relation: str,
        topic_q: TopicQuestion,
        telemetry: Telemetry,
        trace: Trace,
        budget: CallBudget,
        round_no: int,
    ) -> list[PathStep]:
        """Fetch neighbors over ``relation`` in both directions, pre-filter
        them semantically, and let the model pick a minimal subset."""
        tails = sorted(self.graph.tail_entities(entity, relation), key=lambda e: e.id)
        heads = sorted(self.graph.head_entities(entity, relation), key=lambda e: e.id)
        tail_ids = {e.id for e in tails}
        pool = tails + [h for h in heads if h.id not in tail_ids]
        if not pool:
            trace.add("entities", round=round_no, entity=entity.id, relation=relation,
                      offered=[], selected=[], violations=[], dead_end=True)
            return []
        kept_entities = self.entity_filter.top(
            topic_q.text, pool, self.config.entity_filter_top
        )
        kept_ids = {e.id for e in kept_entities}
        lines = [
            f"({entity.display}, {relation}, {t.display})" for t in tails if t.id in kept_ids
        ] + [
            f"({h.display}, {relation}, {entity.display})" for h in heads if h.id in kept_ids
        ]
        by_display: dict[str, Entity] = {}
        for e in kept_entities:
            by_display.setdefault(e.display, e)
        offered = list(by_display)
        slots = {"question": topic_q.text, "triplets": "\n".join(lines)}
        try:
            outcome = self.gateway.ask_json(
                PromptKind.ENTITY_EXPLORATION, slots, telemetry, budget
            )
            items = outcome.parsed
            prompt_hash = outcome.prompt_hash
        except ReplyParseError:
            items, prompt_hash = [], None
        kept_names, violations = filter_selection(items, offered)
        head_ids = {e.id for e in heads}
        steps: list[PathStep] = []
        for name in kept_names:
            e = by_display[name]
            if e.id in tail_ids:
                steps.append(PathStep(relation, e, inverse=False))
            if e.id in head_ids:
                steps.append(PathStep(relation, e, inverse=True))
        trace.add(
            "entities",
            round=round_no,
            entity=entity.id,
            relation=relation,
            offered=offered,
            selected=kept_names,
            violations=violations,
            prompt_hash=prompt_hash,
        )
        return steps

    def generate_answer(
        self,
        question: str,
        topic_questions: Sequence[TopicQuestion],
        paths_by_topic: Mapping[str, Sequence[ReasoningPath]],
        is_final_round: bool,
        telemetry: Telemetry,
        trace: Trace,
        budget: CallBudget,
    ) -> tuple[bool, list[str], bool]:
        """Reason over per-topic paths; returns (answered, answers,
        coerced). Before the final round the model may defer; on the final
        round any reply is coerced into an answer, with parse failures
        recorded as ``UNKNOWN``."""
        slots = {
            "question": question,
            "topics": self._topic_sections(topic_questions, paths_by_topic),
        }
        try:
            outcome = self.gateway.ask_json(
                PromptKind.ANSWER_GENERATION, slots, telemetry, budget
            )
        except ReplyParseError:
            if is_final_round:
                trace.add("generate", verdict="parse_failure_forced", answers=["UNKNOWN"])
                return True, ["UNKNOWN"], True
            trace.add("generate", verdict="parse_failure")
            return False, [], False
        reply = outcome.parsed
        if reply.sufficient and reply.answers:
            trace.add("generate", verdict="answer", answers=list(reply.answers),
                      prompt_hash=outcome.prompt_hash)
            return True, list(reply.answers), False
        if is_final_round:
            trace.add("generate", verdict="forced", answers=list(reply.answers),
                      prompt_hash=outcome.prompt_hash)
            return True, list(reply.answers), True
        trace.add("generate", verdict="need_more", prompt_hash=outcome.prompt_hash)
        return False, [], False

    # ----- orchestration -----

    def retrieve(self, record: QuestionRecord) -> list[ScoredPath]:
        topics = [self.graph.entity(t) for t in record.topic_entities]
        return retrieve_ranked_paths(
            record.question, topics, self.graph, self.scorer, self.config.retrieval
        )

    def judge_only(self, record: QuestionRecord) -> PipelineResult:
        """Retrieval, ranking, and the judgment call; no exploration."""
        telemetry, trace = Telemetry(), Trace()
        budget = CallBudget(self.config.call_budget)
        start = self.clock() if self.clock else None
        answers: list[str] = []
        sufficient = False
        failed, error = False, None
        try:
            ranked = self.retrieve(record)
            trace.add("retrieval", paths=[path_text(sp.path) for sp in ranked])
            sufficient, answers = self.judge(record.question, ranked, telemetry, trace, budget)
        except CallBudget.Exhausted:
            trace.add("budget_exhausted", spent=budget.spent)
        except KgqaError as exc:
            failed, error = True, str(exc)
            trace.add("hard_failure", error=str(exc), kind=type(exc).__name__)
        finally:
            telemetry.set_wall_time(
                (self.clock() - start) if start is not None else telemetry.llm_time
            )
        return PipelineResult(
            question_id=record.id,
            question=record.question,
            answers=answers if sufficient else [],
            stage="judgment",
            rounds_used=0,
            telemetry=telemetry,
            trace=trace.events,
            sufficient=sufficient,
            failed=failed,
            error=error,
        )

    def answer_question(self, record: QuestionRecord) -> PipelineResult:
        """Full run for one question: retrieval, judgment, and (when the
        evidence falls short) the bounded exploration loop."""
        telemetry, trace = Telemetry(), Trace()
        budget = CallBudget(self.config.call_budget)
        start = self.clock() if self.clock else None
        progress = {"stage": "judgment", "rounds": 0, "answers": [], "sufficient": None}
        failed, error = False, None
        try:
            topics = [self.graph.entity(t) for t in record.topic_entities]
            ranked = self.retrieve(record)
            trace.add("retrieval", paths=[path_text(sp.path) for sp in ranked])
            sufficient, answers = self.judge(record.question, ranked, telemetry, trace, budget)
            progress["sufficient"] = sufficient
            if sufficient:
                progress["answers"] = answers
            else:
                topic_questions = self.decompose(
                    record.question, topics, telemetry, trace, budget
                )
                progress["stage"] = "exploration"
                self._explore(
                    record.question, topics, topic_questions, ranked,
                    telemetry, trace, budget, progress,
                )
        except CallBudget.Exhausted:
            trace.add("budget_exhausted", spent=budget.spent)
        except KgqaError as exc:
            failed, error = True, str(exc)
            trace.add("hard_failure", error=str(exc), kind=type(exc).__name__)
        finally:
            telemetry.set_wall_time(
                (self.clock() - start) if start is not None else telemetry.llm_time
            )
        return PipelineResult(
            question_id=record.id,
            question=record.question,
            answers=list(progress["answers"]),
            stage=progress["stage"],
            rounds_used=progress["rounds"],
            telemetry=telemetry,
            trace=trace.events,
            sufficient=progress["sufficient"],
            failed=failed,
            error=error,
        )

    def _explore(
        self,
        question: str,
        topics: Sequence[Entity],
        topic_questions: list[TopicQuestion],
        ranked: Sequence[ScoredPath],
        telemetry: Telemetry,
        trace: Trace,
        budget: CallBudget,
        progress: dict,
    ) -> None:
        cfg = self.config
        state = ExplorationState(
            topic_questions=topic_questions,
            paths=partition_paths(topics, ranked),
        )
        for d in range(1, cfg.max_rounds + 1):
            frontier = self.select_frontier(question, state, telemetry, trace, budget)
            if not frontier:
                # nothing left to explore: force an answer from what we have
                trace.add("dead_end", round=d)
                _, answers, _ = self.generate_answer(
                    question, topic_questions, state.paths, True,
                    telemetry, trace, budget,
                )
                progress["answers"] = answers
                return
            state.frontier = frontier
            extensions: dict[str, dict[str, list[PathStep]]] = {}
            selected_relations: dict[str, list[str]] = {}
            steps_by_entity: dict[str, list[PathStep]] = {}
            for e, tq in sorted(frontier, key=lambda pair: pair[0].id):
                relations = self.explore_relations(e, tq, telemetry, trace, budget, d)
                selected_relations[e.id] = relations
                for r in relations:
                    steps = self.explore_entities(e, r, tq, telemetry, trace, budget, d)
                    if steps:
                        extensions.setdefault(tq.topic.id, {}).setdefault(e.id, []).extend(steps)
                        steps_by_entity.setdefault(e.id, []).extend(steps)
            state.paths = update_paths(state.paths, extensions)
            state.round = d
            state.history.append(
                RoundRecord(
                    round=d,
                    frontier=[e.id for e, _ in frontier],
                    relations=selected_relations,
                    steps=steps_by_entity,
                )
            )
            progress["rounds"] = d
            answered, answers, coerced = self.generate_answer(
                question, topic_questions, state.paths, d == cfg.max_rounds,
                telemetry, trace, budget,
            )
            if answered:
                progress["answers"] = answers
                progress["stage"] = (
                    "forced" if coerced and d == cfg.max_rounds else "exploration"
                )
                return
