"""Per-criterion prompting, option shuffling and verdict parsing.

Every criterion is judged in its own call. Multi-choice options are
shuffled with a seed derived from (master seed, item, criterion, judge), so
reruns see the same option order, and the judge's pick is mapped back to
the original option index before scoring.
"""

from __future__ import annotations

import asyncio
import contextlib
import json
import random
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Optional, Protocol, Sequence, Union

from .rubric import CANNOT_ASSESS, MET, UNMET, Criterion, Verdict, Vote

BINARY_SYSTEM_PROMPT = """\
You are an expert evaluation judge. Your task is to determine whether
a single criterion is satisfied by a given submission. Be precise,
evidence-based, and consistent.

You will receive a <criterion_type> (positive or negative),
a <criterion>, and a <submission> to evaluate. Your verdict must
be one of:
- "MET": The thing described in the criterion IS present
- "UNMET": The thing described in the criterion IS NOT present
- "CANNOT_ASSESS": Insufficient evidence to determine (use rarely)

Evaluate this criterion independently. Do not let overall submission
quality influence your judgment.

CRITERION TYPES:
<criterion_type> indicates whether the criterion describes something
desirable (positive) or undesirable (negative). Your job is THE SAME
for both: determine if the thing described is present.

POSITIVE CRITERIA: desired traits that should be present.
NEGATIVE CRITERIA: active errors or mistakes. MET means the
submission advocates or states the problematic thing; UNMET means
it does NOT make this error or mentions it only to warn against it.

EVALUATION RULES:
- For numerical values: check specified ranges or exact matches.
- For factual claims: verify presence and accuracy.
- For required elements: confirm presence, count precisely.
- For exclusion requirements: confirm restricted content is absent.
- Be strict about factual accuracy but flexible about wording.
- Accept semantically equivalent statements or logical implications.

IMPLICIT SATISFACTION:
A criterion can be satisfied implicitly through context, tone, or
logical implication.

CANNOT_ASSESS VERDICT:
Use only when you genuinely cannot determine if the criterion is met
(e.g., missing attachments, garbled text). Do NOT use when you can
make a reasonable inference or when the criterion is simply not met.

RESPONSE FORMAT:
Respond with valid JSON:
{"criterion_status": "MET"|"UNMET"|"CANNOT_ASSESS",
 "explanation": "..."}

Provide a 1-2 sentence explanation. Cite specific text from the
submission as evidence for your verdict."""

CHOICE_SYSTEM_PROMPT = """\
You are an expert evaluation judge. Your task is to select the best
matching option for a given submission from a set of predefined
choices. Be precise, evidence-based, and consistent.

You will receive a <question>, numbered <options>, and a <submission>.

EVALUATION RULES:
- Review ALL options before selecting.
- Base judgment on submission content, not assumptions about intent.
- Be strict about factual accuracy but flexible about wording.
- For ordinal scales, treat options as points on a continuum.
- Do not default to middle options out of uncertainty.
- When borderline, select the option whose description more precisely
  matches the specific evidence in the submission.

NA / NOT APPLICABLE OPTIONS:
Select NA only when the question genuinely cannot be answered
(missing attachments, garbled text). Do NOT select NA when you can
make a reasonable inference or when the submission simply does not
match well (select the closest match instead).

RESPONSE FORMAT:
Respond with valid JSON:
{"selected_option": <number>, "explanation": "..."}

Provide a 1-2 sentence explanation. Cite specific text from the
submission as evidence for your selection."""


class ParseError(ValueError):
    """The judge's reply did not contain a usable verdict."""


class TransportError(RuntimeError):
    """A backend call failed before producing a reply (network, HTTP 5xx, ...)."""


ThinkingLevel = Union[str, int, None]
THINKING_LEVELS = ("none", "low", "medium", "high")


@dataclass
class JudgeConfig:
    model_id: str = "scripted"
    endpoint_url: str = ""
    api_key_env_var: str = "OPENAI_API_KEY"
    generation_params: dict[str, Any] = field(default_factory=lambda: {"temperature": 0.0})
    thinking_level: ThinkingLevel = None
    max_parallel_requests: int = 10
    cache_enabled: bool = False
    cache_dir: str = ".rubriceval_cache"
    cache_ttl: Optional[float] = None
    shuffle_options: bool = True
    input_cost_per_token: float = 0.0
    output_cost_per_token: float = 0.0
    max_attempts: int = 3
    backoff_base: float = 1.0
    binary_system_prompt: Optional[str] = None
    choice_system_prompt: Optional[str] = None

    def __post_init__(self) -> None:
        if self.max_parallel_requests < 1:
            raise ValueError("max_parallel_requests must be at least 1")
        if isinstance(self.thinking_level, str):
            level = self.thinking_level.lower()
            if level not in THINKING_LEVELS:
                raise ValueError(f"thinking_level must be one of {THINKING_LEVELS} or a token budget")
            self.thinking_level = level
        elif isinstance(self.thinking_level, int) and self.thinking_level < 0:
            raise ValueError("thinking token budget must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "JudgeConfig":
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)


@dataclass(frozen=True)
class PromptBundle:
    system_text: str
    user_text: str
    permutation: tuple[int, ...] = ()

    @property
    def messages(self) -> list[dict[str, str]]:
        return [
            {"role": "system", "content": self.system_text},
            {"role": "user", "content": self.user_text},
        ]


@dataclass(frozen=True)
class JudgeBackendResult:
    raw_text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0
    cost: float = 0.0
    cached: bool = False

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens


@dataclass(frozen=True)
class JudgeRequest:
    messages: list[dict[str, str]]
    config: JudgeConfig
    item_id: str = ""
    criterion_id: str = ""
    judge_name: str = ""
    attempt: int = 0


class JudgeBackend(Protocol):
    async def complete(self, request: JudgeRequest) -> JudgeBackendResult: ...


# -- seeding and shuffling ---------------------------------------------------

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def derive_item_seed(master_seed: int, item_id: str, criterion_id: str, judge_name: str) -> int:
    """64-bit seed for one (item, criterion, judge) call.

    FNV-1a over the UTF-8 bytes of ``"master_seed|item_id|criterion_id|judge_name"``
    followed by the splitmix64 finalizer. Bit-exact and stable across runs.
    """
    data = f"{master_seed}|{item_id}|{criterion_id}|{judge_name}".encode("utf-8")
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    h ^= h >> 30
    h = (h * 0xBF58476D1CE4E5B9) & _MASK64
    h ^= h >> 27
    h = (h * 0x94D049BB133111EB) & _MASK64
    h ^= h >> 31
    return h


def shuffle_options(options: Sequence, seed: int) -> tuple[list, tuple[int, ...]]:
    """Fisher-Yates shuffle driven by ``random.Random(seed)`` (Mersenne Twister).

    Returns the shuffled list and the permutation, where ``permutation[p]``
    is the original index of the option shown at position ``p``.
    """
    if not options:
        raise ValueError("cannot shuffle an empty option list")
    rng = random.Random(seed)
    perm = list(range(len(options)))
    for i in range(len(perm) - 1, 0, -1):
        j = rng.randrange(i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return [options[i] for i in perm], tuple(perm)


# -- prompt construction -----------------------------------------------------

def _context_blocks(task_prompt: Optional[str], exemplars: Optional[str], submission: str) -> list[str]:
    parts = []
    if task_prompt:
        parts.append(f"<task_prompt>\n{task_prompt}\n</task_prompt>")
    if exemplars:
        parts.append(exemplars)
    parts.append(f"<submission>\n{submission}\n</submission>")
    return parts


def build_binary_prompt(
    criterion: Criterion,
    submission: str,
    task_prompt: Optional[str] = None,
    exemplars: Optional[str] = None,
    system_text: Optional[str] = None,
) -> PromptBundle:
    if not criterion.is_binary:
        raise ValueError(f"criterion {criterion.id} is not binary")
    kind = "positive" if criterion.weight > 0 else "negative"
    parts = [
        f"<criterion_type>{kind}</criterion_type>",
        f"<criterion>\n{criterion.requirement}\n</criterion>",
        *_context_blocks(task_prompt, exemplars, submission),
    ]
    return PromptBundle(system_text or BINARY_SYSTEM_PROMPT, "\n\n".join(parts), ())


def build_choice_prompt(
    criterion: Criterion,
    submission: str,
    seed: int,
    shuffle: bool = True,
    task_prompt: Optional[str] = None,
    exemplars: Optional[str] = None,
    system_text: Optional[str] = None,
) -> PromptBundle:
    if criterion.is_binary:
        raise ValueError(f"criterion {criterion.id} is binary")
    if shuffle:
        shown, perm = shuffle_options(criterion.options, seed)
    else:
        shown, perm = list(criterion.options), tuple(range(len(criterion.options)))
    numbered = "\n".join(f"{n}. {opt.label}" for n, opt in enumerate(shown, start=1))
    parts = [
        f"<question>\n{criterion.requirement}\n</question>",
        f"<scale>{criterion.scale_type.value}</scale>",
        f"<options>\n{numbered}\n</options>",
        *_context_blocks(task_prompt, exemplars, submission),
    ]
    return PromptBundle(system_text or CHOICE_SYSTEM_PROMPT, "\n\n".join(parts), perm)


# -- response parsing --------------------------------------------------------

def extract_json_object(text: str) -> Optional[dict]:
    """First balanced ``{...}`` substring of ``text`` that parses as a JSON object."""
    start = text.find("{")
    while start != -1:
        depth = 0
        in_string = False
        escaped = False
        for pos in range(start, len(text)):
            ch = text[pos]
            if in_string:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_string = False
            elif ch == '"':
                in_string = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    try:
                        obj = json.loads(text[start : pos + 1])
                    except json.JSONDecodeError:
                        break
                    if isinstance(obj, dict):
                        return obj
                    break
        start = text.find("{", start + 1)
    return None


def _explanation(obj: dict) -> str:
    reason = obj.get("explanation", obj.get("reason"))
    if not isinstance(reason, str) or not reason.strip():
        raise ParseError("missing explanation")
    return reason.strip()


_STATUS = {"MET": MET, "UNMET": UNMET, "CANNOT_ASSESS": CANNOT_ASSESS}


def parse_binary_response(raw_text: str) -> tuple[Verdict, str]:
    obj = extract_json_object(raw_text or "")
    if obj is None:
        raise ParseError("no JSON object in response")
    status = obj.get("criterion_status")
    if not isinstance(status, str) or status.strip().upper() not in _STATUS:
        raise ParseError(f"unknown criterion_status {status!r}")
    return _STATUS[status.strip().upper()], _explanation(obj)


def parse_choice_response(raw_text: str, permutation: Sequence[int]) -> tuple[Verdict, str]:
    obj = extract_json_object(raw_text or "")
    if obj is None:
        raise ParseError("no JSON object in response")
    selected = obj.get("selected_option")
    if isinstance(selected, str) and selected.strip().isdigit():
        selected = int(selected.strip())
    if isinstance(selected, bool) or not isinstance(selected, int):
        raise ParseError(f"selected_option {selected!r} is not an integer")
    if not 1 <= selected <= len(permutation):
        raise ParseError(f"selected_option {selected} outside 1..{len(permutation)}")
    return Verdict.choice(permutation[selected - 1]), _explanation(obj)


# -- one criterion, one judge --------------------------------------------------

Limiter = Callable[[JudgeConfig], contextlib.AbstractAsyncContextManager]


def _no_limit(config: JudgeConfig) -> contextlib.AbstractAsyncContextManager:
    return contextlib.nullcontext()


async def _call_with_retries(backend: JudgeBackend, request: JudgeRequest, limiter: Limiter) -> JudgeBackendResult:
    config = request.config
    failures: list[str] = []
    for attempt in range(config.max_attempts):
        try:
            async with limiter(config):
                return await backend.complete(request)
        except TransportError as exc:
            failures.append(str(exc))
            if attempt + 1 < config.max_attempts and config.backoff_base > 0:
                await asyncio.sleep(config.backoff_base * 2**attempt)
    raise TransportError(f"{config.max_attempts} attempts failed: {failures[-1]}")


async def judge_criterion(
    backend: JudgeBackend,
    config: JudgeConfig,
    criterion: Criterion,
    submission: str,
    task_prompt: Optional[str] = None,
    exemplars: Optional[str] = None,
    master_seed: int = 0,
    item_id: str = "",
    judge_name: str = "judge",
    limiter: Limiter = _no_limit,
) -> tuple[Vote, JudgeBackendResult]:
    """Ask one judge about one criterion.

    Transport failures are retried ``config.max_attempts`` times with
    exponential backoff; an unparseable reply is re-queried once. Neither
    raises: the vote falls back to CANNOT_ASSESS with a diagnostic reason.
    The returned backend result sums tokens and cost over every call made.
    """
    if criterion.is_binary:
        bundle = build_binary_prompt(criterion, submission, task_prompt, exemplars, config.binary_system_prompt)
    else:
        seed = derive_item_seed(master_seed, item_id, criterion.id, judge_name)
        bundle = build_choice_prompt(
            criterion, submission, seed, config.shuffle_options, task_prompt, exemplars, config.choice_system_prompt
        )
    perm = bundle.permutation or None

    calls: list[JudgeBackendResult] = []

    def usage(raw: str) -> JudgeBackendResult:
        return JudgeBackendResult(
            raw,
            sum(c.prompt_tokens for c in calls),
            sum(c.completion_tokens for c in calls),
            sum(c.cost for c in calls),
            all(c.cached for c in calls) if calls else False,
        )

    problem = ""
    for attempt in range(2):
        request = JudgeRequest(bundle.messages, config, item_id, criterion.id, judge_name, attempt)
        try:
            result = await _call_with_retries(backend, request, limiter)
        except TransportError as exc:
            msg = f"transport failure: {exc}"
            return Vote(judge_name, CANNOT_ASSESS, msg, perm, error=msg), usage("")
        calls.append(result)
        try:
            if criterion.is_binary:
                verdict, reason = parse_binary_response(result.raw_text)
            else:
                verdict, reason = parse_choice_response(result.raw_text, bundle.permutation)
        except ParseError as exc:
            problem = str(exc)
            continue
        return Vote(judge_name, verdict, reason, perm), usage(result.raw_text)
    raw = calls[-1].raw_text
    return Vote(judge_name, CANNOT_ASSESS, f"unparseable judge response after retry: {problem}", perm), usage(raw)
