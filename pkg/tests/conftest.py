from __future__ import annotations

import json
from pathlib import Path

import pytest

from hypeval.corpus import Corpus, EvalItem
from hypeval.llm import LlmClient, cache_key

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def fixture_corpus_path() -> Path:
    return DATA_DIR / "corpus12.jsonl"


def make_item(
    item_id: str = "i1",
    reference: str = "the cat sat",
    hyp_a: str = "the cat sit",
    hyp_b: str = "a cat sat",
    votes_a: int = 7,
    votes_b: int = 3,
) -> EvalItem:
    return EvalItem(
        id=item_id, reference=reference, hyp_a=hyp_a, hyp_b=hyp_b,
        votes_a=votes_a, votes_b=votes_b,
    )


def make_corpus(items) -> Corpus:
    return Corpus(items=tuple(items), name="test", source_path="<memory>")


class ScriptedTransport:
    """Transport double that pops scripted (status, body) responses in order."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = []

    def __call__(self, url, payload, headers, timeout_s):
        self.calls.append({"url": url, "payload": payload, "headers": dict(headers)})
        if not self.responses:
            raise AssertionError("transport called more times than scripted")
        status, body = self.responses.pop(0)
        return status, body


def chat_body(content: str) -> dict:
    return {"choices": [{"message": {"content": content}}]}


def embed_body(tokens, vectors) -> dict:
    return {"data": [{"embedding": vectors, "tokens": tokens}]}


def stub_chat_entry(messages_payload: dict, model_id: str, content: str) -> dict:
    key = cache_key("chat", model_id, messages_payload)
    return {
        "key": key,
        "kind": "chat",
        "model_id": model_id,
        "request": messages_payload,
        "response": {"content": content},
    }


def make_stub_client(entries, **kwargs) -> LlmClient:
    return LlmClient(stub_fixtures={e["key"]: e for e in entries}, **kwargs)


def stub_entries_for_chats(model_config, prompts_to_responses) -> list[dict]:
    """Build stub entries from {prompt messages tuple: response text}."""
    from hypeval.llm import _chat_payload  # test-only access to the payload shape

    entries = []
    for messages, response in prompts_to_responses:
        payload = _chat_payload(messages, model_config)
        entries.append(stub_chat_entry(payload, model_config.model_id, response))
    return entries


def write_jsonl(path: Path, records) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
