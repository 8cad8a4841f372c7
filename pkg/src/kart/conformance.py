"""Wire-protocol conformance checks for scorer services.

The checks themselves ship as data (protocol_fixtures.json); this module
substitutes live-vocabulary tokens into the fixture templates, fires them at
an endpoint, and judges the responses. Any service that passes is usable
through external_scorer_connect. The CLI exposes the suite as
`kart scorer serve-check`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

import requests

from .errors import KartError
from .scorer.external import (
    PROTOCOL_HEADER,
    PROTOCOL_VERSION,
    external_scorer_connect,
)

_MISSING_TOKEN = "definitely-not-in-any-vocabulary-zzz"
_OUT_OF_RANGE = 9_999


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def load_fixtures() -> dict:
    path = resources.files("kart").joinpath("protocol_fixtures.json")
    return json.loads(path.read_text(encoding="utf-8"))


def _substitute(value, table: dict):
    if isinstance(value, str):
        return table.get(value, value)
    if isinstance(value, list):
        return [_substitute(v, table) for v in value]
    if isinstance(value, dict):
        return {
            str(_substitute(k, table)): _substitute(v, table)
            for k, v in value.items()
        }
    return value


def _judge_score(resp, expect, vocab, candidates) -> None:
    status = expect.get("status", 200)
    assert resp.status_code == status, (
        f"expected HTTP {status}, got {resp.status_code}"
    )
    body = resp.json()
    if expect.get("error_body"):
        assert "error" in body, "400 responses must carry a JSON error field"
        return
    log_probs = {int(p): d for p, d in body["log_probs"].items()}
    positions = expect.get("positions")
    if positions is not None:
        assert sorted(log_probs) == sorted(positions), (
            f"response covers {sorted(log_probs)}, wanted {positions}"
        )
    for pos, dist in log_probs.items():
        if expect.get("covers_vocab"):
            assert len(dist) == len(vocab), (
                f"position {pos}: {len(dist)} entries, vocabulary has {len(vocab)}"
            )
        if expect.get("covers_candidates"):
            want = set(candidates[str(pos)])
            assert set(dist) == want, (
                f"position {pos}: response must cover exactly the candidates"
            )
        tol = expect.get("normalized_within")
        if tol is not None and expect.get("covers_vocab", True):
            total = sum(math.exp(lp) for lp in dist.values())
            assert abs(total - 1.0) <= tol, (
                f"position {pos}: distribution sums to {total}"
            )


def run_conformance_suite(
    endpoint: str, session: requests.Session | None = None
) -> list[CheckResult]:
    session = session or requests.Session()
    endpoint = endpoint.rstrip("/")
    fixtures = load_fixtures()
    results: list[CheckResult] = []

    def record(name: str, fn) -> bool:
        try:
            fn()
        except AssertionError as e:
            results.append(CheckResult(name, False, str(e)))
        except KartError as e:
            results.append(CheckResult(name, False, f"{type(e).__name__}: {e}"))
        except (requests.RequestException, ValueError, KeyError) as e:
            results.append(CheckResult(name, False, f"{type(e).__name__}: {e}"))
        else:
            results.append(CheckResult(name, True))
        return results[-1].passed

    state: dict = {}

    def handshake():
        scorer = external_scorer_connect(endpoint, session)
        assert scorer.tokenizer.vocab_size > 0, "empty vocabulary"
        state["scorer"] = scorer
        words = [
            t
            for t in scorer.vocabulary
            if t not in ("[cls]", "[sep]", "[mask]", "[unk]")
        ]
        assert len(words) >= 3, "vocabulary too small to exercise scoring"
        state["table"] = {
            "$CLS": "[cls]" if "[cls]" in scorer.vocabulary else words[0],
            "$SEP": "[sep]" if "[sep]" in scorer.vocabulary else words[1],
            "$MASK": "[mask]",
            "$W0": words[0],
            "$W1": words[1],
            "$W2": words[2],
            "$BAD": _MISSING_TOKEN,
            "$OOR": _OUT_OF_RANGE,
        }

    for check in fixtures["checks"]:
        kind = check["kind"]
        name = check["name"]
        if kind == "handshake":
            if not record(name, handshake):
                return results  # nothing else can run
            continue
        if "scorer" not in state:
            results.append(CheckResult(name, False, "no connection"))
            continue
        scorer = state["scorer"]
        table = state["table"]
        if kind == "vocab_has_mask":
            record(
                name,
                lambda: _assert(
                    "[mask]" in scorer.vocabulary,
                    "mask token missing from vocabulary",
                ),
            )
        elif kind == "header":
            def check_header():
                resp = session.get(f"{endpoint}/health", timeout=30)
                _assert(
                    resp.headers.get(PROTOCOL_HEADER) == PROTOCOL_VERSION,
                    f"missing or wrong {PROTOCOL_HEADER} header",
                )

            record(name, check_header)
        elif kind in ("score", "score_twice"):
            body = {
                "tokens": _substitute(check["tokens"], table),
                "mask_positions": _substitute(check["mask_positions"], table),
                "candidates": _substitute(check["candidates"], table),
            }
            expect = check.get("expect", {})

            def run_score(body=body, expect=expect, twice=(kind == "score_twice")):
                resp = session.post(f"{endpoint}/score", json=body, timeout=30)
                if twice:
                    again = session.post(
                        f"{endpoint}/score", json=body, timeout=30
                    )
                    _assert(
                        resp.json() == again.json(),
                        "identical requests returned different responses",
                    )
                    return
                _judge_score(resp, expect, scorer.vocabulary, body["candidates"])

            record(name, run_score)
        else:
            results.append(
                CheckResult(name, False, f"unknown fixture kind {kind!r}")
            )
    return results


def _assert(condition: bool, message: str) -> None:
    assert condition, message
