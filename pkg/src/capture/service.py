"""HTTP service that issues challenges and verifies selections.

Answer keys never leave the process: the served payload carries only the
session id, prompt, grid dims, and image URLs. Image URLs use opaque
per-challenge tokens because asset ids in the store are human-readable and
often encode provenance, which would hand a bot the answer.

Sessions are single-shot with a TTL. Closed sessions go to an append-only
JSON-lines log; the stats endpoint is a pure fold over that log.
"""

from __future__ import annotations

import io
import json
import secrets
import threading
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .challenge import (SCHEMES, MalformedSelectionError, ShortageError,
                        assemble, default_spec, verify)
from .imaging import quantize_to_bytes
from .store import AssetStore

DEFAULT_TTL_SECONDS = 120.0

OUTCOMES = ("open", "pass", "fail", "expired")


@dataclass
class Session:
    session_id: str
    challenge_id: str
    scheme: str
    issued_at: float                    # unix seconds, ms resolution
    answered_at: float | None = None
    selection: frozenset[int] | None = None
    outcome: str = "open"

    def __post_init__(self):
        if self.outcome not in OUTCOMES:
            raise ValueError(f"bad outcome {self.outcome!r}")
        if (self.outcome in ("pass", "fail")) != (self.selection is not None):
            raise ValueError("selection present iff outcome is pass/fail")
        if self.answered_at is not None and self.answered_at < self.issued_at:
            raise ValueError("answered before issued")

    def to_log_line(self) -> str:
        d = asdict(self)
        d["selection"] = sorted(self.selection) if self.selection is not None else None
        return json.dumps(d)


class AnswerBody(BaseModel):
    selection: list[int]


class ChallengeBody(BaseModel):
    scheme: str
    target_class: int | None = None
    seed: int | None = None


def _png_bytes(img: np.ndarray) -> bytes:
    from PIL import Image
    buf = io.BytesIO()
    Image.fromarray(quantize_to_bytes(img)).save(buf, format="PNG")
    return buf.getvalue()


def fold_stats(log_lines, scheme: str | None = None) -> dict:
    """Recompute stats from raw log lines. Success rate counts pass vs
    pass+fail; expired sessions are tallied separately."""
    per: dict[str, dict] = {}
    for line in log_lines:
        if not line.strip():
            continue
        rec = json.loads(line)
        if scheme is not None and rec["scheme"] != scheme:
            continue
        s = per.setdefault(rec["scheme"], {"pass": 0, "fail": 0, "expired": 0,
                                           "times_ms": []})
        s[rec["outcome"]] += 1
        if rec["outcome"] in ("pass", "fail"):
            s["times_ms"].append(round((rec["answered_at"] - rec["issued_at"]) * 1000))
    out = {}
    for name, s in sorted(per.items()):
        answered = s["pass"] + s["fail"]
        out[name] = {
            "sessions": answered + s["expired"],
            "pass": s["pass"],
            "fail": s["fail"],
            "expired": s["expired"],
            "success_rate": s["pass"] / answered if answered else None,
            "median_solve_ms": float(np.median(s["times_ms"])) if s["times_ms"] else None,
        }
    return {"schemes": out}


class ChallengeService:
    """State behind the HTTP app; usable directly in tests without a server.

    clock is injectable so TTL expiry is testable without sleeping.
    """

    def __init__(self, store: AssetStore, class_names: list[str],
                 log_path: str | Path, ttl_seconds: float = DEFAULT_TTL_SECONDS,
                 clock=time.time, seed: int | None = None):
        self.store = store
        self.class_names = list(class_names)
        self.log_path = Path(log_path)
        self.ttl = float(ttl_seconds)
        self.clock = clock
        self._rng = np.random.default_rng(seed)
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}
        self._keys: dict[str, frozenset[int]] = {}        # session -> answer key
        self._tokens: dict[str, str] = {}                 # opaque token -> asset id

    def _now(self) -> float:
        return round(float(self.clock()), 3)

    def issue(self, scheme: str, target_class: int | None = None,
              seed: int | None = None) -> dict:
        if scheme not in SCHEMES:
            raise HTTPException(status_code=422, detail=f"unknown scheme {scheme!r}")
        with self._lock:
            if target_class is None:
                target_class = int(self._rng.integers(len(self.class_names)))
            if seed is None:
                seed = int(self._rng.integers(2 ** 31))
        spec = default_spec(scheme, target_class, seed=seed)
        try:
            ch = assemble(spec, self.store, class_names=self.class_names)
        except ShortageError as e:
            raise HTTPException(status_code=503, detail=str(e))
        session_id = secrets.token_hex(12)
        images = []
        with self._lock:
            for asset_id in ch.cells:
                token = secrets.token_hex(12)
                self._tokens[token] = asset_id
                images.append(f"/api/asset/{token}.png")
            self._sessions[session_id] = Session(
                session_id=session_id, challenge_id=ch.challenge_id,
                scheme=scheme, issued_at=self._now())
            self._keys[session_id] = ch.answer_key
        rows, cols = ch.spec.grid
        return {"session_id": session_id, "prompt": ch.prompt,
                "rows": rows, "cols": cols, "images": images}

    def asset_png(self, token: str) -> bytes:
        with self._lock:
            asset_id = self._tokens.get(token)
        if asset_id is None:
            raise HTTPException(status_code=404, detail="unknown asset")
        return _png_bytes(self.store.image(asset_id))

    def _close(self, sess: Session, outcome: str,
               selection: frozenset[int] | None = None,
               answered_at: float | None = None) -> None:
        sess.outcome = outcome
        sess.selection = selection
        sess.answered_at = answered_at
        with self.log_path.open("a") as f:
            f.write(sess.to_log_line() + "\n")

    def answer(self, session_id: str, selection: list[int]) -> dict:
        now = self._now()
        with self._lock:
            sess = self._sessions.get(session_id)
            if sess is None:
                raise HTTPException(status_code=404, detail="unknown session")
            if sess.outcome != "open":
                raise HTTPException(status_code=409, detail="session closed")
            if now - sess.issued_at > self.ttl:
                self._close(sess, "expired")
                raise HTTPException(status_code=410, detail="session expired")
            key = self._keys[session_id]
            try:
                chosen = frozenset(int(i) for i in selection)
                if len(chosen) != len(selection):
                    raise MalformedSelectionError("duplicate indices")
                if chosen and (min(chosen) < 0 or max(chosen) >= 9):
                    raise MalformedSelectionError("index out of range")
            except (TypeError, ValueError, MalformedSelectionError) as e:
                raise HTTPException(status_code=422, detail=str(e))
            outcome = "pass" if chosen == key else "fail"
            self._close(sess, outcome, selection=chosen, answered_at=now)
        return {"outcome": outcome,
                "elapsed_ms": round((now - sess.issued_at) * 1000)}

    def stats(self, scheme: str | None = None) -> dict:
        if not self.log_path.exists():
            return {"schemes": {}}
        return fold_stats(self.log_path.read_text().splitlines(), scheme=scheme)


def create_app(service: ChallengeService,
               static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="capture-service")

    @app.post("/api/challenge")
    def post_challenge(body: ChallengeBody):
        return service.issue(body.scheme, body.target_class, body.seed)

    @app.get("/api/asset/{token}.png")
    def get_asset(token: str):
        return Response(content=service.asset_png(token), media_type="image/png")

    @app.post("/api/session/{session_id}/answer")
    def post_answer(session_id: str, body: AnswerBody):
        return service.answer(session_id, body.selection)

    @app.get("/api/stats")
    def get_stats(scheme: str | None = None):
        return service.stats(scheme)

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    return app
