"""Pattern/Logic retrieval banks and problem-driven retrieval.

Source scripts are atomized two ways: the text-model provider distills
beat-level units (pacing priors, the Pattern Bank) while a deterministic
sliding window cuts overlapping chunks (causal priors, the Logic Bank).
Ranking is exact weighted cosine over a linear scan — bank sizes make
approximate indexes pointless and exactness keeps the oracle tests cheap.

Persistence is two files with documented layout:

* ``records.json`` — canonical JSON: script cards, beats, chunks, and the
  ordered list of vector keys.
* ``vectors.bin`` — ``b"DFV1"`` magic, uint32 version, uint32 count,
  uint32 dim, then ``count`` uint64 byte offsets into the data section,
  then ``count * dim`` little-endian float32 values.  All integers LE.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .canonical import FORMAT_VERSION, read_json, write_json
from .errors import (
    CopyViolationError,
    EmptyBankError,
    PreconditionError,
    ProviderSchemaError,
)
from .providers.base import ProviderRegistry

BEAT_VIEWS = ("beat_summary", "opening_action", "closing_hook_visual")

DEFAULT_VIEW_WEIGHTS = {
    "beat_summary": 0.5,
    "opening_action": 0.25,
    "closing_hook_visual": 0.25,
}

_VEC_MAGIC = b"DFV1"


@dataclass
class AtomizeConfig:
    chunk_len: int = 1000
    overlap: int = 200
    max_copy_chars: int = 120

    def __post_init__(self):
        if not 0 <= self.overlap < self.chunk_len:
            raise ValueError("overlap must satisfy 0 <= overlap < chunk_len")


@dataclass(frozen=True)
class BeatUnit:
    beat_id: str
    opening_action: str
    beat_summary: str
    closing_hook_visual: str
    conflict_function: str
    embeddings: dict[str, np.ndarray]

    def validate(self) -> list[str]:
        v = []
        for view in BEAT_VIEWS:
            if not getattr(self, view).strip():
                v.append(f"beat {self.beat_id}: empty {view}")
        dims = {view: e.shape for view, e in self.embeddings.items()}
        if len({shape for shape in dims.values()}) > 1:
            v.append(f"beat {self.beat_id}: inconsistent embedding dims {dims}")
        for view, e in self.embeddings.items():
            if not np.all(np.isfinite(e)):
                v.append(f"beat {self.beat_id}: non-finite embedding in view {view}")
        return v


@dataclass(frozen=True)
class ScriptCard:
    script_id: str
    title: str
    genre: str
    logline: str
    plot_summary: str
    beats: tuple[BeatUnit, ...]


@dataclass(frozen=True)
class LogicChunk:
    chunk_id: str
    script_id: str
    text: str
    span: tuple[int, int]
    embedding: np.ndarray


@dataclass(frozen=True)
class RetrievalRoute:
    kind: str  # fact | logic | pattern
    query: str
    k: int


@dataclass(frozen=True)
class RetrievalPlan:
    routes: tuple[RetrievalRoute, ...]


@dataclass(frozen=True)
class Atom:
    text: str
    source_ref: str


@dataclass(frozen=True)
class AtomSet:
    fact_atoms: tuple[Atom, ...] = ()
    logic_atoms: tuple[Atom, ...] = ()
    pattern_atoms: tuple[Atom, ...] = ()

    def all_atoms(self) -> list[Atom]:
        return list(self.fact_atoms) + list(self.logic_atoms) + list(self.pattern_atoms)


def slide_chunks(text: str, chunk_len: int, overlap: int) -> list[tuple[int, int]]:
    """Sliding-window spans that tile ``text``; adjacent spans share ``overlap``."""
    if not text:
        return []
    stride = chunk_len - overlap
    spans = []
    start = 0
    while start < len(text):
        end = min(start + chunk_len, len(text))
        spans.append((start, end))
        if end == len(text):
            break
        start += stride
    return spans


def rebuild_from_chunks(chunks: Sequence[LogicChunk]) -> str:
    """Inverse of the sliding window: concatenate chunks minus overlaps."""
    out = []
    prev_end = 0
    for c in sorted(chunks, key=lambda c: c.span[0]):
        start, end = c.span
        out.append(c.text[prev_end - start :])
        prev_end = end
    return "".join(out)


def _cosine(q: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Cosine of query against each row of m; zero vectors score 0."""
    qn = float(np.linalg.norm(q))
    mn = np.linalg.norm(m, axis=1)
    denom = qn * mn
    with np.errstate(invalid="ignore", divide="ignore"):
        sims = (m @ q) / denom
    sims[~np.isfinite(sims)] = 0.0
    return sims


class PatternBank:
    """Exact multi-view cosine retrieval over beat units."""

    def __init__(self, beats: Sequence[BeatUnit]):
        self.beats = sorted(beats, key=lambda b: b.beat_id)
        self._matrices: dict[str, np.ndarray] = {}
        if self.beats:
            for view in BEAT_VIEWS:
                self._matrices[view] = np.stack(
                    [b.embeddings[view].astype(np.float64) for b in self.beats]
                )

    def __len__(self) -> int:
        return len(self.beats)

    def retrieve(
        self,
        query: str,
        k: int,
        embed: Callable[[str], np.ndarray],
        weights: dict[str, float] | None = None,
    ) -> list[tuple[BeatUnit, float]]:
        if not self.beats:
            raise EmptyBankError("pattern bank is empty")
        if k < 1:
            raise PreconditionError("k must be >= 1")
        weights = dict(weights or DEFAULT_VIEW_WEIGHTS)
        total = sum(weights.values())
        if abs(total - 1.0) > 1e-9:
            raise PreconditionError(f"view weights must sum to 1, got {total}")
        q = np.asarray(embed(query), dtype=np.float64)
        scores = np.zeros(len(self.beats))
        for view, w in weights.items():
            if w == 0.0:
                continue
            scores += w * _cosine(q, self._matrices[view])
        order = sorted(range(len(self.beats)), key=lambda i: (-scores[i], self.beats[i].beat_id))
        return [(self.beats[i], float(scores[i])) for i in order[:k]]


class LogicBank:
    """Single-view cosine retrieval over overlapping script chunks."""

    def __init__(self, chunks: Sequence[LogicChunk]):
        self.chunks = sorted(chunks, key=lambda c: c.chunk_id)
        self._matrix = (
            np.stack([c.embedding.astype(np.float64) for c in self.chunks])
            if self.chunks
            else None
        )

    def __len__(self) -> int:
        return len(self.chunks)

    def retrieve(
        self, query: str, k: int, embed: Callable[[str], np.ndarray]
    ) -> list[tuple[LogicChunk, float]]:
        if not self.chunks:
            raise EmptyBankError("logic bank is empty")
        if k < 1:
            raise PreconditionError("k must be >= 1")
        q = np.asarray(embed(query), dtype=np.float64)
        scores = _cosine(q, self._matrix)
        order = sorted(range(len(self.chunks)), key=lambda i: (-scores[i], self.chunks[i].chunk_id))
        return [(self.chunks[i], float(scores[i])) for i in order[:k]]


# --- provider-backed operations ----------------------------------------------

class EmbedderClient:
    def __init__(self, registry: ProviderRegistry):
        self.registry = registry

    def __call__(self, text: str) -> np.ndarray:
        def parse(resp: dict) -> np.ndarray:
            vec = np.asarray(resp["vector"], dtype=np.float32)
            if vec.ndim != 1 or not np.all(np.isfinite(vec)):
                raise ProviderSchemaError("embedder returned a malformed vector")
            return vec

        return self.registry.call("embedder", {"task": "embed", "text": text}, parse=parse)


def atomize_script(
    raw_script: str,
    config: AtomizeConfig,
    registry: ProviderRegistry,
    script_id: str,
) -> tuple[ScriptCard, list[LogicChunk]]:
    """Distill one source script into a card of embedded beats plus chunks."""
    if not raw_script.strip():
        raise PreconditionError("raw_script is empty")
    embed = EmbedderClient(registry)

    def parse(resp: dict) -> dict:
        meta = resp["metadata"]
        beats = resp["beats"]
        if not beats:
            raise ProviderSchemaError("no beats extracted")
        for b in beats:
            for key in ("opening_action", "beat_summary", "closing_hook_visual"):
                if not str(b.get(key, "")).strip():
                    raise ProviderSchemaError(f"beat missing {key}")
        return {"metadata": meta, "plot_summary": resp["plot_summary"], "beats": beats}

    out = registry.call(
        "writer",
        {"task": "atomize_beats", "script_id": script_id, "script": raw_script},
        parse=parse,
    )

    beats = []
    for i, b in enumerate(out["beats"]):
        views = {
            view: embed(str(b[view])) for view in BEAT_VIEWS
        }
        beats.append(
            BeatUnit(
                beat_id=f"{script_id}-b{i:03d}",
                opening_action=str(b["opening_action"]),
                beat_summary=str(b["beat_summary"]),
                closing_hook_visual=str(b["closing_hook_visual"]),
                conflict_function=str(b.get("conflict_function", "")),
                embeddings=views,
            )
        )
    card = ScriptCard(
        script_id=script_id,
        title=str(out["metadata"].get("title", script_id)),
        genre=str(out["metadata"].get("genre", "")),
        logline=str(out["metadata"].get("logline", "")),
        plot_summary=str(out["plot_summary"]),
        beats=tuple(beats),
    )

    chunks = []
    for j, (start, end) in enumerate(slide_chunks(raw_script, config.chunk_len, config.overlap)):
        text = raw_script[start:end]
        chunks.append(
            LogicChunk(
                chunk_id=f"{script_id}-c{j:03d}",
                script_id=script_id,
                text=text,
                span=(start, end),
                embedding=embed(text),
            )
        )
    return card, chunks


_ROUTE_KINDS = ("fact", "logic", "pattern")


def plan_retrieval(seed_text: str, registry: ProviderRegistry) -> RetrievalPlan:
    """Ask the text model what support the draft is missing, as typed routes."""

    def parse(resp: dict) -> RetrievalPlan:
        routes = []
        for r in resp["routes"]:
            kind = r["kind"]
            if kind not in _ROUTE_KINDS:
                raise ProviderSchemaError(f"unknown route kind {kind!r}")
            k = int(r["k"])
            if k < 1:
                raise ProviderSchemaError("route k must be positive")
            routes.append(RetrievalRoute(kind=kind, query=str(r["query"]), k=k))
        return RetrievalPlan(routes=tuple(routes))

    return registry.call(
        "writer", {"task": "retrieval_plan", "seed_text": seed_text}, parse=parse
    )


def longest_copied_span(atom_text: str, source_text: str, limit: int) -> bool:
    """True iff atom_text shares a verbatim span longer than ``limit``."""
    window = limit + 1
    if len(atom_text) < window:
        return False
    for i in range(len(atom_text) - window + 1):
        if atom_text[i : i + window] in source_text:
            return True
    return False


def summarize_atoms(
    route_results: dict[str, list[dict]],
    registry: ProviderRegistry,
    max_copy_chars: int = 120,
) -> AtomSet:
    """Compress raw route results into sourced atoms, rejecting verbatim copies.

    ``route_results`` maps route kind to ``{"text", "source_ref"}`` records.
    """
    if not route_results:
        raise PreconditionError("no routes executed")
    if all(not v for v in route_results.values()):
        return AtomSet()
    sources = [str(r["text"]) for results in route_results.values() for r in results]
    copy_violation = {"hit": False}

    def parse(resp: dict) -> AtomSet:
        groups = {}
        for kind in _ROUTE_KINDS:
            atoms = []
            for a in resp.get(f"{kind}_atoms", []):
                text, ref = str(a["text"]), str(a["source_ref"])
                if not ref:
                    raise ProviderSchemaError("atom without source_ref")
                for src in sources:
                    if longest_copied_span(text, src, max_copy_chars):
                        copy_violation["hit"] = True
                        raise ProviderSchemaError("atom copies a verbatim span")
                atoms.append(Atom(text=text, source_ref=ref))
            groups[f"{kind}_atoms"] = tuple(atoms)
        return AtomSet(**groups)

    try:
        return registry.call(
            "writer",
            {"task": "summarize_atoms", "results": route_results, "max_copy_chars": max_copy_chars},
            parse=parse,
        )
    except ProviderSchemaError:
        if copy_violation["hit"]:
            raise CopyViolationError(
                f"atom copied more than {max_copy_chars} contiguous source characters"
            ) from None
        raise


# --- persistence --------------------------------------------------------------

def _write_vectors(path: Path, vectors: np.ndarray) -> None:
    count, dim = vectors.shape
    data = vectors.astype("<f4").tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(_VEC_MAGIC)
        fh.write(struct.pack("<III", 1, count, dim))
        stride = dim * 4
        fh.write(b"".join(struct.pack("<Q", i * stride) for i in range(count)))
        fh.write(data)


def _read_vectors(path: Path) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != _VEC_MAGIC:
        raise ValueError("bad vector-file magic")
    version, count, dim = struct.unpack_from("<III", raw, 4)
    if version != 1:
        raise ValueError(f"unsupported vector-file version {version}")
    offsets = struct.unpack_from("<" + "Q" * count, raw, 16)
    data_start = 16 + 8 * count
    out = np.empty((count, dim), dtype=np.float32)
    for i, off in enumerate(offsets):
        out[i] = np.frombuffer(raw, dtype="<f4", count=dim, offset=data_start + off)
    return out


def save_banks(
    bank_dir: str | Path,
    cards: Sequence[ScriptCard],
    chunks: Sequence[LogicChunk],
) -> None:
    bank_dir = Path(bank_dir)
    bank_dir.mkdir(parents=True, exist_ok=True)
    vector_keys: list[str] = []
    vectors: list[np.ndarray] = []
    beat_records = []
    for card in cards:
        for b in card.beats:
            rec = {
                "beat_id": b.beat_id,
                "script_id": card.script_id,
                "opening_action": b.opening_action,
                "beat_summary": b.beat_summary,
                "closing_hook_visual": b.closing_hook_visual,
                "conflict_function": b.conflict_function,
            }
            beat_records.append(rec)
            for view in BEAT_VIEWS:
                vector_keys.append(f"{b.beat_id}:{view}")
                vectors.append(b.embeddings[view])
    chunk_records = []
    for c in chunks:
        chunk_records.append(
            {
                "chunk_id": c.chunk_id,
                "script_id": c.script_id,
                "text": c.text,
                "span": [c.span[0], c.span[1]],
            }
        )
        vector_keys.append(c.chunk_id)
        vectors.append(c.embedding)
    records = {
        "format_version": FORMAT_VERSION,
        "dim": int(vectors[0].shape[0]) if vectors else 0,
        "cards": [
            {
                "script_id": c.script_id,
                "title": c.title,
                "genre": c.genre,
                "logline": c.logline,
                "plot_summary": c.plot_summary,
                "beat_ids": [b.beat_id for b in c.beats],
            }
            for c in cards
        ],
        "beats": beat_records,
        "chunks": chunk_records,
        "vector_keys": vector_keys,
    }
    write_json(bank_dir / "records.json", records)
    mat = np.stack(vectors) if vectors else np.zeros((0, 0), dtype=np.float32)
    _write_vectors(bank_dir / "vectors.bin", mat)


def load_banks(bank_dir: str | Path) -> tuple[PatternBank, LogicBank]:
    bank_dir = Path(bank_dir)
    records = read_json(bank_dir / "records.json")
    vectors = _read_vectors(bank_dir / "vectors.bin")
    lookup = {key: vectors[i] for i, key in enumerate(records["vector_keys"])}
    beats = []
    for rec in records["beats"]:
        beats.append(
            BeatUnit(
                beat_id=rec["beat_id"],
                opening_action=rec["opening_action"],
                beat_summary=rec["beat_summary"],
                closing_hook_visual=rec["closing_hook_visual"],
                conflict_function=rec["conflict_function"],
                embeddings={view: lookup[f"{rec['beat_id']}:{view}"] for view in BEAT_VIEWS},
            )
        )
    chunks = []
    for rec in records["chunks"]:
        chunks.append(
            LogicChunk(
                chunk_id=rec["chunk_id"],
                script_id=rec["script_id"],
                text=rec["text"],
                span=(rec["span"][0], rec["span"][1]),
                embedding=lookup[rec["chunk_id"]],
            )
        )
    return PatternBank(beats), LogicBank(chunks)
