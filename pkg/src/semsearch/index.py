"""Inverted index over generalized-term keys with ltc.ltc cosine ranking.

Weights are ``(1 + log10 tf) * log10(N / df)`` on both the document and the
query side, each vector cosine-normalized.  Terms present in every document
get idf 0: they stay in the postings but never score.
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
import math
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    IndexBuildError,
    IndexChecksumError,
    IndexFormatError,
    IndexVersionError,
    TruncatedIndexError,
)

log = logging.getLogger(__name__)

MAGIC = b"GVSMIDX\n"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sIQQQ")  # magic, version, file length, n_docs, n_terms
_DIGEST_SIZE = 32
TIE_DECIMALS = 12


@dataclass(frozen=True)
class Posting:
    doc_id: int
    tf: int


@dataclass(frozen=True)
class ScoredHit:
    docno: str
    score: float
    rank: int


def _bag_counts(bag) -> Mapping[str, int]:
    return bag.counts if hasattr(bag, "counts") else bag


@dataclass
class Index:
    vocab: dict[str, int]
    df: np.ndarray
    postings_docs: list[np.ndarray]
    postings_tf: list[np.ndarray]
    doc_norms: np.ndarray
    doc_table: list[str]
    meta: dict = field(default_factory=dict)

    @property
    def n_docs(self) -> int:
        return len(self.doc_table)

    @property
    def n_terms(self) -> int:
        return len(self.vocab)

    def idf(self, key: str) -> float:
        t = self.vocab.get(key)
        if t is None:
            return 0.0
        return math.log10(self.n_docs / int(self.df[t]))

    def postings(self, key: str) -> list[Posting]:
        t = self.vocab[key]
        return [Posting(int(d), int(f)) for d, f in zip(self.postings_docs[t], self.postings_tf[t])]

    def term_weights(self, t: int) -> np.ndarray:
        idf = math.log10(self.n_docs / int(self.df[t]))
        return (1.0 + np.log10(self.postings_tf[t])) * idf

    def empty_documents(self) -> list[str]:
        return [self.doc_table[i] for i in np.flatnonzero(self.doc_norms == 0)]

    def query_vector(self, query_bag) -> dict[int, float]:
        weights = {}
        for key, tf in sorted(_bag_counts(query_bag).items()):
            t = self.vocab.get(key)
            if t is None or tf <= 0:
                continue
            w = (1.0 + math.log10(tf)) * math.log10(self.n_docs / int(self.df[t]))
            if w > 0:
                weights[t] = w
        return weights

    def search(self, query_bag, k: int = 1000) -> list[ScoredHit]:
        """Top-``k`` documents by cosine score; zero-score documents are left out."""
        if k < 1:
            raise ValueError("k must be at least 1")
        qvec = self.query_vector(query_bag)
        if not qvec:
            return []
        qnorm = math.sqrt(sum(w * w for w in qvec.values()))
        dots = np.zeros(self.n_docs)
        for t, wq in qvec.items():
            dots[self.postings_docs[t]] += wq * self.term_weights(t)
        candidates = np.flatnonzero((dots > 0) & (self.doc_norms > 0))
        scores = dots[candidates] / (qnorm * self.doc_norms[candidates])
        # scores equal up to summation noise count as ties and fall back to docno
        ranked = sorted(zip(scores.tolist(), candidates.tolist()),
                        key=lambda sc: (-round(sc[0], TIE_DECIMALS), self.doc_table[sc[1]]))
        return [ScoredHit(self.doc_table[d], s, r) for r, (s, d) in enumerate(ranked[:k], start=1)]

    def save(self, path: str | os.PathLike) -> None:
        persist_index(self, path)


def build_index(term_bags: Iterable[tuple[str, object]], meta: dict | None = None) -> Index:
    """Build from ``(external_id, TermBag)`` pairs; bags may also be plain count mappings."""
    vocab: dict[str, int] = {}
    docs: list[list[int]] = []
    tfs: list[list[int]] = []
    doc_table: list[str] = []
    seen: set[str] = set()
    for docno, bag in term_bags:
        if docno in seen:
            raise IndexBuildError(f"duplicate document id {docno!r}")
        seen.add(docno)
        d = len(doc_table)
        doc_table.append(docno)
        for key, tf in _bag_counts(bag).items():
            if tf <= 0:
                continue
            t = vocab.get(key)
            if t is None:
                t = vocab[key] = len(docs)
                docs.append([])
                tfs.append([])
            docs[t].append(d)
            tfs[t].append(int(tf))
    if not doc_table:
        raise IndexBuildError("cannot build an index from an empty document stream")

    postings_docs = [np.asarray(p, dtype=np.int64) for p in docs]
    postings_tf = [np.asarray(p, dtype=np.int64) for p in tfs]
    df = np.asarray([len(p) for p in docs], dtype=np.int64)
    index = Index(vocab, df, postings_docs, postings_tf, np.zeros(len(doc_table)), doc_table, dict(meta or {}))
    norm2 = np.zeros(len(doc_table))
    for t in range(len(docs)):
        w = index.term_weights(t)
        np.add.at(norm2, postings_docs[t], w * w)
    index.doc_norms = np.sqrt(norm2)
    empty = int((index.doc_norms == 0).sum())
    if empty:
        log.warning("%d of %d documents have an all-zero weight vector and can never be retrieved",
                    empty, len(doc_table))
    return index


# ---------------------------------------------------------------------------
# persistence

def _pack_str(buf: io.BytesIO, text: str) -> None:
    raw = text.encode("utf-8")
    buf.write(struct.pack("<I", len(raw)))
    buf.write(raw)


def _pack_array(buf: io.BytesIO, values: np.ndarray) -> None:
    buf.write(np.asarray(values, dtype="<u4").tobytes())


def encode_index(index: Index) -> bytes:
    body = io.BytesIO()
    _pack_str(body, json.dumps(index.meta, sort_keys=True))
    # vocab block
    for key, t in sorted(index.vocab.items(), key=lambda kv: kv[1]):
        _pack_str(body, key)
        body.write(struct.pack("<I", int(index.df[t])))
    # postings block: delta-coded ordinals, then tfs
    for t in range(index.n_terms):
        _pack_array(body, np.diff(index.postings_docs[t], prepend=0))
        _pack_array(body, index.postings_tf[t])
    body.write(np.asarray(index.doc_norms, dtype="<f8").tobytes())
    for docno in index.doc_table:
        _pack_str(body, docno)
    payload = body.getvalue()
    total = _HEADER.size + len(payload) + _DIGEST_SIZE
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, total, index.n_docs, index.n_terms)
    digest = hashlib.sha256(header + payload).digest()
    return header + payload + digest


def persist_index(index: Index, path: str | os.PathLike) -> None:
    """Write atomically: the target is only replaced once the full image is on disk."""
    path = Path(path)
    data = encode_index(index)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Reader:
    def __init__(self, data: bytes, pos: int):
        self.data = data
        self.pos = pos

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedIndexError("index file ends inside a block")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def string(self) -> str:
        return self.take(self.u32()).decode("utf-8")

    def array(self, n: int, dtype: str) -> np.ndarray:
        width = np.dtype(dtype).itemsize
        return np.frombuffer(self.take(n * width), dtype=dtype)


def decode_index(data: bytes) -> Index:
    if len(data) < _HEADER.size:
        raise TruncatedIndexError(f"index file too short ({len(data)} bytes)")
    magic, version, total, n_docs, n_terms = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise IndexFormatError("not a semsearch index file (bad magic)")
    if version != FORMAT_VERSION:
        raise IndexVersionError(f"index format version {version}, this build reads {FORMAT_VERSION}")
    if len(data) < total:
        raise TruncatedIndexError(f"index file truncated: {len(data)} of {total} bytes")
    if len(data) > total:
        raise IndexFormatError(f"{len(data) - total} trailing bytes after index image")
    if hashlib.sha256(data[:-_DIGEST_SIZE]).digest() != data[-_DIGEST_SIZE:]:
        raise IndexChecksumError("index checksum mismatch")

    r = _Reader(data[:-_DIGEST_SIZE], _HEADER.size)
    meta = json.loads(r.string())
    vocab: dict[str, int] = {}
    df = np.empty(n_terms, dtype=np.int64)
    for t in range(n_terms):
        vocab[r.string()] = t
        df[t] = r.u32()
    postings_docs, postings_tf = [], []
    for t in range(n_terms):
        postings_docs.append(np.cumsum(r.array(int(df[t]), "<u4"), dtype=np.int64))
        postings_tf.append(r.array(int(df[t]), "<u4").astype(np.int64))
    norms = r.array(n_docs, "<f8").astype(np.float64)
    doc_table = [r.string() for _ in range(n_docs)]
    if r.pos != len(r.data):
        raise IndexFormatError("unexpected bytes after document table")
    return Index(vocab, df, postings_docs, postings_tf, norms, doc_table, meta)


def load_index(path: str | os.PathLike) -> Index:
    with open(path, "rb") as fh:
        return decode_index(fh.read())
