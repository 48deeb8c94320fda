"""Token datasets, rank-sorted histograms and histogram similarity."""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .errors import IngestError, ParameterError

#: Separator joining the selected CSV columns into one composite token.
UNIT_SEPARATOR = "\x1f"

#: Suffix of the JSON sidecar carrying ``original_total_count``.
SIDECAR_SUFFIX = ".meta.json"


@dataclass(frozen=True)
class TokenDataset:
    """An ordered sequence of opaque tokens.

    ``original_total_count`` is set on declared samples (e.g. the output of a
    sampling attack) so detection can scale frequencies back up.
    """

    tokens: tuple[str, ...]
    original_total_count: int | None = None

    def __post_init__(self):
        if not isinstance(self.tokens, tuple):
            object.__setattr__(self, "tokens", tuple(self.tokens))
        if self.original_total_count is not None and self.original_total_count < 0:
            raise ParameterError("original_total_count must be non-negative")

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def counts(self) -> Counter:
        return Counter(self.tokens)


@dataclass(frozen=True)
class Histogram:
    """Tokens sorted by (frequency desc, token bytes asc) with rank boundaries.

    ``upper[i]`` is how far rank ``i`` can grow before tying with rank ``i-1``
    (``inf`` for the top token); ``lower[i]`` how far it can shrink before tying
    with rank ``i+1`` (its own frequency for the last token).
    """

    tokens: tuple[str, ...]
    freqs: tuple[int, ...]
    upper: tuple[float, ...] = field(repr=False)
    lower: tuple[int, ...] = field(repr=False)

    @classmethod
    def from_counts(cls, counts: Mapping[str, int]) -> "Histogram":
        items = sorted(
            ((tok, int(f)) for tok, f in counts.items() if f > 0),
            key=lambda kv: (-kv[1], kv[0].encode("utf-8")),
        )
        tokens = tuple(tok for tok, _ in items)
        freqs = tuple(f for _, f in items)
        n = len(freqs)
        upper = tuple([math.inf] + [freqs[i - 1] - freqs[i] for i in range(1, n)]) if n else ()
        lower = tuple([freqs[i] - freqs[i + 1] for i in range(n - 1)] + [freqs[-1]]) if n else ()
        return cls(tokens, freqs, upper, lower)

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def entries(self) -> list[tuple[str, int]]:
        return list(zip(self.tokens, self.freqs))

    @property
    def total(self) -> int:
        return sum(self.freqs)

    @cached_property
    def rank(self) -> dict[str, int]:
        return {tok: i for i, tok in enumerate(self.tokens)}

    def freq(self, token: str) -> int:
        """Frequency of ``token``; 0 when absent."""
        i = self.rank.get(token)
        return 0 if i is None else self.freqs[i]

    def as_counts(self) -> dict[str, int]:
        return dict(zip(self.tokens, self.freqs))


def build_histogram(d: TokenDataset | Iterable[str]) -> Histogram:
    tokens = d.tokens if isinstance(d, TokenDataset) else tuple(d)
    if not tokens:
        raise ParameterError("cannot build a histogram of an empty dataset")
    return Histogram.from_counts(Counter(tokens))


def rank_sequence(h: Histogram) -> list[str]:
    if not len(h):
        raise ParameterError("empty histogram has no rank sequence")
    return list(h.tokens)


def _as_counts(x: Histogram | Mapping[str, int]) -> Mapping[str, int]:
    return x.as_counts() if isinstance(x, Histogram) else x


def cosine_similarity(a: Histogram | Mapping[str, int], b: Histogram | Mapping[str, int]) -> float:
    """Cosine similarity in percent, aligned on the token union (missing = 0)."""
    ca, cb = _as_counts(a), _as_counts(b)
    na = sum(v * v for v in ca.values())
    nb = sum(v * v for v in cb.values())
    if na == 0 or nb == 0:
        raise ParameterError("cosine similarity is undefined for a zero vector")
    if len(cb) < len(ca):
        ca, cb = cb, ca
    dot = sum(v * cb.get(tok, 0) for tok, v in ca.items())
    return min(100.0, max(0.0, 100.0 * dot / math.sqrt(na * nb)))


#: Registry of histogram similarity metrics (percent-valued, symmetric).
SIMILARITY_METRICS: dict[str, Callable[..., float]] = {"cosine": cosine_similarity}


def similarity(a, b, metric: str = "cosine") -> float:
    try:
        fn = SIMILARITY_METRICS[metric]
    except KeyError:
        raise ParameterError(f"unknown similarity metric {metric!r}; known: {sorted(SIMILARITY_METRICS)}")
    return fn(a, b)


# --------------------------------------------------------------------------
# I/O
# --------------------------------------------------------------------------

def _read_sidecar(path: Path) -> int | None:
    side = path.with_name(path.name + SIDECAR_SUFFIX)
    if not side.exists():
        return None
    try:
        meta = json.loads(side.read_text(encoding="utf-8"))
        value = meta.get("original_total_count")
    except (ValueError, AttributeError) as exc:
        raise IngestError(f"malformed sidecar {side}: {exc}") from exc
    if value is not None and (not isinstance(value, int) or value < 0):
        raise IngestError(f"sidecar {side}: original_total_count must be a non-negative integer")
    return value


def _parse_lines(raw: bytes) -> list[str]:
    tokens = []
    lines = raw.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()
    for lineno, line in enumerate(lines, start=1):
        if line.endswith(b"\r"):
            line = line[:-1]
        try:
            tok = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise IngestError(f"invalid UTF-8 ({exc.reason})", line=lineno) from exc
        if not tok:
            raise IngestError("empty token", line=lineno)
        tokens.append(tok)
    return tokens


def _parse_csv(raw: bytes, columns: Sequence[str], delimiter: str) -> list[str]:
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise IngestError(f"invalid UTF-8 ({exc.reason})") from exc
    reader = csv.reader(io.StringIO(text, newline=""), delimiter=delimiter, skipinitialspace=True)
    try:
        header = next(reader)
    except StopIteration:
        raise IngestError("empty input") from None
    missing = [c for c in columns if c not in header]
    if missing:
        raise IngestError(f"columns not in header: {missing}", line=1)
    idx = [header.index(c) for c in columns]
    tokens = []
    for row in reader:
        if not row:
            continue
        if len(row) != len(header):
            raise IngestError(f"expected {len(header)} fields, got {len(row)}", line=reader.line_num)
        tokens.append(UNIT_SEPARATOR.join(row[i] for i in idx))
    return tokens


def ingest(
    source: str | Path | io.IOBase,
    fmt: str = "lines",
    columns: Sequence[str] | None = None,
    delimiter: str = ",",
    original_total_count: int | None = None,
) -> TokenDataset:
    """Read a dataset from a path or binary stream.

    ``fmt="lines"``: one UTF-8 token per line.  ``fmt="csv"``: header row, the
    token is ``columns`` joined by :data:`UNIT_SEPARATOR`.  For paths, a sidecar
    ``<file>.meta.json`` may declare ``original_total_count``.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        raw = path.read_bytes()
        if original_total_count is None:
            original_total_count = _read_sidecar(path)
    else:
        raw = source.read()
        if isinstance(raw, str):
            raw = raw.encode("utf-8")
    if fmt == "lines":
        tokens = _parse_lines(raw)
    elif fmt == "csv":
        if not columns:
            raise ParameterError("csv ingest requires at least one column")
        tokens = _parse_csv(raw, columns, delimiter)
    else:
        raise ParameterError(f"unknown format {fmt!r} (expected 'lines' or 'csv')")
    if not tokens:
        raise IngestError("empty input")
    return TokenDataset(tuple(tokens), original_total_count)


def write_dataset(
    d: TokenDataset,
    path: str | Path,
    fmt: str = "lines",
    columns: Sequence[str] | None = None,
    delimiter: str = ",",
) -> None:
    """Write ``d`` in the given format, plus a sidecar when it is a declared sample."""
    path = Path(path)
    if fmt == "lines":
        with open(path, "wb") as fh:
            for tok in d.tokens:
                fh.write(tok.encode("utf-8"))
                fh.write(b"\n")
    elif fmt == "csv":
        if not columns:
            raise ParameterError("csv output requires the column names")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
            w.writerow(columns)
            for tok in d.tokens:
                w.writerow(tok.split(UNIT_SEPARATOR))
    else:
        raise ParameterError(f"unknown format {fmt!r}")
    if d.original_total_count is not None:
        side = path.with_name(path.name + SIDECAR_SUFFIX)
        side.write_text(json.dumps({"original_total_count": d.original_total_count}) + "\n", encoding="utf-8")
