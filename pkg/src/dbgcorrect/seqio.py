"""FASTA / FASTQ / GFA1 input and output.

Readers are streaming generators: a single record is held in memory at a time.
Gzip input is detected from the ``.gz`` suffix; output is always plain text.
"""

from __future__ import annotations

import gzip
import io
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Iterator, Optional, TextIO

if TYPE_CHECKING:
    from .cdbg import CompactedDbg

__all__ = [
    "ParseError",
    "ReadRecord",
    "read_sequences",
    "write_sequences",
    "write_gfa",
    "read_gfa",
    "GfaSegment",
    "GfaLink",
]


class ParseError(ValueError):
    """Malformed sequence or graph file; carries the offending line number."""

    def __init__(self, message: str, path: str | Path | None = None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}"
        if line is not None:
            where = f"{where}:{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.path = path
        self.line = line


@dataclass(frozen=True)
class ReadRecord:
    id: str
    sequence: str
    quality: Optional[str] = None

    def __post_init__(self):
        if len(self.sequence) < 1:
            raise ValueError(f"record {self.id!r} has an empty sequence")
        if self.quality is not None and len(self.quality) != len(self.sequence):
            raise ValueError(
                f"record {self.id!r}: quality length {len(self.quality)} "
                f"!= sequence length {len(self.sequence)}"
            )

    def __len__(self) -> int:
        return len(self.sequence)


def _open_text(path: str | Path) -> TextIO:
    path = Path(path)
    if path.suffix == ".gz":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="ascii", newline=None)
    # newline=None folds \r\n into \n
    return open(path, "r", encoding="ascii", newline=None)


def _detect_format(path: str | Path) -> str:
    with _open_text(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            if line[0] == ">":
                return "fasta"
            if line[0] == "@":
                return "fastq"
            raise ParseError("cannot detect format: first record starts with "
                             f"{line[0]!r}", path, 1)
    return "fasta"  # empty file: no records either way


def read_sequences(path: str | Path, format: str = "auto") -> Iterator[ReadRecord]:
    """Yield the records of a FASTA or FASTQ file in file order.

    Multi-line FASTA sequences are joined, bases are uppercased, FASTQ records
    must be exactly four lines.
    """
    if format == "auto":
        format = _detect_format(path)
    if format == "fasta":
        yield from _read_fasta(path)
    elif format == "fastq":
        yield from _read_fastq(path)
    else:
        raise ValueError(f"unknown sequence format {format!r}")


def _read_fasta(path):
    header: str | None = None
    header_line = 0
    chunks: list[str] = []
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if line.startswith(">"):
                if header is not None:
                    yield _make_record(header, chunks, path, header_line)
                header, header_line, chunks = line[1:], lineno, []
            elif header is None:
                if line.strip():
                    raise ParseError("sequence data before first '>' header", path, lineno)
            else:
                chunks.append(line.strip().upper())
    if header is not None:
        yield _make_record(header, chunks, path, header_line)


def _make_record(header, chunks, path, lineno):
    seq = "".join(chunks)
    if not seq:
        raise ParseError(f"record {header!r} has no sequence", path, lineno)
    return ReadRecord(header, seq)


def _read_fastq(path):
    with _open_text(path) as fh:
        lineno = 0
        while True:
            header = fh.readline()
            lineno += 1
            if not header:
                return
            header = header.rstrip("\n")
            if not header:
                continue  # tolerate trailing blank lines
            if not header.startswith("@"):
                raise ParseError("expected '@' header", path, lineno)
            seq = fh.readline().rstrip("\n")
            plus = fh.readline().rstrip("\n")
            qual = fh.readline().rstrip("\n")
            if not plus.startswith("+"):
                raise ParseError("expected '+' separator", path, lineno + 2)
            if len(seq) != len(qual):
                raise ParseError(
                    f"sequence length {len(seq)} != quality length {len(qual)}",
                    path, lineno + 3)
            if not seq:
                raise ParseError("empty sequence", path, lineno + 1)
            yield ReadRecord(header[1:], seq.upper(), qual)
            lineno += 3


def write_sequences(records: Iterable[ReadRecord], path: str | Path, format: str = "fasta") -> None:
    """Write records as FASTA (quality dropped) or 4-line FASTQ."""
    if format not in ("fasta", "fastq"):
        raise ValueError(f"unknown sequence format {format!r}")
    with open(path, "w", encoding="ascii", newline="\n") as out:
        for rec in records:
            if format == "fasta":
                out.write(f">{rec.id}\n{rec.sequence}\n")
            else:
                qual = rec.quality if rec.quality is not None else "I" * len(rec.sequence)
                out.write(f"@{rec.id}\n{rec.sequence}\n+\n{qual}\n")


# ---------------------------------------------------------------- GFA1

@dataclass(frozen=True)
class GfaSegment:
    name: str
    sequence: str
    kmer_count_sum: Optional[int] = None
    mean_abundance: Optional[float] = None


@dataclass(frozen=True)
class GfaLink:
    from_name: str
    from_orient: str
    to_name: str
    to_orient: str
    overlap: str


def write_gfa(graph: "CompactedDbg", path: str | Path) -> None:
    """Write one S-line per unitig and one L-line per adjacency pair.

    Each S-line carries ``KC:i`` (summed k-mer counts) and ``km:f`` (mean
    abundance). Links are stored once per reverse-complement pair.
    """
    k = graph.k
    with open(path, "w", encoding="ascii", newline="\n") as out:
        out.write(f"H\tVN:Z:1.0\tKL:i:{k}\n")
        for u in graph.unitigs:
            out.write(f"S\t{u.id}\t{u.sequence}\tLN:i:{len(u.sequence)}"
                      f"\tKC:i:{u.count_sum}\tkm:f:{u.mean_abundance:.6f}\n")
        for a, b in graph.edges():
            out.write(f"L\t{a >> 1}\t{'-' if a & 1 else '+'}\t{b >> 1}\t"
                      f"{'-' if b & 1 else '+'}\t{k - 1}M\n")


def read_gfa(path: str | Path) -> tuple[Optional[int], list[GfaSegment], list[GfaLink]]:
    """Parse a GFA1 file into (k from the header if present, segments, links)."""
    k = None
    segments: list[GfaSegment] = []
    links: list[GfaLink] = []
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            tag = fields[0]
            if tag == "H":
                for f in fields[1:]:
                    if f.startswith("KL:i:"):
                        k = int(f[5:])
            elif tag == "S":
                if len(fields) < 3:
                    raise ParseError("S-line needs name and sequence", path, lineno)
                kc = km = None
                for f in fields[3:]:
                    if f.startswith("KC:i:"):
                        kc = int(f[5:])
                    elif f.startswith("km:f:"):
                        km = float(f[5:])
                segments.append(GfaSegment(fields[1], fields[2].upper(), kc, km))
            elif tag == "L":
                if len(fields) < 6 or fields[2] not in "+-" or fields[4] not in "+-":
                    raise ParseError("malformed L-line", path, lineno)
                links.append(GfaLink(fields[1], fields[2], fields[3], fields[4], fields[5]))
    return k, segments, links
