"""Canonical k-mers, exact counting and k-mer spectra.

K-mers are packed 2 bits per base (A=0, C=1, G=2, T=3) into ``ceil(k/32)``
unsigned 64-bit words. Word ``j`` holds bases ``32j .. 32j+31`` with the first
base in the most significant position; the last word holds the remaining
bases right-aligned. Comparing the word tuples left to right is therefore the
same as comparing the k-mer strings lexicographically under A<C<G<T.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Union

import numpy as np

from .seqio import ReadRecord

__all__ = [
    "KMER_MIN",
    "KMER_MAX",
    "CanonicalKmer",
    "KmerCountTable",
    "KmerSpectrum",
    "canonicalize",
    "canonical",
    "check_k",
    "count_kmers",
    "filter_solid",
    "revcomp",
    "spectrum",
    "iter_kmers",
    "load_count_table",
    "save_count_table",
    "write_spectrum_tsv",
]

KMER_MIN = 3
KMER_MAX = 255
COUNT_MAX = np.iinfo(np.uint32).max

_COMP = str.maketrans("ACGTNacgtn", "TGCANtgcan")
_TO_DIGITS = str.maketrans("ACGT", "0123")
_FROM_DIGITS = str.maketrans("0123", "ACGT")
_ACGT = frozenset("ACGT")

_CODE = np.full(256, 4, dtype=np.uint8)
for _i, _b in enumerate("ACGT"):
    _CODE[ord(_b)] = _i
    _CODE[ord(_b.lower())] = _i
_LETTER = np.frombuffer(b"ACGT", dtype=np.uint8)


def revcomp(seq: str) -> str:
    return seq.translate(_COMP)[::-1]


def canonical(word: str) -> str:
    """The smaller of ``word`` and its reverse complement, as a string."""
    rc = word.translate(_COMP)[::-1]
    return rc if rc < word else word


def check_k(k: int) -> None:
    if not isinstance(k, (int, np.integer)) or k < KMER_MIN or k > KMER_MAX:
        raise ValueError(f"k must be an integer in [{KMER_MIN}, {KMER_MAX}], got {k!r}")
    if k % 2 == 0:
        raise ValueError(f"k must be odd, got {k}")


@dataclass(frozen=True, order=True)
class CanonicalKmer:
    """A canonical k-mer as a single packed integer (2 bits per base)."""

    k: int
    packed: int

    @property
    def sequence(self) -> str:
        return np.base_repr(self.packed, 4).rjust(self.k, "0").translate(_FROM_DIGITS)

    def __str__(self) -> str:
        return self.sequence


def canonicalize(word: str) -> CanonicalKmer:
    """Pack the canonical orientation of ``word``.

    Raises ``ValueError`` for even lengths or bases outside ACGT.
    """
    word = word.upper()
    check_k(len(word))
    if not _ACGT.issuperset(word):
        raise ValueError(f"non-ACGT base in {word!r}")
    return CanonicalKmer(len(word), int(canonical(word).translate(_TO_DIGITS), 4))


def iter_kmers(seq: str, k: int) -> Iterator[tuple[int, str]]:
    """Yield ``(position, canonical k-mer)`` for each all-ACGT window of ``seq``."""
    seq = seq.upper()
    rc = revcomp(seq)
    n = len(seq)
    for i in range(n - k + 1):
        fwd = seq[i:i + k]
        if not _ACGT.issuperset(fwd):
            continue
        r = rc[n - i - k:n - i]
        yield i, (r if r < fwd else fwd)


# ------------------------------------------------------------ packing helpers

def _n_words(k: int) -> int:
    return (k + 31) // 32


def _word_spans(k: int) -> list[tuple[int, int]]:
    return [(s, min(s + 32, k)) for s in range(0, k, 32)]


def _pack_windows(codes: np.ndarray, k: int) -> np.ndarray:
    """Packed words of every length-``k`` window of a 0..3 code array."""
    n = codes.shape[0]
    nwin = n - k + 1
    powers = {1: codes.astype(np.uint64)}
    m = 1
    while m < 32 and 2 * m <= max(k, 1):
        prev = powers[m]
        ln = prev.shape[0] - m
        powers[2 * m] = (prev[:ln] << np.uint64(2 * m)) | prev[m:m + ln]
        m *= 2

    def segment(length: int, offset: int) -> np.ndarray:
        # value of `length` bases starting at offset + p, for p in range(nwin)
        val = None
        pos = offset
        for bit in (32, 16, 8, 4, 2, 1):
            if length & bit:
                part = powers[bit][pos:pos + nwin]
                val = part.copy() if val is None else (val << np.uint64(2 * bit)) | part
                pos += bit
        return val

    out = np.empty((nwin, _n_words(k)), dtype=np.uint64)
    for j, (s, e) in enumerate(_word_spans(k)):
        out[:, j] = segment(e - s, s)
    return out


def _pack_rows(codes: np.ndarray, k: int) -> np.ndarray:
    """Pack an (m, k) array of 0..3 codes, one k-mer per row."""
    out = np.zeros((codes.shape[0], _n_words(k)), dtype=np.uint64)
    c = codes.astype(np.uint64)
    for j, (s, e) in enumerate(_word_spans(k)):
        acc = np.zeros(codes.shape[0], dtype=np.uint64)
        for b in range(s, e):
            acc = (acc << np.uint64(2)) | c[:, b]
        out[:, j] = acc
    return out


def _unpack_rows(keys: np.ndarray, k: int) -> list[str]:
    m = keys.shape[0]
    if m == 0:
        return []
    codes = np.empty((m, k), dtype=np.uint8)
    for j, (s, e) in enumerate(_word_spans(k)):
        w = keys[:, j]
        nb = e - s
        for t in range(nb):
            codes[:, s + t] = (w >> np.uint64(2 * (nb - 1 - t))) & np.uint64(3)
    text = _LETTER[codes].tobytes().decode("ascii")
    return [text[i * k:(i + 1) * k] for i in range(m)]


def _lex_less(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise lexicographic a < b over word columns."""
    w = a.shape[1]
    less = a[:, w - 1] < b[:, w - 1]
    for j in range(w - 2, -1, -1):
        less = (a[:, j] < b[:, j]) | ((a[:, j] == b[:, j]) & less)
    return less


def _mix64(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> np.uint64(30))
    x = x * np.uint64(0xBF58476D1CE4E5B9)
    x = x ^ (x >> np.uint64(27))
    x = x * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def _sort_key(keys: np.ndarray) -> np.ndarray:
    # single-word k-mers sort by value; longer ones by a mixed hash, verified later
    if keys.shape[1] == 1:
        return keys[:, 0]
    with np.errstate(over="ignore"):
        h = _mix64(keys[:, 0].copy())
        for j in range(1, keys.shape[1]):
            h = _mix64(h ^ keys[:, j])
    return h


def _group(keys: np.ndarray, counts: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Merge duplicate rows; returns (keys, summed counts, sort keys)."""
    if keys.shape[0] == 0:
        return keys, counts.astype(np.uint64), np.empty(0, dtype=np.uint64)
    sk = _sort_key(keys)
    order = np.argsort(sk, kind="stable")
    ks, sks = keys[order], sk[order]
    same_sk = sks[1:] == sks[:-1]
    differ = np.any(ks[1:] != ks[:-1], axis=1)
    if np.any(same_sk & differ):
        # hash collision between distinct k-mers: exact lexicographic tie-break
        cols = [keys[:, j] for j in range(keys.shape[1] - 1, -1, -1)] + [sk]
        order = np.lexsort(cols)
        ks, sks = keys[order], sk[order]
        differ = np.any(ks[1:] != ks[:-1], axis=1)
    new = np.ones(ks.shape[0], dtype=bool)
    new[1:] = differ
    starts = np.flatnonzero(new)
    summed = np.add.reduceat(counts[order].astype(np.uint64), starts)
    return ks[starts], summed, sks[starts]


# ------------------------------------------------------------ count table

@dataclass
class KmerCountTable:
    """Exact abundance of every canonical k-mer seen in a read set.

    Backed by packed numpy arrays; string-level access goes through
    :meth:`get`, :meth:`lookup` and :meth:`items`.
    """

    k: int
    keys: np.ndarray
    counts: np.ndarray
    _sort_keys: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self._sort_keys is None:
            self._sort_keys = _sort_key(self.keys)

    def __len__(self) -> int:
        return int(self.keys.shape[0])

    def total(self) -> int:
        return int(self.counts.sum(dtype=np.uint64))

    def __contains__(self, word: str) -> bool:
        return self.get(word) > 0

    def __getitem__(self, word: str) -> int:
        c = self.get(word)
        if c == 0:
            raise KeyError(word)
        return c

    def get(self, word: str, default: int = 0) -> int:
        c = int(self.lookup([word])[0])
        return c if c else default

    def lookup(self, words: Iterable[str]) -> np.ndarray:
        """Counts for a batch of k-mers (any orientation); 0 when absent."""
        words = [canonical(w.upper()) for w in words]
        out = np.zeros(len(words), dtype=np.uint32)
        if not words or len(self) == 0:
            return out
        if any(len(w) != self.k for w in words):
            raise ValueError(f"lookup words must have length {self.k}")
        raw = np.frombuffer("".join(words).encode("ascii"), dtype=np.uint8)
        codes = _CODE[raw].reshape(len(words), self.k)
        ok = np.all(codes < 4, axis=1)
        q = _pack_rows(np.where(codes < 4, codes, 0), self.k)
        qs = _sort_key(q)
        idx = np.searchsorted(self._sort_keys, qs)
        idx_c = np.minimum(idx, len(self) - 1)
        hit = ok & (idx < len(self)) & np.all(self.keys[idx_c] == q, axis=1)
        out[hit] = self.counts[idx_c[hit]]
        # distinct k-mers sharing a sort key sit next to each other
        miss = np.flatnonzero(ok & ~hit & (idx < len(self)))
        for i in miss:
            j = idx[i]
            while j < len(self) and self._sort_keys[j] == qs[i]:
                if np.array_equal(self.keys[j], q[i]):
                    out[i] = self.counts[j]
                    break
                j += 1
        return out

    def kmers(self, min_count: int = 1) -> list[str]:
        """Canonical k-mer strings with count >= ``min_count``, table order."""
        mask = self.counts >= min_count
        return _unpack_rows(self.keys[mask], self.k)

    def items(self) -> Iterator[tuple[str, int]]:
        for word, c in zip(_unpack_rows(self.keys, self.k), self.counts.tolist()):
            yield word, c

    def to_dict(self) -> dict[str, int]:
        return dict(self.items())

    def __eq__(self, other) -> bool:
        if not isinstance(other, KmerCountTable):
            return NotImplemented
        return (self.k == other.k and np.array_equal(self.keys, other.keys)
                and np.array_equal(self.counts, other.counts))

    def restrict(self, words: Iterable[str]) -> "KmerCountTable":
        """Sub-table holding only the given k-mers (absent ones are skipped)."""
        words = list(words)
        c = self.lookup(words)
        present = [canonical(w) for w, n in zip(words, c) if n]
        return _table_from_strings(self.k, present, c[c > 0])


def _table_from_strings(k: int, words: list[str], counts) -> KmerCountTable:
    if words:
        raw = np.frombuffer("".join(words).encode("ascii"), dtype=np.uint8)
        keys = _pack_rows(_CODE[raw].reshape(len(words), k), k)
    else:
        keys = np.empty((0, _n_words(k)), dtype=np.uint64)
    keys, summed, sk = _group(keys, np.asarray(counts, dtype=np.uint64))
    return KmerCountTable(k, keys, np.minimum(summed, COUNT_MAX).astype(np.uint32), sk)


def _count_chunk(seqs: list[str], k: int) -> tuple[np.ndarray, np.ndarray]:
    text = "N".join(seqs).encode("ascii", errors="replace")
    raw = np.frombuffer(text, dtype=np.uint8)
    codes = _CODE[raw]
    n = codes.shape[0]
    w = _n_words(k)
    if n < k:
        return np.empty((0, w), dtype=np.uint64), np.empty(0, dtype=np.uint64)
    bad = np.concatenate(([0], np.cumsum(codes == 4, dtype=np.int64)))
    valid = (bad[k:] - bad[:-k]) == 0
    clean = np.where(codes < 4, codes, 0)
    fwd = _pack_windows(clean, k)
    rev = _pack_windows((3 - clean)[::-1].copy(), k)[::-1]
    take_rev = _lex_less(rev, fwd)
    canon = np.where(take_rev[:, None], rev, fwd)[valid]
    keys, counts, _ = _group(canon, np.ones(canon.shape[0], dtype=np.uint64))
    return keys, counts


def count_kmers(reads: Iterable[Union[ReadRecord, str]], k: int,
                chunk_bases: int = 2_000_000) -> KmerCountTable:
    """Count every all-ACGT window of length ``k`` over the reads, canonically.

    Reads are processed in chunks of about ``chunk_bases`` bases; the merged
    table does not depend on the chunk size.
    """
    check_k(k)
    parts_k: list[np.ndarray] = []
    parts_c: list[np.ndarray] = []
    buf: list[str] = []
    size = 0

    def flush():
        nonlocal buf, size
        if buf:
            kk, cc = _count_chunk(buf, k)
            parts_k.append(kk)
            parts_c.append(cc)
        buf, size = [], 0

    for r in reads:
        seq = r.sequence if isinstance(r, ReadRecord) else r
        if len(seq) < k:
            continue
        buf.append(seq)
        size += len(seq) + 1
        if size >= chunk_bases:
            flush()
    flush()
    if not parts_k:
        return KmerCountTable(k, np.empty((0, _n_words(k)), dtype=np.uint64),
                              np.empty(0, dtype=np.uint32))
    if len(parts_k) == 1:
        keys, counts = parts_k[0], parts_c[0]
        sk = None
    else:
        keys, counts, sk = _group(np.concatenate(parts_k), np.concatenate(parts_c))
    return KmerCountTable(k, keys, np.minimum(counts, COUNT_MAX).astype(np.uint32), sk)


def filter_solid(table: KmerCountTable, solidity_threshold: int) -> frozenset[str]:
    """Canonical k-mers whose count reaches ``solidity_threshold``."""
    if solidity_threshold < 1:
        raise ValueError("solidity threshold must be >= 1")
    return frozenset(table.kmers(min_count=solidity_threshold))


# ------------------------------------------------------------ spectrum

@dataclass(frozen=True)
class KmerSpectrum:
    k: int
    histogram: dict[int, int]

    def distinct(self) -> int:
        return sum(self.histogram.values())

    def total(self) -> int:
        return sum(a * n for a, n in self.histogram.items())

    def dense(self) -> np.ndarray:
        """Array ``h`` with ``h[a]`` the number of k-mers of abundance ``a``."""
        top = max(self.histogram) if self.histogram else 0
        h = np.zeros(top + 1, dtype=np.int64)
        for a, n in self.histogram.items():
            h[a] = n
        return h


def spectrum(table: KmerCountTable) -> KmerSpectrum:
    if len(table) == 0:
        raise ValueError("empty count table has no spectrum")
    values, freq = np.unique(table.counts, return_counts=True)
    return KmerSpectrum(table.k, {int(a): int(n) for a, n in zip(values, freq)})


def write_spectrum_tsv(spec: KmerSpectrum, path: str | Path) -> None:
    with open(path, "w") as out:
        out.write("abundance\tcount\n")
        for a in sorted(spec.histogram):
            out.write(f"{a}\t{spec.histogram[a]}\n")


# ------------------------------------------------------------ persistence

_MAGIC = b"KMCT"
_VERSION = 1
_HEADER = struct.Struct("<4sHHHxxQ")  # magic, version, k, words, n


def save_count_table(table: KmerCountTable, path: str | Path) -> None:
    """Binary format: header then (packed k-mer, count) records sorted by k-mer."""
    w = _n_words(table.k)
    cols = [table.keys[:, j] for j in range(w - 1, -1, -1)]
    order = np.lexsort(cols) if len(table) else np.empty(0, dtype=np.intp)
    rec = np.empty(len(table), dtype=[("kmer", ">u8", (w,)), ("count", "<u4")])
    rec["kmer"] = table.keys[order]
    rec["count"] = table.counts[order]
    with open(path, "wb") as out:
        out.write(_HEADER.pack(_MAGIC, _VERSION, table.k, w, len(table)))
        out.write(rec.tobytes())


def load_count_table(path: str | Path) -> KmerCountTable:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ValueError(f"{path}: truncated count table header")
        magic, version, k, w, n = _HEADER.unpack(head)
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a k-mer count table")
        if version != _VERSION:
            raise ValueError(f"{path}: unsupported count table version {version}")
        dtype = np.dtype([("kmer", ">u8", (w,)), ("count", "<u4")])
        rec = np.frombuffer(fh.read(), dtype=dtype)
    if rec.shape[0] != n:
        raise ValueError(f"{path}: expected {n} records, found {rec.shape[0]}")
    keys = rec["kmer"].astype(np.uint64).reshape(n, w)
    keys, counts, sk = _group(keys, rec["count"].astype(np.uint64))
    return KmerCountTable(k, keys, counts.astype(np.uint32), sk)
