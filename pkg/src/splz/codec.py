"""Fixed-dictionary LZ token model and its variable-length wire encoding.

A record is parsed greedily against one uncompressed dictionary: at each
position the longest dictionary substring matching the remaining prefix is
emitted as ``Match(location, length)``, ties broken by the smallest location;
a byte absent from the dictionary is emitted as a ``Literal`` nibble. The
dictionary never slides, so decompression of one record touches nothing but
that record and its dictionary.

Wire format (prefix-free, dispatch on the leading bits of each code):

    match length                        location delta (signed, from the
    ------------                       previous match's location, first
    0xxxxxxx              [0x00,0x7F]   match relative to 0)
    10xxxxxx ...1 byte    [0x80,0x3FFF] --------------------------------
    110xxxxx ...2 bytes   [0x4000,0x1FFFFF]    00xxxxxx  +[0x00,0x3F]
    1110xxxx ...3 bytes   [0x200000,0x0FFFFFFF]01xxxxxx  -[0x00,0x3F]
    1111xxxx  literal nibble                   100xxxxx +1B [0x40,0x1FFF]
                                               101xxxxx -1B
    Multi-byte codes are big-endian, payload   1100xxxx +2B [0x2000,0xFFFFF]
    right-aligned; the shortest admissible     1101xxxx -2B
    row is always chosen, and delta zero       11100xxx +3B [0x100000,0x7FFFFFF]
    takes the positive form. Literals do not   11101xxx -3B
    participate in the delta chain.

A classic sliding-window LZ77 codec is included for comparison only: it shows
the retrieval cost a sliding dictionary would impose (expanding record k
requires expanding everything before it).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np
from numba import njit

from .errors import AlphabetError, CodeRangeError, CorruptStreamError

MAX_LITERAL = 0x0F
MAX_MATCH_LENGTH = 0x0FFFFFFF
MAX_LOCATION_DELTA = 0x07FFFFFF


class Match(NamedTuple):
    location: int
    length: int


class Literal(NamedTuple):
    value: int


Token = Union[Match, Literal]


@dataclass
class TokenStream:
    tokens: list[Token]
    expanded_length: int

    def __iter__(self):
        return iter(self.tokens)

    def __len__(self):
        return len(self.tokens)


def _as_u8(data, what: str) -> np.ndarray:
    if isinstance(data, np.ndarray):
        if data.dtype != np.uint8:
            raise TypeError(f"{what} must be uint8 bytes, got dtype {data.dtype}")
        return np.ascontiguousarray(data)
    if not isinstance(data, (bytes, bytearray, memoryview)):
        data = bytes(data)
    return np.frombuffer(data, dtype=np.uint8)


def _check_alphabet(arr: np.ndarray, what: str) -> None:
    if arr.size and int(arr.max()) > MAX_LITERAL:
        bad = int(np.flatnonzero(arr > MAX_LITERAL)[0])
        raise AlphabetError(
            f"{what}[{bad}] = {int(arr[bad])} exceeds the 4-bit alphabet"
        )


# ---------------------------------------------------------------------------
# Longest-match search
#
# Candidate match locations come from an index of dictionary 2-grams; each
# candidate is first probed at the single byte that would beat the best match
# so far, which discards almost everything cheaply on repetitive data. A
# brute-force counterpart in the test suite checks the contract: longest
# match, smallest location on ties.


@njit(cache=True)
def _gram_index(data):
    n = len(data)
    counts = np.zeros(257, np.int64)
    for i in range(n - 1):
        g = np.int64(data[i]) * 16 + np.int64(data[i + 1])
        counts[g + 1] += 1
    gram_start = np.cumsum(counts)
    gram_pos = np.empty(max(0, n - 1), np.int32)
    fill = gram_start[:256].copy()
    for i in range(n - 1):
        g = np.int64(data[i]) * 16 + np.int64(data[i + 1])
        gram_pos[fill[g]] = i
        fill[g] += 1
    first_pos = np.full(16, -1, np.int64)
    for i in range(n - 1, -1, -1):
        first_pos[data[i]] = i
    return gram_start, gram_pos, first_pos


@njit(cache=True)
def _common_prefix(dic, spt, l, p, nd, ns):
    k = np.int64(0)
    while l + k < nd and p + k < ns and dic[l + k] == spt[p + k]:
        k += 1
    return k


@njit(cache=True)
def _compress(dic, spt, gram_start, gram_pos, first_pos, out_loc, out_len):
    nd = np.int64(len(dic))
    ns = np.int64(len(spt))
    ntok = 0
    p = np.int64(0)
    while p < ns:
        best_len = np.int64(0)
        best_loc = np.int64(-1)
        if p + 1 < ns:
            if p + 1 < nd and dic[p] == spt[p] and dic[p + 1] == spt[p + 1]:
                # Records resemble their dictionary index-for-index, so the
                # same-position match is a strong lower bound. Seed the
                # threshold one short of it: an equally long match at a
                # smaller location must still be allowed to win.
                best_len = _common_prefix(dic, spt, p, p, nd, ns) - 1
                best_loc = p
            g = np.int64(spt[p]) * 16 + np.int64(spt[p + 1])
            for idx in range(gram_start[g], gram_start[g + 1]):
                l = np.int64(gram_pos[idx])
                if p + best_len >= ns:
                    break  # already matched to the end of the input
                if l + best_len >= nd:
                    break  # locations ascend, so no candidate left can win
                if dic[l + best_len] != spt[p + best_len]:
                    continue
                t = _common_prefix(dic, spt, l, p, nd, ns)
                if t > best_len:
                    best_len = t
                    best_loc = l
        if best_len >= 2:
            out_loc[ntok] = best_loc
            out_len[ntok] = best_len
            ntok += 1
            p += best_len
            continue
        fp = first_pos[spt[p]]
        if fp >= 0:
            out_loc[ntok] = fp
            out_len[ntok] = 1
        else:
            out_loc[ntok] = np.int64(spt[p])
            out_len[ntok] = 0
        ntok += 1
        p += 1
    return ntok


class MatchDictionary:
    """A dictionary prepared for repeated longest-match searches."""

    __slots__ = ("data", "gram_start", "gram_pos", "first_pos")

    def __init__(self, data):
        arr = _as_u8(data, "dictionary")
        _check_alphabet(arr, "dictionary")
        self.data = arr
        self.gram_start, self.gram_pos, self.first_pos = _gram_index(arr)

    def __len__(self) -> int:
        return len(self.data)


def compress_spt(spt, dictionary) -> TokenStream:
    """Greedy left-to-right parse of ``spt`` against ``dictionary``.

    Both must have the same length and values in [0, 15]. Every emitted match
    is the longest available at its position (smallest location on ties);
    a literal appears only when the byte does not occur in the dictionary.
    """
    mdict = (
        dictionary
        if isinstance(dictionary, MatchDictionary)
        else MatchDictionary(dictionary)
    )
    s = _as_u8(spt, "spt")
    _check_alphabet(s, "spt")
    if len(s) != len(mdict):
        raise ValueError(
            f"spt length {len(s)} != dictionary length {len(mdict)}"
        )
    out_loc = np.empty(max(1, len(s)), np.int64)
    out_len = np.empty(max(1, len(s)), np.int64)
    ntok = _compress(
        mdict.data, s, mdict.gram_start, mdict.gram_pos, mdict.first_pos,
        out_loc, out_len,
    )
    tokens: list[Token] = []
    for i in range(ntok):
        if out_len[i] == 0:
            tokens.append(Literal(int(out_loc[i])))
        else:
            tokens.append(Match(int(out_loc[i]), int(out_len[i])))
    return TokenStream(tokens=tokens, expanded_length=len(s))


def decompress_spt(stream: TokenStream, dictionary) -> bytes:
    """Concatenate dictionary slices and literal bytes; inverse of compress."""
    dic = dictionary.data if isinstance(dictionary, MatchDictionary) else _as_u8(
        dictionary, "dictionary"
    )
    nd = len(dic)
    out = bytearray()
    for tok in stream.tokens:
        if isinstance(tok, Literal):
            if not (0 <= tok.value <= MAX_LITERAL):
                raise AlphabetError(f"literal value {tok.value} out of range")
            out.append(tok.value)
        else:
            loc, length = tok.location, tok.length
            if length < 1 or loc < 0 or loc + length > nd:
                raise CorruptStreamError(
                    f"match ({loc},{length}) outside dictionary of {nd} bytes"
                )
            out += dic[loc : loc + length].tobytes()
    return bytes(out)


# ---------------------------------------------------------------------------
# Wire encoding


@njit(cache=True)
def _encode(locs, lens, ntok, out):
    prev = np.int64(0)
    o = 0
    for t in range(ntok):
        L = lens[t]
        if L == 0:
            v = locs[t]
            if v < 0 or v > 0x0F:
                return np.int64(-3)
            out[o] = np.uint8(0xF0 | v)
            o += 1
            continue
        if L < 0:
            return np.int64(-1)
        if L <= 0x7F:
            out[o] = np.uint8(L)
            o += 1
        elif L <= 0x3FFF:
            out[o] = np.uint8(0x80 | (L >> 8))
            out[o + 1] = np.uint8(L & 0xFF)
            o += 2
        elif L <= 0x1FFFFF:
            out[o] = np.uint8(0xC0 | (L >> 16))
            out[o + 1] = np.uint8((L >> 8) & 0xFF)
            out[o + 2] = np.uint8(L & 0xFF)
            o += 3
        elif L <= 0x0FFFFFFF:
            out[o] = np.uint8(0xE0 | (L >> 24))
            out[o + 1] = np.uint8((L >> 16) & 0xFF)
            out[o + 2] = np.uint8((L >> 8) & 0xFF)
            out[o + 3] = np.uint8(L & 0xFF)
            o += 4
        else:
            return np.int64(-1)
        delta = locs[t] - prev
        prev = locs[t]
        neg = delta < 0
        a = -delta if neg else delta
        if a <= 0x3F:
            out[o] = np.uint8((0x40 if neg else 0x00) | a)
            o += 1
        elif a <= 0x1FFF:
            out[o] = np.uint8((0xA0 if neg else 0x80) | (a >> 8))
            out[o + 1] = np.uint8(a & 0xFF)
            o += 2
        elif a <= 0xFFFFF:
            out[o] = np.uint8((0xD0 if neg else 0xC0) | (a >> 16))
            out[o + 1] = np.uint8((a >> 8) & 0xFF)
            out[o + 2] = np.uint8(a & 0xFF)
            o += 3
        elif a <= 0x7FFFFFF:
            out[o] = np.uint8((0xE8 if neg else 0xE0) | (a >> 24))
            out[o + 1] = np.uint8((a >> 16) & 0xFF)
            out[o + 2] = np.uint8((a >> 8) & 0xFF)
            out[o + 3] = np.uint8(a & 0xFF)
            o += 4
        else:
            return np.int64(-2)
    return np.int64(o)


@njit(cache=True)
def _decode_expand(buf, dic, out):
    """Fused decode + expand; returns expanded length or a negative error:
    -1 truncated, -2 undecodable, -3 dictionary bounds, -4 output overflow."""
    nb = np.int64(len(buf))
    nd = np.int64(len(dic))
    cap = np.int64(len(out))
    i = np.int64(0)
    o = np.int64(0)
    prev = np.int64(0)
    while i < nb:
        b = buf[i]
        if b >= 0xF0:
            if o >= cap:
                return np.int64(-4)
            out[o] = b & 0x0F
            o += 1
            i += 1
            continue
        if b < 0x80:
            L = np.int64(b)
            i += 1
        elif b < 0xC0:
            if i + 1 >= nb:
                return np.int64(-1)
            L = (np.int64(b & 0x3F) << 8) | np.int64(buf[i + 1])
            i += 2
        elif b < 0xE0:
            if i + 2 >= nb:
                return np.int64(-1)
            L = (
                (np.int64(b & 0x1F) << 16)
                | (np.int64(buf[i + 1]) << 8)
                | np.int64(buf[i + 2])
            )
            i += 3
        else:
            if i + 3 >= nb:
                return np.int64(-1)
            L = (
                (np.int64(b & 0x0F) << 24)
                | (np.int64(buf[i + 1]) << 16)
                | (np.int64(buf[i + 2]) << 8)
                | np.int64(buf[i + 3])
            )
            i += 4
        if L < 1:
            return np.int64(-2)
        if i >= nb:
            return np.int64(-1)
        b2 = buf[i]
        if b2 < 0x80:
            a = np.int64(b2 & 0x3F)
            neg = b2 >= 0x40
            i += 1
        elif b2 < 0xC0:
            if i + 1 >= nb:
                return np.int64(-1)
            a = (np.int64(b2 & 0x1F) << 8) | np.int64(buf[i + 1])
            neg = b2 >= 0xA0
            i += 2
        elif b2 < 0xE0:
            if i + 2 >= nb:
                return np.int64(-1)
            a = (
                (np.int64(b2 & 0x0F) << 16)
                | (np.int64(buf[i + 1]) << 8)
                | np.int64(buf[i + 2])
            )
            neg = b2 >= 0xD0
            i += 3
        elif b2 < 0xF0:
            if i + 3 >= nb:
                return np.int64(-1)
            a = (
                (np.int64(b2 & 0x07) << 24)
                | (np.int64(buf[i + 1]) << 16)
                | (np.int64(buf[i + 2]) << 8)
                | np.int64(buf[i + 3])
            )
            neg = b2 >= 0xE8
            i += 4
        else:
            return np.int64(-2)  # a literal prefix cannot start a location
        loc = prev - a if neg else prev + a
        prev = loc
        if loc < 0 or loc + L > nd:
            return np.int64(-3)
        if o + L > cap:
            return np.int64(-4)
        out[o : o + L] = dic[loc : loc + L]
        o += L
    return o


_DECODE_ERRORS = {
    -1: "truncated stream",
    -2: "undecodable code prefix",
    -3: "match outside dictionary bounds",
    -4: "expanded data exceeds output buffer",
}


def _tokens_to_arrays(stream: TokenStream):
    ntok = len(stream.tokens)
    locs = np.empty(max(1, ntok), np.int64)
    lens = np.empty(max(1, ntok), np.int64)
    for i, tok in enumerate(stream.tokens):
        if isinstance(tok, Literal):
            locs[i] = tok.value
            lens[i] = 0
        else:
            locs[i] = tok.location
            lens[i] = tok.length
    return locs, lens, ntok


def encode_stream(stream: TokenStream) -> bytes:
    """Serialize tokens to the wire format; bit-exact and prefix-free."""
    locs, lens, ntok = _tokens_to_arrays(stream)
    out = np.empty(max(1, ntok * 8), np.uint8)
    nbytes = int(_encode(locs, lens, ntok, out))
    if nbytes == -1:
        raise CodeRangeError(f"match length outside [1, {MAX_MATCH_LENGTH:#x}]")
    if nbytes == -2:
        raise CodeRangeError(
            f"location delta outside +/-{MAX_LOCATION_DELTA:#x}"
        )
    if nbytes == -3:
        raise CodeRangeError(f"literal value outside [0, {MAX_LITERAL:#x}]")
    return out[:nbytes].tobytes()


def encode_token_arrays(locs, lens, ntok: int) -> bytes:
    """Array-level encoder for the archive builder's hot path."""
    out = np.empty(max(1, ntok * 8), np.uint8)
    nbytes = int(_encode(locs, lens, ntok, out))
    if nbytes < 0:
        raise CodeRangeError(_DECODE_ERRORS.get(nbytes, "encode range error"))
    return out[:nbytes].tobytes()


def decode_stream(data) -> TokenStream:
    """Parse wire bytes back into tokens (pure Python, single pass)."""
    buf = bytes(data)
    nb = len(buf)
    tokens: list[Token] = []
    expanded = 0
    prev_loc = 0
    i = 0
    while i < nb:
        b = buf[i]
        if b >= 0xF0:
            tokens.append(Literal(b & 0x0F))
            expanded += 1
            i += 1
            continue
        if b < 0x80:
            L = b
            i += 1
        elif b < 0xC0:
            if i + 1 >= nb:
                raise CorruptStreamError("truncated length code")
            L = ((b & 0x3F) << 8) | buf[i + 1]
            i += 2
        elif b < 0xE0:
            if i + 2 >= nb:
                raise CorruptStreamError("truncated length code")
            L = ((b & 0x1F) << 16) | (buf[i + 1] << 8) | buf[i + 2]
            i += 3
        else:
            if i + 3 >= nb:
                raise CorruptStreamError("truncated length code")
            L = (
                ((b & 0x0F) << 24)
                | (buf[i + 1] << 16)
                | (buf[i + 2] << 8)
                | buf[i + 3]
            )
            i += 4
        if L < 1:
            raise CorruptStreamError("zero match length")
        if i >= nb:
            raise CorruptStreamError("match length without location")
        b2 = buf[i]
        if b2 < 0x80:
            a, neg, width = b2 & 0x3F, b2 >= 0x40, 1
        elif b2 < 0xC0:
            a, neg, width = (b2 & 0x1F) << 8, b2 >= 0xA0, 2
        elif b2 < 0xE0:
            a, neg, width = (b2 & 0x0F) << 16, b2 >= 0xD0, 3
        elif b2 < 0xF0:
            a, neg, width = (b2 & 0x07) << 24, b2 >= 0xE8, 4
        else:
            raise CorruptStreamError(
                f"byte {b2:#04x} cannot start a location code"
            )
        if i + width > nb:
            raise CorruptStreamError("truncated location code")
        for k in range(1, width):
            a |= buf[i + k] << (8 * (width - 1 - k))
        i += width
        delta = -a if neg else a
        loc = prev_loc + delta
        prev_loc = loc
        tokens.append(Match(loc, L))
        expanded += L
    return TokenStream(tokens=tokens, expanded_length=expanded)


def decode_record_into(encoded, dictionary, out: np.ndarray) -> int:
    """Decode and expand one record into ``out`` in a single pass.

    This is the query hot path; token objects are never materialized. The
    result is byte-identical to ``decompress_spt(decode_stream(encoded), d)``.
    """
    buf = _as_u8(encoded, "encoded record")
    dic = dictionary.data if isinstance(dictionary, MatchDictionary) else _as_u8(
        dictionary, "dictionary"
    )
    status = int(_decode_expand(buf, dic, out))
    if status < 0:
        raise CorruptStreamError(_DECODE_ERRORS[status])
    return status


# ---------------------------------------------------------------------------
# Classic sliding-window LZ77, kept as a reference point for benchmarks


def lz77_compress(data, dict_size: int) -> list[Token]:
    """Greedy LZ77 with a sliding window of ``dict_size`` bytes.

    Match locations are relative to the window start and may extend past the
    window boundary into data already emitted this match (classic overlap).
    """
    if dict_size <= 0:
        raise ValueError("dict_size must be positive")
    data = bytes(data)
    n = len(data)
    tokens: list[Token] = []
    i = 0
    while i < n:
        ws = max(0, i - dict_size)
        best_len = 0
        best_loc = -1
        for l in range(ws, i):
            k = 0
            while i + k < n and data[l + k] == data[i + k]:
                k += 1
            if k > best_len:
                best_len = k
                best_loc = l - ws
        if best_len >= 1:
            tokens.append(Match(best_loc, best_len))
            i += best_len
        else:
            tokens.append(Literal(data[i]))
            i += 1
    return tokens


def lz77_decompress(tokens, dict_size: int) -> bytes:
    if dict_size <= 0:
        raise ValueError("dict_size must be positive")
    out = bytearray()
    for tok in tokens:
        if isinstance(tok, Literal):
            out.append(tok.value)
        else:
            ws = max(0, len(out) - dict_size)
            src = ws + tok.location
            if tok.length and (src < 0 or src >= len(out)):
                raise CorruptStreamError(
                    f"match location {tok.location} outside window"
                )
            for k in range(tok.length):
                out.append(out[src + k])
    return bytes(out)
