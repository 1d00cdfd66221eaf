"""Regenerate data/zipf_en.tsv from a wordfreq ``large_en.msgpack.gz`` file.

Usage: python tools/build_zipf_table.py PATH/TO/large_en.msgpack.gz [N]

The file is a msgpack list: a header dict followed by buckets, where
bucket ``i`` holds words whose frequency is ``10 ** (-i / 100)``; the
Zipf value is therefore ``9 - i / 100``.  A minimal msgpack reader is
inlined so the script has no third-party dependencies.
"""
import gzip
import struct
import sys


def _read(buf, pos):
    b = buf[pos]
    pos += 1
    if b <= 0x7F:
        return b, pos
    if 0x80 <= b <= 0x8F:
        return _map(buf, pos, b & 0x0F)
    if 0x90 <= b <= 0x9F:
        return _arr(buf, pos, b & 0x0F)
    if 0xA0 <= b <= 0xBF:
        n = b & 0x1F
        return buf[pos:pos + n].decode("utf-8"), pos + n
    if b == 0xC0:
        return None, pos
    if b in (0xC2, 0xC3):
        return b == 0xC3, pos
    if b == 0xD9:
        n = buf[pos]
        return buf[pos + 1:pos + 1 + n].decode("utf-8"), pos + 1 + n
    if b == 0xDA:
        (n,) = struct.unpack_from(">H", buf, pos)
        return buf[pos + 2:pos + 2 + n].decode("utf-8"), pos + 2 + n
    if b == 0xDC:
        (n,) = struct.unpack_from(">H", buf, pos)
        return _arr(buf, pos + 2, n)
    if b == 0xDD:
        (n,) = struct.unpack_from(">I", buf, pos)
        return _arr(buf, pos + 4, n)
    if b == 0xCC:
        return buf[pos], pos + 1
    if b == 0xCD:
        return struct.unpack_from(">H", buf, pos)[0], pos + 2
    if b >= 0xE0:
        return b - 0x100, pos
    raise ValueError(f"unsupported msgpack byte {b:#x} at {pos - 1}")


def _arr(buf, pos, n):
    out = []
    for _ in range(n):
        v, pos = _read(buf, pos)
        out.append(v)
    return out, pos


def _map(buf, pos, n):
    out = {}
    for _ in range(n):
        k, pos = _read(buf, pos)
        v, pos = _read(buf, pos)
        out[k] = v
    return out, pos


def main():
    path = sys.argv[1]
    limit = int(sys.argv[2]) if len(sys.argv) > 2 else 60000
    data, _ = _read(gzip.open(path).read(), 0)
    rows = []
    for i, bucket in enumerate(data[1:]):
        zipf = round(9 - i / 100, 2)
        for word in bucket:
            if word.isalpha() or ("'" in word and word.replace("'", "").isalpha()):
                rows.append((word, zipf))
        if len(rows) >= limit:
            break
    out = sys.stdout
    out.write("# word<TAB>zipf  (derived from wordfreq large_en, top %d alphabetic entries)\n" % len(rows))
    for word, zipf in rows[:limit]:
        out.write(f"{word}\t{min(8.0, max(0.0, zipf)):.2f}\n")


if __name__ == "__main__":
    main()
