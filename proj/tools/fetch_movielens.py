#!/usr/bin/env python3
"""Fetch MovieLens 100K into data/ml-100k/u.data.

Tries the GroupLens archive first. If that host is unreachable, falls back to
the copy bundled with the recbole wheel (ml-100k.inter, same 100000 records),
fetched through pip.
"""

import argparse
import io
import subprocess
import sys
import tempfile
import urllib.request
import zipfile
from pathlib import Path

GROUPLENS = "https://files.grouplens.org/datasets/movielens/ml-100k.zip"


def from_grouplens(timeout):
    with urllib.request.urlopen(GROUPLENS, timeout=timeout) as resp:
        blob = resp.read()
    with zipfile.ZipFile(io.BytesIO(blob)) as zf:
        return zf.read("ml-100k/u.data").decode()


def from_recbole():
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "--quiet", "-d", tmp, "recbole"],
            check=True,
        )
        wheel = next(Path(tmp).glob("recbole-*.whl"))
        with zipfile.ZipFile(wheel) as zf:
            name = next(n for n in zf.namelist() if n.endswith("ml-100k/ml-100k.inter"))
            inter = zf.read(name).decode()
    lines = inter.splitlines()[1:]  # header: user_id:token item_id:token rating:float timestamp:float
    rows = []
    for line in lines:
        user, item, rating, ts = line.split("\t")
        rows.append(f"{user}\t{item}\t{int(float(rating))}\t{int(float(ts))}")
    return "\n".join(rows) + "\n"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "ml-100k"))
    ap.add_argument("--timeout", type=float, default=20.0)
    args = ap.parse_args()

    out = Path(args.out)
    target = out / "u.data"
    if target.exists():
        print(f"{target} already present")
        return 0

    try:
        text = from_grouplens(args.timeout)
        source = "grouplens"
    except Exception as exc:  # noqa: BLE001
        print(f"grouplens unavailable ({exc}); using the recbole wheel", file=sys.stderr)
        text = from_recbole()
        source = "recbole"

    n = text.count("\n")
    if n != 100000:
        print(f"unexpected record count {n}", file=sys.stderr)
        return 1
    out.mkdir(parents=True, exist_ok=True)
    target.write_text(text)
    print(f"wrote {target} ({n} records, {source})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
