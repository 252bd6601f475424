"""Fetch MovieLens-100K ``u.data`` into ``data/ml-100k/``.

Tries the GroupLens archive first. When that host is unreachable, falls back
to the copy of the same ratings shipped inside the RecBole wheel on PyPI
(``ml-100k.inter`` is ``u.data`` plus a typed header line).
"""
import argparse
import io
import subprocess
import sys
import tempfile
import urllib.request
import zipfile
from pathlib import Path

GROUPLENS_URL = "https://files.grouplens.org/datasets/movielens/ml-100k.zip"
RECBOLE_MEMBER = "recbole/dataset_example/ml-100k/ml-100k.inter"


def from_grouplens(timeout=30):
    with urllib.request.urlopen(GROUPLENS_URL, timeout=timeout) as resp:
        archive = zipfile.ZipFile(io.BytesIO(resp.read()))
    return archive.read("ml-100k/u.data")


def from_recbole():
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "recbole==1.2.1",
             "--no-deps", "-q", "-d", tmp],
            check=True,
        )
        wheel = next(Path(tmp).glob("recbole-*.whl"))
        raw = zipfile.ZipFile(wheel).read(RECBOLE_MEMBER).decode()
    lines = raw.splitlines()[1:]
    return ("\n".join(lines) + "\n").encode()


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/ml-100k/u.data")
    args = parser.parse_args(argv)
    out = Path(args.out)
    if out.exists():
        print(f"{out} already present")
        return 0
    try:
        payload = from_grouplens()
        source = "grouplens"
    except OSError as exc:
        print(f"grouplens unreachable ({exc}); using the RecBole copy", file=sys.stderr)
        payload = from_recbole()
        source = "recbole"
    n_lines = payload.count(b"\n")
    if n_lines != 100_000:
        print(f"unexpected line count {n_lines}", file=sys.stderr)
        return 1
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(payload)
    print(f"wrote {out} ({n_lines} ratings, source={source})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
