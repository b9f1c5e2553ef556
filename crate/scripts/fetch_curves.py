#!/usr/bin/env python3
"""Build the curve-database fixtures from the public Cremona tables.

Downloads the allcurves files from https://github.com/JohnCremona/ecdata and
writes, under data/:

  allcurves_le_1000.cremona   -- every curve of conductor <= 1000
  allcurves_le_27200.cremona  -- every curve of conductor <= 27200 (covers
                                 all the smallest-example scan windows)
  paper_curves.cremona        -- the isogeny classes of the curves referenced
                                 by the acceptance suite
  allcurves_lt_400000.cremona -- (only with --full) the complete range used
                                 by the optional full-scale reproduction

All files are in the standard allcurves format accepted by `wdl scan
--format cremona`. Point WDL_CURVE_DB at one file, or concatenate several.

Usage: python3 scripts/fetch_curves.py [--full] [--base-url URL]
"""

import argparse
import os
import sys
import urllib.request

BASE = "https://raw.githubusercontent.com/JohnCremona/ecdata/master/allcurves"

# conductors whose isogeny classes the acceptance suite needs
PAPER_CONDUCTORS = {805, 4171, 5673, 27186, 36613, 104710, 149149}

SCAN_MAX = 27200
FULL_MAX = 400000


def shard_start(conductor: int) -> int:
    return conductor // 10000 * 10000


def shard_name(lo: int) -> str:
    return f"allcurves.{lo:05d}-{lo + 9999:05d}"


def fetch(url: str) -> str:
    sys.stderr.write(f"fetching {url}\n")
    with urllib.request.urlopen(url) as resp:
        return resp.read().decode()


def write_filtered(cache, out_path, keep):
    lines = []
    for _, content in sorted(cache.items()):
        for line in content.splitlines():
            fields = line.split()
            if fields and fields[0].isdigit() and keep(int(fields[0])):
                lines.append(line)
    with open(out_path, "w") as f:
        f.write("\n".join(lines) + "\n")
    sys.stderr.write(f"wrote {len(lines)} curves to {out_path}\n")


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--base-url", default=BASE)
    ap.add_argument(
        "--out-dir", default=os.path.join(os.path.dirname(__file__), "..", "data")
    )
    ap.add_argument("--full", action="store_true", help="also fetch the full range to 400000")
    args = ap.parse_args()

    wanted = set(range(0, SCAN_MAX + 1, 10000))
    for n in PAPER_CONDUCTORS:
        wanted.add(shard_start(n))
    if args.full:
        wanted.update(range(0, FULL_MAX, 10000))

    cache = {}
    for lo in sorted(wanted):
        cache[lo] = fetch(f"{args.base_url}/{shard_name(lo)}")

    os.makedirs(args.out_dir, exist_ok=True)
    write_filtered(
        cache,
        os.path.join(args.out_dir, "allcurves_le_1000.cremona"),
        lambda n: n <= 1000,
    )
    write_filtered(
        cache,
        os.path.join(args.out_dir, "allcurves_le_27200.cremona"),
        lambda n: n <= SCAN_MAX,
    )
    write_filtered(
        cache,
        os.path.join(args.out_dir, "paper_curves.cremona"),
        lambda n: n in PAPER_CONDUCTORS,
    )
    if args.full:
        write_filtered(
            cache,
            os.path.join(args.out_dir, "allcurves_lt_400000.cremona"),
            lambda n: n < FULL_MAX,
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
