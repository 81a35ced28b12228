#!/usr/bin/env python3
"""Convert line-aligned .nl/.cm corpus files into the toolkit's JSONL format.

The released corpus ships as parallel text files: one natural-language
description per line in the .nl file and the matching command on the same
line of the .cm file. This script zips them into JSONL records
({"id", "nl", "cmd"}) that `bashkit pipeline/stats` and the acceptance
suite consume.

Typical use, with the release checked out next to this repo:

    python3 python/convert_release.py \
        --nl data/bash/all.nl --cm data/bash/all.cm \
        --prefix filtered --output-dir released/
    # then: export BASHKIT_RELEASED_DATA=$PWD/released
"""

import argparse
import json
import pathlib


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nl", required=True, type=pathlib.Path, help=".nl file (one description per line)")
    ap.add_argument("--cm", required=True, type=pathlib.Path, help=".cm file (one command per line)")
    ap.add_argument("--prefix", default="filtered", help="output name: <prefix>.jsonl")
    ap.add_argument("--output-dir", default=".", type=pathlib.Path)
    args = ap.parse_args()

    nl_lines = args.nl.read_text(encoding="utf-8").splitlines()
    cm_lines = args.cm.read_text(encoding="utf-8").splitlines()
    if len(nl_lines) != len(cm_lines):
        raise SystemExit(f"line counts differ: {len(nl_lines)} vs {len(cm_lines)}")

    args.output_dir.mkdir(parents=True, exist_ok=True)
    out_path = args.output_dir / f"{args.prefix}.jsonl"
    with out_path.open("w", encoding="utf-8") as out:
        for i, (nl, cm) in enumerate(zip(nl_lines, cm_lines)):
            record = {"id": f"{args.prefix}-{i:06d}", "nl": nl, "cmd": cm}
            out.write(json.dumps(record, ensure_ascii=False) + "\n")
    print(f"wrote {len(nl_lines)} records to {out_path}")


if __name__ == "__main__":
    main()
