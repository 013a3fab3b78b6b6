#!/usr/bin/env python3
"""Run every config under configs/examples and record output digests.

    python scripts/run_examples.py [--out DIR] [--threads N]

Each config writes DIR/<name>.json (plus CSV tables).  The digest list is
printed and saved to DIR/SHA256SUMS; two runs with the same configs should
produce identical lists.
"""
import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

from ergolab.cli import run, write_outputs

ROOT = Path(__file__).resolve().parent.parent
EXAMPLES = ROOT / "configs" / "examples"


def run_all(out_dir: Path, threads: int = 1, names=None) -> dict[str, str]:
    out_dir.mkdir(parents=True, exist_ok=True)
    for cfg_path in sorted(EXAMPLES.glob("*.json")):
        if names is not None and cfg_path.stem not in names:
            continue
        cfg = json.loads(cfg_path.read_text())
        t0 = time.perf_counter()
        result, tables, summary = run(cfg, None, threads)
        write_outputs(out_dir / f"{cfg_path.stem}.json", result, tables)
        print(f"{cfg_path.stem:32s} {time.perf_counter() - t0:7.2f}s  {summary}", file=sys.stderr)
    digests = {}
    for p in sorted(out_dir.iterdir()):
        if p.name != "SHA256SUMS":
            digests[p.name] = hashlib.sha256(p.read_bytes()).hexdigest()
    (out_dir / "SHA256SUMS").write_text("".join(f"{d}  {n}\n" for n, d in digests.items()))
    return digests


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=ROOT / "example_outputs")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    digests = run_all(args.out, args.threads)
    for n, d in digests.items():
        print(f"{d}  {n}")


if __name__ == "__main__":
    main()
