#!/usr/bin/env python3
"""Generate a synthetic ESD-style corpus with alignments and a config file."""

import argparse
from pathlib import Path

from emotts.toydata import generate_toy_corpus


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out", type=Path, help="workspace directory to create")
    parser.add_argument("--speakers", type=int, default=2)
    parser.add_argument("--utterances-per-cell", type=int, default=6)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    corpus_dir = generate_toy_corpus(
        args.out, n_speakers=args.speakers,
        utterances_per_cell=args.utterances_per_cell, seed=args.seed)
    total = args.speakers * 5 * args.utterances_per_cell
    print(f"wrote {total} utterances under {corpus_dir}")
    print(f"config: {args.out / 'config.json'}")


if __name__ == "__main__":
    main()
