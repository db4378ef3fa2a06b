#!/usr/bin/env python3
"""Write the bundled vocabulary-swap toy fixtures into a directory:
corpus.jsonl, subst.json (paraphrase-client dictionary), yes.txt (judge
reply), and gen_code.txt (canned generator reply)."""

import argparse
from pathlib import Path

from solverank.corpus import save_corpus
from solverank.toy import CANNED_PROGRAM, make_toy_corpus, write_substitution_dict


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("outdir")
    parser.add_argument("--anchors", type=int, default=60)
    parser.add_argument("--seed", type=int, default=11)
    args = parser.parse_args()

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    save_corpus(make_toy_corpus(n_anchors=args.anchors, seed=args.seed), str(outdir / "corpus.jsonl"))
    write_substitution_dict(str(outdir / "subst.json"))
    (outdir / "yes.txt").write_text("Yes")
    (outdir / "gen_code.txt").write_text(CANNED_PROGRAM)
    print(f"wrote toy fixtures to {outdir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
