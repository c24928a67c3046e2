#!/usr/bin/env python3
"""Record token logprobs from a subword trigram LM trained on local Python code.

Stand-in for a hosted model when no completions endpoint is reachable. The
model is trained on one part of a source tree, and 100 functions from the
remaining files are scored token by token. Writes dataset.jsonl and
tlp.jsonl in the formats the syntaxlens CLI reads.

    python3 tools/scripts/record_ngram_logprobs.py --root /usr/lib/python3.10 \
        --out tests/fixtures/recorded
"""

import argparse
import ast
import collections
import json
import math
import pathlib
import random
import re
import textwrap

PRETOKEN = re.compile(r"""'s|'t|'re|'ve|'m|'ll|'d| ?[A-Za-z_]+| ?[0-9]+| ?[^\sA-Za-z_0-9]+|\s+(?!\S)|\s+""")
MAX_PIECE = 4
VOCAB_SIZE = 6000
DISCOUNT = 0.75


def pretokens(text):
    return PRETOKEN.findall(text)


class Tokenizer:
    def __init__(self, counts):
        self.vocab = {w for w, _ in counts.most_common(VOCAB_SIZE)}

    def __call__(self, text):
        out = []
        for word in pretokens(text):
            if word in self.vocab:
                out.append(word)
            else:
                out.extend(word[i:i + MAX_PIECE] for i in range(0, len(word), MAX_PIECE))
        return out


class Trigram:
    """Interpolated absolute discounting down to a uniform floor."""

    def __init__(self, sequences):
        self.n = [collections.Counter() for _ in range(3)]
        self.ctx = [collections.Counter() for _ in range(3)]
        self.follow = [collections.defaultdict(set) for _ in range(3)]
        for seq in sequences:
            padded = ["<s>", "<s>"] + seq
            for i in range(2, len(padded)):
                w = padded[i]
                for order in range(3):
                    h = tuple(padded[i - order:i])
                    self.n[order][h + (w,)] += 1
                    self.ctx[order][h] += 1
                    self.follow[order][h].add(w)
        self.types = len({k[-1] for k in self.n[0]}) + 1

    def prob(self, history, w):
        p = 1.0 / self.types
        for order in range(3):
            h = tuple(history[len(history) - order:]) if order else ()
            total = self.ctx[order].get(h, 0)
            if total == 0:
                continue
            c = self.n[order].get(h + (w,), 0)
            lam = DISCOUNT * len(self.follow[order][h]) / total
            p = max(c - DISCOUNT, 0.0) / total + lam * p
        return p


def functions(path):
    try:
        text = path.read_text(encoding="utf-8")
        tree = ast.parse(text)
    except (SyntaxError, UnicodeDecodeError, ValueError):
        return []
    out = []
    for node in ast.walk(tree):
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            seg = ast.get_source_segment(text, node)
            if seg is None or node.decorator_list:
                continue
            seg = textwrap.dedent(" " * node.col_offset + seg) + "\n"
            lines = seg.count("\n")
            if 4 <= lines <= 30 and seg.isascii():
                try:
                    ast.parse(seg)
                except SyntaxError:
                    continue
                out.append(seg)
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--root", default="/usr/lib/python3.10")
    ap.add_argument("--out", default="tests/fixtures/recorded")
    ap.add_argument("--snippets", type=int, default=100)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    files = sorted(p for p in pathlib.Path(args.root).rglob("*.py")
                   if "site-packages" not in p.parts and "dist-packages" not in p.parts)
    rng = random.Random(args.seed)
    rng.shuffle(files)
    cut = int(len(files) * 0.9)
    train_files, test_files = files[:cut], files[cut:]

    train_texts = []
    for p in train_files:
        try:
            train_texts.append(p.read_text(encoding="utf-8"))
        except (UnicodeDecodeError, OSError):
            pass
    counts = collections.Counter(w for t in train_texts for w in pretokens(t))
    tok = Tokenizer(counts)
    lm = Trigram(tok(t) for t in train_texts)

    pool = [f for p in sorted(test_files) for f in functions(p)]
    rng.shuffle(pool)
    picked = pool[:args.snippets]
    if len(picked) < args.snippets:
        raise SystemExit(f"only {len(picked)} held-out functions found")

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model_id = "ngram-trigram-stdlib"
    with open(out / "dataset.jsonl", "w") as ds, open(out / "tlp.jsonl", "w") as tl:
        for i, src in enumerate(picked):
            sid = f"rec-{i:03d}"
            ds.write(json.dumps({"snippet_id": sid, "source": src}) + "\n")
            pieces = tok(src)
            history = ["<s>", "<s>"]
            pos = 0
            tokens = []
            for piece in pieces:
                lp = math.log(lm.prob(history[-2:], piece))
                tokens.append({"text": piece, "start": pos, "end": pos + len(piece), "logprob": round(lp, 6)})
                pos += len(piece)
                history.append(piece)
            assert pos == len(src)
            tl.write(json.dumps({"snippet_id": sid, "model_id": model_id, "source": src, "tokens": tokens}) + "\n")
    print(f"wrote {len(picked)} snippets to {out}")


if __name__ == "__main__":
    main()
