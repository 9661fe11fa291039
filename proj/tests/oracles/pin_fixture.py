# Copyright 2026 The MBL Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Freezes reference scores for the committed test fixtures.

Tokenization and BLEU come from sacrebleu (13a, lowercased, no smoothing).
SARI is a direct port of the original sentence-level counting rules with the
reference n-gram counts pooled and source/prediction counts scaled by the
number of references. Corpus SARI is the mean of sentence scores.

Run from the repository root:  python3 tests/oracles/pin_fixture.py
"""

import json
import pathlib
from collections import Counter

import sacrebleu
from sacrebleu.tokenizers.tokenizer_13a import Tokenizer13a

ROOT = pathlib.Path(__file__).resolve().parents[1] / "data"
_tok = Tokenizer13a()


def tokens(text):
    return _tok(text.lower()).split()


def ngrams(toks, n):
    return [" ".join(toks[i:i + n]) for i in range(len(toks) - n + 1)]


def sari_ngram(sgrams, cgrams, rgramslist, numref):
    rgramcounter = Counter(g for rgrams in rgramslist for g in rgrams)
    sgramcounter = Counter(sgrams)
    sgramcounter_rep = Counter({k: v * numref for k, v in sgramcounter.items()})
    cgramcounter = Counter(cgrams)
    cgramcounter_rep = Counter({k: v * numref for k, v in cgramcounter.items()})

    keep_rep = sgramcounter_rep & cgramcounter_rep
    keep_good = keep_rep & rgramcounter
    keep_all = sgramcounter_rep & rgramcounter
    s1 = s2 = 0.0
    for g in keep_good:
        s1 += keep_good[g] / keep_rep[g]
        s2 += keep_good[g] / keep_all[g]
    keep_p = s1 / len(keep_rep) if keep_rep else 0.0
    keep_r = s2 / len(keep_all) if keep_all else 0.0
    keep_f = 2 * keep_p * keep_r / (keep_p + keep_r) if keep_p + keep_r > 0 else 0.0

    del_rep = sgramcounter_rep - cgramcounter_rep
    del_good = del_rep - rgramcounter
    d1 = sum(del_good[g] / del_rep[g] for g in del_good)
    del_p = d1 / len(del_rep) if del_rep else 0.0

    add = set(cgramcounter) - set(sgramcounter)
    add_good = add & set(rgramcounter)
    add_all = set(rgramcounter) - set(sgramcounter)
    add_p = len(add_good) / len(add) if add else 0.0
    add_r = len(add_good) / len(add_all) if add_all else 0.0
    add_f = 2 * add_p * add_r / (add_p + add_r) if add_p + add_r > 0 else 0.0
    return keep_f, del_p, add_f


def sari_sentence(src, pred, refs):
    s, c, rs = tokens(src), tokens(pred), [tokens(r) for r in refs]
    total = 0.0
    for n in range(1, 5):
        keep_f, del_p, add_f = sari_ngram(ngrams(s, n), ngrams(c, n), [ngrams(r, n) for r in rs], len(rs))
        total += (keep_f + del_p + add_f) / 3
    return 100.0 * total / 4


def bleu(preds, refs_per_sentence, order):
    streams = [list(col) for col in zip(*refs_per_sentence)]
    metric = sacrebleu.metrics.BLEU(tokenize="13a", lowercase=True, smooth_method="none",
                                    max_ngram_order=order, effective_order=False)
    return metric.corpus_score(preds, streams).score


def read_lines(path):
    return path.read_text(encoding="utf-8").splitlines()


def load_parallel(d):
    complex_ = read_lines(d / "complex.txt")
    refs = []
    i = 0
    while (d / f"ref.{i}.txt").exists():
        refs.append(read_lines(d / f"ref.{i}.txt"))
        i += 1
    return complex_, [list(r) for r in zip(*refs)]


def corpus_scores(sources, preds, refs):
    per = [sari_sentence(s, p, r) for s, p, r in zip(sources, preds, refs)]
    return {
        "sari": sum(per) / len(per),
        "sari_per_sentence": per,
        "bleu4": bleu(preds, refs, 4),
        "bleu5": bleu(preds, refs, 5),
    }


def main():
    src, refs = load_parallel(ROOT / "fixture20")
    system = read_lines(ROOT / "fixture20" / "system.txt")
    out = {"system": corpus_scores(src, system, refs), "echo": corpus_scores(src, src, refs)}
    (ROOT / "fixture20" / "expected.json").write_text(json.dumps(out, indent=2) + "\n")

    src, refs = load_parallel(ROOT / "echo10")
    out = {
        "echo": corpus_scores(src, src, refs),
        "first_reference": corpus_scores(src, [r[0] for r in refs], refs),
    }
    (ROOT / "echo10" / "expected.json").write_text(json.dumps(out, indent=2) + "\n")

    triples = {
        "species": ("about 95 species are currently accepted .", "about 95 species are currently known .",
                    ["about 95 species are currently known .", "about 95 species are now accepted ."]),
        "identical": ("the cat sat on the mat .", "the cat sat on the mat .", ["the cat sat on the mat ."]),
        "disjoint_single_reference": ("alpha beta gamma", "delta epsilon", ["delta epsilon"]),
    }
    out = {name: sari_sentence(*t) for name, t in triples.items()}
    (ROOT / "sentence_sari.json").write_text(json.dumps(out, indent=2) + "\n")


if __name__ == "__main__":
    main()
