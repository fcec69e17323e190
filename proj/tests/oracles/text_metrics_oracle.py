#!/usr/bin/env python3
"""Reference scorer used to freeze tests/data/metric_golden.jsonl.

Written independently of the C++ scorer: ROUGE via itertools n-gram counting
and a textbook LCS table, SARI following the original Counter-based
formulation (keep/delete on reference-replicated counts, add on sets) with
empty-set precision/recall defined as 1.

Usage: text_metrics_oracle.py corpus.jsonl > golden.jsonl
"""
import json
import string
import sys
from collections import Counter


def tokenize(text):
    out = []
    for raw in text.lower().split():
        tok = raw.strip(string.punctuation)
        if tok:
            out.append(tok)
    return out


def ngrams(tokens, n):
    return [" ".join(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def f1(p, r):
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def rouge_n(cand, ref, n):
    c, r = Counter(ngrams(cand, n)), Counter(ngrams(ref, n))
    if not c or not r:
        return 0.0
    overlap = sum((c & r).values())
    if overlap == 0:
        return 0.0
    return f1(overlap / sum(c.values()), overlap / sum(r.values()))


def lcs(a, b):
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[len(a)][len(b)]


def rouge_l(cand, ref):
    if not cand or not ref:
        return 0.0
    length = lcs(cand, ref)
    if length == 0:
        return 0.0
    return f1(length / len(cand), length / len(ref))


def ratio(num, den_set_size):
    return 1.0 if den_set_size == 0 else num / den_set_size


def sari_ngram(sgrams, cgrams, rgramslist, numref):
    rgramcounter = Counter(g for rgrams in rgramslist for g in rgrams)
    sgramcounter = Counter(sgrams)
    cgramcounter = Counter(cgrams)
    s_rep = Counter({g: c * numref for g, c in sgramcounter.items()})
    c_rep = Counter({g: c * numref for g, c in cgramcounter.items()})

    keep = s_rep & c_rep
    keep_good = keep & rgramcounter
    keep_all = s_rep & rgramcounter
    p_num = sum(keep_good[g] / keep[g] for g in keep)
    r_num = sum(keep_good[g] / keep_all[g] for g in keep_all if g in keep)
    keep_p = ratio(p_num, len(keep))
    keep_r = ratio(r_num, len(keep_all))
    keep_score = f1(keep_p, keep_r)

    delete = s_rep - c_rep
    delete_good = delete - rgramcounter
    del_num = sum(delete_good[g] / delete[g] for g in delete)
    del_p = ratio(del_num, len(delete))

    added = set(cgramcounter) - set(sgramcounter)
    added_good = added & set(rgramcounter)
    added_all = set(rgramcounter) - set(sgramcounter)
    add_p = ratio(len(added_good), len(added))
    add_r = ratio(len(added_good), len(added_all))
    add_score = f1(add_p, add_r)
    return keep_score, del_p, add_score


def sari(source, candidate, references):
    s, c = tokenize(source), tokenize(candidate)
    rs = [tokenize(r) for r in references]
    keeps, dels, adds = [], [], []
    for n in range(1, 5):
        k, d, a = sari_ngram(ngrams(s, n), ngrams(c, n),
                             [ngrams(r, n) for r in rs], len(rs))
        keeps.append(k)
        dels.append(d)
        adds.append(a)
    return 100.0 * (sum(keeps) / 4 + sum(dels) / 4 + sum(adds) / 4) / 3


def main():
    with open(sys.argv[1]) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            cand = tokenize(rec["candidate"])
            ref = tokenize(rec["references"][0])
            r1 = rouge_n(cand, ref, 1)
            r2 = rouge_n(cand, ref, 2)
            rl = rouge_l(cand, ref)
            rec["expected"] = {
                "rouge1": r1,
                "rouge2": r2,
                "rougeL": rl,
                "rouge_avg": (r1 + r2 + rl) / 3,
                "sari": sari(rec["source"], rec["candidate"], rec["references"]),
            }
            print(json.dumps(rec))


if __name__ == "__main__":
    main()
