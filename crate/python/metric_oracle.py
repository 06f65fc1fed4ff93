"""Stdlib-only reference values for the text metrics.

Recomputes the fixed metric cases from first principles and, when the
extension module is importable, checks the library agrees.

    python python/metric_oracle.py
"""

import math
import re
from collections import Counter


def tok(s):
    return re.findall(r"[a-z0-9]+", s.lower())


def ngrams(t, n):
    return [tuple(t[i : i + n]) for i in range(len(t) - n + 1)]


def bleu(c, refs, n=4):
    logp = 0.0
    for k in range(1, n + 1):
        cg = Counter(ngrams(c, k))
        best = Counter()
        for r in refs:
            best |= Counter(ngrams(r, k))
        hit = sum(min(v, best[g]) for g, v in cg.items())
        total = sum(cg.values())
        if hit == 0:
            return 0.0
        logp += math.log(hit / total) / n
    ref_len = min((abs(len(r) - len(c)), len(r)) for r in refs)[1]
    bp = 1.0 if len(c) > ref_len else math.exp(1 - ref_len / len(c))
    return bp * math.exp(logp)


def lcs(a, b):
    row = [0] * (len(b) + 1)
    for x in a:
        prev = 0
        for j, y in enumerate(b, 1):
            cur = row[j]
            row[j] = prev + 1 if x == y else max(row[j], row[j - 1])
            prev = cur
    return row[-1]


def rouge_l(c, refs, beta=1.2):
    best = 0.0
    for r in refs:
        l = lcs(c, r)
        if l:
            p, q = l / len(c), l / len(r)
            best = max(best, (1 + beta**2) * p * q / (q + beta**2 * p))
    return best


def meteor(c, refs, alpha=0.9, beta=3.0, gamma=0.5):
    best = 0.0
    for r in refs:
        free = list(range(len(r)))
        pos = []
        for w in c:
            j = next((j for j in free if r[j] == w), None)
            if j is not None:
                free.remove(j)
            pos.append(j)
        m = sum(p is not None for p in pos)
        if not m:
            continue
        chunks = sum(
            1
            for i, p in enumerate(pos)
            if p is not None and (i == 0 or pos[i - 1] is None or pos[i - 1] + 1 != p)
        )
        p, q = m / len(c), m / len(r)
        f = p * q / (alpha * p + (1 - alpha) * q)
        best = max(best, f * (1 - gamma * (chunks / m) ** beta))
    return best


def cider(items):
    n_docs = len(items)
    total = 0.0
    for c, refs in items:
        score = 0.0
        for n in range(1, 5):
            df = Counter()
            for _, rs in items:
                df.update({g for r in rs for g in ngrams(r, n)})

            def vec(t):
                cnt = Counter(ngrams(t, n))
                size = sum(cnt.values())
                return {g: v / size * math.log(n_docs / max(df[g], 1)) for g, v in cnt.items()}

            vc = vec(c)
            for r in refs:
                vr = vec(r)
                dot = sum(x * vr.get(g, 0.0) for g, x in vc.items())
                norm = math.sqrt(sum(x * x for x in vc.values())) * math.sqrt(sum(x * x for x in vr.values()))
                score += (dot / norm if norm else 0.0) / len(refs) / 4
        total += score
    return 10 * total / n_docs


CASES = [
    ("BLEU-1", lambda: bleu(tok("the cat sat"), [tok("the cat sat on the mat")], 1), 0.367879),
    ("ROUGE-L", lambda: rouge_l(tok("the cat sat"), [tok("the cat on the mat sat")]), 0.628866),
    ("METEOR", lambda: meteor(tok("a b c"), [tok("a b c")]), 0.981481),
    ("CIDEr", lambda: cider([(tok("red tower"), [tok("red tower")]), (tok("blue lake"), [tok("blue lake")])]), 5.0),
    ("CIDEr single item", lambda: cider([(tok("red tower"), [tok("red tower")])]), 0.0),
]


def library_values():
    try:
        import rsrag
    except ImportError:
        return None
    return {
        "BLEU-1": rsrag.bleu("the cat sat", ["the cat sat on the mat"], 1),
        "ROUGE-L": rsrag.rouge_l("the cat sat", ["the cat on the mat sat"]),
        "METEOR": rsrag.meteor("a b c", ["a b c"]),
        "CIDEr": rsrag.cider([("red tower", ["red tower"]), ("blue lake", ["blue lake"])]),
        "CIDEr single item": rsrag.cider([("red tower", ["red tower"])]),
    }


def main():
    lib = library_values()
    ok = True
    for name, fn, want in CASES:
        got = fn()
        good = abs(got - want) <= 1e-6
        line = f"{'PASS' if good else 'FAIL'} {name}: oracle {got:.6f}, expected {want}"
        if lib is not None:
            agree = abs(lib[name] - got) <= 1e-9
            good &= agree
            line += f", library {lib[name]:.6f}{'' if agree else ' (disagrees)'}"
        ok &= good
        print(line)
    raise SystemExit(0 if ok else 1)


if __name__ == "__main__":
    main()
