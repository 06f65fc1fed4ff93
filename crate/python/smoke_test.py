"""Smoke test for the rsrag extension module.

    cd crates/py && maturin develop --release
    python python/smoke_test.py
"""

import math
import tempfile

import rsrag


def close(a, b, tol=1e-6):
    return math.isclose(a, b, rel_tol=0, abs_tol=tol)


def metrics():
    refs = ["the cat sat on the mat"]
    assert rsrag.tokenize("The Cat, sat!") == ["the", "cat", "sat"]
    assert close(rsrag.bleu("the cat sat on the mat", refs), 1.0)
    assert close(rsrag.rouge_l("the cat sat on the mat", refs), 1.0)
    assert rsrag.meteor("dog", refs) == 0.0
    assert close(rsrag.fuse_score(0.2, 0.8, 0.25), 0.35)
    report = rsrag.score_corpus([("the cat sat", refs), ("a dog ran", ["a dog ran far"])])
    assert set(report) >= {"bleu1", "bleu4", "meteor", "rouge_l", "cider"}, report
    v = rsrag.mock_embed("hello", dim=32)
    assert len(v) == 32 and close(sum(x * x for x in v), 1.0)
    assert v == rsrag.mock_embed("hello", dim=32)
    try:
        rsrag.fuse_score(0.1, 0.2, 1.5)
    except rsrag.InputError:
        pass
    else:
        raise AssertionError("alpha 1.5 accepted")


def store_roundtrip(tmp):
    s = rsrag.VectorStore(4)
    s.upsert("text", "t1", "r1", [1, 0, 0, 0], {"doc": "one"})
    s.upsert("text", "t2", "r2", [0, 1, 0, 0])
    s.upsert("image", "i1", "r1", [0, 0, 1, 0])
    s.build_index()
    hits = s.search("text", [0.9, 0.1, 0, 0], tau=2, exact=True)
    assert [h["record_id"] for h in hits] == ["r1", "r2"], hits
    sid = s.persist(f"{tmp}/tiny")
    again = rsrag.VectorStore.load(f"{tmp}/tiny")
    assert again.snapshot_id() == sid
    assert again.counts() == s.counts()


def pipeline(tmp):
    ds = rsrag.Dataset.synthetic(40, ["captioning", "vqa_wk"], seed=7)
    ds.write(f"{tmp}/data")
    ds = rsrag.Dataset.load(f"{tmp}/data")
    assert len(ds) == 40
    store = rsrag.VectorStore.ingest(ds, {"embedder": {"dim": 32}})
    p = rsrag.Pipeline(store, "vqa_wk", {"top_k": 3, "exact_search": True})
    ex = ds.examples("vqa_wk")[0]
    out = p.answer(text=ex["query_text"], image_ref=ex["image_ref"])
    assert len(out["retrieval"]["candidates"]) == 3 and out["text"], out
    report = p.run_task("vqa_wk", ds)
    assert 0.0 <= report["metrics"]["bleu1"] <= 1.0, report
    assert isinstance(rsrag.render_report(report), str)
    first = p.run_task("vqa_wk", ds)
    assert report == first
    sweep = p.sweep("vqa_wk", ds, top_k=[1, 3])
    assert len(sweep["cells"]) == 2
    try:
        p.retrieve()
    except rsrag.InputError:
        pass
    else:
        raise AssertionError("empty query accepted")
    return p


def main():
    metrics()
    with tempfile.TemporaryDirectory() as tmp:
        store_roundtrip(tmp)
        p = pipeline(tmp)
    print(f"ok rsrag {rsrag.__version__} config_hash={p.config_hash[:12]}")


if __name__ == "__main__":
    main()
