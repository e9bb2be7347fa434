#!/usr/bin/env python3
"""End-to-end smoke test for the seqtag_rs extension module.

Build the module first, then run this script:

    cargo build -p seqtag-python --release
    python3 python/smoke_test.py
"""

import importlib.util
import sys
import tempfile
from importlib.machinery import ExtensionFileLoader
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        ROOT / "target" / profile / "libseqtag_rs.so"
        for profile in ("release", "debug")
    ]
    for path in candidates:
        if path.exists():
            loader = ExtensionFileLoader("seqtag_rs", str(path))
            spec = importlib.util.spec_from_loader("seqtag_rs", loader)
            module = importlib.util.module_from_spec(spec)
            loader.exec_module(module)
            return module
    sys.exit(
        "seqtag_rs cdylib not found; run `cargo build -p seqtag-python --release`"
    )


def surfaces(sentence):
    return [surface for surface, _ in sentence]


def main():
    seqtag = load_module()
    print(f"loaded seqtag_rs {seqtag.__version__}")

    scheme = seqtag.LabelScheme.wnut()
    assert scheme.num_tags() == 37, scheme.num_tags()
    assert len(scheme.types()) == 18
    assert scheme.tag_names()[0] == "O"

    small = seqtag.LabelScheme(["Action", "Reagent"])
    assert small.num_tags() == 5

    corpus = seqtag.generate_synthetic(40, scheme, seed=7)
    assert len(corpus) == 40
    assert seqtag.generate_synthetic(40, scheme, seed=7) == corpus
    n_tokens = sum(len(s) for doc in corpus for s in doc)
    print(f"synthetic corpus: 40 documents, {n_tokens} tokens")

    tagger = seqtag.CrfTagger.train(corpus, scheme, epochs=3, seed=42)
    trace = tagger.loss_trace()
    assert len(trace) == 3 and trace[-1] < trace[0], trace
    print(f"crf trained: {tagger!r}, loss {trace[0]:.3f} -> {trace[-1]:.3f}")

    predicted = [
        [
            [
                (surface, tag)
                for surface, tag in zip(surfaces(s), tagger.tag(surfaces(s)))
            ]
            for s in doc
        ]
        for doc in corpus
    ]
    for doc in predicted:
        for sentence in doc:
            tags = [tag for _, tag in sentence]
            assert seqtag.validate_bio(tags, scheme) == []

    evaluation = seqtag.evaluate(corpus, predicted, scheme)
    precision, recall, f1 = evaluation.micro()
    assert f1 >= 0.95, evaluation.report()
    assert evaluation.repairs() == (0, 0)
    assert len(evaluation.per_type()) == 18
    assert evaluation.report().splitlines()[-1].startswith("avg")
    print(f"evaluation: P={precision:.4f} R={recall:.4f} F1={f1:.4f}")

    with tempfile.TemporaryDirectory() as tmp:
        path = str(Path(tmp) / "model.bin")
        tagger.save(path)
        reloaded = seqtag.CrfTagger.load(path)
        sentence = surfaces(corpus[0][0])
        assert reloaded.tag(sentence) == tagger.tag(sentence)
    print("crf model round-trips through save/load")

    tags = ["O", "B-Action", "I-Action", "O", "B-Reagent"]
    spans = seqtag.tags_to_spans(tags, scheme)
    assert spans == [(1, 3, "Action"), (4, 5, "Reagent")]
    assert seqtag.spans_to_tags(spans, len(tags), scheme) == tags
    broken = ["O", "I-Action"]
    assert seqtag.tags_to_spans(broken, scheme) == [(1, 2, "Action")]
    assert seqtag.validate_bio(broken, scheme) == ["1 O->I-Action"]
    try:
        seqtag.tags_to_spans(broken, scheme, repair=False)
    except ValueError:
        pass
    else:
        raise AssertionError("strict mode accepted an orphan I- tag")
    print("span conversion and BIO validation behave")

    bilstm = seqtag.BilstmTagger.train(
        corpus[:10], scheme, epochs=1, embed_dim=8, hidden_dim=8
    )
    tags = bilstm.tag(surfaces(corpus[0][0]))
    assert len(tags) == len(corpus[0][0])
    assert seqtag.validate_bio(tags, scheme) == []
    print(f"bilstm trained: {bilstm!r}")

    try:
        seqtag.LabelScheme([])
    except ValueError:
        pass
    else:
        raise AssertionError("empty scheme was accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
