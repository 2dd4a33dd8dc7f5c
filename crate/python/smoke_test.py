"""Imports the compiled extension and exercises each binding once.

    cargo build -p toklab-py --features extension-module
    python3 python/smoke_test.py

TOKLAB_PY_LIB may point at the shared library; otherwise the newest build
under target/ is used.
"""

import importlib.util
import os
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def find_library():
    if os.environ.get("TOKLAB_PY_LIB"):
        return Path(os.environ["TOKLAB_PY_LIB"])
    names = ["libtoklab_py.so", "libtoklab_py.dylib", "toklab_py.dll"]
    found = [ROOT / "target" / p / n for p in ("debug", "release") for n in names]
    found = [p for p in found if p.exists()]
    if not found:
        sys.exit("no built toklab_py library under target/; run cargo build -p toklab-py first")
    return max(found, key=lambda p: p.stat().st_mtime)


def load(tmp):
    lib = find_library()
    suffix = ".pyd" if lib.suffix == ".dll" else ".so"
    dest = Path(tmp) / f"toklab_py{suffix}"
    shutil.copy(lib, dest)
    spec = importlib.util.spec_from_file_location("toklab_py", dest)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def main():
    with tempfile.TemporaryDirectory() as tmp:
        tk = load(tmp)
        lines = (ROOT / "data/corpora/mni.txt").read_text(encoding="utf-8").splitlines()

        bpe = tk.Tokenizer.train_bpe(lines, 300)
        uni = tk.Tokenizer.train_unigram(lines, 300)
        char = tk.Tokenizer.char("grapheme")
        for tok in (bpe, uni, char):
            for line in lines[:50]:
                pieces = [p for word in tok.encode(line) for p in word]
                assert tk.decode(pieces) == tk.normalize(line), (tok.name, line)
        assert bpe.vocab_size == 300 and bpe.kind == "bpe"
        assert char.vocab_size is None

        path = Path(tmp) / "uni.json"
        uni.save(str(path))
        assert tk.Tokenizer.load(str(path)).fingerprint == uni.fingerprint

        stats = {t.name: tk.intrinsic(t, lines) for t in (bpe, uni, char)}
        assert stats["char-grapheme"]["tokens_per_sentence"] > stats["bpe-300"]["tokens_per_sentence"]

        train = [(["ravi", "went", "to", "delhi"], ["B-PER", "O", "O", "B-LOC"])] * 3
        tagger = tk.Tagger.train(train, uni, epochs=5, seed=1)
        assert tagger.predict(uni, ["ravi", "went", "to", "delhi"]) == ["B-PER", "O", "O", "B-LOC"]
        again = tk.Tagger.from_json(tagger.to_json())
        assert again.tokenizer_id == uni.fingerprint
        try:
            tagger.predict(bpe, ["ravi"])
        except ValueError as e:
            assert "mismatch" in str(e)
        else:
            raise AssertionError("tokenizer mismatch accepted")

        s = tk.score([["B-LOC", "O", "O"]], [["O", "O", "O"]])
        assert s["f1"] == 0.0 and abs(s["acc"] - 2 / 3) < 1e-12
    print("toklab_py smoke test passed")


if __name__ == "__main__":
    main()
