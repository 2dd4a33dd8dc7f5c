#!/usr/bin/env python3
"""Regenerates the bundled synthetic corpora, lexicons and NER files.

Words are built in a small phonemic alphabet and rendered into five scripts.
Every language has its own function words and suffixes; entity names are
shared across all of them, so a tagger trained on the Bengali-script source
can only transfer through pieces of the names themselves.

    python3 data/generate.py          # rewrites everything under data/
"""

import random
import unicodedata
from pathlib import Path

SEED = 20240611
ROOT = Path(__file__).resolve().parent

CONSONANTS = ["kh", "gh", "ch", "th", "dh", "ph", "bh", "sh",
              "k", "g", "c", "j", "t", "d", "n", "p", "b", "m", "y", "r", "l", "s", "h"]
VOWELS = ["aa", "ii", "uu", "a", "i", "u", "e", "o"]
PHONEMES = sorted(CONSONANTS + VOWELS, key=len, reverse=True)


def phonemes(word):
    out, i = [], 0
    while i < len(word):
        for p in PHONEMES:
            if word.startswith(p, i):
                out.append(p)
                i += len(p)
                break
        else:
            raise ValueError(f"cannot split {word!r}")
    return out


BENGALI_C = dict(k="ক", kh="খ", g="গ", gh="ঘ", c="চ", ch="ছ", j="জ", t="ত", th="থ", d="দ", dh="ধ",
                 n="ন", p="প", ph="ফ", b="ব", bh="ভ", m="ম", y="য", r="র", l="ল", sh="শ", s="স", h="হ")
BENGALI_V = dict(a="অ", aa="আ", i="ই", ii="ঈ", u="উ", uu="ঊ", e="এ", o="ও")
BENGALI_SIGN = dict(a="", aa="া", i="ি", ii="ী", u="ু", uu="ূ", e="ে", o="ো")

OLCHIKI_C = dict(k="ᱠ", kh="ᱠᱷ", g="ᱜ", gh="ᱜᱷ", c="ᱪ", ch="ᱪᱷ", j="ᱡ", t="ᱛ", th="ᱛᱷ", d="ᱫ", dh="ᱫᱷ",
                 n="ᱱ", p="ᱯ", ph="ᱯᱷ", b="ᱵ", bh="ᱵᱷ", m="ᱢ", y="ᱭ", r="ᱨ", l="ᱞ", sh="ᱥ", s="ᱥ", h="ᱦ")
OLCHIKI_V = dict(a="ᱚ", aa="ᱟ", i="ᱤ", ii="ᱤ", u="ᱩ", uu="ᱩ", e="ᱮ", o="ᱳ")

ARABIC_C = dict(k="ڪ", kh="کھ", g="گ", gh="گھ", c="چ", ch="ڇ", j="ج", t="ت", th="ٿ", d="د", dh="ڌ",
                n="ن", p="پ", ph="ڦ", b="ب", bh="ڀ", m="م", y="ي", r="ر", l="ل", sh="ش", s="س", h="ه")
ARABIC_INITIAL = dict(a="ا", aa="آ", i="ا", ii="اي", u="ا", uu="او", e="اي", o="او")
ARABIC_MEDIAL = dict(a="", aa="ا", i="", ii="ي", u="", uu="و", e="ي", o="و")


def render_indic(consonants, vowels, signs):
    def render(ps, prev=None):
        out = []
        for p in ps:
            if p in consonants:
                out.append(consonants[p])
            elif prev is not None and prev in consonants:
                out.append(signs[p])
            else:
                out.append(vowels[p])
            prev = p
        return "".join(out)
    return render


def render_olchiki(ps, prev=None):
    return "".join(OLCHIKI_C.get(p) or OLCHIKI_V[p] for p in ps)


def render_arabic(ps, prev=None):
    out = []
    for p in ps:
        if p in ARABIC_C:
            out.append(ARABIC_C[p])
        elif prev is None:
            out.append(ARABIC_INITIAL[p])
        else:
            out.append(ARABIC_MEDIAL[p])
        prev = p
    return "".join(out)


RENDERERS = {
    "Beng": render_indic(BENGALI_C, BENGALI_V, BENGALI_SIGN),
    # Assamese-style variant of the same script: ra is written U+09F0.
    "Beng-as": render_indic(dict(BENGALI_C, r="ৰ"), BENGALI_V, BENGALI_SIGN),
    # Transliteration variant for the zero-shot pair: four consonants take
    # letters the source never uses.
    "Beng-x": render_indic(dict(BENGALI_C, r="ৰ", b="ৱ", y="য়", sh="ষ"), BENGALI_V, BENGALI_SIGN),
    "Olck": render_olchiki,
    "Arab": render_arabic,
}

# Per-language morphology: each word class takes a stack of suffix slots,
# each filled with the given probability. `share` is the fraction of the
# Bengali content stems the language reuses.
LANGUAGES = {
    "bn": dict(script="Beng", share=1.0,
               noun=[(0.35, ["gulo", "der", "raa"]), (0.6, ["er", "ke", "te", "o"])],
               verb=[(1.0, ["chi", "chhi", "le", "te"]), (0.8, ["lo", "be", "che", "len"])],
               function=["ebong", "theke", "jonno", "shaathe", "kintu", "ei", "sei", "aar", "khub", "naa"]),
    "as": dict(script="Beng-as", share=0.6,
               noun=[(0.35, ["bor", "hot", "khini"]), (0.6, ["ar", "ka", "at", "e"])],
               verb=[(1.0, ["is", "il", "ib"]), (0.8, ["e", "aa", "o", "i"])],
               function=["aaru", "para", "baabe", "logot", "kintu", "ei", "sei", "bahut", "nohoy"]),
    "mni": dict(script="Beng", share=0.15,
                noun=[(0.35, ["sing", "khoy"]), (0.6, ["gi", "bu", "daa", "naa"])],
                verb=[(1.0, ["li", "le", "ge"]), (0.8, ["ye", "re", "ni"])],
                function=["amasung", "dagi", "gidamak", "adubu", "masi", "madu", "yaamna", "natte"]),
    "sat": dict(script="Olck", share=0.15,
                noun=[(0.35, ["ko", "kin"]), (0.6, ["ren", "ke", "re", "taa"])],
                verb=[(1.0, ["akaan", "en", "le"]), (0.8, ["aa", "ko", "taa"])],
                function=["aar", "khon", "laagit", "sanaam", "nui", "uni", "baan", "hoo"]),
    "sd": dict(script="Arab", share=0.3,
               noun=[(0.35, ["an", "uun"]), (0.6, ["jo", "khe", "me", "jii"])],
               verb=[(1.0, ["and", "yo", "ii"]), (0.8, ["o", "aa", "un"])],
               function=["ain", "khaan", "laai", "saan", "hii", "uhe", "naa", "paar"]),
}

ZEROSHOT_TARGET = dict(script="Beng-x", share=0.5,
                       noun=[(0.35, ["bor", "hot", "khini"]), (0.6, ["ar", "ka", "at", "e"])],
                       verb=[(1.0, ["is", "il", "ib"]), (0.8, ["e", "aa", "o", "i"])],
                       function=["aaru", "para", "baabe", "logot", "kintu", "ei", "sei", "bahut", "nohoy"])

# Names in argument position are usually case-marked.
ENTITY_CASE_P = 0.85

ORG_HEADS = ["samiti", "sangha", "parishad", "kompaani", "bidyaalay"]


def syllable(rng):
    return [rng.choice(CONSONANTS), rng.choice(VOWELS)]


def make_stem(rng, syllables):
    ps = []
    for _ in range(syllables):
        ps += syllable(rng)
    if rng.random() < 0.3:
        ps.append(rng.choice(["n", "m", "l", "r", "k", "t", "s"]))
    return "".join(ps)


def distinct_stems(rng, n, lo, hi, taken):
    out = []
    while len(out) < n:
        s = make_stem(rng, rng.randint(lo, hi))
        if s not in taken:
            taken.add(s)
            out.append(s)
    return out


def zipf_weights(n, s=1.05):
    return [1.0 / (r + 1) ** s for r in range(n)]


class Language:
    def __init__(self, code, spec, base_nouns, base_verbs, rng, taken):
        self.code = code
        self.script = spec["script"].split("-")[0]
        self.render_ps = RENDERERS[spec["script"]]
        self.noun_slots = spec["noun"]
        self.verb_slots = spec["verb"]
        self.function = spec["function"]
        k = round(spec["share"] * len(base_nouns))
        self.nouns = base_nouns[:k] + distinct_stems(rng, len(base_nouns) - k, 1, 3, taken)
        k = round(spec["share"] * len(base_verbs))
        self.verbs = base_verbs[:k] + distinct_stems(rng, len(base_verbs) - k, 1, 2, taken)
        rng.shuffle(self.nouns)
        rng.shuffle(self.verbs)
        self.noun_w = zipf_weights(len(self.nouns))
        self.verb_w = zipf_weights(len(self.verbs))

    def word(self, stem, suffixes=()):
        """Rendered word and its morphs."""
        prev = None
        morphs = []
        for part in [stem, *suffixes]:
            ps = phonemes(part)
            morphs.append(nfc(self.render_ps(ps, prev=prev)))
            prev = ps[-1]
        whole = "".join(morphs)
        assert whole == nfc(whole) and all(morphs), (stem, suffixes)
        return whole, morphs

    @staticmethod
    def fill(slots, rng):
        return [rng.choice(options) for p, options in slots if rng.random() < p]

    def case(self, rng):
        options = self.noun_slots[-1][1]
        return [rng.choice(options)] if rng.random() < ENTITY_CASE_P else []

    def noun(self, rng):
        stem = rng.choices(self.nouns, self.noun_w)[0]
        return self.word(stem, self.fill(self.noun_slots, rng))

    def verb(self, rng):
        stem = rng.choices(self.verbs, self.verb_w)[0]
        return self.word(stem, self.fill(self.verb_slots, rng))

    def function_word(self, rng):
        return self.word(rng.choice(self.function))


def nfc(s):
    return unicodedata.normalize("NFC", s)


class Entities:
    def __init__(self, rng, taken):
        self.given = distinct_stems(rng, 80, 2, 3, taken)
        self.family = distinct_stems(rng, 30, 2, 3, taken)
        self.places = distinct_stems(rng, 60, 2, 4, taken)
        self.orgs = distinct_stems(rng, 40, 2, 3, taken)

    def mention(self, rng):
        kind = rng.choices(["PER", "LOC", "ORG"], [0.45, 0.35, 0.2])[0]
        if kind == "PER":
            words = [rng.choice(self.given)]
            if rng.random() < 0.5:
                words.append(rng.choice(self.family))
        elif kind == "LOC":
            words = [rng.choice(self.places)]
        else:
            words = [rng.choice(self.orgs), rng.choice(ORG_HEADS)]
        return kind, words


def filler(lang, rng):
    r = rng.random()
    if r < 0.55:
        return lang.noun(rng)
    if r < 0.85:
        return lang.function_word(rng)
    return lang.verb(rng)


def plain_sentence(lang, ents, rng, lexicon):
    words = []
    for _ in range(rng.randint(5, 12)):
        if rng.random() < 0.1:
            _, names = ents.mention(rng)
            for i, stem in enumerate(names):
                words.append(lang.word(stem, lang.case(rng) if i == len(names) - 1 else []))
        else:
            words.append(filler(lang, rng))
    words.append(lang.verb(rng))
    for w, morphs in words:
        if len(morphs) > 1:
            lexicon[w] = morphs
    return " ".join(w for w, _ in words)


def ner_sentence(lang, ents, rng):
    pairs = []
    mentions = rng.randint(1, 3)
    slots = rng.randint(3, 7)
    order = ["E"] * mentions + ["F"] * slots
    rng.shuffle(order)
    for slot in order:
        if slot == "F":
            pairs.append((filler(lang, rng)[0], "O"))
            continue
        kind, names = ents.mention(rng)
        for i, stem in enumerate(names):
            suffixes = lang.case(rng) if i == len(names) - 1 else []
            tag = ("B-" if i == 0 else "I-") + kind
            pairs.append((lang.word(stem, suffixes)[0], tag))
    pairs.append((lang.verb(rng)[0], "O"))
    return pairs


def write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def main():
    rng = random.Random(SEED)
    taken = set(ORG_HEADS)
    ents = Entities(rng, taken)
    base_nouns = distinct_stems(rng, 300, 1, 3, taken)
    base_verbs = distinct_stems(rng, 60, 1, 2, taken)
    langs = {code: Language(code, spec, base_nouns, base_verbs, rng, taken) for code, spec in LANGUAGES.items()}

    tok_lines = []
    for code, n in [("bn", 700), ("as", 700), ("mni", 700), ("sat", 700), ("sd", 700)]:
        tok_lines += [plain_sentence(langs[code], ents, rng, {}) for _ in range(n)]
    rng.shuffle(tok_lines)
    write(ROOT / "corpora" / "tokenizer_train.txt", "\n".join(tok_lines) + "\n")

    for code in ["mni", "sat", "as", "sd"]:
        lexicon = {}
        lines = [plain_sentence(langs[code], ents, rng, lexicon) for _ in range(250)]
        write(ROOT / "corpora" / f"{code}.txt", "\n".join(lines) + "\n")
        entries = sorted(lexicon.items())
        rng.shuffle(entries)
        lex = sorted(entries[:200])
        write(ROOT / "lexicons" / f"{code}.tsv", "".join(f"{w}\t{'+'.join(m)}\n" for w, m in lex))

    write(ROOT / "ner" / "bn.train.conll", conll(ner_sentence(langs["bn"], ents, rng) for _ in range(800)))
    for code in ["as", "mni", "sat", "sd"]:
        write(ROOT / "ner" / f"{code}.test.conll", conll(ner_sentence(langs[code], ents, rng) for _ in range(200)))
    zeroshot_pair()


def zeroshot_pair():
    """Source and target share entities but not script. Tokenizers only see
    source text."""
    rng = random.Random(SEED + 7)
    taken = set(ORG_HEADS)
    ents = Entities(rng, taken)
    nouns = distinct_stems(rng, 300, 1, 3, taken)
    verbs = distinct_stems(rng, 60, 1, 2, taken)
    src = Language("src", LANGUAGES["bn"], nouns, verbs, rng, taken)
    tgt = Language("tgt", ZEROSHOT_TARGET, nouns, verbs, rng, taken)
    lines = [plain_sentence(src, ents, rng, {}) for _ in range(1500)]
    rng.shuffle(lines)
    out = ROOT / "zeroshot"
    write(out / "src.txt", "\n".join(lines) + "\n")
    write(out / "src.train.conll", conll(ner_sentence(src, ents, rng) for _ in range(800)))
    write(out / "tgt.test.conll", conll(ner_sentence(tgt, ents, rng) for _ in range(300)))


def conll(sentences):
    return "\n".join("".join(f"{w}\t{t}\n" for w, t in s) for s in sentences)


if __name__ == "__main__":
    main()
