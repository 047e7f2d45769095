#!/usr/bin/env python3
"""Regenerates the toy lexicon, vectors and dictionary (deterministic)."""
import random
from pathlib import Path

DIM = 16
HERE = Path(__file__).resolve().parent

TOPICS = {
    "law": ["mahkeme", "yargı", "adalet", "hakim", "savcı", "avukat", "dava", "kanun",
            "ceza hukuku", "medeni hukuk"],
    "trade": ["alıcı", "satıcı", "ticaret", "pazar", "fiyat", "maliyet", "kâr", "zarar",
              "ihracat", "ithalat"],
    "health": ["hastane", "doktor", "hemşire", "hasta", "ilaç", "tedavi", "ameliyat",
               "sağlık", "muayene"],
    "school": ["okul", "öğretmen", "öğrenci", "ders", "sınav", "eğitim", "üniversite",
               "kitap", "yüksek lisans"],
    "nature": ["yağmur", "kar", "rüzgar", "güneş", "bulut", "fırtına", "deniz", "dağ",
               "orman", "nehir"],
}
ISOLATED = ["bilgisayar"]        # far from every topic, ends up a singleton
FULLY_OOV = ["zırhlıkaplumbağa"]  # no constituent in the vectors
MISSING_WORDS = {"lisans"}       # constituent left out of the vectors
DISTRACTORS = ["masa", "sandalye", "kalem", "kapı", "pencere"]


def main():
    rng = random.Random(20240917)
    vectors = {}

    def noisy(center, sigma):
        return [c + rng.gauss(0.0, sigma) for c in center]

    for topic, terms in TOPICS.items():
        center = [rng.gauss(0.0, 1.0) for _ in range(DIM)]
        for term in terms:
            for word in term.split():
                if word in MISSING_WORDS or word in vectors:
                    continue
                vectors[word] = noisy(center, 0.3)
    for word in ISOLATED + DISTRACTORS:
        vectors[word] = [rng.gauss(0.0, 1.0) for _ in range(DIM)]

    lexicon = [t for terms in TOPICS.values() for t in terms] + ISOLATED + FULLY_OOV
    assert len(lexicon) == 50, len(lexicon)
    (HERE / "lexicon.txt").write_text("".join(t + "\n" for t in lexicon), encoding="utf-8")

    lines = [f"{len(vectors)} {DIM}"]
    for word, vec in vectors.items():
        lines.append(word + " " + " ".join(f"{x:.6f}" for x in vec))
    (HERE / "vectors.vec").write_text("\n".join(lines) + "\n", encoding="utf-8")

    dictionary = [
        "mahkeme\tyargı",
        "hakim\tyargıç",
        "avukat\tdavavekili;müdafi",
        "kanun\tyasa;hukuk;mevzuat",
        "dava\tkovuşturma (hukuk)",
        "doktor\thekim",
        "hasta\tmarazlı;sayrı",
        "okul\tmektep",
        "öğretmen\tmuallim;hoca",
        "sınav\timtihan",
        "kâr\tkazanç",
        "yağmur\tyağış",
        "orman\tkoru;ağaçlık",
        "fırtına\tkasırga;bora;tayfun",
        "bulut\tbulut",
        "satırsız başlık",
        "deniz\t",
    ]
    (HERE / "dictionary.tsv").write_text("".join(l + "\n" for l in dictionary), encoding="utf-8")


if __name__ == "__main__":
    main()
