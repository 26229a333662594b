#!/usr/bin/env python3
"""Prepare MovieLens 100K inputs and an offline film category index.

The RecBole wheel on PyPI bundles MovieLens 100K together with a
Freebase-linked knowledge graph (KB4Rec). This script extracts both and
writes:

  data/ml-100k/u.data          user \\t item \\t rating \\t timestamp
  data/ml-100k/u.item          id|Title (Year)|... (MovieLens u.item layout, UTF-8)
  data/wiki/film_index.tsv     page_id \\t title \\t cat1;cat2;...

The index mimics a Wikipedia title/category snapshot: film pages are named
the way encyclopedia articles are ("The Usual Suspects", "Heat (1995 film)"),
categories follow encyclopedia naming ("1995 films", "Films directed by X"),
and a few non-film pages share plain titles with films so that the
keyword tie-break has real work to do. Freebase entity ids stand in for
the names of people, companies and awards.

MovieLens may not be redistributed, so the generated files stay out of git.
"""

import argparse
import collections
import hashlib
import io
import pathlib
import re
import subprocess
import sys
import tempfile
import zipfile

RECBOLE = "recbole==1.2.1"
MEMBER = "recbole/dataset_example/ml-100k/"

ARTICLES = ("The", "A", "An")

GENRE_CATEGORY = {
    "Action": "Action films",
    "Adventure": "Adventure films",
    "Animation": "Animated films",
    "Children's": "Children's films",
    "Comedy": "Comedy films",
    "Crime": "Crime films",
    "Documentary": "Documentary films",
    "Drama": "Drama films",
    "Fantasy": "Fantasy films",
    "Film-Noir": "Film noir",
    "Horror": "Horror films",
    "Musical": "Musical films",
    "Mystery": "Mystery films",
    "Romance": "Romance films",
    "Sci-Fi": "Science fiction films",
    "Thriller": "Thriller films",
    "War": "War films",
    "Western": "Western (genre) films",
}

# Freebase relation -> category name template.
RELATION_CATEGORY = {
    "film.film.genre": "{} films",
    "film.film.directed_by": "Films directed by {}",
    "film.film.written_by": "Films with screenplays by {}",
    "film.film.produced_by": "Films produced by {}",
    "film.film.cinematography": "Films whose cinematographer was {}",
    "film.film.production_companies": "{} productions",
    "film.film.language": "{}-language works",
    "film.film.country": "Works from {}",
    "film.film.award_won": "Winners of {}",
    "film.film.award_nomination": "Nominees for {}",
    "film.film.subjects": "Works about {}",
}

DECOY_CATEGORIES = [
    ["Disambiguation pages", "English words"],
    ["Novels adapted into other media", "American novels"],
    ["Songs", "Singles"],
    ["Albums", "English-language albums"],
]


def fetch_wheel(dest: pathlib.Path) -> pathlib.Path:
    subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps",
                    "-d", str(dest), RECBOLE], check=True)
    return next(dest.glob("recbole-*.whl"))


def read_member(wheel: zipfile.ZipFile, name: str) -> list[list[str]]:
    text = wheel.read(MEMBER + name).decode("utf-8")
    rows = [line.split("\t") for line in text.splitlines()]
    return rows[1:]


def rotate_article(title: str) -> str:
    for art in ARTICLES:
        suffix = ", " + art
        if title.endswith(suffix):
            return art + " " + title[: -len(suffix)]
    return title


def encyclopedia_title(raw: str) -> str:
    # "Double vie de Veronique, La (Double Life of Veronique, The)" -> English alias
    m = re.fullmatch(r"(.*?)\s*\(([^()]*)\)", raw)
    if m and not re.fullmatch(r"\d{4}", m.group(2)):
        return rotate_article(m.group(2).strip())
    return rotate_article(raw.strip())


def bucket(key: str, mod: int) -> int:
    return int(hashlib.sha1(key.encode()).hexdigest(), 16) % mod


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--wheel", type=pathlib.Path, help="use a local recbole wheel")
    ap.add_argument("--out", type=pathlib.Path,
                    default=pathlib.Path(__file__).resolve().parent.parent / "data")
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        wheel_path = args.wheel or fetch_wheel(pathlib.Path(tmp))
        with zipfile.ZipFile(wheel_path) as wheel:
            inter = read_member(wheel, "ml-100k.inter")
            items = read_member(wheel, "ml-100k.item")
            links = read_member(wheel, "ml-100k.link")
            kg = read_member(wheel, "ml-100k.kg")

    ml_dir = args.out / "ml-100k"
    wiki_dir = args.out / "wiki"
    ml_dir.mkdir(parents=True, exist_ok=True)
    wiki_dir.mkdir(parents=True, exist_ok=True)

    with open(ml_dir / "u.data", "w", encoding="utf-8") as f:
        for user, item, rating, ts in inter:
            f.write(f"{user}\t{item}\t{int(float(rating))}\t{int(float(ts))}\n")

    titles = {}
    with open(ml_dir / "u.item", "w", encoding="utf-8") as f:
        for item_id, title, year, genres in items:
            full = f"{title} ({year})" if year else title
            titles[item_id] = (title, year, genres.split())
            f.write(f"{item_id}|{full}||||\n")

    facts = collections.defaultdict(list)
    for head, rel, tail in kg:
        facts[head].append((rel, tail))

    # Sequel/prequel chains become one "film series" category per chain.
    parent = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for head, rel, tail in kg:
        if rel in ("film.film.sequel", "film.film.prequel"):
            a, b = find(head), find(tail)
            if a != b:
                parent[max(a, b)] = min(a, b)

    entity_of = {item: ent for item, ent in links}
    base_count = collections.Counter(
        encyclopedia_title(titles[i][0]) for i in entity_of if i in titles)

    pages = {}
    used_titles = set()
    decoys = []
    for item in sorted(entity_of, key=int):
        if item not in titles:
            continue
        ent = entity_of[item]
        if ent in pages:
            continue
        raw, year, genres = titles[item]
        base = encyclopedia_title(raw)
        if base_count[base] > 1 and year:
            page_title = f"{base} ({year} film)"
        elif bucket(ent, 4) == 0:
            page_title = f"{base} (film)"
            decoys.append((base, DECOY_CATEGORIES[bucket(ent + "d", len(DECOY_CATEGORIES))]))
        else:
            page_title = base
        if page_title in used_titles:
            continue
        used_titles.add(page_title)

        cats = []
        if year:
            cats.append(f"{year} films")
            cats.append(f"{year[:3]}0s films")
        cats.extend(GENRE_CATEGORY[g] for g in genres if g in GENRE_CATEGORY)
        for rel, tail in facts.get(ent, []):
            if rel in RELATION_CATEGORY:
                cats.append(RELATION_CATEGORY[rel].format(tail))
        if ent in parent:
            cats.append(f"Film series {find(ent)}")
        pages[ent] = (page_title, list(dict.fromkeys(cats)))

    with open(wiki_dir / "film_index.tsv", "w", encoding="utf-8") as f:
        for ent, (title, cats) in pages.items():
            f.write(f"{ent}\t{title}\t{';'.join(cats)}\n")
        for n, (title, cats) in enumerate(decoys):
            if title not in used_titles:
                f.write(f"decoy.{n}\t{title}\t{';'.join(cats)}\n")

    distinct = {c for _, cats in pages.values() for c in cats}
    print(f"ratings: {len(inter)}  items: {len(items)}  film pages: {len(pages)}  "
          f"decoys: {len(decoys)}  distinct categories: {len(distinct)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
