#!/usr/bin/env python3
"""Writes the synthetic micro-benchmark: a KB, entity embeddings, ten
tables with ground truth, and mock client fixtures.

The fixture prompts are written from the prompt templates directly, so a
template change in the pipeline shows up as missing fixture entries.

    python3 bench/generate.py            # writes next to this script
"""

import itertools
import json
import random
from pathlib import Path

SEED = 20231015
DIM = 16
MEMBERS = 14
DECOYS = 4
TABLE_ROWS = 8
SEED_ROWS = 3
POOL = 5
GENERATIONS = 12
# rows at or past this index lose their last KB triple, so gap filling
# has to go to the mock services
DROP_FROM = 5

OUT = Path(__file__).resolve().parent

SYLLABLES = [
    "al", "bar", "cor", "dun", "el", "fen", "gar", "hal", "is", "jor", "kel", "lor", "mar", "nor",
    "or", "pel", "quin", "ros", "sal", "tor", "ul", "val", "wen", "yar", "zan", "bri", "cas", "dor",
    "fal", "gil", "han", "lin", "mor", "ner", "ran", "sen", "tal", "ven", "wil", "ber",
]
FIRST = ["Ada", "Bruno", "Clara", "Dmitri", "Elena", "Farid", "Greta", "Hugo", "Ines", "Jonas", "Kira",
         "Lukas", "Mira", "Nadia", "Oskar", "Petra", "Rafael", "Sofia", "Tomas", "Vera", "Wanda", "Yusuf"]

COUNTRIES = ["Norvia", "Estmark", "Caldonia", "Veloria", "Ruthen", "Ardania", "Belmora", "Tessaly"]
GENRES = ["shoegaze", "krautrock", "synth-pop", "post-punk", "dream pop"]
MOVEMENTS = ["Luminism", "Vortism", "Tonal Realism", "New Geometry"]

# (slug, type label, name pattern, properties, unlinked column)
# property: (label, kind, generator key, unit)
DOMAINS = [
    ("rivers", "river", "{} River",
     [("country", "e", "country", None), ("length", "n", "length_km", "km"), ("source elevation", "n", "elev_m", "m")],
     None),
    ("mountains", "mountain", "Mount {}",
     [("country", "e", "country", None), ("elevation", "n", "peak_m", "m"), ("first ascent", "t", "year_1800", None)],
     None),
    ("novelists", "human", "{person}",
     [("country of citizenship", "e", "country", None), ("date of birth", "t", "birth_date", None),
      ("pseudonym", "s", "pseudonym", None)],
     None),
    ("cities", "city", "{}",
     [("country", "e", "country", None), ("population", "n", "pop_thousand", "thousand"),
      ("inception", "t", "year_1200", None)],
     ("nickname", "nickname")),
    ("bands", "band", "The {}s",
     [("country of origin", "e", "country", None), ("inception", "t", "year_1960", None),
      ("genre", "e", "genre", None)],
     ("signature song", "song")),
    ("films", "film", "{} Nights",
     [("country of origin", "e", "country", None), ("publication date", "t", "year_1950", None),
      ("duration", "n", "minutes", None)],
     None),
    ("painters", "human", "{person}",
     [("country of citizenship", "e", "country", None), ("date of birth", "t", "birth_date", None),
      ("movement", "e", "movement", None)],
     None),
    ("lakes", "lake", "Lake {}",
     [("country", "e", "country", None), ("surface elevation", "n", "elev_m", "m"), ("maximum depth", "n", "depth_m", "m")],
     None),
    ("clubs", "football club", "{} FC",
     [("country", "e", "country", None), ("inception", "t", "year_1860", None), ("home ground", "s", "ground", None)],
     ("supporters' name", "fans")),
    ("bridges", "bridge", "{} Bridge",
     [("country", "e", "country", None), ("length", "n", "length_m", "m"), ("date of official opening", "t", "year_1850", None)],
     None),
]

SENTENCE = {
    "country": "{s} is located in {v}, and the {t} is one of the best known in {v}.",
    "country of citizenship": "{s} was a {t} and a citizen of {v} who worked in {v} for most of their life.",
    "country of origin": "{s} is a {t} from {v}, and the {t} is widely known across {v}.",
    "length": "The {t} {s} has a total length of {v} according to official surveys of the {t}.",
    "source elevation": "The {t} {s} rises at a source elevation of {v} above sea level.",
    "elevation": "{s} is a {t} with a summit elevation of {v} above sea level.",
    "first ascent": "The first ascent of the {t} {s} was made in {v} by a small party.",
    "date of birth": "{s} was born on {v} and later became a well known {t}.",
    "pseudonym": "{s} is a {t} who wrote under the pseudonym {v} for many years.",
    "population": "The {t} of {s} has a population of {v} residents according to the census.",
    "inception": "{s} is a {t} founded in {v} and the {t} has existed since {v}.",
    "genre": "{s} is a {t} whose music is usually described as {v} by critics of the {t}.",
    "publication date": "{s} is a {t} first released in {v} and the {t} premiered in {v}.",
    "duration": "The {t} {s} has a running time of {v} minutes in its theatrical cut.",
    "movement": "{s} was a {t} associated with {v}, and the {t} helped shape {v}.",
    "surface elevation": "The {t} {s} lies at a surface elevation of {v} above sea level.",
    "maximum depth": "The {t} {s} reaches a maximum depth of {v} at its deepest point.",
    "home ground": "{s} is a {t} whose home ground is {v}, where the {t} plays its matches.",
    "date of official opening": "The {t} {s} was officially opened in {v} after years of construction.",
    "nickname": "The {t} {s} is often known by the nickname {v} among its residents.",
    "signature song": "The {t} {s} is best known for the signature song {v} played at every show.",
    "supporters' name": "Supporters of the {t} {s} call themselves {v} at every home match.",
}

NOISE = [
    "Fans discuss {v} merchandise and ticket prices on an online forum.",
    "A cooking blog lists {v} among its favourite weekend recipes.",
    "Shop now for {v} phone cases with free shipping.",
]


class Ids:
    def __init__(self):
        self.next_q = 100
        self.next_p = 1

    def q(self):
        self.next_q += 1
        return f"Q{self.next_q}"

    def p(self):
        self.next_p += 1
        return f"P{self.next_p}"


def word(rng, used, n=2):
    while True:
        w = "".join(rng.choice(SYLLABLES) for _ in range(n)).capitalize()
        if w.lower() not in used:
            used.add(w.lower())
            return w


def value(rng, key, used):
    if key == "length_km":
        return ("n", str(rng.randrange(80, 4200)), "km")
    if key == "elev_m":
        return ("n", str(rng.randrange(200, 2400)), "m")
    if key == "peak_m":
        return ("n", str(rng.randrange(1800, 6900)), "m")
    if key == "depth_m":
        return ("n", str(rng.randrange(12, 600)), "m")
    if key == "length_m":
        return ("n", str(rng.randrange(120, 2900)), "m")
    if key == "pop_thousand":
        return ("n", str(rng.randrange(40, 3500)), "thousand")
    if key == "minutes":
        return ("n", str(rng.randrange(80, 190)), None)
    if key.startswith("year_"):
        lo = int(key.split("_")[1])
        return ("t", str(rng.randrange(lo, lo + 120)), None)
    if key == "birth_date":
        return ("t", f"{rng.randrange(1820, 1990)}-{rng.randrange(1, 13):02d}-{rng.randrange(1, 29):02d}", None)
    if key == "pseudonym":
        return ("s", f"{rng.choice(FIRST)} {word(rng, used)}", None)
    if key == "ground":
        return ("s", f"{word(rng, used)} Park", None)
    raise KeyError(key)


def free_text(rng, kind, used):
    if kind == "nickname":
        return f"The {word(rng, used)} City"
    if kind == "song":
        return f"{word(rng, used)} {rng.choice(['Lights', 'Rain', 'Road', 'Heart'])}"
    return f"The {word(rng, used)}s"


def cell_text(kb_value):
    kind, v, unit = kb_value
    if kind == "n" and unit:
        return f"{v} {unit}"
    if kind == "t":
        return v[:4]
    return v


def main():
    rng = random.Random(SEED)
    ids = Ids()
    used = set()
    entities = {}  # id -> (label, aliases)
    types = []  # (entity, type)
    subclasses = []
    properties = {}  # label -> id
    triples = []  # (s, p, kind, value, unit)
    vectors = {}

    def entity(label, aliases=()):
        e = ids.q()
        entities[e] = (label, list(aliases))
        used.add(label.lower())
        return e

    def prop(label):
        if label not in properties:
            properties[label] = ids.p()
        return properties[label]

    def gauss(center=None, scale=1.0):
        v = [rng.gauss(0, 1) for _ in range(DIM)]
        if center is not None:
            v = [c + scale * x for c, x in zip(center, v)]
        return v

    human = "Q5"
    entities[human] = ("human", [])
    place = entity("geographic location")
    org = entity("organization")
    work = entity("creative work")
    country_type = entity("country")
    country_ids = {}
    country_center = gauss()
    for c in COUNTRIES:
        e = entity(c)
        types.append((e, country_type))
        country_ids[c] = e
        vectors[e] = gauss(country_center, 0.4)
    genre_type = entity("music genre")
    genre_ids = {}
    for g in GENRES:
        e = entity(g)
        types.append((e, genre_type))
        genre_ids[g] = e
    movement_type = entity("art movement")
    movement_ids = {}
    for m in MOVEMENTS:
        e = entity(m)
        types.append((e, movement_type))
        movement_ids[m] = e

    supertype = {"river": place, "mountain": place, "city": place, "lake": place, "bridge": place,
                 "band": org, "football club": org, "film": work}
    type_ids = {"human": human}

    tables = []
    for slug, type_label, pattern, props, unlinked in DOMAINS:
        if type_label not in type_ids:
            t = entity(type_label)
            type_ids[type_label] = t
            subclasses.append((t, supertype[type_label]))
        t = type_ids[type_label]
        center = gauss()
        pids = [prop(p[0]) for p in props]

        def name():
            if "{person}" in pattern:
                return f"{rng.choice(FIRST)} {word(rng, used, 3)}"
            return pattern.format(word(rng, used))

        members, decoys = [], []
        truth_values = {}
        for i in range(MEMBERS + DECOYS):
            decoy = i >= MEMBERS
            label = name()
            aliases = [label.replace(" River", "")] if type_label == "river" and not decoy else []
            e = entity(label, aliases)
            types.append((e, t))
            vectors[e] = gauss([0.3 * c for c in center], 1.0) if decoy else gauss(center, 0.35)
            vals = []
            for (plabel, kind, key, unit), pid in zip(props, pids):
                if kind == "e":
                    pool = {"country": country_ids, "genre": genre_ids, "movement": movement_ids}[key]
                    name_ = rng.choice(sorted(pool))
                    vals.append(("e", pool[name_], None, name_))
                else:
                    k, v, u = value(rng, key, used)
                    vals.append((k, v, u, cell_text((k, v, u))))
            truth_values[e] = vals
            (decoys if decoy else members).append(e)
            keep = vals[:1] if decoy else vals
            if not decoy and i >= DROP_FROM:
                keep = vals[:-1]
            for (k, v, u, _), pid in zip(keep, pids):
                triples.append((e, pid, k, v, u))
        extra = {e: free_text(rng, unlinked[1], used) for e in members} if unlinked else {}

        rows = []
        for i, e in enumerate(members[:TABLE_ROWS]):
            row = [entities[e][0]] + [v[3] for v in truth_values[e]]
            if unlinked:
                row.append(extra[e])
            rows.append(row)
        # one blank cell in a held-out row whose truth lives in truth.json
        blank_row, blank_col = TABLE_ROWS - 1, 2
        blank_value = rows[blank_row][blank_col]
        rows[blank_row][blank_col] = ""
        tables.append({
            "slug": slug,
            "type": type_label,
            "props": props,
            "pids": pids,
            "unlinked": unlinked,
            "members": members,
            "decoys": decoys,
            "values": truth_values,
            "extra": extra,
            "rows": rows,
            "truth": {
                "subjects": members[TABLE_ROWS:],
                "fills": {f"{blank_row},{blank_col}": blank_value},
            },
        })

    # ---------------------------------------------------------------- files
    tsv = ["# synthetic micro-benchmark knowledge base"]
    for label, pid in sorted(properties.items(), key=lambda x: int(x[1][1:])):
        tsv.append(f"P\t{pid}\t{label}")
    for e, (label, aliases) in entities.items():
        tsv.append(f"E\t{e}\t{label}" + (f"\t{'|'.join(aliases)}" if aliases else ""))
    for e, t in types:
        tsv.append(f"T\t{e}\t{t}")
    for s, sup in subclasses:
        tsv.append(f"C\t{s}\t{sup}")
    for s, p, k, v, u in triples:
        tsv.append(f"S\t{s}\t{p}\t{k}\t{v}" + (f"\t{u}" if u else ""))
    (OUT / "kb.tsv").write_text("\n".join(tsv) + "\n")

    emb = [f"{DIM} cosine"]
    for e, v in vectors.items():
        emb.append(e + " " + " ".join(f"{x:.6f}" for x in v))
    (OUT / "embeddings.txt").write_text("\n".join(emb) + "\n")

    label_of = {e: l for e, (l, _) in entities.items()}
    prop_label = {pid: l for l, pid in properties.items()}
    generations = {}
    searches = {}

    def add_search(keywords, snippets):
        key = tuple(sorted(keywords))
        searches.setdefault(key, snippets)

    def sentence(plabel, s, t, v):
        return SENTENCE[plabel].format(s=s, t=t, v=v)

    def url(s, tag):
        return f"https://en.wikipedia.org/wiki/{s.replace(' ', '_')}#{tag}"

    all_people = [e for tb in tables for e in tb["members"]]
    for tb in tables:
        props, pids, rows = tb["props"], tb["pids"], tb["rows"]
        n_cols = len(rows[0])
        columns = list(range(1, n_cols))
        col_prop = {j: pids[j - 1] if j <= len(pids) else None for j in columns}
        col_label = {j: props[j - 1][0] if j <= len(props) else tb["unlinked"][0] for j in columns}
        member_row = {e: i for i, e in enumerate(tb["members"][:TABLE_ROWS])}

        def true_cell(e, j):
            if e not in tb["values"]:
                return None
            if j <= len(props):
                return tb["values"][e][j - 1][3]
            return tb["extra"].get(e)

        def has_triple(e, j):
            p = col_prop[j]
            return p is not None and any(s == e and pp == p for s, pp, *_ in triples)

        # context searches for every row in the stability pool
        for i in range(POOL):
            e = tb["members"][i]
            for j in columns:
                cell = rows[i][j]
                if not cell:
                    continue
                kw = [label_of[e], cell] + ([prop_label[col_prop[j]]] if col_prop[j] else [])
                add_search(kw, [
                    {"url": url(label_of[e], "ctx"), "description": sentence(col_label[j], label_of[e], tb["type"], cell)},
                    {"url": f"https://news.example.org/{tb['slug']}/{i}/{j}",
                     "description": sentence(col_label[j], label_of[e], tb["type"], cell), "source": "news"},
                    {"url": f"https://blog.example.com/{tb['slug']}/{i}",
                     "description": rng.choice(NOISE).format(v=cell), "source": "other"},
                ])

        for combo in itertools.combinations(range(POOL), SEED_ROWS):
            seeds = [tb["members"][i] for i in combo]
            crng = random.Random(f"{SEED}/{tb['slug']}/{combo}")

            # subject suggestion prompt
            lines = []
            for i in combo:
                parts = [f"{prop_label[col_prop[j]]} {rows[i][j]}" for j in columns if col_prop[j] and rows[i][j]]
                lines.append(label_of[tb["members"][i]] + (" has " + " and has ".join(parts) if parts else ""))
            prompt = "\n".join(lines)
            held = [e for e in tb["members"] if e not in seeds]
            outsiders = [e for e in all_people if e not in tb["members"]]
            mentioned = []
            gens = []
            for g in range(GENERATIONS):
                picks = crng.sample(held, 2)
                if crng.random() < 0.5:
                    picks.append(crng.choice(tb["decoys"]))
                if crng.random() < 0.3:
                    picks.append(crng.choice(outsiders))
                if crng.random() < 0.2:
                    picks.append(crng.choice(seeds))
                text_lines = []
                for e in picks:
                    mentioned.append(e)
                    p0 = col_prop[1]
                    text_lines.append(f"{label_of[e]} has {prop_label[p0]} {crng.choice(COUNTRIES)}")
                if crng.random() < 0.3:
                    text_lines.append(f"- {word(crng, set())} {word(crng, set())} has {prop_label[col_prop[1]]} Unknown")
                gens.append({"text": "\n".join(text_lines), "score": round(-crng.uniform(0.1, 2.5), 4)})
            generations[prompt] = gens

            # gap-fill prompts; the top-3 combination also serves `complete`
            if combo == tuple(range(SEED_ROWS)):
                targets = [e for e in tb["members"] + tb["decoys"] if e not in seeds]
                targets += sorted(set(mentioned) - set(targets) - set(seeds))
            else:
                targets = [tb["members"][i] for i in range(TABLE_ROWS) if i not in combo]
            for target in targets:
                for j in columns:
                    if has_triple(target, j):
                        continue
                    p = col_prop[j]
                    examples = [(tb["members"][i], rows[i][j]) for i in combo if rows[i][j] and tb["members"][i] != target]
                    if not examples:
                        continue
                    c = label_of[target]
                    if p:
                        pl = prop_label[p]
                        fill_prompt = "\n".join([f"{label_of[e]} has {pl} {v}" for e, v in examples] + [f"{c} has {pl}"])
                    else:
                        fill_prompt = " as ".join([f"{label_of[e]} is to {v}" for e, v in examples] + [f"{c} is to"])
                    if fill_prompt in generations:
                        continue
                    right = true_cell(target, j)
                    donor = crng.choice([m for m in tb["members"] if m != target])
                    wrong = true_cell(donor, j)
                    texts = []
                    if right:
                        texts += [f"{right}.", f" {right}\nand more", f"{right}"]
                    if wrong and wrong != right:
                        texts.append(f"{wrong}. Probably.")
                    texts.append("unknown")
                    generations[fill_prompt] = texts
                    for v in {right, wrong, "unknown"} - {None}:
                        kw = [c] + ([prop_label[p]] if p else []) + [v]
                        if v == right:
                            snippets = [{"url": url(c, "fill"), "description": sentence(col_label[j], c, tb["type"], v)}]
                        else:
                            snippets = [{"url": f"https://forum.example.net/{crng.randrange(10**6)}",
                                         "description": crng.choice(NOISE).format(v=v), "source": "news"}]
                        add_search(kw, snippets)

    tables_root = OUT / "tables"
    for n, tb in enumerate(tables):
        d = tables_root / f"{n:02d}-{tb['slug']}"
        d.mkdir(parents=True, exist_ok=True)
        (d / "table.csv").write_text("".join(",".join(csv_field(c) for c in r) + "\n" for r in tb["rows"]))
        truth = {"seeds": SEED_ROWS, **tb["truth"]}
        (d / "truth.json").write_text(json.dumps(truth, indent=2, sort_keys=True) + "\n")

    mock = {
        "generations": generations,
        "search": [{"keywords": list(k), "snippets": v} for k, v in sorted(searches.items())],
    }
    (OUT / "mock.json").write_text(json.dumps(mock, indent=1, sort_keys=True) + "\n")


def csv_field(s):
    if any(c in s for c in ",\"\n"):
        return '"' + s.replace('"', '""') + '"'
    return s


if __name__ == "__main__":
    main()
