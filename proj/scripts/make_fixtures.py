#!/usr/bin/env python3
"""Regenerate the fixture inputs under fixtures/.

The corpus is keyword-planted: each theme owns a disjoint vocabulary pool, so
a bag-of-words classifier can separate the themes perfectly and tests can pin
exact evaluation numbers. Fixed seed; rerunning reproduces the files byte for
byte.
"""

import csv
import math
import random
from pathlib import Path

OUT_DIR = Path(__file__).resolve().parent.parent / "fixtures"

SEED = 20250816

G7 = ["CAN", "DEU", "FRA", "GBR", "ITA", "JPN", "USA"]
SIDS = ["FJI", "TUV", "VUT", "WSM"]
OTHERS = [
    "BGD", "BRA", "CHN", "COL", "EGY", "ETH", "EUU", "IDN", "IND", "KEN",
    "MAR", "MEX", "NGA", "PER", "PHL", "VNM", "ZAF",
]
COUNTRIES = sorted(G7 + SIDS + OTHERS)

THEME_POOLS = {
    "Mitigation": [
        "emissions", "carbon", "renewable", "decarbonization", "solar",
        "photovoltaic", "mitigation",
    ],
    "Adaptation": [
        "adaptation", "resilience", "drought", "irrigation", "coastal",
        "heatwave", "résilience",
    ],
    "Disaster Risk Management": [
        "disaster", "preparedness", "cyclone", "evacuation", "floodplain",
        "seismic",
    ],
    "Loss and Damage": [
        "compensation", "displacement", "reparations", "uninsurable",
        "indemnity",
    ],
}

FILLER = [
    "framework", "ministry", "act", "law", "amendment", "provisions",
    "national", "regional", "committee", "annual", "report", "budget",
    "chapter", "article", "approved", "adopted", "plan", "policy",
    "establishes", "strategy", "implementation", "review", "sector",
]

OPENERS = [
    "Adopted in {year}, this {filler} sets out",
    "The {year} {filler} of the national assembly establishes",
    "Under the {filler} approved in {year}, the government mandates",
    "This {filler}, in force since {year}, introduces",
    'The so-called "{filler} {filler2}", enacted in {year}, prioritizes',
]

WDI_PROFILES = {
    # code: (low, high, growth per year)
    "GDP": (1200.0, 64000.0, 0.025),
    "GNI_ATLAS": (1100.0, 60000.0, 0.024),
    "GNI_PPP": (2400.0, 72000.0, 0.022),
    "EXT_DEBT": (4.0e8, 2.5e11, 0.03),
    "FDI": (-4.0, 11.0, 0.0),
    "ELEC_CONS": (60.0, 14000.0, 0.012),
    "ADOL_FERT": (4.0, 115.0, -0.015),
    "SEC_ENROLL": (32.0, 118.0, 0.004),
}

WDI_EXTRA_COUNTRIES = ["CHE"]


def label_plan(rng):
    plan = (
        [["Mitigation"]] * 222
        + [["Adaptation"]] * 116
        + [["Disaster Risk Management"]] * 62
        + [["Loss and Damage"]] * 28
        + [["Mitigation", "Adaptation"]] * 36
        + [["Adaptation", "Disaster Risk Management"]] * 22
        + [["Disaster Risk Management", "Loss and Damage"]] * 10
        + [[]] * 24
    )
    rng.shuffle(plan)
    return plan


def summary_for(rng, themes, year):
    opener = rng.choice(OPENERS).format(
        year=year, filler=rng.choice(FILLER), filler2=rng.choice(FILLER)
    )
    words = []
    for theme in themes:
        pool = THEME_POOLS[theme]
        words.extend(rng.sample(pool, 3))
        for _ in range(rng.randint(2, 3)):
            words.append(rng.choice(pool))
    for _ in range(rng.randint(4, 7)):
        words.append(rng.choice(FILLER))
    rng.shuffle(words)
    cut = rng.randint(3, max(3, len(words) - 3))
    first = " ".join(words[:cut])
    second = " ".join(words[cut:])
    text = f"{opener} {first}, with {second}."
    if rng.random() < 0.12:
        text += " Amended by decree no. 7, chapter 2."
    return text


def make_policies(rng):
    plan = label_plan(rng)
    weights = [3 if c in G7 + ["EUU", "BRA", "IND", "CHN"] else 1 for c in COUNTRIES]
    year_pop = list(range(2015, 2023))
    year_weights = [1, 1, 2, 2, 3, 3, 4, 4]

    rows = []
    for i, labels in enumerate(plan):
        country = rng.choices(COUNTRIES, weights=weights)[0]
        year = rng.choices(year_pop, weights=year_weights)[0]
        rows.append(
            {
                "doc_id": f"POL-{i + 1:04d}",
                "country_iso3": country,
                "year": year,
                "summary_text": summary_for(rng, labels, year),
                "labels": "|".join(labels),
            }
        )
    return rows


def make_wdi(rng):
    rows = []
    for country in sorted(COUNTRIES + WDI_EXTRA_COUNTRIES):
        wealth = rng.random()
        for code, (low, high, growth) in WDI_PROFILES.items():
            base = low + (high - low) * (wealth**2 if code != "FDI" else rng.random())
            for year in range(2013, 2023):
                if (country, year, code) == ("TUV", 2016, "EXT_DEBT"):
                    continue  # reserved for the hand-written nonpositive row below
                if rng.random() < 0.10:
                    continue
                drift = (1.0 + growth) ** (year - 2013)
                noise = 1.0 + rng.uniform(-0.04, 0.04)
                if code == "FDI":
                    value = base + rng.uniform(-3.0, 3.0)
                else:
                    value = base * drift * noise
                if rng.random() < 0.015:
                    cell = ""
                else:
                    cell = f"{value:.6g}"
                rows.append([country, year, code, cell])
    # a nonpositive observation for a logged indicator, dropped in harmonization
    rows.append(["TUV", 2016, "EXT_DEBT", "0"])
    return rows


def write_policies(rows):
    with open(OUT_DIR / "policies.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(
            fh,
            fieldnames=["doc_id", "country_iso3", "year", "summary_text", "labels"],
            lineterminator="\n",
        )
        writer.writeheader()
        writer.writerows(rows)


def write_wdi(rows):
    with open(OUT_DIR / "wdi.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["country_iso3", "year", "indicator_code", "value"])
        writer.writerows(rows)


def write_conf():
    lines = [
        "# Indicator transforms for the fixture panel.",
        "# Monetary aggregates are logged; rates and shares stay in levels.",
        "GDP = LOG",
        "GNI_ATLAS = LOG",
        "GNI_PPP = LOG",
        "EXT_DEBT = LOG",
        "FDI = LEVEL",
        "ELEC_CONS = LEVEL",
        "ADOL_FERT = LEVEL",
        "SEC_ENROLL = LEVEL",
        "",
        "min_year = 2015",
        "",
    ]
    (OUT_DIR / "harmonize.conf").write_text("\n".join(lines), encoding="utf-8")


def main():
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    rng = random.Random(SEED)
    policies = make_policies(rng)
    write_policies(policies)
    write_wdi(make_wdi(rng))
    write_conf()

    per_country = {}
    per_label = {}
    for row in policies:
        per_country[row["country_iso3"]] = per_country.get(row["country_iso3"], 0) + 1
        per_label[row["labels"] or "(none)"] = per_label.get(row["labels"] or "(none)", 0) + 1
    print(f"policies: {len(policies)} docs, {len(per_country)} countries")
    missing = [c for c in COUNTRIES if c not in per_country]
    if missing:
        print(f"WARNING: countries with no documents: {missing}")
    for label, n in sorted(per_label.items(), key=lambda kv: -kv[1]):
        print(f"  {n:4d}  {label}")


if __name__ == "__main__":
    main()
