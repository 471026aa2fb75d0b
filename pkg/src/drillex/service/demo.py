"""A small drought-survey dataset for demos, tests, and the UI fixture.

Three districts of villages report severity (1-10) for 1984-1988.  One
district's 1986 data carries two planted defects: one village lost a third
of its reports and another both lost reports and recorded implausibly low
severities.  A per-village rainfall table is the auxiliary signal that
separates expected low severity from the unexplained one.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

YEARS = (1984, 1985, 1986, 1987, 1988)

#: village -> (district, reports per year, rainfall, typical severity)
VILLAGES = {
    "Fala": ("Ofla", 17, 40, 8),
    "Hashenge": ("Ofla", 20, 20, 8),
    "Bora": ("Ofla", 10, 60, 7),
    "Darube": ("Ofla", 15, 90, 3),
    "Zata": ("Ofla", 15, 30, 7),
    "Kulmesk": ("Alamata", 13, 70, 6),
    "Waja": ("Alamata", 16, 40, 8),
    "Maychew": ("Endamehoni", 14, 60, 7),
    "Mehoni": ("Endamehoni", 12, 80, 6),
}

#: (village, year) -> (reports actually present, severity override)
DEFECTS = {
    ("Darube", 1986): (10, None),
    ("Zata", 1986): (5, 2),
}


def demo_rows() -> list[dict]:
    """The fact rows, deterministic: severity alternates +/-1 around a base."""
    rows = []
    for village, (district, count, _rain, base) in VILLAGES.items():
        for year in YEARS:
            n, override = DEFECTS.get((village, year), (count, None))
            level = base if override is None else override
            for i in range(n):
                severity = max(1, min(10, level + (-1, 0, 1)[i % 3]))
                rows.append({"district": district, "village": village,
                             "year": year, "severity": severity})
    return rows


def rainfall_rows() -> list[dict]:
    return [{"village": v, "rain": spec[2]} for v, spec in VILLAGES.items()]


def write_demo(directory: str | Path) -> Path:
    """Write fact.csv, rainfall.csv, and config.json; returns the config path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "fact.csv", "w", newline="",
              encoding="utf-8") as handle:
        writer = csv.DictWriter(
            handle, fieldnames=["district", "village", "year", "severity"])
        writer.writeheader()
        writer.writerows(demo_rows())
    with open(directory / "rainfall.csv", "w", newline="",
              encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=["village", "rain"])
        writer.writeheader()
        writer.writerows(rainfall_rows())
    config = {
        "fact": "fact.csv",
        "hierarchies": [
            {"name": "geo", "attributes": ["district", "village"]},
            {"name": "time", "attributes": ["year"]},
        ],
        "measures": ["severity"],
        "auxiliaries": [
            {"name": "rainfall", "path": "rainfall.csv",
             "join": ["village"], "measure": "rain"},
        ],
    }
    path = directory / "config.json"
    path.write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    return path


def main() -> None:
    import sys

    target = sys.argv[1] if len(sys.argv) > 1 else "demo_data"
    print(write_demo(target))


if __name__ == "__main__":
    main()
