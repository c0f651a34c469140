"""Regenerate the bundled toy dataset under data/toy.

The toy KG is deterministic, so rerunning this script must leave the
checked-in files byte-identical.
"""

import argparse
from pathlib import Path

from rulesmith.synth import make_toy_kg, write_kg


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=Path(__file__).parent.parent / "data" / "toy",
                        type=Path)
    parser.add_argument("--families", type=int, default=40)
    args = parser.parse_args()
    kg = make_toy_kg(args.families)
    paths = write_kg(kg, args.out)
    report = kg.report()
    for line in report.to_lines():
        print(line)
    for split, path in paths.items():
        print(f"{split}: {path}")


if __name__ == "__main__":
    main()
