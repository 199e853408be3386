"""Regenerate the bundled case files under src/tiesec/data/."""

from __future__ import annotations

from pathlib import Path

from tiesec.io import case_from_dict, case_to_dict, write_json
from tiesec.synthetic import case9, five_region, two_region

DATA = Path(__file__).resolve().parents[1] / "src" / "tiesec" / "data"


def _scenarios(nets, factors):
    # renewable profiles scaled per scenario, demands unchanged
    out = []
    for name, f in factors.items():
        regions = {
            str(n.region_id): {"renewables": [[round(v * f, 3) for v in r.profile] for r in n.renewables]} for n in nets
        }
        out.append({"name": name, "regions": regions})
    return out


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    cases = {
        "case9_2p.json": case_to_dict([case9(n_T=2)]),
        "case9_1p.json": case_to_dict([case9(n_T=1)]),
    }
    nets, inter = two_region(31, n_links=2)
    cases["two_region.json"] = case_to_dict(nets, inter, _scenarios(nets, {"low_wind": 0.8, "high_wind": 1.2}))
    nets, inter = five_region()
    cases["five_region.json"] = case_to_dict(nets, inter)
    for name, raw in cases.items():
        case_from_dict(raw)  # validates
        write_json(DATA / name, raw)
        print("wrote", DATA / name)


if __name__ == "__main__":
    main()
