"""Write the bundled scenario files under scenarios/.

    scenarios/categories/   one K=2 scene per cable category row
    scenarios/examples/     easy, low-rigidity, large axis change, adversarial preprocessing
    scenarios/acceptance/   the 26-scene suite used by the acceptance tests
"""

import argparse
import json
import math
from pathlib import Path

from carobio.batch import SOFT_ROWS, STIFF_ROWS, acceptance_suite
from carobio.scenarios import random_scenario, save_scenario
from carobio.scene import Rigidity

# Fixed end sits inside the first slot's exclusion zone, so no translation of
# the free nodes can clear it.
ADVERSARIAL = {
    "schema_version": 1,
    "units": "mm",
    "id": "adversarial-preprocess",
    "category": "adversarial",
    "seed": 0,
    "cable": {
        "total_length": 400,
        "diameter": 4,
        "rigidity": "medium",
        "polyline": [[0, 0, 2], [400, 0, 2]],
        "node_count": 20,
    },
    "slots": [
        {"width": 40, "height": 50, "max_radius": 21.5, "center": [-25, 0, 25], "axis": [0, 1, 0]},
        {"width": 40, "height": 50, "max_radius": 21.5, "center": [250, 80, 25], "axis": [1, 0, 0]},
    ],
}


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--root", default=Path(__file__).resolve().parent.parent / "scenarios", type=Path)
    args = ap.parse_args()

    cats = args.root / "categories"
    cats.mkdir(parents=True, exist_ok=True)
    for k, (cat, dia, rig) in enumerate(STIFF_ROWS + SOFT_ROWS):
        sid = f"{cat}-{dia * 1e3:02.0f}mm-{rig.value}"
        save_scenario(random_scenario(10 + k, n_slots=2, rigidity=rig, diameter=dia, scenario_id=sid, category=cat),
                      cats / f"{sid}.json")

    ex = args.root / "examples"
    ex.mkdir(parents=True, exist_ok=True)
    save_scenario(random_scenario(0, n_slots=2, rigidity=Rigidity.MEDIUM, scenario_id="easy-k2-medium",
                                  category="usb-cable"), ex / "easy_k2_medium.json")
    save_scenario(random_scenario(2, n_slots=2, rigidity=Rigidity.LOW, scenario_id="low-rigidity",
                                  category="nylon-rope"), ex / "low_rigidity.json")
    save_scenario(random_scenario(100, n_slots=3, rigidity=Rigidity.MEDIUM, forced_axis_change=math.radians(80.0),
                                  scenario_id="large-axis-change", category="usb-cable"), ex / "large_axis_change.json")
    (ex / "adversarial_preprocess.json").write_text(json.dumps(ADVERSARIAL, indent=1) + "\n")

    acc = args.root / "acceptance"
    acc.mkdir(parents=True, exist_ok=True)
    for sc in acceptance_suite():
        save_scenario(sc, acc / f"{sc.id}.json")
    print(f"wrote scenarios under {args.root}")


if __name__ == "__main__":
    main()
