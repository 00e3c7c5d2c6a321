#!/usr/bin/env python3
# Copyright 2026 the cavmerge authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates the bundled scenario files under data/scenarios/.

The three-vehicle scenario is the published three-car merge: a scripted
main-lane lead, one ramp CAV, and one main-lane CAV entering 0.9 s later.

The multi_hdv trio shares one 30-vehicle arrival pattern and differs only in
which vehicles are automated:
  i    all human (IDM) behind the scripted lead,
  ii   the three ramp vehicles are CAVs,
  iii  additionally the main-lane vehicle that enters right after each ramp
       CAV is automated.

Main-lane entries run at 20 m/s every 2.0 s; ramp entries run at 15 m/s every
4.0 s, each placed 1.6 s behind a main entry. A 3.0 s ramp spacing against the
2.0 s main cadence would alternate the entry phase, and the tighter phase puts
a ramp car so close to the next main entrant that it is overtaken before the
line, breaking entry-order delivery in the all-human baseline; 4.0 s keeps the
phase fixed and entry order holds in all three variants. The bundled IDM
desired speed (27 m/s) makes the human platoon's equilibrium spacing at the
20 m/s injection speed roughly equal the 40 m injection headway, so the
baseline platoon car-follows steadily instead of slowly stringing out, and
the acceleration bounds (0.8 / 1.2 m/s^2) are ordinary comfortable-driving
values. The controller block raises the CAV cruise target to 25 m/s so
automated vehicles close the merge gaps they negotiate instead of idling at
the injection speed.
"""

import json
import pathlib

OUT_DIR = pathlib.Path(__file__).resolve().parent.parent / "data" / "scenarios"

MAIN_COUNT = 27  # one scripted lead + 26 IDM/CAV followers
MAIN_SPACING_S = 2.0
MAIN_SPEED = 20.0
RAMP_TIMES = [13.6, 17.6, 21.6]
RAMP_SPEED = 15.0


def arrival(time_s, lane, klass, driver, speed, position=0.0):
    return {
        "time_s": time_s,
        "lane": lane,
        "class": klass,
        "driver": driver,
        "speed_mps": speed,
        "position_m": position,
    }


def three_vehicle():
    return {
        "schema": "cavmerge-scenario/1",
        "name": "three_vehicle",
        "duration_s": 60.0,
        "runout_m": 200.0,
        "arrivals": [
            arrival(0.0, "main", "hdv", "scripted", 20.0, position=97.0),
            arrival(0.0, "ramp", "cav", "cbf_clf", 10.0),
            arrival(0.9, "main", "cav", "cbf_clf", 19.0),
        ],
    }


def multi_hdv(variant):
    ramp_cav = variant in ("ii", "iii")
    # Main-lane vehicle entering right after each ramp arrival (13.6 -> 14.0,
    # 17.6 -> 18.0, 21.6 -> 22.0).
    follower_cav_times = {14.0, 18.0, 22.0} if variant == "iii" else set()
    arrivals = [arrival(0.0, "main", "hdv", "scripted", MAIN_SPEED)]
    for k in range(1, MAIN_COUNT):
        t = k * MAIN_SPACING_S
        if t in follower_cav_times:
            arrivals.append(arrival(t, "main", "cav", "cbf_clf", MAIN_SPEED))
        else:
            arrivals.append(arrival(t, "main", "hdv", "idm", MAIN_SPEED))
    for t in RAMP_TIMES:
        if ramp_cav:
            arrivals.append(arrival(t, "ramp", "cav", "cbf_clf", RAMP_SPEED))
        else:
            arrivals.append(arrival(t, "ramp", "hdv", "idm", RAMP_SPEED))
    arrivals.sort(key=lambda a: (a["time_s"], a["lane"] != "main"))
    return {
        "schema": "cavmerge-scenario/1",
        "name": f"multi_hdv_{variant}",
        "duration_s": 140.0,
        "runout_m": 200.0,
        "idm": {
            "desired_speed_mps": 27.0,
            "max_accel_mps2": 0.8,
            "comfort_decel_mps2": 1.2,
        },
        "controller": {"speed_desired_mps": 25.0},
        "arrivals": arrivals,
    }


def main():
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    scenarios = [three_vehicle()] + [multi_hdv(v) for v in ("i", "ii", "iii")]
    for spec in scenarios:
        path = OUT_DIR / f"{spec['name']}.json"
        path.write_text(json.dumps(spec, indent=2) + "\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
