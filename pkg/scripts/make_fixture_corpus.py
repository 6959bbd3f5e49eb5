"""Regenerate the bundled maritime-style fixture corpus.

The output is committed under src/turbodsa/data/; rerunning with the same
seed reproduces it byte for byte.
"""
import random
import sys
from pathlib import Path

VESSELS = ["the tanker", "the cargo ship", "the ferry", "the fishing vessel", "the patrol boat",
           "the tug", "the container ship", "the research vessel", "the pilot boat", "the bulk carrier"]
PLACES = ["the harbour", "the port", "the channel", "the anchorage", "the strait", "the coast",
          "the terminal", "the breakwater", "the pier", "the estuary"]
DIRECTIONS = ["north", "south", "east", "west", "northeast", "northwest", "southeast", "southwest"]
WEATHER = ["heavy fog", "strong wind", "high waves", "a storm", "poor visibility", "rough sea",
           "heavy rain", "ice"]
NUMBERS = ["two", "three", "four", "five", "six", "eight", "ten", "twelve", "fifteen", "twenty"]
UNITS = ["knots", "miles", "hours", "minutes", "meters"]
CREW = ["the captain", "the crew", "the pilot", "the officer", "the engineer", "the master"]
EQUIPMENT = ["the radar", "the engine", "the radio", "the rudder", "the pump", "the generator",
             "the anchor", "the lifeboat"]
STATES = ["damaged", "repaired", "checked", "ready", "out of service", "working"]
ACTIONS = ["reduce speed", "alter course", "stand by", "keep clear", "proceed with caution",
           "wait for the pilot", "report your position", "keep a sharp lookout"]
CARGO = ["oil", "grain", "containers", "coal", "fish", "timber", "passengers", "fuel"]
ORGS = ["the coast guard", "the port authority", "the rescue centre", "the harbour master",
        "the maritime organization", "the vessel traffic service"]

TEMPLATES = [
    lambda r: f"{r.choice(VESSELS)} is entering {r.choice(PLACES)} from the {r.choice(DIRECTIONS)}",
    lambda r: f"{r.choice(VESSELS)} will arrive at {r.choice(PLACES)} in {r.choice(NUMBERS)} {r.choice(UNITS[2:4])}",
    lambda r: f"{r.choice(WEATHER)} is expected near {r.choice(PLACES)} tonight",
    lambda r: f"all vessels should {r.choice(ACTIONS)} because of {r.choice(WEATHER)}",
    lambda r: f"{r.choice(CREW)} reports that {r.choice(EQUIPMENT)} is {r.choice(STATES)}",
    lambda r: f"{r.choice(VESSELS)} is carrying {r.choice(CARGO)} to {r.choice(PLACES)}",
    lambda r: f"{r.choice(ORGS)} asks {r.choice(VESSELS)} to {r.choice(ACTIONS)}",
    lambda r: f"the speed of {r.choice(VESSELS)} is {r.choice(NUMBERS)} knots",
    lambda r: f"{r.choice(VESSELS)} is {r.choice(NUMBERS)} miles {r.choice(DIRECTIONS)} of {r.choice(PLACES)}",
    lambda r: f"please {r.choice(ACTIONS)} , {r.choice(VESSELS)} is leaving {r.choice(PLACES)}",
    lambda r: f"{r.choice(ORGS)} has received a distress call from {r.choice(VESSELS)}",
    lambda r: f"{r.choice(CREW)} of {r.choice(VESSELS)} requests a berth at {r.choice(PLACES)}",
    lambda r: f"{r.choice(EQUIPMENT)} on {r.choice(VESSELS)} was {r.choice(STATES)} this morning",
    lambda r: f"visibility near {r.choice(PLACES)} is less than {r.choice(NUMBERS)} hundred meters",
    lambda r: f"{r.choice(VESSELS)} and {r.choice(VESSELS)} must {r.choice(ACTIONS)} in {r.choice(PLACES)}",
    lambda r: f"{r.choice(ORGS)} warns of {r.choice(WEATHER)} and {r.choice(WEATHER)} in {r.choice(PLACES)}",
    lambda r: f"{r.choice(CREW)} will inspect {r.choice(EQUIPMENT)} before departure",
    lambda r: f"the loading of {r.choice(CARGO)} at {r.choice(PLACES)} will take {r.choice(NUMBERS)} hours",
]


def main(out_path, n=500, seed=2024):
    rng = random.Random(seed)
    seen = set()
    lines = []
    while len(lines) < n:
        s = rng.choice(TEMPLATES)(rng)
        if s not in seen:
            seen.add(s)
            lines.append(s)
    Path(out_path).write_text("\n".join(lines) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "src/turbodsa/data/maritime_fixture.txt")
