# Copyright 2026 The bprr Authors. All Rights Reserved.
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

"""Writes synthetic stand-ins for the AboveNet, BellCanada and GTS-CE graphs.

Node and link counts and the delay range match the published summaries; the
wiring itself is a seeded random connected graph, not the real topology.
"""

import argparse
import json
import pathlib
import random

SHAPES = {
    "abovenet": (23, 62, 0.100, 13.800),
    "bellcanada": (48, 130, 0.078, 6.160),
    "gts-ce": (149, 386, 0.005, 1.081),
}


def build(name, nodes, links, lo, hi, seed):
    rng = random.Random(f"{name}:{seed}")
    edges = set()
    for v in range(1, nodes):
        edges.add((rng.randrange(v), v))
    while len(edges) < links:
        a, b = sorted(rng.sample(range(nodes), 2))
        edges.add((a, b))
    edges = sorted(edges)
    delays = [round(rng.uniform(lo, hi), 3) for _ in edges]
    delays[0], delays[-1] = lo, hi
    return {
        "name": name,
        "directed": False,
        "nodes": [{"id": f"n{v}"} for v in range(nodes)],
        "links": [
            {"a": f"n{a}", "b": f"n{b}", "delay_ms": d, "capacity_gbps": 1.0}
            for (a, b), d in zip(edges, delays)
        ],
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/topologies")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, (nodes, links, lo, hi) in SHAPES.items():
        doc = build(name, nodes, links, lo, hi, args.seed)
        (out / f"{name}.json").write_text(json.dumps(doc, indent=1) + "\n")


if __name__ == "__main__":
    main()
