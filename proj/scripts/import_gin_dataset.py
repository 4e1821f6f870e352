#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Convert a graph-classification dataset from the GIN text format
(https://github.com/weihua916/powerful-gnns: first line = #graphs; per graph
a "<n> <label>" header followed by n lines "<tag> <#nbrs> <nbr ids...>")
into the TU text layout used by this project:

    <name>_A.txt                comma-separated "i, j" edge rows, 1-based
    <name>_graph_indicator.txt  graph id per node, 1-based
    <name>_graph_labels.txt     one label per graph
    <name>_node_labels.txt      one tag per node

Usage: import_gin_dataset.py <input.txt> <output_dir> <name>
"""
import os
import sys


def main() -> int:
    if len(sys.argv) != 4:
        print(__doc__, file=sys.stderr)
        return 2
    src, out_dir, name = sys.argv[1], sys.argv[2], sys.argv[3]
    with open(src) as fh:
        tokens = fh.read().split("\n")
    pos = 0

    def next_line():
        nonlocal pos
        while tokens[pos].strip() == "":
            pos += 1
        line = tokens[pos]
        pos += 1
        return line

    num_graphs = int(next_line())
    edges = []          # (u, v) global 1-based, both directions
    indicator = []      # graph id per node
    graph_labels = []
    node_labels = []
    offset = 0
    for g in range(num_graphs):
        header = next_line().split()
        n, label = int(header[0]), int(header[1])
        graph_labels.append(label)
        for i in range(n):
            parts = next_line().split()
            tag, deg = int(parts[0]), int(parts[1])
            nbrs = [int(x) for x in parts[2 : 2 + deg]]
            node_labels.append(tag)
            indicator.append(g + 1)
            for j in nbrs:
                edges.append((offset + i + 1, offset + j + 1))
        offset += n

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, f"{name}_A.txt"), "w") as fh:
        fh.writelines(f"{u}, {v}\n" for u, v in edges)
    with open(os.path.join(out_dir, f"{name}_graph_indicator.txt"), "w") as fh:
        fh.writelines(f"{g}\n" for g in indicator)
    with open(os.path.join(out_dir, f"{name}_graph_labels.txt"), "w") as fh:
        fh.writelines(f"{y}\n" for y in graph_labels)
    with open(os.path.join(out_dir, f"{name}_node_labels.txt"), "w") as fh:
        fh.writelines(f"{t}\n" for t in node_labels)

    sizes = [indicator.count(g + 1) for g in range(num_graphs)]
    print(f"{name}: {num_graphs} graphs, {len(set(graph_labels))} classes, "
          f"avg size {sum(sizes) / len(sizes):.2f}, "
          f"{len(set(node_labels))} node tags, {len(edges)} directed edge rows")
    return 0


if __name__ == "__main__":
    sys.exit(main())
