"""Synthetic building layouts.

The default fixture is three floors of 40 nodes each: a two-row corridor
ladder, one room off every corridor node, two stairwells at opposite corners
and two exits on the first floor at the other two corners.
"""

from __future__ import annotations

from .building import BuildingGraph, BuildingNode, Edge

COL_SPACING = 600.0
ROW_SPACING = 800.0
ROOM_DEPTH = 400.0
FLOOR_HEIGHT = 400.0
STAIR_LENGTH = 800.0

ROOM_CAPACITY = 1
CORRIDOR_CAPACITY = 3
EXIT_CAPACITY = 2


def ladder_building(
    floors: int = 3,
    cols: int = 10,
    rungs: tuple[int, ...] = (0, 3, 6, 9),
    name: str = "synthetic3",
) -> BuildingGraph:
    """Corridor-ladder building; ids run floor by floor, corridors first."""
    nodes: list[BuildingNode] = []
    edges: list[Edge] = []
    corridor: dict[tuple[int, int, int], int] = {}
    last = cols - 1
    exit_spots = {(1, 0): (-ROOM_DEPTH, ROW_SPACING), (0, last): (last * COL_SPACING + ROOM_DEPTH, 0.0)}

    def add(pos, floor, cap, is_exit=False) -> int:
        nodes.append(BuildingNode(len(nodes), pos, floor, cap, is_exit))
        return nodes[-1].id

    for f in range(1, floors + 1):
        z = (f - 1) * FLOOR_HEIGHT
        for r in (0, 1):
            for c in range(cols):
                corridor[(f, r, c)] = add((c * COL_SPACING, r * ROW_SPACING, z), f, CORRIDOR_CAPACITY)
        for r in (0, 1):
            for c in range(cols - 1):
                edges.append(Edge(corridor[(f, r, c)], corridor[(f, r, c + 1)], COL_SPACING))
        for c in rungs:
            edges.append(Edge(corridor[(f, 0, c)], corridor[(f, 1, c)], ROW_SPACING))
        for r in (0, 1):
            for c in range(cols):
                if f == 1 and (r, c) in exit_spots:
                    continue
                y = -ROOM_DEPTH if r == 0 else ROW_SPACING + ROOM_DEPTH
                room = add((c * COL_SPACING, y, z), f, ROOM_CAPACITY)
                edges.append(Edge(corridor[(f, r, c)], room, ROOM_DEPTH))
        if f == 1:
            for (r, c), (x, y) in exit_spots.items():
                ex = add((x, y, z), f, EXIT_CAPACITY, True)
                edges.append(Edge(corridor[(f, r, c)], ex, ROOM_DEPTH))
        if f > 1:
            for r, c in ((0, 0), (1, last)):
                edges.append(Edge(corridor[(f - 1, r, c)], corridor[(f, r, c)], STAIR_LENGTH))

    return BuildingGraph.build(name, nodes, edges)
