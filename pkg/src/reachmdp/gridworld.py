"""2D and 3D grid-world MDPs built from ASCII maps.

Map characters: ``.`` free, ``#`` obstacle, ``G`` goal, ``S`` start.  A 3D map
is a sequence of layers separated by blank lines; the first layer is the
bottom one.  Cells are indexed row-major: ``y * width + x`` in 2D and
``z * width * height + y * width + x`` in 3D, with ``y = 0`` the first text row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mdp import Mdp

FREE, OBSTACLE, GOAL, START = ".", "#", "G", "S"
CELL_KINDS = {FREE, OBSTACLE, GOAL, START}

# (dx, dy) with y growing downwards, so north is dy = -1
MOVES_2D = {
    "N": (0, -1), "NE": (1, -1), "E": (1, 0), "SE": (1, 1),
    "S": (0, 1), "SW": (-1, 1), "W": (-1, 0), "NW": (-1, -1), "idle": (0, 0),
}
# (dx, dy, dz); TOP goes to the next layer up
MOVES_3D = {
    "N": (0, -1, 0), "E": (1, 0, 0), "S": (0, 1, 0), "W": (-1, 0, 0),
    "TOP": (0, 0, 1), "BOTTOM": (0, 0, -1), "idle": (0, 0, 0),
}


class GridError(ValueError):
    pass


class RaggedGrid(GridError):
    pass


class NoGoal(GridError):
    pass


class UnknownCell(GridError):
    def __init__(self, char, position):
        super().__init__(f"unknown cell {char!r} at {position}")
        self.char = char
        self.position = position


class DimensionMismatch(GridError):
    pass


@dataclass(frozen=True, eq=False)
class GridMap:
    """Cells as a ``(depth, height, width)`` array of map characters."""

    cells: np.ndarray
    is_3d: bool = False

    @property
    def depth(self) -> int:
        return self.cells.shape[0]

    @property
    def height(self) -> int:
        return self.cells.shape[1]

    @property
    def width(self) -> int:
        return self.cells.shape[2]

    @property
    def dims(self) -> tuple[int, ...]:
        if self.is_3d:
            return (self.width, self.height, self.depth)
        return (self.width, self.height)

    @property
    def num_cells(self) -> int:
        return self.cells.size

    def flat(self) -> np.ndarray:
        return self.cells.ravel()

    def index(self, *coords: int) -> int:
        x, y = coords[0], coords[1]
        z = coords[2] if len(coords) > 2 else 0
        return (z * self.height + y) * self.width + x

    def coords(self, index: int) -> tuple[int, ...]:
        z, rem = divmod(int(index), self.width * self.height)
        y, x = divmod(rem, self.width)
        return (x, y, z) if self.is_3d else (x, y)

    @property
    def goals(self) -> list[int]:
        return np.flatnonzero(self.flat() == GOAL).tolist()

    @property
    def start(self) -> int | None:
        hits = np.flatnonzero(self.flat() == START)
        return int(hits[0]) if hits.size else None

    def to_text(self) -> str:
        layers = ["\n".join("".join(row) for row in layer) for layer in self.cells]
        return "\n\n".join(layers) + "\n"


def parse_grid(text: str) -> GridMap:
    blocks: list[list[str]] = [[]]
    for line in text.replace("\r\n", "\n").split("\n"):
        if line.strip():
            blocks[-1].append(line.rstrip())
        elif blocks[-1]:
            blocks.append([])
    blocks = [b for b in blocks if b]
    if not blocks:
        raise NoGoal("empty map")
    for z, block in enumerate(blocks):
        for y, row in enumerate(block):
            for x, ch in enumerate(row):
                if ch not in CELL_KINDS:
                    raise UnknownCell(ch, (x, y, z) if len(blocks) > 1 else (x, y))
    width, height = len(blocks[0][0]), len(blocks[0])
    for block in blocks:
        if len(block) != height or any(len(row) != width for row in block):
            raise RaggedGrid("all rows and layers must have the same shape")
    cells = np.array([[list(row) for row in block] for block in blocks], dtype="<U1")
    if not np.any(cells == GOAL):
        raise NoGoal("map has no goal cell")
    if np.count_nonzero(cells == START) > 1:
        raise GridError("map has more than one start cell")
    return GridMap(cells, is_3d=len(blocks) > 1)


def load_grid(path) -> GridMap:
    with open(path) as fh:
        return parse_grid(fh.read())


@dataclass(frozen=True)
class NoiseModel:
    """Mass ``eta`` is taken from the intended move and shared by the other in-grid moves."""

    eta: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.eta < 1.0:
            raise ValueError("eta must lie in [0, 1)")


def _as_noise(noise) -> NoiseModel:
    return noise if isinstance(noise, NoiseModel) else NoiseModel(float(noise))


def _build(grid: GridMap, moves: dict, noise, goal_reward, obstacle_penalty, gamma) -> Mdp:
    noise = _as_noise(noise)
    eta = noise.eta
    kinds = grid.flat()
    names = tuple(moves)
    deltas = list(moves.values())
    shape = (grid.width, grid.height, grid.depth)
    entries = []
    for s in range(grid.num_cells):
        if kinds[s] == GOAL:
            continue
        c = grid.coords(s)
        pos = (c[0], c[1], c[2] if grid.is_3d else 0)
        targets = []
        for d in deltas:
            t = tuple(p + dp for p, dp in zip(pos, d + (0,) * (3 - len(d))))
            inside = all(0 <= t[i] < shape[i] for i in range(3))
            targets.append(grid.index(*t) if inside else None)
        for a, target in enumerate(targets):
            intended = target if target is not None and kinds[target] != OBSTACLE else s
            others = [t for b, t in enumerate(targets) if b != a and t is not None]
            dist: dict[int, float] = {}
            if others and eta > 0:
                dist[intended] = 1.0 - eta
                for t in others:
                    dist[t] = dist.get(t, 0.0) + eta / len(others)
            else:
                dist[intended] = 1.0
            for t, p in dist.items():
                if kinds[t] == GOAL:
                    r = goal_reward
                elif kinds[t] == OBSTACLE:
                    r = obstacle_penalty
                else:
                    r = 0.0
                entries.append((s, a, t, p, r))
    return Mdp.from_triples(grid.num_cells, len(names), entries, gamma, grid.goals, names)


def build_mdp_2d(grid: GridMap, noise=NoiseModel(), goal_reward: float = 100.0,
                 obstacle_penalty: float = -1.0, gamma: float = 0.95) -> Mdp:
    """Nine-action grid MDP: eight compass moves plus idle.

    Intended moves off the grid or into an obstacle leave the agent in place;
    obstacles can only be entered through noise.
    """
    if grid.is_3d:
        raise DimensionMismatch("build_mdp_2d needs a 2D map")
    return _build(grid, MOVES_2D, noise, goal_reward, obstacle_penalty, gamma)


def build_mdp_3d(grid: GridMap, noise=NoiseModel(), goal_reward: float = 100.0,
                 obstacle_penalty: float = -1.0, gamma: float = 0.95) -> Mdp:
    """Seven-action grid MDP: N, E, S, W, TOP, BOTTOM and idle."""
    if not grid.is_3d:
        raise DimensionMismatch("build_mdp_3d needs a 3D map")
    return _build(grid, MOVES_3D, noise, goal_reward, obstacle_penalty, gamma)


def build_mdp(grid: GridMap, **kwargs) -> Mdp:
    return (build_mdp_3d if grid.is_3d else build_mdp_2d)(grid, **kwargs)


def rollout_policy(mdp: Mdp, policy, start: int, max_steps: int = 10_000, rng_seed=None) -> list[int]:
    """Sample a trajectory under ``policy`` until a goal or ``max_steps`` moves."""
    rng = np.random.default_rng(rng_seed)
    goals = set(mdp.goal_states)
    s = int(start)
    path = [s]
    for _ in range(max_steps):
        if s in goals:
            break
        succ, p, _ = mdp.successors(s, int(policy[s]))
        s = int(succ[0]) if len(succ) == 1 else int(rng.choice(succ, p=p))
        path.append(s)
    return path


def benchmark_grid(size: int, seed: int = 0, density: float = 0.12) -> GridMap:
    """Square map in the style of the evaluation scenarios.

    Start near the top-left corner and goal near the bottom-right one, with
    straight wall segments and scattered 2x2 blocks in between.  Every free
    cell keeps an 8-connected path to the goal.
    """
    rng = np.random.default_rng(seed)
    cells = np.full((size, size), FREE, dtype="<U1")
    n_walls = max(1, size // 8)
    for _ in range(n_walls):
        length = int(rng.integers(size // 4, size // 2 + 1))
        if rng.random() < 0.5:
            y, x0 = int(rng.integers(2, size - 2)), int(rng.integers(0, size - length))
            cells[y, x0:x0 + length] = OBSTACLE
        else:
            x, y0 = int(rng.integers(2, size - 2)), int(rng.integers(0, size - length))
            cells[y0:y0 + length, x] = OBSTACLE
    n_blocks = int(density * size * size / 4)
    for _ in range(n_blocks):
        y, x = rng.integers(0, size - 1, 2)
        cells[y:y + 2, x:x + 2] = OBSTACLE
    gy = gx = size - 1 - max(1, size // 10)
    sy = sx = max(1, size // 10)
    cells[gy - 1:gy + 2, gx - 1:gx + 2] = FREE
    cells[sy - 1:sy + 2, sx - 1:sx + 2] = FREE
    cells[gy, gx] = GOAL
    cells[sy, sx] = START
    _open_isolated(cells, (gy, gx))
    return GridMap(cells[None], is_3d=False)


def _open_isolated(cells, goal):
    """Turn free cells with no 8-connected route to the goal into obstacles."""
    h, w = cells.shape
    seen = np.zeros((h, w), dtype=bool)
    stack = [goal]
    seen[goal] = True
    while stack:
        y, x = stack.pop()
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                ny, nx = y + dy, x + dx
                if 0 <= ny < h and 0 <= nx < w and not seen[ny, nx] and cells[ny, nx] != OBSTACLE:
                    seen[ny, nx] = True
                    stack.append((ny, nx))
    cells[(~seen) & (cells != OBSTACLE)] = OBSTACLE
