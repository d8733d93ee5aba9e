"""User context vectors from the user-location bipartite graph.

Locations are grid-encoded; visiting a cell links the user to it.  Feature
vectors come from layered propagation over the degree-normalized bipartite
adjacency:

    E_l = act((L + I) @ E_{l-1} @ W1_l + (L @ E_{l-1}) * (E_{l-1} @ W2_l))

with `*` element-wise.  Per-layer user rows are concatenated into the final
context vector, layer 0 included.  No supervised training happens here:
weights are seeded random and fixed, which keeps runs reproducible; plugging
in a trained initializer is an extension point, not a requirement.
"""

import math

from dataclasses import dataclass

import numpy as np

from .geo import GeoPoint

_ACTIVATIONS = {
    "relu": lambda z: np.maximum(z, 0.0),
    "sigmoid": lambda z: 1.0 / (1.0 + np.exp(-z)),
    "linear": lambda z: z,
}


@dataclass(frozen=True)
class GridIndex:
    """Row-major lattice of cells anchored at its south-west corner."""

    anchor: GeoPoint
    cell_size: float
    rows: int
    cols: int

    def __post_init__(self):
        if self.cell_size <= 0.0:
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid needs at least one row and one column")

    @property
    def n_cells(self):
        return self.rows * self.cols


def grid_covering(points, cell_size) -> GridIndex:
    """Smallest grid anchored at the points' south-west corner covering them all."""
    points = list(points)
    if not points:
        raise ValueError("cannot build a grid over zero points")
    lat0 = min(p.lat for p in points)
    lon0 = min(p.lon for p in points)
    rows = max(1, int(math.floor((max(p.lat for p in points) - lat0) / cell_size)) + 1)
    cols = max(1, int(math.floor((max(p.lon for p in points) - lon0) / cell_size)) + 1)
    return GridIndex(anchor=GeoPoint(lat0, lon0), cell_size=cell_size, rows=rows, cols=cols)


def encode_location(grid: GridIndex, p: GeoPoint) -> int:
    """Cell id = row*cols + col; points outside the extent clamp to the edge cells."""
    row = int(math.floor((p.lat - grid.anchor.lat) / grid.cell_size))
    col = int(math.floor((p.lon - grid.anchor.lon) / grid.cell_size))
    row = min(max(row, 0), grid.rows - 1)
    col = min(max(col, 0), grid.cols - 1)
    return row * grid.cols + col


@dataclass(frozen=True)
class InteractionMatrix:
    """Binary user x cell visit matrix; row order follows sorted user ids."""

    user_ids: tuple
    matrix: np.ndarray
    grid: GridIndex

    def user_row(self, user_id):
        return self.user_ids.index(user_id)


@dataclass(frozen=True)
class SimilarityMatrices:
    user_user: np.ndarray
    loc_loc: np.ndarray


@dataclass(frozen=True)
class EmbeddingConfig:
    dim: int = 16
    layers: int = 3
    activation: str = "relu"
    init_seed: int = 0
    init_scale: float = 0.1
    convergence_eps: float = 0.0
    max_iters: int = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.layers < 1:
            raise ValueError(f"layers must be >= 1, got {self.layers}")
        if self.activation not in ("relu", "sigmoid"):
            raise ValueError(f"activation must be relu or sigmoid, got {self.activation!r}")


def build_interaction_matrix(trips, grid: GridIndex) -> InteractionMatrix:
    """A[u][c] = 1 iff user u has a trip endpoint (origin or dest) in cell c."""
    user_ids = tuple(sorted({t.user_id for t in trips}))
    index = {uid: i for i, uid in enumerate(user_ids)}
    A = np.zeros((len(user_ids), grid.n_cells), dtype=np.int64)
    for t in trips:
        row = index[t.user_id]
        A[row, encode_location(grid, t.origin_point)] = 1
        A[row, encode_location(grid, t.dest_point)] = 1
    return InteractionMatrix(user_ids=user_ids, matrix=A, grid=grid)


def compute_similarity(interactions: InteractionMatrix) -> SimilarityMatrices:
    A = interactions.matrix
    return SimilarityMatrices(user_user=A @ A.T, loc_loc=A.T @ A)


def build_laplacian(interactions: InteractionMatrix) -> np.ndarray:
    """Symmetric degree-normalized bipartite adjacency D^-1/2 B D^-1/2.

    B stacks users then cells; zero-degree rows stay zero instead of dividing
    by zero.
    """
    A = interactions.matrix.astype(np.float64)
    n_users, n_cells = A.shape
    n = n_users + n_cells
    B = np.zeros((n, n), dtype=np.float64)
    B[:n_users, n_users:] = A
    B[n_users:, :n_users] = A.T
    degree = B.sum(axis=1)
    with np.errstate(divide="ignore"):
        inv_sqrt = np.where(degree > 0.0, 1.0 / np.sqrt(degree), 0.0)
    return inv_sqrt[:, None] * B * inv_sqrt[None, :]


def propagate(prev: np.ndarray, lap: np.ndarray, w1: np.ndarray, w2: np.ndarray, activation="relu") -> np.ndarray:
    """One propagation layer; `activation` is a name from relu/sigmoid/linear."""
    n, d = prev.shape
    if lap.shape != (n, n):
        raise ValueError(f"laplacian shape {lap.shape} does not match embeddings {prev.shape}")
    if w1.shape != (d, d) or w2.shape != (d, d):
        raise ValueError(f"weight shapes {w1.shape}/{w2.shape} do not match dim {d}")
    act = _ACTIVATIONS[activation] if isinstance(activation, str) else activation
    identity_term = (lap + np.eye(n)) @ prev @ w1
    interaction_term = (lap @ prev) * (prev @ w2)
    return act(identity_term + interaction_term)


def compute_user_features(trips, grid: GridIndex, cfg: EmbeddingConfig) -> dict:
    """Seeded propagation over the trips' interaction graph.

    Returns user_id -> concatenated per-layer rows.  Stops early once the
    max-abs change between consecutive layers drops below convergence_eps
    (the default 0.0 never triggers, so all `layers` iterations run).
    """
    interactions = build_interaction_matrix(trips, grid)
    lap = build_laplacian(interactions)
    n = lap.shape[0]
    rng = np.random.default_rng(cfg.init_seed)
    layers = [rng.uniform(-cfg.init_scale, cfg.init_scale, size=(n, cfg.dim))]
    n_iters = cfg.layers if cfg.max_iters is None else min(cfg.layers, cfg.max_iters)
    for _ in range(n_iters):
        w1 = rng.uniform(-cfg.init_scale, cfg.init_scale, size=(cfg.dim, cfg.dim))
        w2 = rng.uniform(-cfg.init_scale, cfg.init_scale, size=(cfg.dim, cfg.dim))
        nxt = propagate(layers[-1], lap, w1, w2, cfg.activation)
        delta = float(np.max(np.abs(nxt - layers[-1])))
        layers.append(nxt)
        if delta < cfg.convergence_eps:
            break
    stacked = np.concatenate(layers, axis=1)
    return {uid: stacked[i].copy() for i, uid in enumerate(interactions.user_ids)}


def write_features(features: dict, path):
    """`U <user_id> <v_0> ... <v_k>` with 9-significant-digit values."""
    with open(path, "w") as fh:
        for uid in sorted(features):
            values = " ".join(f"{v:.9g}" for v in features[uid])
            fh.write(f"U {uid} {values}\n")


def read_features(path) -> dict:
    features = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if fields[0] != "U" or len(fields) < 3:
                raise ValueError(f"{path}:{lineno}: unrecognized feature record {line!r}")
            features[int(fields[1])] = np.array([float(v) for v in fields[2:]], dtype=np.float64)
    return features
