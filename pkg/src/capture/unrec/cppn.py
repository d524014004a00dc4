"""CPPN (coordinate-network) indirect encoding and its evolution loop.

A genome is a small feed-forward function network mapping pixel coordinates
(x, y, radial distance r, bias) to RGB. Because the genome is a function of
continuous coordinates, the same genome renders consistently at any
resolution, which is what makes these images robust to resizing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..models.gateway import ModelPool
from .direct import EvolutionConfig, FitnessRecord, _score_population

ACTIVATIONS = ("sine", "gaussian", "sigmoid", "identity", "absolute")

INPUT_IDS = ("in:x", "in:y", "in:r", "in:bias")
OUTPUT_IDS = ("out:r", "out:g", "out:b")


def _apply_activation(name: str, z: np.ndarray) -> np.ndarray:
    if name == "sine":
        return np.sin(z)
    if name == "gaussian":
        return np.exp(-z * z)
    if name == "sigmoid":
        return 1.0 / (1.0 + np.exp(-np.clip(z, -60, 60)))
    if name == "identity":
        return z
    if name == "absolute":
        return np.abs(z)
    raise ValueError(f"unknown activation {name!r}")


@dataclass(frozen=True)
class Node:
    id: str
    activation: str


@dataclass(frozen=True)
class Connection:
    src: str
    dst: str
    weight: float
    enabled: bool = True


@dataclass
class CPPNGenome:
    nodes: list[Node] = field(default_factory=list)   # hidden nodes only
    connections: list[Connection] = field(default_factory=list)
    seed: int = 0

    def node_ids(self) -> list[str]:
        return list(INPUT_IDS) + [n.id for n in self.nodes] + list(OUTPUT_IDS)

    def topo_order(self) -> list[str]:
        """Topological order of non-input nodes; raises on cycles."""
        targets = [n.id for n in self.nodes] + list(OUTPUT_IDS)
        incoming = {t: [c for c in self.connections if c.enabled and c.dst == t]
                    for t in targets}
        done = set(INPUT_IDS)
        order: list[str] = []
        pending = list(targets)
        while pending:
            progressed = False
            for t in list(pending):
                if all(c.src in done for c in incoming[t]):
                    order.append(t)
                    done.add(t)
                    pending.remove(t)
                    progressed = True
            if not progressed:
                raise ValueError("genome connection graph has a cycle")
        return order

    # -- serialization ---------------------------------------------------------

    def to_json(self) -> str:
        return json.dumps({
            "seed": self.seed,
            "nodes": [{"id": n.id, "activation": n.activation} for n in self.nodes],
            "connections": [{"from": c.src, "to": c.dst, "weight": c.weight,
                             "enabled": c.enabled} for c in self.connections],
        }, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "CPPNGenome":
        d = json.loads(text)
        return cls(
            nodes=[Node(n["id"], n["activation"]) for n in d["nodes"]],
            connections=[Connection(c["from"], c["to"], float(c["weight"]),
                                    bool(c.get("enabled", True)))
                         for c in d["connections"]],
            seed=int(d.get("seed", 0)),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "CPPNGenome":
        return cls.from_json(Path(path).read_text())


def initial_genome(rng: np.random.Generator, seed: int = 0) -> CPPNGenome:
    """Fully connects inputs to outputs with weights in [-1, 1], no hidden nodes."""
    conns = [Connection(src, dst, float(rng.uniform(-1, 1)))
             for dst in OUTPUT_IDS for src in INPUT_IDS]
    return CPPNGenome(nodes=[], connections=conns, seed=seed)


def render_cppn(g: CPPNGenome, height: int, width: int) -> np.ndarray:
    """Deterministic render: coordinates x, y span [-1, 1] over the grid."""
    if height < 1 or width < 1:
        raise ValueError("render size must be positive")
    order = g.topo_order()
    ys = np.linspace(-1.0, 1.0, height)[:, None] * np.ones((1, width))
    xs = np.linspace(-1.0, 1.0, width)[None, :] * np.ones((height, 1))
    values: dict[str, np.ndarray] = {
        "in:x": xs.ravel(),
        "in:y": ys.ravel(),
        "in:r": np.sqrt(xs * xs + ys * ys).ravel(),
        "in:bias": np.ones(height * width),
    }
    act_of = {n.id: n.activation for n in g.nodes}
    incoming: dict[str, list[Connection]] = {}
    for c in g.connections:
        if c.enabled:
            incoming.setdefault(c.dst, []).append(c)
    for nid in order:
        z = np.zeros(height * width)
        for c in incoming.get(nid, []):
            z += c.weight * values[c.src]
        if nid in act_of:
            values[nid] = _apply_activation(act_of[nid], z)
        else:  # output node: sigmoid squash to [0, 1]
            values[nid] = _apply_activation("sigmoid", z)
    img = np.stack([values[o].reshape(height, width) for o in OUTPUT_IDS], axis=-1)
    return img


# -- mutation ------------------------------------------------------------------

MUTATION_PROBS = {
    "perturb-weight": 0.80,
    "add-connection": 0.10,
    "add-node": 0.05,
    "toggle": 0.05,
}
WEIGHT_SIGMA = 0.5


def mutate_genome(g: CPPNGenome, rng: np.random.Generator) -> CPPNGenome:
    kinds = list(MUTATION_PROBS)
    kind = rng.choice(kinds, p=[MUTATION_PROBS[k] for k in kinds])
    nodes = list(g.nodes)
    conns = list(g.connections)

    if kind == "perturb-weight" and conns:
        i = int(rng.integers(len(conns)))
        conns[i] = replace(conns[i], weight=conns[i].weight + float(rng.normal(0, WEIGHT_SIGMA)))
    elif kind == "add-connection":
        sources = list(INPUT_IDS) + [n.id for n in nodes]
        dests = [n.id for n in nodes] + list(OUTPUT_IDS)
        for _ in range(10):  # rejection-sample an edge that keeps the graph acyclic
            src = sources[int(rng.integers(len(sources)))]
            dst = dests[int(rng.integers(len(dests)))]
            if src == dst or any(c.src == src and c.dst == dst for c in conns):
                continue
            candidate = CPPNGenome(nodes, conns + [Connection(src, dst, float(rng.uniform(-1, 1)))], g.seed)
            try:
                candidate.topo_order()
            except ValueError:
                continue
            return candidate
    elif kind == "add-node" and conns:
        enabled = [i for i, c in enumerate(conns) if c.enabled]
        if enabled:
            i = enabled[int(rng.integers(len(enabled)))]
            old = conns[i]
            nid = f"h{len(nodes)}-{int(rng.integers(10 ** 6))}"
            act = ACTIVATIONS[int(rng.integers(len(ACTIVATIONS)))]
            nodes.append(Node(nid, act))
            conns[i] = replace(old, enabled=False)
            conns += [Connection(old.src, nid, 1.0),
                      Connection(nid, old.dst, old.weight)]
    elif kind == "toggle" and conns:
        i = int(rng.integers(len(conns)))
        conns[i] = replace(conns[i], enabled=not conns[i].enabled)
        candidate = CPPNGenome(nodes, conns, g.seed)
        out_reachable = any(c.enabled and c.dst in OUTPUT_IDS for c in conns)
        if not out_reachable:
            return g  # keep outputs connected to something

    return CPPNGenome(nodes, conns, g.seed)


def evolve_cppn(pool: ModelPool, cfg: EvolutionConfig
                ) -> tuple[CPPNGenome, np.ndarray, list[FitnessRecord]]:
    """Tournament EA (keep-best-1 elitism) over genome structure and weights."""
    if cfg.ensemble is None:
        raise ValueError("config needs an ensemble")
    rng = np.random.default_rng(cfg.seed)
    h, w = cfg.image_size
    target = cfg.target_class
    spec = cfg.ensemble

    population = [initial_genome(rng, seed=cfg.seed) for _ in range(cfg.population_size)]
    renders = np.stack([render_cppn(g, h, w) for g in population])
    fits, rows = _score_population(pool, spec, renders, target)
    i_best = int(fits.argmax())
    best, best_fit, best_row = population[i_best], float(fits[i_best]), rows[i_best]
    history = [FitnessRecord(0, best_row, best_fit)]

    for gen in range(1, cfg.max_generations + 1):
        if best_fit >= cfg.fitness_target:
            break
        children = [best]
        while len(children) < cfg.population_size:
            contenders = rng.integers(len(population), size=3)
            parent = population[int(max(contenders, key=lambda j: fits[j]))]
            children.append(mutate_genome(parent, rng))
        population = children
        renders = np.stack([render_cppn(g, h, w) for g in population])
        fits, rows = _score_population(pool, spec, renders, target)
        i = int(fits.argmax())
        if fits[i] > best_fit:
            best, best_fit, best_row = population[i], float(fits[i]), rows[i]
        history.append(FitnessRecord(gen, best_row, best_fit))

    return best, render_cppn(best, h, w), history
