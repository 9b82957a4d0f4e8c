# bayesnet.py — Discrete Bayesian network classifier
#
# A network is a DAG over the dataset's nominal attributes plus one
# conditional probability table per variable. Tables are stored as
# (parent configurations × values) arrays; a parent configuration is the
# mixed-radix number of the parents' value indices, parents taken in
# attribute order with the first one most significant.
#
# Learning is greedy K2 over a fixed variable ordering, scored with the
# Bayes (Dirichlet, alpha=0.5) metric. Counts come from direct scans.
#
# Public API:
#   fit_parameters(structure, data, alpha)   — BayesNetwork
#   learn_structure_k2(data, ordering, max_parents) — networkx.DiGraph
#   joint_probability(net, assignment)       — float
#   classify(net, instance)                  — (label, posterior)
#   score_network(net, data)                 — ScoreReport
#   train_classifier(data, learner)          — K2 + fit in one step
#   sample_network(net, n, seed)             — Dataset
#   format_model(net, scores) / network_to_dict / network_from_dict

import math
from dataclasses import dataclass, field
from typing import Optional

import networkx as nx
import numpy as np
from scipy.special import gammaln

import config
from arff_io import Attribute, Dataset

SCORE_ALPHA = 0.5       # Dirichlet prior of the Bayes score
BDEU_ESS    = 1.0       # equivalent sample size of the BDeu score
CLASS_NAME  = "Class"
SUM_TOLERANCE = 1e-9


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class BayesNetError(Exception):
    """Base class for Bayesian-network failures."""


class EmptyData(BayesNetError):
    def __init__(self, message: str = "dataset has no instances"):
        super().__init__(message)


class UnknownValuePresent(BayesNetError):
    def __init__(self, row: int, attr: str):
        self.row = row
        self.attr = attr
        super().__init__(f"row {row}: {attr} is unknown ('?')")


class IncompleteAssignment(BayesNetError):
    def __init__(self, missing: list):
        self.missing = missing
        super().__init__(f"no value for {', '.join(missing)}")


class UnknownAttributeValue(BayesNetError):
    def __init__(self, attr: str, value):
        self.attr = attr
        self.value = value
        super().__init__(f"{value!r} is not a value of {attr}")


class InvalidStructure(BayesNetError):
    """Cyclic graph, unknown node, or an ordering that is not a permutation."""


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Variable:
    name: str
    values: tuple

    @property
    def card(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class BayesNetwork:
    variables: tuple            # Variable per node, in dataset attribute order
    parents: tuple              # per node: tuple of parent indices, ascending
    cpts: tuple                 # per node: ndarray (q_i, r_i), rows sum to 1
    class_index: Optional[int] = None
    graph: nx.DiGraph = field(default=None, compare=False, repr=False)

    @property
    def names(self) -> list:
        return [v.name for v in self.variables]

    @property
    def class_variable(self) -> Variable:
        if self.class_index is None:
            raise BayesNetError("network has no class variable")
        return self.variables[self.class_index]

    def index_of(self, name: str) -> int:
        for i, v in enumerate(self.variables):
            if v.name == name:
                return i
        raise BayesNetError(f"no variable named {name}")

    def parent_configurations(self, i: int) -> int:
        return int(np.prod([self.variables[p].card for p in self.parents[i]], dtype=np.int64))

    def config_of(self, i: int, idx) -> int:
        row = 0
        for p in self.parents[i]:
            row = row * self.variables[p].card + int(idx[p])
        return row

    def __eq__(self, other) -> bool:
        if not isinstance(other, BayesNetwork):
            return NotImplemented
        return (
            self.variables == other.variables
            and self.parents == other.parents
            and self.class_index == other.class_index
            and all(np.array_equal(a, b) for a, b in zip(self.cpts, other.cpts))
        )


def _structure_graph(variables, parents) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(v.name for v in variables)
    for child, ps in enumerate(parents):
        graph.add_edges_from((variables[p].name, variables[child].name) for p in ps)
    return graph


def build_network(variables, parents, cpts, class_index=None) -> BayesNetwork:
    """Assemble and validate a network from parts (acyclic, table shapes, row sums)."""
    variables = tuple(variables)
    parents   = tuple(tuple(sorted(int(p) for p in ps)) for ps in parents)
    cpts      = tuple(np.asarray(t, dtype=float) for t in cpts)
    if not (len(variables) == len(parents) == len(cpts)):
        raise InvalidStructure("variables, parents and cpts differ in length")
    graph = _structure_graph(variables, parents)
    if not nx.is_directed_acyclic_graph(graph):
        raise InvalidStructure("network structure has a cycle")
    net = BayesNetwork(variables, parents, cpts, class_index, graph)
    for i, table in enumerate(cpts):
        expected = (net.parent_configurations(i), variables[i].card)
        if table.shape != expected:
            raise BayesNetError(f"{variables[i].name}: table shape {table.shape}, expected {expected}")
        if np.any(table < 0) or not np.allclose(table.sum(axis=1), 1.0, atol=SUM_TOLERANCE, rtol=0):
            raise BayesNetError(f"{variables[i].name}: table rows must be distributions")
    return net


def structure_from_parents(names, parents: dict) -> nx.DiGraph:
    """DAG over 'names' with parents given as {child: [parent, ...]}."""
    graph = nx.DiGraph()
    graph.add_nodes_from(names)
    for child, ps in parents.items():
        graph.add_edges_from((p, child) for p in ps)
    return graph


# ---------------------------------------------------------------------------
# Data encoding and counts
# ---------------------------------------------------------------------------

def _variables_of(data: Dataset) -> tuple:
    return tuple(Variable(a.name, tuple(a.values)) for a in data.attributes)


def encode(data: Dataset, variables=None) -> np.ndarray:
    """Rows as value indices (int64); Unknown becomes -1."""
    variables = variables or _variables_of(data)
    lookup = [{v: k for k, v in enumerate(var.values)} for var in variables]
    out = np.empty((len(data.rows), len(variables)), dtype=np.int64)
    for r, row in enumerate(data.rows):
        for c, value in enumerate(row):
            if value is None:
                out[r, c] = -1
            elif value in lookup[c]:
                out[r, c] = lookup[c][value]
            else:
                raise UnknownAttributeValue(variables[c].name, value)
    return out


def _require_known(codes: np.ndarray, variables) -> None:
    missing = np.argwhere(codes < 0)
    if len(missing):
        row, col = missing[0]
        raise UnknownValuePresent(int(row) + 1, variables[int(col)].name)


def _counts(codes: np.ndarray, cards, child: int, parents) -> np.ndarray:
    """N[config, value] for one variable; all q × r cells, zeros included."""
    row = np.zeros(len(codes), dtype=np.int64)
    q = 1
    for p in parents:
        row = row * cards[p] + codes[:, p]
        q *= cards[p]
    table = np.zeros((q, cards[child]), dtype=float)
    np.add.at(table, (row, codes[:, child]), 1.0)
    return table


def _bayes_local(counts: np.ndarray, alpha) -> float:
    r = counts.shape[1]
    n_pi = counts.sum(axis=1)
    return float(np.sum(
        gammaln(r * alpha) - gammaln(n_pi + r * alpha)
        + np.sum(gammaln(counts + alpha) - gammaln(alpha), axis=1)
    ))


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------

def fit_parameters(structure: nx.DiGraph, data: Dataset, alpha: float = config.ALPHA,
                   class_name: Optional[str] = CLASS_NAME) -> BayesNetwork:
    """
    theta[x | pi] = (N[x, pi] + alpha) / (N[pi] + alpha * r).

    A parent configuration with no data (and alpha = 0) gets a uniform row.
    The class variable defaults to the attribute named 'Class'.
    """
    if alpha < 0:
        raise BayesNetError(f"alpha must not be negative, got {alpha}")
    if not data.rows:
        raise EmptyData()
    variables = _variables_of(data)
    names = [v.name for v in variables]
    parents = _parents_from_graph(structure, names)

    codes = encode(data, variables)
    _require_known(codes, variables)
    cards = [v.card for v in variables]

    cpts = []
    for i in range(len(variables)):
        counts = _counts(codes, cards, i, parents[i])
        numer = counts + alpha
        denom = numer.sum(axis=1, keepdims=True)
        uniform = np.full_like(counts, 1.0 / cards[i])
        cpts.append(np.divide(numer, denom, out=uniform, where=denom > 0))

    class_index = names.index(class_name) if class_name in names else None
    return build_network(variables, parents, cpts, class_index)


def _parents_from_graph(structure: nx.DiGraph, names: list) -> list:
    nodes = set(structure.nodes)
    if nodes - set(names):
        raise InvalidStructure(f"unknown node(s): {', '.join(sorted(map(str, nodes - set(names))))}")
    if not nx.is_directed_acyclic_graph(structure):
        raise InvalidStructure("network structure has a cycle")
    position = {n: i for i, n in enumerate(names)}
    return [
        tuple(sorted(position[p] for p in structure.predecessors(n))) if n in nodes else ()
        for n in names
    ]


# ---------------------------------------------------------------------------
# Structure learning
# ---------------------------------------------------------------------------

def learn_structure_k2(data: Dataset, ordering=None, max_parents: int = config.MAX_PARENTS) -> nx.DiGraph:
    """
    Greedy K2: each variable takes, one at a time, the predecessor that most
    improves its Bayes score, until nothing improves or max_parents is hit.
    Ties go to the lower attribute index.
    """
    variables = _variables_of(data)
    names = [v.name for v in variables]
    order = _resolve_ordering(ordering, names)
    codes = encode(data, variables)
    _require_known(codes, variables)
    cards = [v.card for v in variables]

    graph = nx.DiGraph()
    graph.add_nodes_from(names)
    for pos, child in enumerate(order):
        parents = []
        best = _bayes_local(_counts(codes, cards, child, parents), SCORE_ALPHA)
        while len(parents) < max_parents:
            pick, pick_score = None, best
            for cand in sorted(order[:pos]):
                if cand in parents:
                    continue
                score = _bayes_local(_counts(codes, cards, child, sorted(parents + [cand])), SCORE_ALPHA)
                if score > pick_score:
                    pick, pick_score = cand, score
            if pick is None:
                break
            parents.append(pick)
            best = pick_score
        graph.add_edges_from((names[p], names[child]) for p in parents)
    return graph


def _resolve_ordering(ordering, names: list) -> list:
    if ordering is None:
        return list(range(len(names)))
    order = []
    for o in ordering:
        if isinstance(o, str):
            order.append(names.index(o) if o in names else -1)
        else:
            order.append(int(o))
    if sorted(order) != list(range(len(names))):
        raise InvalidStructure(f"ordering is not a permutation of the attributes: {list(ordering)}")
    return order


# ---------------------------------------------------------------------------
# Inference
# ---------------------------------------------------------------------------

def _joint_idx(net: BayesNetwork, idx) -> float:
    p = 1.0
    for i, table in enumerate(net.cpts):
        p *= table[net.config_of(i, idx), idx[i]]
    return float(p)


def _to_indices(net: BayesNetwork, assignment, skip: Optional[int] = None) -> list:
    idx = []
    for i, (var, value) in enumerate(zip(net.variables, assignment)):
        if i == skip:
            idx.append(0)
        elif isinstance(value, (int, np.integer)) and not isinstance(value, bool) and 0 <= value < var.card:
            idx.append(int(value))
        elif value in var.values:
            idx.append(var.values.index(value))
        else:
            raise UnknownAttributeValue(var.name, value)
    return idx


def joint_probability(net: BayesNetwork, assignment) -> float:
    """P(x_1..x_n) = product of theta[x_i | pi_i]. Values may be names or indices."""
    assignment = list(assignment)
    missing = [v.name for v, a in zip(net.variables, assignment) if a is None]
    missing += [v.name for v in net.variables[len(assignment):]]
    if missing:
        raise IncompleteAssignment(missing)
    return _joint_idx(net, _to_indices(net, assignment))


def classify(net: BayesNetwork, instance) -> tuple:
    """
    Posterior over the class values for one instance, from the full joint.
    Returns (label, posterior); argmax ties go to the first class value.
    The instance's own class entry is ignored.
    """
    c = net.class_variable
    ci = net.class_index
    instance = list(instance)
    if len(instance) < len(net.variables):
        raise IncompleteAssignment([v.name for v in net.variables[len(instance):]])
    for i, (var, value) in enumerate(zip(net.variables, instance)):
        if i != ci and value is None:
            raise UnknownAttributeValue(var.name, None)
    idx = _to_indices(net, instance, skip=ci)

    weights = np.empty(c.card)
    for k in range(c.card):
        idx[ci] = k
        weights[k] = _joint_idx(net, idx)
    total = weights.sum()
    posterior = weights / total if total > 0 else np.full(c.card, 1.0 / c.card)
    return c.values[int(np.argmax(posterior))], tuple(float(p) for p in posterior)


# ---------------------------------------------------------------------------
# Scores
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScoreReport:
    bayes: float
    bdeu: float
    mdl: float
    entropy: float
    aic: float

    def as_dict(self) -> dict:
        return {"Bayes": self.bayes, "BDeu": self.bdeu, "MDL": self.mdl,
                "ENTROPY": self.entropy, "AIC": self.aic}


def parameter_count(net: BayesNetwork) -> int:
    """K = sum over variables of (r_i - 1) * q_i."""
    return sum((v.card - 1) * net.parent_configurations(i) for i, v in enumerate(net.variables))


def score_network(net: BayesNetwork, data: Dataset) -> ScoreReport:
    if not data.rows:
        raise EmptyData()
    codes = encode(data, net.variables)
    _require_known(codes, net.variables)
    cards = [v.card for v in net.variables]
    n = len(data.rows)

    entropy = bayes = bdeu = 0.0
    for i in range(len(net.variables)):
        counts = _counts(codes, cards, i, net.parents[i])
        n_pi = counts.sum(axis=1, keepdims=True)
        nz = counts > 0
        entropy += float(np.sum(counts[nz] * np.log((counts / np.where(n_pi > 0, n_pi, 1))[nz])))
        bayes += _bayes_local(counts, SCORE_ALPHA)
        bdeu += _bayes_local(counts, BDEU_ESS / counts.size)

    k = parameter_count(net)
    return ScoreReport(
        bayes=bayes,
        bdeu=bdeu,
        mdl=entropy - k / 2 * math.log(n),
        entropy=entropy,
        aic=entropy - k,
    )


# ---------------------------------------------------------------------------
# Training facade and sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LearnerConfig:
    max_parents: int = config.MAX_PARENTS
    alpha: float = config.ALPHA
    ordering: Optional[tuple] = None    # None = attribute order


def train_classifier(data: Dataset, learner: LearnerConfig = LearnerConfig(),
                     class_name: str = CLASS_NAME) -> BayesNetwork:
    if class_name not in data.attribute_names:
        raise BayesNetError(f"dataset has no class attribute {class_name}")
    if not data.rows:
        raise EmptyData()
    structure = learn_structure_k2(data, learner.ordering, learner.max_parents)
    return fit_parameters(structure, data, learner.alpha, class_name)


def sample_network(net: BayesNetwork, n: int, seed: int = config.SEED,
                   relation: str = "sampled") -> Dataset:
    """Forward-sample n complete instances in topological order."""
    rng = np.random.default_rng(seed)
    codes = np.zeros((n, len(net.variables)), dtype=np.int64)
    position = {name: i for i, name in enumerate(net.names)}
    for name in nx.topological_sort(net.graph):
        i = position[name]
        config_ix = np.zeros(n, dtype=np.int64)
        for p in net.parents[i]:
            config_ix = config_ix * net.variables[p].card + codes[:, p]
        cumulative = np.cumsum(net.cpts[i], axis=1)[config_ix]
        draws = rng.random(n)[:, None]
        codes[:, i] = np.minimum((draws >= cumulative).sum(axis=1), net.variables[i].card - 1)
    attributes = [Attribute(v.name, v.values) for v in net.variables]
    rows = [tuple(net.variables[c].values[x] for c, x in enumerate(r)) for r in codes]
    return Dataset(relation, attributes, rows)


# ---------------------------------------------------------------------------
# Text and JSON forms
# ---------------------------------------------------------------------------

def format_model(net: BayesNetwork, scores: Optional[ScoreReport] = None) -> str:
    lines = [
        "Bayes Network Classifier",
        "not using ADTree",
        f"#attributes={len(net.variables)} #classindex={net.class_index if net.class_index is not None else -1}",
        "Network structure (nodes followed by parents)",
    ]
    for i, v in enumerate(net.variables):
        parents = " ".join(net.variables[p].name for p in net.parents[i])
        lines.append(f"{v.name}({v.card}): {parents}".rstrip() if parents else f"{v.name}({v.card}):")
    if scores is not None:
        lines += [
            f"LogScore Bayes: {scores.bayes!r}",
            f"LogScore BDeu: {scores.bdeu!r}",
            f"LogScore MDL: {scores.mdl!r}",
            f"LogScore ENTROPY: {scores.entropy!r}",
            f"LogScore AIC: {scores.aic!r}",
        ]
    return "\n".join(lines) + "\n"


def network_to_dict(net: BayesNetwork) -> dict:
    return {
        "variables":   [{"name": v.name, "values": list(v.values)} for v in net.variables],
        "edges":       [[net.variables[p].name, v.name]
                        for i, v in enumerate(net.variables) for p in net.parents[i]],
        "cpts":        {v.name: net.cpts[i].tolist() for i, v in enumerate(net.variables)},
        "class_index": net.class_index,
    }


def network_from_dict(obj: dict) -> BayesNetwork:
    try:
        variables = tuple(Variable(v["name"], tuple(v["values"])) for v in obj["variables"])
        names = [v.name for v in variables]
        parents = [[] for _ in variables]
        for parent, child in obj["edges"]:
            parents[names.index(child)].append(names.index(parent))
        cpts = [obj["cpts"][name] for name in names]
        class_index = obj.get("class_index")
    except (KeyError, TypeError, ValueError) as e:
        raise BayesNetError(f"malformed network JSON: {e}")
    return build_network(variables, parents, cpts, class_index)
