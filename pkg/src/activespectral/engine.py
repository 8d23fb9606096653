"""Session orchestration: the iterative cluster/select/query loop.

One iteration reclusters under the current constraints, scores the metrics,
selects a sample, resolves it through the pairwise query protocol, and merges
the implied constraints. Sessions are deterministic given their config
(including the seed) and can be checkpointed to JSON at any point.
"""

from __future__ import annotations

import base64
import json
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .constraints import (
    CertainSets,
    QueryRecord,
    Resolution,
    commit_resolution,
    expand_constraints,
    representatives,
)
from .data import (
    Dataset,
    SimilarityMatrix,
    chi2_similarity,
    gaussian_similarity,
    load_dataset,
    load_precomputed_similarity,
)
from .errors import IncompatibleSession, InvalidParameter, PendingAnswer
from .metrics import jaccard, v_measure
from .oracle import (
    Answer,
    GroundTruthOracle,
    InteractiveOracle,
    LogEntry,
    NoisyOracle,
    Oracle,
)
from .spectral import (
    ClusterAssignment,
    ConstraintSet,
    Kind,
    SpectralEmbedding,
    spectral_learning_cluster,
)
from .uncertainty import SelectionSnapshot, knn_lists, select_informative

SESSION_VERSION = 1

STRATEGIES = ("urasc_n", "urasc_p", "urasc_go", "urasc_no", "urasc_po",
              "random", "random_pairs")
_MODE_BY_STRATEGY = {"urasc_n": "N", "urasc_p": "P", "urasc_go": "GO",
                     "urasc_no": "NO", "urasc_po": "PO"}

RUNNING = "running"
AWAITING_ANSWER = "awaiting_answer"
FINISHED = "finished"


@dataclass
class SessionConfig:
    """Everything needed to reproduce a session; serializes 1:1 to JSON."""

    data: str
    kernel: str = "gaussian"            # gaussian | chi2 | precomputed
    sigma: float | None = None          # None -> median heuristic
    gamma: float = 1.0
    strategy: str = "urasc_n"
    n_c: int | None = None              # None -> unknown-k mode, starts at 2
    query_budget: int = 100
    seed: int = 0
    noise_rate: float = 0.0
    b: int = 20
    knn_k: int = 20
    eval_every: int = 1
    oracle: str = "simulated"           # simulated | interactive
    labeled: bool = True                # feature CSV carries a label column
    labels: str | None = None           # label file for precomputed kernels
    label_column: str | int | None = None
    standardize: bool = True            # z-score features before gaussian kernel
    media: str | None = None            # JSON manifest: sample id -> image URL

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise InvalidParameter(f"unknown strategy {self.strategy!r}")
        if self.kernel not in ("gaussian", "chi2", "precomputed"):
            raise InvalidParameter(f"unknown kernel {self.kernel!r}")
        if self.query_budget < 1:
            raise InvalidParameter("query_budget must be >= 1")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise InvalidParameter("noise_rate must lie in [0, 1]")
        if self.oracle not in ("simulated", "interactive"):
            raise InvalidParameter(f"unknown oracle kind {self.oracle!r}")
        if self.n_c is not None and self.n_c < 1:
            raise InvalidParameter("n_c must be >= 1 when given")

    @classmethod
    def from_dict(cls, raw: dict) -> "SessionConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise InvalidParameter(f"unknown config fields: {sorted(unknown)}")
        return cls(**raw)


@dataclass
class CurvePoint:
    queries_used: int
    jcc: float
    v_measure: float
    n_c: int
    wall_ms: int


def curve_key(curve: list[CurvePoint]) -> list[tuple]:
    """Deterministic view of a curve: everything except wall-clock noise."""
    return [(p.queries_used, p.jcc, p.v_measure, p.n_c) for p in curve]


@dataclass
class SessionState:
    config: SessionConfig
    w0: SimilarityMatrix
    labels: np.ndarray | None
    class_count: int | None
    features: np.ndarray | None
    media: dict[int, str] | None
    certain: CertainSets
    q: ConstraintSet
    rng: np.random.Generator
    oracle: Oracle
    neighbors: np.ndarray
    n_c: int
    t: int = 0
    queries_used: int = 0
    status: str = RUNNING
    pending: Resolution | None = None
    pending_queries_before: int = 0
    pending_raw_pair: tuple[int, int] | None = None
    queried_pairs: set[tuple[int, int]] = field(default_factory=set)
    records: list[QueryRecord] = field(default_factory=list)
    curve: list[CurvePoint] = field(default_factory=list)
    assignment: ClusterAssignment | None = None
    embedding: SpectralEmbedding | None = None
    current_w: SimilarityMatrix | None = None
    started_at: float = field(default_factory=time.perf_counter)

    @property
    def n(self) -> int:
        return self.w0.n

    def pending_pair(self) -> tuple[int, int] | None:
        if self.pending is not None and self.status == AWAITING_ANSWER:
            return self.pending.pending_pair()
        if self.pending_raw_pair is not None:
            return self.pending_raw_pair
        return None


def _load_label_file(path, label_column) -> tuple[np.ndarray, int]:
    """Read labels from a companion CSV: one column, or a named/indexed one."""
    import csv as _csv

    from .data import canonicalize_labels

    with open(path, newline="") as fh:
        rows = [row for row in _csv.reader(fh) if row]
    if not rows:
        raise InvalidParameter(f"{path}: empty label file")
    col = 0
    start = 0
    if isinstance(label_column, str):
        header = [c.strip() for c in rows[0]]
        if label_column not in header:
            raise InvalidParameter(f"{path}: no column named {label_column!r}")
        col = header.index(label_column)
        start = 1
    elif isinstance(label_column, int):
        col = label_column
    return canonicalize_labels([row[col] for row in rows[start:]])


def _load_inputs(cfg: SessionConfig) -> tuple[SimilarityMatrix, np.ndarray | None, int | None, np.ndarray | None]:
    if cfg.kernel == "precomputed":
        w0 = load_precomputed_similarity(cfg.data)
        labels, class_count = None, None
        if cfg.labels:
            labels, class_count = _load_label_file(cfg.labels, cfg.label_column)
            if len(labels) != w0.n:
                raise InvalidParameter("label file length does not match matrix order")
        return w0, labels, class_count, None

    ds = load_dataset(cfg.data, "csv_features_labeled" if cfg.labeled else "csv_features",
                      cfg.label_column)
    features = ds.features
    if cfg.kernel == "gaussian":
        if cfg.standardize:
            std = features.std(axis=0)
            std[std == 0] = 1.0
            features = (features - features.mean(axis=0)) / std
            ds = Dataset(features=features, labels=ds.labels)
        w0 = gaussian_similarity(ds, cfg.sigma)
    else:
        w0 = chi2_similarity(ds, cfg.gamma)
    return w0, ds.labels, ds.class_count, features


def _build_oracle(cfg: SessionConfig, labels: np.ndarray | None) -> Oracle:
    if cfg.oracle == "interactive":
        return InteractiveOracle()
    if cfg.noise_rate > 0:
        return NoisyOracle(labels, cfg.noise_rate, seed=cfg.seed + 0x9E3779B9)
    return GroundTruthOracle(labels)


def _load_media(cfg: SessionConfig) -> dict[int, str] | None:
    if not cfg.media:
        return None
    raw = json.loads(Path(cfg.media).read_text())
    return {int(k): str(v) for k, v in raw.items()}


def init_session(cfg: SessionConfig, oracle: Oracle | None = None) -> SessionState:
    """Build W0, seed the RNG, resolve the random first sample for free.

    The first certain set is created without an oracle query (there is
    nothing to compare against yet).
    """
    w0, labels, class_count, features = _load_inputs(cfg)
    rng = np.random.default_rng(cfg.seed)
    certain = CertainSets()
    certain.init_first_sample(int(rng.integers(w0.n)))
    return SessionState(
        config=cfg,
        w0=w0,
        labels=labels,
        class_count=class_count,
        features=features,
        media=_load_media(cfg),
        certain=certain,
        q=ConstraintSet(),
        rng=rng,
        oracle=oracle if oracle is not None else _build_oracle(cfg, labels),
        neighbors=knn_lists(w0, cfg.knn_k),
        n_c=cfg.n_c if cfg.n_c is not None else 2,
    )


def _recluster(st: SessionState) -> None:
    seed = int(st.rng.integers(0, 2**31 - 1))
    asg, emb, edited = spectral_learning_cluster(st.w0, st.q, st.n_c, seed)
    st.assignment, st.embedding, st.current_w = asg, emb, edited


def _evaluate(st: SessionState) -> None:
    if st.labels is None:
        return
    if st.curve and st.curve[-1].queries_used == st.queries_used:
        return  # constraints unchanged since the last point
    jcc = jaccard(st.assignment.labels, st.labels)
    v, _, _ = v_measure(st.assignment.labels, st.labels)
    wall_ms = int((time.perf_counter() - st.started_at) * 1000)
    st.curve.append(CurvePoint(st.queries_used, jcc, v, st.n_c, wall_ms))


def _candidates(st: SessionState) -> list[int]:
    resolved = st.certain.membership
    return [i for i in range(st.n) if i not in resolved]


def _select(st: SessionState, candidates: list[int]) -> int:
    if st.config.strategy == "random":
        return candidates[int(st.rng.integers(len(candidates)))]
    snap = SelectionSnapshot(
        w=st.current_w,
        embedding=st.embedding,
        assignment=st.assignment,
        certain=st.certain,
        knn_k=st.config.knn_k,
        neighbors=st.neighbors,
    )
    chosen, _ = select_informative(candidates, snap, _MODE_BY_STRATEGY[st.config.strategy],
                                   st.config.b)
    return chosen


def _draw_unqueried_pair(st: SessionState) -> tuple[int, int] | None:
    n = st.n
    total = n * (n - 1) // 2
    if len(st.queried_pairs) >= total:
        return None
    if len(st.queried_pairs) < total // 2:
        while True:
            i = int(st.rng.integers(n))
            j = int(st.rng.integers(n))
            if i == j:
                continue
            pair = (i, j) if i < j else (j, i)
            if pair not in st.queried_pairs:
                return pair
    remaining = [(i, j) for i in range(n) for j in range(i + 1, n)
                 if (i, j) not in st.queried_pairs]
    return remaining[int(st.rng.integers(len(remaining)))]


def advance(st: SessionState, max_iterations: int | None = None) -> SessionState:
    """Drive the loop until Finished, AwaitingAnswer, or an iteration cap."""
    done = 0
    while st.status != FINISHED:
        if st.pending is None and st.pending_raw_pair is None:
            _recluster(st)
            if st.t % st.config.eval_every == 0:
                _evaluate(st)
            candidates = _candidates(st)
            if st.queries_used >= st.config.query_budget or not candidates:
                _evaluate(st)
                st.status = FINISHED
                return st
            if st.config.strategy == "random_pairs":
                pair = _draw_unqueried_pair(st)
                if pair is None:
                    _evaluate(st)
                    st.status = FINISHED
                    return st
                st.pending_raw_pair = pair
            else:
                x = _select(st, candidates)
                st.pending = Resolution(sample=x,
                                        reps=representatives(x, st.certain, st.current_w))
                st.pending_queries_before = st.queries_used

        if st.pending_raw_pair is not None:
            i, j = st.pending_raw_pair
            try:
                answer = st.oracle.answer(i, j)
            except PendingAnswer:
                st.status = AWAITING_ANSWER
                return st
            st.queries_used += 1
            st.queried_pairs.add((i, j) if i < j else (j, i))
            st.q.add(i, j, Kind.MUST_LINK if answer is Answer.MUST_LINK else Kind.CANNOT_LINK)
            st.pending_raw_pair = None
        else:
            try:
                kind, set_idx = st.pending.advance(st.oracle)
            except PendingAnswer:
                st.queries_used = st.pending_queries_before + len(st.pending.asked)
                st.status = AWAITING_ANSWER
                return st
            st.queries_used = st.pending_queries_before + len(st.pending.asked)
            record = commit_resolution(st.pending, kind, set_idx, st.certain)
            st.records.append(record)
            st.q.extend(expand_constraints(record.sample, st.certain))
            st.pending = None
            if st.config.n_c is None and st.certain.m > st.n_c:
                st.n_c = st.certain.m

        st.status = RUNNING
        st.t += 1
        done += 1
        if max_iterations is not None and done >= max_iterations:
            return st
    return st


def step(st: SessionState) -> SessionState:
    """Advance exactly one full iteration (cluster, select, resolve, merge)."""
    return advance(st, max_iterations=1)


def run(cfg: SessionConfig) -> list[CurvePoint]:
    """Run a simulated-oracle session to completion and return its curve."""
    if cfg.oracle != "simulated":
        raise InvalidParameter("run() drives simulated oracles only; "
                               "interactive sessions live in the service")
    st = init_session(cfg)
    advance(st)
    return st.curve


def submit_answer(st: SessionState, pair: tuple[int, int], answer: Answer) -> SessionState:
    """Hand a human answer to an awaiting session and advance it."""
    if st.status != AWAITING_ANSWER:
        raise InvalidParameter("session is not awaiting an answer")
    expected = st.pending_pair()
    if tuple(pair) != expected:
        raise InvalidParameter(f"pair {pair} does not match pending {expected}")
    if not isinstance(st.oracle, InteractiveOracle):
        raise InvalidParameter("session oracle is not interactive")
    st.oracle.provide(pair[0], pair[1], answer)
    st.status = RUNNING
    return advance(st)


# --- persistence ---------------------------------------------------------


def _encode_matrix(m: np.ndarray) -> dict:
    return {"shape": list(m.shape),
            "data": base64.b64encode(np.ascontiguousarray(m, dtype="<f8").tobytes()).decode()}


def _decode_matrix(obj: dict) -> np.ndarray:
    flat = np.frombuffer(base64.b64decode(obj["data"]), dtype="<f8")
    return flat.reshape(obj["shape"]).copy()


def save_session(st: SessionState, path) -> None:
    doc = {
        "version": SESSION_VERSION,
        "config": asdict(st.config),
        "w0": _encode_matrix(st.w0.w),
        "labels": None if st.labels is None else [int(v) for v in st.labels],
        "class_count": st.class_count,
        "features": None if st.features is None else _encode_matrix(st.features),
        "media": st.media,
        "n_c": st.n_c,
        "t": st.t,
        "queries_used": st.queries_used,
        "status": st.status,
        "certain": [sorted(s) for s in st.certain.sets],
        "q": [[i, j, kind.value] for i, j, kind in st.q.entries()],
        "queried_pairs": sorted(st.queried_pairs),
        "records": [
            {"sample": r.sample,
             "asked": [[rep, a.value] for rep, a in r.asked],
             "outcome": [r.outcome[0], r.outcome[1]]}
            for r in st.records
        ],
        "curve": [asdict(p) for p in st.curve],
        "rng_state": _jsonable_rng_state(st.rng),
        "oracle_rng_state": (_jsonable_rng_state(st.oracle.rng)
                             if isinstance(st.oracle, NoisyOracle) else None),
        "answer_log": [[e.i, e.j, e.answer.value, e.flipped] for e in st.oracle.answer_log],
        "pending": None if st.pending is None else {
            "sample": st.pending.sample,
            "reps": [list(r) for r in st.pending.reps],
            "position": st.pending.position,
            "asked": [[rep, a.value] for rep, a in st.pending.asked],
            "queries_before": st.pending_queries_before,
        },
        "pending_raw_pair": st.pending_raw_pair,
    }
    Path(path).write_text(json.dumps(doc))


def _jsonable_rng_state(rng: np.random.Generator) -> dict:
    state = rng.bit_generator.state
    return json.loads(json.dumps(state, default=int))


def load_session(path) -> SessionState:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise IncompatibleSession(f"cannot parse session file: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("version") != SESSION_VERSION:
        raise IncompatibleSession(
            f"unsupported session version {doc.get('version') if isinstance(doc, dict) else None}")
    try:
        cfg = SessionConfig.from_dict(doc["config"])
        labels = None if doc["labels"] is None else np.array(doc["labels"], dtype=np.int64)

        certain = CertainSets()
        for idx, members in enumerate(doc["certain"]):
            certain.sets.append(set(int(v) for v in members))
            for v in members:
                certain.membership[int(v)] = idx

        q = ConstraintSet()
        for i, j, kind in doc["q"]:
            q.add(int(i), int(j), Kind(kind))

        rng = np.random.default_rng()
        rng.bit_generator.state = doc["rng_state"]

        oracle: Oracle
        if cfg.oracle == "interactive":
            oracle = InteractiveOracle()
        elif cfg.noise_rate > 0:
            oracle = NoisyOracle(labels, cfg.noise_rate)
            oracle.rng.bit_generator.state = doc["oracle_rng_state"]
        else:
            oracle = GroundTruthOracle(labels)
        oracle.answer_log = [
            LogEntry(int(i), int(j), Answer(a), bool(f)) for i, j, a, f in doc["answer_log"]
        ]

        w0 = SimilarityMatrix(_decode_matrix(doc["w0"]))
        st = SessionState(
            config=cfg,
            w0=w0,
            labels=labels,
            class_count=doc["class_count"],
            features=None if doc["features"] is None else _decode_matrix(doc["features"]),
            media=None if doc["media"] is None else {int(k): v for k, v in doc["media"].items()},
            certain=certain,
            q=q,
            rng=rng,
            oracle=oracle,
            neighbors=knn_lists(w0, cfg.knn_k),
            n_c=int(doc["n_c"]),
            t=int(doc["t"]),
            queries_used=int(doc["queries_used"]),
            status=doc["status"],
        )
        st.queried_pairs = {(int(i), int(j)) for i, j in doc["queried_pairs"]}
        st.records = [
            QueryRecord(sample=r["sample"],
                        asked=[(int(rep), Answer(a)) for rep, a in r["asked"]],
                        outcome=(r["outcome"][0],
                                 None if r["outcome"][1] is None else int(r["outcome"][1])))
            for r in doc["records"]
        ]
        st.curve = [CurvePoint(**p) for p in doc["curve"]]
        if doc["pending"] is not None:
            p = doc["pending"]
            st.pending = Resolution(
                sample=int(p["sample"]),
                reps=[(int(a), int(b), float(c)) for a, b, c in p["reps"]],
                position=int(p["position"]),
                asked=[(int(rep), Answer(a)) for rep, a in p["asked"]],
            )
            st.pending_queries_before = int(p["queries_before"])
        if doc["pending_raw_pair"] is not None:
            i, j = doc["pending_raw_pair"]
            st.pending_raw_pair = (int(i), int(j))
        return st
    except (KeyError, TypeError, ValueError) as exc:
        raise IncompatibleSession(f"session file is corrupt: {exc}") from exc


def resume(st: SessionState) -> list[CurvePoint]:
    """Continue a loaded simulated-oracle session to completion."""
    advance(st)
    return st.curve
