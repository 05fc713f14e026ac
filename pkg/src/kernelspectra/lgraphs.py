"""Labeled alternating cycles and their census.

A cycle of 2l vertices alternates p-vertices and n-vertices; labelings of
it index the nonzero terms in trace-moment expansions of the dominant
kernel-matrix component (multi-labelings: each n-vertex carries a tuple
of distinct labels) and of the deformed-GUE comparison model
(simple labelings: one label or the empty label per n-vertex).  This
module enumerates the labeling equivalence classes at small cycle length,
computes their combinatorial statistics, applies the label-simplifying
map between the two families, machine-checks the counting lemmas the
moment comparison rests on, and evaluates small trace moments exactly as
an independent oracle.

Vertex s (0-based, s < l) denotes the n-vertex between p-vertex s and
p-vertex (s+1) mod l.  Tuple order within an n-vertex is not a class
invariant here: canonical forms store tuples sorted.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import rng as rngmod
from .errors import ConfigError, ConsistencyError, SizeCapError

MAX_CYCLE_LEN = 6  # enumeration is exhaustive; growth beyond this is untested
DEFAULT_STATE_CAP = 10**7

TRACE_L_CAP = 4
TRACE_N_CAP = 6
TRACE_P_CAP = 6
TRACE_D_CAP = 3


def _as_excess(value: Fraction):
    """Excesses are half-integers; return int when integral."""
    return int(value) if value.denominator == 1 else value


# ---------------------------------------------------------------------------
# multi-labelings


@dataclass(frozen=True)
class MultiLabeling:
    p_labels: tuple[int, ...]
    n_tuples: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.p_labels) != len(self.n_tuples):
            raise ConfigError("need one n-tuple per p-vertex")
        if len(self.p_labels) < 2:
            raise ConfigError("cycle length must be >= 2")
        for t in self.n_tuples:
            if len(t) == 0:
                raise ConfigError("n-tuples must be nonempty")
            if len(set(t)) != len(t):
                raise ConfigError(f"n-tuple {t} has repeated labels")

    @property
    def l(self) -> int:
        return len(self.p_labels)

    @property
    def tuple_sizes(self) -> tuple[int, ...]:
        return tuple(len(t) for t in self.n_tuples)

    @property
    def total_n_labels(self) -> int:
        return sum(self.tuple_sizes)

    @property
    def distinct_p(self) -> int:
        return len(set(self.p_labels))

    @property
    def distinct_n(self) -> int:
        return len({j for t in self.n_tuples for j in t})

    @property
    def m(self) -> int:
        """Total distinct labels; p-labels and n-labels never identified."""
        return self.distinct_p + self.distinct_n

    @property
    def excess(self):
        return _as_excess(Fraction(self.l + self.total_n_labels, 2) + 1 - self.m)

    @property
    def parity_ok(self) -> bool:
        """Whether l + sum(d_s) is even, making the excess an integer.
        Half-integer excesses occur on valid labelings; they are flagged,
        not rejected."""
        return (self.l + self.total_n_labels) % 2 == 0

    def edge_pair_counts(self) -> dict[tuple[int, int], int]:
        """b[i, j]: edges whose p-endpoint is labeled i and whose n-endpoint
        tuple contains j.  Each n-vertex has two incident edges."""
        b: dict[tuple[int, int], int] = {}
        l = self.l
        for s, t in enumerate(self.n_tuples):
            for i in (self.p_labels[s], self.p_labels[(s + 1) % l]):
                for j in t:
                    b[(i, j)] = b.get((i, j), 0) + 1
        return b

    def n_label_counts(self) -> dict[int, int]:
        """N[j]: number of n-vertices whose tuple contains j."""
        counts: dict[int, int] = {}
        for t in self.n_tuples:
            for j in t:
                counts[j] = counts.get(j, 0) + 1
        return counts

    def consecutive_p_pair_counts(self) -> dict[tuple[int, int], int]:
        """P[i, i']: occurrences of {i, i'} as consecutive p-labels."""
        counts: dict[tuple[int, int], int] = {}
        l = self.l
        for s in range(l):
            i1, i2 = self.p_labels[s], self.p_labels[(s + 1) % l]
            key = (min(i1, i2), max(i1, i2))
            counts[key] = counts.get(key, 0) + 1
        return counts

    def validate(self, max_tuple_size: int | None = None) -> list[str]:
        """Condition-by-condition check; empty list means valid."""
        problems = []
        l = self.l
        for s in range(l):
            if self.p_labels[s] == self.p_labels[(s + 1) % l]:
                problems.append(f"adjacent p-vertices {s} and {(s + 1) % l} share label")
        if max_tuple_size is not None:
            for s, t in enumerate(self.n_tuples):
                if len(t) > max_tuple_size:
                    problems.append(f"n-vertex {s} has {len(t)} labels > cap {max_tuple_size}")
        for (i, j), count in self.edge_pair_counts().items():
            if count % 2 != 0:
                problems.append(f"label pair ({i}, {j}) meets an odd number of edges ({count})")
        return problems

    @property
    def is_valid(self) -> bool:
        return not self.validate()

    def canonical_key(self):
        """Complete invariant of the equivalence class under independent
        relabelings of p-labels and n-labels (tuple order quotiented out):
        the first-appearance-renamed p-sequence plus the multiset of
        per-label occurrence sets."""
        rename: dict[int, int] = {}
        p_key = []
        for i in self.p_labels:
            if i not in rename:
                rename[i] = len(rename) + 1
            p_key.append(rename[i])
        occ: dict[int, list[int]] = {}
        for s, t in enumerate(self.n_tuples):
            for j in t:
                occ.setdefault(j, []).append(s)
        n_key = tuple(sorted(tuple(v) for v in occ.values()))
        return (self.l, tuple(p_key), n_key)

    def canonical(self) -> "MultiLabeling":
        """The canonical representative: labels renumbered 1.. in a
        deterministic order, tuples sorted."""
        l, p_key, n_key = self.canonical_key()
        tuples: list[list[int]] = [[] for _ in range(l)]
        for new_j, occ in enumerate(n_key, start=1):
            for s in occ:
                tuples[s].append(new_j)
        return MultiLabeling(p_labels=p_key, n_tuples=tuple(tuple(sorted(t)) for t in tuples))


def excess(ml: MultiLabeling):
    """(l + sum d_s)/2 + 1 - m; nonnegative for valid labelings, integer
    exactly when l + sum d_s is even (see MultiLabeling.parity_ok)."""
    return ml.excess


# ---------------------------------------------------------------------------
# simple labelings


@dataclass(frozen=True)
class SimpleLabeling:
    p_labels: tuple[int, ...]
    n_labels: tuple[int | None, ...]  # None is the empty label

    def __post_init__(self):
        if len(self.p_labels) != len(self.n_labels):
            raise ConfigError("need one n-label slot per p-vertex")

    @property
    def l(self) -> int:
        return len(self.p_labels)

    @property
    def filled(self) -> int:
        """Number of n-vertices with a non-empty label."""
        return sum(1 for j in self.n_labels if j is not None)

    @property
    def distinct_p(self) -> int:
        return len(set(self.p_labels))

    @property
    def distinct_n(self) -> int:
        return len({j for j in self.n_labels if j is not None})

    @property
    def m(self) -> int:
        return self.distinct_p + self.distinct_n

    @property
    def excess(self):
        return _as_excess(Fraction(self.l + self.filled, 2) + 1 - self.m)

    def validate(self) -> list[str]:
        problems = []
        l = self.l
        for s in range(l):
            if self.p_labels[s] == self.p_labels[(s + 1) % l]:
                problems.append(f"adjacent p-vertices {s} and {(s + 1) % l} share label")
        b: dict[tuple[int, int], int] = {}
        triples: dict[tuple[int, int], int] = {}
        for s, j in enumerate(self.n_labels):
            i1, i2 = self.p_labels[s], self.p_labels[(s + 1) % l]
            if j is None:
                triples[(i1, i2)] = triples.get((i1, i2), 0) + 1
            else:
                b[(i1, j)] = b.get((i1, j), 0) + 1
                b[(i2, j)] = b.get((i2, j), 0) + 1
        for (i, j), count in b.items():
            if count % 2 != 0:
                problems.append(f"label pair ({i}, {j}) meets an odd number of edges ({count})")
        for (i1, i2), count in triples.items():
            if triples.get((i2, i1), 0) != count:
                problems.append(
                    f"empty-label runs ({i1}, -, {i2}) occur {count} times but "
                    f"({i2}, -, {i1}) occur {triples.get((i2, i1), 0)}"
                )
        return problems

    @property
    def is_valid(self) -> bool:
        return not self.validate()

    def canonical_key(self):
        rename: dict[int, int] = {}
        p_key = []
        for i in self.p_labels:
            if i not in rename:
                rename[i] = len(rename) + 1
            p_key.append(rename[i])
        occ: dict[int, list[int]] = {}
        for s, j in enumerate(self.n_labels):
            if j is not None:
                occ.setdefault(j, []).append(s)
        n_key = tuple(sorted(tuple(v) for v in occ.values()))
        return (self.l, tuple(p_key), n_key)

    def canonical(self) -> "SimpleLabeling":
        l, p_key, n_key = self.canonical_key()
        labels: list[int | None] = [None] * l
        for new_j, occ in enumerate(n_key, start=1):
            for s in occ:
                labels[s] = new_j
        return SimpleLabeling(p_labels=p_key, n_labels=tuple(labels))


# ---------------------------------------------------------------------------
# enumeration


def _canonical_p_sequences(l: int, cap: int) -> list[tuple[int, ...]]:
    """First-appearance-canonical p-label cycles with distinct neighbors."""
    out: list[tuple[int, ...]] = []

    def extend(seq: list[int], used: int):
        if len(seq) == l:
            if seq[-1] != seq[0]:
                out.append(tuple(seq))
            return
        for lab in range(1, min(used + 1, cap) + 1):
            if lab == seq[-1]:
                continue
            seq.append(lab)
            extend(seq, max(used, lab))
            seq.pop()

    extend([1], 1)
    return out


def enumerate_multilabelings(
    l: int,
    max_tuple_size: int,
    p_label_cap: int | None = None,
    n_label_cap: int | None = None,
    state_cap: int = DEFAULT_STATE_CAP,
) -> list[MultiLabeling]:
    """All multi-labeling equivalence classes of the 2l-cycle with tuple
    sizes up to max_tuple_size, as canonical representatives.

    Backtracking search in canonical form (fresh labels take consecutive
    numbers) with parity pruning on the even-incidence condition; the
    final n-vertex is forced, since its tuple must repair every odd
    incidence pair exactly.  Raises SizeCapError when the visited state
    count passes state_cap.
    """
    if not 2 <= l <= MAX_CYCLE_LEN:
        raise SizeCapError(f"cycle length must be in [2, {MAX_CYCLE_LEN}], got {l}")
    if max_tuple_size < 1:
        raise ConfigError(f"max_tuple_size must be >= 1, got {max_tuple_size}")
    p_cap = p_label_cap if p_label_cap is not None else l
    n_cap = n_label_cap if n_label_cap is not None else max_tuple_size * l

    found: dict[tuple, MultiLabeling] = {}
    states = 0

    for pseq in _canonical_p_sequences(l, p_cap):
        tuples: list[tuple[int, ...]] = []
        odd_rows: dict[int, set[int]] = {}  # n-label -> p-labels with odd incidence

        def toggle(s: int, labels: tuple[int, ...]):
            for i in (pseq[s], pseq[(s + 1) % l]):
                for j in labels:
                    rows = odd_rows.setdefault(j, set())
                    rows.symmetric_difference_update({i})
                    if not rows:
                        del odd_rows[j]

        def candidates(s: int, used: int):
            if s == l - 1:
                needed = set(odd_rows)
                if not 1 <= len(needed) <= max_tuple_size:
                    return
                rows = {pseq[s], pseq[(s + 1) % l]}
                if all(odd_rows[j] == rows for j in needed):
                    yield tuple(sorted(needed)), used
                return
            for size in range(1, max_tuple_size + 1):
                for n_old in range(0, min(size, used) + 1):
                    n_new = size - n_old
                    if used + n_new > n_cap:
                        continue
                    fresh = tuple(range(used + 1, used + n_new + 1))
                    for old in itertools.combinations(range(1, used + 1), n_old):
                        yield old + fresh, used + n_new

        def search(s: int, used: int):
            nonlocal states
            states += 1
            if states > state_cap:
                raise SizeCapError(
                    f"enumeration exceeded the state cap {state_cap}; tighten the label caps"
                )
            if s == l:
                if odd_rows:
                    return
                ml = MultiLabeling(p_labels=pseq, n_tuples=tuple(tuples))
                if ml.validate(max_tuple_size):
                    raise ConsistencyError(f"search emitted an invalid labeling {ml}")
                canon = ml.canonical()
                found.setdefault(canon.canonical_key(), canon)
                return
            remaining = l - s - 1
            for labels, used_after in candidates(s, used):
                toggle(s, labels)
                # one future inclusion of j repairs at most two of its odd rows
                need = sum((len(rows) + 1) // 2 for rows in odd_rows.values())
                if need <= max_tuple_size * remaining:
                    tuples.append(labels)
                    search(s + 1, used_after)
                    tuples.pop()
                toggle(s, labels)

        search(0, 0)

    return [found[k] for k in sorted(found)]


def enumerate_simplelabelings(
    l: int,
    state_cap: int = DEFAULT_STATE_CAP,
) -> list[SimpleLabeling]:
    """All simple-labeling equivalence classes of the 2l-cycle (canonical
    representatives).  Small search: each n-vertex takes one label from a
    first-appearance alphabet or the empty label; full validation filters
    the candidates."""
    if not 2 <= l <= MAX_CYCLE_LEN:
        raise SizeCapError(f"cycle length must be in [2, {MAX_CYCLE_LEN}], got {l}")
    found: dict[tuple, SimpleLabeling] = {}
    states = 0
    for pseq in _canonical_p_sequences(l, l):
        stack: list[int | None] = []

        def search(s: int, used: int):
            nonlocal states
            states += 1
            if states > state_cap:
                raise SizeCapError(f"enumeration exceeded the state cap {state_cap}")
            if s == l:
                sl = SimpleLabeling(p_labels=pseq, n_labels=tuple(stack))
                if sl.is_valid:
                    canon = sl.canonical()
                    found.setdefault(canon.canonical_key(), canon)
                return
            for choice in [None, *range(1, min(used + 1, l) + 1)]:
                stack.append(choice)
                search(s + 1, used + 1 if choice == used + 1 else used)
                stack.pop()

        search(0, 0)
    return [found[k] for k in sorted(found)]


# ---------------------------------------------------------------------------
# lemma census


def verify_lemmas(classes: list[MultiLabeling], max_tuple_size: int) -> list[dict]:
    """Machine-check the counting lemmas over an enumerated class census.

    Checks, per class: the label-count bound (excess >= 0); the bound
    sum_{b_ij > 2} b_ij <= 12 * excess; that every n-label appears on at
    least two n-vertices; and that the label-simplifying image is a valid
    simple labeling with excess >= 0 (the simple-labeling label-count
    bound).  Violations are returned as data, one dict per failure.
    """
    violations = []
    for ml in classes:
        problems = ml.validate(max_tuple_size)
        if problems:
            violations.append({"labeling": ml, "check": "validity", "detail": problems})
            continue
        delta = Fraction(ml.excess)
        if delta < 0:
            violations.append({"labeling": ml, "check": "label_count_bound", "detail": delta})
        heavy = sum(b for b in ml.edge_pair_counts().values() if b > 2)
        if heavy > 12 * delta:
            violations.append(
                {"labeling": ml, "check": "heavy_pair_bound", "detail": (heavy, delta)}
            )
        for j, count in ml.n_label_counts().items():
            if count < 2:
                violations.append(
                    {"labeling": ml, "check": "n_label_repetition", "detail": (j, count)}
                )
        image = label_simplifying_map(ml)
        image_problems = image.validate()
        if image_problems:
            violations.append(
                {"labeling": ml, "check": "image_validity", "detail": image_problems}
            )
        elif Fraction(image.excess) < 0:
            violations.append(
                {"labeling": ml, "check": "simple_label_count_bound", "detail": image.excess}
            )
    return violations


# ---------------------------------------------------------------------------
# label-simplifying map


def _classify(ml: MultiLabeling):
    """Tag every n-vertex: 'good_single', 'bad' (single or not), or a good
    pair id shared by exactly two vertices."""
    counts = ml.n_label_counts()
    single = [len(t) == 1 for t in ml.n_tuples]
    by_set: dict[frozenset, list[int]] = {}
    for s, t in enumerate(ml.n_tuples):
        by_set.setdefault(frozenset(t), []).append(s)

    tags: list[object] = [None] * ml.l
    pair_id = 0
    pairs: dict[int, tuple[int, int]] = {}
    for s, t in enumerate(ml.n_tuples):
        if tags[s] is not None:
            continue
        if single[s]:
            j = t[0]
            vertices = by_set.get(frozenset((j,)), [])
            if counts[j] == len(vertices) and all(single[v] for v in vertices):
                tags[s] = "good_single"
            else:
                tags[s] = "bad"
            continue
        mates = by_set[frozenset(t)]
        if len(mates) == 2 and all(counts[j] == 2 for j in t):
            a, b = mates
            pairs[pair_id] = (a, b)
            tags[a] = tags[b] = ("pair", pair_id)
            pair_id += 1
        else:
            tags[s] = "bad"
    return tags, pairs


def label_simplifying_map(ml: MultiLabeling) -> SimpleLabeling:
    """Map a multi-labeling to a simple labeling.

    Good pairs whose surrounding p-labels sit in the "parallel" (improper)
    arrangement are first made antiparallel by reversing the cycle segment
    between the p-vertices that follow the two pair members (smallest
    tuple first, for determinism); then good pairs become the empty label,
    good singles keep their label, and every bad n-vertex receives one
    shared fresh label.  The p-labels, and hence their distinct count, are
    preserved.
    """
    if ml.validate():
        raise ConfigError(f"label-simplifying map needs a valid labeling: {ml.validate()}")
    l = ml.l
    tags, _ = _classify(ml)

    # cycle slots: even index 2s = p-vertex s, odd index 2s+1 = n-vertex s
    slots: list[object] = []
    for s in range(l):
        slots.append(("p", ml.p_labels[s]))
        slots.append(("n", ml.n_tuples[s], tags[s]))

    def pair_positions() -> dict[int, list[int]]:
        pos: dict[int, list[int]] = {}
        for idx in range(1, 2 * l, 2):
            tag = slots[idx][2]
            if isinstance(tag, tuple):
                pos.setdefault(tag[1], []).append(idx)
        return pos

    def improper_pairs() -> list[tuple[tuple, int]]:
        out = []
        for pid, (ia, ib) in sorted(pair_positions().items()):
            before_a = slots[(ia - 1) % (2 * l)][1]
            after_a = slots[(ia + 1) % (2 * l)][1]
            before_b = slots[(ib - 1) % (2 * l)][1]
            after_b = slots[(ib + 1) % (2 * l)][1]
            if before_a == after_b and before_b == after_a:
                continue  # antiparallel: nothing to do
            if before_a == before_b and after_a == after_b:
                out.append((tuple(sorted(slots[ia][1])), pid))
            else:
                raise ConsistencyError(
                    f"good pair {pid} has mismatched surrounding p-labels; "
                    "input cannot satisfy the even-incidence condition"
                )
        return out

    guard = len(pair_positions()) + 2
    while True:
        todo = improper_pairs()
        if not todo:
            break
        guard -= 1
        if guard < 0:
            raise ConsistencyError("segment reversals failed to terminate")
        _, pid = min(todo)
        ia, ib = pair_positions()[pid]
        start, end = (ia + 1) % (2 * l), (ib + 1) % (2 * l)
        run = [start]
        while run[-1] != end:
            run.append((run[-1] + 1) % (2 * l))
        values = [slots[i] for i in run]
        for i, v in zip(run, reversed(values)):
            slots[i] = v

    fresh = max(j for t in ml.n_tuples for j in t) + 1
    p_labels = tuple(slots[2 * s][1] for s in range(l))
    n_labels: list[int | None] = []
    for s in range(l):
        _, t, tag = slots[2 * s + 1]
        if isinstance(tag, tuple):
            n_labels.append(None)
        elif tag == "good_single":
            n_labels.append(t[0])
        else:
            n_labels.append(fresh)
    out = SimpleLabeling(p_labels=p_labels, n_labels=tuple(n_labels))
    problems = out.validate()
    if problems:
        raise ConsistencyError(f"label-simplifying image failed validation: {problems}")
    if out.distinct_p != ml.distinct_p:
        raise ConsistencyError("label-simplifying map changed the distinct p-label count")
    return out


# ---------------------------------------------------------------------------
# exact trace moments (oracle)


def _entry_moment_fn(entry_law):
    if entry_law == "standard_gaussian":

        def mom(k: int) -> float:
            if k % 2 == 1:
                return 0.0
            out = 1.0
            for t in range(k - 1, 0, -2):
                out *= t
            return out

        return mom
    if entry_law == "symmetric_rademacher":
        return lambda k: 0.0 if k % 2 == 1 else 1.0
    if isinstance(entry_law, tuple) and entry_law[0] == "symmetric_discrete":
        values = np.asarray(entry_law[1], dtype=float)
        probs = np.asarray(entry_law[2], dtype=float)
        return lambda k: float(np.dot(probs, values**k))
    raise ConfigError(f"unknown entry law {entry_law!r}")


def exact_trace_moment(l: int, n: int, p: int, coeffs, entry_law="standard_gaussian") -> float:
    """E[Tr Q(X)^l] for the dominant (distinct-index) matrix Q of the
    kernel sum_d coeffs[d-1] h_d, evaluated exactly.

    The expectation is the labeled-cycle sum; it is evaluated by dynamic
    programming over data columns (independence factorizes the entry-
    moment products column by column), which reorganizes the sum over all
    index tuples without approximation.  Tiny sizes only.
    """
    coeffs = [float(c) for c in coeffs]
    D = len(coeffs)
    if not 2 <= l <= TRACE_L_CAP:
        raise SizeCapError(f"l must be in [2, {TRACE_L_CAP}], got {l}")
    if not 2 <= n <= TRACE_N_CAP or not 2 <= p <= TRACE_P_CAP:
        raise SizeCapError(f"(n, p) must be within ({TRACE_N_CAP}, {TRACE_P_CAP}), got {(n, p)}")
    if not 1 <= D <= TRACE_D_CAP:
        raise SizeCapError(f"need 1 <= len(coeffs) <= {TRACE_D_CAP}, got {D}")
    mom = _entry_moment_fn(entry_law)

    total = 0.0
    for pattern in _canonical_p_sequences(l, min(l, p)):
        r = len(set(pattern))
        multiplicity = 1.0
        for t in range(r):
            multiplicity *= p - t

        # per-column subset weights: T is the set of cycle positions whose
        # tuple picks up the column's label
        weights = []
        for mask in range(2**l):
            T = [s for s in range(l) if mask >> s & 1]
            rows: dict[int, int] = {}
            for s in T:
                for i in (pattern[s], pattern[(s + 1) % l]):
                    rows[i] = rows.get(i, 0) + 1
            w = 1.0
            for count in rows.values():
                w *= mom(count)
                if w == 0.0:
                    break
            if w != 0.0:
                weights.append((tuple(T), w))

        state = {(0,) * l: 1.0}
        for _ in range(n):
            new_state: dict[tuple[int, ...], float] = {}
            for sizes, acc in state.items():
                for T, w in weights:
                    grown = list(sizes)
                    ok = True
                    for s in T:
                        grown[s] += 1
                        if grown[s] > D:
                            ok = False
                            break
                    if ok:
                        key = tuple(grown)
                        new_state[key] = new_state.get(key, 0.0) + acc * w
            state = new_state

        for sizes, acc in state.items():
            if any(d == 0 for d in sizes):
                continue
            coef = 1.0
            for d in sizes:
                coef *= coeffs[d - 1] * math.sqrt(math.factorial(d)) * n ** (-(d + 1) / 2.0)
            total += multiplicity * coef * acc
    return total


def first_order_matrix(X: np.ndarray, coeffs) -> np.ndarray:
    """The dominant matrix Q(X): entries are the distinct-index symmetric
    sums of the entry products, weighted by the kernel coefficients."""
    p, n = X.shape
    coeffs = np.asarray(coeffs, dtype=float)
    D = len(coeffs)
    scale = np.array(
        [coeffs[d - 1] * math.sqrt(math.factorial(d) / float(n) ** d) for d in range(1, D + 1)]
    )
    Q = np.zeros((p, p))
    for i in range(p):
        for i2 in range(i + 1, p):
            z = X[i] * X[i2]
            e = np.zeros(D + 1)
            e[0] = 1.0
            for zj in z:
                for k in range(D, 0, -1):
                    e[k] += zj * e[k - 1]
            Q[i, i2] = Q[i2, i] = np.dot(scale, e[1:]) / math.sqrt(n)
    return Q


def sample_trace_moment(
    l: int,
    n: int,
    p: int,
    coeffs,
    entry_law="standard_gaussian",
    trials: int = 10**5,
    seed: int = 0,
) -> tuple[float, float]:
    """Monte Carlo (mean, standard error) of Tr Q(X)^l; cross-checks
    exact_trace_moment."""
    if not 2 <= l <= TRACE_L_CAP:
        raise SizeCapError(f"l must be in [2, {TRACE_L_CAP}], got {l}")
    coeffs = np.asarray(coeffs, dtype=float)
    D = len(coeffs)
    gen = rngmod.derive_rng(seed, rngmod.STREAM_TRIAL)
    scale = np.array(
        [coeffs[d - 1] * math.sqrt(math.factorial(d) / float(n) ** d) for d in range(1, D + 1)]
    )
    values = np.empty(trials)
    batch = max(1, min(trials, 20000))
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        if entry_law == "standard_gaussian":
            X = gen.standard_normal((b, p, n))
        elif entry_law == "symmetric_rademacher":
            X = gen.integers(0, 2, size=(b, p, n)).astype(float) * 2.0 - 1.0
        else:
            vals = np.asarray(entry_law[1], dtype=float)
            probs = np.asarray(entry_law[2], dtype=float)
            X = vals[gen.choice(len(vals), size=(b, p, n), p=probs)]
        Q = np.zeros((b, p, p))
        for i in range(p):
            for i2 in range(i + 1, p):
                z = X[:, i, :] * X[:, i2, :]
                e = np.zeros((b, D + 1))
                e[:, 0] = 1.0
                for j in range(n):
                    for k in range(D, 0, -1):
                        e[:, k] += z[:, j] * e[:, k - 1]
                q = e[:, 1:] @ scale / math.sqrt(n)
                Q[:, i, i2] = Q[:, i2, i] = q
        if l == 2:
            tr = np.einsum("bij,bji->b", Q, Q)
        elif l == 3:
            tr = np.einsum("bij,bjk,bki->b", Q, Q, Q)
        else:
            Q2 = Q @ Q
            tr = np.einsum("bij,bji->b", Q2, Q2)
        values[done : done + b] = tr
        done += b
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(trials))
    return mean, se
