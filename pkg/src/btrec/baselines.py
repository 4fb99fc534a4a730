"""Next-symbol sequence predictors used as baselines, and the wrapper that
drives them to a budgeted itinerary.

All predictors break ties towards the smallest symbol so that repeated runs
agree exactly.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from typing import Callable, Iterable, Optional, Protocol, Sequence

from .recommender import DurationTable, Itinerary, ItineraryQuery


class NextSymbolModel(Protocol):
    def train(self, sequences: Iterable[Sequence[int]]) -> "NextSymbolModel": ...

    def predict_next(self, context: Sequence[int], excluded: Iterable[int] = ()) -> Optional[int]: ...


def _best(scores, excluded) -> Optional[int]:
    best = None
    for sym, score in scores.items():
        if sym in excluded:
            continue
        if best is None or score > best[1] or (score == best[1] and sym < best[0]):
            best = (sym, score)
    return None if best is None else best[0]


class MarkovModel:
    """First-order Markov chain over bigram counts."""

    def __init__(self):
        self.counts: dict[int, Counter] = defaultdict(Counter)
        self.marginals: Counter = Counter()

    def train(self, sequences):
        for seq in sequences:
            self.marginals.update(seq)
            for a, b in zip(seq, seq[1:]):
                self.counts[a][b] += 1
        return self

    def predict_next(self, context, excluded=()):
        excluded = set(excluded)
        if context and context[-1] in self.counts:
            nxt = _best(self.counts[context[-1]], excluded)
            if nxt is not None:
                return nxt
        return _best(self.marginals, excluded)


class _TrieNode:
    __slots__ = ("children", "count")

    def __init__(self):
        self.children: dict[int, _TrieNode] = {}
        self.count = 0


class Lz78Model:
    """LZ78 phrase trie with traversal counts.

    Each training sequence is parsed from the root into LZ78 phrases (longest
    known phrase plus one new symbol); every node on a parsed phrase's path has
    its count incremented.  The trie is shared across sequences.
    """

    def __init__(self):
        self.root = _TrieNode()

    def _parse(self, seq):
        node = self.root
        for sym in seq:
            child = node.children.get(sym)
            if child is None:
                child = node.children[sym] = _TrieNode()
                child.count += 1
                node = self.root
                continue
            child.count += 1
            node = child

    def train(self, sequences):
        seen = set()
        for seq in sequences:
            seen.update(seq)
            self._parse(seq)
        for sym in seen:
            self.root.children.setdefault(sym, _TrieNode())
        return self

    def _walk(self, path):
        node = self.root
        for sym in path:
            node = node.children.get(sym)
            if node is None:
                return None
        return node

    def predict_next(self, context, excluded=()):
        excluded = set(excluded)
        context = list(context)
        for start in range(len(context) + 1):
            node = self._walk(context[start:])
            if node is None or not node.children:
                continue
            nxt = _best({s: c.count for s, c in node.children.items()}, excluded)
            if nxt is not None:
                return nxt
        return None

    def phrases(self) -> list[tuple[int, ...]]:
        out, stack = [], [((), self.root)]
        while stack:
            path, node = stack.pop()
            for sym, child in node.children.items():
                out.append(path + (sym,))
                stack.append((path + (sym,), child))
        return sorted(out)


class _PTNode:
    __slots__ = ("symbol", "parent", "children")

    def __init__(self, symbol, parent):
        self.symbol = symbol
        self.parent = parent
        self.children: dict[int, _PTNode] = {}


class CptModel:
    """Compact Prediction Tree: prefix tree of training sequences, an inverted
    index from symbol to sequence ids, and a lookup table from sequence id to
    its leaf in the tree."""

    def __init__(self, window: int = 3):
        self.window = window
        self.root = _PTNode(None, None)
        self.inverted: dict[int, set[int]] = defaultdict(set)
        self.lookup: list[_PTNode] = []

    def train(self, sequences):
        for seq in sequences:
            sid = len(self.lookup)
            node = self.root
            for sym in seq:
                if sym not in node.children:
                    node.children[sym] = _PTNode(sym, node)
                node = node.children[sym]
                self.inverted[sym].add(sid)
            self.lookup.append(node)
        return self

    def sequence(self, sid: int) -> list[int]:
        """Rebuild a training sequence by walking up from its leaf."""
        out, node = [], self.lookup[sid]
        while node.parent is not None:
            out.append(node.symbol)
            node = node.parent
        return out[::-1]

    def predict_next(self, context, excluded=()):
        excluded = set(excluded)
        k = min(len(context), self.window)
        if k == 0:
            return None
        recent = set(context[-k:])
        ids = None
        for sym in recent:
            ids = set(self.inverted.get(sym, ())) if ids is None else ids & self.inverted.get(sym, set())
            if not ids:
                return None
        scores: dict[int, float] = defaultdict(float)
        for sid in sorted(ids):
            seq = self.sequence(sid)
            last = max(i for i, s in enumerate(seq) if s in recent)
            for j in range(last + 1, len(seq)):
                scores[seq[j]] += 1.0 / (j - last)
        return _best(scores, excluded)


BASELINES: dict[str, Callable[[], NextSymbolModel]] = {
    "markov": MarkovModel,
    "lz78": Lz78Model,
    "cpt": CptModel,
}


def extend_to_itinerary(model: NextSymbolModel, query: ItineraryQuery,
                        durations: DurationTable, pois: Iterable[int] = ()) -> Itinerary:
    """Append predictions after the source while they fit the budget, then the destination.

    POIs that would overrun the budget are passed to the predictor as excluded,
    the same guard the MLM decoder uses.
    """
    src, dst = query.source_poi, query.dest_poi
    seq = [src]
    universe = set(pois)
    while True:
        total = sum(durations(p) for p in seq) + (durations(dst) if dst != src else 0.0)
        if total > query.time_budget:
            break
        excluded = set(seq) | {dst} | {p for p in universe if total + durations(p) > query.time_budget}
        nxt = model.predict_next(seq, excluded)
        if nxt is None or total + durations(nxt) > query.time_budget:
            break
        seq.append(nxt)
    seq.append(dst)
    return Itinerary(tuple(seq), tuple(durations(p) for p in seq))


class BaselinePredictor:
    """Callable ``query -> Itinerary`` around a trained next-symbol model."""

    def __init__(self, model: NextSymbolModel, durations: DurationTable, pois: Iterable[int]):
        self.model = model
        self.durations = durations
        self.pois = sorted(pois)

    def __call__(self, query: ItineraryQuery) -> Itinerary:
        return extend_to_itinerary(self.model, query, self.durations, self.pois)
