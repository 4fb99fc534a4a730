"""Trajectories as token sentences, and masked training instances built from them.

Every visit becomes a block of tokens, wrapped as ``[CLS] block ... block [SEP]``:

=============  =====================================
Plain          ``POI:p CAT:c``
Personalized   ``USER:u POI:p CAT:c``
Demographic    ``USER:u HOME:h POI:p CAT:c``
=============  =====================================
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, TextIO

import numpy as np

from .ingest import Poi, TrajId, Trajectory, UserProfile

PAD, CLS, SEP, MASK, UNK, UNK_HOME = range(6)
RESERVED = ("[PAD]", "[CLS]", "[SEP]", "[MASK]", "[UNK]", "[UNK_HOME]")
NAMESPACES = ("USER", "HOME", "POI", "CAT")


class CorpusMode(str, enum.Enum):
    PLAIN = "plain"
    PERSONALIZED = "personalized"
    DEMOGRAPHIC = "demographic"

    @property
    def namespaces(self) -> tuple[str, ...]:
        return {CorpusMode.PLAIN: ("POI", "CAT"),
                CorpusMode.PERSONALIZED: ("USER", "POI", "CAT"),
                CorpusMode.DEMOGRAPHIC: ("USER", "HOME", "POI", "CAT")}[self]

    @property
    def block_size(self) -> int:
        return len(self.namespaces)


class TokenNotInVocab(KeyError):
    pass


_WS = re.compile(r"\s+")


def _clean(text) -> str:
    return _WS.sub("_", str(text).strip())


def user_token(user_id: str) -> str:
    return f"USER:{_clean(user_id)}"


def home_token(home: str) -> str:
    return f"HOME:{_clean(home)}"


def poi_token(poi_id: int) -> str:
    return f"POI:{poi_id}"


def cat_token(theme: str) -> str:
    return f"CAT:{_clean(theme)}"


class Vocab:
    """Dense token <-> id map with the reserved tokens at ids 0..5."""

    def __init__(self, tokens: Sequence[str]):
        if tuple(tokens[:len(RESERVED)]) != RESERVED:
            raise ValueError("vocab must start with the reserved tokens")
        self.tokens: tuple[str, ...] = tuple(tokens)
        self.index = {t: i for i, t in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise ValueError("duplicate tokens in vocab")
        self.poi_ids = np.array([i for i, t in enumerate(self.tokens) if t.startswith("POI:")],
                                dtype=np.int64)
        self._poi_of = {i: int(self.tokens[i][4:]) for i in self.poi_ids}

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocab) and self.tokens == other.tokens

    def lookup(self, token: str) -> int:
        try:
            return self.index[token]
        except KeyError:
            raise TokenNotInVocab(token) from None

    def token_of(self, idx: int) -> str:
        return self.tokens[idx]

    def namespace(self, idx: int) -> Optional[str]:
        tok = self.tokens[idx]
        ns, sep, _ = tok.partition(":")
        return ns if sep and ns in NAMESPACES else None

    def is_poi(self, idx: int) -> bool:
        return idx in self._poi_of

    def poi_of(self, idx: int) -> int:
        return self._poi_of[idx]

    def poi_token_id(self, poi_id: int) -> int:
        return self.lookup(poi_token(poi_id))

    @property
    def pois(self) -> list[int]:
        return sorted(self._poi_of.values())

    @property
    def users(self) -> list[str]:
        return sorted(t[5:] for t in self.tokens if t.startswith("USER:"))

    @property
    def mode(self) -> CorpusMode:
        present = {self.namespace(i) for i in range(len(self))}
        if "HOME" in present:
            return CorpusMode.DEMOGRAPHIC
        if "USER" in present:
            return CorpusMode.PERSONALIZED
        return CorpusMode.PLAIN

    def write(self, out: TextIO) -> None:
        for i, tok in enumerate(self.tokens):
            out.write(f"{tok}\t{i}\n")

    @classmethod
    def read(cls, source: Iterable[str]) -> "Vocab":
        rows = []
        for line in source:
            line = line.rstrip("\n")
            if line:
                tok, idx = line.rsplit("\t", 1)
                rows.append((int(idx), tok))
        rows.sort()
        if [i for i, _ in rows] != list(range(len(rows))):
            raise ValueError("vocab ids are not dense")
        return cls([t for _, t in rows])


@dataclass(frozen=True)
class Sentence:
    ids: tuple[int, ...]
    origin: Optional[TrajId] = None

    def __len__(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class MaskedInstance:
    input_ids: tuple[int, ...]
    labels: dict[int, int]   # position -> original token id


def _home_of(user_id: str, profiles: Mapping[str, UserProfile]) -> Optional[str]:
    prof = profiles.get(user_id)
    return prof.home if prof else None


def build_vocab(trajs: Iterable[Trajectory], pois: Mapping[int, Poi],
                profiles: Mapping[str, UserProfile], mode: CorpusMode) -> Vocab:
    mode = CorpusMode(mode)
    spaces: dict[str, set[str]] = {ns: set() for ns in NAMESPACES}
    spaces["POI"] = {poi_token(p) for p in pois}
    spaces["CAT"] = {cat_token(p.theme) for p in pois.values()}
    for t in trajs:
        spaces["USER"].add(user_token(t.user_id))
        home = _home_of(t.user_id, profiles)
        if home is not None:
            spaces["HOME"].add(home_token(home))
    tokens = list(RESERVED)
    for ns in NAMESPACES:
        if ns in mode.namespaces:
            tokens.extend(sorted(spaces[ns]))
    return Vocab(tokens)


def visit_block(vocab: Vocab, mode: CorpusMode, user_id: Optional[str],
                profiles: Mapping[str, UserProfile], poi_id: Optional[int],
                theme: Optional[str]) -> list[int]:
    """Token ids of one visit block; ``poi_id=None`` gives the query block
    (``[MASK]`` in the POI slot, ``[UNK]`` in the category slot)."""
    block = []
    if mode is not CorpusMode.PLAIN:
        block.append(vocab.lookup(user_token(user_id)))
    if mode is CorpusMode.DEMOGRAPHIC:
        home = _home_of(user_id, profiles)
        block.append(UNK_HOME if home is None else vocab.index.get(home_token(home), UNK_HOME))
    if poi_id is None:
        block += [MASK, UNK]
    else:
        block += [vocab.lookup(poi_token(poi_id)), vocab.lookup(cat_token(theme))]
    return block


def encode_route(route: Sequence[Optional[int]], user_id: Optional[str], vocab: Vocab,
                 mode: CorpusMode, pois: Mapping[int, Poi],
                 profiles: Mapping[str, UserProfile],
                 max_len: Optional[int] = None) -> list[int]:
    """``[CLS]`` + one block per route entry + ``[SEP]``; ``None`` entries are query slots.

    Trailing blocks are dropped whole when ``max_len`` would be exceeded.
    """
    mode = CorpusMode(mode)
    ids = [CLS]
    for p in route:
        block = visit_block(vocab, mode, user_id, profiles, p,
                            None if p is None else pois[p].theme)
        if max_len is not None and len(ids) + len(block) + 1 > max_len:
            break
        ids += block
    ids.append(SEP)
    return ids


def trajectory_to_sentence(traj: Trajectory, profiles: Mapping[str, UserProfile],
                           pois: Mapping[int, Poi], mode: CorpusMode, vocab: Vocab,
                           max_len: Optional[int] = None) -> Sentence:
    ids = encode_route(traj.pois, traj.user_id, vocab, mode, pois, profiles, max_len)
    return Sentence(tuple(ids), traj.traj_id)


def build_corpus(trajs: Iterable[Trajectory], profiles: Mapping[str, UserProfile],
                 pois: Mapping[int, Poi], mode: CorpusMode, vocab: Vocab,
                 max_len: Optional[int] = None) -> list[Sentence]:
    return [trajectory_to_sentence(t, profiles, pois, mode, vocab, max_len) for t in trajs]


def mask_for_training(sentence: Sentence, vocab: Vocab, rng: np.random.Generator,
                      mask_rate: float = 0.15) -> MaskedInstance:
    """Select POI positions with probability ``mask_rate`` (at least one) and
    apply the 80/10/10 mask / random-POI / keep substitution.

    When a POI is replaced by ``[MASK]`` the category token right after it is
    replaced by ``[UNK]`` as well (input only, never labelled), which is what a
    recommendation query looks like: the category of the missing POI is unknown.
    """
    if not 0 < mask_rate < 1:
        raise ValueError("mask_rate must be in (0, 1)")
    ids = list(sentence.ids)
    positions = [i for i, t in enumerate(ids) if vocab.is_poi(t)]
    if not positions:
        return MaskedInstance(tuple(ids), {})
    draws = rng.random(len(positions))
    chosen = [p for p, d in zip(positions, draws) if d < mask_rate]
    if not chosen:
        chosen = [positions[int(rng.integers(len(positions)))]]
    labels = {}
    for pos in chosen:
        labels[pos] = ids[pos]
        r = rng.random()
        if r < 0.8:
            ids[pos] = MASK
            if pos + 1 < len(ids) and vocab.namespace(ids[pos + 1]) == "CAT":
                ids[pos + 1] = UNK
        elif r < 0.9:
            ids[pos] = int(vocab.poi_ids[rng.integers(len(vocab.poi_ids))])
    return MaskedInstance(tuple(ids), labels)


def poi_sequence(sentence: Sentence, vocab: Vocab) -> list[int]:
    return [vocab.poi_of(t) for t in sentence.ids if vocab.is_poi(t)]


def write_corpus(sentences: Iterable[Sentence], vocab: Vocab, out: TextIO) -> None:
    for s in sentences:
        out.write(" ".join(vocab.token_of(i) for i in s.ids) + "\n")


def read_corpus(source: Iterable[str], vocab: Vocab) -> list[Sentence]:
    return [Sentence(tuple(vocab.lookup(t) for t in line.split()))
            for line in source if line.strip()]
