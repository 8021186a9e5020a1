"""Sparse feature extraction for tweets.

Extractors share one tokenization and write into disjoint namespaces:
``wn:`` word n-grams, ``cn:`` character n-grams, ``we:`` averaged embedding
dimensions, ``lex:<name>:<class>`` lexicon aggregates.  Feature vectors are
plain dicts holding no zero values.

Tokens inside a negated context (from a negator word up to the next
punctuation token) render with a ``NEG-`` prefix for the n-gram and lexicon
extractors; embedding lookup ignores the prefix.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import ParseError, ResourceError, ValidationError

FeatureVector = dict[str, float]

NEG_PREFIX = "NEG-"

_TOKEN_RE = re.compile(
    r"""
    https?://\S+ | www\.\S+            # URLs
    | @\w+                             # mentions
    | \#\w+                            # hashtags
    | [<>]?[:;=8xX][-o*']?[()\[\]dDpP/\\|@}{3] # emoticons  :) ;-( :P =D :'( <3
    | \d+(?:[.,]\d+)*                  # numbers
    | [a-zA-Z_]\w*(?:['’]\w+)*    # words, apostrophes kept inside
    | [^\w\s]+                         # punctuation runs
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    surface: str
    negated: bool = False

    def __post_init__(self):
        if not self.surface:
            raise ValidationError("token surface must be non-empty")

    def render(self) -> str:
        return NEG_PREFIX + self.surface if self.negated else self.surface


def default_negators() -> frozenset[str]:
    text = resources.files("bws_intensity").joinpath("data/negators.txt").read_text()
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


def load_negators(path) -> frozenset[str]:
    with open(path, encoding="utf-8") as fh:
        return frozenset(w.strip().lower() for w in fh if w.strip())


def tokenize(text: str) -> list[Token]:
    """Lowercased tokens; URLs, mentions, hashtags and emoticons stay whole,
    other punctuation splits off."""
    return [Token(surface=m.group(0).lower()) for m in _TOKEN_RE.finditer(text)]


def _is_punctuation(surface: str) -> bool:
    return not any(ch.isalnum() for ch in surface)


def mark_negation(
    tokens: Sequence[Token], negators: Optional[Iterable[str]] = None
) -> list[Token]:
    """Flag tokens strictly after a negator, up to the next punctuation token."""
    negator_set = frozenset(negators) if negators is not None else default_negators()
    out = []
    in_scope = False
    for tok in tokens:
        if _is_punctuation(tok.surface):
            in_scope = False
            out.append(Token(surface=tok.surface, negated=False))
            continue
        out.append(Token(surface=tok.surface, negated=in_scope))
        if tok.surface in negator_set:
            in_scope = True
    return out


def word_ngrams(
    tokens: Sequence[Token], n_min: int = 1, n_max: int = 4
) -> FeatureVector:
    """Binary presence features over rendered-token n-grams."""
    if n_min > n_max:
        raise ValidationError("n_min must not exceed n_max")
    surfaces = [t.render() for t in tokens]
    vec: FeatureVector = {}
    for n in range(n_min, n_max + 1):
        for i in range(len(surfaces) - n + 1):
            vec["wn:" + " ".join(surfaces[i : i + n])] = 1.0
    return vec


def char_ngrams(text: str, n_min: int = 3, n_max: int = 5) -> FeatureVector:
    """Binary presence features over character n-grams of the collapsed text."""
    if n_min > n_max:
        raise ValidationError("n_min must not exceed n_max")
    collapsed = " ".join(text.lower().split())
    vec: FeatureVector = {}
    for n in range(n_min, n_max + 1):
        for i in range(len(collapsed) - n + 1):
            vec["cn:" + collapsed[i : i + n]] = 1.0
    return vec


@dataclass(frozen=True)
class EmbeddingTable:
    dimension: int
    vectors: dict[str, np.ndarray]

    def __post_init__(self):
        for word, vec in self.vectors.items():
            if vec.shape != (self.dimension,):
                raise ValidationError(
                    f"embedding for {word!r} has dimension {vec.shape}, "
                    f"table declares {self.dimension}"
                )


def load_embeddings(path) -> EmbeddingTable:
    """Text format: a first line with the dimension, then `word v1 .. vd`."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        try:
            dim = int(header.split()[0])
        except (ValueError, IndexError):
            raise ParseError(f"bad embedding header {header!r}", 1) from None
        vectors = {}
        for line_number, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split(" ")
            if len(parts) == 1 and not parts[0]:
                continue
            if len(parts) != dim + 1:
                raise ParseError(
                    f"expected word + {dim} values, found {len(parts)} fields",
                    line_number,
                )
            try:
                vec = np.array([float(v) for v in parts[1:]], dtype=np.float64)
            except ValueError:
                raise ParseError("non-numeric embedding value", line_number) from None
            vectors[parts[0]] = vec
    return EmbeddingTable(dimension=dim, vectors=vectors)


def embedding_average(tokens: Sequence[Token], table: EmbeddingTable) -> FeatureVector:
    """Mean embedding of in-vocabulary tokens (negation prefix ignored).

    All-OOV or empty input yields the empty vector.
    """
    found = [table.vectors[t.surface] for t in tokens if t.surface in table.vectors]
    if not found:
        return {}
    mean = np.mean(found, axis=0)
    return {f"we:{k}": float(v) for k, v in enumerate(mean) if v != 0.0}


@dataclass(frozen=True)
class Lexicon:
    """Word -> class -> value associations.

    nominal mode: membership counts; numeric mode: value sums.
    """

    name: str
    mode: str
    entries: dict[str, dict[str, float]]
    classes: frozenset[str]

    def __post_init__(self):
        if self.mode not in ("nominal", "numeric"):
            raise ValidationError(f"unknown lexicon mode {self.mode!r}")
        for word, assoc in self.entries.items():
            for cls, value in assoc.items():
                if cls not in self.classes:
                    raise ValidationError(
                        f"lexicon {self.name!r}: entry {word!r} uses undeclared "
                        f"class {cls!r}"
                    )
                if not np.isfinite(value):
                    raise ValidationError(
                        f"lexicon {self.name!r}: non-finite value for {word!r}"
                    )


def load_lexicon(path, name: Optional[str] = None) -> Lexicon:
    """TSV `word <TAB> class <TAB> value` preceded by `# mode: ...` (and an
    optional `# name: ...`) header line."""
    mode = None
    lex_name = name
    entries: dict[str, dict[str, float]] = {}
    classes: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition(":")
                key = key.strip().lower()
                if key == "mode":
                    mode = value.strip().lower()
                elif key == "name" and lex_name is None:
                    lex_name = value.strip()
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise ParseError("expected 3 tab-separated columns", line_number)
            word, cls, raw_value = cols
            try:
                value = float(raw_value)
            except ValueError:
                raise ParseError(f"bad value {raw_value!r}", line_number) from None
            entries.setdefault(word, {})[cls] = value
            classes.add(cls)
    if mode is None:
        raise ParseError("lexicon file lacks a '# mode:' header", 1)
    if lex_name is None:
        lex_name = os.path.splitext(os.path.basename(str(path)))[0]
    return Lexicon(
        name=lex_name, mode=mode, entries=entries, classes=frozenset(classes)
    )


def lexicon_features(tokens: Sequence[Token], lexicon: Lexicon) -> FeatureVector:
    """Per-class counts (nominal) or value sums (numeric) over token
    occurrences.  Negated tokens match only under their NEG- surface."""
    acc: dict[str, float] = {}
    for tok in tokens:
        assoc = lexicon.entries.get(tok.render())
        if not assoc:
            continue
        for cls, value in assoc.items():
            key = f"lex:{lexicon.name}:{cls}"
            acc[key] = acc.get(key, 0.0) + (1.0 if lexicon.mode == "nominal" else value)
    return {k: v for k, v in acc.items() if v != 0.0}


# --- assembly -----------------------------------------------------------------


@dataclass(frozen=True)
class FeatureConfig:
    word_ngrams: bool = False
    char_ngrams: bool = False
    embeddings: bool = False
    lexicons: bool = False
    lexicon_names: Optional[tuple[str, ...]] = None

    @classmethod
    def parse(cls, spec: str) -> "FeatureConfig":
        """Parse selections like "WN+WE+L" or "L:NRC-Hash-Emo"."""
        wn = cn = we = lex = False
        names: list[str] = []
        for part in spec.replace(",", "+").split("+"):
            part = part.strip()
            if not part:
                continue
            upper = part.upper()
            if upper == "WN":
                wn = True
            elif upper == "CN":
                cn = True
            elif upper == "WE":
                we = True
            elif upper == "L":
                lex = True
            elif upper.startswith("L:"):
                lex = True
                names.append(part[2:])
            else:
                raise ValidationError(f"unknown feature selector {part!r}")
        if not (wn or cn or we or lex):
            raise ValidationError(f"empty feature config {spec!r}")
        return cls(
            word_ngrams=wn,
            char_ngrams=cn,
            embeddings=we,
            lexicons=lex,
            lexicon_names=tuple(names) or None,
        )

    def label(self) -> str:
        parts = []
        if self.word_ngrams:
            parts.append("WN")
        if self.char_ngrams:
            parts.append("CN")
        if self.embeddings:
            parts.append("WE")
        if self.lexicons:
            if self.lexicon_names:
                parts.extend(f"L:{n}" for n in self.lexicon_names)
            else:
                parts.append("L")
        return "+".join(parts)


@dataclass
class Resources:
    embeddings: Optional[EmbeddingTable] = None
    lexicons: dict[str, Lexicon] = field(default_factory=dict)
    negators: Optional[frozenset[str]] = None

    def add_lexicon(self, lexicon: Lexicon) -> None:
        self.lexicons[lexicon.name] = lexicon


def assemble(text: str, config: FeatureConfig, resources: Resources) -> FeatureVector:
    """Disjoint-namespace union of the selected extractors over one
    tokenization."""
    tokens = mark_negation(tokenize(text), resources.negators)
    vec: FeatureVector = {}
    if config.word_ngrams:
        vec.update(word_ngrams(tokens))
    if config.char_ngrams:
        vec.update(char_ngrams(text))
    if config.embeddings:
        if resources.embeddings is None:
            raise ResourceError("config selects WE but no embeddings are loaded")
        vec.update(embedding_average(tokens, resources.embeddings))
    if config.lexicons:
        names = config.lexicon_names or tuple(sorted(resources.lexicons))
        if not names:
            raise ResourceError("config selects L but no lexicons are loaded")
        for name in names:
            if name not in resources.lexicons:
                raise ResourceError(f"lexicon {name!r} is not loaded")
            vec.update(lexicon_features(tokens, resources.lexicons[name]))
    return vec


def write_feature_vector(vec: FeatureVector, fh, item_id: Optional[str] = None) -> None:
    for name in sorted(vec):
        if item_id is None:
            fh.write(f"{name}\t{vec[name]!r}\n")
        else:
            fh.write(f"{item_id}\t{name}\t{vec[name]!r}\n")


class TweetFeaturizer(BaseEstimator, TransformerMixin):
    """sklearn-style transformer: texts -> sparse matrix over a vocabulary
    fixed at fit time (features unseen in training are ignored)."""

    def __init__(self, config="WN", resources=None):
        self.config = config
        self.resources = resources

    def _config(self) -> FeatureConfig:
        if isinstance(self.config, FeatureConfig):
            return self.config
        return FeatureConfig.parse(self.config)

    def _resources(self) -> Resources:
        return self.resources if self.resources is not None else Resources()

    def fit(self, X, y=None):
        config = self._config()
        res = self._resources()
        vocab: dict[str, int] = {}
        for text in X:
            for name in assemble(text, config, res):
                if name not in vocab:
                    vocab[name] = len(vocab)
        self.vocabulary_ = vocab
        self.feature_names_ = sorted(vocab, key=vocab.get)
        return self

    def transform(self, X):
        if not hasattr(self, "vocabulary_"):
            raise ValidationError("featurizer is not fitted")
        config = self._config()
        res = self._resources()
        rows = []
        cols = []
        data = []
        n = 0
        for i, text in enumerate(X):
            n += 1
            for name, value in assemble(text, config, res).items():
                j = self.vocabulary_.get(name)
                if j is not None:
                    rows.append(i)
                    cols.append(j)
                    data.append(value)
        return sp.csr_matrix(
            (data, (rows, cols)), shape=(n, len(self.vocabulary_)), dtype=np.float64
        )

    def fit_transform(self, X, y=None):
        texts = list(X)
        return self.fit(texts).transform(texts)
