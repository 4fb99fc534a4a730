"""Independent reference computations shared by the unit and acceptance tests."""

import numpy as np

from btrec import mlm
from btrec.corpus import MaskedInstance


def tiny_gradient_setup(seed=0):
    """1-layer, d_model=8, vocab=12 model in float64 with a fixed labelled batch."""
    cfg = mlm.ModelConfig(vocab_size=12, max_len=10, d_model=8, n_heads=2, n_layers=1, d_ff=16,
                          dropout_rate=0.0, seed=seed)
    params = mlm.init_model(cfg, dtype=np.float64)
    rng = np.random.default_rng(seed + 100)
    # perturb gains and biases away from their init so every path is exercised
    for name, arr in params.tensors.items():
        arr += rng.normal(0, 0.1, size=arr.shape)
    batch = []
    for length in (7, 5, 9):
        ids = [1] + list(rng.integers(3, 12, size=length - 2)) + [2]
        labels = {int(p): int(rng.integers(6, 12)) for p in rng.choice(range(1, length - 1), 2,
                                                                       replace=False)}
        batch.append(MaskedInstance(tuple(int(i) for i in ids), labels))
    return params, batch


def finite_difference_errors(params, batch, eps=1e-4):
    """Relative error per tensor between analytic and central-difference gradients.

    The denominator has an absolute floor: some tensors (the attention key bias)
    have an identically zero true gradient, where a pure relative error only
    measures rounding noise.
    """
    _, grads = mlm.mlm_loss_and_grads(params, batch)
    errors = {}
    for name, arr in params.tensors.items():
        num = np.zeros_like(arr)
        flat, nflat = arr.reshape(-1), num.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + eps
            up, _ = mlm.mlm_loss_and_grads(params, batch)
            flat[i] = old - eps
            down, _ = mlm.mlm_loss_and_grads(params, batch)
            flat[i] = old
            nflat[i] = (up - down) / (2 * eps)
        ana = grads[name]
        denom = max(np.linalg.norm(num) + np.linalg.norm(ana), 1e-8)
        errors[name] = float(np.linalg.norm(num - ana) / denom)
    return errors


def bootstrap_oracle(values, resamples, level, seed):
    """Scalar-loop bootstrap of the mean followed by a hand-rolled linear quantile."""
    rng = np.random.default_rng(seed)
    n = len(values)
    means = []
    for _ in range(resamples):
        total = 0.0
        picks = [values[int(rng.integers(0, n))] for _ in range(n)]
        for x in picks:
            total += float(x)
        means.append(total / n)
    return linear_quantile(means, level)


def linear_quantile(xs, q):
    xs = sorted(xs)
    pos = (len(xs) - 1) * q
    lo = int(np.floor(pos))
    hi = min(lo + 1, len(xs) - 1)
    frac = pos - lo
    a, b = xs[lo], xs[hi]
    # same lerp form numpy uses, so the two agree to the last bit
    diff = b - a
    return a + diff * frac if frac < 0.5 else b - diff * (1 - frac)


def bigram_counts(sequences):
    out = {}
    for seq in sequences:
        for i in range(len(seq) - 1):
            key = (seq[i], seq[i + 1])
            out[key] = out.get(key, 0) + 1
    return out


class ReferenceLz78:
    """Phrase dictionary kept as a flat dict of tuples, written without a trie."""

    def __init__(self, sequences):
        self.count = {}
        for seq in sequences:
            phrase = ()
            for sym in seq:
                phrase = phrase + (sym,)
                if phrase in self.count:
                    self.count[phrase] += 1
                else:
                    self.count[phrase] = 1
                    phrase = ()
        for seq in sequences:
            for sym in seq:
                self.count.setdefault((sym,), 0)

    def predict(self, context, excluded=()):
        context = tuple(context)
        for start in range(len(context) + 1):
            ctx = context[start:]
            if ctx and ctx not in self.count:
                continue
            options = [(c, p[-1]) for p, c in self.count.items()
                       if len(p) == len(ctx) + 1 and p[:-1] == ctx and p[-1] not in excluded]
            children = [p for p in self.count if len(p) == len(ctx) + 1 and p[:-1] == ctx]
            if not children:
                continue
            if options:
                best = max(c for c, _ in options)
                return min(s for c, s in options if c == best)
        return None


def cpt_oracle(sequences, context, window=3, excluded=()):
    """Brute-force CPT scoring straight from the training lists."""
    k = min(len(context), window)
    if k == 0:
        return None
    recent = set(context[-k:])
    scores = {}
    matched = False
    for seq in sequences:
        if not recent <= set(seq):
            continue
        matched = True
        last = max(i for i in range(len(seq)) if seq[i] in recent)
        for j in range(last + 1, len(seq)):
            scores[seq[j]] = scores.get(seq[j], 0.0) + 1.0 / (j - last)
    if not matched:
        return None
    options = {s: v for s, v in scores.items() if s not in excluded}
    if not options:
        return None
    best = max(options.values())
    return min(s for s, v in options.items() if v == best)
