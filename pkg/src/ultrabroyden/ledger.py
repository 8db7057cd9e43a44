"""Operation accounting.

A :class:`CostLedger` made active with :func:`recording` receives one event
per scalar multiplication or division performed by :mod:`ultrabroyden.field`
and one per matrix-matrix product performed by :mod:`ultrabroyden.linalg`.
Events are bucketed by iteration, phase (``"linalg"``, ``"eval"``, ...) and
the relative precision of the operands.
"""

from __future__ import annotations

import contextlib
import contextvars
import math
from collections import Counter, defaultdict

_ACTIVE: contextvars.ContextVar = contextvars.ContextVar("ub_ledger", default=None)


def active():
    return _ACTIVE.get()


@contextlib.contextmanager
def recording(ledger):
    token = _ACTIVE.set(ledger)
    try:
        yield ledger
    finally:
        _ACTIVE.reset(token)


def m_model(n):
    """Default multiplication-cost model ``M(N) = N * ceil(log2(N + 1))``."""
    if n <= 0:
        return 0
    return n * math.ceil(math.log2(n + 1))


def record(op, prec, count=1):
    led = _ACTIVE.get()
    if led is not None:
        led.record(op, prec, count)


class CostLedger:
    """Per-iteration, per-phase operation counts bucketed by precision."""

    def __init__(self, model=m_model):
        self.model = model
        self.iteration = 0
        self.phase_name = "linalg"
        self.counts = defaultdict(Counter)

    def record(self, op, prec, count=1):
        if prec == math.inf:
            prec = 0
        self.counts[(self.iteration, self.phase_name, op)][int(prec)] += count

    @contextlib.contextmanager
    def phase(self, name):
        prev = self.phase_name
        self.phase_name = name
        try:
            yield self
        finally:
            self.phase_name = prev

    def _select(self, op=None, phase=None, iteration=None):
        for (it, ph, o), bucket in self.counts.items():
            if op is not None and o != op:
                continue
            if phase is not None and ph != phase:
                continue
            if iteration is not None and it != iteration:
                continue
            yield o, bucket

    def total(self, op=None, phase=None, iteration=None):
        return sum(sum(b.values()) for _, b in self._select(op, phase, iteration))

    def buckets(self, op=None, phase=None, iteration=None):
        out = Counter()
        for _, b in self._select(op, phase, iteration):
            out.update(b)
        return out

    def cost(self, phase=None, iteration=None):
        """Weighted cost under ``self.model``; a division counts ``4 M(k) + k``."""
        total = 0
        for op, bucket in self._select(None, phase, iteration):
            for prec, cnt in bucket.items():
                if op == "mul":
                    total += cnt * self.model(prec)
                elif op == "div":
                    total += cnt * (4 * self.model(prec) + prec)
        return total

    def iterations(self):
        return sorted({it for it, _, _ in self.counts})

    def matmat_count(self):
        return self.total(op="matmat")

    def summary(self):
        rows = []
        for it in self.iterations():
            rows.append({
                "iteration": it,
                "mul": self.total("mul", iteration=it),
                "div": self.total("div", iteration=it),
                "eval_mul": self.total("mul", phase="eval", iteration=it),
                "matmat": self.total("matmat", iteration=it),
                "cost": self.cost(iteration=it),
            })
        return rows

    def __add__(self, other):
        out = CostLedger(self.model)
        for src in (self, other):
            for key, bucket in src.counts.items():
                out.counts[key].update(bucket)
        return out
