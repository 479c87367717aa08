"""Chain construction: M_1 <= M_2 <= ... built by the even/odd schedule.

Step i turns M_i into M_{i+1}.  Even steps join the object A_{i/2}; odd
steps work through a queue of extension tasks ``(s, a, m)``: the m-th
special embedding of template a's small object into stage s.  Triples are
dovetailed by ``(s + a + m, s, a, m)``.  Tasks that already have a witness in
the current stage are logged for free; the first one that needs an
amalgam consumes the step.

Horizon: each odd step discharges at least one available task, so task q
(0-based, counting only triples whose embedding exists) is discharged or
error-tagged by stage ``h(q) = 2q + 2 + max(s_0, ..., s_q)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Optional

from fraisse.engine.categories import Category, make_category, seeded_rng
from fraisse.errors import DomainError, FraisseError, InputError

POP_BUDGET = 400


@dataclass(frozen=True)
class LimitElem:
    stage: int
    value: Any


@dataclass
class Location:
    found: bool
    stage: Optional[int] = None
    embedding: Any = None
    horizon: Optional[int] = None


def task_horizon(q: int, max_stage: int) -> int:
    return 2 * q + 2 + max_stage


class ChainState:
    def __init__(self, category: Category, seed: int = 0):
        self.category = category
        self.seed = seed
        self.stages = [category.start(category.object(0))]
        self.maps: list = []
        self.log: list[dict] = [{"step": 0, "kind": "start", "object": 0}]
        self.tasks: list[dict] = []
        self.retry: list[tuple] = []
        self._key = 1
        self._triples: list[tuple[int, int, int]] = []
        self._templates: dict[int, Any] = {}
        self._embs: dict[tuple[int, int], list] = {}
        self._emb_iters: dict[tuple[int, int], Any] = {}
        self._fill_key()

    # -- basic access ---------------------------------------------------------
    @property
    def length(self) -> int:
        return len(self.stages)

    def stage(self, i: int):
        if not 1 <= i <= len(self.stages):
            raise InputError(f"stage {i} does not exist (length {len(self.stages)})")
        return self.stages[i - 1]

    def push_emb(self, emb, s: int, t: int):
        """Push an embedding into stage s forward to stage t."""
        for j in range(s, t):
            emb = self.category.compose_emb(emb, self.maps[j - 1])
        return emb

    def push(self, x: LimitElem, t: int) -> LimitElem:
        if t < x.stage:
            raise InputError("can only push forward")
        v = x.value
        for j in range(x.stage, t):
            v = self.category.apply_map(self.maps[j - 1], v)
        return LimitElem(t, v)

    def limit_equal(self, x: LimitElem, y: LimitElem, at: Optional[int] = None) -> bool:
        t = at if at is not None else max(x.stage, y.stage)
        a, b = self.push(x, t).value, self.push(y, t).value
        if self.category.name in ("ice", "fpce"):
            from fraisse.tower import equals
            return equals(self.stage(t), a, b)
        return _freeze(a) == _freeze(b)

    # -- task queue --------------------------------------------------------------
    def _fill_key(self):
        k = self._key
        self._triples = [(s, a, k - s - a) for s in range(1, k + 1) for a in range(k - s + 1)]
        self._triples.reverse()  # pop from the end

    def template(self, a: int):
        if a not in self._templates:
            self._templates[a] = self.category.template(a)
        return self._templates[a]

    def embedding(self, s: int, a: int, m: int):
        key = (s, a)
        if key not in self._embs:
            tpl = self.template(a)
            self._embs[key] = []
            self._emb_iters[key] = iter(self.category.embeddings(tpl.A, self.stage(s), seeded_rng(self.seed, s, a)))
        lst, it = self._embs[key], self._emb_iters[key]
        while len(lst) <= m and it is not None:
            try:
                lst.append(next(it))
            except StopIteration:
                self._emb_iters[key] = it = None
        return lst[m] if m < len(lst) else None

    def _next_task(self):
        """Next available (s, a, m, emb), None when blocked on a missing stage."""
        while True:
            if not self._triples:
                self._key += 1
                self._fill_key()
            s, a, m = self._triples[-1]
            if s > len(self.stages):
                return None
            emb = self.embedding(s, a, m)
            self._triples.pop()
            if emb is not None:
                return s, a, m, emb

    # -- schedule ----------------------------------------------------------------
    def grow_to(self, n: int) -> "ChainState":
        while len(self.stages) < n:
            self._step(len(self.stages))
        return self

    def _append(self, st, cmap):
        cat = self.category
        if not cat.is_connecting_special(self.stages[-1], cmap, st):
            raise DomainError(f"connecting map into stage {len(self.stages) + 1} failed the predicate")
        self.stages.append(st)
        self.maps.append(cmap)

    def _step(self, i: int):
        cat = self.category
        cur = self.stages[-1]
        if i % 2 == 0:
            n = i // 2
            A = cat.object(n)
            st2, cmap, emb = cat.jep(cur, A, seeded_rng(self.seed, "jep", i))
            if not cat.is_special(A, emb, st2):
                raise DomainError(f"JEP embedding of object {n} failed the predicate")
            self._append(st2, cmap)
            self.log.append({"step": i, "kind": "jep", "object": n, "embedding": cat.emb_json(emb)})
            return
        pops = 0
        while pops < POP_BUDGET:
            nxt = self._next_task()
            if nxt is None:
                break
            s, a, m, emb = nxt
            pops += 1
            if self._discharge(i, s, a, m, emb, len(self.tasks)):
                return
        # idle: retry one error-tagged task, otherwise repeat the stage
        while self.retry:
            s, a, m, emb, q = self.retry.pop(0)
            if self._discharge(i, s, a, m, emb, q, retry=True):
                return
        self._append(cur, None)
        self.log.append({"step": i, "kind": "idle"})

    def _discharge(self, i, s, a, m, emb, q, retry=False) -> bool:
        """Handle one task; True when it consumed step i."""
        cat = self.category
        cur = self.stages[-1]
        tpl = self.template(a)
        rec = {"task": q, "stage_of_map": s, "template": a, "map_index": m}
        try:
            f = self.push_emb(emb, s, i)
            ext = cat.satisfied(tpl, f, cur)
            if ext is not None:
                if not cat.check_ext(tpl, f, ext, cur):
                    raise DomainError("witness failed the square check")
                rec.update(status="satisfied", stage=i)
                self._record(rec, retry)
                return False
            st2, cmap, ext = cat.ap(tpl, f, cur)
            if not cat.check_ext(tpl, cat.compose_emb(f, cmap), ext, st2):
                raise DomainError("amalgam failed the square check")
            self._append(st2, cmap)
            rec.update(status="ap", stage=i + 1)
            self._record(rec, retry)
            self.log.append({"step": i, "kind": "ap", "task": q, "template": a, "stage_of_map": s,
                             "map_index": m, "extension": cat.emb_json(ext)})
            return True
        except FraisseError as e:
            rec.update(status="error", stage=i, error=f"{type(e).__name__}: {e}")
            self._record(rec, retry)
            if not retry:
                self.retry.append((s, a, m, emb, q))
            return False

    def _record(self, rec, retry):
        if retry:
            self.tasks[rec["task"]] = rec
        else:
            self.tasks.append(rec)

    # -- reports and serialization ---------------------------------------------
    def horizon(self, q: int) -> int:
        return task_horizon(q, max(t["stage_of_map"] for t in self.tasks[: q + 1]))

    def undischarged(self) -> list[dict]:
        return [t for t in self.tasks if t["status"] == "error"]

    def to_dict(self) -> dict:
        cat = self.category
        d = {
            "spec": cat.params(),
            "seed": self.seed,
            "length": len(self.stages),
            "stages": [cat.stage_json(st) for st in self.stages],
            "maps": [cat.map_json(m) for m in self.maps],
            "log": self.log,
            # one row per task: [task, stage_of_map, template, map_index, status, stage]
            "tasks": [[t["task"], t["stage_of_map"], t["template"], t["map_index"], t["status"], t["stage"]]
                      for t in self.tasks],
            "undischarged": self.undischarged(),
        }
        last = self.stages[-1]
        if cat.name == "fin_graph":
            d["edges"] = [list(e) for e in last.edges()]
        elif cat.name == "fin_linorder":
            d["order"] = last.elements_in_order()
        return d

    def to_json(self, pretty: bool = False) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2 if pretty else None,
                          separators=None if pretty else (",", ":"))


def _freeze(v):
    if isinstance(v, list):
        return tuple(_freeze(x) for x in v)
    return v


def build_chain(spec, n: int, seed: int = 0) -> ChainState:
    if n < 1:
        raise DomainError("a chain needs at least one stage")
    return ChainState(make_category(spec), seed).grow_to(n)


def replay(data) -> ChainState:
    """Rebuild a serialized chain and check it matches byte for byte."""
    if isinstance(data, str):
        text = data
        data = json.loads(data)
    else:
        text = None
    try:
        spec, seed, n = data["spec"], data["seed"], data["length"]
    except (KeyError, TypeError):
        raise InputError("not a serialized chain (needs spec, seed, length)") from None
    chain = build_chain(spec, n, seed)
    ref = json.dumps(data, sort_keys=True, separators=(",", ":"))
    if chain.to_json() != ref or (text is not None and text.strip() not in (ref, chain.to_json(True))):
        raise DomainError("replay diverged from the serialized chain")
    return chain


def locate(chain: ChainState, A) -> Location:
    """First stage with a verified special embedding of A, or a horizon hint."""
    cat = chain.category
    for s, st in enumerate(chain.stages, 1):
        emb = cat.locate_embedding(A, st)
        if emb is not None and cat.is_special(A, emb, st):
            return Location(True, s, emb)
    idx = cat.index_of(A)
    return Location(False, horizon=None if idx is None else 2 * idx + 1)
