# taint.py — Lifecycle-aware taint analysis over an AppModel
#
# Android apps have no main(); synthesize_dummy_main() builds a per-component
# driver that runs lifecycle methods in order and loops over callbacks.
# analyze() then propagates taint forward from SOURCE invokes to SINK invokes:
#
#   - facts are access paths (local + up to K fields) tagged with the source
#     call-site that produced them
#   - method calls are analysed per distinct entry state and memoised, so
#     taint returned from a callee only reaches the caller that passed it
#   - fields of 'this' form the component heap, which is what carries taint
#     between lifecycle methods and callbacks
#   - on a tainted field store, a backward copy-chain pass over the same
#     method finds aliases of the stored-to base and taints them too
#   - each component starts from the heap the other components can leave in
#     any order; the callback loop and recursion are iterated to a
#     fixpoint; a step budget bounds the whole run
#
# Public API:
#   synthesize_dummy_main(app)         — DummyMain
#   analyze(app, catalog, config)      — sorted list of TaintFlow
#   flows_to_report / flows_from_report / report_json — flow JSON

import json
import sys
from dataclasses import dataclass
from typing import Optional

from app_ir import (
    THIS, AppModel, Copy, Invoke, LoadField, Return, StoreField,
    class_of, defined_local, statement_id,
)
from catalog import SourceSinkCatalog
from config import AnalysisConfig

_BEFORE_LOOP = ("onCreate", "onStart", "onResume")
_AFTER_LOOP  = ("onPause", "onStop", "onDestroy")


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class TaintError(Exception):
    """Base class for taint-analysis failures."""


class BudgetExceeded(TaintError):
    """The step budget ran out. 'partial' holds the flows found so far; it is not sound."""

    def __init__(self, max_iterations: int, partial: list):
        self.max_iterations = max_iterations
        self.partial = partial
        super().__init__(
            f"analysis aborted after {max_iterations} steps "
            f"({len(partial)} flow(s) found, result unsound)"
        )


# ---------------------------------------------------------------------------
# Dummy main
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComponentDriver:
    component: str
    kind: str
    before: tuple   # run once, in order, before the callback loop
    loop: tuple     # run any number of times, in any order
    after: tuple    # run once, in order, after the loop

    @property
    def sequence(self) -> tuple:
        return self.before + self.loop + self.after


@dataclass(frozen=True)
class DummyMain:
    drivers: tuple = ()

    def entry_methods(self) -> tuple:
        return tuple(m for d in self.drivers for m in d.sequence)


def synthesize_dummy_main(app: AppModel) -> DummyMain:
    drivers = []
    for comp in app.components:
        present = dict(zip(comp.lifecycle, comp.lifecycle_methods()))
        before  = tuple(present[lc] for lc in _BEFORE_LOOP if lc in present)
        after   = tuple(present[lc] for lc in _AFTER_LOOP if lc in present)
        loop    = [present["onReceive"]] if "onReceive" in present else []
        for cb in comp.callbacks:
            if cb not in before and cb not in after and cb not in loop:
                loop.append(cb)
        drivers.append(ComponentDriver(comp.name, comp.kind, before, tuple(loop), after))
    return DummyMain(tuple(drivers))


# ---------------------------------------------------------------------------
# Facts and flows
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class AccessPath:
    base: str
    fields: tuple = ()


@dataclass(frozen=True, order=True)
class TaintFact:
    path: AccessPath
    origin: str     # statement id of the SOURCE invoke


@dataclass(frozen=True, order=True)
class HeapFact:
    owner: str      # declaring class whose 'this' holds the field chain
    fields: tuple
    origin: str


@dataclass(frozen=True)
class TaintFlow:
    source_method: str
    source_site: str
    sink_method: str
    sink_site: str
    path: tuple

    def key(self) -> tuple:
        return (self.source_method, self.source_site, self.sink_method, self.sink_site)


@dataclass(frozen=True)
class _Summary:
    returned: frozenset     # (fields, origin)
    params_out: frozenset   # (param index, fields, origin)
    heap_out: frozenset


def site_key(site: str) -> tuple:
    method, _, index = site.rpartition("@")
    return (method, int(index) if index.isdigit() else -1)


def flow_sort_key(flow: TaintFlow) -> tuple:
    return (flow.source_method, flow.sink_method, site_key(flow.source_site), site_key(flow.sink_site))


# ---------------------------------------------------------------------------
# Analysis
# ---------------------------------------------------------------------------

class TaintAnalyzer:
    """One analysis run over one app. Not reusable across apps."""

    def __init__(self, app: AppModel, catalog: SourceSinkCatalog, config: AnalysisConfig):
        self.app     = app
        self.catalog = catalog
        self.config  = config
        self.steps   = 0
        self._flows     = {}    # (origin, sink site) → TaintFlow
        self._origins   = {}    # origin site → source signature
        self._pred      = {}    # (method, origin) → method the taint arrived from
        self._writer    = {}    # (owner, fields, origin) → method that stored it
        self._summaries = {}    # call key → _Summary, kept across rounds
        self._done      = {}    # call key → _Summary, this round only
        self._active    = set()
        self._changed       = False
        self._approximated  = False
        self._reach         = {}    # component subset → heap it can leave behind

    # --- driver ---

    def run(self) -> list:
        drivers  = synthesize_dummy_main(self.app).drivers
        everyone = frozenset(range(len(drivers)))
        while True:
            self._done.clear()
            self._reach = {}
            self._changed = self._approximated = False
            for i, driver in enumerate(drivers):
                self._run_driver(driver, self._reachable(drivers, everyone - {i}))
            if not (self._changed and self._approximated):
                break
        return self.flows()

    def flows(self) -> list:
        return sorted(self._flows.values(), key=flow_sort_key)

    def _reachable(self, drivers: tuple, group: frozenset) -> frozenset:
        """
        Heap left behind by running the components in 'group' once each, in
        any order, from an empty heap. A component's own writes never reach
        its own start, so teardown cannot feed creation.
        """
        if not group:
            return frozenset()
        if group not in self._reach:
            heap = set()
            for i in sorted(group):
                heap |= self._run_driver(drivers[i], self._reachable(drivers, group - {i}))
            self._reach[group] = frozenset(heap)
        return self._reach[group]

    def _run_driver(self, driver: ComponentDriver, heap: frozenset) -> frozenset:
        for name in driver.before:
            heap = self._invoke(name, frozenset(), heap).heap_out
        while driver.loop:
            grown = set(heap)
            for name in driver.loop:
                grown |= self._invoke(name, frozenset(), heap).heap_out
            if grown == heap:
                break
            heap = frozenset(grown)
        for name in driver.after:
            heap = self._invoke(name, frozenset(), heap).heap_out
        return heap

    def _invoke(self, name: str, entry: frozenset, heap: frozenset) -> _Summary:
        key = (name, entry, heap)
        if key in self._done:
            return self._done[key]
        if key in self._active:
            # Recursive call: use last round's result and iterate again.
            self._approximated = True
            return self._summaries.get(key, _Summary(frozenset(), frozenset(), heap))
        self._active.add(key)
        try:
            result = self._run_method(name, entry, heap)
        finally:
            self._active.discard(key)
        if self._summaries.get(key) != result:
            self._summaries[key] = result
            self._changed = True
        self._done[key] = result
        return result

    def _tick(self) -> None:
        self.steps += 1
        if self.steps > self.config.max_iterations:
            print(
                f"[taint] {self.app.app_name}: budget of {self.config.max_iterations} steps exceeded",
                file=sys.stderr,
            )
            raise BudgetExceeded(self.config.max_iterations, self.flows())

    # --- path bookkeeping ---

    def _arrive(self, method: str, origin: str, via: Optional[str]) -> None:
        self._pred.setdefault((method, origin), via)

    def _path(self, origin: str, method: str) -> tuple:
        path = [method]
        current = method
        for _ in range(len(self._pred)):
            prev = self._pred.get((current, origin))
            if prev is None:
                break
            path.append(prev)
            current = prev
        return tuple(reversed(path))

    # --- intraprocedural transfer ---

    def _run_method(self, name: str, entry: frozenset, heap: frozenset) -> _Summary:
        body  = self.app.methods[name]
        owner = body.declaring_class
        facts = set(entry)
        heap  = set(heap)
        returned = set()
        rebound  = set()
        k = self.config.k

        def rooted(local: str) -> list:
            if local == THIS:
                out = []
                for h in sorted(heap):
                    if h.owner == owner:
                        self._arrive(name, h.origin, self._writer.get((h.owner, h.fields, h.origin)))
                        out.append(TaintFact(AccessPath(THIS, h.fields), h.origin))
                return out
            return sorted(f for f in facts if f.path.base == local)

        def kill(local: str) -> None:
            for f in [f for f in facts if f.path.base == local]:
                facts.discard(f)

        def assign(target: str, fields: tuple, origin: str) -> None:
            fields = fields[:k]
            if target == THIS:
                if fields:
                    heap.add(HeapFact(owner, fields, origin))
                    self._writer.setdefault((owner, fields, origin), name)
            else:
                facts.add(TaintFact(AccessPath(target, fields), origin))

        for index, stmt in enumerate(body.statements):
            self._tick()
            site = statement_id(name, index)

            if isinstance(stmt, Return):
                if stmt.value:
                    returned |= {(f.path.fields, f.origin) for f in rooted(stmt.value)}
                break

            if isinstance(stmt, Copy):
                gen = [(f.path.fields, f.origin) for f in rooted(stmt.src)]
                kill(stmt.dst)
                for fields, origin in gen:
                    assign(stmt.dst, fields, origin)

            elif isinstance(stmt, LoadField):
                gen = []
                for f in rooted(stmt.base):
                    if not f.path.fields:
                        gen.append(((), f.origin))
                    elif f.path.fields[0] == stmt.field:
                        gen.append((f.path.fields[1:], f.origin))
                kill(stmt.dst)
                for fields, origin in gen:
                    assign(stmt.dst, fields, origin)

            elif isinstance(stmt, StoreField):
                tainted = rooted(stmt.src)
                if tainted:
                    targets = [stmt.base]
                    if self.config.alias:
                        targets += aliases_before(body.statements, index, stmt.base)
                    for f in tainted:
                        for target in targets:
                            assign(target, (stmt.field,) + f.path.fields, f.origin)

            elif isinstance(stmt, Invoke):
                if stmt.callee in self.app.methods:
                    self._call_local(name, stmt, rooted, kill, assign, heap)
                else:
                    self._call_api(site, stmt, rooted, kill, assign, name)

            target = defined_local(stmt)
            if target in body.params:
                rebound.add(target)

        params_out = frozenset(
            (i, f.path.fields, f.origin)
            for i, p in enumerate(body.params)
            if p not in rebound
            for f in facts
            if f.path.base == p and f.path.fields
        )
        return _Summary(frozenset(returned), params_out, frozenset(heap))

    def _call_local(self, caller, stmt, rooted, kill, assign, heap) -> None:
        callee = self.app.methods[stmt.callee]
        entry = set()
        for param, arg in zip(callee.params, stmt.args):
            for f in rooted(arg):
                entry.add(TaintFact(AccessPath(param, f.path.fields), f.origin))
                self._arrive(callee.name, f.origin, caller)

        summary = self._invoke(callee.name, frozenset(entry), frozenset(heap))
        heap |= summary.heap_out

        for index, fields, origin in sorted(summary.params_out):
            self._arrive(caller, origin, callee.name)
            assign(stmt.args[index], fields, origin)
        if stmt.dst:
            kill(stmt.dst)
            for fields, origin in sorted(summary.returned):
                self._arrive(caller, origin, callee.name)
                assign(stmt.dst, fields, origin)

    def _call_api(self, site, stmt, rooted, kill, assign, method) -> None:
        kind    = self.catalog.classify(stmt.callee)
        tainted = [f for arg in stmt.args for f in rooted(arg)]

        if kind.is_sink:
            for f in tainted:
                key = (f.origin, site)
                if key not in self._flows:
                    self._flows[key] = TaintFlow(
                        source_method=self._origins[f.origin],
                        source_site=f.origin,
                        sink_method=stmt.callee,
                        sink_site=site,
                        path=self._path(f.origin, method),
                    )

        if stmt.dst:
            kill(stmt.dst)
            if kind.is_source:
                self._origins.setdefault(site, stmt.callee)
                self._arrive(method, site, None)
                assign(stmt.dst, (), site)
            else:
                # Unmodelled library call: the result carries its arguments' taint.
                for origin in sorted({f.origin for f in tainted}):
                    assign(stmt.dst, (), origin)


def aliases_before(statements: tuple, index: int, base: str) -> list:
    """
    Locals that hold the same object as 'base' at statements[index], found by
    walking the Copy chain backwards. A name counts only if neither side of
    the Copy is reassigned between the Copy and the store.
    """
    def stable(local: str, start: int) -> bool:
        return all(defined_local(s) != local for s in statements[start:index])

    found = {base}
    grew = True
    while grew:
        grew = False
        for j in range(index):
            stmt = statements[j]
            if not isinstance(stmt, Copy):
                continue
            for known, other in ((stmt.dst, stmt.src), (stmt.src, stmt.dst)):
                if known in found and other not in found \
                        and stable(stmt.dst, j + 1) and stable(stmt.src, j + 1):
                    found.add(other)
                    grew = True
    found.discard(base)
    return sorted(found)


def analyze(app: AppModel, catalog: SourceSinkCatalog, config: AnalysisConfig = AnalysisConfig()) -> list:
    """Run the analysis; raises BudgetExceeded (with partial flows) if the step budget runs out."""
    return TaintAnalyzer(app, catalog, config).run()


# ---------------------------------------------------------------------------
# JSON report
# ---------------------------------------------------------------------------

def flows_to_report(app_name: str, flows: list, catalog: SourceSinkCatalog, sound: bool = True) -> dict:
    rows = []
    for flow in sorted(flows, key=flow_sort_key):
        rows.append({
            "source_method":   flow.source_method,
            "source_site":     flow.source_site,
            "sink_method":     flow.sink_method,
            "sink_site":       flow.sink_site,
            "source_category": catalog.classify(flow.source_method).source,
            "sink_category":   catalog.classify(flow.sink_method).sink,
            "path":            list(flow.path),
        })
    return {"app": app_name, "sound": sound, "flows": rows}


def flows_from_report(report: dict) -> list:
    try:
        return [
            TaintFlow(
                source_method=row["source_method"],
                source_site=row["source_site"],
                sink_method=row["sink_method"],
                sink_site=row["sink_site"],
                path=tuple(row["path"]),
            )
            for row in report["flows"]
        ]
    except (KeyError, TypeError) as e:
        raise TaintError(f"malformed flow report: {e}")


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


def involved_classes(flows: list) -> list:
    """Declaring classes of every app method on any flow path, sorted."""
    return sorted({class_of(m) for flow in flows for m in flow.path})
