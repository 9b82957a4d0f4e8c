# corpus.py — Analyse a directory of IR apps in parallel
#
# Backs 'droidmark analyze --dir'. Every *.ir file in the directory is parsed
# and analysed on its own worker thread; a file that fails to parse, or whose
# analysis runs out of budget, is reported and the rest carry on.
#
# Analyses share nothing mutable: each thread builds its own TaintAnalyzer
# over its own AppModel and only reads the catalog.
#
# Public API:
#   run(directory, catalog, analysis, workers, log) — CorpusResult

import threading
from dataclasses import dataclass, field
from pathlib import Path

from app_ir import IRError, load_app
from catalog import SourceSinkCatalog
from config import AnalysisConfig
from taint import BudgetExceeded, analyze, flows_to_report

DEFAULT_WORKERS = 4


@dataclass
class CorpusResult:
    reports: dict = field(default_factory=dict)     # file name → flow report
    errors: dict = field(default_factory=dict)      # file name → message
    unsound: list = field(default_factory=list)     # files whose report is partial

    def to_dict(self) -> dict:
        return {
            "apps":    [self.reports[name] for name in sorted(self.reports)],
            "errors":  {name: self.errors[name] for name in sorted(self.errors)},
            "unsound": sorted(self.unsound),
        }


def run(directory, catalog: SourceSinkCatalog, analysis: AnalysisConfig = AnalysisConfig(),
        workers: int = DEFAULT_WORKERS, log=print) -> CorpusResult:
    """
    Analyse every *.ir file under 'directory' (not recursive), 'workers'
    files at a time. log: callable(str) for per-file status lines.
    """
    files = sorted(Path(directory).glob("*.ir"))
    result = CorpusResult()
    lock = threading.Lock()

    def analyse_one(path: Path) -> None:
        try:
            app = load_app(path)
            try:
                flows, sound = analyze(app, catalog, analysis), True
            except BudgetExceeded as e:
                flows, sound = e.partial, False
            report = flows_to_report(app.app_name, flows, catalog, sound=sound)
            with lock:
                result.reports[path.name] = report
                if not sound:
                    result.unsound.append(path.name)
            log(f"[corpus] {path.name}: {len(flows)} flow(s){'' if sound else ' (partial)'}")
        except (IRError, OSError) as e:
            with lock:
                result.errors[path.name] = str(e)
            log(f"[corpus] skipped {path.name}: {e}")
        except Exception as e:
            with lock:
                result.errors[path.name] = f"internal error: {e}"
            log(f"[corpus] {path.name} failed: {e}")

    for start in range(0, len(files), max(1, workers)):
        batch = files[start:start + max(1, workers)]
        threads = [threading.Thread(target=analyse_one, args=(path,)) for path in batch]
        for t in threads:
            t.start()
        for t in threads:
            t.join()

    return result
