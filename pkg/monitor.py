# monitor.py — Simulated on-device monitoring of suspected processes
#
# Replays an event trace for the processes the static analysis flagged,
# turns it into one instance per (process, time window), and labels the
# instances with the screen-state rule: sending an SMS needs an active user,
# so an SMS send while the screen is asleep is malicious.
#
# Trace format (CSV, optional header, '#' comments):
#
#   timestamp,process,signal[;signal...],screen_wake
#   5000,com.elite.SMSReceiver,SMSReceiver;android.telephony.SmsManager,0
#
# Public API:
#   parse_trace(text) / load_trace(path)       — list of EventRecord
#   replay_trace(trace, suspects, window_ms)   — list of MonitorInstance
#   label_instance(inst)                       — "Regular" | "Malicious"
#   instances_to_dataset(instances, processes) — RunningProcessVectors Dataset
#   generate_dataset(seed, n)                  — labelled synthetic Dataset
#   generate_trace(seed, n) / write_trace(events)

import csv
import io
from collections import OrderedDict
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

import config
from arff_io import Attribute, Dataset

SMS_SIGNAL = "android.telephony.SmsManager"
SIGNALS    = ("BootReceiver", "SMSReceiver", "AlarmReceiver", SMS_SIGNAL)

REGULAR   = "Regular"
MALICIOUS = "Malicious"
LABELS    = (REGULAR, MALICIOUS)

RELATION       = "RunningProcessVectors"
PROCESS_ATTR   = "ProcessName"
WAKE_ATTR      = "ScreenWake"
CLASS_ATTR     = "Class"

# Order of the monitored-process schema in the collected data files.
ELITE_PROCESSES = (
    "com.samsung.ui",
    "datapole.rathi.monitor",
    "com.elite.AlarmReceiver",
    "com.elite.SMSReceiver",
    "com.android.bluetooth",
    "android.telephony.SMSManager",
    "com.sec.imsservice",
    "com.elite.BootReceiver",
)

TRACE_HEADER = "timestamp,process,signals,screen_wake"


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class TraceError(Exception):
    """Base class for trace and simulation failures."""


class MalformedTrace(TraceError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"trace line {line}: {message}")


class NonMonotonicTimestamps(TraceError):
    def __init__(self, line: int, timestamp: int, previous: int):
        self.line = line
        super().__init__(f"trace line {line}: timestamp {timestamp} is earlier than {previous}")


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EventRecord:
    timestamp: int
    process: str
    signals: frozenset
    screen_wake: int


@dataclass(frozen=True)
class MonitorInstance:
    process_name: str
    signals: tuple              # one 0/1 per SIGNALS entry
    screen_wake: int
    label: Optional[str] = None # None = Unknown

    def signal(self, name: str) -> int:
        return self.signals[SIGNALS.index(name)]

    def row(self) -> tuple:
        """Values in RunningProcessVectors attribute order."""
        return (
            self.process_name,
            *(str(b) for b in self.signals),
            str(self.screen_wake),
            self.label,
        )


# ---------------------------------------------------------------------------
# Trace I/O
# ---------------------------------------------------------------------------

def parse_trace(text: str) -> list:
    events   = []
    previous = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        raw = raw.strip()
        if not raw or raw.startswith("#"):
            continue
        try:
            fields = next(csv.reader([raw]))
        except csv.Error as e:
            raise MalformedTrace(line_no, str(e))
        if fields[0].strip().lower() == "timestamp":
            continue
        if len(fields) != 4:
            raise MalformedTrace(line_no, f"expected 4 fields, got {len(fields)}")

        ts_raw, process, sig_raw, wake_raw = (f.strip() for f in fields)
        try:
            timestamp = int(ts_raw)
        except ValueError:
            raise MalformedTrace(line_no, f"bad timestamp {ts_raw!r}")
        if timestamp < 0:
            raise MalformedTrace(line_no, f"negative timestamp {timestamp}")
        if not process:
            raise MalformedTrace(line_no, "empty process name")
        signals = frozenset(s.strip() for s in sig_raw.split(";") if s.strip())
        unknown = signals - set(SIGNALS)
        if unknown:
            raise MalformedTrace(line_no, f"unknown signal(s) {', '.join(sorted(unknown))}")
        if wake_raw not in ("0", "1"):
            raise MalformedTrace(line_no, f"screen_wake must be 0 or 1, got {wake_raw!r}")
        if previous is not None and timestamp < previous:
            raise NonMonotonicTimestamps(line_no, timestamp, previous)

        previous = timestamp
        events.append(EventRecord(timestamp, process, signals, int(wake_raw)))
    return events


def load_trace(path) -> list:
    return parse_trace(Path(path).read_text(encoding="utf-8"))


def write_trace(events: list) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    out.write(TRACE_HEADER + "\n")
    for e in events:
        signals = ";".join(s for s in SIGNALS if s in e.signals)
        writer.writerow([e.timestamp, e.process, signals, e.screen_wake])
    return out.getvalue()


# ---------------------------------------------------------------------------
# Replay and labelling
# ---------------------------------------------------------------------------

def replay_trace(trace, suspects, window_ms: int = config.WINDOW_MS) -> list:
    """
    Bucket the suspects' events per (process, window) and OR their signals.

    Windows are fixed, [k * window_ms, (k + 1) * window_ms), the same for
    every process; a process's first event does not move them.

    Events of processes outside the suspect list are dropped, which is how
    killing every non-suspected process is modelled. An instance's
    screen_wake is the majority state of its window; ties count as awake.
    'trace' is a path or a list of EventRecord.
    """
    if window_ms <= 0:
        raise TraceError(f"window_ms must be positive, got {window_ms}")
    events  = load_trace(trace) if isinstance(trace, (str, Path)) else list(trace)
    allowed = set(suspects)

    buckets = OrderedDict()     # (process, window) → [signal set, sleep votes, wake votes]
    for e in events:
        if e.process not in allowed:
            continue
        bucket = buckets.setdefault((e.process, e.timestamp // window_ms), [set(), 0, 0])
        bucket[0] |= e.signals
        bucket[1 + e.screen_wake] += 1

    return [
        MonitorInstance(
            process_name=process,
            signals=tuple(int(s in seen) for s in SIGNALS),
            screen_wake=int(awake >= asleep),
        )
        for (process, _), (seen, asleep, awake) in buckets.items()
    ]


def label_instance(inst: MonitorInstance) -> str:
    if inst.signal(SMS_SIGNAL) == 1 and inst.screen_wake == 0:
        return MALICIOUS
    return REGULAR


def label_instances(instances: list) -> list:
    return [replace(inst, label=label_instance(inst)) for inst in instances]


def schema_processes(names) -> tuple:
    """Known processes in their usual order, then any others in the order given."""
    names = list(dict.fromkeys(names))
    return tuple(p for p in ELITE_PROCESSES if p in names) + tuple(p for p in names if p not in ELITE_PROCESSES)


def instances_to_dataset(instances: list, processes=None) -> Dataset:
    if processes is None:
        processes = schema_processes(inst.process_name for inst in instances)
    binary = ("0", "1")
    attributes = [Attribute(PROCESS_ATTR, tuple(processes))]
    attributes += [Attribute(s, binary) for s in SIGNALS]
    attributes += [Attribute(WAKE_ATTR, binary), Attribute(CLASS_ATTR, LABELS)]
    return Dataset(RELATION, attributes, [inst.row() for inst in instances])


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------

def _generate_instances(seed: int, n: int, processes) -> list:
    if n < 2:
        raise TraceError(f"need at least 2 instances, got {n}")
    rng = np.random.default_rng(seed)
    malicious = n // 2
    out = []
    for i in range(n):
        process = str(processes[int(rng.integers(len(processes)))])
        bits = [int(b) for b in rng.integers(0, 2, size=len(SIGNALS))]
        sms = SIGNALS.index(SMS_SIGNAL)
        if i < malicious:
            bits[sms], wake = 1, 0
        else:
            wake = int(rng.integers(0, 2))
            if wake == 0:
                bits[sms] = 0
        out.append(MonitorInstance(process, tuple(bits), wake))
    order = rng.permutation(n)
    return label_instances([out[int(i)] for i in order])


def generate_dataset(seed: int = config.SEED, n: int = 32, processes=ELITE_PROCESSES) -> Dataset:
    """Deterministic labelled data over 'processes'; n // 2 instances are malicious."""
    return instances_to_dataset(_generate_instances(seed, n, processes), tuple(processes))


def generate_trace(seed: int = config.SEED, n: int = 32, processes=ELITE_PROCESSES,
                   window_ms: int = config.WINDOW_MS) -> list:
    """One event per window; replayed and labelled, it gives the rows of generate_dataset(seed, n)."""
    events = []
    for i, inst in enumerate(_generate_instances(seed, n, processes)):
        signals = frozenset(s for s, bit in zip(SIGNALS, inst.signals) if bit)
        events.append(EventRecord(i * window_ms, inst.process_name, signals, inst.screen_wake))
    return events
