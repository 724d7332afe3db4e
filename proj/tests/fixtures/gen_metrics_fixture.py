#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Builds metrics_fixture.jsonl: seven study sessions, 19 drop-ins, 48 extensions.

The aggregates are checked here with the standard library before the file is
written, so the C++ metrics code is compared against an independent computation.
"""
import json
import random
import statistics
import sys
from pathlib import Path

EXTENSIONS = [0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2, 2, 3, 4, 5, 6, 6, 6, 4]
BASES = [40, 52, 60, 35, 45, 50, 58, 30, 48, 54, 55, 60, 42, 37, 33, 60, 31, 44, 59]
CONTENTS = [3, 5, 6, 8, 9, 10, 10, 11, 11, 11, 12, 14, 15, 16, 18, 20, 22, 25, 30]
SESSIONS = [3, 3, 3, 3, 3, 2, 2]  # drop-ins per session


def build():
    rng = random.Random(20240611)
    order = list(range(len(EXTENSIONS)))
    rng.shuffle(order)
    contents = CONTENTS[:]
    rng.shuffle(contents)
    catalog = ["bird", "dragon", "ornaments", "gifts", "snow", "star_of_david", "whale",
               "mistletoe", "unicorn", "reindeer", "santa_sleigh"]

    entries, durations, per_dropin = [], [], []
    t, k = 0, 0
    for s, count in enumerate(SESSIONS, start=1):
        sid = f"s{s}"
        t += 600_000
        entries.append({"ev": "session_start", "t": t, "session": sid, "value": 3600})
        for _ in range(count):
            i = order[k]
            did = f"d{k + 1}"
            k += 1
            t += rng.randint(20_000, 240_000)
            base_ms = BASES[i] * 1000
            ext = EXTENSIONS[i]
            dur_ms = base_ms + 30_000 * ext
            start = t
            entries.append({"ev": "dropin_start", "t": start, "session": sid, "dropin": did, "value": base_ms})
            events = []
            for n in range(contents[k - 1]):
                at = start + 1 + (n * (dur_ms - 2)) // max(1, contents[k - 1])
                events.append((at, 0, {"ev": "project", "t": at, "session": sid, "dropin": did,
                                       "detail": catalog[rng.randrange(len(catalog))]}))
            ends = base_ms
            for n in range(ext):
                at = start + ends - rng.randint(1_000, 20_000)
                ends += 30_000
                events.append((at, 1, {"ev": "extend", "t": at, "session": sid, "dropin": did, "value": n + 1}))
            events.sort(key=lambda e: (e[0], e[1]))
            entries.extend(e[2] for e in events)
            t = start + dur_ms
            entries.append({"ev": "dropin_end", "t": t, "session": sid, "dropin": did,
                            "detail": f"timeout:extensions={ext}", "value": dur_ms})
            durations.append(dur_ms / 1000)
            per_dropin.append(contents[k - 1])
        t += 60_000
        entries.append({"ev": "session_end", "t": t, "session": sid, "detail": "wearer"})
    return entries, durations, per_dropin


def main():
    entries, durations, per_dropin = build()
    assert statistics.median_low(durations) == 114, statistics.median_low(durations)
    assert statistics.median_low(per_dropin) == 11
    assert sum(1 for e in entries if e["ev"] == "extend") == 48
    assert sum(1 for e in entries if e["ev"] == "project") >= 200
    assert all(a["t"] <= b["t"] for a, b in zip(entries, entries[1:]))
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).with_name("metrics_fixture.jsonl")
    out.write_text("".join(json.dumps(e, sort_keys=True, separators=(",", ":")) + "\n" for e in entries))
    print(f"median_dropin_s={statistics.median_low(durations)} median_contents={statistics.median_low(per_dropin)} "
          f"extensions=48 contents={sum(per_dropin)} dropins={len(durations)}")


if __name__ == "__main__":
    main()
