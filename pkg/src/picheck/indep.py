"""Structural and link independence of locations and events."""
from __future__ import annotations

from typing import Iterable

from .sos import Event, LocPair, Location, label_aliases


def struct_indep(u: Location | LocPair, v: Location | LocPair) -> bool:
    """Disjoint parallel positions: neither prefix extends the other."""
    if isinstance(u, LocPair):
        return struct_indep(u.out, v) and struct_indep(u.inp, v)
    if isinstance(v, LocPair):
        return struct_indep(u, v.out) and struct_indep(u, v.inp)
    p, q = u.prefix, v.prefix
    n = min(len(p), len(q))
    return p[:n] != q[:n]


def event_indep(e: Event, f: Event) -> bool:
    if not struct_indep(e.location, f.location):
        return False
    if e.action[0] == "out" and e.action[2] in label_aliases(f.action):
        return False
    if f.action[0] == "out" and f.action[2] in label_aliases(e.action):
        return False
    return True


def indep_all(e: Event, es: Iterable[Event]) -> bool:
    return all(event_indep(e, f) for f in es)


def dep_all(e: Event, es: Iterable[Event]) -> bool:
    return not any(event_indep(e, f) for f in es)


def split(e: Event, rel: Iterable[tuple[Event, Event]], side: int = 0):
    """Partition pairs by independence of ``e`` from their ``side`` component."""
    s1, s2 = [], []
    for pair in rel:
        (s1 if event_indep(e, pair[side]) else s2).append(pair)
    return s1, s2


def transfer_ok(e: Event, e2: Event, rel: Iterable[tuple[Event, Event]], side: int = 0) -> bool:
    """The matching event ``e2`` has exactly the independence pattern of ``e``."""
    other = 1 - side
    return all(event_indep(e, pair[side]) == event_indep(e2, pair[other]) for pair in rel)


def hygienic(rel: Iterable[tuple[Event, Event]]) -> bool:
    """Both projections of an event relation are pairwise independent."""
    rel = list(rel)
    for i, (l1, r1) in enumerate(rel):
        for l2, r2 in rel[i + 1:]:
            if not (event_indep(l1, l2) and event_indep(r1, r2)):
                return False
    return True
