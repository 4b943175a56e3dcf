#!/usr/bin/env python3
"""Writes fixtures/petclinic.ndjson.

A PetClinic-like use case recorded as one short script (about 3 s of
relative time). Counts the script is built to produce in a single window:

  BaseEntity constructions          46  (24 via Person, 22 via NamedEntity)
  Person -> BaseEntity ctor calls   24  (8 owners + 16 vets)
  NamedEntity -> BaseEntity         22  (14 pets + 8 specialties)

BaseEntity never calls out, so its only communication partners are
Person and NamedEntity.
"""

import hashlib
import json
import pathlib

HOST = "petclinic-host"
APP = "spring-petclinic"
ROOT = "org.springframework.samples.petclinic"

FQNS = {
    "filter": "org.springframework.web.filter.OncePerRequestFilter.doFilter",
    "owner_ctl": f"{ROOT}.owner.OwnerController.showOwner",
    "owner_repo": f"{ROOT}.owner.OwnerRepository.findById",
    "owner_new": f"{ROOT}.owner.Owner.<init>",
    "pet_new": f"{ROOT}.owner.Pet.<init>",
    "pet_type": f"{ROOT}.owner.PetTypeFormatter.print",
    "vet_ctl": f"{ROOT}.vet.VetController.showVetList",
    "vet_repo": f"{ROOT}.vet.VetRepository.findAll",
    "vet_new": f"{ROOT}.vet.Vet.<init>",
    "spec_new": f"{ROOT}.vet.Specialty.<init>",
    "person_new": f"{ROOT}.model.Person.<init>",
    "named_new": f"{ROOT}.model.NamedEntity.<init>",
    "base_new": f"{ROOT}.model.BaseEntity.<init>",
}


def structure_hash(fqn):
    return hashlib.sha1(f"{HOST}|{APP}|{fqn}".encode()).hexdigest()[:16]


MS = 1_000_000
lines = []
for key, fqn in FQNS.items():
    lines.append({"kind": "structure", "structureHash": structure_hash(fqn),
                  "hostname": HOST, "appName": APP, "fqn": fqn})

spans = []


class TraceBuilder:
    def __init__(self, trace_id, start):
        self.trace_id = trace_id
        self.clock = start
        self.counter = 0

    def span(self, key, parent=None, duration=2 * MS):
        self.counter += 1
        span_id = f"{self.trace_id}-s{self.counter}"
        start = self.clock
        self.clock += 100_000
        spans.append({"kind": "span", "traceId": self.trace_id, "spanId": span_id,
                      "parentSpanId": parent, "startNanos": start,
                      "endNanos": start + duration,
                      "structureHash": structure_hash(FQNS[key])})
        return span_id


def base_chain(tb, parent, via):
    mid = tb.span(via, parent)
    tb.span("base_new", mid)


pets_per_owner = [2, 1, 2, 3, 1, 2, 2, 1]
trace_start = 0
for i, pets in enumerate(pets_per_owner):
    tb = TraceBuilder(f"owner-{i}", trace_start)
    root = tb.span("filter", None, 40 * MS)
    ctl = tb.span("owner_ctl", root, 35 * MS)
    repo = tb.span("owner_repo", ctl, 20 * MS)
    owner = tb.span("owner_new", repo)
    base_chain(tb, owner, "person_new")
    for _ in range(pets):
        pet = tb.span("pet_new", repo)
        base_chain(tb, pet, "named_new")
        tb.span("pet_type", ctl)
    trace_start += 250 * MS

for i in range(4):
    tb = TraceBuilder(f"vets-{i}", trace_start)
    root = tb.span("filter", None, 40 * MS)
    ctl = tb.span("vet_ctl", root, 35 * MS)
    repo = tb.span("vet_repo", ctl, 20 * MS)
    for _ in range(4):
        vet = tb.span("vet_new", repo)
        base_chain(tb, vet, "person_new")
    for _ in range(2):
        spec = tb.span("spec_new", repo)
        base_chain(tb, spec, "named_new")
    trace_start += 250 * MS

lines.extend(spans)

out = pathlib.Path(__file__).resolve().parent.parent / "fixtures" / "petclinic.ndjson"
out.write_text("".join(json.dumps(l, separators=(",", ":")) + "\n" for l in lines))

base = sum(1 for s in spans if s["structureHash"] == structure_hash(FQNS["base_new"]))
print(f"wrote {out} ({len(lines)} lines, {len(spans)} spans, {base} BaseEntity constructions)")
