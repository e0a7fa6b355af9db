#!/usr/bin/env python3
"""Writes fixtures/bundles/sample_94kb.json: 50 STIX-like objects, one per
level 0..49, padded so the file is exactly 94 KiB."""

import json
import random
import sys
from pathlib import Path

TARGET = 94 * 1024
TYPES = ["indicator", "malware", "attack-pattern", "vulnerability", "identity", "relationship"]
WORDS = ("beacon loader dropper c2 exfil staging persistence lateral credential phish "
         "macro implant tunnel proxy wiper ransom kit exploit shell payload").split()


def make_objects(rng, pad):
    objects = []
    for level in range(50):
        kind = TYPES[level % len(TYPES)]
        desc_len = 1600 + (pad if level == 49 else 0)
        words = []
        while sum(len(w) + 1 for w in words) < desc_len:
            words.append(rng.choice(WORDS))
        desc = " ".join(words)[:desc_len]
        body = {
            "type": kind,
            "spec_version": "2.1",
            "id": f"{kind}--{rng.getrandbits(128):032x}",
            "created": "2023-03-01T12:00:00Z",
            "name": f"{kind} sample {level:02d}",
            "description": desc,
        }
        if kind == "indicator":
            body["pattern"] = f"[ipv4-addr:value = '10.{level}.{rng.randrange(256)}.{rng.randrange(256)}']"
            body["pattern_type"] = "stix"
        objects.append({"id": f"obj-{level:02d}", "type": kind, "level": level, "payload": body})
    return objects


def render(pad):
    rng = random.Random(94)
    doc = {
        "bundle_id": "bundle--sample-94kb",
        "metadata": {"threat_type": "ransomware", "created_at": "2023-03-01T12:00:00Z",
                     "source": "synthetic sample"},
        "objects": make_objects(rng, pad),
    }
    return json.dumps(doc, indent=1, sort_keys=False) + "\n"


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "fixtures/bundles/sample_94kb.json"
    text = render(0)
    text = render(TARGET - len(text.encode()))
    size = len(text.encode())
    if size != TARGET:
        sys.exit(f"size {size} != {TARGET}")
    out.write_text(text)


if __name__ == "__main__":
    main()
