"""Seed-derivation tree.

Every random draw in an experiment is seeded by ``derive_seed(global_seed, path)``,
where ``path`` names the component, e.g. ``data/train`` or
``edit/rewrite/layer4/lr2/restart0``. Child seeds are a pure function of the pair.
"""

import hashlib
from typing import Dict


def derive_seed(global_seed: int, path: str) -> int:
    """First four bytes (little-endian) of sha256("<global_seed>|<path>")."""
    digest = hashlib.sha256(f"{global_seed}|{path}".encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


class SeedTree:
    """Derives seeds under one global seed and remembers every path it handed out."""

    def __init__(self, global_seed: int):
        self.global_seed = global_seed
        self.issued: Dict[str, int] = {}

    def __call__(self, path: str) -> int:
        seed = derive_seed(self.global_seed, path)
        self.issued[path] = seed
        return seed
