"""Text backends: live HTTP, recorded replay, and a rule-based stub.

All backends answer ``complete(prompt, history=None) -> str`` and may
answer ``embed(text) -> list[float]``.  Replay fixtures are JSON arrays of
``{"prompt_sha256": ..., "response": ...}`` records; embedding requests
share the schema under the digest of ``"embed:" + text`` with the vector
JSON-encoded in the response field.  Deterministic backends return the
same output for the same input, which is what makes traces replayable.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import random
import re
import threading
import time
from pathlib import Path

from .errors import (
    BackendError,
    EmbedUnsupportedError,
    MissingApiKeyError,
    ReplayMissError,
)
from .grid import parse_dict_literal

API_KEY_VAR = "STORYFORGE_API_KEY"
BASE_URL_VAR = "STORYFORGE_BASE_URL"
MODEL_VAR = "STORYFORGE_MODEL"

DEFAULT_BASE_URL = "https://api.openai.com/v1"
DEFAULT_MODEL = "gpt-4-turbo"
EMBED_DIMENSIONS = 64


def prompt_digest(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def embed_digest(text: str) -> str:
    return prompt_digest("embed:" + text)


class TextBackend:
    """Interface: subclasses implement complete(); embed() is optional."""

    name = "base"

    def complete(self, prompt: str, history: list[dict] | None = None) -> str:
        raise NotImplementedError

    def embed(self, text: str) -> list[float]:
        raise EmbedUnsupportedError(f"backend {self.name!r} has no embedding support")


def hashed_bag_embedding(text: str, dimensions: int = EMBED_DIMENSIONS) -> list[float]:
    """Deterministic bag-of-words embedding: token counts hashed into buckets."""
    vec = [0.0] * dimensions
    for token in re.findall(r"[a-z0-9']+", text.lower()):
        bucket = int.from_bytes(hashlib.sha256(token.encode()).digest()[:4], "big")
        vec[bucket % dimensions] += 1.0
    norm = math.sqrt(sum(v * v for v in vec))
    if norm == 0.0:
        return vec
    return [v / norm for v in vec]


class ReplayBackend(TextBackend):
    """Replays recorded responses keyed by prompt digest; misses are fatal."""

    name = "replay"

    def __init__(self, records: list[dict] | str | Path):
        if isinstance(records, (str, Path)):
            text = Path(records).read_text(encoding="utf-8")
            if text.lstrip().startswith("["):
                records = json.loads(text)
            else:  # trace JSONL carries the same keys, one record per line
                records = [json.loads(line) for line in text.splitlines() if line.strip()]
        self._responses: dict[str, str] = {}
        for rec in records:
            self._responses.setdefault(rec["prompt_sha256"], rec["response"])

    def complete(self, prompt: str, history: list[dict] | None = None) -> str:
        digest = prompt_digest(prompt)
        if digest not in self._responses:
            raise ReplayMissError(digest)
        return self._responses[digest]

    def embed(self, text: str) -> list[float]:
        digest = embed_digest(text)
        if digest not in self._responses:
            raise ReplayMissError(digest)
        return [float(v) for v in json.loads(self._responses[digest])]


# --- rule-based stub ----------------------------------------------------------

_THEMES: dict[str, dict] = {
    "forest": {
        "protagonist": ("Elara", "a young ranger with a green hooded cloak and an ash bow"),
        "antagonist": ("Vorath", "a gaunt shadow-sorcerer wreathed in grey mist"),
        "npcs": (
            ("Bram", "a broad woodcutter with a copper beard and a long axe"),
            ("Sylva", "an old herbalist carrying a basket of dried roots"),
        ),
        "tiles": {
            "Grass": "g",
            "Dirt Path": "p",
            "Tree": "T",
            "Deep Forest": "F",
            "River": "r",
            "Bridge": "b",
            "Bush": "s",
            "Flower Patch": "f",
            "Rock": "k",
            "Cottage": "h",
            "Ancient Ruins": "R",
            "Cave Entrance": "c",
            "Mushroom Ring": "m",
            "Lake": "l",
            "Elder Hut": "H",
            "Stone Circle": "S",
        },
        "walkable": "gpbsfm",
        "important": "hRcHS",
        "scale": {"T": 2, "h": 3},
        "places": ("grove", "ruins", "riverbank", "stone circle", "cave"),
    },
    "desert": {
        "protagonist": ("Nadia", "a sun-scarred wanderer in layered sand-colored robes"),
        "antagonist": ("Malikh", "a masked warlord riding a pale dune stalker"),
        "npcs": (
            ("Tarek", "a wiry caravan guide with a brass spyglass"),
            ("Zahra", "a well-keeper who trades water for stories"),
        ),
        "tiles": {
            "Sand": "d",
            "Dune": "D",
            "Cactus": "C",
            "Oasis Water": "w",
            "Palm Tree": "P",
            "Rocky Outcrop": "k",
            "Caravan Tent": "t",
            "Ruined Temple": "R",
            "Canyon Floor": "c",
            "Dry Brush": "s",
            "Market Stall": "M",
            "Old Well": "e",
            "Sandstone Wall": "W",
            "Bone Pile": "B",
            "Salt Flat": "f",
            "Watchtower": "T",
        },
        "walkable": "dfsc",
        "important": "RTMe",
        "scale": {"T": 2, "R": 3},
        "places": ("oasis", "temple", "canyon", "market", "salt flat"),
    },
    "highlands": {
        "protagonist": ("Rurik", "a stocky mountaineer with rope coils and iron crampons"),
        "antagonist": ("Skal", "a frost-bound raider chief crowned with broken antlers"),
        "npcs": (
            ("Ingrid", "a shepherd reading weather from the clouds"),
            ("Olaf", "a miner humming to a lantern full of embers"),
        ),
        "tiles": {
            "Snow": "n",
            "Stone Path": "p",
            "Pine Tree": "P",
            "Boulder": "B",
            "Frozen Lake": "L",
            "Cliff": "C",
            "Goat Trail": "t",
            "Watch Keep": "K",
            "Mine Entrance": "m",
            "Scree": "s",
            "Hot Spring": "h",
            "Rope Bridge": "b",
            "Cairn": "c",
            "Ice Wall": "I",
            "Meadow": "e",
            "Shepherd Hut": "H",
        },
        "walkable": "nptbes",
        "important": "KmhHc",
        "scale": {"K": 3, "P": 2},
        "places": ("pass", "keep", "mine", "frozen lake", "hot spring"),
    },
}

_NUMBER_WORDS = (
    "zero one two three four five six seven eight nine ten eleven twelve "
    "thirteen fourteen fifteen sixteen seventeen eighteen nineteen twenty"
).split()


def spell_number(n: int) -> str:
    return _NUMBER_WORDS[n] if 0 <= n < len(_NUMBER_WORDS) else str(n)


class StubBackend(TextBackend):
    """Template-driven synthetic author: deterministic per (seed, prompt).

    Stage detection keys off distinctive phrases in the package's own
    templates; cross-stage consistency comes from re-deriving the theme
    out of the story text embedded in each prompt.
    """

    name = "stub"

    def __init__(self, seed: int = 0):
        self.seed = seed

    # every response is a pure function of (seed, prompt)
    def _rng(self, prompt: str) -> random.Random:
        return random.Random(f"stub:{self.seed}:{prompt_digest(prompt)}")

    def _theme_of(self, prompt: str) -> dict:
        for theme in _THEMES.values():
            if theme["protagonist"][0] in prompt:
                return theme
        # prompts lacking the story still quote tile names from the legend
        scored = []
        for name, theme in _THEMES.items():
            hits = sum(1 for tile in theme["tiles"] if tile in prompt)
            scored.append((hits, name, theme))
        scored.sort(key=lambda item: (-item[0], item[1]))
        if scored[0][0] > 0:
            return scored[0][2]
        return self._rng(prompt).choice(list(_THEMES.values()))

    def complete(self, prompt: str, history: list[dict] | None = None) -> str:
        handlers = (
            ("paragraph story", self._story),
            ("description of each character", self._characters),
            ("exhaustive list of tiles", self._tiles),
            ("single Python Dictionary style", self._legend),
            ("player can walk on", self._walkable),
            ("important for the story and must appear", self._important),
            ("Create an entire world", self._world),
            ("You are a great planner", self._objectives),
            ("need to be scaled", self._scale_select),
            ("square footprint size", self._scale_sizes),
            ("Minecraft block name", self._blocks),
            ("Reply with a short critique", self._critique),
            ("Write a short story that this level could be telling", self._reconstruct),
        )
        for marker, handler in handlers:
            if marker in prompt:
                return handler(prompt)
        raise BackendError("stub cannot classify this prompt")

    def embed(self, text: str) -> list[float]:
        return hashed_bag_embedding(text)

    # --- stage handlers -------------------------------------------------

    def _story(self, prompt: str) -> str:
        rng = self._rng(prompt)
        theme_name, theme = rng.choice(list(_THEMES.items()))
        m = re.search(r"Write a (\d+)(?:-(\d+))? paragraph", prompt)
        want = int(m.group(2) or m.group(1)) if m else 5
        m = re.search(r"There should be (\d+) objectives", prompt)
        n_obj = int(m.group(1)) if m else 8
        hero, hero_desc = theme["protagonist"]
        villain, villain_desc = theme["antagonist"]
        (npc1, npc1_desc), (npc2, npc2_desc) = theme["npcs"]
        places = theme["places"]
        paragraphs = [
            (
                f"{hero}, {hero_desc}, lived at the edge of the {theme_name}. When the old "
                f"wardens fell silent, the council charged her with {n_obj} objectives "
                f"({spell_number(n_obj)} trials in all) to restore the {theme_name} before "
                "the season turned."
            ),
            (
                f"{villain}, {villain_desc}, wanted the {theme_name} broken. From the "
                f"{places[1]} he sent his servants to block every {places[2]} crossing, and "
                f"he swore that {hero} would never finish what she began."
            ),
            (
                f"The first trials took {hero} through the {places[0]} and past the "
                f"{places[4]}, gathering what the wardens had hidden and marking safe ways "
                "between them. A twisting labyrinth waited beneath, and somewhere in it an "
                "exit that only patience would find."
            ),
            (
                f"{npc1}, {npc1_desc}, taught her where to shelter when {villain}'s minions "
                f"came in waves across the {places[3]}. {npc2}, {npc2_desc}, asked only "
                "conversation in return for a map of the old roads."
            ),
            (
                f"At the last, {hero} walked into the {places[1]} to face {villain} himself. "
                f"Defeating him was the final objective, and when it was done the "
                f"{theme_name} drew one long unbroken breath."
            ),
            (
                f"Travelers still argue over which of the {spell_number(n_obj)} trials cost "
                f"{hero} most, but every telling ends the same way: with lamps lit again "
                f"along the {places[2]}."
            ),
            (
                f"The council wrote the tale into the records of the {theme_name}, so that "
                "anyone walking those paths would know whose footsteps they followed."
            ),
        ]
        return "\n\n".join(paragraphs[: max(3, min(want, len(paragraphs)))])

    def _characters(self, prompt: str) -> str:
        theme = self._theme_of(prompt)
        hero, hero_desc = theme["protagonist"]
        villain, villain_desc = theme["antagonist"]
        lines = [
            f"Protagonist: {hero}, {hero_desc}.",
            f"Antagonist: {villain}, {villain_desc}.",
        ]
        lines += [f"NPC: {name}, {desc}." for name, desc in theme["npcs"]]
        return "\n".join(lines)

    def _tiles(self, prompt: str) -> str:
        theme = self._theme_of(prompt)
        return "\n".join(f"- {name}" for name in theme["tiles"])

    def _legend(self, prompt: str) -> str:
        theme = self._theme_of(prompt)
        entries = dict(theme["tiles"])
        entries["Protagonist"] = "@"
        entries["Antagonist"] = "#"
        return repr(entries)

    def _walkable(self, prompt: str) -> str:
        theme = self._theme_of(prompt)
        return repr(list(theme["walkable"]))

    def _important(self, prompt: str) -> str:
        theme = self._theme_of(prompt)
        return repr(list(theme["important"]))

    def _world(self, prompt: str) -> str:
        rng = self._rng(prompt)
        legend = parse_dict_literal(prompt)
        env_chars = [ch for ch in legend.values() if ch not in ("@", "#")]
        walk_m = re.search(r"walkable tiles:\[([^\]]*)\]", prompt)
        walkable = re.findall(r"'(.)'", walk_m.group(1)) if walk_m else env_chars[:3]
        other_walk = [ch for ch in walkable[1:] if ch in env_chars]
        blockers = [ch for ch in env_chars if ch not in walkable]
        base = walkable[0]
        rows_n, cols_n = rng.randint(16, 20), rng.randint(18, 24)
        weighted = [(base, 35)]
        weighted += [(ch, 35 // max(1, len(other_walk))) for ch in other_walk]
        weighted += [(ch, 30 // max(1, len(blockers))) for ch in blockers]
        chars = [ch for ch, w in weighted for _ in range(max(1, w))]
        cells = [[rng.choice(chars) for _ in range(cols_n)] for _ in range(rows_n)]
        # make sure every environment tile actually appears somewhere
        spots = rng.sample(
            [(r, c) for r in range(rows_n) for c in range(cols_n)], len(env_chars)
        )
        for ch, (r, c) in zip(env_chars, spots):
            cells[r][c] = ch
        grid = "\n".join("".join(row) for row in cells)
        return f"Here is the world:\n```\n{grid}\n```\n"

    def _objectives(self, prompt: str) -> str:
        rng = self._rng(prompt)
        theme = self._theme_of(prompt)
        legend = parse_dict_literal(prompt)
        fence = re.search(r"```\n(.*?)\n```", prompt, re.DOTALL)
        rows = fence.group(1).splitlines() if fence else [""]
        m = re.search(r"(\d+) objectives", prompt)
        n_obj = int(m.group(1)) if m else 8
        hero = theme["protagonist"][0]
        villain = theme["antagonist"][0]
        (npc1, _), (npc2, _) = theme["npcs"]
        places = theme["places"]
        important = [ch for ch in theme["important"] if ch in legend.values()]
        walkable = [ch for ch in theme["walkable"] if ch in legend.values()]

        def cell_with(char: str) -> tuple[int, int]:
            matches = [
                (r, c) for r, row in enumerate(rows) for c, ch in enumerate(row) if ch == char
            ]
            if matches:
                return rng.choice(matches)
            return (rng.randrange(max(1, len(rows))), rng.randrange(max(1, len(rows[0]))))

        def anchor(i: int) -> str:
            pool = important + walkable
            return pool[i % len(pool)] if pool else "g"

        entries: list[tuple[str, str]] = [
            (f"Defeat {villain} in his lair", "#"),
            (f"Find the exit of the labyrinth under the {places[1]}", anchor(0)),
            (f"Survive the waves of {villain}'s minions at the {places[3]}", anchor(1)),
            (f"Gather the warden relics scattered near the {places[0]}", anchor(2)),
            (f"Chat with {npc1} about the safe roads", anchor(3)),
            (f"Collect supplies for the journey across the {places[4]}", anchor(4)),
            (f"Chat with {npc2} and trade a story for a map", anchor(5)),
            (f"Find the hidden chest left for {hero}", anchor(6)),
            (f"Gather herbs to mend the wardens' wards", anchor(7)),
            (f"Chat with the keepers of the {places[1]}", anchor(8)),
        ]
        while len(entries) < n_obj:
            entries.append((f"Recover lost keepsake {len(entries)}", anchor(len(entries))))
        placement = {}
        for desc, ch in entries[:n_obj]:
            if ch == "#":
                r, c = cell_with(rng.choice(walkable) if walkable else "g")
            else:
                r, c = cell_with(ch)
            placement[desc] = [ch, r, c]
        return repr(placement)

    def _scale_select(self, prompt: str) -> str:
        theme = self._theme_of(prompt)
        chars = [ch for ch in theme["scale"] if f"'{ch}'" in prompt or ch in prompt]
        inner = ", ".join(chars)
        return f"[{inner}]"  # unquoted on purpose; parsers must cope

    def _scale_sizes(self, prompt: str) -> str:
        theme = self._theme_of(prompt)
        m = re.search(r"cell: \[([^\]]*)\]", prompt)
        listed = re.findall(r"[^\s,'\"\[\]]", m.group(1)) if m else []
        sizes = {ch: theme["scale"].get(ch, 2) for ch in listed}
        return repr(sizes)

    def _blocks(self, prompt: str) -> str:
        from .export import block_entry_for_name

        rng = self._rng(prompt)
        legend = parse_dict_literal(prompt)
        table = {}
        for name, ch in legend.items():
            if rng.random() < 0.4:
                continue  # leave some chars to the fallback palette
            entry = block_entry_for_name(str(name))
            table[ch] = entry if isinstance(entry, str) else entry[1]
        return repr(table)

    def _critique(self, prompt: str) -> str:
        theme = self._theme_of(prompt)
        return (
            "The map reads coherently: walkable ground dominates, landmark tiles are "
            f"distinct, and the {theme['places'][0]} region stays traversable. No blocking "
            "ring of obstacles surrounds any landmark."
        )

    def _reconstruct(self, prompt: str) -> str:
        names = sorted(set(re.findall(r'"block":\s*"([a-z_]+)"', prompt)))
        listed = ", ".join(names[:8]) if names else "stone and grass"
        return (
            f"A traveler crosses a land built from {listed}. Small landmarks break the "
            "open ground, water threads between them, and somewhere past the far edge an "
            "adversary waits. The traveler walks from task to task until the way home is "
            "earned."
        )


class LiveBackend(TextBackend):
    """Chat-completions client over HTTP, configured from the environment."""

    name = "live"

    def __init__(
        self,
        api_key: str | None = None,
        base_url: str | None = None,
        model: str | None = None,
        max_in_flight: int = 4,
        max_retries: int = 3,
        timeout: float = 60.0,
    ):
        self.api_key = api_key or os.environ.get(API_KEY_VAR, "")
        if not self.api_key:
            raise MissingApiKeyError(
                f"{API_KEY_VAR} is not set; export it or choose --backend stub/replay"
            )
        self.base_url = (base_url or os.environ.get(BASE_URL_VAR) or DEFAULT_BASE_URL).rstrip("/")
        self.model = model or os.environ.get(MODEL_VAR) or DEFAULT_MODEL
        self.max_retries = max_retries
        self.timeout = timeout
        self._gate = threading.Semaphore(max_in_flight)

    def _post(self, path: str, payload: dict) -> dict:
        import requests

        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(min(2 ** (attempt - 1), 8.0))
            try:
                with self._gate:
                    resp = requests.post(
                        f"{self.base_url}{path}",
                        json=payload,
                        headers={"Authorization": f"Bearer {self.api_key}"},
                        timeout=self.timeout,
                    )
                if resp.status_code in (429, 500, 502, 503, 504):
                    last_error = BackendError(f"HTTP {resp.status_code} from {path}")
                    continue
                if resp.status_code >= 400:
                    raise BackendError(f"HTTP {resp.status_code} from {path}: {resp.text[:200]}")
                return resp.json()
            except BackendError:
                raise
            except Exception as exc:  # connection errors are retryable
                last_error = exc
        raise BackendError(f"live backend gave up after {self.max_retries + 1} attempts: {last_error}")

    def complete(self, prompt: str, history: list[dict] | None = None) -> str:
        messages = list(history or []) + [{"role": "user", "content": prompt}]
        data = self._post("/chat/completions", {"model": self.model, "messages": messages})
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed chat-completions payload: {exc}") from exc

    def embed(self, text: str) -> list[float]:
        model = os.environ.get("STORYFORGE_EMBED_MODEL", "text-embedding-3-small")
        data = self._post("/embeddings", {"model": model, "input": text})
        try:
            return [float(v) for v in data["data"][0]["embedding"]]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed embeddings payload: {exc}") from exc
