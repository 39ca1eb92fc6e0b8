"""Prompt template assets, versioned.

Templates are plain text with ``{placeholder}`` slots.  ``render_prompt``
substitutes only the names it is given, so braces in embedded content
(dict literals, block JSON) survive untouched.  Backends are stateless
here: every stage prompt carries the context it needs inline, which keeps
prompts digest-addressable for replay fixtures.
"""

from __future__ import annotations

import re

PROMPT_VERSION = "1"

STORY = (
    "Write a {n_paragraphs} paragraph story which has characters including the protagonist "
    "trying to achieve something and the antagonist wanting to stop the protagonist. There "
    "should be {n_objectives} objectives for the protagonist in the story. One of them should "
    "be to defeat the antagonist somehow. You should describe the environments that those "
    "objectives happen. You can add some NPCs in the story."
)

CHARACTERS = (
    "{story}\n\n"
    "Let's use the above story to create a 2D game. Write a specific description of each "
    "character which can be used as a prompt to generate sprites for the characters."
)

TILES = (
    "{story}\n\n"
    "Create an exhaustive list of tiles needed to create the environment. Some tile can "
    "occupy more than one space."
)

LEGEND = (
    "{story}\n\n"
    "Here is the list of tiles:\n{tile_list}\n\n"
    "Imagine each tile maps to an alphabet or a character. For environment, use alphabets "
    "and for characters use special characters. Create it in a single Python Dictionary "
    "style. Return only and only a Python Dictionary and nothing else in your response. "
    "Don't return it in a Python response. Names should be the Keys and alphabets or "
    "characters should be the Values. Protagonist should always strictly be '@' and the "
    "antagonist should always strictly be '#'."
)

WALKABLE = (
    "The tile to character mapping is:\n{tile_map_dict}\n\n"
    "Which of these tiles can the player walk on? Return a Python list of the single "
    "characters for tiles the player can walk on, formatted like ['a', 'b']. Only return "
    "a Python list."
)

IMPORTANT = (
    "The tile to character mapping is:\n{tile_map_dict}\n\n"
    "Which tiles are important for the story and must appear on the map? Return a Python "
    "list of the single characters for the important tiles, formatted like ['a', 'b']. "
    "Only return a Python list."
)

WORLD = (
    "{story}\n\n"
    "Using the following tile to character mapping:{tile_map_dict}. Create an entire world "
    "on a tile-based grid. Do not create things that would need more than one tile. Also, "
    "following characters are important to place:{important_tiles_list}, walkable "
    "tiles:{walkable_tiles_list}. Do not place the protagonist, the antagonist and the "
    "interactive objects of the story right now. Only create the world right now. Create "
    "it is a string format with three backticks to start and end with (```) and not in a "
    "list format."
)

WORLD_RETRY_SUFFIX = (
    "\n\nYour previous response was not usable: {feedback}.\n"
    "Previously generated maps for reference:\n{references}\n"
    "Create an improved world now, in the same fenced string format."
)

OBJECTIVES = (
    "{story}\n\n"
    "The tile to character mapping is:\n{tile_map_dict}\n\n"
    "Here is the current world map:\n```\n{map_rows}\n```\n\n"
    "You are a great planner in 2D game. You plan objectives for the protagonist of the "
    "game. All objectives should match the goals extracted from the story. One of them "
    "should be to defeat the antagonist somehow. Other objectives can be: finding the exit "
    "of a complex labyrinth, finding a chest in the map, surviving waves of enemies, or "
    "gathering some items in the map. Return a Python dictionary of the objective as the "
    "key and a tile that achieves the objective and the position of the tile. For example "
    "`Objective': ['A', 6, 1]. Only return a Python dictionary. Do not return a python "
    "response."
)

SCALE_SELECT = (
    "{story}\n\n"
    "Given the story, a 2D map {tile_map}, and a dictionary {des2not} where each key is a "
    "tile's description and each value is the notation for that tile in the map, identify "
    "which tile notations in the map need to be scaled? A tile is considered scaled if it "
    "should occupy more than one grid cell, such as a 'house' tile. # Please avoid "
    "selecting adjacent tiles of the same type and frequent tiles. Please avoid scaling # "
    "and @ Return a Python list of tiles, formatted as a list of scaled tile notations "
    "(e.g., [a,b]])"
)

SCALE_SIZES = (
    "These tile notations will be scaled to occupy more than one grid cell: {to_scale}.\n"
    "For each one, choose a square footprint size of at least 2, where 2 means a 2x2 area. "
    "Return a Python dictionary mapping each tile notation to an integer size, like "
    "{'H': 3}. Only return a Python dictionary."
)

BLOCKS = (
    "The tile to character mapping is:\n{tile_map_dict}\n\n"
    "Translate each tile into a corresponding Minecraft block. Return a Python dictionary "
    "mapping each tile character to a Minecraft block name, like {'g': 'grass_block'}. Use "
    "lowercase block identifiers. Only return a Python dictionary."
)

CRITIQUE = (
    "Here is a tile-based world map:\n```\n{map_rows}\n```\n"
    "Using this tile to character mapping:\n{tile_map_dict}\n\n"
    "Assess the coherence and navigability of this map with respect to the story below. "
    "Reply with a short critique.\n\nStory:\n{story}"
)

RECONSTRUCT = (
    "The following JSON array lists the blocks of a Minecraft level extracted from a "
    "game:\n{block_json}\n\n"
    "Write a short story that this level could be telling. Return only the story text."
)

RETRY_SUFFIX = (
    "\n\nYour previous response was not usable: {feedback}. "
    "Respond again following the required format exactly."
)

PROMPTS: dict[str, str] = {
    "story": STORY,
    "characters": CHARACTERS,
    "tiles": TILES,
    "legend": LEGEND,
    "walkable": WALKABLE,
    "important": IMPORTANT,
    "world": WORLD,
    "objectives": OBJECTIVES,
    "scale_select": SCALE_SELECT,
    "scale_sizes": SCALE_SIZES,
    "blocks": BLOCKS,
    "critique": CRITIQUE,
    "reconstruct": RECONSTRUCT,
}

_PLACEHOLDER = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


def render_prompt(template: str, **values: str) -> str:
    """Fill ``{name}`` slots for the given names only; other braces survive."""

    def _sub(match: re.Match) -> str:
        name = match.group(1)
        return str(values[name]) if name in values else match.group(0)

    return _PLACEHOLDER.sub(_sub, template)
