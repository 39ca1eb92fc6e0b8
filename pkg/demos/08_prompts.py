"""What the pipeline actually asks a model, stage by stage.

Templates are plain text with named placeholders; render_prompt fills
only the names you pass and leaves literal braces alone.  Useful when
tuning wording or recording new fixtures by hand.
"""

from __future__ import annotations

from storyforge import prompts

legend = {"Protagonist": "@", "Antagonist": "#", "Grass": "g", "Tree": "T"}

world_prompt = prompts.render_prompt(
    prompts.WORLD,
    story="Rook guards the last orchard against the frost king.",
    tile_map_dict=repr(legend),
    important_tiles_list=repr(["T"]),
    walkable_tiles_list=repr(["g"]),
)
print("--- world prompt ---")
print(world_prompt)

scale_prompt = prompts.render_prompt(
    prompts.SCALE_SIZES,
    to_scale=repr(["T"]),
)
print("--- scaling size prompt ---")
print(scale_prompt)

print("--- available templates ---")
for name in sorted(n for n in dir(prompts) if n.isupper()):
    text = getattr(prompts, name)
    if isinstance(text, str):
        first = text.strip().splitlines()[0]
        print(f"{name:18s} {first[:60]}")
