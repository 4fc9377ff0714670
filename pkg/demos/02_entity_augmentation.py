"""Matching entities in captions and building the augmented description.

Works entirely offline on a hand-rolled entity list; the same code paths run
against live Wikipedia fetches in the full pipeline.
"""

from texttiger import EntityEntry, WitCubInstance, build_augmentation, count_tokens, match_entities

entities = [
    EntityEntry(
        name="Davenport",
        description=(
            "Davenport is a city in and the county seat of Scott County, Iowa, "
            "United States, located along the Mississippi River."
        ),
        source_url="https://en.wikipedia.org/wiki/Davenport,_Iowa",
    ),
    EntityEntry(
        name="Credit Island",
        description=(
            "Credit Island is a 420-acre park island on the Mississippi River "
            "in Davenport, Iowa."
        ),
        source_url="https://en.wikipedia.org/wiki/Credit_Island",
    ),
    EntityEntry(
        name="Danube",
        description="The Danube is the second-longest river in Europe.",
        source_url="https://en.wikipedia.org/wiki/Danube",
    ),
]

caption = "Davenport as viewed from Credit Island"

# Case-insensitive whole-phrase matching, returned in caption order. The
# Danube entry is in the list but not in the caption, so it drops out.
matched = match_entities(caption, entities)
print(f"caption: {caption!r}")
print("matched:", [e.name for e in matched])

# Boundary checks mean 'Nore' will not fire inside 'Noreland'.
print("glued mention matches:", [e.name for e in match_entities("DavenportCredit Island?", entities)])

instance = WitCubInstance(
    id="demo-0",
    caption=caption,
    image_ref="https://example.org/davenport.jpg",
    entities=tuple(entities),
    caption_token_count=count_tokens(caption),
)

augmented = build_augmentation(instance)
print("\naugmented description (entity descriptions joined by blank lines):\n")
print(augmented.joined_text)
print(f"\naugmentation length: {count_tokens(augmented.joined_text)} tokens "
      f"(caption alone is {instance.caption_token_count})")
