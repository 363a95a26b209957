"""Built-in lowercase word pool.

Used by the traffic synthesizer to assemble plausible benign and
wordlist-style domain names, and as the default dictionary for the
longest-meaningful-substring feature.  All entries are at least three
characters long.
"""

WORDS: tuple[str, ...] = (
    "able", "acorn", "action", "active", "adapt", "agent", "alarm", "album",
    "alert", "alpha", "amber", "anchor", "angle", "apple", "arch", "arena",
    "argon", "array", "arrow", "aspen", "asset", "atlas", "atom", "audio",
    "aura", "autumn", "axis", "badge", "baker", "bamboo", "banner", "barn",
    "basil", "basin", "beach", "beacon", "bean", "bear", "bell", "bench",
    "berry", "birch", "bird", "bishop", "bison", "black", "blade", "blaze",
    "bloom", "blue", "board", "boat", "bolt", "bonus", "book", "booth",
    "border", "botany", "bounce", "brave", "bread", "breeze", "brick", "bridge",
    "bright", "brook", "brush", "buddy", "buffer", "bugle", "bullet", "bundle",
    "butter", "cabin", "cable", "cactus", "camel", "camera", "candle", "canoe",
    "canyon", "carbon", "cargo", "castle", "cedar", "cell", "census", "chair",
    "chalk", "charm", "chart", "cherry", "chess", "chief", "chime", "choir",
    "cider", "cinema", "circle", "citrus", "civic", "clay", "clear", "cliff",
    "clock", "cloud", "clover", "coast", "cobalt", "cocoa", "coffee", "coin",
    "comet", "compass", "copper", "coral", "cortex", "cosmos", "cotton", "cougar",
    "craft", "crane", "credit", "creek", "crest", "cricket", "crimson", "crystal",
    "cube", "curve", "cyclone", "daisy", "dancer", "dawn", "delta", "denim",
    "depot", "desert", "design", "dial", "diamond", "digit", "dome", "donor",
    "dragon", "dream", "drift", "drum", "dune", "dusk", "eagle", "earth",
    "echo", "eclipse", "eden", "edge", "eland", "elbow", "eleven", "elm",
    "ember", "emerald", "energy", "engine", "epoch", "equal", "ermine", "escort",
    "estate", "ethos", "event", "fable", "falcon", "family", "farm", "feather",
    "fern", "ferry", "fiber", "field", "finch", "fjord", "flame", "flash",
    "fleet", "flint", "flora", "flute", "focus", "forest", "forge", "fortune",
    "fossil", "fountain", "frame", "fresh", "frost", "galaxy", "garden", "garnet",
    "gate", "gecko", "gentle", "geyser", "ginger", "glacier", "glade", "globe",
    "gold", "goose", "grain", "granite", "grape", "green", "grove", "guard",
    "guide", "gulf", "habit", "harbor", "harvest", "hawk", "hazel", "heart",
    "heron", "hill", "hollow", "honey", "horizon", "host", "hotel", "house",
    "hudson", "hunter", "hybrid", "iceberg", "image", "index", "indigo", "ingot",
    "inlet", "iris", "iron", "island", "ivory", "jade", "jaguar", "jasper",
    "jets", "jewel", "journey", "juniper", "kayak", "kernel", "kite", "koala",
    "lagoon", "lake", "lantern", "large", "laser", "laurel", "lava", "leaf",
    "ledger", "legend", "lemon", "lens", "light", "lilac", "lily", "linen",
    "lion", "lively", "lobster", "locus", "lodge", "lotus", "lunar", "lynx",
    "magnet", "mango", "manor", "maple", "marble", "marina", "marsh", "mason",
    "matrix", "meadow", "melon", "mercury", "merit", "mesa", "meteor", "metro",
    "mill", "mint", "mirror", "mist", "modem", "monarch", "moon", "morning",
    "motor", "mountain", "museum", "music", "nectar", "nest", "night", "nimbus",
    "noble", "north", "nova", "nugget", "oasis", "ocean", "olive", "onyx",
    "opal", "orange", "orbit", "orchard", "organ", "osprey", "otter", "owl",
    "oxide", "palace", "palm", "panda", "panel", "paper", "parade", "park",
    "parrot", "patio", "peak", "pearl", "pebble", "pelican", "pepper", "petal",
    "photo", "piano", "pilot", "pine", "pixel", "planet", "plasma", "plaza",
    "plum", "polar", "pond", "poplar", "poppy", "portal", "prairie", "prism",
    "pulse", "puma", "quail", "quartz", "quest", "quill", "radar", "rain",
    "rally", "ranch", "range", "rapid", "raven", "reef", "relay", "ridge",
    "rift", "ring", "river", "robin", "rocket", "rose", "rover", "royal",
    "ruby", "rustic", "saddle", "saffron", "sage", "salmon", "sand", "sapphire",
    "satin", "savanna", "scale", "scout", "sensor", "sequoia", "shade", "shell",
    "shore", "sierra", "signal", "silver", "sky", "slate", "smooth", "snow",
    "solar", "sonar", "south", "spark", "sphere", "spice", "spring", "spruce",
    "square", "stable", "star", "steam", "stone", "storm", "stream", "street",
    "studio", "summit", "sun", "sunset", "surf", "swan", "swift", "sycamore",
    "table", "talon", "tango", "tarpon", "teal", "temple", "tender", "terra",
    "thistle", "thunder", "tiger", "timber", "topaz", "torch", "tower", "trail",
    "train", "tree", "tribe", "triton", "tulip", "tundra", "turbine", "turtle",
    "umber", "union", "unity", "upland", "urban", "valley", "vapor", "vault",
    "vector", "velvet", "venture", "verse", "vessel", "vienna", "vine", "violet",
    "vista", "vivid", "volt", "voyage", "wagon", "walnut", "water", "wave",
    "west", "whale", "wheat", "willow", "wind", "winter", "wolf", "wonder",
    "wood", "wren", "yarn", "yellow", "yonder", "zebra", "zenith", "zephyr",
)
