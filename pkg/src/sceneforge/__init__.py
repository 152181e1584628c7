"""sceneforge: programmable indoor-scene data synthesis.

A pipeline engine that filters scenes from a document store, randomizes
them at scene / entity / pixel level through seeded samplers, renders
multi-channel ground truth (color, depth, normal, semantic, instance),
and exports structured metadata, all driven by a small pipeline DSL.
"""

__version__ = "0.1.0"

RNG_ALGORITHM = "philox4x64/blake2b-derived"
