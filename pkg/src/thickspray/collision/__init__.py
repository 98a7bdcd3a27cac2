from .laws import VelocityPair, cross_collision, cross_collision_arrays, same_species_collision
from .params import ScalingParams

__all__ = ["ScalingParams", "VelocityPair", "cross_collision", "cross_collision_arrays", "same_species_collision"]
