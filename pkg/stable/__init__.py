from stable.params import QuadraticFormSplit, SeriesResult, StableParams, check_alpha, v_alpha, w_alpha
from stable.sampler import StableSampler

__all__ = ['QuadraticFormSplit', 'SeriesResult', 'StableParams', 'StableSampler', 'check_alpha', 'v_alpha', 'w_alpha']
