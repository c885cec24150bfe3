from dataclasses import dataclass

from stable import check_alpha


@dataclass(frozen=True)
class RhoGamma:
    """
    Exponents of the local-law scale n^{-rho} (log n)^2 and of the counting bound n eta^{gamma}.

    Attributes:
        alpha (float): Stable index in (0, 2).
        rho (float): 1/2 for 8/5 <= alpha < 2, alpha/(8 - 3 alpha) for 1 < alpha < 8/5, alpha/(2 + 3 alpha) for alpha <= 1.
        gamma_exp (float): (1/2 + 1/alpha)^{-1}.
    """
    alpha: float
    rho: float
    gamma_exp: float


def rho_of_alpha(alpha: float) -> RhoGamma:
    alpha = check_alpha(alpha)
    if alpha >= 8.0 / 5.0:
        rho = 0.5
    elif alpha > 1.0:
        rho = alpha / (8.0 - 3.0 * alpha)
    else:
        rho = alpha / (2.0 + 3.0 * alpha)
    return RhoGamma(alpha=alpha, rho=rho, gamma_exp=1.0 / (0.5 + 1.0 / alpha))
