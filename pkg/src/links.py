"""Link functions mapping distribution parameters to linear predictors."""

from __future__ import annotations

import numpy as np
from scipy.special import expit, logit


class Link:
    """Base link. ``link`` maps parameter -> eta, ``inverse`` maps eta -> parameter."""

    name = "identity"

    def link(self, theta):
        return theta

    def inverse(self, eta):
        return eta

    def dtheta_deta(self, theta):
        """Derivative of the parameter with respect to eta, expressed in theta."""
        return np.ones_like(theta)


class LogLink(Link):
    name = "log"

    def link(self, theta):
        return np.log(theta)

    def inverse(self, eta):
        # clip keeps exp() finite; the parameter safeguards clip tighter anyway
        return np.exp(np.clip(eta, -700.0, 700.0))

    def dtheta_deta(self, theta):
        return theta


class LogitLink(Link):
    name = "logit"

    def link(self, theta):
        return logit(theta)

    def inverse(self, eta):
        return expit(eta)

    def dtheta_deta(self, theta):
        return theta * (1.0 - theta)


MU_LINK = LogLink()
SIGMA_LINK = LogLink()
NU_LINK = LogitLink()

LINKS = {"mu": MU_LINK, "sigma": SIGMA_LINK, "nu": NU_LINK}


__all__ = ["LINKS", "Link", "LogLink", "LogitLink", "MU_LINK", "NU_LINK", "SIGMA_LINK"]
