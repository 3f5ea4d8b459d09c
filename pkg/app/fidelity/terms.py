"""
Data-fidelity terms G(u; f).

Every term provides value, gradient and the proximal map
    prox(x, tau) = argmin_u  tau * G(u) + 0.5 * ||u - x||^2,   tau = 1 / beta,
together with the cocoercivity constant gamma of grad G (None when grad G is not
cocoercive). For the quadratic terms gamma = 1 / (mu * ||A||^2), i.e. 1 / mu for
a normalized blur.
"""
import logging
from abc import ABC, abstractmethod

import numpy as np
from scipy import fft

from app.config import CG_RTOL, POISSON_FLOOR
from app.core.image import Kernel, as_image
from app.core.operators import compose, convolution_operator, downsample_operator, transfer_function
from app.errors import ConstructionError, DimensionError, DomainError
from app.fidelity.cg import conjugate_gradient

logger = logging.getLogger(__name__)


class FidelityTerm(ABC):
    """G(u; f) with value, gradient, proximal map and cocoercivity constant."""

    name = "fidelity"

    def __init__(self, observation, mu, shape):
        self.observation = observation
        self.mu = mu
        self.shape = tuple(shape)

    gamma = None
    grad_lipschitz = None

    @abstractmethod
    def value(self, u):
        ...

    @abstractmethod
    def grad(self, u):
        ...

    @abstractmethod
    def prox(self, x, tau):
        ...

    def domain_clamp(self, u):
        return u

    def describe(self):
        return {
            "name": self.name,
            "mu": self.mu,
            "gamma": self.gamma,
            "grad_lipschitz": self.grad_lipschitz,
            "shape": list(self.shape),
        }


def _check_mu(mu):
    if mu <= 0:
        raise ConstructionError(f"mu must be positive, got {mu}")


def _check_tau(tau):
    if tau <= 0:
        raise ConstructionError(f"prox weight must be positive, got {tau}")


class QuadraticFidelity(FidelityTerm):
    """(mu/2)||Au - f||^2 for a linear operator A; prox by conjugate gradient."""

    name = "quadratic"

    def __init__(self, observation, op, mu):
        observation = as_image(observation, "observation")
        if observation.shape != op.out_shape:
            raise DimensionError(f"observation {observation.shape} does not match operator output {op.out_shape}")
        _check_mu(mu)
        super().__init__(observation, mu, op.in_shape)
        self.op = op
        self.grad_lipschitz = mu * op.norm_bound**2
        self.gamma = 1.0 / self.grad_lipschitz if self.grad_lipschitz > 0 else float("inf")

    def value(self, u):
        res = self.op.apply(u) - self.observation
        return 0.5 * self.mu * float(np.sum(res * res))

    def grad(self, u):
        return self.mu * self.op.adjoint(self.op.apply(u) - self.observation)

    def prox(self, x, tau):
        _check_tau(tau)
        w = tau * self.mu
        rhs = w * self.op.adjoint(self.observation) + x
        result = conjugate_gradient(lambda u: w * self.op.adjoint(self.op.apply(u)) + u, rhs, x0=x, rtol=CG_RTOL)
        if not result.converged:
            logger.warning("%s prox CG stopped at relative residual %.3e", self.name, result.residual)
        return result.x

    def describe(self):
        return {**super().describe(), "operator": self.op.name}


class DeblurFidelity(QuadraticFidelity):
    """(mu/2)||Ku - f||^2 with circular convolution K; prox in closed form via FFT."""

    name = "deblur"

    def __init__(self, observation, kernel: Kernel, mu):
        observation = as_image(observation, "observation")
        super().__init__(observation, convolution_operator(kernel, observation.shape), mu)
        self.kernel = kernel
        self._khat = transfer_function(kernel, observation.shape)
        self._khat.setflags(write=False)
        self._fhat = fft.fft2(observation)

    def prox(self, x, tau):
        _check_tau(tau)
        w = tau * self.mu
        num = w * np.conj(self._khat) * self._fhat + fft.fft2(x)
        return fft.ifft2(num / (w * np.abs(self._khat) ** 2 + 1.0)).real

    def describe(self):
        return {**super().describe(), "kernel": list(self.kernel.shape)}


class SISRFidelity(QuadraticFidelity):
    """(mu/2)||SKu - f||^2, S the s-fold downsampler; prox by conjugate gradient."""

    name = "sisr"

    def __init__(self, observation, kernel: Kernel, scale, mu):
        observation = as_image(observation, "observation")
        if scale < 1:
            raise DimensionError(f"scale must be positive, got {scale}")
        hr = (observation.shape[0] * scale, observation.shape[1] * scale)
        op = compose(downsample_operator(scale, hr), convolution_operator(kernel, hr))
        super().__init__(observation, op, mu)
        self.kernel = kernel
        self.scale = scale

    def describe(self):
        return {**super().describe(), "scale": self.scale, "kernel": list(self.kernel.shape)}


class PoissonFidelity(FidelityTerm):
    """mu * sum(u - f log u). The gradient is not cocoercive (gamma is None)."""

    name = "poisson"

    def __init__(self, observation, mu, peak):
        observation = as_image(observation, "observation")
        _check_mu(mu)
        if peak <= 0:
            raise ConstructionError(f"peak must be positive, got {peak}")
        if np.any(observation < 0):
            raise DomainError("Poisson observation must be non-negative")
        super().__init__(observation, mu, observation.shape)
        self.peak = peak

    def _check_domain(self, u):
        if np.any(u <= 0):
            raise DomainError("Poisson fidelity is only defined for u > 0")

    def value(self, u):
        self._check_domain(u)
        return self.mu * float(np.sum(u - self.observation * np.log(u)))

    def grad(self, u):
        self._check_domain(u)
        return self.mu * (1.0 - self.observation / u)

    def prox(self, x, tau):
        """Positive root of u^2 + (tau*mu - x)u - tau*mu*f = 0, per pixel."""
        _check_tau(tau)
        w = tau * self.mu
        b = x - w
        disc = np.sqrt(b * b + 4.0 * w * self.observation)
        # both branches are the same root; the second avoids cancellation when b < 0
        with np.errstate(divide="ignore", invalid="ignore"):
            small = np.where(disc - b > 0, 2.0 * w * self.observation / (disc - b), 0.0)
        return np.where(b >= 0, 0.5 * (b + disc), small)

    def domain_clamp(self, u):
        return np.maximum(u, POISSON_FLOOR)

    def describe(self):
        return {**super().describe(), "peak": self.peak, "note": "grad G is not cocoercive"}


class NullFidelity(FidelityTerm):
    """G = 0: prox is the identity and grad G is cocoercive for every gamma."""

    name = "null"

    def __init__(self, shape):
        super().__init__(None, 0.0, shape)
        self.gamma = float("inf")
        self.grad_lipschitz = 0.0

    def value(self, u):
        return 0.0

    def grad(self, u):
        return np.zeros(self.shape)

    def prox(self, x, tau):
        _check_tau(tau)
        return np.array(x, dtype=np.float64)


def make_deblur_fidelity(f, kernel: Kernel, mu):
    return DeblurFidelity(f, kernel, mu)


def make_denoise_fidelity(f, mu):
    return DeblurFidelity(f, Kernel.delta(), mu)


def make_sisr_fidelity(f, kernel: Kernel, scale, mu):
    return SISRFidelity(f, kernel, scale, mu)


def make_poisson_fidelity(f, mu, peak):
    return PoissonFidelity(f, mu, peak)


def make_null_fidelity(shape):
    return NullFidelity(shape)
