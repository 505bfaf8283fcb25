"""Ground-truth interference models and secondary-data samplers.

Two scenarios are provided: a uniform linear array (half-wavelength spacing)
illuminated by wideband jammers, and a pulse-Doppler burst with bimodal
sea/ground clutter. Both add a white-noise floor ``sigma_a^2 I`` to a coloured
component. All powers are in dB and converted as ``10**(dB/10)``.
"""

import math
from dataclasses import dataclass, field
from typing import List, Union

import numpy as np

from covproj.hermitian import eig_hermitian, psd_factor

SINC_UNNORMALIZED = "unnormalized"   # sin(x) / x
SINC_NORMALIZED = "normalized"       # sin(pi x) / (pi x)
DEFAULT_SINC = SINC_UNNORMALIZED

GAMMA_PARAMETERIZATION = "shape=1/mu_tau, scale=mu_tau (unit mean)"


def db2lin(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def lin2db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class TextureModel:
    model: str = "gaussian"
    mu_tau: float = 2.0

    def __post_init__(self):
        if self.model not in ("gaussian", "compound"):
            raise ValueError(f"texture model must be 'gaussian' or 'compound', got {self.model!r}")
        if not self.mu_tau > 0:
            raise ValueError(f"mu_tau must be > 0, got {self.mu_tau}")


@dataclass(frozen=True)
class Jammer:
    power_db: float
    angle_deg: float
    fractional_bandwidth: float = 0.0

    def __post_init__(self):
        if not -90.0 < self.angle_deg < 90.0:
            raise ValueError(f"jammer angle must lie in (-90, 90) degrees, got {self.angle_deg}")
        if self.fractional_bandwidth < 0:
            raise ValueError("fractional_bandwidth must be >= 0")


@dataclass(frozen=True)
class SpatialScenario:
    n: int
    jammers: List[Jammer]
    noise_power_db: float = 0.0
    texture: TextureModel = field(default_factory=TextureModel)
    sinc: str = DEFAULT_SINC
    type: str = field(default="spatial", init=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.sinc not in (SINC_UNNORMALIZED, SINC_NORMALIZED):
            raise ValueError(f"unknown sinc convention {self.sinc!r}")

    def colored(self):
        return jammer_covariance(self)

    def steering(self, grid):
        return steering_spatial(grid, self.n)


@dataclass(frozen=True)
class DopplerScenario:
    n: int
    cnr_s_db: float
    cnr_g_db: float
    rho_s: float
    rho_g: float
    f_s: float
    noise_power_db: float = 0.0
    texture: TextureModel = field(default_factory=TextureModel)
    type: str = field(default="doppler", init=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        for name in ("rho_s", "rho_g"):
            rho = getattr(self, name)
            if not 0.0 <= rho < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {rho}")

    def colored(self):
        return clutter_covariance(self)

    def steering(self, grid):
        return steering_doppler(grid, self.n)


Scenario = Union[SpatialScenario, DopplerScenario]


def steering_spatial(theta_deg, n):
    """ULA steering vector ``exp(j pi sin(theta) k)``, ``k = 0..n-1``.

    A scalar angle gives shape ``(n,)``; an array of ``G`` angles gives ``(n, G)``.
    """
    theta = np.asarray(theta_deg, dtype=float)
    k = np.arange(n)
    phase = np.pi * np.sin(np.deg2rad(theta))
    return np.exp(1j * np.multiply.outer(k, phase))


def steering_doppler(nu, n):
    """Doppler steering vector ``exp(j 2 pi nu k)``, ``k = 0..n-1``."""
    nu = np.asarray(nu, dtype=float)
    k = np.arange(n)
    return np.exp(2j * np.pi * np.multiply.outer(k, nu))


def _sinc(x, convention):
    if convention == SINC_NORMALIZED:
        return np.sinc(x)
    return np.sinc(x / np.pi)


def jammer_covariance(scenario):
    """Coloured covariance of the jammers.

    ``M_s(n, m) = sum_i sigma_i^2 sinc(0.5 B_f (n - m) phi_i) exp(j (n - m) phi_i)``
    with ``phi_i = pi sin(theta_i)``.
    """
    n = scenario.n
    lag = np.subtract.outer(np.arange(n), np.arange(n)).astype(float)
    m = np.zeros((n, n), dtype=np.complex128)
    for jam in scenario.jammers:
        phi = np.pi * math.sin(math.radians(jam.angle_deg))
        m += db2lin(jam.power_db) * _sinc(0.5 * jam.fractional_bandwidth * lag * phi, scenario.sinc) * np.exp(1j * lag * phi)
    return 0.5 * (m + m.conj().T)


def clutter_covariance(scenario):
    """Bimodal sea/ground clutter covariance.

    ``M_t(n, m) = CNR_S rho_S^{(n-m)^2} e^{j 2 pi (n-m) f_S} + CNR_G rho_G^{|n-m|}``.
    """
    lag = np.subtract.outer(np.arange(scenario.n), np.arange(scenario.n)).astype(float)
    sea = db2lin(scenario.cnr_s_db) * scenario.rho_s ** (lag ** 2) * np.exp(2j * np.pi * lag * scenario.f_s)
    ground = db2lin(scenario.cnr_g_db) * scenario.rho_g ** np.abs(lag)
    m = sea + ground
    return 0.5 * (m + m.conj().T)


def total_covariance(colored, noise_power_db):
    """``colored + sigma_a^2 I``."""
    colored = np.asarray(colored, dtype=np.complex128)
    return colored + db2lin(noise_power_db) * np.eye(colored.shape[0])


def true_kappa(m):
    """Condition number ``lambda_max / lambda_min`` of a positive definite matrix."""
    d = eig_hermitian(m).d
    if not d[-1] > 0:
        raise ValueError(f"true_kappa: matrix is not positive definite (min eigenvalue {d[-1]:.3e})")
    return float(d[0] / d[-1])


def _circular_normal(rng, k, n):
    return (rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))) * math.sqrt(0.5)


def sample_gaussian(m, k, rng, factor=None):
    """``k`` zero-mean circular Gaussian vectors with covariance ``m``, shape ``(k, n)``.

    Pass a precomputed ``factor`` (``F F^H = m``) to skip the factorization.
    """
    f = psd_factor(m) if factor is None else factor
    z = _circular_normal(rng, k, f.shape[1])
    return z @ f.T


def sample_texture(mu_tau, k, rng):
    """Gamma texture draws with shape ``1/mu_tau`` and scale ``mu_tau`` (mean 1)."""
    return rng.gamma(1.0 / mu_tau, mu_tau, size=k)


def sample_compound(colored, noise_power_db, mu_tau, k, rng, factor=None, tau=None):
    """Compound-Gaussian data ``r_i = n_i + sqrt(tau_i) x_i``.

    ``n_i ~ CN(0, sigma_a^2 I)``, ``x_i ~ CN(0, colored)`` and ``tau_i`` Gamma
    distributed, all independent. ``tau`` overrides the texture draws (testing
    hook; e.g. ``np.ones(k)`` disables the texture).
    """
    f = psd_factor(colored) if factor is None else factor
    n = f.shape[0]
    if tau is None:
        tau = sample_texture(mu_tau, k, rng)
    tau = np.asarray(tau, dtype=float)
    x = _circular_normal(rng, k, f.shape[1]) @ f.T
    noise = _circular_normal(rng, k, n) * math.sqrt(float(db2lin(noise_power_db)))
    return noise + np.sqrt(tau)[:, None] * x


class Sampler:
    """Secondary-data generator for a scenario; factors once, reused across trials."""

    def __init__(self, scenario):
        self.scenario = scenario
        self.colored = scenario.colored()
        self.m_true = total_covariance(self.colored, scenario.noise_power_db)
        if scenario.texture.model == "compound":
            self._factor = psd_factor(self.colored)
        else:
            self._factor = psd_factor(self.m_true)

    def __call__(self, k, rng):
        if self.scenario.texture.model == "compound":
            return sample_compound(self.colored, self.scenario.noise_power_db,
                                   self.scenario.texture.mu_tau, k, rng, factor=self._factor)
        return sample_gaussian(self.m_true, k, rng, factor=self._factor)


_SPATIAL_KEYS = {"type", "n", "jammers", "noise_power_db", "texture", "sinc"}
_DOPPLER_KEYS = {"type", "n", "cnr_s_db", "cnr_g_db", "rho_s", "rho_g", "f_s", "noise_power_db", "texture"}


def _texture_from_json(obj):
    if obj is None:
        return TextureModel()
    if not isinstance(obj, dict) or "model" not in obj:
        raise ValueError("scenario.texture must be an object with a 'model' field")
    return TextureModel(obj["model"], float(obj.get("mu_tau", 2.0)))


def scenario_from_json(obj):
    """Build a scenario from its JSON object form."""
    if not isinstance(obj, dict):
        raise ValueError("scenario must be a JSON object")
    kind = obj.get("type")
    try:
        if kind == "spatial":
            extra = set(obj) - _SPATIAL_KEYS
            if extra:
                raise ValueError(f"unknown field(s) {sorted(extra)}")
            jammers = [Jammer(float(j["power_db"]), float(j["angle_deg"]), float(j.get("fractional_bandwidth", 0.0)))
                       for j in obj.get("jammers", [])]
            return SpatialScenario(int(obj["n"]), jammers, float(obj.get("noise_power_db", 0.0)),
                                   _texture_from_json(obj.get("texture")), obj.get("sinc", DEFAULT_SINC))
        if kind == "doppler":
            extra = set(obj) - _DOPPLER_KEYS
            if extra:
                raise ValueError(f"unknown field(s) {sorted(extra)}")
            return DopplerScenario(int(obj["n"]), float(obj["cnr_s_db"]), float(obj["cnr_g_db"]),
                                   float(obj["rho_s"]), float(obj["rho_g"]), float(obj["f_s"]),
                                   float(obj.get("noise_power_db", 0.0)), _texture_from_json(obj.get("texture")))
    except KeyError as exc:
        raise ValueError(f"scenario: missing field {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ValueError(f"scenario: {exc}") from None
    raise ValueError(f"scenario.type must be 'spatial' or 'doppler', got {kind!r}")


def scenario_to_json(sc):
    texture = {"model": sc.texture.model, "mu_tau": sc.texture.mu_tau}
    if sc.type == "spatial":
        return {
            "type": "spatial",
            "n": sc.n,
            "jammers": [{"power_db": j.power_db, "angle_deg": j.angle_deg,
                         "fractional_bandwidth": j.fractional_bandwidth} for j in sc.jammers],
            "noise_power_db": sc.noise_power_db,
            "texture": texture,
            "sinc": sc.sinc,
        }
    return {
        "type": "doppler", "n": sc.n, "cnr_s_db": sc.cnr_s_db, "cnr_g_db": sc.cnr_g_db,
        "rho_s": sc.rho_s, "rho_g": sc.rho_g, "f_s": sc.f_s,
        "noise_power_db": sc.noise_power_db, "texture": texture,
    }
