"""Beta process factor analysis: blind dictionary learning on masked patches.

Generative model, per patch x_i (length P, observed on a per-patch subset):

    x_i = D (z_i * s_i) + eps_i
    d_k ~ Normal(0, I/P)            pi_k ~ Beta(a0/K, b0(K-1)/K)
    z_ik ~ Bernoulli(pi_k)          s_ik ~ Normal(0, 1/gamma_s)
    eps  ~ Normal(0, I/gamma_eps)   gamma_s, gamma_eps ~ Gamma

Inference is collapsed Gibbs over observed entries only: each dictionary
column, then each (z, s) pair (z sampled with s marginalized out), then
pi and the two precisions. Unobserved entries never enter any update.

The hot loops run per atom, vectorized over patches, against a running
residual matrix R = X - (Z*S) D^T restricted to observed entries.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .maps_io import MapImage
from .patches import PatchSet, extract_patches, reassemble
from .sampling import MaskedMap

VAR_FLOOR = 1e-12


class BpfaNumericalError(RuntimeError):
    """Non-finite state detected during a Gibbs sweep."""


@dataclass(frozen=True)
class BpfaHyperParams:
    """Model and run configuration.

    The default dictionary size is small on purpose: for piecewise-smooth
    grain maps a compact dictionary generalizes far better from sparse
    observations than the few-hundred-atom sizes common for natural images.
    """

    n_atoms: int = 12
    a0: float = 1.0
    b0: float = 1.0
    c0: float = 0.1
    d0: float = 0.1
    e0: float = 0.1
    f0: float = 0.1
    burn_in: int = 20
    samples: int = 20
    seed: int = 0

    def __post_init__(self):
        for name in ("a0", "b0", "c0", "d0", "e0", "f0"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.n_atoms < 1 or self.samples < 1 or self.burn_in < 0:
            raise ValueError("invalid sweep configuration")


@dataclass
class BpfaState:
    """Full sampler state; mutated in place by gibbs_sweep."""

    dictionary: np.ndarray  # P x K
    z: np.ndarray  # N x K bool
    s: np.ndarray  # N x K
    pi: np.ndarray  # K
    gamma_s: float
    gamma_eps: float
    rng: np.random.Generator
    # X and observation mask with unobserved entries zeroed, plus the
    # running residual; kept here so sweeps stay O(NPK) without rebuilds.
    x_obs: np.ndarray = field(repr=False, default=None)
    obs: np.ndarray = field(repr=False, default=None)
    residual: np.ndarray = field(repr=False, default=None)

    @property
    def n_atoms(self) -> int:
        return self.dictionary.shape[1]

    def weights(self) -> np.ndarray:
        return np.where(self.z, self.s, 0.0)

    def reconstruction(self) -> np.ndarray:
        """N x P patch estimates D (z_i * s_i)."""
        return self.weights() @ self.dictionary.T

    def active_atoms(self) -> int:
        return int(np.sum(self.pi > 1.0 / self.n_atoms))

    def rmse_observed(self) -> float:
        n_obs = self.obs.sum()
        return float(np.sqrt(np.sum(self.residual**2) / max(n_obs, 1.0)))


def init_state(patch_set: PatchSet, hp: BpfaHyperParams) -> BpfaState:
    """Prior draw for the dictionary, empty sparse code, prior-mean precisions."""
    n, p = patch_set.patches.shape
    if n == 0:
        raise ValueError("no patches to fit")
    k = hp.n_atoms
    rng = np.random.default_rng(hp.seed)
    dictionary = rng.normal(0.0, 1.0 / np.sqrt(p), size=(p, k))
    obs = patch_set.observed.astype(np.float64)
    x_obs = patch_set.patches * obs
    state = BpfaState(
        dictionary=dictionary,
        z=np.zeros((n, k), dtype=bool),
        s=np.zeros((n, k)),
        # start at the prior mean of pi, so atoms come up sparse rather than
        # the chain having to dig itself out of a dense-activation mode
        pi=np.full(k, hp.a0 / (hp.a0 + hp.b0 * (k - 1)) if k > 1 else 0.5),
        gamma_s=hp.c0 / hp.d0,
        gamma_eps=hp.e0 / hp.f0,
        rng=rng,
        x_obs=x_obs,
        obs=obs,
        residual=x_obs.copy(),
    )
    return state


def _sample_dictionary(state: BpfaState) -> None:
    """Resample each column given the rest; likelihood over observed entries.

    For an unused atom the posterior collapses to the prior, so dead atoms
    are refreshed here for free.
    """
    p = state.dictionary.shape[0]
    r, obs = state.residual, state.obs
    for k in range(state.n_atoms):
        w = np.where(state.z[:, k], state.s[:, k], 0.0)
        d_old = state.dictionary[:, k].copy()
        if not np.any(w):
            state.dictionary[:, k] = state.rng.normal(0.0, 1.0 / np.sqrt(p), size=p)
            continue
        w_sq_cover = obs.T @ (w * w)  # per-dimension sum of w_i^2 over observers
        precision = np.maximum(p + state.gamma_eps * w_sq_cover, VAR_FLOOR)
        # residual with atom k added back, projected onto w, per dimension
        corr = r.T @ w + d_old * w_sq_cover
        mean = state.gamma_eps * corr / precision
        d_new = mean + state.rng.normal(size=p) / np.sqrt(precision)
        state.dictionary[:, k] = d_new
        state.residual += np.multiply.outer(w, d_old - d_new) * obs


def _sample_codes(state: BpfaState) -> None:
    """Blocked (z, s) update per atom, vectorized over patches.

    z is sampled with s marginalized out of the observed-data likelihood;
    s is then drawn from its Gaussian conditional where z = 1.
    """
    r, obs = state.residual, state.obs
    n = r.shape[0]
    log_gamma_s = np.log(state.gamma_s)
    for k in range(state.n_atoms):
        d_k = state.dictionary[:, k]
        w_old = np.where(state.z[:, k], state.s[:, k], 0.0)
        d_sq_cover = obs @ (d_k * d_k)  # per-patch sum of d_pk^2 over observed
        s_var = 1.0 / np.maximum(state.gamma_s + state.gamma_eps * d_sq_cover, VAR_FLOOR)
        # residual with atom k added back, projected onto d_k, per patch
        corr = r @ d_k + w_old * d_sq_cover
        s_mean = state.gamma_eps * s_var * corr
        pi_k = np.clip(state.pi[k], VAR_FLOOR, 1.0 - VAR_FLOOR)
        logit = (
            np.log(pi_k)
            - np.log1p(-pi_k)
            + 0.5 * (log_gamma_s + np.log(s_var))
            + 0.5 * s_mean * s_mean / s_var
        )
        z_new = np.log(state.rng.random(n)) < -np.logaddexp(0.0, -logit)
        s_draw = s_mean + state.rng.normal(size=n) * np.sqrt(s_var)
        s_new = np.where(z_new, s_draw, 0.0)
        state.z[:, k] = z_new
        state.s[:, k] = s_new
        if np.any(w_old) or np.any(s_new):
            state.residual += np.multiply.outer(w_old - s_new, d_k) * obs


def gibbs_sweep(state: BpfaState, hp: BpfaHyperParams, sweep_index: int = 0) -> BpfaState:
    """One full conditional-resampling pass; mutates and returns state."""
    n, k = state.z.shape
    _sample_dictionary(state)
    _sample_codes(state)

    counts = state.z.sum(axis=0)
    state.pi = state.rng.beta(
        hp.a0 / k + counts, hp.b0 * (k - 1) / k + n - counts
    )

    n_active = counts.sum()
    shape_s = hp.c0 + 0.5 * n_active
    rate_s = hp.d0 + 0.5 * np.sum(state.s[state.z] ** 2)
    state.gamma_s = max(state.rng.gamma(shape_s, 1.0 / rate_s), VAR_FLOOR)

    n_obs = state.obs.sum()
    shape_e = hp.e0 + 0.5 * n_obs
    rate_e = hp.f0 + 0.5 * np.sum(state.residual**2)
    state.gamma_eps = max(state.rng.gamma(shape_e, 1.0 / rate_e), VAR_FLOOR)

    if not (
        np.isfinite(state.dictionary).all()
        and np.isfinite(state.s).all()
        and np.isfinite(state.pi).all()
        and np.isfinite(state.gamma_s)
        and np.isfinite(state.gamma_eps)
    ):
        raise BpfaNumericalError(f"non-finite state after sweep {sweep_index}")
    return state


@dataclass(frozen=True)
class InpaintDiagnostics:
    """Per-sweep traces recorded across burn-in and sampling."""

    rmse_observed: np.ndarray
    active_atoms: np.ndarray
    gamma_eps: np.ndarray
    wall_time_s: float


def _center_patches(patch_set: PatchSet) -> tuple[PatchSet, np.ndarray]:
    """Subtract each patch's observed-mean DC level before factoring.

    The dictionary then only has to explain structure, not brightness, which
    matters most when few pixels per patch are observed. Patches with no
    observations get the global observed mean so their add-back is sane.
    """
    n_observed = patch_set.observed.sum(axis=1)
    global_mean = float(patch_set.patches[patch_set.observed].mean())
    sums = (patch_set.patches * patch_set.observed).sum(axis=1)
    means = np.where(
        n_observed > 0, sums / np.maximum(n_observed, 1), global_mean
    )
    centered = PatchSet(
        geometry=patch_set.geometry,
        patches=(patch_set.patches - means[:, None]) * patch_set.observed,
        observed=patch_set.observed,
    )
    return centered, means


def inpaint(
    masked: MaskedMap,
    hp: BpfaHyperParams,
    patch_size: int = 8,
    stride: int = 1,
    keep_measured: bool | None = None,
) -> tuple[MapImage, BpfaState, InpaintDiagnostics]:
    """Reconstruct a full map from a masked one.

    Runs extract -> center -> init -> (burn_in + samples) sweeps; each patch
    estimate is the posterior mean over the retained sweeps, then overlapping
    estimates are averaged back into the map, counting only patches that saw
    at least one measurement. keep_measured defaults to True for noiseless
    acquisition, False when noise was added.
    """
    if masked.sampling.m < 1:
        raise ValueError("need at least one observed position")
    if keep_measured is None:
        keep_measured = masked.noise_sigma == 0.0
    start = time.perf_counter()
    patch_set = extract_patches(masked, patch_size, stride)
    centered, dc_means = _center_patches(patch_set)
    state = init_state(centered, hp)
    total = hp.burn_in + hp.samples
    rmse = np.empty(total)
    active = np.empty(total, dtype=np.int64)
    geps = np.empty(total)
    estimate = np.zeros_like(patch_set.patches)
    for sweep in range(total):
        gibbs_sweep(state, hp, sweep_index=sweep)
        rmse[sweep] = state.rmse_observed()
        active[sweep] = state.active_atoms()
        geps[sweep] = state.gamma_eps
        if sweep >= hp.burn_in:
            estimate += state.reconstruction()
    estimate /= hp.samples
    estimate += dc_means[:, None]
    informed = (patch_set.observed.any(axis=1)).astype(np.float64)
    image = reassemble(
        estimate,
        patch_set.geometry,
        masked,
        keep_measured=keep_measured,
        weights=informed,
    )
    diag = InpaintDiagnostics(
        rmse_observed=rmse,
        active_atoms=active,
        gamma_eps=geps,
        wall_time_s=time.perf_counter() - start,
    )
    return image, state, diag


def save_dictionary(state: BpfaState, path) -> None:
    """Flat little-endian float64 dump with a 'P K' sidecar text file."""
    path = Path(path)
    path.write_bytes(state.dictionary.astype("<f8").tobytes())
    p, k = state.dictionary.shape
    path.with_suffix(path.suffix + ".txt").write_text(f"{p} {k}\n")


def save_diagnostics_csv(diag: InpaintDiagnostics, path) -> None:
    lines = ["sweep,rmse_observed,active_atoms,gamma_eps"]
    for i in range(len(diag.rmse_observed)):
        lines.append(
            f"{i},{diag.rmse_observed[i]:.6f},{diag.active_atoms[i]},{diag.gamma_eps[i]:.6f}"
        )
    Path(path).write_text("\n".join(lines) + "\n")
