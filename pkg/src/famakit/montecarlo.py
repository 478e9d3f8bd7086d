"""Stochastic ground truth for the analytic outage engine.

Synthesizes block-correlated Nakagami-m channels directly from their
Gaussian components, selects the best port per trial, and estimates
outage probabilities and multiplexing gains with binomial standard
errors.  Trials are grouped into fixed-size batches whose random streams
derive from (seed, batch index), so estimates are bit-identical for a
given seed regardless of how batches are scheduled across workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special as sp

from .analytic import (OutageEstimate, SystemConfig, fast_params, mux_gain,
                       ofama_gain, ofama_gain_approx)
from .correlation import BlockStructure

MODES = ("slow", "fast_composite", "fast_nakagami_approx")

#: trials per random-stream batch; part of the stream layout, so changing
#: it changes (still valid) estimates for a given seed
BATCH_TRIALS = 8192


@dataclass(frozen=True)
class McSettings:
    trials: int
    seed: int
    mode: str = "slow"

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")


@dataclass(frozen=True)
class TrialBatch:
    """Per-port powers of one channel realization."""

    desired_power: np.ndarray
    interference_power: np.ndarray
    block_map: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.desired_power, dtype=float)
        i = np.asarray(self.interference_power, dtype=float)
        b = np.asarray(self.block_map, dtype=int)
        if not (d.shape == i.shape == b.shape):
            raise ValueError("per-port arrays must share one shape")
        for arr in (d, i, b):
            arr.setflags(write=False)
        object.__setattr__(self, "desired_power", d)
        object.__setattr__(self, "interference_power", i)
        object.__setattr__(self, "block_map", b)


@dataclass(frozen=True)
class GainEstimate:
    p_out: float
    p_out_se: float
    mux_gain: float
    mux_gain_se: float
    ofama_gain: float
    ofama_gain_se: float
    ofama_gain_approx: float
    meta: dict = field(default_factory=dict)


def _correlated_power(rng, n_trials, n_components, block_map, phi):
    """Sum of squares of 2*orders correlated Gaussians per port.

    Each block draws its common components once; every port adds its own
    independent components scaled against phi = sqrt(delta/(1-delta)).
    Draw order (common first, then per-port) is part of the stream
    contract.
    """
    n_blocks = int(block_map.max()) + 1
    common = rng.standard_normal((n_trials, n_components, n_blocks))
    own = rng.standard_normal((n_trials, n_components, block_map.size))
    comps = own + phi * common[:, :, block_map]
    return np.einsum("tcn,tcn->tn", comps, comps), comps


def _sample_powers(cfg: SystemConfig, blocks: BlockStructure, mode: str, rng,
                   n_trials: int):
    """Desired and interference per-port powers for a batch of trials."""
    if blocks.N != cfg.N:
        raise ValueError("block structure does not cover the configured ports")
    block_map = blocks.port_blocks()
    phi = np.sqrt(blocks.delta / (1.0 - blocks.delta))
    desired, _ = _correlated_power(rng, n_trials, 2 * cfg.m, block_map, phi)
    if mode == "slow":
        interference = np.zeros_like(desired)
        for m_u in cfg.m_interferers:
            power, _ = _correlated_power(rng, n_trials, 2 * m_u, block_map, phi)
            interference += power
    elif mode == "fast_composite":
        amplitudes = []
        phases = []
        for m_u in cfg.m_interferers:
            power, comps = _correlated_power(rng, n_trials, 2 * m_u, block_map, phi)
            amplitudes.append(np.sqrt(power))
            # carry the phase of the first complex component so it keeps
            # the block correlation; exact for m_u = 1
            phases.append(np.arctan2(comps[:, m_u, :], comps[:, 0, :]))
        symbols = rng.standard_normal((n_trials, len(amplitudes), 2))
        composite = np.zeros((n_trials, cfg.N), dtype=complex)
        for idx in range(len(amplitudes)):
            s = (symbols[:, idx, 0] + 1j * symbols[:, idx, 1]) / np.sqrt(2.0)
            composite += s[:, None] * amplitudes[idx] * np.exp(1j * phases[idx])
        interference = np.abs(composite) ** 2
    elif mode == "fast_nakagami_approx":
        fp = fast_params(cfg.m_interferers)
        power, _ = _correlated_power(rng, n_trials, 2 * fp.m_tilde_int, block_map, phi)
        interference = fp.u_hat * power
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return desired, interference, block_map


def _batch_rng(seed: int, batch_index: int):
    return np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                        spawn_key=(batch_index,)))


def sample_trial(cfg: SystemConfig, blocks: BlockStructure, mode: str,
                 rng) -> TrialBatch:
    """One channel realization's per-port desired and interference powers."""
    desired, interference, block_map = _sample_powers(cfg, blocks, mode, rng, 1)
    return TrialBatch(desired_power=desired[0], interference_power=interference[0],
                      block_map=block_map)


def _batch_slices(trials: int):
    n_batches = (trials + BATCH_TRIALS - 1) // BATCH_TRIALS
    return [(b, min(BATCH_TRIALS, trials - b * BATCH_TRIALS)) for b in range(n_batches)]


def _max_sir_counts(cfg, blocks, settings, gammas, workers):
    gam = np.asarray(gammas, dtype=float)

    def one_batch(args):
        batch_index, n = args
        rng = _batch_rng(settings.seed, batch_index)
        desired, interference, _ = _sample_powers(cfg, blocks, settings.mode, rng, n)
        best = np.max(desired / interference, axis=1)
        return np.array([np.count_nonzero(best <= g) for g in gam], dtype=np.int64)

    slices = _batch_slices(settings.trials)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one_batch, slices))
    else:
        parts = [one_batch(s) for s in slices]
    return np.sum(parts, axis=0)


def estimate_op(cfg: SystemConfig, blocks: BlockStructure, settings: McSettings,
                workers: int = 1) -> OutageEstimate:
    """Monte Carlo outage probability at the configured threshold."""
    counts = _max_sir_counts(cfg, blocks, settings, [cfg.gamma], workers)
    p = counts[0] / settings.trials
    se = float(np.sqrt(p * (1.0 - p) / settings.trials))
    return OutageEstimate(value=float(p), method="monte_carlo", error=se,
                          meta={"trials": settings.trials, "seed": settings.seed,
                                "mode": settings.mode})


def estimate_op_sweep(cfg: SystemConfig, blocks: BlockStructure,
                      settings: McSettings, gammas, workers: int = 1):
    """Outage estimates at several thresholds from one set of channel draws.

    Sampling does not depend on the threshold, so a whole threshold sweep
    shares the trials; each point matches a standalone estimate_op run at
    the same seed exactly.
    """
    gam = list(gammas)
    counts = _max_sir_counts(cfg, blocks, settings, gam, workers)
    out = []
    for g, c in zip(gam, counts):
        p = c / settings.trials
        se = float(np.sqrt(p * (1.0 - p) / settings.trials))
        out.append(OutageEstimate(value=float(p), method="monte_carlo", error=se,
                                  meta={"trials": settings.trials,
                                        "seed": settings.seed,
                                        "mode": settings.mode,
                                        "gamma": g}))
    return out


def gains_from_p(U: int, M: int, p: float, se: float) -> GainEstimate:
    """Multiplexing gains at outage p with first-order error propagation."""
    mux = mux_gain(U, p)
    gain = ofama_gain(U, M, p)
    approx = ofama_gain_approx(U, M, p)
    # d/dp of the beta-sum: minus the beta densities at 1 - p
    x = 1.0 - p
    u = np.arange(M - U + 1, M + 1)
    a = M - u + 1.0
    b = u.astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_pdf = ((a - 1.0) * np.log(np.maximum(x, 1e-300))
                   + (b - 1.0) * np.log(np.maximum(1.0 - x, 1e-300))
                   - sp.betaln(a, b))
        pdf = np.where((a == 1.0) | (x > 0), np.exp(log_pdf), 0.0)
    slope = float(np.sum(pdf))
    return GainEstimate(p_out=p, p_out_se=se,
                        mux_gain=mux, mux_gain_se=U * se,
                        ofama_gain=gain, ofama_gain_se=slope * se,
                        ofama_gain_approx=approx)


def estimate_gains(cfg: SystemConfig, blocks: BlockStructure,
                   settings: McSettings, M: int, workers: int = 1) -> GainEstimate:
    """Monte Carlo multiplexing gains for a U-of-M opportunistic pool."""
    if M < cfg.U:
        raise ValueError("pool size M must be at least U")
    est = estimate_op(cfg, blocks, settings, workers=workers)
    gains = gains_from_p(cfg.U, M, est.value, est.error)
    gains.meta.update(est.meta)
    return gains
