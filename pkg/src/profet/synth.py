"""Synthetic workloads and devices with exactly known cross-device latency.

A family's workload is a set of reference op times. Each device rescales every
op by its own speed factor; the device's batch latency is the rescaled sum in
ms plus a fixed overhead, times ``1 + N(0, sigma)`` noise. Profiled op maps
and batch latencies get independent noise draws, the way profiled and
unprofiled runs are separate executions on real hardware.
"""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError
from .experiment import (
    DEFAULT_BATCH_SIZES,
    DEFAULT_INSTANCES,
    DEFAULT_MODEL_COUNT,
    DEFAULT_PIXEL_SIZES,
    ScenarioGrid,
    enumerate_scenarios,
)
from .features import Measurement

LATENCY_FLOOR_MS = 1e-6

OP_NAMES = (
    "AddV2", "AvgPool", "BiasAdd", "BiasAddGrad", "Cast", "ConcatV2",
    "Conv2D", "Conv2DBackpropFilter", "Conv2DBackpropInput",
    "DepthwiseConv2dNative", "FusedBatchNormGradV3", "FusedBatchNormV3",
    "MatMul", "MaxPool", "MaxPoolGrad", "Mul", "Relu", "ReluGrad",
    "ResourceApplyAdam", "Softmax", "Transpose",
)

# nominal speed relative to the reference device; per-op factors vary around it
_FLEET_SPEED = {"g3s": 1.0, "g4dn": 0.55, "p2": 1.6, "p3": 0.3}


@dataclass(frozen=True)
class SyntheticDevice:
    device_id: str
    factors: dict
    overhead_ms: float = 0.0
    noise_sigma: float = 0.0

    def __post_init__(self):
        if any(not (f > 0 and math.isfinite(f)) for f in self.factors.values()):
            raise ValidationError("device speed factors must be positive")
        if self.overhead_ms < 0 or self.noise_sigma < 0:
            raise ValidationError("overhead and noise sigma must be >= 0")

    def factor(self, op):
        return self.factors.get(op, 1.0)


@dataclass(frozen=True)
class SyntheticModelFamily:
    """Op mixture plus a cost scale ``scale_us * (batch/16)**batch_exp * (pixel/32)**pixel_exp``."""

    family_id: str
    weights: dict
    scale_us: float = 1.0
    batch_exp: float = 1.0
    pixel_exp: float = 2.0
    jitter: float = 0.0

    def __post_init__(self):
        w = list(self.weights.values())
        if any(v < 0 for v in w) or not any(v > 0 for v in w):
            raise ValidationError("family weights must be >= 0 with one positive")

    def base_scale(self, batch, pixel):
        return (self.scale_us * (batch / 16.0) ** self.batch_exp
                * (pixel / 32.0) ** self.pixel_exp)


def gen_workload(family, batch, pixel, rng=None, jitter=True):
    """Reference-device op times in µs for one (batch, pixel) setting.

    Each op gets an independent log-uniform jitter in
    ``[exp(-family.jitter), exp(family.jitter)]`` unless ``jitter`` is off.
    """
    if batch < 1 or pixel < 1:
        raise ValidationError("batch and pixel must be >= 1")
    scale = family.base_scale(batch, pixel)
    out = {}
    for op in sorted(family.weights):
        w = family.weights[op]
        if w <= 0:
            continue
        j = 1.0
        if jitter and family.jitter > 0:
            j = math.exp(rng.uniform(-family.jitter, family.jitter))
        out[op] = w * scale * j
    return out


def ground_truth_latency(workload, device, rng=None):
    """Batch latency in ms of ``workload`` (reference µs) on ``device``."""
    clean = math.fsum(t * device.factor(op) for op, t in sorted(workload.items()))
    clean = clean / 1000.0 + device.overhead_ms
    if device.noise_sigma == 0:
        return max(clean, LATENCY_FLOOR_MS)
    for _ in range(2):
        y = clean * (1.0 + rng.normal(0.0, device.noise_sigma))
        if y > 0:
            return y
    return LATENCY_FLOOR_MS


def profile(workload, device, rng=None):
    """Op map as the device's profiler would report it.

    Run-to-run variation is modelled as one multiplicative draw shared by every
    op of the profiled run, independent of the draw used for the label.
    """
    run = 1.0
    if device.noise_sigma > 0:
        run = max(1.0 + rng.normal(0.0, device.noise_sigma), 0.0)
    return {op: workload[op] * device.factor(op) * run for op in sorted(workload)}


def default_fleet(noise_sigma=0.05, seed=0, instances=DEFAULT_INSTANCES):
    """Four devices with per-op factors spread over roughly 0.2x to 3x."""
    devices = []
    for k, name in enumerate(instances):
        rng = np.random.default_rng([seed, 7919, k])
        speed = _FLEET_SPEED.get(name, float(rng.uniform(0.3, 1.6)))
        factors = {
            op: float(np.clip(speed * math.exp(rng.uniform(-0.5, 0.5)), 0.2, 3.0))
            for op in OP_NAMES
        }
        devices.append(SyntheticDevice(
            device_id=name,
            factors=factors,
            overhead_ms=float(rng.uniform(0.5, 3.0)),
            noise_sigma=noise_sigma,
        ))
    return devices


def default_families(n_families=DEFAULT_MODEL_COUNT, seed=0, jitter=0.5, min_ops=12,
                     concentration=2.0):
    """Random CNN-like families drawing most of their ops from a shared pool.

    Real image classifiers overlap heavily in operator usage, so each family
    keeps at least ``min_ops`` of the pool with fairly even Dirichlet weights.
    """
    families = []
    for k in range(n_families):
        rng = np.random.default_rng([seed, 104729, k])
        n_ops = int(rng.integers(min_ops, len(OP_NAMES) + 1))
        ops = sorted(rng.choice(OP_NAMES, size=n_ops, replace=False).tolist())
        weights = rng.dirichlet(np.full(n_ops, concentration))
        families.append(SyntheticModelFamily(
            family_id=f"fam{k:02d}",
            weights={op: float(w) for op, w in zip(ops, weights)},
            scale_us=float(math.exp(rng.uniform(math.log(300), math.log(3000)))),
            batch_exp=float(rng.uniform(0.85, 1.0)),
            pixel_exp=float(rng.uniform(1.7, 2.0)),
            jitter=jitter,
        ))
    return families


def gen_corpus(n_families=DEFAULT_MODEL_COUNT, devices=None, batch_sizes=DEFAULT_BATCH_SIZES,
               pixel_sizes=DEFAULT_PIXEL_SIZES, seed=42, feasibility="synthetic-memory",
               families=None, noise_sigma=0.05):
    """Measurements for every feasible (family, device, batch, pixel) scenario.

    Deterministic in ``seed``: every scenario draws from its own seeded stream,
    so the corpus does not depend on iteration order.
    """
    if devices is None:
        devices = default_fleet(noise_sigma=noise_sigma, seed=seed)
    if len(devices) < 2:
        raise ValidationError("need at least 2 devices")
    if families is None:
        families = default_families(n_families, seed=seed)
    fam = {f.family_id: (k, f) for k, f in enumerate(families)}
    dev = {d.device_id: (k, d) for k, d in enumerate(devices)}
    grid = ScenarioGrid(
        instances=tuple(dev), models=tuple(fam), batch_sizes=tuple(batch_sizes),
        pixel_sizes=tuple(pixel_sizes), feasibility=feasibility,
    )
    workloads = {}
    out = []
    for s in enumerate_scenarios(grid):
        fk, family = fam[s.model_id]
        dk, device = dev[s.instance]
        wkey = (fk, s.batch_size, s.pixel_size)
        if wkey not in workloads:
            rng = np.random.default_rng([seed, *wkey])
            workloads[wkey] = gen_workload(family, s.batch_size, s.pixel_size, rng)
        w = workloads[wkey]
        ops = profile(w, device, np.random.default_rng([seed, *wkey, dk, 1]))
        y = ground_truth_latency(w, device, np.random.default_rng([seed, *wkey, dk, 2]))
        out.append(Measurement(scenario=s, op_map=ops, batch_latency_ms=y))
    return out
