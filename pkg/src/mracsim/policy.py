"""Outer-loop policies: analytic LQR set-point regulation and loadable MLPs.

Policies map an augmented observation (theta, theta_dot, theta_set) to a
reference torque.  The LQR policy is designed on the reference model with
the benchmark cost weights; trained feed-forward networks stand in for
externally produced controllers and are loaded from a JSON weights file
(schema documented at mlp_load / the README).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NumericError, PolicyParseError, PolicySchemaError
from .linalg import solve_care
from .plant import LINEAR, NONLINEAR, CompanionSystem

#: Benchmark LQR design weights (state costs q1, q2 and control cost r).
LQR_WEIGHTS = (1.0, 0.1)
LQR_CONTROL_WEIGHT = 0.001

OBSERVATION_COMPONENTS = ("theta", "theta_dot", "theta_set", "theta_error")
DEFAULT_OBSERVATION_ORDER = ("theta", "theta_dot", "theta_set")


@dataclass(frozen=True)
class Observation:
    """Augmented observation: pendulum angle, rate, and the active set-point."""

    theta: float
    theta_dot: float
    theta_set: float


def lqr_feedforward(theta_set: float, reference: CompanionSystem, mode: str) -> float:
    """Steady-state torque holding [theta_set, 0] on the reference model.

    Linear mode: -alpha_r1 * theta_set / b_r (= -m g l theta_set);
    nonlinear mode: same with sin(theta_set).
    """
    level = math.sin(theta_set) if mode == NONLINEAR else theta_set
    return float(-reference.alpha[0] * level / reference.input_gain)


@dataclass(frozen=True)
class LqrPolicy:
    """Set-point LQR: u = -K_r (x - [theta_set, 0]) + feedforward(theta_set).

    ``literal_feedback`` switches to the unshifted form -K_r x + feedforward,
    which leaves a steady-state offset and is kept only for comparison runs.
    """

    K_r: np.ndarray
    reference: CompanionSystem
    feedforward_mode: str
    literal_feedback: bool = False

    def act(self, obs: Observation) -> float:
        return lqr_act(self, obs)


def design_lqr(
    reference: CompanionSystem,
    weights: tuple[float, float] = LQR_WEIGHTS,
    control_weight: float = LQR_CONTROL_WEIGHT,
    literal_feedback: bool = False,
) -> LqrPolicy:
    """Solve the Riccati design on the reference model's linear matrices."""
    if reference.dim != 2:
        raise ValueError("the set-point LQR design is specific to the 2-state pendulum")
    A = np.array([[0.0, 1.0], reference.alpha.tolist()])
    B = np.array([0.0, reference.input_gain])
    Q = np.diag(weights)
    K = solve_care(A, B, Q, control_weight).K
    return LqrPolicy(K_r=K, reference=reference, feedforward_mode=reference.form, literal_feedback=literal_feedback)


def lqr_act(policy: LqrPolicy, obs: Observation) -> float:
    """Evaluate the LQR policy on one observation."""
    x = np.array([obs.theta, obs.theta_dot])
    u0 = lqr_feedforward(obs.theta_set, policy.reference, policy.feedforward_mode)
    if policy.literal_feedback:
        return float(-(policy.K_r @ x) + u0)
    x_set = np.array([obs.theta_set, 0.0])
    return float(-(policy.K_r @ (x - x_set)) + u0)


_ACTIVATIONS = {"tanh": np.tanh, "relu": lambda z: np.maximum(z, 0.0)}


@dataclass(frozen=True)
class MlpPolicy:
    """Feed-forward network policy loaded from a weights file.

    Hidden layers use the recorded activations; the output layer is affine
    unless ``output_scale`` is set, in which case the output is
    output_scale * tanh(z) (a saturating torque bound).
    ``observation_order`` names the input components, drawn from
    theta | theta_dot | theta_set | theta_error (= theta - theta_set).
    """

    layer_sizes: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    activations: tuple[str, ...]
    output_scale: float | None = None
    observation_order: tuple[str, ...] = DEFAULT_OBSERVATION_ORDER

    def act(self, obs: Observation) -> float:
        return mlp_act(self, obs)


def _validate_mlp(fields: dict) -> MlpPolicy:
    sizes = fields.get("layer_sizes")
    if not isinstance(sizes, (list, tuple)) or len(sizes) < 2 or not all(isinstance(s, int) and s >= 1 for s in sizes):
        raise PolicySchemaError(f"layer_sizes must be a list of >= 2 positive integers, got {sizes!r}")
    order = tuple(fields.get("observation_order", DEFAULT_OBSERVATION_ORDER))
    for name in order:
        if name not in OBSERVATION_COMPONENTS:
            raise PolicySchemaError(f"unknown observation component {name!r}; valid: {OBSERVATION_COMPONENTS}")
    if sizes[0] != len(order):
        raise PolicySchemaError(f"input size {sizes[0]} does not match observation_order length {len(order)}")
    if sizes[-1] != 1:
        raise PolicySchemaError(f"output size must be 1, got {sizes[-1]}")

    n_layers = len(sizes) - 1
    raw_w = fields.get("weights")
    raw_b = fields.get("biases")
    if not isinstance(raw_w, list) or len(raw_w) != n_layers:
        raise PolicySchemaError(f"expected {n_layers} weight matrices, got {len(raw_w) if isinstance(raw_w, list) else raw_w!r}")
    if not isinstance(raw_b, list) or len(raw_b) != n_layers:
        raise PolicySchemaError(f"expected {n_layers} bias vectors")
    weights, biases = [], []
    for i, (w, b) in enumerate(zip(raw_w, raw_b)):
        W = np.asarray(w, dtype=float)
        bv = np.asarray(b, dtype=float)
        if W.shape != (sizes[i + 1], sizes[i]):
            raise PolicySchemaError(f"weights[{i}] has shape {W.shape}, expected {(sizes[i + 1], sizes[i])}")
        if bv.shape != (sizes[i + 1],):
            raise PolicySchemaError(f"biases[{i}] has shape {bv.shape}, expected {(sizes[i + 1],)}")
        if not (np.isfinite(W).all() and np.isfinite(bv).all()):
            raise PolicySchemaError(f"layer {i} contains non-finite entries")
        weights.append(W)
        biases.append(bv)

    acts = tuple(fields.get("activations", ()))
    if len(acts) != max(n_layers - 1, 0):
        raise PolicySchemaError(f"expected {max(n_layers - 1, 0)} activations (one per hidden layer), got {len(acts)}")
    for a in acts:
        if a not in _ACTIVATIONS:
            raise PolicySchemaError(f"unknown activation {a!r}; valid: {sorted(_ACTIVATIONS)}")

    scale = fields.get("output_scale")
    if scale is not None:
        scale = float(scale)
        if not (scale > 0.0 and math.isfinite(scale)):
            raise PolicySchemaError(f"output_scale must be positive, got {scale}")

    return MlpPolicy(
        layer_sizes=tuple(sizes),
        weights=tuple(weights),
        biases=tuple(biases),
        activations=acts,
        output_scale=scale,
        observation_order=order,
    )


def mlp_load(source) -> MlpPolicy:
    """Load a policy from a JSON weights file (path, bytes, or str payload).

    The document must contain ``layer_sizes``, ``weights`` (row-major per
    layer), ``biases``, ``activations`` (one per hidden layer), and may
    carry ``output_scale`` and ``observation_order``.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    else:
        try:
            is_file = "\n" not in str(source) and Path(source).exists()
        except OSError:
            is_file = False
        text = Path(source).read_text(encoding="utf-8") if is_file else str(source)
    try:
        fields = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PolicyParseError(f"policy file is not valid JSON at offset {exc.pos}: {exc.msg}") from exc
    if not isinstance(fields, dict):
        raise PolicySchemaError("policy file must contain a JSON object")
    return _validate_mlp(fields)


def mlp_save(policy: MlpPolicy, path) -> None:
    """Write the policy in the format mlp_load reads back bit-identically."""
    doc = {
        "layer_sizes": list(policy.layer_sizes),
        "activations": list(policy.activations),
        "weights": [w.tolist() for w in policy.weights],
        "biases": [b.tolist() for b in policy.biases],
        "output_scale": policy.output_scale,
        "observation_order": list(policy.observation_order),
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def _observation_vector(policy: MlpPolicy, obs: Observation) -> np.ndarray:
    values = {
        "theta": obs.theta,
        "theta_dot": obs.theta_dot,
        "theta_set": obs.theta_set,
        "theta_error": obs.theta - obs.theta_set,
    }
    return np.array([values[name] for name in policy.observation_order])


def mlp_act(policy: MlpPolicy, obs: Observation) -> float:
    """Deterministic forward pass; identical inputs give identical outputs."""
    a = _observation_vector(policy, obs)
    n_layers = len(policy.weights)
    for i in range(n_layers):
        a = policy.weights[i] @ a + policy.biases[i]
        if i < n_layers - 1:
            a = _ACTIVATIONS[policy.activations[i]](a)
    out = a[0]
    if policy.output_scale is not None:
        out = policy.output_scale * math.tanh(out)
    if not math.isfinite(out):
        raise NumericError(f"policy output non-finite for observation {obs}")
    return float(out)
