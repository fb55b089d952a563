"""Single-lane circular-road micro-simulation with one guided vehicle.

Default-driven vehicles follow the standard intelligent-driver car-following
law. The guided vehicle (index 0) applies a zero-order-hold command: a raw
acceleration, or a target speed tracked through a relaxation law. Rollouts
are deterministic per seed; the mean speed of all vehicles over the scored
horizon is the task performance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .trainers import EvaluatorResult, TrainingError


class CollisionError(RuntimeError):
    """Two vehicles overlapped; carries the follower index and the time."""

    def __init__(self, follower: int, leader: int, time: float):
        super().__init__(f"vehicle {follower} hit vehicle {leader} at t={time:.1f}s")
        self.pair = (follower, leader)
        self.time = time


@dataclass(frozen=True)
class IdmParams:
    a_max: float = 1.0          # m/s^2
    b_comfort: float = 1.5      # m/s^2
    v_desired: float = 30.0     # m/s
    s0: float = 2.0             # m
    time_headway: float = 1.0   # s
    exponent: float = 4.0

    def __post_init__(self):
        for name in ("a_max", "b_comfort", "v_desired", "s0", "time_headway", "exponent"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class GuidanceParams:
    mode: str = "speed"         # "speed" or "acceleration"
    hold: float = 1.0           # s, must be a positive multiple of dt
    alpha: float = 0.6          # 1/s, target-speed relaxation gain
    beta: float = 0.2           # 1/s, headway-rate coupling gain
    accel_cap: float = 2.5      # m/s^2
    n_speed_levels: int = 10

    def __post_init__(self):
        if self.mode not in ("speed", "acceleration"):
            raise ValueError(f"unknown guidance mode {self.mode!r}")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("guidance gains must be >= 0")
        if self.hold <= 0:
            raise ValueError("hold duration must be positive")


@dataclass(frozen=True)
class RingConfig:
    circumference: float = 250.0
    n_vehicles: int = 22
    n_guided: int = 1
    vehicle_length: float = 5.0
    speed_limit: float = 10.0
    dt: float = 0.1
    warmup: float = 500.0
    horizon: float = 1000.0
    idm: IdmParams = field(default_factory=IdmParams)
    guidance: GuidanceParams = field(default_factory=GuidanceParams)

    def __post_init__(self):
        if self.n_guided > self.n_vehicles:
            raise ValueError("n_guided exceeds n_vehicles")
        if self.circumference <= self.n_vehicles * self.vehicle_length:
            raise ValueError("vehicles do not fit on the ring")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        steps = self.guidance.hold / self.dt
        if abs(steps - round(steps)) > 1e-9 or round(steps) < 1:
            raise ValueError(
                f"hold {self.guidance.hold} is not a positive multiple of dt {self.dt}"
            )

    @property
    def hold_steps(self) -> int:
        return round(self.guidance.hold / self.dt)


@dataclass
class RingState:
    """Unwrapped positions (monotone per vehicle), speeds, and the held command."""

    positions: np.ndarray
    speeds: np.ndarray
    held_command: float | None = None
    t: float = 0.0


def ring_gaps(positions: np.ndarray, config: RingConfig) -> np.ndarray:
    """Bumper-to-bumper gap to each vehicle's leader (index i+1, wrapping)."""
    gaps = np.empty_like(positions)
    gaps[:-1] = positions[1:] - positions[:-1] - config.vehicle_length
    gaps[-1] = positions[0] + config.circumference - positions[-1] - config.vehicle_length
    return gaps


def equilibrium_speed(config: RingConfig) -> float:
    """Uniform-flow speed: zero net acceleration at even spacing.

    Solved by bisection; the independent anchor for baseline expectations.
    """
    p = config.idm
    s_gap = config.circumference / config.n_vehicles - config.vehicle_length
    if s_gap <= p.s0:
        raise ValueError("ring too dense: equilibrium gap below minimum spacing")

    def residual(v: float) -> float:
        return 1 - (v / p.v_desired) ** p.exponent - ((p.s0 + v * p.time_headway) / s_gap) ** 2

    lo, hi = 0.0, p.v_desired
    if residual(lo) <= 0:
        return 0.0
    for _ in range(200):
        mid = (lo + hi) / 2
        if residual(mid) > 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def idm_acceleration(speeds: np.ndarray, gaps: np.ndarray, lead_speeds: np.ndarray, p: IdmParams) -> np.ndarray:
    dv = speeds - lead_speeds
    s_star = p.s0 + speeds * p.time_headway + speeds * dv / (2 * math.sqrt(p.a_max * p.b_comfort))
    return p.a_max * (1 - (speeds / p.v_desired) ** p.exponent - (s_star / gaps) ** 2)


def step(state: RingState, config: RingConfig, command: float | None = None) -> RingState:
    """Advance one dt with the given held command on the guided vehicle.

    Semi-implicit integration: speeds update first, then positions. Speeds
    clamp to [0, v_desired] for default vehicles and [0, speed_limit] for a
    commanded guided vehicle. A non-positive gap after the move raises
    CollisionError.
    """
    gaps = ring_gaps(state.positions, config)
    lead_speeds = np.roll(state.speeds, -1)
    accel = idm_acceleration(state.speeds, gaps, lead_speeds, config.idm)
    caps = np.full(config.n_vehicles, config.idm.v_desired)
    if command is not None and config.n_guided >= 1:
        g = config.guidance
        if g.mode == "acceleration":
            accel[0] = min(max(command, -g.accel_cap), g.accel_cap)
        else:
            raw = g.alpha * (command - state.speeds[0]) + g.beta * (lead_speeds[0] - state.speeds[0])
            accel[0] = min(max(raw, -g.accel_cap), g.accel_cap)
        caps[0] = config.speed_limit
    new_speeds = np.clip(state.speeds + accel * config.dt, 0.0, caps)
    new_positions = state.positions + new_speeds * config.dt
    new_t = state.t + config.dt
    new_gaps = ring_gaps(new_positions, config)
    if np.any(new_gaps <= 0):
        follower = int(np.argmin(new_gaps))
        raise CollisionError(follower, (follower + 1) % config.n_vehicles, new_t)
    return RingState(positions=new_positions, speeds=new_speeds, held_command=command, t=new_t)


def initial_state(config: RingConfig, seed: int) -> RingState:
    """Seeded jitter around uniform spacing at the equilibrium speed.

    Speeds +-10% around equilibrium, positions +-20% of the mean spacing:
    enough to excite stop-and-go in the unguided baseline.
    """
    rng = np.random.default_rng(seed)
    n = config.n_vehicles
    mean_spacing = config.circumference / n
    positions = mean_spacing * np.arange(n) + rng.uniform(-0.2, 0.2, n) * mean_spacing
    v_e = equilibrium_speed(config)
    speeds = v_e * (1 + rng.uniform(-0.1, 0.1, n))
    state = RingState(positions=positions, speeds=speeds)
    if np.any(ring_gaps(positions, config) <= 0):
        raise ValueError("initial jitter produced overlapping vehicles")
    return state


@dataclass
class RolloutResult:
    mean_speed: float
    speed_std: float            # time-mean of the across-vehicle speed std, scored window
    commands: list[float]       # one entry per hold boundary, simulation order
    n_scored_steps: int
    speeds_log: np.ndarray | None = None     # (steps, n) when recorded
    positions_log: np.ndarray | None = None  # (steps, n), wrapped, when recorded
    commands_log: np.ndarray | None = None   # (steps,) applied command, nan if unguided


def simulate(config: RingConfig, policy, seed: int, record: bool = False) -> RolloutResult:
    """Full warmup-plus-horizon rollout; guidance is active from t=0.

    The policy is called at every hold boundary with (ego speed, leader
    speed, headway) observed at that instant; its command is held until the
    next boundary.
    """
    state = initial_state(config, seed)
    n_warm = round(config.warmup / config.dt)
    n_score = round(config.horizon / config.dt)
    total = n_warm + n_score
    guided = policy is not None and config.n_guided >= 1
    hold_steps = config.hold_steps
    command: float | None = None
    commands: list[float] = []
    speed_sum = 0.0
    std_sum = 0.0
    speeds_log = np.empty((total, config.n_vehicles)) if record else None
    positions_log = np.empty((total, config.n_vehicles)) if record else None
    commands_log = np.full(total, np.nan) if record else None
    for i in range(total):
        if guided and i % hold_steps == 0:
            gap0 = ring_gaps(state.positions, config)[0]
            command = float(policy((state.speeds[0], state.speeds[1], gap0)))
            commands.append(command)
        state = step(state, config, command if guided else None)
        if i >= n_warm:
            speed_sum += float(state.speeds.mean())
            std_sum += float(state.speeds.std())
        if record:
            speeds_log[i] = state.speeds
            positions_log[i] = state.positions % config.circumference
            if guided:
                commands_log[i] = command
    return RolloutResult(
        mean_speed=speed_sum / n_score,
        speed_std=std_sum / n_score,
        commands=commands,
        n_scored_steps=n_score,
        speeds_log=speeds_log,
        positions_log=positions_log,
        commands_log=commands_log,
    )


def rollout_measure(config: RingConfig, policy, seed: int) -> float:
    """Mean speed of all vehicles over the scored horizon."""
    return simulate(config, policy, seed).mean_speed


class ConstantPolicy:
    """Holds one fixed command forever."""

    def __init__(self, value: float):
        self.value = value

    def __call__(self, obs) -> float:
        return self.value


class ScriptedPolicy:
    """Replays a recorded command sequence, one entry per boundary."""

    def __init__(self, commands):
        self.commands = list(commands)
        self.cursor = 0

    def __call__(self, obs) -> float:
        if self.cursor >= len(self.commands):
            raise IndexError("scripted command sequence exhausted")
        value = self.commands[self.cursor]
        self.cursor += 1
        return value


class LinearSpeedPolicy:
    """Three-parameter commanded-speed family, discretized to the action set.

    command = clamp(w0 + w1*(leader speed - ego speed)
                       + w2*(headway - s0 - T*ego speed), 0, speed_limit)
    snapped to n_speed_levels evenly spaced levels. At uniform equilibrium
    flow both feedback terms vanish, so w0 is the cruise target.
    """

    def __init__(self, w0: float, w1: float, w2: float, config: RingConfig):
        self.w = (w0, w1, w2)
        self.limit = config.speed_limit
        self.levels = config.guidance.n_speed_levels
        self.s0 = config.idm.s0
        self.headway_time = config.idm.time_headway

    def __call__(self, obs) -> float:
        ego, lead, headway = obs
        raw = (
            self.w[0]
            + self.w[1] * (lead - ego)
            + self.w[2] * (headway - self.s0 - self.headway_time * ego)
        )
        raw = min(max(raw, 0.0), self.limit)
        idx = round(raw / self.limit * (self.levels - 1))
        return idx / (self.levels - 1) * self.limit


# Deterministic first-phase lattice for the policy search: cruise targets
# crossed with none/mild/strong feedback gains.
_LATTICE_W0 = (2.0, 4.0, 6.0, 8.0)
_LATTICE_FEEDBACK = ((0.0, 0.0), (0.6, 0.1), (1.2, 0.2))
_PARAM_LO = np.array([0.0, 0.0, 0.0])
_PARAM_HI = np.array([10.0, 2.0, 1.0])
_REFINE_SCALE = np.array([1.2, 0.4, 0.15])


def train_and_measure(
    config: RingConfig, delta: float, search_budget: int = 24, seed: int = 0
) -> EvaluatorResult:
    """Black-box policy search at one hold duration.

    Seeded uniform lattice over the three policy weights, then local
    refinement around the incumbent. Every candidate is scored on the same
    seeded rollout (paired comparison); candidates that collide score -inf.
    Returns the best achieved mean speed.
    """
    if search_budget < 1:
        raise ValueError(f"search budget must be >= 1, got {search_budget}")
    steps = delta / config.dt
    if abs(steps - round(steps)) > 1e-9 or round(steps) < 1:
        raise ValueError(f"delta {delta} is not a positive multiple of dt {config.dt}")
    cfg = replace(config, guidance=replace(config.guidance, hold=delta, mode="speed"))
    lattice = [
        np.array([w0, w1, w2])
        for w0 in _LATTICE_W0
        for (w1, w2) in _LATTICE_FEEDBACK
    ]
    rng = np.random.default_rng(np.random.SeedSequence([seed, round(delta / config.dt)]))
    candidates: list[np.ndarray] = lattice[:search_budget]
    scores: list[float] = []
    collisions = 0
    best_i = -1
    for i in range(search_budget):
        if i >= len(candidates):
            # Local refinement: Gaussian proposals around the incumbent,
            # shrinking as the budget is spent.
            base = candidates[best_i]
            shrink = 0.85 ** (i - len(lattice))
            proposal = base + rng.normal(size=3) * _REFINE_SCALE * shrink
            candidates.append(np.clip(proposal, _PARAM_LO, _PARAM_HI))
        w = candidates[i]
        policy = LinearSpeedPolicy(w[0], w[1], w[2], cfg)
        try:
            score = rollout_measure(cfg, policy, seed)
        except CollisionError:
            score = -np.inf
            collisions += 1
        scores.append(score)
        if best_i < 0 or score > scores[best_i]:
            best_i = i
    if not np.isfinite(scores[best_i]):
        raise TrainingError(
            f"all {search_budget} candidate rollouts collided at delta={delta:.6g} "
            f"(seed={seed})"
        )
    w = candidates[best_i]
    return EvaluatorResult(
        delta=delta,
        achieved=float(scores[best_i]),
        policy_id=f"ring[w0={w[0]:.4g},w1={w[1]:.4g},w2={w[2]:.4g}]@{delta:.6g}s",
        cost=float(search_budget),
    )


def trajectory_csv_text(result: RolloutResult, config: RingConfig) -> str:
    """Long-format t,vehicle,pos,speed,command rows from a recorded rollout."""
    if result.speeds_log is None:
        raise ValueError("rollout was not recorded")
    lines = ["t,vehicle,pos,speed,command"]
    n_steps, n = result.speeds_log.shape
    for i in range(n_steps):
        t = (i + 1) * config.dt
        cmd = result.commands_log[i]
        cmd_txt = "" if np.isnan(cmd) else f"{cmd:.6g}"
        for v in range(n):
            lines.append(
                f"{t:.1f},{v},{result.positions_log[i, v]:.6g},"
                f"{result.speeds_log[i, v]:.6g},{cmd_txt}"
            )
    return "\n".join(lines) + "\n"


_CONFIG_KEYS = {
    "circumference": ("circumference", float),
    "total_number_of_vehicles": ("n_vehicles", int),
    "total_vehicles": ("n_vehicles", int),
    "n_vehicles": ("n_vehicles", int),
    "number_of_controlled_vehicles": ("n_guided", int),
    "controlled_vehicles": ("n_guided", int),
    "n_guided": ("n_guided", int),
    "vehicle_length": ("vehicle_length", float),
    "speed_limit": ("speed_limit", float),
    "simulation_step": ("dt", float),
    "dt": ("dt", float),
    "warmup_steps": ("warmup", float),
    "warmup": ("warmup", float),
    "timestep_horizon": ("horizon", float),
    "horizon": ("horizon", float),
}
_IDM_KEYS = {
    "maximum_acceleration": ("a_max", float),
    "max_acceleration": ("a_max", float),
    "comfortable_deceleration": ("b_comfort", float),
    "desired_velocity": ("v_desired", float),
    "minimum_spacing": ("s0", float),
    "desired_time_headway": ("time_headway", float),
    "exponent": ("exponent", float),
}
_GUIDANCE_KEYS = {
    "guidance_mode": ("mode", str),
    "mode": ("mode", str),
    "hold": ("hold", float),
    "alpha": ("alpha", float),
    "beta": ("beta", float),
    "acceleration_capacity": ("accel_cap", float),
    "accel_cap": ("accel_cap", float),
    "number_of_discrete_action_space": ("n_speed_levels", int),
    "n_speed_levels": ("n_speed_levels", int),
}


def load_ring_config(path, base: RingConfig | None = None) -> RingConfig:
    """Plain key=value overrides (one per line, # comments) onto a base config."""
    base = base or RingConfig()
    cfg: dict = {}
    idm: dict = {}
    guidance: dict = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = (part.strip() for part in text.split("=", 1))
            key = key.lower().replace(" ", "_")
            if key in _CONFIG_KEYS:
                name, cast = _CONFIG_KEYS[key]
                cfg[name] = cast(value)
            elif key in _IDM_KEYS:
                name, cast = _IDM_KEYS[key]
                idm[name] = cast(value)
            elif key in _GUIDANCE_KEYS:
                name, cast = _GUIDANCE_KEYS[key]
                guidance[name] = cast(value)
            else:
                raise ValueError(f"{path}:{lineno}: unknown parameter {key!r}")
    return replace(
        base,
        idm=replace(base.idm, **idm),
        guidance=replace(base.guidance, **guidance),
        **cfg,
    )
