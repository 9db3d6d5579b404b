//! Independent oracles shared by the integration tests and the acceptance binary.
#![allow(dead_code)]

use maddpgk::algorithms::{AlgoConfig, Algorithm, KPerKind, MultiAgent};
use maddpgk::env::{
    boundary_penalty, compute_adversary_reward, compute_spread_reward, compute_tag_reward, Action, Entity,
    EntityKind, EnvConfig, ParticleEnv, WorldState, ACTION_DIM,
};
use maddpgk::neighborhood::{compute_index_sets, IndexSet, Metric, MetricId};
use maddpgk::replay::{NeighborSets, ReplayBuffer, Transition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One named check with a human-readable detail string.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), ok, detail: detail.into() }
    }
}

// ---------------------------------------------------------------------------
// Finite differences

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-4;
/// Denominator floor for the relative error, so roundoff on vanishing
/// gradients is not amplified.
pub const FD_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FD_FLOOR)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FdReport {
    pub max_rel_err: f64,
    pub parameters: usize,
}

pub enum FdOutcome {
    Checked(FdReport),
    /// A perturbation crossed a ReLU kink; the caller draws a fresh net.
    Kink,
}

/// Central difference of `f` along one coordinate, with a kink test based on
/// the disagreement of the one-sided differences.
fn central_difference(f: &dyn Fn(f64) -> f64) -> Option<f64> {
    let f0 = f(0.0);
    let (fp, fm) = (f(FD_STEP), f(-FD_STEP));
    let right = (fp - f0) / FD_STEP;
    let left = (f0 - fm) / FD_STEP;
    let central = (fp - fm) / (2.0 * FD_STEP);
    // Smooth functions: |right − left| ≈ h·|f''|. A kink jumps the slope by O(1).
    if (right - left).abs() > 1e-3 * central.abs().max(1e-3) {
        return None;
    }
    Some(central)
}

fn random_transition(rng: &mut ChaCha8Rng, obs_dims: &[usize], k: usize) -> Transition {
    let n = obs_dims.len();
    let obs = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        obs_dims.iter().map(|&d| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
    };
    let sets = |rng: &mut ChaCha8Rng| {
        let pos: Vec<[f64; 2]> = (0..n).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        compute_index_sets(&pos, &vec![k; n], &Metric::Euclidean).unwrap()
    };
    Transition {
        observations: obs(rng),
        actions: (0..n).map(|_| std::array::from_fn(|_| rng.random())).collect(),
        rewards: (0..n).map(|_| rng.random_range(-2.0..0.5)).collect(),
        next_observations: obs(rng),
        neighbors: Some(NeighborSets { current: sets(rng), next: sets(rng) }),
    }
}

/// Draws a small random learner set and batch, then checks every critic-loss
/// and actor-objective parameter gradient of one agent against central
/// differences.
pub fn fd_check_random_net(seed: u64) -> FdOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=4);
    let obs_dims: Vec<usize> = (0..n).map(|_| rng.random_range(2..=5)).collect();
    let depth = rng.random_range(1..=2);
    let hidden: Vec<usize> = (0..depth).map(|_| rng.random_range(3..=6)).collect();
    let algorithm = [Algorithm::Ddpg, Algorithm::Maddpg, Algorithm::MaddpgK][rng.random_range(0..3)];
    let k = rng.random_range(1..n);
    let cfg = AlgoConfig {
        algorithm,
        k: KPerKind::uniform(k),
        hidden,
        actor_preact_reg: if rng.random::<bool>() { 1e-3 } else { 0.0 },
        ..AlgoConfig::default()
    };
    let kinds = vec![EntityKind::GoodAgent; n];
    let mut agents = MultiAgent::new(&cfg, &obs_dims, &kinds, &mut rng).unwrap();
    // Move targets away from the online nets so the TD target is nontrivial.
    for l in agents.learners_mut() {
        for v in l.target_critic.parameters_mut() {
            *v += rng.random_range(-0.1..0.1);
        }
    }
    let mut buffer = ReplayBuffer::new(64).unwrap();
    for _ in 0..16 {
        buffer.push(random_transition(&mut rng, &obs_dims, k));
    }
    let batch = buffer.sample(rng.random_range(3..=8), &mut rng).unwrap();
    let agent = rng.random_range(0..n);
    let inputs = agents.critic_inputs(agent, &batch).unwrap();

    let mut report = FdReport::default();
    let (_, critic_grads) = agents.critic_loss_and_gradients(agent, &batch, &inputs).unwrap();
    let (_, actor_grads) = agents.actor_objective_and_gradients(agent, &batch, &inputs).unwrap();

    for (is_actor, analytic) in [(false, critic_grads), (true, actor_grads)] {
        for (p, g) in analytic.values().enumerate() {
            let f = |delta: f64| {
                let mut probe = agents.clone();
                let l = &mut probe.learners_mut()[agent];
                let net = if is_actor { &mut l.actor } else { &mut l.critic };
                *net.parameters_mut().nth(p).unwrap() += delta;
                if is_actor {
                    // Gradients are of −objective.
                    -probe.actor_objective_and_gradients(agent, &batch, &inputs).unwrap().0
                } else {
                    probe.critic_loss_and_gradients(agent, &batch, &inputs).unwrap().0
                }
            };
            let Some(numeric) = central_difference(&f) else {
                return FdOutcome::Kink;
            };
            report.max_rel_err = report.max_rel_err.max(relative_error(g, numeric));
            report.parameters += 1;
        }
    }
    FdOutcome::Checked(report)
}

/// Checks `nets` random nets, resampling those whose perturbations hit a kink.
/// Returns the worst relative error, checked parameter count and resample count.
pub fn fd_suite(nets: usize) -> (f64, usize, usize) {
    let (mut worst, mut params, mut resampled) = (0.0f64, 0usize, 0usize);
    let mut seed = 0u64;
    let mut done = 0;
    while done < nets {
        match fd_check_random_net(seed) {
            FdOutcome::Checked(r) => {
                worst = worst.max(r.max_rel_err);
                params += r.parameters;
                done += 1;
            }
            FdOutcome::Kink => resampled += 1,
        }
        seed += 1;
    }
    (worst, params, resampled)
}

// ---------------------------------------------------------------------------
// Neighbour sets

/// Full sort of every other agent by (distance, index), first `k` kept.
pub fn brute_force_sets(positions: &[[f64; 2]], k: usize) -> Vec<Vec<u32>> {
    let n = positions.len();
    (0..n)
        .map(|i| {
            let mut others: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let dx = positions[i][0] - positions[j][0];
                    let dy = positions[i][1] - positions[j][1];
                    ((dx * dx + dy * dy).sqrt(), j)
                })
                .collect();
            others.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            others.iter().take(k.min(n - 1)).map(|&(_, j)| j as u32).collect()
        })
        .collect()
}

/// Random configuration: continuous positions, or a coarse grid that forces
/// duplicate positions and equal distances.
pub fn random_configuration(rng: &mut ChaCha8Rng) -> (Vec<[f64; 2]>, usize) {
    let n = rng.random_range(1..=50);
    let coarse = rng.random_bool(0.5);
    let positions = (0..n)
        .map(|_| {
            if coarse {
                [rng.random_range(0..4) as f64 * 0.5, rng.random_range(0..4) as f64 * 0.5]
            } else {
                [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]
            }
        })
        .collect();
    (positions, rng.random_range(0..=n))
}

pub fn has_duplicates(positions: &[[f64; 2]]) -> bool {
    positions.iter().enumerate().any(|(i, a)| positions[i + 1..].contains(a))
}

/// Compares the library against the oracle on `configs` random configurations.
/// Returns the mismatch count and how many configurations had duplicates.
pub fn neighbor_oracle_suite(configs: usize, seed: u64) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut mismatches, mut with_dupes) = (0, 0);
    for _ in 0..configs {
        let (pos, k) = random_configuration(&mut rng);
        with_dupes += has_duplicates(&pos) as usize;
        let got = compute_index_sets(&pos, &vec![k; pos.len()], &Metric::Euclidean).unwrap();
        let got: Vec<Vec<u32>> = got.iter().map(|s| s.as_slice().to_vec()).collect();
        mismatches += (got != brute_force_sets(&pos, k)) as usize;
    }
    (mismatches, with_dupes)
}

// ---------------------------------------------------------------------------
// Reduction: MADDPG-K with K = n − 1 against MADDPG

/// Collects random-action spread transitions, index sets in index order.
pub fn spread_buffer(n: usize, steps: usize, seed: u64) -> (ReplayBuffer, Vec<usize>) {
    let mut env = ParticleEnv::new(EnvConfig { seed, ..EnvConfig::spread(n) }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buffer = ReplayBuffer::new(steps).unwrap();
    let metric = Metric::IndexOrder;
    let sets = |env: &ParticleEnv| -> Vec<IndexSet> {
        compute_index_sets(&env.agent_positions(), &vec![n - 1; n], &metric).unwrap()
    };
    let mut obs = env.observations();
    let mut current = sets(&env);
    for _ in 0..steps {
        let actions: Vec<Action> = (0..n).map(|_| std::array::from_fn(|_| rng.random())).collect();
        let out = env.step(&actions).unwrap();
        let next = sets(&env);
        buffer.push(Transition {
            observations: obs,
            actions,
            rewards: out.rewards,
            next_observations: out.observations.clone(),
            neighbors: Some(NeighborSets { current, next: next.clone() }),
        });
        obs = out.observations;
        current = next;
        if out.done {
            obs = env.reset(rng.random());
            current = sets(&env);
        }
    }
    let dims = env.observation_dims();
    (buffer, dims)
}

/// Runs `updates` identical update rounds on both learners. Returns the max
/// absolute parameter difference over every network after each round.
pub fn reduction_trace(n: usize, updates: usize, seed: u64) -> Vec<f64> {
    let (buffer, dims) = spread_buffer(n, 400, seed);
    let kinds = vec![EntityKind::GoodAgent; n];
    let base = AlgoConfig { hidden: vec![32, 32], ..AlgoConfig::default() };
    let joint_cfg = AlgoConfig { algorithm: Algorithm::Maddpg, ..base.clone() };
    let local_cfg = AlgoConfig {
        algorithm: Algorithm::MaddpgK,
        k: KPerKind::uniform(n - 1),
        metric: MetricId::IndexOrder,
        ..base
    };
    let mut joint = MultiAgent::new(&joint_cfg, &dims, &kinds, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    let mut local = MultiAgent::new(&local_cfg, &dims, &kinds, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    let mut rng_j = ChaCha8Rng::seed_from_u64(seed + 1);
    let mut rng_l = ChaCha8Rng::seed_from_u64(seed + 1);
    let mut trace = vec![max_param_diff(&joint, &local)];
    for _ in 0..updates {
        joint.update_all(&buffer, 64, &mut rng_j).unwrap().unwrap();
        local.update_all(&buffer, 64, &mut rng_l).unwrap().unwrap();
        trace.push(max_param_diff(&joint, &local));
    }
    trace
}

pub fn max_param_diff(a: &MultiAgent, b: &MultiAgent) -> f64 {
    a.learners()
        .iter()
        .zip(b.learners())
        .flat_map(|(x, y)| {
            [(&x.actor, &y.actor), (&x.critic, &y.critic), (&x.target_actor, &y.target_actor), (&x.target_critic, &y.target_critic)]
        })
        .flat_map(|(x, y)| {
            assert_eq!(x.parameter_count(), y.parameter_count());
            x.parameters().zip(y.parameters()).map(|(p, q)| (p - q).abs()).collect::<Vec<_>>()
        })
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Physics and reward examples

pub fn body(kind: EntityKind, pos: [f64; 2], radius: f64) -> Entity {
    let movable = kind.is_agent();
    Entity {
        kind,
        pos,
        vel: [0.0; 2],
        radius,
        movable,
        collide: movable,
        sensitivity: if movable { 5.0 } else { 0.0 },
        max_speed: None,
    }
}

pub fn world(entities: Vec<Entity>, target: Option<usize>) -> WorldState {
    let n_agents = entities.iter().filter(|e| e.kind.is_agent()).count();
    WorldState { entities, n_agents, step: 0, target }
}

const NOOP: Action = [1.0, 0.0, 0.0, 0.0, 0.0];

/// Straight re-implementation of the update equations for one step.
pub fn oracle_step(entities: &mut [Entity], actions: &[Action], dt: f64, damping: f64, stiffness: f64, margin: f64) {
    let n = entities.len();
    let mut fx = vec![0.0; n];
    let mut fy = vec![0.0; n];
    for (i, a) in actions.iter().enumerate() {
        fx[i] = entities[i].sensitivity * (a[1] - a[2]);
        fy[i] = entities[i].sensitivity * (a[3] - a[4]);
    }
    for i in 0..n {
        for j in 0..n {
            if i == j || !entities[i].collide || !entities[j].collide || !entities[i].movable {
                continue;
            }
            let dx = entities[i].pos[0] - entities[j].pos[0];
            let dy = entities[i].pos[1] - entities[j].pos[1];
            let d = (dx * dx + dy * dy).sqrt();
            if d == 0.0 {
                continue;
            }
            let x = -(d - entities[i].radius - entities[j].radius) / margin;
            let softplus = if x > 30.0 { x } else { (1.0 + x.exp()).ln() };
            let mag = stiffness * softplus * margin;
            fx[i] += mag * dx / d;
            fy[i] += mag * dy / d;
        }
    }
    for (i, e) in entities.iter_mut().enumerate() {
        if !e.movable {
            continue;
        }
        e.vel[0] = e.vel[0] * (1.0 - damping) + fx[i] * dt;
        e.vel[1] = e.vel[1] * (1.0 - damping) + fy[i] * dt;
        if let Some(max) = e.max_speed {
            let s = (e.vel[0] * e.vel[0] + e.vel[1] * e.vel[1]).sqrt();
            if s > max {
                e.vel[0] *= max / s;
                e.vel[1] *= max / s;
            }
        }
        e.pos[0] += e.vel[0] * dt;
        e.pos[1] += e.vel[1] * dt;
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + b.abs())
}

/// Every environment example, evaluated through the public API.
pub fn physics_reward_examples() -> Vec<Check> {
    let mut checks = Vec::new();
    let mut push = |name: &str, ok: bool, detail: String| checks.push(Check::new(name, ok, detail));
    let a = EntityKind::GoodAgent;
    let adv = EntityKind::Adversary;
    let lm = EntityKind::Landmark;

    // Reset.
    let mut e1 = ParticleEnv::new(EnvConfig::spread(3)).unwrap();
    let mut e2 = ParticleEnv::new(EnvConfig::spread(3)).unwrap();
    e1.reset(11);
    e2.reset(11);
    push("reset deterministic", e1.state() == e2.state(), String::new());
    let kinds: Vec<_> = e1.state().entities.iter().map(|e| e.kind).collect();
    push(
        "spread N=3 population",
        kinds.iter().filter(|k| **k == a).count() == 3 && kinds.iter().filter(|k| **k == lm).count() == 3,
        format!("{kinds:?}"),
    );
    let adv_env = ParticleEnv::new(EnvConfig::adversary(3)).unwrap();
    let s = adv_env.state();
    push(
        "adversary N=3 population",
        adv_env.agent_kinds().iter().filter(|k| **k == adv).count() == 1
            && adv_env.agent_kinds().iter().filter(|k| **k == a).count() == 3
            && s.landmarks().len() == 3
            && s.target.is_some_and(|t| s.entities[t].kind == lm),
        String::new(),
    );

    // Step.
    let mut env = ParticleEnv::new(EnvConfig::spread(2)).unwrap();
    let mut st = world(
        vec![body(a, [0.2, 0.3], 0.05), body(a, [-0.5, 0.0], 0.05), body(lm, [0.9, 0.9], 0.15), body(lm, [-0.9, 0.9], 0.15)],
        None,
    );
    env.set_state(st.clone());
    env.step(&[NOOP, NOOP]).unwrap();
    push("zero action keeps position", env.state().entities[0].pos == [0.2, 0.3], format!("{:?}", env.state().entities[0].pos));
    st.entities[0].vel = [0.4, -0.8];
    env.set_state(st.clone());
    env.step(&[NOOP, NOOP]).unwrap();
    let v = env.state().entities[0].vel;
    push("damping 0.75·v", v == [0.75 * 0.4, 0.75 * -0.8], format!("{v:?}"));
    let mut bad = env.clone();
    push("action length contract", bad.step(&[NOOP]).is_err(), String::new());

    // Scripted rollout with contacts against the oracle.
    let mut env = ParticleEnv::new(EnvConfig::spread(3)).unwrap();
    env.reset(5);
    let cfg = env.config().clone();
    let mut oracle = env.state().entities.clone();
    oracle[1].pos = [oracle[0].pos[0] + 0.06, oracle[0].pos[1]];
    let mut start = env.state().clone();
    start.entities = oracle.clone();
    env.set_state(start);
    let mut worst = 0.0f64;
    let mut done_at = None;
    for t in 0..cfg.episode_length {
        let actions: Vec<Action> = (0..3)
            .map(|i| std::array::from_fn(|c| ((t * 7 + i * 3 + c * 5) % 11) as f64 / 10.0))
            .collect();
        let out = env.step(&actions).unwrap();
        oracle_step(&mut oracle, &actions, cfg.physics.dt, cfg.physics.damping, cfg.physics.contact_force, cfg.physics.contact_margin);
        for (x, y) in env.state().entities.iter().zip(&oracle) {
            for d in 0..2 {
                worst = worst.max((x.pos[d] - y.pos[d]).abs()).max((x.vel[d] - y.vel[d]).abs());
            }
        }
        if out.done && done_at.is_none() {
            done_at = Some(t + 1);
        }
    }
    push("scripted rollout matches oracle", worst < 1e-12, format!("max deviation {worst:.3e}"));
    push("episode ends at length", done_at == Some(cfg.episode_length), format!("{done_at:?}"));

    // Spread rewards.
    let on = world(vec![body(a, [0.0, 0.0], 0.05), body(a, [1.0, 0.0], 0.05), body(lm, [0.0, 0.0], 0.15), body(lm, [1.0, 0.0], 0.15)], None);
    push("spread agents on landmarks", compute_spread_reward(&on) == vec![0.0, 0.0], format!("{:?}", compute_spread_reward(&on)));
    let one = world(vec![body(a, [0.0, 0.0], 0.05), body(lm, [1.0, 0.0], 0.15), body(lm, [0.0, 1.0], 0.15)], None);
    push("spread shared term −2", compute_spread_reward(&one) == vec![-2.0], format!("{:?}", compute_spread_reward(&one)));
    let overlap = world(
        vec![
            body(a, [0.0, 0.0], 0.05),
            body(a, [0.05, 0.0], 0.05),
            body(a, [2.0, 2.0], 0.05),
            body(lm, [0.0, 0.0], 0.15),
            body(lm, [2.0, 2.0], 0.15),
            body(lm, [0.0, 1.0], 0.15),
        ],
        None,
    );
    let r = compute_spread_reward(&overlap);
    let t = -1.0;
    push("spread collision −1 each", r == vec![t - 1.0, t - 1.0, t], format!("{r:?}"));

    // Tag rewards.
    let tag = |good: [f64; 2], first_adv: [f64; 2]| {
        world(
            vec![
                body(adv, first_adv, 0.075),
                body(adv, [0.5, 0.5], 0.075),
                body(adv, [-0.5, 0.5], 0.075),
                body(a, good, 0.05),
            ],
            None,
        )
    };
    let r = compute_tag_reward(&tag([0.0, 0.0], [0.5, -0.5]));
    push("tag no contact at origin", r == vec![0.0; 4], format!("{r:?}"));
    let r = compute_tag_reward(&tag([0.0, 0.0], [0.1, 0.0]));
    push("tag event ±10", r == vec![10.0, 10.0, 10.0, -10.0], format!("{r:?}"));
    let r = compute_tag_reward(&tag([1.0, 0.0], [0.5, -0.5]));
    push("tag boundary at x=1", close(r[3], -1.0), format!("{r:?}"));
    let piecewise = [(0.5, 0.0), (0.95, 10.0 * 0.05), (1.0, 1.0), (1.2, (0.4f64).exp()), (3.0, 10.0)];
    let all = piecewise.iter().all(|&(z, want)| close(boundary_penalty(z), want));
    push("boundary piecewise values", all, format!("{:?}", piecewise.map(|(z, _)| boundary_penalty(z))));

    // Adversary rewards.
    let adv_world = |adv_pos: [f64; 2], goods: &[[f64; 2]]| {
        let mut es = vec![body(adv, adv_pos, 0.05)];
        es.extend(goods.iter().map(|&p| body(a, p, 0.05)));
        es.push(body(lm, [0.0, 0.0], 0.08));
        es.push(body(lm, [3.0, 3.0], 0.08));
        let target = es.len() - 2;
        world(es, Some(target))
    };
    let r = compute_adversary_reward(&adv_world([0.0, 0.0], &[[0.0, 0.0], [1.0, 1.0]]));
    push("adversary all on target", r.iter().all(|v| *v == 0.0), format!("{r:?}"));
    let r = compute_adversary_reward(&adv_world([2.0, 0.0], &[[0.0, 1.0], [0.0, -1.5]]));
    push("adversary distances 1 and 2", r == vec![-2.0, 1.0, 1.0], format!("{r:?}"));
    let r = compute_adversary_reward(&adv_world([0.0, 0.0], &[[2.0, 2.0]]));
    push("adversary on target, good far", r[1] < 0.0, format!("{r:?}"));

    // Agent positions.
    let tag_env = ParticleEnv::new(EnvConfig::tag(1, 3)).unwrap();
    push(
        "agent positions per env",
        e1.agent_positions().len() == 3 && tag_env.agent_positions().len() == 4 && tag_env.agent_positions() == tag_env.agent_positions(),
        String::new(),
    );
    let dims = ParticleEnv::new(EnvConfig::spread(3)).unwrap().observation_dims();
    push("action dim 5", ACTION_DIM == 5 && dims == vec![14; 3], format!("{dims:?}"));
    checks
}
