//! Simultaneous-move solution concepts: best responses, Nash-Cournot
//! equilibria (atomic, Wardrop, or mixed populations), Wardrop flows per
//! commodity, and the social optimum under per-player access sets.
//!
//! All solvers share one damped Gauss-Seidel loop: players are updated
//! cyclically in index order, each replaced by a convex combination of
//! its current allocation and its exact best response. Affine instances
//! make each response a contraction in practice; damping guards against
//! oscillation when supports switch.

use crate::model::{FlowProfile, Instance, SolveError, SolveReport, SUPPORT_EPS};
use crate::waterfill::{self, fill_base, BaseMode, Fill};

/// Knobs for the fixed-point loop.
#[derive(Clone, Copy, Debug)]
pub struct IterationConfig {
    /// Step fraction toward the best response, in `(0, 1]`.
    pub damping: f64,
    /// Convergence threshold on the sup-norm flow change of a full pass.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for IterationConfig {
    fn default() -> Self {
        IterationConfig {
            damping: 0.5,
            tol: 1e-10,
            max_iters: 100_000,
        }
    }
}

impl IterationConfig {
    fn check(&self) -> Result<(), SolveError> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(SolveError::Precondition(format!(
                "damping {} outside (0, 1]",
                self.damping
            )));
        }
        if !(self.tol > 0.0) {
            return Err(SolveError::Precondition(format!(
                "tolerance {} must be positive",
                self.tol
            )));
        }
        if self.max_iters == 0 {
            return Err(SolveError::Precondition("max_iters is zero".into()));
        }
        Ok(())
    }
}

/// What each player optimizes during iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Objective {
    /// The player's declared behavior (atomic or wardrop).
    Declared,
    /// Latency equalization for everyone, regardless of behavior.
    AllWardrop,
    /// Marginal of total social cost, for the constrained optimum.
    SocialShare,
}

fn base_mode(inst: &Instance, i: usize, objective: Objective) -> BaseMode {
    match objective {
        Objective::Declared => match inst.player(i).behavior {
            crate::model::Behavior::Atomic => BaseMode::Atomic,
            crate::model::Behavior::Wardrop => BaseMode::Wardrop,
        },
        Objective::AllWardrop => BaseMode::Wardrop,
        Objective::SocialShare => BaseMode::Social,
    }
}

/// Player `i`'s exact best response to the rest of the profile: a fill of
/// its volume against the others' link loads, minimizing its own cost
/// (atomic) or equalizing latency (wardrop).
pub fn best_response(
    inst: &Instance,
    profile: &FlowProfile,
    i: usize,
) -> Result<Fill, SolveError> {
    respond(inst, profile, i, Objective::Declared)
}

fn respond(
    inst: &Instance,
    profile: &FlowProfile,
    i: usize,
    objective: Objective,
) -> Result<Fill, SolveError> {
    let base = profile.totals_without(i);
    let p = inst.player(i);
    fill_base(
        inst.links(),
        &base,
        p.flow,
        &p.links,
        base_mode(inst, i, objective),
    )
}

/// Each player's volume spread uniformly over its accessible links.
pub fn uniform_start(inst: &Instance) -> FlowProfile {
    let mut profile = FlowProfile::zeros(inst.n_players(), inst.n_links());
    for (i, p) in inst.players().iter().enumerate() {
        let share = p.flow / p.links.len() as f64;
        for &j in &p.links {
            profile.flow[i][j] = share;
        }
    }
    profile
}

/// Optimality-condition violation for player `i` at the current profile:
/// how far the marginals on its used links sit above the smallest
/// marginal it could reach, in level units. Zero exactly at a best
/// response, even when the response is non-unique.
fn kkt_residual(
    inst: &Instance,
    profile: &FlowProfile,
    i: usize,
    objective: Objective,
) -> (f64, f64) {
    let base = profile.totals_without(i);
    let p = inst.player(i);
    let mode = base_mode(inst, i, objective);
    let used_eps = SUPPORT_EPS * p.flow.max(1.0);
    let mut level = f64::INFINITY;
    let mut worst_used = f64::NEG_INFINITY;
    for &j in &p.links {
        let m = waterfill::base_marginal(inst.link(j), base[j], profile.flow[i][j], mode);
        level = level.min(m);
        if profile.flow[i][j] > used_eps {
            worst_used = worst_used.max(m);
        }
    }
    let residual = if worst_used.is_finite() {
        (worst_used - level).max(0.0)
    } else {
        0.0
    };
    (residual, level)
}

fn iterate(
    inst: &Instance,
    config: &IterationConfig,
    mut profile: FlowProfile,
    objective: Objective,
) -> Result<SolveReport, SolveError> {
    config.check()?;
    let m = inst.n_players();
    let mut last_residual = f64::INFINITY;
    for _pass in 0..config.max_iters {
        let mut sup_change = 0.0f64;
        for i in 0..m {
            let br = respond(inst, &profile, i, objective)?;
            let row = &mut profile.flow[i];
            for (x, &target) in row.iter_mut().zip(&br.allocation) {
                sup_change = sup_change.max((target - *x).abs());
                *x += config.damping * (target - *x);
            }
        }
        last_residual = sup_change;
        if sup_change <= config.tol {
            let mut levels = Vec::with_capacity(m);
            let mut residuals = Vec::with_capacity(m);
            for i in 0..m {
                let (residual, level) = kkt_residual(inst, &profile, i, objective);
                residuals.push(residual);
                levels.push(level);
            }
            return Ok(SolveReport::from_profile(inst, profile, levels, residuals));
        }
    }
    Err(SolveError::NonConvergence {
        iters: config.max_iters,
        residual: last_residual,
    })
}

/// Nash equilibrium of the declared behaviors: a profile where no atomic
/// player can lower its cost and every wardrop commodity has equalized
/// latencies, given the others.
pub fn nash_solve(inst: &Instance, config: &IterationConfig) -> Result<SolveReport, SolveError> {
    nash_solve_from(inst, config, uniform_start(inst))
}

/// [`nash_solve`] from an explicit starting profile, for uniqueness
/// probes.
pub fn nash_solve_from(
    inst: &Instance,
    config: &IterationConfig,
    start: FlowProfile,
) -> Result<SolveReport, SolveError> {
    iterate(inst, config, start, Objective::Declared)
}

/// Wardrop flow: every player treated as a continuum of infinitesimal
/// users over its own access set, declared behaviors ignored.
pub fn wardrop_solve(inst: &Instance) -> Result<SolveReport, SolveError> {
    if inst.shared_access() {
        // One commodity; split the equalized totals proportionally.
        let total = inst.total_flow();
        let all: Vec<usize> = (0..inst.n_links()).collect();
        let base = vec![0.0; inst.n_links()];
        let fill = fill_base(inst.links(), &base, total, &all, BaseMode::Wardrop)?;
        let m = inst.n_players();
        let mut profile = FlowProfile::zeros(m, inst.n_links());
        for (i, p) in inst.players().iter().enumerate() {
            let share = p.flow / total;
            for (x, &f) in profile.flow[i].iter_mut().zip(&fill.allocation) {
                *x = share * f;
            }
        }
        return Ok(SolveReport::from_profile(
            inst,
            profile,
            vec![fill.level; m],
            vec![fill.residual; m],
        ));
    }
    iterate(
        inst,
        &IterationConfig::default(),
        uniform_start(inst),
        Objective::AllWardrop,
    )
}

/// Minimum total cost subject to each player's volume staying within its
/// own access set.
///
/// With shared access this is the plain water-filling optimum. Otherwise
/// it runs exact block-coordinate descent: each player's block is refit
/// against the marginal of total cost at the current loads, which
/// converges on the convex objective, and the result satisfies the
/// per-player marginal-equalization conditions.
pub fn global_optimum(inst: &Instance) -> Result<SolveReport, SolveError> {
    if inst.shared_access() {
        return waterfill::social_optimum(inst);
    }
    iterate(
        inst,
        &IterationConfig::default(),
        uniform_start(inst),
        Objective::SocialShare,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        player_cost, validate, Behavior, RawInstance, RawLink, RawPlayer,
    };

    const A1_VOLUME: f64 = 630.0;

    fn shared_atomic(links: &[(f64, f64)], flows: &[f64]) -> Instance {
        validate(&RawInstance {
            links: links
                .iter()
                .map(|&(a, b)| RawLink { a, b, d: 1 })
                .collect(),
            players: flows
                .iter()
                .map(|&flow| RawPlayer {
                    flow,
                    behavior: Behavior::Atomic,
                    links: None,
                })
                .collect(),
        })
        .unwrap()
    }

    /// The two-origin network reduced to three links: each origin has a
    /// private link (intercepts 30 and 60) plus the shared link, and both
    /// route a volume of 630.
    fn asymmetric_network(first: Behavior, second: Behavior) -> Instance {
        validate(&RawInstance {
            links: vec![
                RawLink { a: 1.0, b: 30.0, d: 1 },
                RawLink { a: 1.0, b: 60.0, d: 1 },
                RawLink { a: 1.0, b: 0.0, d: 1 },
            ],
            players: vec![
                RawPlayer {
                    flow: A1_VOLUME,
                    behavior: first,
                    links: Some(vec![0, 2]),
                },
                RawPlayer {
                    flow: A1_VOLUME,
                    behavior: second,
                    links: Some(vec![1, 2]),
                },
            ],
        })
        .unwrap()
    }

    /// Raw-order link totals (private1, private2, shared).
    fn raw_totals(inst: &Instance, report: &SolveReport) -> Vec<f64> {
        let canonical = report.profile.link_totals();
        let mut raw = vec![0.0; canonical.len()];
        for (j, &t) in canonical.iter().enumerate() {
            raw[inst.raw_index(j)] = t;
        }
        raw
    }

    struct TestRng(u64);
    impl TestRng {
        fn next(&mut self) -> f64 {
            self.0 = self
                .0
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (self.0 >> 11) as f64 / (1u64 << 53) as f64
        }
    }

    fn random_shared(rng: &mut TestRng, max_links: usize) -> Instance {
        let n = 2 + (rng.next() * (max_links - 1) as f64) as usize;
        let links: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                if rng.next() < 0.1 {
                    (0.0, 0.3 + 2.0 * rng.next())
                } else {
                    (0.05 + 2.0 * rng.next(), 2.0 * rng.next())
                }
            })
            .collect();
        let total = 0.5 + 2.0 * rng.next();
        let alpha = 0.1 + 0.8 * rng.next();
        shared_atomic(&links, &[alpha * total, (1.0 - alpha) * total])
    }

    #[test]
    fn atomic_best_response_to_leader() {
        let inst = shared_atomic(&[(1.0, 0.0), (1.0, 1.0)], &[0.5, 0.5]);
        let profile = FlowProfile {
            flow: vec![vec![0.5, 0.0], vec![0.25, 0.25]],
        };
        let br = best_response(&inst, &profile, 1).unwrap();
        assert!((br.allocation[0] - 0.375).abs() < 1e-10);
        assert!((br.allocation[1] - 0.125).abs() < 1e-10);
    }

    #[test]
    fn wardrop_best_response_to_leader() {
        let mut raw = shared_atomic(&[(1.0, 0.0), (1.0, 1.0)], &[0.5, 0.5]).to_raw();
        raw.players[1].behavior = Behavior::Wardrop;
        let inst = validate(&raw).unwrap();
        let profile = FlowProfile {
            flow: vec![vec![0.375, 0.125], vec![0.25, 0.25]],
        };
        let br = best_response(&inst, &profile, 1).unwrap();
        assert!((br.allocation[0] - 0.5).abs() < 1e-10);
        assert!(br.allocation[1].abs() < 1e-10);
    }

    #[test]
    fn best_response_without_rivals_is_single_agent_optimum() {
        let inst = shared_atomic(&[(1.0, 0.0), (0.0, 1.2)], &[1.0, 1.0]);
        let empty = FlowProfile::zeros(2, 2);
        let br = best_response(&inst, &empty, 0).unwrap();
        assert!((br.allocation[0] - 0.6).abs() < 1e-12);
        assert!((br.allocation[1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn nash_on_flat_second_link() {
        // Links f and constant 2, volumes 1 and 2/3: both players put 2/3
        // on the sloped link.
        let inst = shared_atomic(&[(1.0, 0.0), (0.0, 2.0)], &[1.0, 2.0 / 3.0]);
        let report = nash_solve(&inst, &IterationConfig::default()).unwrap();
        assert!((report.profile.flow[0][0] - 2.0 / 3.0).abs() < 1e-7);
        assert!((report.profile.flow[1][0] - 2.0 / 3.0).abs() < 1e-7);
        assert!((report.social_cost - 22.0 / 9.0).abs() < 1e-7);
        assert!(report.residual < 1e-7);
    }

    #[test]
    fn homogeneous_nash_equals_equal_split_optimum() {
        let inst = shared_atomic(&[(1.5, 0.7), (1.5, 0.7)], &[1.0, 0.5]);
        let report = nash_solve(&inst, &IterationConfig::default()).unwrap();
        for i in 0..2 {
            let f = inst.player(i).flow;
            assert!((report.profile.flow[i][0] - f / 2.0).abs() < 1e-8);
            assert!((report.profile.flow[i][1] - f / 2.0).abs() < 1e-8);
        }
        let se = waterfill::social_optimum(&inst).unwrap();
        assert!((report.social_cost - se.social_cost).abs() < 1e-8);
    }

    #[test]
    fn asymmetric_network_social_optimum() {
        let inst = asymmetric_network(Behavior::Atomic, Behavior::Atomic);
        let report = global_optimum(&inst).unwrap();
        assert!((report.social_cost - 566_550.0).abs() < 0.5);
        let totals = raw_totals(&inst, &report);
        assert!((totals[0] - 420.0).abs() < 1e-3);
        assert!((totals[1] - 405.0).abs() < 1e-3);
        assert!((totals[2] - 435.0).abs() < 1e-3);
        // Rows respect access sets.
        assert!(report.profile.flow[0][inst
            .players()[1]
            .links
            .iter()
            .copied()
            .find(|j| !inst.players()[0].links.contains(j))
            .unwrap()]
        .abs()
            < 1e-12);
    }

    #[test]
    fn asymmetric_network_wardrop() {
        let inst = asymmetric_network(Behavior::Wardrop, Behavior::Wardrop);
        let report = wardrop_solve(&inst).unwrap();
        assert!((report.social_cost - 567_000.0).abs() < 0.5);
        let totals = raw_totals(&inst, &report);
        assert!((totals[0] - 420.0).abs() < 1e-3);
        assert!((totals[1] - 390.0).abs() < 1e-3);
        assert!((totals[2] - 450.0).abs() < 1e-3);
    }

    #[test]
    fn asymmetric_network_mixed_equilibrium() {
        let inst = asymmetric_network(Behavior::Atomic, Behavior::Wardrop);
        let report = nash_solve(&inst, &IterationConfig::default()).unwrap();
        assert!((report.social_cost - 572_400.0).abs() < 0.5);
        let totals = raw_totals(&inst, &report);
        assert!((totals[0] - 360.0).abs() < 1e-3);
        assert!((totals[1] - 420.0).abs() < 1e-3);
        assert!((totals[2] - 480.0).abs() < 1e-3);
    }

    #[test]
    fn wardrop_two_link_corner() {
        let inst = shared_atomic(&[(1.0, 0.0), (0.0, 1.2)], &[0.6, 0.4]);
        let report = wardrop_solve(&inst).unwrap();
        let totals = report.profile.link_totals();
        assert!((totals[0] - 1.0).abs() < 1e-9);
        assert!(totals[1].abs() < 1e-9);
        assert!((report.social_cost - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_link_takes_everything() {
        let inst = shared_atomic(&[(2.0, 1.0)], &[1.5]);
        for report in [
            wardrop_solve(&inst).unwrap(),
            nash_solve(&inst, &IterationConfig::default()).unwrap(),
            global_optimum(&inst).unwrap(),
        ] {
            assert!((report.profile.flow[0][0] - 1.5).abs() < 1e-9);
        }
    }

    #[test]
    fn shared_global_optimum_matches_single_commodity() {
        let inst = shared_atomic(&[(1.0, 0.0), (0.0, 1.2)], &[0.6, 0.4]);
        let a = global_optimum(&inst).unwrap();
        let b = waterfill::social_optimum(&inst).unwrap();
        assert_eq!(a.social_cost, b.social_cost);
        assert!((a.social_cost - 0.84).abs() < 1e-12);
    }

    #[test]
    fn optimum_never_exceeds_equilibrium_cost() {
        let mut rng = TestRng(0x5eed_0003);
        for _ in 0..25 {
            let inst = random_shared(&mut rng, 5);
            let se = global_optimum(&inst).unwrap();
            let ne = nash_solve(&inst, &IterationConfig::default()).unwrap();
            let w = wardrop_solve(&inst).unwrap();
            assert!(se.social_cost <= ne.social_cost + 1e-8 * ne.social_cost.max(1.0));
            assert!(se.social_cost <= w.social_cost + 1e-8 * w.social_cost.max(1.0));
        }
    }

    #[test]
    fn equilibrium_is_unique_across_starts() {
        let mut rng = TestRng(0x5eed_0004);
        for _ in 0..8 {
            let inst = random_shared(&mut rng, 4);
            let reference = nash_solve(&inst, &IterationConfig::default()).unwrap();
            for s in 0..4u64 {
                let mut start = uniform_start(&inst);
                // Deterministic biased starts: tilt each player toward one link.
                for (i, row) in start.flow.iter_mut().enumerate() {
                    let p = &inst.players()[i];
                    let pick = p.links[(s as usize + i) % p.links.len()];
                    let beta = 0.2 + 0.15 * s as f64;
                    for (j, x) in row.iter_mut().enumerate() {
                        *x *= 1.0 - beta;
                        if j == pick {
                            *x += beta * p.flow;
                        }
                    }
                }
                let other = nash_solve_from(&inst, &IterationConfig::default(), start).unwrap();
                for i in 0..2 {
                    for j in 0..inst.n_links() {
                        assert!(
                            (other.profile.flow[i][j] - reference.profile.flow[i][j]).abs() < 1e-6
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn sampled_deviations_never_beat_equilibrium() {
        let mut rng = TestRng(0x5eed_0005);
        for _ in 0..6 {
            let inst = random_shared(&mut rng, 4);
            let report = nash_solve(&inst, &IterationConfig::default()).unwrap();
            let n = inst.n_links();
            for i in 0..inst.n_players() {
                let own = player_cost(&inst, &report.profile, i);
                let volume = inst.player(i).flow;
                for _ in 0..200 {
                    let mut dev = report.profile.clone();
                    // Random reshuffle of the player's row.
                    let mut weights: Vec<f64> = (0..n).map(|_| rng.next()).collect();
                    let total: f64 = weights.iter().sum();
                    for w in &mut weights {
                        *w = *w / total * volume;
                    }
                    dev.flow[i] = weights;
                    let cost = player_cost(&inst, &dev, i);
                    assert!(cost >= own - 1e-7 * own.max(1.0));
                }
            }
        }
    }

    #[test]
    fn nonconvergence_is_reported() {
        let inst = shared_atomic(&[(1.0, 0.0), (1.0, 0.5)], &[1.0, 1.0]);
        let config = IterationConfig {
            damping: 0.5,
            tol: 1e-10,
            max_iters: 1,
        };
        assert!(matches!(
            nash_solve(&inst, &config),
            Err(SolveError::NonConvergence { .. })
        ));
    }
}
