//! Guarantee machinery: constructive strategies whose costs are
//! provably capped, the diverse-latency predicate, and closed-form
//! bounds on leadership prices, plus a verifier that replays all of
//! them on a concrete instance and reports violations as data.
//!
//! Bounds are stated for the normalized game: total volume 1 and
//! smallest intercept 0. [`verify_bounds`] renormalizes internally;
//! [`bound_set`] expects unit total volume and handles the intercept
//! shift itself.

use crate::equilibria::best_response;
use crate::model::{
    player_cost, FlowProfile, Instance, RawInstance, SolveError, validate,
};
use crate::rng::Lcg;
use crate::stackelberg::{price_report, ssl_solve, SslConfig, SslError};
use crate::waterfill::{fill, social_optimum, FillMode, MarginalSpec};

/// Flow treated as carrying optimum mass when above this share of the
/// total volume.
const USED_EPS: f64 = 1e-12;

/// Latency factors splitting "cheap" from "expensive" links, and the
/// flow quarter each side must hold, for the diverse-latency predicate.
const CHEAP_FACTOR: f64 = 1.16;
const DEAR_FACTOR: f64 = 1.84;

/// Closed-form caps for one instance, on the normalized scale.
#[derive(Clone, Debug)]
pub struct BoundSet {
    /// Smallest latency among links carrying optimum flow.
    pub l_min: f64,
    /// Optimum social cost divided by `l_min`.
    pub gamma: f64,
    /// First player's share of the unit total volume.
    pub alpha: f64,
    /// Caps on the first player's cost when it leads.
    pub p1_bounds: Vec<(&'static str, f64)>,
    /// Caps on the second player's cost as a follower.
    pub p2_bounds: Vec<(&'static str, f64)>,
    /// Caps on the worst-case leadership price vs the optimum.
    pub price_bounds: Vec<(&'static str, f64)>,
    /// Whether the optimum spreads flow across diverse latencies.
    pub dlp: bool,
}

/// Diverse-latency predicate with the masses that decided it.
#[derive(Clone, Copy, Debug)]
pub struct DlpReport {
    pub dlp: bool,
    /// Fraction of optimum flow at latency `<= 1.16 * l_min`.
    pub mass_low: f64,
    /// Fraction of optimum flow at latency `>= 1.84 * l_min`.
    pub mass_high: f64,
    pub l_min: f64,
}

/// A measured quantity that exceeded its cap.
#[derive(Clone, Debug)]
pub struct Violation {
    pub check: String,
    pub measured: f64,
    pub limit: f64,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: measured {} exceeds {}",
            self.check, self.measured, self.limit
        )
    }
}

fn require_shared_affine(inst: &Instance) -> Result<(), SolveError> {
    if !inst.shared_access() {
        return Err(SolveError::Precondition(
            "bounds need every player to reach every link".into(),
        ));
    }
    if !inst.is_affine() {
        return Err(SolveError::Precondition(
            "bounds are stated for affine latencies".into(),
        ));
    }
    Ok(())
}

/// Rescale to total volume 1 and shift intercepts so the smallest is 0.
/// Slopes absorb the volume scale (`a -> a * F`), which preserves every
/// flow split and divides costs uniformly, so price ratios survive; the
/// intercept shift is the part that can only raise them.
pub fn normalized(inst: &Instance) -> Result<Instance, SolveError> {
    let total = inst.total_flow();
    let shift = inst.min_intercept();
    let cheapest_constant = inst
        .links()
        .iter()
        .any(|l| l.is_constant() && l.b == shift);
    if shift > 0.0 && cheapest_constant {
        return Err(SolveError::Precondition(
            "cannot shift intercepts: the cheapest link is constant and would become free"
                .into(),
        ));
    }
    let mut raw: RawInstance = inst.to_raw();
    for link in &mut raw.links {
        link.a *= total;
        link.b -= shift;
    }
    for player in &mut raw.players {
        player.flow /= total;
    }
    validate(&raw).map_err(|e| SolveError::Precondition(e.to_string()))
}

/// Smallest latency over links carrying optimum flow, with the totals
/// and cost it was measured on.
fn optimum_stats(inst: &Instance) -> Result<(Vec<f64>, f64, f64), SolveError> {
    let se = social_optimum(inst)?;
    let totals = se.profile.link_totals();
    let scale = inst.total_flow().max(1.0);
    let l_min = totals
        .iter()
        .enumerate()
        .filter(|(_, &t)| t > USED_EPS * scale)
        .map(|(j, &t)| inst.link(j).latency(t))
        .fold(f64::INFINITY, f64::min);
    Ok((totals, se.social_cost, l_min))
}

/// Leader allocation that steers the combined flow back to the social
/// optimum: links the follower will skip (constants at the cap level,
/// plus sloped links the leader can fully cover) are filled to their
/// optimum share, and the remaining volume is spread over the other
/// sloped links so each sees the same latency increase
/// (`a_j * z_j = c`). The follower's best response then tops every link
/// up to its optimum share exactly.
///
/// Constant links never join the equal-increase split: leader flow
/// cannot raise their latency, so they are either covered up front or,
/// when the leader's volume is too small to cover them, left with an
/// equal per-link remainder for the follower.
pub fn strategy1(inst: &Instance, leader: usize) -> Result<Vec<f64>, SolveError> {
    require_shared_affine(inst)?;
    if leader >= inst.n_players() {
        return Err(SolveError::Precondition(format!(
            "leader index {leader} out of range"
        )));
    }
    let (fse, _, _) = optimum_stats(inst)?;
    let volume = inst.player(leader).flow;
    let scale = inst.total_flow().max(1.0);
    let used = |j: usize| fse[j] > USED_EPS * scale;
    let consts: Vec<usize> = (0..inst.n_links())
        .filter(|&j| inst.link(j).is_constant() && used(j))
        .collect();
    let sloped: Vec<usize> = (0..inst.n_links())
        .filter(|&j| !inst.link(j).is_constant() && used(j))
        .collect();
    let const_total: f64 = consts.iter().map(|&j| fse[j]).sum();
    let mut z = vec![0.0; inst.n_links()];

    if volume <= const_total && !consts.is_empty() {
        // Constants share the shortfall equally; they all sit at the
        // same cap level with equal optimum shares, so entries stay
        // nonnegative.
        let short = (const_total - volume) / consts.len() as f64;
        for &j in &consts {
            z[j] = (fse[j] - short).max(0.0);
        }
        let sum: f64 = z.iter().sum();
        if sum > 0.0 {
            let fix = volume / sum;
            for &j in &consts {
                z[j] *= fix;
            }
        }
        return Ok(z);
    }

    for &j in &consts {
        z[j] = fse[j];
    }
    let remainder = volume - const_total;
    let sloped_total: f64 = sloped.iter().map(|&j| fse[j]).sum();
    if remainder >= sloped_total {
        // Only reachable when the follower's volume vanishes; cover
        // everything and clamp.
        for &j in &sloped {
            z[j] = fse[j];
        }
        return Ok(z);
    }

    // Exact piecewise-linear solve for the common latency increase c
    // with sum_j min(fse_j, c / a_j) = remainder.
    let mut caps: Vec<(f64, usize)> = sloped
        .iter()
        .map(|&j| (inst.link(j).a * fse[j], j))
        .collect();
    caps.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut inv_sum: f64 = sloped.iter().map(|&j| 1.0 / inst.link(j).a).sum();
    let mut full = 0.0;
    let mut c = 0.0;
    for (cap, j) in &caps {
        let candidate = if inv_sum > 0.0 {
            (remainder - full) / inv_sum
        } else {
            *cap
        };
        if candidate <= *cap {
            c = candidate;
            break;
        }
        full += fse[*j];
        inv_sum -= 1.0 / inst.link(*j).a;
        c = *cap;
    }
    for &j in &sloped {
        z[j] = fse[j].min(c / inst.link(j).a);
    }
    // Sweep float drift into the uncapped links, split by 1/a.
    let drift = remainder - sloped.iter().map(|&j| z[j]).sum::<f64>();
    if drift != 0.0 {
        let free: Vec<usize> = sloped
            .iter()
            .copied()
            .filter(|&j| z[j] < fse[j] - USED_EPS * scale)
            .collect();
        let w: f64 = free.iter().map(|&j| 1.0 / inst.link(j).a).sum();
        if w > 0.0 {
            for &j in &free {
                z[j] += drift / (inst.link(j).a * w);
            }
        }
    }
    Ok(z)
}

/// Follower allocation that fills the optimum's leftovers: volume goes
/// where the leader left a link below its optimum share, proportional
/// to the shortfall.
pub fn strategy2(
    inst: &Instance,
    follower: usize,
    leader_allocation: &[f64],
) -> Result<Vec<f64>, SolveError> {
    require_shared_affine(inst)?;
    if inst.n_players() != 2 || follower > 1 {
        return Err(SolveError::Precondition(
            "gap-filling is defined for the second of two players".into(),
        ));
    }
    let leader = 1 - follower;
    crate::stackelberg::check_allocation(inst, leader, leader_allocation)?;
    let (fse, _, _) = optimum_stats(inst)?;
    let volume = inst.player(follower).flow;
    let gaps: Vec<f64> = fse
        .iter()
        .zip(leader_allocation)
        .map(|(f, z)| (f - z).max(0.0))
        .collect();
    let gap_total: f64 = gaps.iter().sum();
    if gap_total < volume - 1e-9 * volume.max(1.0) {
        return Err(SolveError::Precondition(format!(
            "links below their optimum share hold {gap_total}, follower volume is {volume}"
        )));
    }
    Ok(gaps.iter().map(|g| g * volume / gap_total).collect())
}

/// The leader's allocation when it ignores the follower entirely:
/// its own single-agent optimum.
pub fn aloof(inst: &Instance, leader: usize) -> Result<Vec<f64>, SolveError> {
    if leader >= inst.n_players() {
        return Err(SolveError::Precondition(format!(
            "leader index {leader} out of range"
        )));
    }
    let p = inst.player(leader);
    let spec = MarginalSpec::unshifted(FillMode::Optimum, inst.n_links());
    Ok(fill(inst.links(), &spec, p.flow, &p.links)?.allocation)
}

/// Whether the optimum spreads at least a quarter of the flow at
/// latency `<= 1.16 * l_min` and at least a quarter at
/// `>= 1.84 * l_min`, both inclusive. Evaluated on the normalized
/// instance; masses are fractions of the total volume.
pub fn dlp_check(inst: &Instance) -> Result<DlpReport, SolveError> {
    require_shared_affine(inst)?;
    let norm = normalized(inst)?;
    let (totals, _, l_min) = optimum_stats(&norm)?;
    let mut mass_low = 0.0;
    let mut mass_high = 0.0;
    for (j, &t) in totals.iter().enumerate() {
        if t <= USED_EPS {
            continue;
        }
        let lat = norm.link(j).latency(t);
        if lat <= CHEAP_FACTOR * l_min {
            mass_low += t;
        }
        if lat >= DEAR_FACTOR * l_min {
            mass_high += t;
        }
    }
    let quarter = 0.25 - 1e-9;
    Ok(DlpReport {
        dlp: mass_low >= quarter && mass_high >= quarter,
        mass_low,
        mass_high,
        l_min,
    })
}

/// Every applicable closed-form cap for a unit-volume instance. The
/// intercept shift to a zero minimum happens internally; volumes must
/// already sum to 1.
pub fn bound_set(inst: &Instance) -> Result<BoundSet, SolveError> {
    require_shared_affine(inst)?;
    if inst.n_players() != 2 {
        return Err(SolveError::Precondition(format!(
            "bounds compare two players, got {}",
            inst.n_players()
        )));
    }
    if (inst.total_flow() - 1.0).abs() > 1e-9 {
        return Err(SolveError::Precondition(format!(
            "bounds expect unit total volume, got {}",
            inst.total_flow()
        )));
    }
    let norm = normalized(inst)?;
    let (_, c_se, l_min) = optimum_stats(&norm)?;
    let gamma = c_se / l_min;
    let alpha = norm.player(0).flow;
    let dlp = dlp_check(&norm)?.dlp;

    let mut p1_bounds = vec![(
        "forced_optimum",
        (2.0 * alpha * l_min).min(c_se - (1.0 - alpha) * l_min),
    )];
    if dlp {
        p1_bounds.push(("aloof_dlp", 1.915 * alpha * l_min));
    } else {
        let cheap_side = c_se - l_min / 4.0 - CHEAP_FACTOR * l_min * (0.75 - alpha);
        let dear_side = l_min / 2.0 + (alpha - 0.25) * DEAR_FACTOR * l_min;
        p1_bounds.push(("diverse_latency", cheap_side.max(dear_side)));
    }

    let p2_bounds = vec![(
        "remainder_fill",
        (c_se - alpha * l_min).min(2.0 * (1.0 - alpha) * l_min),
    )];

    let gamma_ratio = if gamma >= 1.5 {
        2.0 / gamma
    } else {
        (2.0 * gamma - 1.0) / gamma
    };
    let split = alpha.min(1.0 - alpha);
    let price_bounds = vec![
        ("gamma_ratio", gamma_ratio),
        ("share_split", 1.0 + 2.0 * split / 3.0),
        ("four_thirds", 4.0 / 3.0),
        ("refined", 1.322),
    ];

    Ok(BoundSet {
        l_min,
        gamma,
        alpha,
        p1_bounds,
        p2_bounds,
        price_bounds,
        dlp,
    })
}

fn record(violations: &mut Vec<Violation>, check: &str, measured: f64, limit: f64, tol: f64) {
    if measured > limit + tol {
        violations.push(Violation {
            check: check.to_string(),
            measured,
            limit,
        });
    }
}

/// Replay every guarantee on the instance: closed-form price caps
/// against re-measured normalized prices, the constructive strategies
/// against their cost caps, and the aloof leader under the
/// diverse-latency predicate. Violations come back as data; an empty
/// list is the expected outcome on valid affine instances.
pub fn verify_bounds(
    inst: &Instance,
    raw_prices: &crate::stackelberg::PriceReport,
) -> Result<Vec<Violation>, SslError> {
    require_shared_affine(inst)?;
    if inst.n_players() != 2 {
        return Err(SolveError::Unsupported(format!(
            "bound verification compares two players, got {}",
            inst.n_players()
        ))
        .into());
    }
    let norm = normalized(inst)?;
    let prices = price_report(&norm, &SslConfig::default())?;
    verify_with_prices(&norm, &prices, Some(raw_prices))
}

/// Verification body on an already-normalized instance with its price
/// report in hand, so callers that measured prices anyway (the fuzz
/// harness) pay for the leadership solves once.
pub(crate) fn verify_with_prices(
    norm: &Instance,
    prices: &crate::stackelberg::PriceReport,
    raw_prices: Option<&crate::stackelberg::PriceReport>,
) -> Result<Vec<Violation>, SslError> {
    const TOL: f64 = 1e-7;
    let bounds = bound_set(norm)?;
    let mut violations = Vec::new();

    record(
        &mut violations,
        "gamma_upper",
        bounds.gamma,
        2.0,
        1e-9,
    );
    if bounds.gamma < 1.0 - 1e-9 {
        violations.push(Violation {
            check: "gamma_lower".into(),
            measured: bounds.gamma,
            limit: 1.0,
        });
    }
    for (name, value) in &bounds.price_bounds {
        record(
            &mut violations,
            &format!("price_{name}"),
            prices.price_vs_optimal,
            *value,
            TOL,
        );
    }
    // Intercept shifts only lower cost ratios, so the raw-scale price
    // can never exceed the normalized one.
    if let Some(raw) = raw_prices {
        record(
            &mut violations,
            "raw_price_below_normalized",
            raw.price_vs_optimal,
            prices.price_vs_optimal,
            TOL,
        );
    }

    let (fse, c_se, l_min) = optimum_stats(norm)?;
    let forced = strategy1(norm, 0)?;
    let mut profile = FlowProfile::zeros(2, norm.n_links());
    profile.flow[0] = forced.clone();
    let response = best_response(norm, &profile, 1)?;
    profile.flow[1] = response.allocation.clone();
    let mut worst_gap = 0.0f64;
    for j in 0..norm.n_links() {
        worst_gap = worst_gap.max((forced[j] + response.allocation[j] - fse[j]).abs());
    }
    record(&mut violations, "forced_optimum_restores", worst_gap, 0.0, TOL);
    let forced_cost = player_cost(norm, &profile, 0);
    let forced_cap = bounds
        .p1_bounds
        .iter()
        .find(|(n, _)| *n == "forced_optimum")
        .map(|(_, v)| *v)
        .unwrap();
    record(&mut violations, "forced_optimum_cost", forced_cost, forced_cap, TOL);
    record(&mut violations, "forced_optimum_vs_se", forced_cost, c_se, TOL);

    // Gap filling against sampled leader allocations, the leader's own
    // forced allocation included.
    let alpha = bounds.alpha;
    let remainder_cap = bounds.p2_bounds[0].1;
    let mut rng = Lcg::new(0xb07d_5001);
    let mut samples: Vec<Vec<f64>> = vec![forced.clone()];
    for _ in 0..3 {
        let mut w: Vec<f64> = (0..norm.n_links()).map(|_| rng.next_f64()).collect();
        let t: f64 = w.iter().sum();
        for v in &mut w {
            *v = *v / t * alpha;
        }
        samples.push(w);
    }
    for (s, sample) in samples.iter().enumerate() {
        let filler = strategy2(norm, 1, sample)?;
        let mut p = FlowProfile::zeros(2, norm.n_links());
        p.flow[0] = sample.clone();
        p.flow[1] = filler;
        let cost = player_cost(norm, &p, 1);
        record(
            &mut violations,
            &format!("remainder_fill_sample{s}"),
            cost,
            remainder_cap,
            TOL,
        );
    }

    if bounds.dlp {
        let aloof_z = aloof(norm, 0)?;
        let mut p = FlowProfile::zeros(2, norm.n_links());
        p.flow[0] = aloof_z.clone();
        let response = best_response(norm, &p, 1)?;
        p.flow[1] = response.allocation;
        let aloof_cost = player_cost(norm, &p, 0);
        record(
            &mut violations,
            "aloof_dlp",
            aloof_cost,
            1.915 * alpha * l_min,
            TOL,
        );
    } else {
        let leader0 = prices
            .ssl
            .iter()
            .find(|r| r.leader == 0)
            .map(|r| r.leader_cost);
        let leader0 = match leader0 {
            Some(c) => c,
            None => ssl_solve(norm, 0, &SslConfig::default())?.leader_cost,
        };
        let cap = bounds
            .p1_bounds
            .iter()
            .find(|(n, _)| *n == "diverse_latency")
            .map(|(_, v)| *v)
            .unwrap();
        record(
            &mut violations,
            "diverse_latency",
            leader0,
            cap,
            TOL,
        );
    }

    Ok(violations)
}
