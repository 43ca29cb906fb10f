//! Domain types, validation, and cost evaluation shared by all solvers.
//!
//! Instances are read in a raw form ([`RawInstance`], the JSON schema) and
//! turned into a canonical [`Instance`] by [`validate`]: links are sorted
//! ascending by intercept and the permutation back to raw positions is
//! recorded, so reports can always speak in raw link indices.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Flow below this fraction of a player's volume does not count as "using"
/// a link when reporting support sets.
pub const SUPPORT_EPS: f64 = 1e-9;

/// Per-link latency curve `a·f^d + b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyFn {
    /// Slope coefficient, `>= 0`.
    pub a: f64,
    /// Latency at zero flow, `>= 0`.
    pub b: f64,
    /// Monomial degree, `>= 1` (1 for affine).
    #[serde(default = "default_degree")]
    pub d: u32,
}

fn default_degree() -> u32 {
    1
}

impl LatencyFn {
    pub fn affine(a: f64, b: f64) -> Self {
        LatencyFn { a, b, d: 1 }
    }

    pub fn constant(b: f64) -> Self {
        LatencyFn { a: 0.0, b, d: 1 }
    }

    /// Latency at the given total load: `a·load^d + b`.
    pub fn latency(&self, load: f64) -> f64 {
        debug_assert!(load >= -1e-9, "negative load {load}");
        if self.d == 1 {
            self.a * load + self.b
        } else {
            self.a * load.powi(self.d as i32) + self.b
        }
    }

    /// True when the latency does not depend on load (`a = 0`).
    pub fn is_constant(&self) -> bool {
        self.a == 0.0
    }

    pub fn is_affine(&self) -> bool {
        self.d == 1
    }
}

/// How a player's flow reacts to the rest of the system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Behavior {
    /// One agent splitting its volume to minimize its own total cost.
    Atomic,
    /// A continuum of infinitesimal users equalizing latency.
    Wardrop,
}

/// A player: volume, accessible links (canonical indices), behavior.
#[derive(Clone, Debug, PartialEq)]
pub struct PlayerSpec {
    pub flow: f64,
    /// Sorted, deduplicated canonical link indices.
    pub links: Vec<usize>,
    pub behavior: Behavior,
}

/// Link as it appears in an instance file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RawLink {
    pub a: f64,
    pub b: f64,
    #[serde(default = "default_degree")]
    pub d: u32,
}

/// Player as it appears in an instance file.
///
/// `links` holds raw link indices; `None` means all links.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RawPlayer {
    pub flow: f64,
    pub behavior: Behavior,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub links: Option<Vec<usize>>,
}

/// Instance file content, prior to validation and canonical ordering.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RawInstance {
    pub links: Vec<RawLink>,
    pub players: Vec<RawPlayer>,
}

/// A validated instance with links in canonical order (ascending `b`,
/// stable on ties). Construct via [`validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    links: Vec<LatencyFn>,
    players: Vec<PlayerSpec>,
    /// `raw_of[k]` is the raw position of canonical link `k`.
    raw_of: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ValidationError {
    #[error("instance has no links")]
    NoLinks,
    #[error("instance has no players")]
    NoPlayers,
    #[error("link {index}: coefficient {field} = {value} must be finite and nonnegative")]
    BadCoefficient {
        index: usize,
        field: &'static str,
        value: f64,
    },
    #[error("link {index}: degree must be >= 1")]
    BadDegree { index: usize },
    #[error("link {index}: a + b must be positive (identically zero latency)")]
    ZeroLatency { index: usize },
    #[error("player {index}: flow {flow} must be finite and positive")]
    BadFlow { index: usize, flow: f64 },
    #[error("player {index}: empty link set")]
    EmptyLinkSet { index: usize },
    #[error("player {index}: invalid link index {link}")]
    InvalidLinkIndex { index: usize, link: usize },
}

/// All validation failures for an instance, reported together.
#[derive(Clone, Debug, PartialEq, Error)]
#[error("{}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ValidationErrors(pub Vec<ValidationError>);

/// Errors raised by solvers and strategy constructors.
#[derive(Clone, Debug, Error)]
pub enum SolveError {
    #[error("volume {0} must be nonnegative")]
    NegativeVolume(f64),
    #[error("no accessible links")]
    EmptyAccess,
    #[error("iteration did not converge after {iters} passes (residual {residual:.3e})")]
    NonConvergence { iters: usize, residual: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("intercept {0} would become negative after shift")]
    NegativeIntercept(f64),
}

/// Check and canonicalize a raw instance.
///
/// Links are sorted ascending by `b` (stable, so equal intercepts keep
/// their raw relative order); player link sets are remapped to canonical
/// indices, sorted, and deduplicated. Every violation found is reported,
/// not just the first.
pub fn validate(raw: &RawInstance) -> Result<Instance, ValidationErrors> {
    let mut errors = Vec::new();
    if raw.links.is_empty() {
        errors.push(ValidationError::NoLinks);
    }
    if raw.players.is_empty() {
        errors.push(ValidationError::NoPlayers);
    }
    for (i, l) in raw.links.iter().enumerate() {
        for (field, value) in [("a", l.a), ("b", l.b)] {
            if !value.is_finite() || value < 0.0 {
                errors.push(ValidationError::BadCoefficient {
                    index: i,
                    field,
                    value,
                });
            }
        }
        if l.d < 1 {
            errors.push(ValidationError::BadDegree { index: i });
        }
        if l.a + l.b <= 0.0 && l.a >= 0.0 && l.b >= 0.0 {
            errors.push(ValidationError::ZeroLatency { index: i });
        }
    }
    for (i, p) in raw.players.iter().enumerate() {
        if !p.flow.is_finite() || p.flow <= 0.0 {
            errors.push(ValidationError::BadFlow {
                index: i,
                flow: p.flow,
            });
        }
        if let Some(links) = &p.links {
            if links.is_empty() {
                errors.push(ValidationError::EmptyLinkSet { index: i });
            }
            for &l in links {
                if l >= raw.links.len() {
                    errors.push(ValidationError::InvalidLinkIndex { index: i, link: l });
                }
            }
        }
    }
    if !errors.is_empty() {
        return Err(ValidationErrors(errors));
    }

    let mut order: Vec<usize> = (0..raw.links.len()).collect();
    order.sort_by(|&i, &j| {
        raw.links[i]
            .b
            .partial_cmp(&raw.links[j].b)
            .unwrap()
            .then(i.cmp(&j))
    });
    let links: Vec<LatencyFn> = order
        .iter()
        .map(|&i| LatencyFn {
            a: raw.links[i].a,
            b: raw.links[i].b,
            d: raw.links[i].d,
        })
        .collect();
    let mut canonical_of = vec![0usize; order.len()];
    for (canonical, &rawpos) in order.iter().enumerate() {
        canonical_of[rawpos] = canonical;
    }
    let players = raw
        .players
        .iter()
        .map(|p| {
            let mut links: Vec<usize> = match &p.links {
                None => (0..raw.links.len()).collect(),
                Some(ls) => {
                    let mut v: Vec<usize> = ls.iter().map(|&l| canonical_of[l]).collect();
                    v.sort_unstable();
                    v.dedup();
                    v
                }
            };
            links.shrink_to_fit();
            PlayerSpec {
                flow: p.flow,
                links,
                behavior: p.behavior,
            }
        })
        .collect();
    Ok(Instance {
        links,
        players,
        raw_of: order,
    })
}

impl Instance {
    pub fn n_links(&self) -> usize {
        self.links.len()
    }

    pub fn n_players(&self) -> usize {
        self.players.len()
    }

    /// Links in canonical order.
    pub fn links(&self) -> &[LatencyFn] {
        &self.links
    }

    pub fn link(&self, j: usize) -> &LatencyFn {
        &self.links[j]
    }

    pub fn players(&self) -> &[PlayerSpec] {
        &self.players
    }

    pub fn player(&self, i: usize) -> &PlayerSpec {
        &self.players[i]
    }

    /// Raw position of canonical link `j`.
    pub fn raw_index(&self, j: usize) -> usize {
        self.raw_of[j]
    }

    /// Sum of all player volumes.
    pub fn total_flow(&self) -> f64 {
        self.players.iter().map(|p| p.flow).sum()
    }

    pub fn is_affine(&self) -> bool {
        self.links.iter().all(|l| l.is_affine())
    }

    /// True when every player may use every link.
    pub fn shared_access(&self) -> bool {
        let n = self.n_links();
        self.players.iter().all(|p| p.links.len() == n)
    }

    /// Reconstruct the raw form (links back in raw positions, player link
    /// sets in sorted raw indices).
    pub fn to_raw(&self) -> RawInstance {
        let n = self.n_links();
        let mut links = vec![
            RawLink {
                a: 0.0,
                b: 0.0,
                d: 1
            };
            n
        ];
        for (canonical, &rawpos) in self.raw_of.iter().enumerate() {
            let l = self.links[canonical];
            links[rawpos] = RawLink {
                a: l.a,
                b: l.b,
                d: l.d,
            };
        }
        let players = self
            .players
            .iter()
            .map(|p| {
                let links = if p.links.len() == n {
                    None
                } else {
                    let mut v: Vec<usize> = p.links.iter().map(|&j| self.raw_of[j]).collect();
                    v.sort_unstable();
                    Some(v)
                };
                RawPlayer {
                    flow: p.flow,
                    behavior: p.behavior,
                    links,
                }
            })
            .collect();
        RawInstance { links, players }
    }

    /// Add `c` to every intercept. The canonical order is unchanged since
    /// a common shift preserves the sort.
    pub fn shift_constant(&self, c: f64) -> Result<Instance, SolveError> {
        let mut links = self.links.clone();
        for l in &mut links {
            let nb = l.b + c;
            if nb < 0.0 {
                return Err(SolveError::NegativeIntercept(nb));
            }
            l.b = nb;
        }
        Ok(Instance {
            links,
            players: self.players.clone(),
            raw_of: self.raw_of.clone(),
        })
    }

    /// Smallest intercept (the canonical first link's `b`).
    pub fn min_intercept(&self) -> f64 {
        self.links[0].b
    }
}

/// Per-player, per-link flows in canonical link order.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowProfile {
    /// `flow[i][j]` is player `i`'s flow on canonical link `j`.
    pub flow: Vec<Vec<f64>>,
}

impl FlowProfile {
    pub fn zeros(n_players: usize, n_links: usize) -> Self {
        FlowProfile {
            flow: vec![vec![0.0; n_links]; n_players],
        }
    }

    pub fn n_players(&self) -> usize {
        self.flow.len()
    }

    /// Total flow per link, summed over players.
    pub fn link_totals(&self) -> Vec<f64> {
        let n = self.flow.first().map_or(0, Vec::len);
        let mut totals = vec![0.0; n];
        for row in &self.flow {
            for (t, &x) in totals.iter_mut().zip(row) {
                *t += x;
            }
        }
        totals
    }

    /// Total flow per link excluding player `i`.
    pub fn totals_without(&self, i: usize) -> Vec<f64> {
        let mut totals = self.link_totals();
        for (t, &x) in totals.iter_mut().zip(&self.flow[i]) {
            *t -= x;
        }
        totals
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ProfileError {
    #[error("profile has {got} rows, instance has {want} players")]
    PlayerCount { got: usize, want: usize },
    #[error("player {player}: row has {got} entries, instance has {want} links")]
    LinkCount {
        player: usize,
        got: usize,
        want: usize,
    },
    #[error("player {player}, link {link}: negative flow {value}")]
    NegativeFlow {
        player: usize,
        link: usize,
        value: f64,
    },
    #[error("player {player}: flow {value} on inaccessible link {link}")]
    InaccessibleFlow {
        player: usize,
        link: usize,
        value: f64,
    },
    #[error("player {player}: row sums to {got}, volume is {want}")]
    VolumeMismatch { player: usize, got: f64, want: f64 },
}

/// Check a profile against an instance: shape, nonnegativity, access
/// sets, and row sums matching player volumes within `1e-6` relative.
pub fn validate_profile(inst: &Instance, profile: &FlowProfile) -> Result<(), ProfileError> {
    if profile.flow.len() != inst.n_players() {
        return Err(ProfileError::PlayerCount {
            got: profile.flow.len(),
            want: inst.n_players(),
        });
    }
    for (i, row) in profile.flow.iter().enumerate() {
        if row.len() != inst.n_links() {
            return Err(ProfileError::LinkCount {
                player: i,
                got: row.len(),
                want: inst.n_links(),
            });
        }
        let p = inst.player(i);
        for (j, &x) in row.iter().enumerate() {
            if x < -1e-12 {
                return Err(ProfileError::NegativeFlow {
                    player: i,
                    link: j,
                    value: x,
                });
            }
            if x > 1e-9 * p.flow.max(1.0) && !p.links.contains(&j) {
                return Err(ProfileError::InaccessibleFlow {
                    player: i,
                    link: j,
                    value: x,
                });
            }
        }
        let sum: f64 = row.iter().sum();
        if (sum - p.flow).abs() > 1e-6 * p.flow.max(1.0) {
            return Err(ProfileError::VolumeMismatch {
                player: i,
                got: sum,
                want: p.flow,
            });
        }
    }
    Ok(())
}

/// Player `i`'s cost: its flow on each link times that link's latency at
/// the total load.
pub fn player_cost(inst: &Instance, profile: &FlowProfile, i: usize) -> f64 {
    let totals = profile.link_totals();
    player_cost_with_totals(inst, &profile.flow[i], &totals)
}

fn player_cost_with_totals(inst: &Instance, row: &[f64], totals: &[f64]) -> f64 {
    row.iter()
        .zip(totals)
        .zip(inst.links())
        .map(|((&x, &t), l)| x * l.latency(t))
        .sum()
}

/// Total cost `Σ_j f_j·ℓ_j(f_j)` over link totals.
pub fn social_cost(inst: &Instance, profile: &FlowProfile) -> f64 {
    let totals = profile.link_totals();
    totals
        .iter()
        .zip(inst.links())
        .map(|(&t, l)| t * l.latency(t))
        .sum()
}

/// Solver output: the profile plus derived costs, levels, supports, and
/// the worst optimality-condition violation.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub profile: FlowProfile,
    pub player_costs: Vec<f64>,
    /// Sum of `player_costs`, so the decomposition is exact by
    /// construction.
    pub social_cost: f64,
    /// The common marginal (or latency) on used links; with several
    /// commodities, the largest per-player level.
    pub equalization_level: f64,
    /// Per-player equalization level.
    pub levels: Vec<f64>,
    /// Per-player used links (canonical indices).
    pub supports: Vec<Vec<usize>>,
    /// Largest per-player residual.
    pub residual: f64,
    /// Per-player violation of the player's optimality condition, in
    /// flow units of best-response distance or marginal mismatch.
    pub player_residuals: Vec<f64>,
}

impl SolveReport {
    /// Assemble a report from a profile and per-player levels/residuals.
    pub fn from_profile(
        inst: &Instance,
        profile: FlowProfile,
        levels: Vec<f64>,
        player_residuals: Vec<f64>,
    ) -> Self {
        let totals = profile.link_totals();
        let player_costs: Vec<f64> = profile
            .flow
            .iter()
            .map(|row| player_cost_with_totals(inst, row, &totals))
            .collect();
        let social_cost = player_costs.iter().sum();
        let supports = profile
            .flow
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let thresh = SUPPORT_EPS * inst.player(i).flow.max(1.0);
                row.iter()
                    .enumerate()
                    .filter(|&(_, &x)| x > thresh)
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect();
        let equalization_level = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let residual = player_residuals
            .iter()
            .copied()
            .fold(0.0f64, f64::max);
        SolveReport {
            profile,
            player_costs,
            social_cost,
            equalization_level,
            levels,
            supports,
            residual,
            player_residuals,
        }
    }
}
