//! Single-commodity allocation by level equalization (water-filling).
//!
//! One agent routes a volume over a set of links so that a common level
//! λ of marginal cost (optimum mode) or latency (wardrop mode) is reached
//! on every used link, while unused accessible links sit at or above λ at
//! zero flow. Other agents' fixed flows enter either as intercept shifts
//! ([`MarginalSpec`]) or as base loads (the `fill_base` entry point used
//! by the equilibrium solvers, exact for monomial latencies too).

use crate::model::{FlowProfile, Instance, LatencyFn, SolveError, SolveReport};

/// Which level the fill equalizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FillMode {
    /// Equalize own-cost marginals: `(d+1)·a·x^d + b + shift`.
    Optimum,
    /// Equalize latencies: `a·x^d + b + shift`.
    Wardrop,
}

/// Marginal description for [`fill`]: the mode plus a nonnegative
/// intercept shift per link, encoding other players' fixed flows on
/// affine links (`shift_j = a_j` times their flow).
#[derive(Clone, Debug)]
pub struct MarginalSpec {
    pub mode: FillMode,
    pub shift: Vec<f64>,
}

impl MarginalSpec {
    pub fn unshifted(mode: FillMode, n_links: usize) -> Self {
        MarginalSpec {
            mode,
            shift: vec![0.0; n_links],
        }
    }
}

/// Marginal cost of pushing flow `x` onto a link whose intercept is
/// raised by `shift`.
pub fn marginal(link: &LatencyFn, shift: f64, x: f64, mode: FillMode) -> f64 {
    let c = link.b + shift;
    let k = match mode {
        FillMode::Optimum => (link.d + 1) as f64,
        FillMode::Wardrop => 1.0,
    };
    if link.d == 1 {
        k * link.a * x + c
    } else {
        k * link.a * x.powi(link.d as i32) + c
    }
}

/// Base-load marginal at own flow `x` given other players' load on the
/// link, for optimality checks outside the fill itself.
pub(crate) fn base_marginal(link: &LatencyFn, load: f64, x: f64, mode: BaseMode) -> f64 {
    Curve::from_base(link, load, mode).eval(x)
}

/// How other players' flow on a link enters a player's own marginal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum BaseMode {
    /// Own-cost marginal of an atomic player at base load `g`:
    /// `a·(x+g)^d + b + x·d·a·(x+g)^(d-1)`.
    Atomic,
    /// Latency at total load: `a·(x+g)^d + b`.
    Wardrop,
    /// Marginal of total social cost at total load:
    /// `(d+1)·a·(x+g)^d + b`.
    Social,
}

/// One link's increasing marginal curve, in either shift or base-load
/// form.
#[derive(Clone, Copy, Debug)]
struct Curve {
    a: f64,
    b: f64,
    d: u32,
    /// Intercept shift (shift form) or other players' load (base form).
    extra: f64,
    kind: CurveKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum CurveKind {
    Shifted(FillMode),
    Base(BaseMode),
}

impl Curve {
    fn from_shift(link: &LatencyFn, shift: f64, mode: FillMode) -> Self {
        Curve {
            a: link.a,
            b: link.b,
            d: link.d,
            extra: shift,
            kind: CurveKind::Shifted(mode),
        }
    }

    fn from_base(link: &LatencyFn, load: f64, mode: BaseMode) -> Self {
        Curve {
            a: link.a,
            b: link.b,
            d: link.d,
            extra: load,
            kind: CurveKind::Base(mode),
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let Curve { a, b, d, extra, .. } = *self;
        match self.kind {
            CurveKind::Shifted(mode) => {
                let k = match mode {
                    FillMode::Optimum => (d + 1) as f64,
                    FillMode::Wardrop => 1.0,
                };
                k * a * powu(x, d) + b + extra
            }
            CurveKind::Base(mode) => {
                let t = x + extra;
                match mode {
                    BaseMode::Atomic => a * powu(t, d) + b + x * d as f64 * a * powu(t, d - 1),
                    BaseMode::Wardrop => a * powu(t, d) + b,
                    BaseMode::Social => (d + 1) as f64 * a * powu(t, d) + b,
                }
            }
        }
    }

    fn at_zero(&self) -> f64 {
        self.eval(0.0)
    }

    fn is_flat(&self) -> bool {
        self.a == 0.0
    }

    /// Whether `eval` is linear in `x`, so the active-set finish applies.
    fn is_linear(&self) -> bool {
        self.d == 1
    }

    /// For a linear curve `k·x + c0`, its slope and intercept.
    fn linear_parts(&self) -> (f64, f64) {
        debug_assert!(self.is_linear());
        let Curve { a, b, extra, .. } = *self;
        match self.kind {
            CurveKind::Shifted(FillMode::Optimum) => (2.0 * a, b + extra),
            CurveKind::Shifted(FillMode::Wardrop) => (a, b + extra),
            CurveKind::Base(BaseMode::Atomic) => (2.0 * a, b + a * extra),
            CurveKind::Base(BaseMode::Wardrop) => (a, b + a * extra),
            CurveKind::Base(BaseMode::Social) => (2.0 * a, b + 2.0 * a * extra),
        }
    }

    /// Flow at which the curve reaches `level`, clamped to `[0, cap]`.
    fn inverse(&self, level: f64, cap: f64) -> f64 {
        if level <= self.at_zero() {
            return 0.0;
        }
        if self.is_linear() {
            let (k, c0) = self.linear_parts();
            return ((level - c0) / k).clamp(0.0, cap);
        }
        let Curve { a, b, d, extra, .. } = *self;
        let root = |scale: f64, base: f64| -> f64 {
            // Solve scale·a·(x+base)^d + b = level for x.
            let v = (level - b) / (scale * a);
            if v <= 0.0 {
                return 0.0;
            }
            (v.powf(1.0 / d as f64) - base).clamp(0.0, cap)
        };
        match self.kind {
            CurveKind::Shifted(FillMode::Optimum) => {
                let v = (level - b - extra) / ((d + 1) as f64 * a);
                v.max(0.0).powf(1.0 / d as f64).min(cap)
            }
            CurveKind::Shifted(FillMode::Wardrop) => {
                let v = (level - b - extra) / a;
                v.max(0.0).powf(1.0 / d as f64).min(cap)
            }
            CurveKind::Base(BaseMode::Wardrop) => root(1.0, extra),
            CurveKind::Base(BaseMode::Social) => root((d + 1) as f64, extra),
            CurveKind::Base(BaseMode::Atomic) => {
                // No closed form; the curve is strictly increasing.
                if self.eval(cap) <= level {
                    return cap;
                }
                let (mut lo, mut hi) = (0.0, cap);
                for _ in 0..120 {
                    let mid = 0.5 * (lo + hi);
                    if self.eval(mid) < level {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }
}

fn powu(x: f64, d: u32) -> f64 {
    match d {
        0 => 1.0,
        1 => x,
        _ => x.powi(d as i32),
    }
}

/// Result of a fill: a full-length allocation (zeros on inaccessible
/// links), the common level, and the worst equalization violation.
#[derive(Clone, Debug)]
pub struct Fill {
    pub allocation: Vec<f64>,
    pub level: f64,
    pub residual: f64,
}

/// Allocate `volume` over the accessible links so the marginal (or
/// latency, in wardrop mode) is equalized. Shift semantics; see
/// [`MarginalSpec`].
pub fn fill(
    links: &[LatencyFn],
    spec: &MarginalSpec,
    volume: f64,
    accessible: &[usize],
) -> Result<Fill, SolveError> {
    if spec.shift.len() != links.len() {
        return Err(SolveError::Precondition(format!(
            "shift vector has {} entries for {} links",
            spec.shift.len(),
            links.len()
        )));
    }
    if let Some(&s) = spec.shift.iter().find(|s| !s.is_finite() || **s < 0.0) {
        return Err(SolveError::Precondition(format!("invalid shift {s}")));
    }
    let curves: Vec<(usize, Curve)> = accessible
        .iter()
        .map(|&j| (j, Curve::from_shift(&links[j], spec.shift[j], spec.mode)))
        .collect();
    fill_curves(links.len(), &curves, volume)
}

/// Allocate `volume` given other players' per-link loads, equalizing the
/// base-mode marginal. Exact for monomial latencies, where a pure
/// intercept shift cannot represent the base load.
pub(crate) fn fill_base(
    links: &[LatencyFn],
    base: &[f64],
    volume: f64,
    accessible: &[usize],
    mode: BaseMode,
) -> Result<Fill, SolveError> {
    debug_assert_eq!(base.len(), links.len());
    let curves: Vec<(usize, Curve)> = accessible
        .iter()
        .map(|&j| (j, Curve::from_base(&links[j], base[j].max(0.0), mode)))
        .collect();
    fill_curves(links.len(), &curves, volume)
}

const LEVEL_ITERS: usize = 200;
const LEVEL_TOL: f64 = 1e-12;

fn fill_curves(n_links: usize, curves: &[(usize, Curve)], volume: f64) -> Result<Fill, SolveError> {
    if curves.is_empty() {
        return Err(SolveError::EmptyAccess);
    }
    if !volume.is_finite() || volume < 0.0 {
        return Err(SolveError::NegativeVolume(volume));
    }
    let mut allocation = vec![0.0; n_links];
    let min_at_zero = curves
        .iter()
        .map(|(_, c)| c.at_zero())
        .fold(f64::INFINITY, f64::min);
    if volume == 0.0 {
        return Ok(Fill {
            allocation,
            level: min_at_zero,
            residual: 0.0,
        });
    }

    let sloped: Vec<&(usize, Curve)> = curves.iter().filter(|(_, c)| !c.is_flat()).collect();
    let flat: Vec<&(usize, Curve)> = curves.iter().filter(|(_, c)| c.is_flat()).collect();
    // Flat links hold their marginal at b (+shift) regardless of flow, so
    // the level can never rise above the cheapest of them.
    let cap_level = flat
        .iter()
        .map(|(_, c)| c.at_zero())
        .fold(f64::INFINITY, f64::min);

    let sloped_sum = |level: f64| -> f64 {
        sloped.iter().map(|(_, c)| c.inverse(level, volume)).sum()
    };

    let level;
    if sloped.is_empty() || sloped_sum(cap_level) < volume {
        // The cheapest flat links absorb the residual; ties split equally.
        level = cap_level;
        let mut spent = 0.0;
        for (j, c) in &sloped {
            let x = c.inverse(level, volume);
            allocation[*j] = x;
            spent += x;
        }
        let ties: Vec<usize> = flat
            .iter()
            .filter(|(_, c)| c.at_zero() == cap_level)
            .map(|(j, _)| *j)
            .collect();
        let share = (volume - spent) / ties.len() as f64;
        for j in ties {
            allocation[j] = share;
        }
    } else {
        let mut lo = min_at_zero;
        let max_at_zero = curves
            .iter()
            .map(|(_, c)| c.at_zero())
            .fold(f64::NEG_INFINITY, f64::max);
        let max_at_volume = sloped
            .iter()
            .map(|(_, c)| c.eval(volume))
            .fold(f64::NEG_INFINITY, f64::max);
        let mut hi = (max_at_zero + max_at_volume).min(cap_level);
        let tol = LEVEL_TOL * hi.abs().max(1.0);
        for _ in 0..LEVEL_ITERS {
            if hi - lo <= tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if sloped_sum(mid) < volume {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let approx = 0.5 * (lo + hi);

        if sloped.iter().all(|(_, c)| c.is_linear()) {
            // Exact finish: with the support fixed, the level solving
            // Σ (λ - c0_j)/k_j = volume is closed-form. Re-derive the
            // support from the exact level until it is self-consistent.
            let mut used: Vec<bool> = sloped
                .iter()
                .map(|(_, c)| c.linear_parts().1 < approx)
                .collect();
            let mut exact = approx;
            for _ in 0..=sloped.len() {
                let mut inv_k = 0.0;
                let mut c_over_k = 0.0;
                for (u, (_, c)) in used.iter().zip(&sloped) {
                    if *u {
                        let (k, c0) = c.linear_parts();
                        inv_k += 1.0 / k;
                        c_over_k += c0 / k;
                    }
                }
                if inv_k == 0.0 {
                    break;
                }
                exact = (volume + c_over_k) / inv_k;
                let next: Vec<bool> = sloped
                    .iter()
                    .map(|(_, c)| c.linear_parts().1 < exact)
                    .collect();
                if next == used {
                    break;
                }
                used = next;
            }
            level = exact.min(cap_level);
            for (u, (j, c)) in used.iter().zip(&sloped) {
                if *u {
                    let (k, c0) = c.linear_parts();
                    allocation[*j] = ((level - c0) / k).max(0.0);
                }
            }
        } else {
            level = approx;
            for (j, c) in &sloped {
                allocation[*j] = c.inverse(level, volume);
            }
        }
        // Close the tiny volume gap left by the level tolerance without
        // disturbing the equalized marginals appreciably.
        let assigned: f64 = allocation.iter().sum();
        let gap = volume - assigned;
        if gap != 0.0 && assigned > 0.0 {
            for x in &mut allocation {
                *x += gap * (*x / assigned);
            }
        }
    }

    let mut residual = 0.0f64;
    for (j, c) in curves {
        let x = allocation[*j];
        if x > 0.0 {
            residual = residual.max((c.eval(x) - level).abs());
        } else {
            residual = residual.max((level - c.at_zero()).max(0.0));
        }
    }
    Ok(Fill {
        allocation,
        level,
        residual,
    })
}

/// Socially optimal flow of all volume, treated as one commodity over the
/// union of the players' link sets.
///
/// The report's per-player rows split each link proportionally to player
/// volume; they are bookkeeping for the single commodity and ignore
/// per-player access sets (the access-respecting problem is
/// `equilibria::global_optimum`).
pub fn social_optimum(inst: &Instance) -> Result<SolveReport, SolveError> {
    let mut union: Vec<usize> = inst
        .players()
        .iter()
        .flat_map(|p| p.links.iter().copied())
        .collect();
    union.sort_unstable();
    union.dedup();
    let total = inst.total_flow();
    let spec = MarginalSpec::unshifted(FillMode::Optimum, inst.n_links());
    let fill = fill(inst.links(), &spec, total, &union)?;
    let m = inst.n_players();
    let mut profile = FlowProfile::zeros(m, inst.n_links());
    for (i, p) in inst.players().iter().enumerate() {
        let share = p.flow / total;
        for (x, &f) in profile.flow[i].iter_mut().zip(&fill.allocation) {
            *x = share * f;
        }
    }
    Ok(SolveReport::from_profile(
        inst,
        profile,
        vec![fill.level; m],
        vec![fill.residual; m],
    ))
}
