//! Validity and best constant of the integro-differential inequality
//!
//! ```text
//!     ( ∫₀ᵇ ( |y^[1]|²/r + q|y|² ) dx )²  ≤  K · ∫₀ᵇ |y|² w dx · ∫₀ᵇ |ℓy|² w dx
//! ```
//!
//! for the string/Schrödinger expression `ℓy = (−(y^[1])′ + q y)/w` with the
//! Neumann condition at `0` (and `(1/r)y′(b) = 0` whenever the right endpoint
//! admits a condition).
//!
//! Four routes are implemented, each producing evidence for the same verdict:
//!
//! 1. **Imaginary-axis ratio** ([`help_check`]): the inequality holds with
//!    some finite `K` if and only if `Re m(iy)/Im m(iy)` stays bounded as
//!    `y → 0` and as `y → ∞`; both windows are sampled and judged by
//!    [`ratio_criterion`].
//! 2. **Sector scan** ([`everitt_scan`]): validity is equivalent to
//!    `Im(λ² m(λ)) ≤ 0` on both rays `arg λ ∈ {θ, π−θ}` of some sector
//!    angle `θ ∈ (0, π/2)`, and the smallest clean angle `θ₀` determines the
//!    best constant `K = 1/cos θ₀`. The scan bisects on `θ` over a log-grid
//!    of `|λ|`.
//! 3. **Coefficient criterion** ([`help_coefficient_check`]): positive
//!    increase of `R∘W⁻¹` at the ends of its domain decides validity from
//!    the coefficient distributions alone, split by which of `w`, `r` is
//!    integrable up to `b`.
//! 4. **Interval test functions** ([`help_lower_bound`]): piecewise-linear
//!    trial functions supported on `(0, bₙ)` with a knee at `aₙ` give
//!    explicit lower bounds `Kₙ` for the best constant; `Kₙ → ∞` along a
//!    suitable sequence of intervals witnesses invalidity.
//!
//! Nonnegative potentials are handled by [`help_with_potential`]: the
//! zero-energy substitution of [`crate::liouville`] reduces the question to
//! integrability of the zero-energy solution `c₀` and a positive-increase
//! condition on the (possibly transformed) weight distribution.
//!
//! Route disagreements are never silently resolved: a conclusive verdict is
//! only reported when no other conclusive route contradicts it.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::FRAC_PI_2;

use crate::asymptotics::{
    ratio_criterion, BoundVerdict, RatioDirection, RatioOptions, RatioReport, SpectralEnd,
};
use crate::coefficients::{compose_distributions, Distribution, End};
use crate::error::{Error, Result};
use crate::liouville::{self, Membership, MembershipReport};
use crate::regvar::{positively_increasing, PiReport, PiVerdict};
use crate::weyl::{m_eval, BoundaryKind, HalfLineProblem, MOptions};
use crate::{Cplx, Real, TINY};

/// Smallest sector angle the scan probes; below this the rays hug the
/// positive real axis and truncation costs explode while `K` is already
/// within `1/cos(0.02) − 1 ≈ 2e-4` of its floor.
const THETA_MIN: Real = 0.02;

/// A certified clean angle counts toward a `valid` conclusion only if it is
/// at least this far from `π/2` (a clean angle closer to the imaginary axis
/// is indistinguishable from a slowly diverging ratio on a finite grid).
const THETA_VALID_MARGIN: Real = 0.02;

/// Outer-window trend slope above which an imaginary-axis ratio is not
/// accepted as "bounded" by the sector scan's validity gate.
const AXIS_SLOPE_MAX: Real = 0.005;

// ---------------------------------------------------------------------------
// Verdict types.

/// Three-valued validity call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Validity {
    Valid,
    Invalid,
    Inconclusive,
}

/// Combined verdict of the routes that ran, with their evidence.
#[derive(Debug, Clone, Serialize)]
pub struct HelpVerdict {
    pub validity: Validity,
    /// Largest sampled `|Re m(iy)|/Im m(iy)` over the two spectral windows.
    pub sup_ratio: Real,
    /// Smallest certified clean sector angle, when the sector scan ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Real>,
    /// Upper estimate `1/cos θ₀` of the best constant, when available.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_upper: Option<Real>,
    /// Largest finite test-function lower bound for `K`, when those ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_lower: Option<Real>,
    /// Two conclusive routes contradicted each other (the verdict is then
    /// withheld as `inconclusive`).
    pub routes_disagree: bool,
    /// Route-by-route notes, in the order the evidence was gathered.
    pub trail: Vec<String>,
    /// Sampled ratio window toward the spectral origin.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_origin: Option<RatioReport>,
    /// Sampled ratio window toward spectral infinity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_infinity: Option<RatioReport>,
    /// Coefficient-route evidence (potential-free problems).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficient: Option<CoefficientCheck>,
    /// Zero-energy integrability evidence (potential problems).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potential_route: Option<PotentialRoute>,
}

fn verdict_word(v: BoundVerdict) -> &'static str {
    match v {
        BoundVerdict::Bounded => "bounded",
        BoundVerdict::Unbounded => "unbounded",
        BoundVerdict::Inconclusive => "inconclusive",
    }
}

fn validity_word(v: Validity) -> &'static str {
    match v {
        Validity::Valid => "valid",
        Validity::Invalid => "invalid",
        Validity::Inconclusive => "inconclusive",
    }
}

/// Validity implied by the two window verdicts alone.
fn window_validity(origin: &RatioReport, infinity: &RatioReport) -> Validity {
    let vs = [origin.verdict, infinity.verdict];
    if vs.contains(&BoundVerdict::Unbounded) {
        Validity::Invalid
    } else if vs.iter().all(|v| *v == BoundVerdict::Bounded) {
        Validity::Valid
    } else {
        Validity::Inconclusive
    }
}

/// Merge the spectral-window route with a coefficient-side route.
///
/// Conclusive routes must agree; `inconclusive` never contradicts. A final
/// `valid` additionally requires both sampled windows to be certified
/// bounded (the necessity direction of the ratio criterion), so a
/// coefficient-route `valid` is downgraded when a window stayed open.
fn combine_routes(
    m_route: Validity,
    coeff_route: Validity,
    both_bounded: bool,
    trail: &mut Vec<String>,
) -> (Validity, bool) {
    let both_definite =
        m_route != Validity::Inconclusive && coeff_route != Validity::Inconclusive;
    if both_definite && m_route != coeff_route {
        trail.push(
            "the spectral-window route and the coefficient route disagree; the verdict is withheld"
                .into(),
        );
        return (Validity::Inconclusive, true);
    }
    let picked = if coeff_route != Validity::Inconclusive { coeff_route } else { m_route };
    if picked == Validity::Valid && !both_bounded {
        trail.push(
            "a valid verdict requires both spectral windows certified bounded; one stayed inconclusive"
                .into(),
        );
        return (Validity::Inconclusive, false);
    }
    (picked, false)
}

// ---------------------------------------------------------------------------
// Route 1: imaginary-axis ratio at both ends (potential-free problems).

/// Decide validity from boundedness of `Re m(iy)/Im m(iy)` at both spectral
/// ends, cross-checked against the coefficient criterion.
///
/// Requires a vanishing potential; use [`help_with_potential`] otherwise.
/// The verdict is assembled per [`combine_routes`]: the coefficient route
/// wins when conclusive (its verdicts are exact for symbolically classified
/// families), the windows otherwise, and any contradiction between two
/// conclusive routes is reported instead of resolved.
pub fn help_check(p: &HalfLineProblem, opts: &RatioOptions) -> Result<HelpVerdict> {
    ensure_no_potential(p, "help_check")?;
    let origin = ratio_criterion(p, SpectralEnd::Zero, RatioDirection::ReOverIm, opts)?;
    let infinity = ratio_criterion(p, SpectralEnd::Infinity, RatioDirection::ReOverIm, opts)?;
    let coeff = help_coefficient_check(p)?;

    let mut trail = Vec::new();
    for rep in [&origin, &infinity] {
        trail.push(format!(
            "imaginary-axis ratio |Re m|/Im m toward the spectral {}: {} (sup {:.6e}, outer trend slope {:+.4})",
            match rep.end {
                SpectralEnd::Zero => "origin",
                SpectralEnd::Infinity => "infinity",
            },
            verdict_word(rep.verdict),
            rep.sup,
            rep.trend_slope,
        ));
    }
    trail.extend(coeff.trail.iter().cloned());

    let m_route = window_validity(&origin, &infinity);
    let both_bounded = origin.verdict == BoundVerdict::Bounded
        && infinity.verdict == BoundVerdict::Bounded;
    let (validity, routes_disagree) =
        combine_routes(m_route, coeff.validity, both_bounded, &mut trail);
    trail.push(format!("assembled verdict: {}", validity_word(validity)));

    Ok(HelpVerdict {
        validity,
        sup_ratio: origin.sup.max(infinity.sup),
        theta0: None,
        k_upper: None,
        k_lower: None,
        routes_disagree,
        trail,
        window_origin: Some(origin),
        window_infinity: Some(infinity),
        coefficient: Some(coeff),
        potential_route: None,
    })
}

fn ensure_no_potential(p: &HalfLineProblem, what: &str) -> Result<()> {
    match p.q() {
        None => Ok(()),
        Some(q) if liouville::is_zero_potential(q) => Ok(()),
        Some(_) => Err(Error::usage(format!(
            "{what} handles vanishing potentials; use the potential route for q ≥ 0",
        ))),
    }
}

// ---------------------------------------------------------------------------
// Route 2: sector scan.

/// Tunables of [`everitt_scan`].
#[derive(Debug, Clone, Copy)]
pub struct EverittOptions {
    /// Lower end of the `|λ|` grid.
    pub rho_lo: Real,
    /// Upper end of the `|λ|` grid.
    pub rho_hi: Real,
    /// Log-uniform samples per decade of `|λ|`.
    pub pts_per_decade: usize,
    /// Bisection tolerance in the sector angle (radians).
    pub theta_tol: Real,
    pub m_opts: MOptions,
}

impl Default for EverittOptions {
    fn default() -> Self {
        EverittOptions {
            rho_lo: 1e-6,
            rho_hi: 1e6,
            pts_per_decade: 8,
            theta_tol: 0.01,
            m_opts: MOptions::default(),
        }
    }
}

/// One sector sample of the normalized positivity margin.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SectorSample {
    /// Ray angle `arg λ`.
    pub phi: Real,
    /// Modulus `|λ|`.
    pub rho: Real,
    /// `Im(λ² m)/|λ² m|`; positive values violate the sector condition.
    pub margin: Real,
    /// Relative evaluation enclosure of `m`.
    pub enclosure_rel: Real,
}

impl SectorSample {
    /// Whether this sample violates `Im(λ² m) ≤ 0` beyond its enclosure.
    fn violates(&self) -> bool {
        self.margin > self.violation_tolerance()
    }

    fn violation_tolerance(&self) -> Real {
        3.0 * self.enclosure_rel + 1e-9
    }
}

/// Result of the sector scan.
#[derive(Debug, Clone, Serialize)]
pub struct EverittReport {
    /// `valid` requires a clean angle well inside the quadrant *and*
    /// non-drifting axis ratios at both spectral ends; `invalid` means even
    /// the widest probed sector has a positivity violation; anything else is
    /// `inconclusive` (typically a slow divergence the finite grid cannot
    /// separate from boundedness).
    pub validity: Validity,
    /// Smallest certified clean sector angle (radians).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Real>,
    /// `1/cos θ₀`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<Real>,
    /// Worst violating sample at the largest failing angle probed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<SectorSample>,
    /// Outer trend slopes of the axis ratio at (origin, infinity), from the
    /// boundedness gate; absent when the scan already failed outright.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis_slopes: Option<(Real, Real)>,
    /// Samples along both rays of the decisive angle (the certified `θ₀`,
    /// or the widest probe when that already failed).
    pub samples: Vec<SectorSample>,
    pub trail: Vec<String>,
}

/// Evaluate both rays `arg λ ∈ {θ, π−θ}` of one sector angle over the
/// log-grid of `|λ|`; returns all samples and the worst violation, if any.
fn ray_pass(
    p: &HalfLineProblem,
    theta: Real,
    opts: &EverittOptions,
) -> Result<(Option<SectorSample>, Vec<SectorSample>)> {
    let decades = (opts.rho_hi / opts.rho_lo).log10();
    let n = ((decades * opts.pts_per_decade as Real).round() as usize).max(1);
    let mut points = Vec::with_capacity(2 * (n + 1));
    for &phi in &[theta, std::f64::consts::PI - theta] {
        for j in 0..=n {
            let rho = opts.rho_lo * 10f64.powf(j as Real / opts.pts_per_decade as Real);
            points.push((phi, rho.min(opts.rho_hi)));
        }
    }
    let samples: Vec<SectorSample> = points
        .par_iter()
        .map(|&(phi, rho)| -> Result<SectorSample> {
            let lam = Cplx::from_polar(rho, phi);
            let sample = m_eval(p, lam, BoundaryKind::Neumann, &opts.m_opts).map_err(|e| {
                Error::numerics(format!(
                    "sector sampling failed at arg λ = {phi:.4}, |λ| = {rho:.3e} \
                     (grid [{:.1e}, {:.1e}]): {e}",
                    opts.rho_lo, opts.rho_hi
                ))
            })?;
            let z = lam * lam * sample.m;
            let margin = z.im / z.norm().max(TINY);
            Ok(SectorSample {
                phi,
                rho,
                margin,
                enclosure_rel: sample.enclosure / sample.m.norm().max(TINY),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = samples
        .iter()
        .filter(|s| s.violates())
        .max_by(|a, b| {
            (a.margin - a.violation_tolerance()).total_cmp(&(b.margin - b.violation_tolerance()))
        })
        .copied();
    Ok((worst, samples))
}

/// Bisect for the smallest sector angle `θ₀` on which `Im(λ² m(λ)) ≤ 0`
/// along both rays `arg λ ∈ {θ, π−θ}`, and report `K = 1/cos θ₀`.
///
/// The positivity test runs over a log-grid of `|λ|` (the known failure
/// modes concentrate at the small- and large-`|λ|` ends, which the grid
/// covers symmetrically). A clean widest probe plus a clean bisection
/// certify `θ₀` only up to the grid: a ratio diverging slower than any
/// power can hide beyond the grid ends, so a `valid` conclusion further
/// requires the axis ratios at both spectral ends to show no outward drift.
/// The angle below [`THETA_MIN`] is never probed; if even the first
/// bisection floor is clean, `θ₀` is reported at the floor as an upper
/// bound.
pub fn everitt_scan(p: &HalfLineProblem, opts: &EverittOptions) -> Result<EverittReport> {
    if !(opts.rho_lo > 0.0 && opts.rho_hi > opts.rho_lo) || opts.pts_per_decade == 0 {
        return Err(Error::usage("sector scan needs a nonempty positive |λ| grid"));
    }
    if !(opts.theta_tol > 1e-4 && opts.theta_tol < 0.5) {
        return Err(Error::usage("sector bisection tolerance must lie in (1e-4, 0.5) rad"));
    }
    let mut trail = Vec::new();
    let top = FRAC_PI_2 - opts.theta_tol;
    let (top_worst, top_samples) = ray_pass(p, top, opts)?;
    if let Some(v) = top_worst {
        trail.push(format!(
            "the widest probed sector (θ = {top:.4} rad) still violates positivity at \
             arg λ = {:.4}, |λ| = {:.3e} (margin {:+.3e}); no clean sector exists within reach",
            v.phi, v.rho, v.margin
        ));
        return Ok(EverittReport {
            validity: Validity::Invalid,
            theta0: None,
            k: None,
            violation: Some(v),
            axis_slopes: None,
            samples: top_samples,
            trail,
        });
    }
    trail.push(format!("the sector at θ = {top:.4} rad is clean on the grid"));

    let mut lo = THETA_MIN;
    let mut hi = top;
    let mut best_samples = top_samples;
    let mut last_violation: Option<SectorSample> = None;
    while hi - lo > opts.theta_tol {
        let mid = 0.5 * (lo + hi);
        let (worst, samples) = ray_pass(p, mid, opts)?;
        match worst {
            Some(v) => {
                last_violation = Some(v);
                lo = mid;
            }
            None => {
                hi = mid;
                best_samples = samples;
            }
        }
    }
    let theta0 = hi;
    let k = 1.0 / theta0.cos();
    match last_violation {
        Some(v) => trail.push(format!(
            "smallest clean angle θ₀ = {theta0:.4} rad (violation at θ = {lo:.4}, \
             arg λ = {:.4}, |λ| = {:.3e}); K = 1/cos θ₀ = {k:.4}",
            v.phi, v.rho
        )),
        None => trail.push(format!(
            "every probed angle down to the floor {THETA_MIN:.3} rad is clean; \
             θ₀ ≤ {theta0:.4} is an upper bound and K = {k:.4} (near the floor, K ≈ 1)"
        )),
    }

    // Validity gate: a clean sector certifies validity only as far as the
    // grid reaches. Require the clean angle to sit well inside the quadrant
    // and the axis ratios to show no outward drift at either end.
    let ratio_opts = RatioOptions { m_opts: opts.m_opts, ..RatioOptions::default() };
    let origin = ratio_criterion(p, SpectralEnd::Zero, RatioDirection::ReOverIm, &ratio_opts)?;
    let infinity =
        ratio_criterion(p, SpectralEnd::Infinity, RatioDirection::ReOverIm, &ratio_opts)?;
    let slopes = (origin.trend_slope, infinity.trend_slope);
    let sector_ok = theta0 <= FRAC_PI_2 - THETA_VALID_MARGIN;
    let axis_ok = slopes.0 <= AXIS_SLOPE_MAX && slopes.1 <= AXIS_SLOPE_MAX;
    let validity = if sector_ok && axis_ok { Validity::Valid } else { Validity::Inconclusive };
    if !sector_ok {
        trail.push(format!(
            "θ₀ lies within {THETA_VALID_MARGIN:.3} rad of π/2, indistinguishable from a slow \
             divergence on a finite grid; validity stays inconclusive"
        ));
    }
    if !axis_ok {
        trail.push(format!(
            "the axis ratio drifts outward (trend slopes {:+.4} at the origin, {:+.4} at \
             infinity exceed {AXIS_SLOPE_MAX}); the clean sector is not trusted as a validity \
             certificate",
            slopes.0, slopes.1
        ));
    }
    trail.push(format!("sector-scan verdict: {}", validity_word(validity)));

    Ok(EverittReport {
        validity,
        theta0: Some(theta0),
        k: Some(k),
        violation: last_violation,
        axis_slopes: Some(slopes),
        samples: best_samples,
        trail,
    })
}

// ---------------------------------------------------------------------------
// Route 3: coefficient criterion.

/// Which integrability regime routed the coefficient verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientCase {
    /// `w ∈ L¹(0,b)`: validity ⇔ positive increase of `R∘W⁻¹` at `0`.
    IntegrableWeight,
    /// `r ∈ L¹(0,b)`, `w ∉ L¹(0,b)`: never valid.
    IntegrableScale,
    /// Neither integrable: validity ⇔ positive increase of `R∘W⁻¹` at both
    /// `0` and `∞`.
    DivergentBoth,
}

/// Coefficient-route verdict with the positive-increase evidence.
#[derive(Debug, Clone, Serialize)]
pub struct CoefficientCheck {
    pub case: CoefficientCase,
    pub validity: Validity,
    /// Positive-increase report of `R∘W⁻¹` at `0`, when consulted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi_zero: Option<PiReport>,
    /// Positive-increase report of `R∘W⁻¹` at `∞`, when consulted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi_upper: Option<PiReport>,
    pub trail: Vec<String>,
}

fn pi_validity(rep: &PiReport) -> Validity {
    match rep.verdict {
        PiVerdict::Yes => Validity::Valid,
        PiVerdict::No => Validity::Invalid,
        PiVerdict::Inconclusive => Validity::Inconclusive,
    }
}

fn pi_word(v: PiVerdict) -> &'static str {
    match v {
        PiVerdict::Yes => "positively increasing",
        PiVerdict::No => "not positively increasing",
        PiVerdict::Inconclusive => "inconclusive",
    }
}

/// Decide validity from the coefficient distributions alone: positive
/// increase of the composition `R∘W⁻¹` at the ends of its domain, routed by
/// which of `w`, `r` has finite total mass.
pub fn help_coefficient_check(p: &HalfLineProblem) -> Result<CoefficientCheck> {
    ensure_no_potential(p, "the coefficient criterion")?;
    let w_dist = Distribution::new(p.w())?;
    let r_dist = Distribution::new(p.r())?;
    let map = compose_distributions(&r_dist, &w_dist);
    let mut trail = Vec::new();

    if w_dist.total().is_finite() {
        let pi = positively_increasing(&map, End::Zero)?;
        let validity = pi_validity(&pi);
        trail.push(format!(
            "w is integrable up to b (mass {:.6e}); validity ⇔ positive increase of R∘W⁻¹ \
             at 0: {}",
            w_dist.total(),
            pi_word(pi.verdict)
        ));
        return Ok(CoefficientCheck {
            case: CoefficientCase::IntegrableWeight,
            validity,
            pi_zero: Some(pi),
            pi_upper: None,
            trail,
        });
    }
    if r_dist.total().is_finite() {
        trail.push(format!(
            "r is integrable up to b (mass {:.6e}) while w is not: the inequality cannot hold",
            r_dist.total()
        ));
        return Ok(CoefficientCheck {
            case: CoefficientCase::IntegrableScale,
            validity: Validity::Invalid,
            pi_zero: None,
            pi_upper: None,
            trail,
        });
    }
    let pi0 = positively_increasing(&map, End::Zero)?;
    let pi_inf = positively_increasing(&map, End::Upper)?;
    trail.push(format!(
        "neither w nor r is integrable up to b; R∘W⁻¹ is {} at 0 and {} at ∞",
        pi_word(pi0.verdict),
        pi_word(pi_inf.verdict)
    ));
    let validity = match (pi_validity(&pi0), pi_validity(&pi_inf)) {
        (Validity::Invalid, _) | (_, Validity::Invalid) => Validity::Invalid,
        (Validity::Valid, Validity::Valid) => Validity::Valid,
        _ => Validity::Inconclusive,
    };
    Ok(CoefficientCheck {
        case: CoefficientCase::DivergentBoth,
        validity,
        pi_zero: Some(pi0),
        pi_upper: Some(pi_inf),
        trail,
    })
}

// ---------------------------------------------------------------------------
// Route 4: interval test-function lower bounds.

/// One interval lower bound for the best constant.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KBound {
    /// Position in the supplied sequence (1-based).
    pub n: usize,
    /// Knee of the trial function.
    pub a: Real,
    /// Right end of its support.
    pub b: Real,
    /// `R(a)`.
    pub big_a: Real,
    /// `R(b)`.
    pub big_b: Real,
    /// The lower bound `Kₙ ≤ K`.
    pub k: Real,
}

/// Explicit lower bounds for the best constant from piecewise-linear trial
/// functions: for `0 < aₙ < bₙ < b`,
///
/// ```text
///     1/Kₙ = (R(bₙ)/R(aₙ) − 1)² + aₙ/(bₙ−aₙ) · (R(aₙ)/R(bₙ))².
/// ```
///
/// `Kₙ → ∞` along a sequence of intervals certifies that no finite constant
/// works. The formula assumes the unit-weight normalization `w ≡ 1`
/// (substitute the problem first otherwise) and a vanishing potential.
pub fn help_lower_bound(p: &HalfLineProblem, pairs: &[(Real, Real)]) -> Result<Vec<KBound>> {
    ensure_no_potential(p, "the interval lower bounds")?;
    if !liouville::is_unit_scale(p.w()) {
        return Err(Error::unsupported(
            "the interval lower bounds assume the unit-weight normalization w ≡ 1; \
             substitute the problem first",
        ));
    }
    if pairs.is_empty() {
        return Err(Error::usage("no intervals supplied"));
    }
    let r_dist = Distribution::new(p.r())?;
    pairs
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| {
            if !(0.0 < a && a < b && b < p.b()) {
                return Err(Error::usage(format!(
                    "interval #{}: need 0 < a < b < the interval end (got a = {a:.6e}, \
                     b = {b:.6e})",
                    i + 1
                )));
            }
            let big_a = r_dist.eval(a);
            let big_b = r_dist.eval(b);
            if !(big_a > 0.0) || !big_b.is_finite() {
                return Err(Error::data(format!(
                    "interval #{}: R must be positive and finite on it (R(a) = {big_a:.3e}, \
                     R(b) = {big_b:.3e})",
                    i + 1
                )));
            }
            let ratio_term = (big_b / big_a - 1.0).powi(2);
            let weight_term = a / (b - a) * (big_a / big_b).powi(2);
            Ok(KBound { n: i + 1, a, b, big_a, big_b, k: 1.0 / (ratio_term + weight_term) })
        })
        .collect()
}

/// Named interval sequences for [`help_lower_bound`].
///
/// * `"factorial"` — `aₙ = (2n)!`, `bₙ = (2n+1)!`: the canonical plateau
///   intervals of the factorial weight; `Kₙ ≈ 2n` grows without bound.
/// * `"factorial-strided"` — `aₖ = (2k²)!`, `bₖ = (2k²+1)!`: a strided
///   plateau subsequence reaching `K > 100` within the first eight terms.
/// * `"inverse"` — `aₙ = 1/n`, `bₙ = 1` (from `n = 2`): probes the origin.
/// * `"halved"` — `aₙ = n/2`, `bₙ = n`: fixed shape at every scale.
///
/// Entries whose factorials overflow the floating range are dropped.
pub fn named_pairs(name: &str, count: usize) -> Result<Vec<(Real, Real)>> {
    if count == 0 || count > 64 {
        return Err(Error::usage("interval count must lie in 1..=64"));
    }
    fn factorial(k: u64) -> Real {
        (2..=k).map(|i| i as Real).product()
    }
    let pairs: Vec<(Real, Real)> = match name {
        "factorial" => (1..=count as u64)
            .map(|n| {
                let a = factorial(2 * n);
                (a, a * (2 * n + 1) as Real)
            })
            .collect(),
        "factorial-strided" => (1..=count as u64)
            .map(|k| {
                let m = 2 * k * k;
                let a = factorial(m);
                (a, a * (m + 1) as Real)
            })
            .collect(),
        "inverse" => (2..=count as u64 + 1).map(|n| (1.0 / n as Real, 1.0)).collect(),
        "halved" => (1..=count as u64).map(|n| (0.5 * n as Real, n as Real)).collect(),
        other => {
            return Err(Error::usage(format!(
                "unknown interval sequence '{other}' (expected factorial, factorial-strided, \
                 inverse, or halved)",
            )))
        }
    };
    let pairs: Vec<(Real, Real)> =
        pairs.into_iter().filter(|&(a, b)| a.is_finite() && b.is_finite()).collect();
    if pairs.is_empty() {
        return Err(Error::usage(format!(
            "every interval of sequence '{name}' overflows the floating range at count {count}",
        )));
    }
    Ok(pairs)
}

// ---------------------------------------------------------------------------
// Potentials: the zero-energy trichotomy.

/// Which integrability regime of the zero-energy solution `c₀` routed the
/// potential verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialCase {
    /// `c₀ ∈ L²((0,b); w)`: validity ⇔ positive increase of `W⁻¹` at `0`.
    SolutionWeightIntegrable,
    /// `1/c₀ ∈ L²(0,b)` while `c₀ ∉ L²_w`: never valid.
    InverseSquareIntegrable,
    /// Neither holds; for a nonnegative potential this forces `c₀ ≡ 1`
    /// (convexity), and validity ⇔ positive increase of `W⁻¹` at `∞`.
    NeitherIntegrable,
    /// The integrability evidence did not resolve.
    Undetermined,
}

/// Zero-energy integrability evidence attached to a potential verdict.
#[derive(Debug, Clone, Serialize)]
pub struct PotentialRoute {
    pub case: PotentialCase,
    /// `c₀ ∈ L²((0,b); w)`?
    pub c0_in_l2w: MembershipReport,
    /// `1/c₀ ∈ L²(0,b)`?
    pub inv_c0_in_l2: MembershipReport,
    /// The positive-increase report the case consulted, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi: Option<PiReport>,
}

/// Decide validity for a nonnegative potential with unit scale.
///
/// The zero-energy solution `c₀` of [`crate::liouville`] splits the problem
/// into three regimes by integrability, mirrored in [`PotentialCase`]; the
/// imaginary-axis windows of the full problem (potential included) run
/// alongside and the two routes are merged per [`combine_routes`].
///
/// Since `c₀` is convex with `c₀(0) = 1`, `c₀′(0) = 0`, a potential that is
/// nonnegative and not identically zero forces `c₀` to grow at least
/// linearly, so `1/c₀ ∈ L²` and the verdict lands in the second regime
/// (never valid). The third regime is exactly the vanishing potential.
pub fn help_with_potential(p: &HalfLineProblem, opts: &RatioOptions) -> Result<HelpVerdict> {
    if !liouville::is_unit_scale(p.r()) {
        return Err(Error::unsupported(
            "the potential route assumes a unit scale r ≡ 1; transform the problem first",
        ));
    }
    if let Some(q) = p.q() {
        // Cheap sign probe before the more expensive integration; the
        // integration itself re-checks sign effects via the zero-energy
        // solution.
        let hi = if q.b().is_finite() { q.b() * (1.0 - 1e-9) } else { 1e6 };
        for j in 0..=128 {
            let x = hi * (j as Real / 128.0).powi(3);
            if q.value(x.max(1e-8)) < -1e-9 {
                return Err(Error::unsupported(
                    "the potential route requires a nonnegative potential",
                ));
            }
        }
    }
    let tr = liouville::transform(p)?;
    if !tr.c0.nonneg_potential {
        return Err(Error::unsupported(
            "the potential route requires a nonnegative potential",
        ));
    }

    let origin = ratio_criterion(p, SpectralEnd::Zero, RatioDirection::ReOverIm, opts)?;
    let infinity = ratio_criterion(p, SpectralEnd::Infinity, RatioDirection::ReOverIm, opts)?;

    let mut trail = Vec::new();
    for rep in [&origin, &infinity] {
        trail.push(format!(
            "imaginary-axis ratio |Re m|/Im m (potential included) toward the spectral {}: {} \
             (sup {:.6e}, outer trend slope {:+.4})",
            match rep.end {
                SpectralEnd::Zero => "origin",
                SpectralEnd::Infinity => "infinity",
            },
            verdict_word(rep.verdict),
            rep.sup,
            rep.trend_slope,
        ));
    }

    let l2w = tr.c0_in_l2w.clone();
    let inv = tr.inv_c0_in_l2.clone();
    trail.push(format!(
        "zero-energy solution: c₀ ∈ L²_w is {:?}; 1/c₀ ∈ L² is {:?}",
        l2w.verdict, inv.verdict
    ));

    let (case, coeff_route, pi) = match (l2w.verdict, inv.verdict) {
        (Membership::Undetermined, _) | (_, Membership::Undetermined) => {
            trail.push("the integrability evidence did not resolve; verdict withheld".into());
            (PotentialCase::Undetermined, Validity::Inconclusive, None)
        }
        (Membership::Yes, _) => {
            let w_dist = Distribution::new(p.w())?;
            let r_dist = Distribution::new(p.r())?;
            let map = compose_distributions(&r_dist, &w_dist);
            let pi = positively_increasing(&map, End::Zero)?;
            trail.push(format!(
                "c₀ is square-integrable against the weight; validity ⇔ positive increase of \
                 W⁻¹ at 0: {}",
                pi_word(pi.verdict)
            ));
            let v = pi_validity(&pi);
            (PotentialCase::SolutionWeightIntegrable, v, Some(pi))
        }
        (Membership::No, Membership::Yes) => {
            trail.push(
                "1/c₀ is square-integrable while c₀ is not square-integrable against the \
                 weight: the inequality cannot hold"
                    .into(),
            );
            (PotentialCase::InverseSquareIntegrable, Validity::Invalid, None)
        }
        (Membership::No, Membership::No) => {
            if tr.identity {
                let w_dist = Distribution::new(&tr.w_tilde)?;
                let r_dist = Distribution::new(&tr.r_tilde)?;
                let map = compose_distributions(&r_dist, &w_dist);
                let pi = positively_increasing(&map, End::Upper)?;
                trail.push(format!(
                    "neither integrability holds, so the potential vanishes and the \
                     substitution is the identity; validity ⇔ positive increase of W⁻¹ \
                     at ∞: {}",
                    pi_word(pi.verdict)
                ));
                let v = pi_validity(&pi);
                (PotentialCase::NeitherIntegrable, v, Some(pi))
            } else {
                // For q ≥ 0 this regime forces c₀ ≡ 1; reaching it with a
                // non-trivial substitution means the memberships contradict
                // convexity, so the evidence is not trusted.
                trail.push(
                    "the integrability evidence contradicts the convexity of the zero-energy \
                     solution; verdict withheld"
                        .into(),
                );
                (PotentialCase::Undetermined, Validity::Inconclusive, None)
            }
        }
    };

    let m_route = window_validity(&origin, &infinity);
    let both_bounded = origin.verdict == BoundVerdict::Bounded
        && infinity.verdict == BoundVerdict::Bounded;
    let (validity, routes_disagree) = combine_routes(m_route, coeff_route, both_bounded, &mut trail);
    trail.push(format!("assembled verdict: {}", validity_word(validity)));

    Ok(HelpVerdict {
        validity,
        sup_ratio: origin.sup.max(infinity.sup),
        theta0: None,
        k_upper: None,
        k_lower: None,
        routes_disagree,
        trail,
        window_origin: Some(origin),
        window_infinity: Some(infinity),
        coefficient: None,
        potential_route: Some(PotentialRoute { case, c0_in_l2w: l2w, inv_c0_in_l2: inv, pi }),
    })
}
