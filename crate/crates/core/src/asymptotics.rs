//! One-term models for the m-function near the spectral origin and near
//! spectral infinity, and boundedness criteria for the component ratios
//! `Re m / Im m` and `Im m / Re m` along the imaginary axis.
//!
//! The model: if the composition `R ∘ W⁻¹` of the coefficient
//! distributions is regularly varying of index `a > 0` at the coefficient
//! end matching the spectral window (the origin matches spectral infinity,
//! the far end matches the spectral origin), then with `ν = a/(1+a)`,
//!
//! ```text
//!     m(μ ρ)  ≈  K_ν · (-μ)^{-ν} · f(ρ),        ρ → window end,
//! ```
//!
//! uniformly over rays `μ` in the upper half-plane, where `f` is the
//! generalized inverse of `F(x) = 1/(x · (W ∘ R⁻¹)(x))` and
//! `K_ν = ν^{1-ν} Γ(ν) / ((1-ν)^ν Γ(1-ν))`.  Slow variation is the `ν = 0`
//! end of the family, rapid variation the `ν = 1` end; both have `K = 1`.
//! An integrable coefficient at the far end replaces the model by its
//! limiting form: `m(λ) ~ -a/λ` with `a = 1/W(b-)` when the weight is
//! integrable, `m(λ) → R(b-)` when the scale is integrable but the weight
//! is not.
//!
//! The ratio criteria sample `m(iy)` over a six-decade window and compare
//! the observed trend of a component ratio with the positive-increase
//! prediction made from the coefficient distributions alone.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::coefficients::{compose_distributions, Distribution, End, Family, MonotoneMap};
use crate::error::{Error, Result};
use crate::num::gamma::gamma;
use crate::num::roots::bisect_monotone;
use crate::regvar::{classify_variation, positively_increasing, PiVerdict, VariationKind};
use crate::weyl::{m_eval, BoundaryKind, HalfLineProblem, MOptions};
use crate::{Cplx, Real, TINY};

/// The two ends of the spectral window on the imaginary axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectralEnd {
    /// `λ → 0`; governed by the coefficients near `b`.
    Zero,
    /// `|λ| → ∞`; governed by the coefficients near the origin.
    Infinity,
}

impl SpectralEnd {
    /// The coefficient end whose behaviour governs this spectral end.
    pub fn matching_coefficient_end(self) -> End {
        match self {
            SpectralEnd::Infinity => End::Zero,
            SpectralEnd::Zero => End::Upper,
        }
    }
}

/// The sampling rays used when checking a model: the imaginary axis and
/// the ray at 3π/4, far from both branch cuts.
pub fn mu_rays() -> [Cplx; 2] {
    [Cplx::new(0.0, 1.0), Cplx::from_polar(1.0, 3.0 * FRAC_PI_4)]
}

/// The model constant `K_ν = ν^{1-ν} Γ(ν) / ((1-ν)^ν Γ(1-ν))` on `[0, 1]`,
/// with the continuous limits `K_0 = K_1 = 1`.
///
/// Satisfies `K_ν · K_{1-ν} = 1` and `K_{1/2} = 1`.
pub fn k_constant(nu: Real) -> Result<Real> {
    if !(0.0..=1.0).contains(&nu) {
        return Err(Error::usage(format!(
            "the model exponent must lie in [0, 1], got {nu}"
        )));
    }
    if nu == 0.0 || nu == 1.0 {
        return Ok(1.0);
    }
    let k = nu.powf(1.0 - nu) * gamma(nu) / ((1.0 - nu).powf(nu) * gamma(1.0 - nu));
    Ok(k)
}

/// Principal-branch `(-λ)^{-ν}`; maps the upper half-plane into the
/// sector `|arg| ≤ πν/2` below the positive real axis.
pub fn neg_pow(lambda: Cplx, nu: Real) -> Cplx {
    (-lambda).powf(-nu)
}

/// What the model's exponent and scale function rest on.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "basis", rename_all = "kebab-case")]
pub enum ModelBasis {
    /// Indices derived exactly from coefficient metadata.
    Symbolic,
    /// Indices estimated from numeric ratio tables of the composed
    /// distribution map.
    Numeric,
    /// An integrable coefficient at the far end forces the limiting form
    /// directly; no scaling family is involved.
    Limiting { reason: String },
}

/// A one-term model `m(μρ) ≈ k · (-μ)^{-ν} · f(ρ)` at one spectral end.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoteModel {
    pub end: SpectralEnd,
    /// Exponent `ν ∈ [0, 1]` of the ray factor.
    pub nu: Real,
    /// The constant `K_ν`.
    pub k: Real,
    /// Karamata class of `R ∘ W⁻¹` at the matching coefficient end, when
    /// the scaling-family route was taken.
    pub composed_class: Option<VariationKind>,
    pub basis: ModelBasis,
    /// The scale factor `f`; see [`AsymptoteModel::predict`].
    #[serde(skip)]
    pub f: MonotoneMap,
    /// Human-readable form of `f`.
    pub f_label: String,
}

impl AsymptoteModel {
    /// The model value at `λ = μ|λ|`: `k · (-μ)^{-ν} · f(|λ|)`.
    pub fn predict(&self, lambda: Cplx) -> Cplx {
        let rho = lambda.norm();
        self.k * neg_pow(lambda / rho, self.nu) * self.f.eval(rho)
    }
}

/// Pure-power data `(c, a)` of a single-piece profile `c x^a` on `(0, ∞)`.
fn pure_power(profile: &crate::coefficients::Profile) -> Option<(Real, Real)> {
    let spec = profile.to_spec();
    if spec.family != Family::PowerLog {
        return None;
    }
    let [seg] = spec.segments.as_slice() else {
        return None;
    };
    (seg.from == 0.0 && seg.to.is_none() && seg.p == 0 && seg.shift == 0.0 && seg.edge.is_none())
        .then_some((seg.c, seg.a))
}

/// The generalized inverse `f` of `F(x) = 1/(x · (W ∘ R⁻¹)(x))`:
/// `f(ρ)` solves `x · (W ∘ R⁻¹)(x) = 1/ρ`, saturating at the ends of the
/// computable range.
fn scale_inverse(w_dist: &Distribution, r_dist: &Distribution, w_profile: &crate::coefficients::Profile, r_profile: &crate::coefficients::Profile) -> MonotoneMap {
    if let (Some((cw, aw)), Some((cr, ar))) = (pure_power(w_profile), pure_power(r_profile)) {
        // W = Cw x^{Aw}, R = Cr x^{Ar}; x·(W∘R⁻¹)(x) = s x^{1+Aw/Ar}.
        let a_w = aw + 1.0;
        let a_r = ar + 1.0;
        let c_w = cw / a_w;
        let c_r = cr / a_r;
        let kx = a_w / a_r;
        let s = c_w / c_r.powf(kx);
        let expo = 1.0 / (1.0 + kx);
        return MonotoneMap::new(
            move |rho| (s * rho).powf(-expo),
            Real::INFINITY,
            None,
            None,
            format!("({s:.6e}*rho)^(-{expo:.6})"),
        );
    }
    let wr = compose_distributions(w_dist, r_dist);
    let cap = wr.domain_hi.min(1e306).ln();
    let lo_ln: Real = -300.0;
    let label = format!("generalized inverse of x*[{}]", wr.label);
    let g_ln = move |t: Real| {
        let x = t.exp();
        (x * wr.eval(x)).max(TINY).ln()
    };
    // Find the largest argument where the composition is still computable:
    // past the representable range of the inner inverse the product
    // collapses, breaking monotonicity.  `+inf` values are genuine upper
    // brackets; a drop or NaN marks the garbage region.
    let mut hi_ln = lo_ln.max(0.0_f64.min(cap));
    let mut g_hi = g_ln(hi_ln);
    let mut t = hi_ln;
    while t < cap {
        let t_next = (t + 2.0).min(cap);
        let v = g_ln(t_next);
        if v.is_nan() || v < g_hi {
            break;
        }
        hi_ln = t_next;
        g_hi = v;
        t = t_next;
    }
    let g_lo = g_ln(lo_ln);
    MonotoneMap::new(
        move |rho: Real| {
            let target = (1.0 / rho).ln();
            if g_lo >= target {
                return lo_ln.exp();
            }
            if g_hi <= target {
                return hi_ln.exp();
            }
            match bisect_monotone(&g_ln, lo_ln, hi_ln, target, 1e-13) {
                Ok(t) => t.exp(),
                Err(_) => Real::NAN,
            }
        },
        Real::INFINITY,
        None,
        None,
        label,
    )
}

/// Build the one-term model for `m` at the given spectral end.
///
/// Requires a vanishing potential.  At the spectral origin an integrable
/// weight (or integrable scale) short-circuits to the limiting form; at
/// either end the scaling-family route classifies `R ∘ W⁻¹` at the
/// matching coefficient end and fails if that classification is
/// inconclusive, or if a faster-than-power trend was seen only
/// numerically (a finite window cannot tell rapid variation from an
/// irregular staircase).
pub fn kasahara_model(p: &HalfLineProblem, end: SpectralEnd) -> Result<AsymptoteModel> {
    if p.q().is_some() {
        return Err(Error::unsupported(
            "the one-term spectral model requires a vanishing potential; \
             remove it with the potential-eliminating change of variables first",
        ));
    }
    let w_dist = Distribution::new(p.w())?;
    let r_dist = Distribution::new(p.r())?;

    if end == SpectralEnd::Zero {
        if w_dist.total().is_finite() {
            let a = 1.0 / w_dist.total();
            return Ok(AsymptoteModel {
                end,
                nu: 1.0,
                k: 1.0,
                composed_class: None,
                basis: ModelBasis::Limiting {
                    reason: format!(
                        "the weight has finite total mass {:.6e}; m(λ) ~ -a/λ with a = 1/W(b-)",
                        w_dist.total()
                    ),
                },
                f: MonotoneMap::new(move |rho| a / rho, Real::INFINITY, None, None, format!("{a:.6e}/rho")),
                f_label: format!("{a:.6e}/rho"),
            });
        }
        if r_dist.total().is_finite() {
            let a = r_dist.total();
            return Ok(AsymptoteModel {
                end,
                nu: 0.0,
                k: 1.0,
                composed_class: None,
                basis: ModelBasis::Limiting {
                    reason: format!(
                        "the scale is integrable while the weight is not; m(λ) → R(b-) = {a:.6e}"
                    ),
                },
                f: MonotoneMap::new(move |_| a, Real::INFINITY, None, None, format!("{a:.6e}")),
                f_label: format!("{a:.6e}"),
            });
        }
    }

    let rw = compose_distributions(&r_dist, &w_dist);
    let cend = end.matching_coefficient_end();
    let rep = classify_variation(&rw, cend)?;
    let nu = match rep.kind {
        VariationKind::Regular { index } if index > 0.0 => index / (1.0 + index),
        VariationKind::Regular { index } => {
            return Err(Error::data(format!(
                "the composed scale map R∘W⁻¹ has nonpositive index {index:.4} at the \
                 matching coefficient end; no one-term model applies"
            )));
        }
        VariationKind::Slow => 0.0,
        VariationKind::Rapid if rep.symbolic => 1.0,
        VariationKind::Rapid => {
            return Err(Error::data(
                "R∘W⁻¹ grows faster than any power over the sampled window; a numeric \
                 table cannot tell rapid variation from an irregular staircase, so the \
                 classification is effectively inconclusive",
            ));
        }
        VariationKind::Inconclusive => {
            return Err(Error::data(
                "the Karamata classification of R∘W⁻¹ at the matching coefficient end \
                 is inconclusive; no one-term model applies",
            ));
        }
    };
    let k = k_constant(nu)?;
    let f = scale_inverse(&w_dist, &r_dist, p.w(), p.r());
    let f_label = f.label.clone();
    Ok(AsymptoteModel {
        end,
        nu,
        k,
        composed_class: Some(rep.kind),
        basis: if rep.symbolic { ModelBasis::Symbolic } else { ModelBasis::Numeric },
        f,
        f_label,
    })
}

/// One scale `ρ` of a model check: relative deviation of `m(μρ)` from the
/// model on each sampling ray, next to the evaluation enclosure.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyRow {
    pub rho: Real,
    /// `|m / model - 1|` on each of [`mu_rays`].
    pub deviation: [Real; 2],
    /// Evaluation enclosure relative to the model magnitude, per ray.
    pub enclosure_rel: [Real; 2],
}

/// A model check over a range of scales.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub end: SpectralEnd,
    pub nu: Real,
    pub k: Real,
    pub rows: Vec<VerifyRow>,
    /// Per-decade maximum deviation, ordered toward the spectral end;
    /// keyed by the decade's lower power of ten.
    pub decade_max: Vec<(Real, Real)>,
}

/// Evaluate `m` on both sampling rays at each scale and report relative
/// deviations from the model, with per-decade maxima ordered toward the
/// model's spectral end.
pub fn verify_asymptote(
    p: &HalfLineProblem,
    model: &AsymptoteModel,
    rhos: &[Real],
    opts: &MOptions,
) -> Result<VerifyReport> {
    if rhos.is_empty() {
        return Err(Error::usage("no scales to check the model at"));
    }
    let rays = mu_rays();
    let mut rows = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::usage(format!("model scales must be positive, got {rho}")));
        }
        let base = model.k * model.f.eval(rho);
        let mut deviation = [0.0; 2];
        let mut enclosure_rel = [0.0; 2];
        for (i, &mu) in rays.iter().enumerate() {
            let lambda = mu * rho;
            let sample = m_eval(p, lambda, BoundaryKind::Neumann, opts)?;
            let pred = base * neg_pow(mu, model.nu);
            deviation[i] = (sample.m / pred - 1.0).norm();
            enclosure_rel[i] = sample.enclosure / pred.norm();
        }
        rows.push(VerifyRow { rho, deviation, enclosure_rel });
    }
    let mut buckets: BTreeMap<i32, Real> = BTreeMap::new();
    for row in &rows {
        let d = row.rho.log10().floor() as i32;
        let worst = row.deviation[0].max(row.deviation[1]);
        let slot = buckets.entry(d).or_insert(0.0);
        *slot = slot.max(worst);
    }
    let mut decade_max: Vec<(Real, Real)> =
        buckets.into_iter().map(|(d, v)| (10f64.powi(d), v)).collect();
    if model.end == SpectralEnd::Zero {
        decade_max.reverse();
    }
    Ok(VerifyReport { end: model.end, nu: model.nu, k: model.k, rows, decade_max })
}

/// Which component ratio of `m(iy)` to track.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatioDirection {
    /// `|Re m| / Im m`.
    ReOverIm,
    /// `Im m / |Re m|`.
    ImOverRe,
}

/// Boundedness verdict for a component ratio at a spectral end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundVerdict {
    Bounded,
    Unbounded,
    Inconclusive,
}

/// Tunables of [`ratio_criterion`].
#[derive(Debug, Clone, Copy)]
pub struct RatioOptions {
    /// Samples per decade of `y`.
    pub pts_per_decade: usize,
    /// Decades in the window: `(1, 10^d]` at infinity, `[10^{-d}, 1)` at
    /// the origin.
    pub decades: usize,
    pub m_opts: MOptions,
}

impl Default for RatioOptions {
    fn default() -> Self {
        RatioOptions { pts_per_decade: 8, decades: 6, m_opts: MOptions::default() }
    }
}

/// One sample of a component ratio.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RatioSample {
    pub y: Real,
    pub ratio: Real,
    /// Evaluation enclosure relative to `|m|`.
    pub enclosure_rel: Real,
}

/// A sampled component-ratio trend with its verdict and the
/// coefficient-side prediction.
#[derive(Debug, Clone, Serialize)]
pub struct RatioReport {
    pub end: SpectralEnd,
    pub direction: RatioDirection,
    /// Samples ordered toward the spectral end.
    pub samples: Vec<RatioSample>,
    pub sup: Real,
    pub median: Real,
    /// Least-squares slope of `ln ratio` against `±ln y` (oriented toward
    /// the end) over the outer two decades.
    pub trend_slope: Real,
    pub verdict: BoundVerdict,
    /// Positive-increase prediction from the coefficient distributions,
    /// when one applies.
    pub prediction: Option<BoundVerdict>,
    /// Which composed map and end the prediction looked at, or why none
    /// was available.
    pub prediction_basis: String,
    /// `Some(verdict == prediction)` when both sides are definite.
    pub agrees: Option<bool>,
}

fn fit_slope(pts: &[(Real, Real)]) -> Real {
    let n = pts.len() as Real;
    if pts.len() < 2 {
        return 0.0;
    }
    let ms = pts.iter().map(|p| p.0).sum::<Real>() / n;
    let mr = pts.iter().map(|p| p.1).sum::<Real>() / n;
    let num: Real = pts.iter().map(|p| (p.0 - ms) * (p.1 - mr)).sum();
    let den: Real = pts.iter().map(|p| (p.0 - ms).powi(2)).sum();
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn median_of(values: &[Real]) -> Real {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    if n == 0 {
        return Real::NAN;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// The coefficient-side boundedness prediction for one spectral end and
/// ratio direction: positive increase of `R∘W⁻¹` (for `Re/Im`) or
/// `W∘R⁻¹` (for `Im/Re`) at the matching coefficient end.
fn coefficient_prediction(
    p: &HalfLineProblem,
    end: SpectralEnd,
    direction: RatioDirection,
) -> (Option<BoundVerdict>, String) {
    if p.q().is_some() {
        return (
            None,
            "no coefficient prediction: the boundedness criteria require a vanishing potential"
                .into(),
        );
    }
    let built = (|| -> Result<(MonotoneMap, &'static str)> {
        let w_dist = Distribution::new(p.w())?;
        let r_dist = Distribution::new(p.r())?;
        Ok(match direction {
            RatioDirection::ReOverIm => (compose_distributions(&r_dist, &w_dist), "R∘W⁻¹"),
            RatioDirection::ImOverRe => (compose_distributions(&w_dist, &r_dist), "W∘R⁻¹"),
        })
    })();
    let (map, name) = match built {
        Ok(pair) => pair,
        Err(e) => return (None, format!("no coefficient prediction: {e}")),
    };
    let cend = end.matching_coefficient_end();
    let end_name = match cend {
        End::Zero => "0",
        End::Upper => "∞",
    };
    match positively_increasing(&map, cend) {
        Ok(rep) => match rep.verdict {
            PiVerdict::Yes => (
                Some(BoundVerdict::Bounded),
                format!("{name} is positively increasing at {end_name}"),
            ),
            PiVerdict::No => (
                Some(BoundVerdict::Unbounded),
                format!("{name} is not positively increasing at {end_name}"),
            ),
            PiVerdict::Inconclusive => (
                None,
                format!("positive increase of {name} at {end_name} is inconclusive"),
            ),
        },
        Err(e) => (None, format!("no coefficient prediction for {name} at {end_name}: {e}")),
    }
}

/// Sample a component ratio of `m(iy)` over the spectral window and judge
/// its boundedness, next to the coefficient-side prediction.
///
/// Verdict thresholds: unbounded needs a log-log trend slope of at least
/// `0.05` toward the end over the outer two decades *and* a supremum above
/// ten times the window median; bounded needs a slope of at most `0.005`
/// together with either a supremum below three times the median or a ratio
/// at the end-nearest sample no larger than the median (a ratio decaying
/// toward the limit attains its supremum at the far edge of the window,
/// which says nothing about the end); anything else is inconclusive.
pub fn ratio_criterion(
    p: &HalfLineProblem,
    end: SpectralEnd,
    direction: RatioDirection,
    opts: &RatioOptions,
) -> Result<RatioReport> {
    if opts.pts_per_decade == 0 || opts.decades < 3 {
        return Err(Error::usage(
            "the ratio window needs at least three decades and one sample per decade",
        ));
    }
    let n = opts.pts_per_decade * opts.decades;
    let mut samples = Vec::with_capacity(n);
    let mut fit_pts = Vec::new();
    let s_of = |y: Real| match end {
        SpectralEnd::Infinity => y.ln(),
        SpectralEnd::Zero => -y.ln(),
    };
    for k in 1..=n {
        let exponent = k as Real / opts.pts_per_decade as Real;
        let y = match end {
            SpectralEnd::Infinity => 10f64.powf(exponent),
            SpectralEnd::Zero => 10f64.powf(-exponent),
        };
        let sample = m_eval(p, Cplx::new(0.0, y), BoundaryKind::Neumann, &opts.m_opts)?;
        let (re, im) = (sample.m.re, sample.m.im);
        let ratio = match direction {
            RatioDirection::ReOverIm => re.abs() / im.max(TINY),
            RatioDirection::ImOverRe => im / re.abs().max(TINY),
        };
        samples.push(RatioSample {
            y,
            ratio,
            enclosure_rel: sample.enclosure / sample.m.norm().max(TINY),
        });
        fit_pts.push((s_of(y), ratio.max(TINY).ln()));
    }
    let sup = samples.iter().map(|s| s.ratio).fold(Real::NEG_INFINITY, Real::max);
    let median = median_of(&samples.iter().map(|s| s.ratio).collect::<Vec<_>>());
    let s_max = fit_pts.iter().map(|p| p.0).fold(Real::NEG_INFINITY, Real::max);
    let cutoff = s_max - 2.0 * (10f64).ln() - 1e-9;
    let outer: Vec<(Real, Real)> = fit_pts.into_iter().filter(|p| p.0 >= cutoff).collect();
    let trend_slope = fit_slope(&outer);
    let end_ratio = samples.last().map_or(Real::INFINITY, |s| s.ratio);
    let verdict = if trend_slope >= 0.05 && sup > 10.0 * median {
        BoundVerdict::Unbounded
    } else if trend_slope <= 0.005 && (sup < 3.0 * median || end_ratio <= median) {
        BoundVerdict::Bounded
    } else {
        BoundVerdict::Inconclusive
    };
    let (prediction, prediction_basis) = coefficient_prediction(p, end, direction);
    let agrees = match (verdict, prediction) {
        (BoundVerdict::Inconclusive, _) => None,
        (_, None) => None,
        (v, Some(p)) => Some(v == p),
    };
    Ok(RatioReport {
        end,
        direction,
        samples,
        sup,
        median,
        trend_slope,
        verdict,
        prediction,
        prediction_basis,
        agrees,
    })
}

/// Endpoint integrability shortcut for the spectral origin.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "case", rename_all = "kebab-case")]
pub enum EndpointShortcut {
    /// `W(b-) < ∞`: `m(λ) ~ -a/λ`, so `Re m / Im m → 0` at the origin.
    WeightIntegrable { residue: Real },
    /// `R(b-) < ∞ ≤ W(b-)`: `m(λ) → R(b-) > 0`, so `Im m / Re m → 0`.
    ScaleIntegrable { limit: Real },
    /// Both distributions diverge; the origin needs the full analysis.
    Defer,
}

/// Decide the spectral origin from endpoint integrability alone, when an
/// integrable coefficient makes the limit of `m` explicit.
pub fn bounded_endpoint_shortcut(p: &HalfLineProblem) -> Result<EndpointShortcut> {
    if p.q().is_some() {
        return Err(Error::unsupported(
            "the endpoint shortcut requires a vanishing potential",
        ));
    }
    let w_dist = Distribution::new(p.w())?;
    if w_dist.total().is_finite() {
        return Ok(EndpointShortcut::WeightIntegrable { residue: 1.0 / w_dist.total() });
    }
    let r_dist = Distribution::new(p.r())?;
    if r_dist.total().is_finite() {
        return Ok(EndpointShortcut::ScaleIntegrable { limit: r_dist.total() });
    }
    Ok(EndpointShortcut::Defer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{EdgeKind, Profile, ProfileSpec, Role, Segment};
    use proptest::prelude::*;

    const K_THIRD: Real = 1.088_735_809_527_830_1;
    const K_TWO_THIRDS: Real = 0.918_496_472_007_921_2;

    fn problem(w: Profile, r: Profile) -> HalfLineProblem {
        HalfLineProblem::new(w, r, None).unwrap()
    }

    fn unit_problem() -> HalfLineProblem {
        problem(
            Profile::power(1.0, 0.0, Role::Weight).unwrap(),
            Profile::power(1.0, 0.0, Role::Scale).unwrap(),
        )
    }

    fn unit_interval_problem() -> HalfLineProblem {
        problem(
            Profile::from_segments(vec![Segment::constant(0.0, Some(1.0), 1.0)], Role::Weight)
                .unwrap(),
            Profile::from_segments(vec![Segment::constant(0.0, Some(1.0), 1.0)], Role::Scale)
                .unwrap(),
        )
    }

    /// `w ≡ 1`, `r = (1-x)^{-2}`-free: weight has an edge singularity.
    fn edge_singular_problem() -> HalfLineProblem {
        let w = Profile::from_segments(
            vec![Segment {
                from: 0.0,
                to: Some(1.0),
                c: 1.0,
                a: -2.0,
                p: 0,
                shift: 0.0,
                edge: Some(EdgeKind::Right),
            }],
            Role::Weight,
        )
        .unwrap();
        let r =
            Profile::from_segments(vec![Segment::constant(0.0, Some(1.0), 1.0)], Role::Scale)
                .unwrap();
        problem(w, r)
    }

    /// `w ≡ 1` with `r = 1` on `(0,1)` and `r = 1/x` beyond: `R ~ ln` is
    /// slowly varying at infinity.
    fn slow_scale_tail_problem() -> HalfLineProblem {
        let r = Profile::from_segments(
            vec![
                Segment::constant(0.0, Some(1.0), 1.0),
                Segment::power(1.0, None, 1.0, -1.0),
            ],
            Role::Scale,
        )
        .unwrap();
        problem(Profile::power(1.0, 0.0, Role::Weight).unwrap(), r)
    }

    fn factorial_problem() -> HalfLineProblem {
        let spec = ProfileSpec {
            family: Family::Named,
            segments: vec![],
            points: vec![],
            name: Some("factorial-weight".into()),
            param: None,
        };
        problem(
            Profile::from_spec(&spec, Role::Weight).unwrap(),
            Profile::power(1.0, 0.0, Role::Scale).unwrap(),
        )
    }

    fn rho_grid(lo: Real, hi: Real, per_decade: usize) -> Vec<Real> {
        let decades = (hi / lo).log10();
        let n = (decades * per_decade as Real).round() as usize;
        (0..=n)
            .map(|k| lo * 10f64.powf(k as Real / per_decade as Real))
            .collect()
    }

    #[test]
    fn the_model_constant_matches_its_closed_forms() {
        assert!((k_constant(1.0 / 3.0).unwrap() - K_THIRD).abs() < 1e-12);
        assert!((k_constant(2.0 / 3.0).unwrap() - K_TWO_THIRDS).abs() < 1e-12);
        assert!((k_constant(0.5).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(k_constant(0.0).unwrap(), 1.0);
        assert_eq!(k_constant(1.0).unwrap(), 1.0);
        assert!(k_constant(-0.1).is_err());
        assert!(k_constant(1.1).is_err());
        // Continuity at the degenerate ends.
        for nu in [1e-6, 1.0 - 1e-6] {
            assert!((k_constant(nu).unwrap() - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn the_flat_string_has_square_root_decay_at_both_ends() {
        for end in [SpectralEnd::Zero, SpectralEnd::Infinity] {
            let model = kasahara_model(&unit_problem(), end).unwrap();
            assert!((model.nu - 0.5).abs() < 1e-9, "nu = {}", model.nu);
            assert!((model.k - 1.0).abs() < 1e-12);
            assert_eq!(model.basis, ModelBasis::Symbolic);
            for lambda in [Cplx::new(0.0, 3.0), Cplx::new(-1.0, 2.0), Cplx::new(0.0, 0.01)] {
                let exact = neg_pow(lambda, 0.5);
                assert!((model.predict(lambda) - exact).norm() < 1e-12 * exact.norm());
            }
        }
    }

    #[test]
    fn the_homogeneous_scale_family_is_modeled_exactly() {
        // w = 1, r = 2x: m(λ) = K_{2/3} (-λ)^{-2/3} globally.
        let p = problem(
            Profile::power(1.0, 0.0, Role::Weight).unwrap(),
            Profile::power(2.0, 1.0, Role::Scale).unwrap(),
        );
        for end in [SpectralEnd::Zero, SpectralEnd::Infinity] {
            let model = kasahara_model(&p, end).unwrap();
            assert!((model.nu - 2.0 / 3.0).abs() < 1e-9);
            assert!((model.k - K_TWO_THIRDS).abs() < 1e-12);
            assert_eq!(model.basis, ModelBasis::Symbolic);
            let at_i = model.predict(Cplx::new(0.0, 1.0));
            assert!((at_i - Cplx::new(0.459248236004, 0.795441278045)).norm() < 1e-9);
        }

        // The dual pair w = 2x, r = 1: m(λ) = K_{1/3} (-λ)^{-1/3}.
        let q = problem(
            Profile::power(2.0, 1.0, Role::Weight).unwrap(),
            Profile::power(1.0, 0.0, Role::Scale).unwrap(),
        );
        let model = kasahara_model(&q, SpectralEnd::Infinity).unwrap();
        assert!((model.nu - 1.0 / 3.0).abs() < 1e-9);
        assert!((model.k - K_THIRD).abs() < 1e-12);
        let at_i = model.predict(Cplx::new(0.0, 1.0));
        assert!((at_i - Cplx::new(0.942872869060, 0.544367904764)).norm() < 1e-9);
    }

    #[test]
    fn verification_confirms_the_exact_family_on_both_windows() {
        let p = problem(
            Profile::power(1.0, 0.0, Role::Weight).unwrap(),
            Profile::power(2.0, 1.0, Role::Scale).unwrap(),
        );
        let opts = MOptions::default();
        for end in [SpectralEnd::Zero, SpectralEnd::Infinity] {
            let model = kasahara_model(&p, end).unwrap();
            let report =
                verify_asymptote(&p, &model, &rho_grid(1e-2, 1e2, 4), &opts).unwrap();
            for row in &report.rows {
                for i in 0..2 {
                    assert!(
                        row.deviation[i] <= 10.0 * row.enclosure_rel[i] + 1e-7,
                        "rho {} ray {} dev {} encl {}",
                        row.rho,
                        i,
                        row.deviation[i],
                        row.enclosure_rel[i]
                    );
                }
            }
        }
    }

    #[test]
    fn verification_shows_decaying_deviation_for_an_inhomogeneous_scale() {
        // w = 1, r = 1 + x is homogeneous only in the large; the model error
        // at the spectral origin should shrink decade over decade.
        let r = Profile::from_segments(
            vec![Segment { from: 0.0, to: None, c: 1.0, a: 1.0, p: 0, shift: 1.0, edge: None }],
            Role::Scale,
        )
        .unwrap();
        let p = problem(Profile::power(1.0, 0.0, Role::Weight).unwrap(), r);
        let model = kasahara_model(&p, SpectralEnd::Zero).unwrap();
        assert!((model.nu - 2.0 / 3.0).abs() < 1e-9, "nu = {}", model.nu);
        assert_eq!(model.basis, ModelBasis::Symbolic);
        let report = verify_asymptote(
            &p,
            &model,
            &rho_grid(1e-3, 1.0, 4),
            &MOptions::default(),
        )
        .unwrap();
        let maxima: Vec<Real> = report.decade_max.iter().map(|d| d.1).collect();
        assert!(maxima.len() >= 3);
        for w in maxima.windows(2) {
            assert!(w[1] < w[0] + 1e-3, "per-decade deviations {maxima:?} not decaying");
        }
        let (first, last) = (maxima[0], *maxima.last().unwrap());
        assert!(last < 0.5 * first, "deviations {maxima:?} decay too slowly");
    }

    #[test]
    fn a_slowly_varying_scale_tail_pins_the_degenerate_exponent() {
        let model = kasahara_model(&slow_scale_tail_problem(), SpectralEnd::Zero).unwrap();
        assert_eq!(model.nu, 0.0);
        assert_eq!(model.k, 1.0);
        assert_eq!(model.basis, ModelBasis::Symbolic);
        assert_eq!(model.composed_class, Some(VariationKind::Slow));
        // f(ρ) solves u·e^{u-1} = 1/ρ here; at ρ = 10⁻⁶ that root is ≈ 12.305.
        let f = model.f.eval(1e-6);
        assert!((12.29..12.32).contains(&f), "f(1e-6) = {f}");
    }

    #[test]
    fn integrable_weight_forces_the_limiting_form() {
        let p = unit_interval_problem();
        let model = kasahara_model(&p, SpectralEnd::Zero).unwrap();
        assert_eq!(model.nu, 1.0);
        assert!(matches!(model.basis, ModelBasis::Limiting { .. }));
        // m(iy) = i/y + 1/3 + O(y); the model captures the leading term.
        let y = 1e-4;
        let m = m_eval(&p, Cplx::new(0.0, y), BoundaryKind::Neumann, &MOptions::default())
            .unwrap()
            .m;
        let pred = model.predict(Cplx::new(0.0, y));
        assert!((m / pred - 1.0).norm() < 1e-3);

        let q = edge_singular_problem();
        let model = kasahara_model(&q, SpectralEnd::Zero).unwrap();
        assert_eq!(model.nu, 0.0);
        assert!(matches!(model.basis, ModelBasis::Limiting { .. }));
        let m = m_eval(&q, Cplx::new(0.0, y), BoundaryKind::Neumann, &MOptions::default())
            .unwrap()
            .m;
        let pred = model.predict(Cplx::new(0.0, y));
        assert!((m / pred - 1.0).norm() < 1e-2, "m = {m}, pred = {pred}");
    }

    #[test]
    fn the_model_rejects_potentials_and_irregular_weights() {
        let with_q = HalfLineProblem::new(
            Profile::power(1.0, 0.0, Role::Weight).unwrap(),
            Profile::power(1.0, 0.0, Role::Scale).unwrap(),
            Some(Profile::power(1.0, 0.0, Role::Potential).unwrap()),
        )
        .unwrap();
        assert!(matches!(
            kasahara_model(&with_q, SpectralEnd::Infinity),
            Err(Error::Unsupported(_))
        ));

        // The factorial staircase has no Karamata class at infinity.
        assert!(matches!(
            kasahara_model(&factorial_problem(), SpectralEnd::Zero),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn ratio_tables_confirm_the_flat_string_is_bounded() {
        let p = unit_problem();
        let opts = RatioOptions { pts_per_decade: 4, ..RatioOptions::default() };
        for end in [SpectralEnd::Zero, SpectralEnd::Infinity] {
            for direction in [RatioDirection::ReOverIm, RatioDirection::ImOverRe] {
                let report = ratio_criterion(&p, end, direction, &opts).unwrap();
                assert_eq!(report.verdict, BoundVerdict::Bounded);
                assert_eq!(report.prediction, Some(BoundVerdict::Bounded));
                assert_eq!(report.agrees, Some(true));
                assert!((report.sup - 1.0).abs() < 1e-4, "sup = {}", report.sup);
                assert!(report.samples.iter().all(|s| (s.ratio - 1.0).abs() < 1e-4));
            }
        }
    }

    #[test]
    fn a_vanishing_ratio_at_a_regular_endpoint_is_not_flagged_unbounded() {
        // On (0,1) with unit coefficients m(iy) ≈ i/y + 1/3, so the ratio
        // |Re|/Im ≈ y/3 collapses; the trend test must not call that
        // unbounded, and no coefficient prediction applies on a bounded
        // domain.
        let p = unit_interval_problem();
        let opts = RatioOptions { pts_per_decade: 4, ..RatioOptions::default() };
        let report =
            ratio_criterion(&p, SpectralEnd::Zero, RatioDirection::ReOverIm, &opts).unwrap();
        assert_ne!(report.verdict, BoundVerdict::Unbounded);
        assert!(report.prediction.is_none());
        for s in report.samples.iter().filter(|s| s.y <= 1e-5) {
            assert!(s.ratio < 1e-3, "ratio {} at y = {}", s.ratio, s.y);
        }
    }

    #[test]
    fn an_edge_singular_weight_drives_the_low_energy_ratio_unbounded() {
        let p = edge_singular_problem();
        let opts = RatioOptions { pts_per_decade: 4, ..RatioOptions::default() };
        let report =
            ratio_criterion(&p, SpectralEnd::Zero, RatioDirection::ReOverIm, &opts).unwrap();
        assert_eq!(report.verdict, BoundVerdict::Unbounded);
        assert_eq!(report.prediction, Some(BoundVerdict::Unbounded));
        assert_eq!(report.agrees, Some(true));
        assert!(report.trend_slope > 0.5, "slope = {}", report.trend_slope);
    }

    #[test]
    fn a_logarithmic_ratio_drift_stays_inconclusive_but_predicted() {
        // With the slowly varying scale tail, Re m / Im m grows like a
        // logarithm at the spectral origin: the window supremum never
        // clears ten times the median, so the sampled verdict stays
        // inconclusive even though the trend is genuinely upward and the
        // coefficients predict unboundedness.
        let p = slow_scale_tail_problem();
        let report = ratio_criterion(
            &p,
            SpectralEnd::Zero,
            RatioDirection::ReOverIm,
            &RatioOptions::default(),
        )
        .unwrap();
        assert_eq!(report.verdict, BoundVerdict::Inconclusive);
        assert_eq!(report.prediction, Some(BoundVerdict::Unbounded));
        assert_eq!(report.agrees, None);
        assert!(report.trend_slope >= 0.05, "slope = {}", report.trend_slope);
        assert!(report.sup < 10.0 * report.median);
        // The sampled ratios march through the oracle values for this pair.
        let at = |target: Real| {
            report
                .samples
                .iter()
                .min_by(|a, b| {
                    (a.y - target).abs().total_cmp(&(b.y - target).abs())
                })
                .unwrap()
                .ratio
        };
        assert!((at(1e-2) - 2.938903925).abs() < 1e-4, "ratio(1e-2) = {}", at(1e-2));
        assert!((at(1e-6) - 8.696993477).abs() < 1e-4, "ratio(1e-6) = {}", at(1e-6));
    }

    #[test]
    fn integrable_coefficients_short_circuit_the_spectral_origin() {
        let shortcut = bounded_endpoint_shortcut(&unit_interval_problem()).unwrap();
        match shortcut {
            EndpointShortcut::WeightIntegrable { residue } => {
                assert!((residue - 1.0).abs() < 1e-12)
            }
            other => panic!("expected the weight route, got {other:?}"),
        }

        let shortcut = bounded_endpoint_shortcut(&edge_singular_problem()).unwrap();
        match shortcut {
            EndpointShortcut::ScaleIntegrable { limit } => assert!((limit - 1.0).abs() < 1e-12),
            other => panic!("expected the scale route, got {other:?}"),
        }

        assert_eq!(bounded_endpoint_shortcut(&unit_problem()).unwrap(), EndpointShortcut::Defer);

        let with_q = HalfLineProblem::new(
            Profile::from_segments(vec![Segment::constant(0.0, Some(1.0), 1.0)], Role::Weight)
                .unwrap(),
            Profile::from_segments(vec![Segment::constant(0.0, Some(1.0), 1.0)], Role::Scale)
                .unwrap(),
            Some(Profile::from_segments(
                vec![Segment::constant(0.0, Some(1.0), 1.0)],
                Role::Potential,
            )
            .unwrap()),
        )
        .unwrap();
        assert!(matches!(bounded_endpoint_shortcut(&with_q), Err(Error::Unsupported(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        /// The scale factor inverts `x ↦ x · (W∘R⁻¹)(x)`: for power pairs,
        /// `f(ρ) · (W∘R⁻¹)(f(ρ)) · ρ = 1`.
        #[test]
        fn the_scale_factor_inverts_the_reciprocal_composition(
            cw in 0.2..5.0f64,
            cr in 0.2..5.0f64,
            aw in -0.5..3.0f64,
            ar in -0.5..3.0f64,
        ) {
            let p = problem(
                Profile::power(cw, aw, Role::Weight).unwrap(),
                Profile::power(cr, ar, Role::Scale).unwrap(),
            );
            let model = kasahara_model(&p, SpectralEnd::Infinity).unwrap();
            let w_dist = Distribution::new(p.w()).unwrap();
            let r_dist = Distribution::new(p.r()).unwrap();
            let wr = compose_distributions(&w_dist, &r_dist);
            for rho in [1e-3, 1.0, 1e3] {
                let x = model.f.eval(rho);
                let product = x * wr.eval(x) * rho;
                prop_assert!(
                    (product - 1.0).abs() < 1e-8,
                    "x·(W∘R⁻¹)(x)·ρ = {product} at ρ = {rho}"
                );
            }
        }

        /// `K_ν > 0` and `K_ν · K_{1-ν} = 1` across the open interval.
        #[test]
        fn the_model_constant_is_positive_with_reciprocal_symmetry(
            nu in 0.001..0.999f64,
        ) {
            let k = k_constant(nu).unwrap();
            let k_mirror = k_constant(1.0 - nu).unwrap();
            prop_assert!(k > 0.0 && k.is_finite());
            prop_assert!((k * k_mirror - 1.0).abs() < 1e-10);
        }
    }
}
