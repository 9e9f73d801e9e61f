//! The Weyl-Titchmarsh m-function of a half-line problem.
//!
//! For the generalized string `(1/w)( -(y^[1])' + q y )` with `y^[1] =
//! (1/r) y'` on `(0, b)`, the fundamental system `(c, s)` is normalized at
//! the origin by
//!
//! ```text
//!     c(0) = 1,  c^[1](0) = 0,       s(0) = 0,  s^[1](0) = 1,
//! ```
//!
//! and evolves under the first-order system `u' = r u^[1]`,
//! `(u^[1])' = (q - λ w) u`. The m-function of the Neumann condition at `0`
//! is the unique (limit-point) or boundary-condition-selected value such
//! that `s - m c` is square-integrable against `w`; it is located through
//! the nested Weyl disks
//!
//! ```text
//!     center(x) = (s conj(c^[1]) - s^[1] conj(c)) / (c conj(c^[1]) - c^[1] conj(c)),
//!     radius(x) = 1 / (2 |Im λ| ∫_0^x |c|² w dt),
//! ```
//!
//! which contract exponentially in the limit-point case.
//!
//! Numerically the fundamental system is advanced by adaptive Runge-Kutta
//! with periodic renormalization of both solution columns by a common real
//! scale (the disk data are invariant under this), a switch to the
//! logarithmic chart `τ = -ln(b - x)` near finite endpoints, and a series
//! start at a small `x_s > 0` when the coefficients are unbounded at the
//! origin. Truncation points double until the disk radius meets the
//! requested enclosure; spectral parameters on the negative real axis are
//! reached by a Richardson ladder of small imaginary shifts.

use crate::coefficients::{Profile, ProfileSpec, Role};
use crate::error::{Error, Result};
use crate::num::ode::{dopri5, Dopri5Options, StepControl};
use crate::num::quad;
use crate::{Cplx, Real};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// A half-line problem `(w, r, q)` on `(0, b)`; `b` is inferred from the
/// profiles (all of which must agree on it).
#[derive(Debug, Clone)]
pub struct HalfLineProblem {
    w: Arc<Profile>,
    r: Arc<Profile>,
    q: Option<Arc<Profile>>,
    b: Real,
}

/// Serialized problem description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub w: ProfileSpec,
    pub r: ProfileSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<ProfileSpec>,
}

impl HalfLineProblem {
    /// Assemble a problem from validated profiles with matching supports.
    pub fn new(w: Profile, r: Profile, q: Option<Profile>) -> Result<Self> {
        if w.role() != Role::Weight {
            return Err(Error::data("the w profile must have the weight role"));
        }
        if r.role() != Role::Scale {
            return Err(Error::data("the r profile must have the scale role"));
        }
        let b = w.b();
        if r.b() != b {
            return Err(Error::data("w and r must live on the same interval"));
        }
        if let Some(qp) = &q {
            if qp.role() != Role::Potential {
                return Err(Error::data("the q profile must have the potential role"));
            }
            if qp.b() != b {
                return Err(Error::data("q must live on the same interval as w and r"));
            }
        }
        Ok(HalfLineProblem { w: Arc::new(w), r: Arc::new(r), q: q.map(Arc::new), b })
    }

    /// Parse and validate a serialized description.
    pub fn from_spec(spec: &ProblemSpec) -> Result<Self> {
        let w = Profile::from_spec(&spec.w, Role::Weight)?;
        let r = Profile::from_spec(&spec.r, Role::Scale)?;
        let q = spec
            .q
            .as_ref()
            .map(|qs| Profile::from_spec(qs, Role::Potential))
            .transpose()?;
        HalfLineProblem::new(w, r, q)
    }

    /// Parse a JSON problem description.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ProblemSpec = serde_json::from_str(text)?;
        HalfLineProblem::from_spec(&spec)
    }

    /// The serialized form.
    pub fn to_spec(&self) -> ProblemSpec {
        ProblemSpec {
            w: self.w.to_spec(),
            r: self.r.to_spec(),
            q: self.q.as_ref().map(|q| q.to_spec()),
        }
    }

    pub fn b(&self) -> Real {
        self.b
    }

    pub fn w(&self) -> &Profile {
        &self.w
    }

    pub fn r(&self) -> &Profile {
        &self.r
    }

    pub fn q(&self) -> Option<&Profile> {
        self.q.as_deref()
    }

    /// The problem with the roles of `w` and `r` exchanged (the dual
    /// string). Potentials do not participate in the duality.
    pub fn swapped(&self) -> Result<Self> {
        if self.q.is_some() {
            return Err(Error::unsupported("the dual exchange applies to potential-free strings"));
        }
        let new_w = Profile::from_spec(&self.r.to_spec(), Role::Weight)?;
        let new_r = Profile::from_spec(&self.w.to_spec(), Role::Scale)?;
        HalfLineProblem::new(new_w, new_r, None)
    }

    /// Mass of an atomic weight, when this is the point-mass string.
    pub fn atomic_mass(&self) -> Option<Real> {
        self.w.atom_mass()
    }

    fn q_value(&self, x: Real) -> Real {
        self.q.as_ref().map_or(0.0, |q| q.value(x))
    }

    fn q_value_tau(&self, tau: Real) -> Real {
        self.q.as_ref().map_or(0.0, |q| q.value_at_tau(tau))
    }

    /// Total variation of the potential up to `x` (sum of |∫| over
    /// single-signed pieces; exact for power segments).
    fn q_abs_cumulative(&self, x: Real) -> Real {
        match &self.q {
            None => 0.0,
            Some(q) => q.cumulative(x).map(|v| v.abs()).unwrap_or(Real::INFINITY),
        }
    }
}

/// Which boundary quotient at the origin the m-function belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    /// The standard m of the condition `y^[1](0) = m-normalized` pair
    /// `(c, s)`; in a regular problem it is fixed by `ψ^[1](b) = 0`.
    Neumann,
    /// The swapped-normalization variant; in a regular problem it is fixed
    /// by `ψ(b) = 0`. In the limit-point case both variants coincide with
    /// the unique disk limit.
    Dirichlet,
}

/// Endpoint classification at `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndpointClass {
    /// Finite endpoint with integrable coefficients.
    Regular,
    /// All solutions square-integrable against `w`; the disks have a
    /// positive limit radius and a boundary condition is needed to pin m.
    LimitCircle,
    /// Exactly one ray of solutions is square-integrable; m is unique.
    LimitPoint,
}

/// Classify the endpoint at `b` from integrability of the coefficient
/// tails: infinite `W` forces limit point; with `W` finite the deciding
/// quantity is `∫ R² dW` near `b`.
pub fn classify_endpoint(p: &HalfLineProblem) -> Result<EndpointClass> {
    if p.atomic_mass().is_some() {
        // The point-mass string has a unique closed-form m.
        return Ok(EndpointClass::LimitPoint);
    }
    let w_total = p.w().total();
    let r_total = p.r().total();
    if p.b().is_finite() {
        let q_ok = p.q().map_or(true, |q| q.b().is_finite() && p.q_abs_cumulative(p.b()).is_finite());
        if w_total.is_finite() && r_total.is_finite() && q_ok {
            return Ok(EndpointClass::Regular);
        }
    }
    if w_total.is_infinite() {
        return Ok(EndpointClass::LimitPoint);
    }
    if r_total.is_finite() {
        // W and R both finite with a singular structure (infinite interval
        // or a non-integrable potential): every solution stays bounded, so
        // all are in L²(w).
        return Ok(EndpointClass::LimitCircle);
    }
    if r_squared_w_tail_is_finite(p)? {
        Ok(EndpointClass::LimitCircle)
    } else {
        Ok(EndpointClass::LimitPoint)
    }
}

/// Decide finiteness of `∫^b R² dW` (the square-integrability of the
/// second fundamental solution at `λ = 0`), symbolically for plain power
/// tails and by doubling-window quadrature otherwise.
fn r_squared_w_tail_is_finite(p: &HalfLineProblem) -> Result<bool> {
    // Symbolic: both final pieces are plain powers toward the same end.
    if let (Some(sw), Some(sr)) = (p.w().last_segment(), p.r().last_segment()) {
        let plain = |s: &crate::coefficients::Segment| s.p == 0 && s.shift == 0.0;
        if plain(sw) && plain(sr) {
            match (p.b().is_finite(), sw.edge.is_some(), sr.edge.is_some()) {
                (false, false, false) => {
                    // R ~ x^{ar+1} (ar >= -1 since R diverges); w ~ x^{aw}.
                    let growth = 2.0 * (sr.a + 1.0) + sw.a;
                    if growth != -1.0 {
                        return Ok(growth < -1.0);
                    }
                }
                (true, true, true) => {
                    // In u = b - x: R ~ u^{ar+1} with ar < -1; w ~ u^{aw}.
                    let growth = 2.0 * (sr.a + 1.0) + sw.a;
                    if growth != -1.0 {
                        return Ok(growth > -1.0);
                    }
                }
                _ => {}
            }
        }
    }
    // Numeric: compare doubling windows of ∫ R² w. A steady geometric
    // decay of the window masses certifies convergence; window masses that
    // stop decaying certify divergence. The first windows are warm-up (the
    // tail behavior has not set in yet) and do not count.
    let b = p.b();
    let r_of = |x: Real| p.r().cumulative(x).unwrap_or(Real::INFINITY);
    let mut lo = if b.is_finite() { b * 0.5 } else { 1.0 };
    let mut prev: Option<Real> = None;
    let mut shrinking = 0;
    let mut steady = 0;
    for window in 0..48 {
        let hi = if b.is_finite() { b - 0.5 * (b - lo) } else { lo * 2.0 };
        let (val, _) = quad::integrate(
            |x| {
                let rr = r_of(x);
                rr * rr * p.w().value(x)
            },
            lo,
            hi,
            1e-8,
            1e-300,
        )?;
        if let Some(pv) = prev {
            if window >= 3 {
                if val <= 0.8 * pv {
                    shrinking += 1;
                    steady = 0;
                    if shrinking >= 3 {
                        return Ok(true);
                    }
                } else if val >= 0.95 * pv {
                    steady += 1;
                    shrinking = 0;
                    if steady >= 3 {
                        return Ok(false);
                    }
                } else {
                    shrinking = 0;
                    steady = 0;
                }
            }
        }
        prev = Some(val);
        lo = hi;
    }
    Err(Error::numerics("endpoint classification did not converge"))
}

/// One truncated-problem Weyl disk.
#[derive(Debug, Clone, Copy)]
pub struct DiskSample {
    /// Truncation point (direct chart).
    pub x: Real,
    pub center: Cplx,
    /// True-scale radius; may underflow to zero, see `ln_radius`.
    pub radius: Real,
    pub ln_radius: Real,
}

/// The value of the fundamental system at one point, in a common
/// renormalized scale `e^ln_scale`.
#[derive(Debug, Clone, Copy)]
pub struct FundamentalSample {
    pub x: Real,
    pub c: Cplx,
    pub c1: Cplx,
    pub s: Cplx,
    pub s1: Cplx,
    /// Both columns are `e^{ln_scale}` times smaller than the true values.
    pub ln_scale: Real,
    /// Largest observed Wronskian drift |c s^[1] - s c^[1] - 1|, relative
    /// to the bilinear solution scale, while that scale stayed within
    /// measurable range.
    pub wronskian_drift: Real,
}

/// Tunables of the m-function engine.
#[derive(Debug, Clone, Copy)]
pub struct MOptions {
    /// Target relative enclosure of m.
    pub rtol: Real,
    /// Absolute enclosure floor.
    pub atol: Real,
    /// Runge-Kutta relative tolerance.
    pub ode_rtol: Real,
    /// Truncation cap in the direct chart.
    pub x_cap: Real,
    /// Total Runge-Kutta step budget per evaluation.
    pub step_budget: u64,
}

impl Default for MOptions {
    fn default() -> Self {
        MOptions { rtol: 1e-8, atol: 1e-14, ode_rtol: 1e-10, x_cap: 1e12, step_budget: 6_000_000 }
    }
}

/// How an m-value was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MMethod {
    ClosedForm,
    RegularEndpoint,
    LimitCircleDisk,
    TruncationLimit,
    EpsilonShift,
}

/// An evaluated m-value with a rigorous-in-spirit enclosure (disk radius
/// plus integration slack).
#[derive(Debug, Clone, Copy)]
pub struct MSample {
    pub lambda: Cplx,
    pub m: Cplx,
    pub enclosure: Real,
    pub method: MMethod,
}

const RENORM_THRESHOLD: Real = 1e100;
const WRONSKIAN_WINDOW: Real = 1e8;

/// The integration state of a fundamental system, advanced lazily toward
/// the endpoint.
struct Engine {
    p: Arc<HalfLineProblem>,
    lam: Cplx,
    opts: MOptions,
    /// Current chart: `None` = direct x; `Some(b)` = τ = -ln(b - x).
    tau_chart: bool,
    /// Current coordinate in the current chart.
    coord: Real,
    /// (c, c1, s, s1) interleaved re/im, then the running ∫|c|² w.
    y: [Real; 9],
    /// Both columns are e^{ell} times smaller than true scale.
    ell: Real,
    wronskian_drift: Real,
    monitoring: bool,
    steps_used: u64,
    /// Step-size hint carried between integration segments.
    h_hint: Option<Real>,
}

impl Engine {
    /// Series start: pick `x_s` with `(|λ| W + |Q|)(x_s) R(x_s) ≤ 1e-16`
    /// and start from the first-order Volterra values there.
    fn start(p: Arc<HalfLineProblem>, lam: Cplx, opts: MOptions) -> Result<Engine> {
        let b = p.b();
        let lam_scale = lam.norm().max(1.0);
        let mut x_s = if b.is_finite() { b / 4.0 } else { 1.0 };
        for _ in 0..2000 {
            let wv = p.w().cumulative(x_s)?;
            let rv = p.r().cumulative(x_s)?;
            let qv = p.q_abs_cumulative(x_s);
            if (lam_scale * wv + qv) * rv <= 1e-16 && qv + lam_scale * wv <= 1e-2 {
                break;
            }
            x_s *= 0.25;
            if x_s < 1e-290 {
                return Err(Error::numerics("could not find a series starting point"));
            }
        }
        let w0 = p.w().cumulative(x_s)?;
        let r0 = p.r().cumulative(x_s)?;
        let q0 = p.q.as_ref().map_or(0.0, |q| q.cumulative(x_s).unwrap_or(0.0));
        // c ≈ 1, c^[1] ≈ Q - λW, s ≈ R, s^[1] ≈ 1, ∫|c|²w ≈ W.
        let y = [
            1.0,
            0.0,
            q0 - lam.re * w0,
            -lam.im * w0,
            r0,
            0.0,
            1.0,
            0.0,
            w0,
        ];
        Ok(Engine {
            p,
            lam,
            opts,
            tau_chart: false,
            coord: x_s,
            y,
            ell: 0.0,
            wronskian_drift: 0.0,
            monitoring: true,
            steps_used: 0,
            h_hint: Some(x_s * 1e-2),
        })
    }

    /// Right-hand side in the current chart.
    fn rhs(&self) -> impl FnMut(Real, &[Real; 9]) -> [Real; 9] {
        let p = Arc::clone(&self.p);
        let lam = self.lam;
        let tau_chart = self.tau_chart;
        move |t: Real, y: &[Real; 9]| {
            let (wv, rv, qv, factor) = if tau_chart {
                (p.w().value_at_tau(t), p.r().value_at_tau(t), p.q_value_tau(t), (-t).exp())
            } else {
                (p.w().value(t), p.r().value(t), p.q_value(t), 1.0)
            };
            let pot = Cplx::new(qv - lam.re * wv, -lam.im * wv);
            let c = Cplx::new(y[0], y[1]);
            let c1 = Cplx::new(y[2], y[3]);
            let s = Cplx::new(y[4], y[5]);
            let s1 = Cplx::new(y[6], y[7]);
            let dc = rv * c1;
            let dc1 = pot * c;
            let ds = rv * s1;
            let ds1 = pot * s;
            [
                factor * dc.re,
                factor * dc.im,
                factor * dc1.re,
                factor * dc1.im,
                factor * ds.re,
                factor * ds.im,
                factor * ds1.re,
                factor * ds1.im,
                factor * wv * (y[0] * y[0] + y[1] * y[1]),
            ]
        }
    }

    /// Advance to `target` in the current chart.
    fn advance_to(&mut self, target: Real) -> Result<()> {
        if target <= self.coord {
            return Ok(());
        }
        let remaining = self.opts.step_budget.saturating_sub(self.steps_used);
        if remaining == 0 {
            return Err(Error::numerics("integration step budget exhausted"));
        }
        let ode_opts = Dopri5Options {
            rtol: self.opts.ode_rtol,
            atol: 1e-300,
            h_init: self.h_hint.map(|h| h.min(target - self.coord)),
            h_min_rel: 1e-15,
            max_steps: remaining,
        };
        let mut ell = self.ell;
        let mut drift = self.wronskian_drift;
        let mut monitoring = self.monitoring;
        let mut rhs = self.rhs();
        let out = dopri5(
            &mut rhs,
            self.coord,
            target,
            self.y,
            &ode_opts,
            &mut |_t, y: &mut [Real; 9]| {
                let mag = y[..8].iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
                if monitoring {
                    let c = Cplx::new(y[0], y[1]);
                    let c1 = Cplx::new(y[2], y[3]);
                    let s = Cplx::new(y[4], y[5]);
                    let s1 = Cplx::new(y[6], y[7]);
                    let bilinear = c.norm() * s1.norm() + s.norm() * c1.norm();
                    if ell == 0.0 && bilinear <= WRONSKIAN_WINDOW {
                        // Relative drift: the invariant c s^[1] - s c^[1] = 1
                        // is a cancellation of size `bilinear`, so that is
                        // the natural scale to measure against.
                        let wr = (c * s1 - s * c1 - Cplx::new(1.0, 0.0)).norm()
                            / bilinear.max(1.0);
                        if wr > drift {
                            drift = wr;
                        }
                    } else {
                        monitoring = false;
                    }
                }
                if mag > RENORM_THRESHOLD {
                    let inv = 1.0 / mag;
                    for v in y[..8].iter_mut() {
                        *v *= inv;
                    }
                    y[8] *= inv * inv;
                    ell += mag.ln();
                    StepControl::ContinueRefreshed
                } else {
                    StepControl::Continue
                }
            },
        )?;
        self.steps_used += out.accepted + out.rejected;
        self.coord = out.t;
        self.y = out.y;
        self.ell = ell;
        self.wronskian_drift = drift;
        self.monitoring = monitoring;
        self.h_hint = Some(out.h_final);
        Ok(())
    }

    /// Switch from the direct chart to `τ = -ln(b - x)` (finite `b` only).
    fn enter_tau_chart(&mut self) {
        debug_assert!(!self.tau_chart && self.p.b().is_finite());
        self.coord = -(self.p.b() - self.coord).ln();
        self.tau_chart = true;
        // The step hint is in x-units and means nothing in τ.
        self.h_hint = None;
    }

    fn x_now(&self) -> Real {
        if self.tau_chart {
            self.p.b() - (-self.coord).exp()
        } else {
            self.coord
        }
    }

    /// Current Weyl disk (center is renormalization-invariant; the radius
    /// is tracked through the log scale).
    fn disk(&self) -> DiskSample {
        let c = Cplx::new(self.y[0], self.y[1]);
        let c1 = Cplx::new(self.y[2], self.y[3]);
        let s = Cplx::new(self.y[4], self.y[5]);
        let s1 = Cplx::new(self.y[6], self.y[7]);
        let den = c * c1.conj() - c1 * c.conj();
        let num = s * c1.conj() - s1 * c.conj();
        let center = num / den;
        let ln_radius = -( (2.0 * self.lam.im.abs()).ln() + 2.0 * self.ell + self.y[8].ln() );
        DiskSample { x: self.x_now(), center, radius: ln_radius.exp(), ln_radius }
    }

    /// Boundary quotient for a regular (or limit-circle) right endpoint.
    fn quotient(&self, bc: BoundaryKind) -> Cplx {
        let c = Cplx::new(self.y[0], self.y[1]);
        let c1 = Cplx::new(self.y[2], self.y[3]);
        let s = Cplx::new(self.y[4], self.y[5]);
        let s1 = Cplx::new(self.y[6], self.y[7]);
        match bc {
            BoundaryKind::Neumann => s1 / c1,
            BoundaryKind::Dirichlet => s / c,
        }
    }

    fn sample(&self) -> FundamentalSample {
        FundamentalSample {
            x: self.x_now(),
            c: Cplx::new(self.y[0], self.y[1]),
            c1: Cplx::new(self.y[2], self.y[3]),
            s: Cplx::new(self.y[4], self.y[5]),
            s1: Cplx::new(self.y[6], self.y[7]),
            ln_scale: self.ell,
            wronskian_drift: self.wronskian_drift,
        }
    }
}

/// Values of the fundamental system at the requested points (increasing,
/// inside `(0, b)`), in a common renormalized scale per point.
pub fn integrate_fundamental(
    p: &HalfLineProblem,
    lambda: Cplx,
    points: &[Real],
    opts: &MOptions,
) -> Result<Vec<FundamentalSample>> {
    let mut eng = Engine::start(Arc::new(p.clone()), lambda, *opts)?;
    let mut out = Vec::with_capacity(points.len());
    for &x in points {
        if !(x > 0.0) || x >= p.b() {
            return Err(Error::usage("evaluation points must lie inside (0, b)"));
        }
        eng.advance_to(x)?;
        out.push(eng.sample());
    }
    Ok(out)
}

/// The Weyl disk of the problem truncated at `x`.
pub fn weyl_disk(p: &HalfLineProblem, lambda: Cplx, x: Real, opts: &MOptions) -> Result<DiskSample> {
    if lambda.im == 0.0 {
        return Err(Error::usage("Weyl disks need a nonreal spectral parameter"));
    }
    let mut eng = Engine::start(Arc::new(p.clone()), lambda, *opts)?;
    eng.advance_to(x)?;
    Ok(eng.disk())
}

/// Evaluate the m-function.
///
/// Dispatches on the spectral parameter and the endpoint class:
/// closed forms for the point-mass string; conjugate symmetry into the
/// lower half-plane; a Richardson ladder of imaginary shifts on the
/// negative real axis; boundary quotients at regular endpoints; nested
/// disks with doubling truncation in the limit-point case; stabilized
/// disks (with the limit radius reported in the enclosure) in the
/// limit-circle case.
pub fn m_eval(
    p: &HalfLineProblem,
    lambda: Cplx,
    bc: BoundaryKind,
    opts: &MOptions,
) -> Result<MSample> {
    if let Some(mass) = p.atomic_mass() {
        return m_atomic(p, lambda, bc, mass);
    }
    if lambda.im == 0.0 {
        if lambda.re >= 0.0 {
            return Err(Error::unsupported(
                "real spectral parameters inside the essential spectrum",
            ));
        }
        return m_negative_real(p, lambda.re, bc, opts);
    }
    if lambda.im < 0.0 {
        let upper = m_eval(p, lambda.conj(), bc, opts)?;
        return Ok(MSample { lambda, m: upper.m.conj(), ..upper });
    }

    let class = classify_endpoint(p)?;
    match class {
        EndpointClass::Regular => m_regular(p, lambda, bc, opts),
        EndpointClass::LimitCircle => m_disk_limit(p, lambda, opts, true),
        EndpointClass::LimitPoint => m_disk_limit(p, lambda, opts, false),
    }
}

/// Closed-form m of the point-mass string (`w = mass·δ_0`, `r ≡ 1`):
/// `m(λ) = mass - 1/λ`, and the swapped-normalization variant
/// `1/(1 - λ·mass)`.
fn m_atomic(p: &HalfLineProblem, lambda: Cplx, bc: BoundaryKind, mass: Real) -> Result<MSample> {
    let unit_r = p.r().last_segment().map_or(false, |s| {
        s.from == 0.0 && s.to.is_none() && s.c == 1.0 && s.a == 0.0 && s.p == 0 && s.shift == 0.0
    });
    if !unit_r {
        return Err(Error::unsupported("the point-mass closed form assumes r ≡ 1"));
    }
    if lambda.norm() == 0.0 {
        return Err(Error::usage("the spectral parameter must be nonzero"));
    }
    let one = Cplx::new(1.0, 0.0);
    let m = match bc {
        BoundaryKind::Neumann => Cplx::new(mass, 0.0) - one / lambda,
        BoundaryKind::Dirichlet => one / (one - lambda * mass),
    };
    Ok(MSample { lambda, m, enclosure: 1e-15 * m.norm(), method: MMethod::ClosedForm })
}

/// Negative real axis via `m(x + iε)` for ε = 1e-4, 1e-5 (and 1e-6 when
/// the first extrapolation is unstable), Richardson-extrapolated in ε.
fn m_negative_real(p: &HalfLineProblem, x: Real, bc: BoundaryKind, opts: &MOptions) -> Result<MSample> {
    let scale = x.abs().max(1.0);
    let m4 = m_eval(p, Cplx::new(x, 1e-4 * scale), bc, opts)?;
    let m5 = m_eval(p, Cplx::new(x, 1e-5 * scale), bc, opts)?;
    let extrap = (10.0 * m5.m - m4.m) / 9.0;
    let err = (extrap - m5.m).norm() * 0.2 + m5.enclosure;
    if err <= (1e-7 + opts.rtol * 10.0) * extrap.norm().max(opts.atol) {
        return Ok(MSample {
            lambda: Cplx::new(x, 0.0),
            m: extrap,
            enclosure: err,
            method: MMethod::EpsilonShift,
        });
    }
    let m6 = m_eval(p, Cplx::new(x, 1e-6 * scale), bc, opts)?;
    let extrap2 = (10.0 * m6.m - m5.m) / 9.0;
    let err2 = (extrap2 - extrap).norm() + m6.enclosure;
    Ok(MSample {
        lambda: Cplx::new(x, 0.0),
        m: extrap2,
        enclosure: err2,
        method: MMethod::EpsilonShift,
    })
}

/// Regular endpoint: integrate to `b` (through the edge chart when the
/// coefficients are unbounded but integrable there) and read the quotient.
fn m_regular(p: &HalfLineProblem, lambda: Cplx, bc: BoundaryKind, opts: &MOptions) -> Result<MSample> {
    let b = p.b();
    let mut eng = Engine::start(Arc::new(p.clone()), lambda, *opts)?;
    eng.advance_to(b * 0.99)?;
    eng.enter_tau_chart();
    let w_total = p.w().total();
    let r_total = p.r().total();
    let lam_scale = lambda.norm().max(1.0);
    // March in τ until the coefficient mass beyond the current point can no
    // longer move the quotient at the requested tolerance.
    let mut tau = eng.coord;
    for _ in 0..60 {
        tau += 4.0;
        eng.advance_to(tau)?;
        let w_rem = (w_total - p.w().cumulative_at_tau(tau)?).max(0.0);
        let r_rem = (r_total - p.r().cumulative_at_tau(tau)?).max(0.0);
        let q_rem = match p.q() {
            None => 0.0,
            Some(q) => {
                (p.q_abs_cumulative(b) - q.cumulative(b - (-tau).exp()).unwrap_or(0.0).abs())
                    .max(0.0)
            }
        };
        if (lam_scale * w_rem + q_rem + r_rem) < 1e-14 {
            break;
        }
    }
    let m = eng.quotient(bc);
    let encl = (10.0 * opts.ode_rtol + 1e-13) * m.norm() + opts.atol;
    Ok(MSample { lambda, m, enclosure: encl, method: MMethod::RegularEndpoint })
}

/// Limit-point / limit-circle evaluation through nested disks at doubling
/// truncations.
fn m_disk_limit(
    p: &HalfLineProblem,
    lambda: Cplx,
    opts: &MOptions,
    limit_circle: bool,
) -> Result<MSample> {
    let b = p.b();
    let mut eng = Engine::start(Arc::new(p.clone()), lambda, *opts)?;
    // Truncation schedule: doubling x for infinite b; after a fixed entry
    // point, doubling τ-offsets for finite b.
    let mut stall_count = 0u32;
    let mut prev: Option<DiskSample> = None;
    let mut k = 0u32;
    loop {
        if b.is_finite() {
            if !eng.tau_chart {
                eng.advance_to(b * 0.99)?;
                eng.enter_tau_chart();
            }
            let tau_target = eng.coord.max(0.0) + (1u64 << k.min(16)) as Real;
            eng.advance_to(tau_target)?;
        } else {
            let x_target = (eng.coord.max(1e-2) * 4.0).min(opts.x_cap);
            if x_target >= opts.x_cap && eng.coord >= opts.x_cap * 0.99 {
                return Err(Error::numerics(format!(
                    "disks did not close at the truncation cap {:.1e}",
                    opts.x_cap
                )));
            }
            eng.advance_to(x_target)?;
        }
        k += 1;
        let d = eng.disk();
        let target = (opts.rtol * d.center.norm()).max(opts.atol);
        if d.ln_radius <= target.ln() {
            let encl = d.radius + (10.0 * opts.ode_rtol + 1e-13) * d.center.norm();
            return Ok(MSample {
                lambda,
                m: d.center,
                enclosure: encl,
                method: MMethod::TruncationLimit,
            });
        }
        if let Some(pd) = prev {
            let shrink = pd.ln_radius - d.ln_radius;
            if shrink < 0.2 {
                stall_count += 1;
            } else {
                stall_count = 0;
            }
            if stall_count >= 3 {
                if limit_circle {
                    // The disks have (numerically) reached their positive
                    // limit radius; report the center with that radius.
                    let encl = d.radius + (10.0 * opts.ode_rtol + 1e-13) * d.center.norm();
                    return Ok(MSample {
                        lambda,
                        m: d.center,
                        enclosure: encl,
                        method: MMethod::LimitCircleDisk,
                    });
                }
                return Err(Error::numerics(format!(
                    "disk contraction stalled at x = {:.3e} with radius {:.3e}",
                    d.x, d.radius
                )));
            }
        }
        prev = Some(d);
        if k > 90 {
            return Err(Error::numerics("truncation schedule exhausted"));
        }
    }
}

/// Residual of the dual-string identity `m(λ) · λ · m̃(λ) = -1`, where
/// `m̃` is the swapped-normalization m of the exchanged problem.
pub fn m_dual_residual(p: &HalfLineProblem, lambda: Cplx, opts: &MOptions) -> Result<Real> {
    if let Some(mass) = p.atomic_mass() {
        // Algebraic: (mass - 1/λ) · λ · 1/(1 - λ·mass) = -1 identically.
        let m = Cplx::new(mass, 0.0) - Cplx::new(1.0, 0.0) / lambda;
        let dual = Cplx::new(1.0, 0.0) / (Cplx::new(1.0, 0.0) - lambda * mass);
        return Ok((m * lambda * dual + 1.0).norm());
    }
    let m = m_eval(p, lambda, BoundaryKind::Neumann, opts)?;
    let dual = m_eval(&p.swapped()?, lambda, BoundaryKind::Dirichlet, opts)?;
    Ok((m.m * lambda * dual.m + Cplx::new(1.0, 0.0)).norm())
}

/// One sampled point of a Stieltjes-property scan along the negative axis.
#[derive(Debug, Clone, Serialize)]
pub struct StieltjesSample {
    pub x: Real,
    pub m: Real,
    pub imag_residual: Real,
    pub enclosure: Real,
}

/// Result of checking m along a negative-axis grid for the Stieltjes
/// property (real, positive, nondecreasing).
#[derive(Debug, Clone, Serialize)]
pub struct StieltjesReport {
    pub samples: Vec<StieltjesSample>,
    pub positive: bool,
    pub nondecreasing: bool,
    pub real_within_enclosure: bool,
    /// Grid points (by value) where a violation was detected.
    pub violations: Vec<Real>,
}

impl StieltjesReport {
    pub fn passed(&self) -> bool {
        self.positive && self.nondecreasing && self.real_within_enclosure
    }
}

/// Evaluate m on an increasing grid of negative reals and check the
/// Stieltjes property.
pub fn stieltjes_check(
    p: &HalfLineProblem,
    grid: &[Real],
    bc: BoundaryKind,
    opts: &MOptions,
) -> Result<StieltjesReport> {
    if grid.iter().any(|&x| x >= 0.0) {
        return Err(Error::usage("the Stieltjes scan grid must be negative"));
    }
    let mut samples = Vec::with_capacity(grid.len());
    for &x in grid {
        let ms = m_eval(p, Cplx::new(x, 0.0), bc, opts)?;
        samples.push(StieltjesSample {
            x,
            m: ms.m.re,
            imag_residual: ms.m.im.abs(),
            enclosure: ms.enclosure,
        });
    }
    let mut positive = true;
    let mut nondecreasing = true;
    let mut real_ok = true;
    let mut violations = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        let slack = 10.0 * s.enclosure + 1e-10 * s.m.abs();
        if s.m <= 0.0 {
            positive = false;
            violations.push(s.x);
        }
        if s.imag_residual > slack.max(1e-8) {
            real_ok = false;
            violations.push(s.x);
        }
        if i > 0 {
            let prev = &samples[i - 1];
            let tol = 10.0 * (s.enclosure + prev.enclosure) + 1e-10 * s.m.abs();
            if s.m < prev.m - tol {
                nondecreasing = false;
                violations.push(s.x);
            }
        }
    }
    violations.dedup();
    Ok(StieltjesReport {
        samples,
        positive,
        nondecreasing,
        real_within_enclosure: real_ok,
        violations,
    })
}
