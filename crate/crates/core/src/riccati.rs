//! Phase (Riccati) equations for the reflection and transmission amplitudes.
//!
//! The structure is grown from the left edge: at position `x` the amplitudes
//! describe the truncated structure `[0, x]` embedded in the left medium. With
//! `V(x) = U(x) - level_left` and `k` the left-medium wave number,
//!
//! ```text
//! dR~/dx   = -i V (1 + R~)^2 / 2k + 2ik R~      (R~ referenced at x)
//! d lnT/dx = -i V (1 + R~) / 2k                 (T referenced at 0)
//! dR/dx    = -i V e^{2ikx} T^2 / 2k
//! ```
//!
//! In a free stretch `V = 0`, so `|R~|` is frozen while its phase advances by
//! `2kL`. Writing `R~ = rho e^{i phi~}`, `R = rho e^{i phi}`, `T = t e^{i delta}`
//! gives the real form integrated by [`integrate_real`]; it is singular at
//! `rho = 0`, so integration runs in the complex form until `rho` is clear of
//! zero and switches back whenever it returns there.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::ops::ControlFlow;

use num_complex::Complex64;

use crate::compose::{compose_pair, GapJoin, LossModel};
use crate::error::{ensure, Error, Result};
use crate::ode::{self, Tolerances};
use crate::oracle::ScatterData;
use crate::potential::Potential;

#[derive(Debug, Clone, Copy)]
pub struct RiccatiOptions {
    pub tol: Tolerances,
    /// Below this `rho` the real form hands over to the complex form.
    pub switch_rho: f64,
    /// Loss densities; only the complex form supports them.
    pub loss: LossModel,
    /// Also integrate the mirrored structure for the right-incident amplitudes.
    pub check_reversal: bool,
}

impl Default for RiccatiOptions {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            switch_rho: 1e-6,
            loss: LossModel::default(),
            check_reversal: true,
        }
    }
}

/// One accepted integration step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub x: f64,
    /// `V = U - level_left` at `x`.
    pub v: f64,
    pub r_rev: Complex64,
    pub r: Complex64,
    /// Transmission amplitude referenced at the left edge.
    pub t: Complex64,
    pub rho: f64,
    /// Continuous phases of `R~`, `R` and `T`.
    pub phi_rev: f64,
    pub phi: f64,
    pub delta: f64,
    pub ln_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremumKind {
    Max,
    Min,
}

/// Local extremum of `rho(x)` inside a non-free region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub x: f64,
    pub rho: f64,
    pub phi_rev: f64,
    pub kind: ExtremumKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    pub scatter: ScatterData,
    pub points: Vec<PhasePoint>,
    pub extrema: Vec<Extremum>,
    /// `|R_joint - R_mirrored|` when the reversal pass ran.
    pub reversal_residual: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Form {
    Complex,
    Rho,
    Alpha,
}

/// Complex-form integration (supports loss).
pub fn integrate_complex(p: &Potential, energy: f64, opts: &RiccatiOptions) -> Result<RiccatiSolution> {
    solve(p, energy, opts, Form::Complex)
}

/// Real-form integration of `(rho, phi~, phi, delta)`.
pub fn integrate_real(p: &Potential, energy: f64, opts: &RiccatiOptions) -> Result<RiccatiSolution> {
    solve(p, energy, opts, Form::Rho)
}

/// Real-form integration with `rho = cos(alpha)`, `t = sin(alpha)`.
pub fn integrate_alpha_form(p: &Potential, energy: f64, opts: &RiccatiOptions) -> Result<RiccatiSolution> {
    solve(p, energy, opts, Form::Alpha)
}

fn solve(p: &Potential, energy: f64, opts: &RiccatiOptions, form: Form) -> Result<RiccatiSolution> {
    ensure(form == Form::Complex || opts.loss.is_lossless(), || {
        "loss is only supported by the complex form".into()
    })?;
    ensure(opts.switch_rho > 0.0 && opts.switch_rho < 0.1, || {
        format!("switch_rho must lie in (0, 0.1), got {}", opts.switch_rho)
    })?;
    let fwd = forward(p, energy, opts, form)?;
    let mut scatter = fwd.scatter;
    let mut reversal_residual = None;
    if opts.check_reversal {
        let rev = forward(&p.reversed(), energy, opts, Form::Complex)?.scatter;
        reversal_residual = Some((rev.r_rev - scatter.r).norm());
        scatter.t_rev = rev.t;
        scatter.r = rev.r_rev;
        scatter = scatter.with_computed_loss();
    }
    Ok(RiccatiSolution {
        scatter,
        extrema: find_extrema(&fwd.points),
        points: fwd.points,
        reversal_residual,
    })
}

struct Forward {
    scatter: ScatterData,
    points: Vec<PhasePoint>,
}

/// Continuous representative of `arg(z)` nearest to `prev`.
fn unwrap(z: Complex64, prev: f64) -> f64 {
    if z.norm() == 0.0 {
        return prev;
    }
    let a = z.arg();
    a + TAU * ((prev - a) / TAU).round()
}

/// Amplitudes carried between forms.
#[derive(Clone, Copy)]
struct State {
    r_rev: Complex64,
    ln_t: Complex64,
    r: Complex64,
    phi_rev: f64,
    phi: f64,
}

impl State {
    fn point(&self, x: f64, v: f64) -> PhasePoint {
        PhasePoint {
            x,
            v,
            r_rev: self.r_rev,
            r: self.r,
            t: self.ln_t.exp(),
            rho: self.r_rev.norm(),
            phi_rev: self.phi_rev,
            phi: self.phi,
            delta: self.ln_t.im,
            ln_t: self.ln_t.re,
        }
    }

    fn from_complex(y: &[f64; 6], prev: &State) -> State {
        let r_rev = Complex64::new(y[0], y[1]);
        let r = Complex64::new(y[4], y[5]);
        State {
            r_rev,
            ln_t: Complex64::new(y[2], y[3]),
            r,
            phi_rev: unwrap(r_rev, prev.phi_rev),
            phi: unwrap(r, prev.phi),
        }
    }

    fn to_complex(self) -> [f64; 6] {
        [self.r_rev.re, self.r_rev.im, self.ln_t.re, self.ln_t.im, self.r.re, self.r.im]
    }

    fn from_real(y: &[f64; 5], form: Form) -> State {
        let rho = if form == Form::Alpha { y[0].cos() } else { y[0] };
        State {
            r_rev: Complex64::from_polar(rho, y[1]),
            ln_t: Complex64::new(y[4], y[3]),
            r: Complex64::from_polar(rho, y[2]),
            phi_rev: y[1],
            phi: y[2],
        }
    }

    fn to_real(self, form: Form) -> [f64; 5] {
        let rho = self.r_rev.norm();
        let lead = if form == Form::Alpha { rho.min(1.0).acos() } else { rho };
        [lead, self.phi_rev, self.phi, self.ln_t.im, self.ln_t.re]
    }
}

fn forward(p: &Potential, energy: f64, opts: &RiccatiOptions, form: Form) -> Result<Forward> {
    let k = p.k_left(energy)?;
    let k_right = p.k_right(energy)?;
    let level = p.left_level;
    let i = Complex64::i();
    let (w, wp) = (opts.loss.w, opts.loss.w_prime);
    let lossless = opts.loss.is_lossless();

    let mut state = State {
        r_rev: Complex64::default(),
        ln_t: Complex64::default(),
        r: Complex64::default(),
        phi_rev: -FRAC_PI_2,
        phi: -FRAC_PI_2,
    };
    let first_v = p.segments.first().map_or(0.0, |s| s.height_at(0.0) - level);
    if first_v < 0.0 {
        // A well reflects with the opposite sign: R~ ~ +i|V|dx/2k at the edge.
        state.phi_rev = FRAC_PI_2;
        state.phi = FRAC_PI_2;
    }
    let mut points = vec![state.point(0.0, first_v)];
    let mut current = Form::Complex;
    let mut seg_start = 0.0;

    for seg in &p.segments {
        for (t0, t1) in seg.smooth_pieces() {
            let (a, b) = (seg_start + t0, seg_start + t1);
            if b <= a {
                continue;
            }
            let v_at = |x: f64| seg.height_at((x - seg_start).clamp(t0, t1)) - level;
            let mut x = a;
            while x < b {
                let mut diverged = None;
                let (xe, next) = match current {
                    Form::Complex => {
                        let rhs = |x: f64, y: &[f64; 6]| {
                            let v = v_at(x);
                            let rr = Complex64::new(y[0], y[1]);
                            let lt = Complex64::new(y[2], y[3]);
                            let ar = i * v / (2.0 * k) + w;
                            let at = i * v / (2.0 * k) + wp;
                            let drr = -ar * (1.0 + rr * rr) - 2.0 * at * rr + 2.0 * i * k * rr;
                            let dlt = -at - ar * rr;
                            let dr = -ar * (2.0 * lt + 2.0 * i * k * x).exp();
                            [drr.re, drr.im, dlt.re, dlt.im, dr.re, dr.im]
                        };
                        let mut prev = state;
                        let mut switch = false;
                        let (xe, y) = ode::integrate(rhs, x, state.to_complex(), b, opts.tol, |xs, y| {
                            if xs == x {
                                return ControlFlow::Continue(());
                            }
                            let s = State::from_complex(y, &prev);
                            let rho = s.r_rev.norm();
                            if lossless && rho > 1.0 + 1e-8 {
                                diverged = Some((xs, rho));
                                return ControlFlow::Break(());
                            }
                            points.push(s.point(xs, v_at(xs)));
                            prev = s;
                            if form != Form::Complex && rho > 2.0 * opts.switch_rho && v_at(xs) != 0.0 {
                                switch = true;
                                return ControlFlow::Break(());
                            }
                            ControlFlow::Continue(())
                        })?;
                        state = State::from_complex(&y, &prev);
                        (xe, if switch { form } else { Form::Complex })
                    }
                    Form::Rho | Form::Alpha => {
                        let alpha = current == Form::Alpha;
                        let rhs = |x: f64, y: &[f64; 5]| {
                            let v = v_at(x);
                            let (rho, sin_a) = if alpha { (y[0].cos(), y[0].sin()) } else { (y[0], 0.0) };
                            let (sp, cp) = y[1].sin_cos();
                            let g = v / (2.0 * k);
                            let t2 = if alpha { sin_a * sin_a } else { 1.0 - rho * rho };
                            let lead = if alpha { g * sin_a * sp } else { -g * t2 * sp };
                            let dphi_rev = -g * (rho * rho + 1.0) * cp / rho - (v - 2.0 * k * k) / k;
                            let dphi = g * t2 * cp / rho;
                            let ddelta = -g * (1.0 + rho * cp);
                            let dlnt = g * rho * sp;
                            [lead, dphi_rev, dphi, ddelta, dlnt]
                        };
                        let mut back = false;
                        let (xe, y) = ode::integrate(rhs, x, state.to_real(current), b, opts.tol, |xs, y| {
                            if xs == x {
                                return ControlFlow::Continue(());
                            }
                            let s = State::from_real(y, current);
                            let rho = s.r_rev.norm();
                            if rho > 1.0 + 1e-8 || (!alpha && y[0] < 0.0) {
                                diverged = Some((xs, rho));
                                return ControlFlow::Break(());
                            }
                            points.push(s.point(xs, v_at(xs)));
                            if rho < opts.switch_rho {
                                back = true;
                                return ControlFlow::Break(());
                            }
                            ControlFlow::Continue(())
                        })?;
                        state = State::from_real(&y, current);
                        (xe, if back { Form::Complex } else { current })
                    }
                };
                if let Some((x, modulus)) = diverged {
                    return Err(Error::Divergence { x, modulus });
                }
                ensure(xe > x || xe >= b, || format!("integration stalled at x = {x}"))?;
                x = xe;
                current = next;
            }
        }
        seg_start += seg.width;
    }

    let width = p.extent();
    let t = state.ln_t.exp() * Complex64::from_polar(1.0, k * width);
    let mut scatter = ScatterData {
        t,
        r: state.r,
        t_rev: t,
        r_rev: state.r_rev,
        k_left: k,
        k_right: k,
        width,
        loss: 0.0,
    }
    .with_computed_loss();
    if k_right != k {
        let step = ScatterData::step(k, k_right);
        scatter = compose_pair(&scatter, &GapJoin { length: 0.0, k }, &step)?;
    }
    Ok(Forward { scatter, points })
}

fn find_extrema(points: &[PhasePoint]) -> Vec<Extremum> {
    // Sign of d rho / dx = V (rho^2 - 1) sin(phi~) / 2k.
    let slope = |p: &PhasePoint| p.v * (p.rho * p.rho - 1.0) * p.phi_rev.sin();
    let mut out = Vec::new();
    for w in points.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.v == 0.0 || b.v == 0.0 || a.v.signum() != b.v.signum() {
            continue;
        }
        let (sa, sb) = (slope(a), slope(b));
        if sa == 0.0 || sa.signum() == sb.signum() {
            continue;
        }
        let f = sa / (sa - sb);
        out.push(Extremum {
            x: a.x + f * (b.x - a.x),
            rho: a.rho + f * (b.rho - a.rho),
            phi_rev: a.phi_rev + f * (b.phi_rev - a.phi_rev),
            kind: if sa > 0.0 { ExtremumKind::Max } else { ExtremumKind::Min },
        });
    }
    out
}

/// First-order scattering data of a thin slab of width `dx` with
/// `V = U - level` relative to a medium of wave number `k`, carrying loss.
///
/// Valid while `kappa dx << 1`, `kappa = sqrt|V - k^2|`; rejected unless
/// `kappa dx < 0.01`.
pub fn small_slab_coefficients(v: f64, dx: f64, k: f64, loss: &LossModel) -> Result<ScatterData> {
    ensure(dx > 0.0 && k > 0.0, || format!("need dx > 0 and k > 0, got {dx}, {k}"))?;
    let kappa = (v - k * k).abs().sqrt();
    ensure(kappa * dx < 0.01, || {
        format!("slab too thick for first-order coefficients: kappa dx = {}", kappa * dx)
    })?;
    let i = Complex64::i();
    let ar = i * v / (2.0 * k) + loss.w;
    let at = i * v / (2.0 * k) + loss.w_prime;
    let t = (1.0 - at * dx) * Complex64::from_polar(1.0, k * dx);
    let r = -ar * dx;
    Ok(ScatterData {
        t,
        r,
        t_rev: t,
        r_rev: r,
        k_left: k,
        k_right: k,
        width: dx,
        loss: 0.0,
    }
    .with_computed_loss())
}

/// Wrap `phi` into `(-pi, pi]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}
