//! The Seiberg–Witten functional in its raw and Weitzenböck forms, the exact
//! discrete gradient, a gauge-fixed descent solver and the bound monitors.
//!
//! ```text
//! raw:          S = ‖D⁺ψ‖² + ‖F⁺ + η − q(ψ)‖²
//! weitzenbock:  S = ‖∇ψ‖² + ‖F⁺ + η‖² − 2(η, q(ψ)) + κ/4 ‖ψ‖² + 1/8 ∫|ψ|⁴
//! ```
//!
//! At `κ = 0` the two differ by `⟨Wψ, ψ⟩` with `W` the pointwise Weitzenböck
//! defect, an `O(a²)` quantity. All norms use the cell-volume weighted inner
//! products, and gradients are taken with respect to the same products.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::clifford::{self, Half, C64};
use crate::error::{Error, Result};
use crate::fields::{self, coulomb_fix, Config, Section, Tangent};
use crate::lattice::{self, Cochain, TorusLattice};
use crate::operators::{self, nabla_with};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    Raw,
    #[default]
    Weitzenbock,
}

#[derive(Debug, Clone, Default)]
pub struct FunctionalParams {
    /// Synthetic constant scalar curvature.
    pub kappa: f64,
    /// Self-dual perturbation.
    pub eta: Option<Cochain>,
    pub form: Form,
}

impl FunctionalParams {
    pub fn weitzenbock(kappa: f64) -> Self {
        Self { kappa, eta: None, form: Form::Weitzenbock }
    }

    pub fn raw() -> Self {
        Self { kappa: 0.0, eta: None, form: Form::Raw }
    }

    pub fn with_eta(mut self, eta: Cochain) -> Self {
        self.eta = Some(eta);
        self
    }

    fn validate(&self, lat: &TorusLattice) -> Result<()> {
        if !self.kappa.is_finite() {
            return Err(Error::InvalidParameter("kappa must be finite".into()));
        }
        if self.form == Form::Raw && self.kappa != 0.0 {
            return Err(Error::InvalidParameter("the raw functional is only defined for kappa = 0".into()));
        }
        if let Some(e) = &self.eta {
            operators::check_self_dual(lat, e)?;
        }
        Ok(())
    }
}

/// Constant (hence harmonic) self-dual form `amplitude · (e01 + e23)`.
pub fn constant_eta(lat: &TorusLattice, amplitude: f64) -> Cochain {
    Cochain::from_fn(lat, 2, |_, k| if k == 0 || k == 5 { amplitude } else { 0.0 })
}

fn require_4d(lat: &TorusLattice) -> Result<()> {
    if lat.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: lat.dim() });
    }
    Ok(())
}

/// `P⁺F_clover + η`
fn perturbed_sd_curvature(c: &Config, eta: Option<&Cochain>) -> Result<Cochain> {
    let fp = operators::sd_curvature(c)?;
    Ok(match eta {
        Some(e) => fp.add(e),
        None => fp,
    })
}

/// Value of the functional.
pub fn action(c: &Config, p: &FunctionalParams) -> Result<f64> {
    require_4d(&c.lat)?;
    p.validate(&c.lat)?;
    match p.form {
        Form::Raw => {
            let r = operators::sw_residual(c, p.eta.as_ref())?;
            let dn = r.dirac_norm(&c.lat);
            let cn = r.curv_norm(&c.lat);
            Ok(dn * dn + cn * cn)
        }
        Form::Weitzenbock => {
            let (v, shift) = weitzenbock_action(c, p)?;
            Ok(v - shift)
        }
    }
}

/// Returns `(S + shift, shift)`. For `κ < 0` the potential is summed as
/// `⅛(|ψ|² + κ)²`, which stays small near the minimum, and `shift = κ²Vol/8`.
fn weitzenbock_action(c: &Config, p: &FunctionalParams) -> Result<(f64, f64)> {
    let lat = &c.lat;
    let vol = lat.cell_volume();
    let nab = operators::covariant_derivative(c);
    let grad_sq = vol * par::sum(nab.len(), |i| clifford::norm_sqr(&nab[i]));
    let r = perturbed_sd_curvature(c, p.eta.as_ref())?;
    let curv = lattice::inner(lat, &r, &r);
    let eta_q = match &p.eta {
        Some(e) => vol * par::sum(lat.n_sites(), |s| {
            let q = clifford::quadratic_form(&c.psi[s]);
            (0..6).map(|k| e.values[s * 6 + k] * q[k]).sum::<f64>()
        }),
        None => 0.0,
    };
    let k = p.kappa;
    let (potential, shift) = if k < 0.0 {
        (0.125 * vol * par::sum(lat.n_sites(), |s| (clifford::norm_sqr(&c.psi[s]) + k).powi(2)), 0.125 * k * k * lat.volume())
    } else {
        let pot = vol * par::sum(lat.n_sites(), |s| {
            let n = clifford::norm_sqr(&c.psi[s]);
            0.25 * k * n + 0.125 * n * n
        });
        (pot, 0.0)
    };
    Ok((grad_sq + curv - 2.0 * eta_q + potential, shift))
}

/// Exact discrete gradient of the Weitzenböck form.
pub fn gradient(c: &Config, p: &FunctionalParams) -> Result<Tangent> {
    require_4d(&c.lat)?;
    p.validate(&c.lat)?;
    if p.form != Form::Weitzenbock {
        return Err(Error::InvalidParameter("the gradient is implemented for the weitzenbock form".into()));
    }
    let lat = &c.lat;
    let d = 4;
    let phases = c.link_phases();
    let nab = nabla_with(lat, &phases, &c.psi);

    // ψ: 2∇*∇ψ + κ/2 ψ + ½|ψ|²ψ + iΣ η_ij e_ie_j ψ
    let lap = operators::nabla_squared_with(lat, &phases, &c.psi);
    let eta_mats: Option<Vec<_>> = p.eta.as_ref().map(|e| {
        (0..lat.n_sites())
            .map(|s| {
                let w: [f64; 6] = e.values[s * 6..s * 6 + 6].try_into().unwrap();
                clifford::m2_scale(&clifford::two_form_matrix(&w), C64::new(0.0, 1.0))
            })
            .collect()
    });
    let psi_grad: Section = par::map_collect(lat.n_sites(), |s| {
        let v = c.psi[s];
        let coef = 0.5 * p.kappa + 0.5 * clifford::norm_sqr(&v);
        let mut g = [-2.0 * lap[s][0] + v[0] * coef, -2.0 * lap[s][1] + v[1] * coef];
        if let Some(m) = &eta_mats {
            let w = clifford::m2_apply(&m[s], &v);
            g[0] += w[0];
            g[1] += w[1];
        }
        g
    });

    // a: 2 d* clover^T (P⁺F + η) + link derivative of ‖∇ψ‖²
    let r = perturbed_sd_curvature(c, p.eta.as_ref())?;
    let curv_part = lattice::d_star(lat, &operators::clover_adjoint(lat, &r))?.scale(2.0);
    let minus_quarter_i = C64::new(0.0, -0.25);
    let a_vals = par::map_collect(lat.n_sites() * d, |i| {
        let (x, mu) = (i / d, i % d);
        let y = lat.fwd(x, mu);
        let u = phases[i];
        let a_here: Half = nab[i];
        let b_next: Half = nab[y * d + mu];
        let mut acc = 0.0;
        for k in 0..2 {
            let da = minus_quarter_i * u * c.psi[y][k];
            let db = minus_quarter_i * u.conj() * c.psi[x][k];
            acc += (a_here[k].conj() * da + b_next[k].conj() * db).re;
        }
        curv_part.values[i] + 2.0 * acc
    });
    Ok(Tangent { a: Cochain { degree: 1, values: a_vals }, psi: psi_grad })
}

/// Pieces of the solver report that depend only on the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub psi_inf_sq: f64,
    pub i_plus: f64,
    pub i_minus: f64,
    /// `max(0, −κ)`
    pub psi_bound: f64,
    /// `(1/8) ∫ κ²`
    pub i_plus_bound: f64,
    pub psi_bound_ok: bool,
    pub i_plus_bound_ok: bool,
}

/// Monitors `‖ψ‖²_∞`, `I± = ∫|F±|²` against the a priori bounds.
pub fn bounds_report(c: &Config, p: &FunctionalParams, tol: f64) -> Result<Bounds> {
    require_4d(&c.lat)?;
    let lat = &c.lat;
    let f = operators::clover_curvature(c);
    let fp = lattice::selfdual_project(lat, &f)?;
    let fm = f.sub(&fp);
    let psi_inf = fields::section_sup(&c.psi);
    let psi_bound = (-p.kappa).max(0.0);
    let i_plus_bound = 0.125 * p.kappa * p.kappa * lat.volume();
    let i_plus = lattice::inner(lat, &fp, &fp);
    Ok(Bounds {
        psi_inf_sq: psi_inf * psi_inf,
        i_plus,
        i_minus: lattice::inner(lat, &fm, &fm),
        psi_bound,
        i_plus_bound,
        psi_bound_ok: psi_inf * psi_inf <= psi_bound + tol,
        i_plus_bound_ok: i_plus <= i_plus_bound + tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub max_iters: usize,
    /// Stop when `‖grad‖ / sqrt(real dof) < tol`.
    pub tol: f64,
    /// Coulomb re-projection period in iterations (0 disables).
    pub gauge_fix_every: usize,
    /// Initial step in units of the smallest squared spacing.
    pub initial_step: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Record a trace row every this many iterations (0 disables).
    pub trace_every: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { max_iters: 20_000, tol: 1e-8, gauge_fix_every: 50, initial_step: 0.05, armijo: 1e-4, trace_every: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub functional: f64,
    pub grad: f64,
    pub psi_inf: f64,
    pub i_plus: f64,
    pub i_minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub functional: f64,
    pub grad_norm: f64,
    pub dirac_residual: f64,
    pub curv_residual: f64,
    pub psi_inf: f64,
    pub i_plus: f64,
    pub i_minus: f64,
    pub converged: bool,
    /// `‖d*a‖ / ‖a‖` (absolute when `a = 0`).
    pub gauge_residual: f64,
    pub bounds: Bounds,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
}

/// Writes an iteration trace as CSV.
pub fn write_trace_csv<W: Write>(rows: &[TraceRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "iter,S,grad,psi_inf,I+,I-")?;
    for r in rows {
        writeln!(w, "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}", r.iter, r.functional, r.grad, r.psi_inf, r.i_plus, r.i_minus)?;
    }
    Ok(())
}

fn grad_per_dof(lat: &TorusLattice, g: &Tangent) -> f64 {
    g.norm(lat) / (g.real_dof() as f64).sqrt()
}

fn gauge_residual(c: &Config) -> Result<f64> {
    let n = lattice::norm(&c.lat, &lattice::d_star(&c.lat, &c.a)?);
    let a = lattice::norm(&c.lat, &c.a);
    Ok(if a > 0.0 { n / a } else { n })
}

/// Gradient descent with Armijo backtracking and periodic Coulomb projection.
///
/// Accepted steps never increase the functional. On line-search failure the
/// error carries the iteration and last value; use [`flow_minimize_partial`]
/// to also recover the last iterate.
pub fn flow_minimize(c0: &Config, p: &FunctionalParams, opts: &SolveOptions) -> Result<(Config, SolveReport)> {
    let (c, report, err) = flow_minimize_partial(c0, p, opts)?;
    match err {
        Some(e) => Err(e),
        None => Ok((c, report)),
    }
}

/// Like [`flow_minimize`] but returns the last iterate alongside a line-search error.
pub fn flow_minimize_partial(c0: &Config, p: &FunctionalParams, opts: &SolveOptions) -> Result<(Config, SolveReport, Option<Error>)> {
    require_4d(&c0.lat)?;
    if p.form != Form::Weitzenbock {
        return Err(Error::InvalidParameter("flow_minimize requires the weitzenbock form".into()));
    }
    if !(opts.tol > 0.0) || !(opts.initial_step > 0.0) || !(opts.armijo > 0.0 && opts.armijo < 1.0) {
        return Err(Error::InvalidParameter("solver tolerances and steps must be positive".into()));
    }
    let lat = c0.lat.clone();
    let h2 = lat.spacings().iter().fold(f64::INFINITY, |m, &a| m.min(a * a));
    let max_step = 1e3 * opts.initial_step * h2;
    let mut step = opts.initial_step * h2;
    let mut c = c0.clone();
    p.validate(&lat)?;
    let shifted = |c: &Config| weitzenbock_action(c, p).map(|v| v.0);
    let (_, shift) = weitzenbock_action(&c, p)?;
    let mut s = shifted(&c)?;
    let mut g = gradient(&c, p)?;
    let mut trace = Vec::new();
    let mut iter = 0;
    let mut failure = None;
    let record = |trace: &mut Vec<TraceRow>, iter: usize, c: &Config, s: f64, gn: f64| -> Result<()> {
        let b = bounds_report(c, p, 0.0)?;
        trace.push(TraceRow { iter, functional: s - shift, grad: gn, psi_inf: b.psi_inf_sq.sqrt(), i_plus: b.i_plus, i_minus: b.i_minus });
        Ok(())
    };
    loop {
        let gn = grad_per_dof(&lat, &g);
        if opts.trace_every > 0 && iter % opts.trace_every == 0 {
            record(&mut trace, iter, &c, s, gn)?;
        }
        if gn < opts.tol || iter >= opts.max_iters {
            break;
        }
        let g2 = g.inner(&lat, &g);
        let mut accepted = None;
        while step > 1e-18 * h2 {
            let trial = c.step(-step, &g);
            let st = shifted(&trial)?;
            if st <= s - opts.armijo * step * g2 {
                accepted = Some((trial, st));
                break;
            }
            step *= 0.5;
        }
        let Some((next, st)) = accepted else {
            failure = Some(Error::LineSearchFailure { iteration: iter, value: s - shift });
            break;
        };
        iter += 1;
        c = next;
        s = st;
        step = (2.0 * step).min(max_step);
        if opts.gauge_fix_every > 0 && iter % opts.gauge_fix_every == 0 {
            let (fixed, _) = coulomb_fix(&c)?;
            // the functional is gauge invariant; keep the smaller of the two roundoff values
            let sf = shifted(&fixed)?;
            c = fixed;
            s = s.min(sf);
        }
        g = gradient(&c, p)?;
    }
    if opts.trace_every > 0 && trace.last().map(|r| r.iter) != Some(iter) {
        record(&mut trace, iter, &c, s, grad_per_dof(&lat, &g))?;
    }
    let gn = grad_per_dof(&lat, &g);
    let res = operators::sw_residual(&c, p.eta.as_ref())?;
    let bounds = bounds_report(&c, p, 1e-3)?;
    let report = SolveReport {
        iterations: iter,
        functional: s - shift,
        grad_norm: gn,
        dirac_residual: res.dirac_norm(&lat),
        curv_residual: res.curv_norm(&lat),
        psi_inf: bounds.psi_inf_sq.sqrt(),
        i_plus: bounds.i_plus,
        i_minus: bounds.i_minus,
        converged: gn < opts.tol,
        gauge_residual: gauge_residual(&c)?,
        bounds,
        trace,
    };
    Ok((c, report, failure))
}
