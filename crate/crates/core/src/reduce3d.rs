//! Dimensional reduction to a 3-torus: the Dirac operator `∂_A`, the
//! Chern–Simons–Dirac functional, its gradient flow and the slicing of
//! temporal-gauge configurations on `T⁴ = S¹ × T³`.
//!
//! With `b = a − a_ref` the functional is
//!
//! ```text
//! C = ¼ ∫ b ∪ (F_A + F_ref) + ½ Re⟨ψ, ∂_Aψ⟩
//! ```
//!
//! with every cup product of `b` against a 2-cochain averaged over both
//! orderings. It is invariant under identity-component gauge maps and shifts by
//! `4π² Σ ε_uvw w_u m_vw` under a winding map. The flow is the downward
//! gradient for the metric `½‖α‖² + ‖φ‖²`, giving
//!
//! ```text
//! dA/dt = −⋆F_A + v(ψ),  v_k ≈ −½ Im⟨e_kψ, ψ⟩,   dψ/dt = −∂_Aψ
//! ```

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::clifford::{self, Half, M2, C64};
use crate::error::{Error, Result};
use crate::fields::{self, Config, Section, Tangent};
use crate::lattice::{self, flux_background, Cochain, TorusLattice};
use crate::operators::nabla_at;
use crate::par;

/// A configuration on a 3-torus.
pub type Config3 = Config;

fn require_3d(lat: &TorusLattice) -> Result<()> {
    if lat.dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, found: lat.dim() });
    }
    Ok(())
}

fn gammas() -> [M2; 3] {
    [clifford::gamma3(0), clifford::gamma3(1), clifford::gamma3(2)]
}

fn dirac3_with(lat: &TorusLattice, phases: &[C64], psi: &[Half]) -> Section {
    let g = gammas();
    par::map_collect(lat.n_sites(), |s| {
        let mut acc = [C64::new(0.0, 0.0); 2];
        for (k, gk) in g.iter().enumerate() {
            let v = clifford::m2_apply(gk, &nabla_at(lat, phases, psi, s, k));
            acc[0] += v[0];
            acc[1] += v[1];
        }
        acc
    })
}

/// `∂_Aψ = Σ e_k ∇_kψ` with `e_k = iσ_k`; formally self-adjoint.
pub fn dirac3(c: &Config3) -> Result<Section> {
    require_3d(&c.lat)?;
    Ok(dirac3_with(&c.lat, &c.link_phases(), &c.psi))
}

/// Value of the functional together with its pieces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsdParts {
    pub topological: f64,
    pub spinor: f64,
    /// `½ Im⟨ψ, ∂_Aψ⟩`, zero up to roundoff by self-adjointness.
    pub spinor_imag: f64,
    pub value: f64,
}

/// ∫ x∪y averaged with ∫ y∪x.
fn sym_pair(lat: &TorusLattice, x: &Cochain, y: &Cochain) -> Result<f64> {
    let xy = lattice::integrate(lat, &lattice::cup(lat, x, y)?)?;
    let yx = lattice::integrate(lat, &lattice::cup(lat, y, x)?)?;
    Ok(0.5 * (xy + yx))
}

pub fn csd_parts(c: &Config3, a_ref: &Cochain) -> Result<CsdParts> {
    require_3d(&c.lat)?;
    let lat = &c.lat;
    if a_ref.degree != 1 || a_ref.values.len() != c.a.values.len() {
        return Err(Error::ShapeMismatch("reference connection must be a 1-cochain on the lattice".into()));
    }
    let b = c.a.sub(a_ref);
    let f0 = c.bg.field_cochain(lat);
    let db = lattice::d(lat, &b)?;
    let dref = lattice::d(lat, a_ref)?;
    let topological = 0.25 * (2.0 * sym_pair(lat, &b, &f0)? + sym_pair(lat, &b, &db)? + 2.0 * sym_pair(lat, &b, &dref)?);
    let dpsi = dirac3(c)?;
    let z = fields::section_inner_complex(lat, &c.psi, &dpsi);
    Ok(CsdParts { topological, spinor: 0.5 * z.re, spinor_imag: 0.5 * z.im, value: topological + 0.5 * z.re })
}

/// The Chern–Simons–Dirac functional relative to `a_ref`.
pub fn csd(c: &Config3, a_ref: &Cochain) -> Result<f64> {
    Ok(csd_parts(c, a_ref)?.value)
}

/// `(⋆F)_sym = ⋆F₀ + ½(L(da) + R(da))` where `L`, `R` are the cup gradients.
pub fn star_curvature(c: &Config3) -> Result<Cochain> {
    require_3d(&c.lat)?;
    let lat = &c.lat;
    let da = lattice::d(lat, &c.a)?;
    let l = lattice::cup_left_gradient(lat, &da)?;
    let r = lattice::cup_right_gradient(lat, &da)?;
    let f0 = lattice::cup_left_gradient(lat, &c.bg.field_cochain(lat))?;
    Ok(f0.add(&l.add(&r).scale(0.5)))
}

/// The term `v(ψ)` of the connection flow: `-2 ∂/∂a` of `½Re⟨ψ, ∂_Aψ⟩`.
pub fn spinor_current(c: &Config3) -> Result<Cochain> {
    require_3d(&c.lat)?;
    let lat = &c.lat;
    let phases = c.link_phases();
    let sig = [clifford::pauli(0), clifford::pauli(1), clifford::pauli(2)];
    let psi = &c.psi;
    let values = par::map_collect(lat.n_sites() * 3, |i| {
        let (x, k) = (i / 3, i % 3);
        let y = lat.fwd(x, k);
        let u = phases[i];
        // d(e_k∇_kψ)(x)/da = ¼σ_k U ψ(y), d(e_k∇_kψ)(y)/da = ¼σ_k Ū ψ(x)
        let da = clifford::m2_apply(&sig[k], &[u * psi[y][0], u * psi[y][1]]);
        let db = clifford::m2_apply(&sig[k], &[u.conj() * psi[x][0], u.conj() * psi[x][1]]);
        let g = 0.125 * (clifford::inner(&psi[x], &da) + clifford::inner(&psi[y], &db)).re;
        -2.0 * g
    });
    Ok(Cochain { degree: 1, values })
}

/// `(dψ/dt, dA/dt) = (−∂_Aψ, −(⋆F)_sym + v(ψ))`.
pub fn flow_rhs(c: &Config3) -> Result<Tangent> {
    let d = dirac3(c)?;
    let psi = d.iter().map(|v| [-v[0], -v[1]]).collect();
    let a = spinor_current(c)?.sub(&star_curvature(c)?);
    Ok(Tangent { a, psi })
}

/// Cup-product pairing `Σ_u Σ_{v<w} ε(u,v,w) w_u m_vw` of `c₁(L²)` with a winding class.
/// `m3` holds `(m01, m02, m12)`.
pub fn flux_winding_pairing(m3: &[i64; 3], w: &[i64; 3]) -> i64 {
    // ε(2,0,1) = +1, ε(1,0,2) = −1, ε(0,1,2) = +1
    w[2] * m3[0] - w[1] * m3[1] + w[0] * m3[2]
}

/// `4π² × pairing`, the predicted change of [`csd`] under a winding map.
pub fn gauge_shift_predicted(m3: &[i64; 3], w: &[i64; 3]) -> f64 {
    4.0 * PI * PI * flux_winding_pairing(m3, w) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsdFlowOptions {
    pub dt: f64,
    pub steps: usize,
}

impl Default for CsdFlowOptions {
    fn default() -> Self {
        Self { dt: 0.01, steps: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsdTraceRow {
    pub t: f64,
    pub csd: f64,
    pub rhs: f64,
    pub psi_inf: f64,
}

pub fn write_csd_trace_csv<W: Write>(rows: &[CsdTraceRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "t,C,rhs,psi_inf")?;
    for r in rows {
        writeln!(w, "{:.17e},{:.17e},{:.17e},{:.17e}", r.t, r.csd, r.rhs, r.psi_inf)?;
    }
    Ok(())
}

/// Explicit Euler descent along [`flow_rhs`], halving `dt` whenever a step
/// would raise the functional.
pub fn csd_flow(c0: &Config3, a_ref: &Cochain, opts: &CsdFlowOptions) -> Result<(Config3, Vec<CsdTraceRow>)> {
    if !(opts.dt > 0.0) {
        return Err(Error::InvalidParameter("dt must be positive".into()));
    }
    let mut c = c0.clone();
    let mut value = csd(&c, a_ref)?;
    let mut t = 0.0;
    let mut dt = opts.dt;
    let mut rows = Vec::with_capacity(opts.steps + 1);
    for _ in 0..=opts.steps {
        let rhs = flow_rhs(&c)?;
        let rn = rhs.norm(&c.lat);
        rows.push(CsdTraceRow { t, csd: value, rhs: rn, psi_inf: fields::section_sup(&c.psi) });
        if rows.len() > opts.steps || rn == 0.0 {
            break;
        }
        loop {
            let trial = c.step(dt, &rhs);
            let v = csd(&trial, a_ref)?;
            if v <= value {
                c = trial;
                value = v;
                t += dt;
                break;
            }
            dt *= 0.5;
            if dt < 1e-14 * opts.dt {
                return Ok((c, rows));
            }
        }
    }
    Ok((c, rows))
}

fn slice_lattice(lat: &TorusLattice) -> Result<TorusLattice> {
    TorusLattice::new(&lat.sizes()[1..], &lat.spacings()[1..])
}

/// Checks the temporal-gauge preconditions (time is direction 0).
fn check_temporal(c4: &Config) -> Result<()> {
    if c4.lat.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: c4.lat.dim() });
    }
    let viol = (0..c4.lat.n_sites()).map(|s| c4.a.values[s * 4].abs()).fold(0.0, f64::max);
    if viol > 0.0 {
        return Err(Error::NotTemporalGauge { max_violation: viol });
    }
    if (1..4).any(|k| c4.bg.flux()[0][k] != 0) {
        return Err(Error::InvalidParameter("flux through time planes is incompatible with temporal slicing".into()));
    }
    Ok(())
}

/// Restricts a temporal-gauge configuration to its time slices.
pub fn temporal_slice(c4: &Config) -> Result<Vec<Config3>> {
    check_temporal(c4)?;
    let lat4 = &c4.lat;
    let lat3 = Arc::new(slice_lattice(lat4)?);
    let m = c4.bg.flux();
    let m3: Vec<Vec<i64>> = (1..4).map(|u| (1..4).map(|v| m[u][v]).collect()).collect();
    let bg3 = Arc::new(flux_background(&lat3, &m3)?);
    let n3 = lat3.n_sites();
    (0..lat4.sizes()[0])
        .map(|t| {
            let a = Cochain::from_fn(&lat3, 1, |s, k| c4.a.values[(t * n3 + s) * 4 + k + 1]);
            let psi = c4.psi[t * n3..(t + 1) * n3].to_vec();
            Config::new(lat3.clone(), bg3.clone(), a, psi)
        })
        .collect()
}

/// Slicewise flow defect `(dψ/dt + ∂_Aψ, dA/dt + (⋆F)_sym − v(ψ))` with
/// central time differences, as 4-d weighted norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowDefect {
    pub spinor: f64,
    pub connection: f64,
}

pub fn slice_flow_defect(c4: &Config) -> Result<FlowDefect> {
    let slices = temporal_slice(c4)?;
    let nt = slices.len();
    let h = c4.lat.spacings()[0];
    let lat3 = slices[0].lat.clone();
    let (mut spin, mut conn) = (0.0, 0.0);
    for t in 0..nt {
        let next = &slices[(t + 1) % nt];
        let prev = &slices[(t + nt - 1) % nt];
        let cur = &slices[t];
        let rhs = flow_rhs(cur)?;
        let dpsi: Section = (0..lat3.n_sites())
            .map(|s| {
                let v = [(next.psi[s][0] - prev.psi[s][0]) / (2.0 * h), (next.psi[s][1] - prev.psi[s][1]) / (2.0 * h)];
                [v[0] - rhs.psi[s][0], v[1] - rhs.psi[s][1]]
            })
            .collect();
        let da = next.a.sub(&prev.a).scale(0.5 / h).sub(&rhs.a);
        spin += h * fields::section_inner(&lat3, &dpsi, &dpsi);
        conn += h * lattice::inner(&lat3, &da, &da);
    }
    Ok(FlowDefect { spinor: spin.sqrt(), connection: conn.sqrt() })
}
