//! Covariant derivative, twisted Dirac operator, curvature, Seiberg–Witten
//! residuals, the Weitzenböck defect and the linearization `(T, G)`.
//!
//! Conventions: the link variable acting on `S⁺ ⊗ L` is `U_μ(x) = exp(-iθ_μ(x)/2)`
//! with `θ` the `L²` link angle, and
//!
//! ```text
//! ∇_μψ(x) = (U_μ(x) ψ(x+μ) − conj U_μ(x−μ) ψ(x−μ)) / 2a_μ
//! D⁺ψ = Σ τ_k ∇_kψ,      D⁻χ = −Σ τ_k† ∇_kχ
//! ```
//!
//! Curvature entering the residuals is the clover average of the four
//! plaquettes around each site, so every term is centred at the site.

use serde::Serialize;

use crate::clifford::{self, Half, M2, C64};
use crate::error::{Error, Result};
use crate::fields::{self, Config, Section, Tangent};
use crate::lattice::{self, Cochain, TorusLattice};
use crate::par;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Spinor-valued 1-cochain, entry `s * dim + μ`.
pub type SpinorForm = Vec<Half>;

fn require_4d(lat: &TorusLattice) -> Result<()> {
    if lat.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: lat.dim() });
    }
    Ok(())
}

#[inline]
fn axpy2(acc: &mut Half, m: &M2, v: &Half) {
    let w = clifford::m2_apply(m, v);
    acc[0] += w[0];
    acc[1] += w[1];
}

/// `∇_μψ` at one site for a given set of link phases.
#[inline]
pub(crate) fn nabla_at(lat: &TorusLattice, phases: &[C64], psi: &[Half], s: usize, mu: usize) -> Half {
    let d = lat.dim();
    let f = lat.fwd(s, mu);
    let b = lat.bwd(s, mu);
    let u = phases[s * d + mu];
    let ub = phases[b * d + mu].conj();
    let h = 0.5 / lat.spacings()[mu];
    [(u * psi[f][0] - ub * psi[b][0]) * h, (u * psi[f][1] - ub * psi[b][1]) * h]
}

/// `∇ψ` for explicit link phases (any dimension).
pub fn nabla_with(lat: &TorusLattice, phases: &[C64], psi: &[Half]) -> SpinorForm {
    let d = lat.dim();
    par::map_collect(lat.n_sites() * d, |i| nabla_at(lat, phases, psi, i / d, i % d))
}

/// The covariant derivative `∇_Aψ` as a spinor-valued 1-cochain.
pub fn covariant_derivative(c: &Config) -> SpinorForm {
    nabla_with(&c.lat, &c.link_phases(), &c.psi)
}

/// `Σ_μ ∇_μ∇_μψ`, built from the same central stencil twice.
pub fn nabla_squared_with(lat: &TorusLattice, phases: &[C64], psi: &[Half]) -> Section {
    let d = lat.dim();
    let first = nabla_with(lat, phases, psi);
    let mut out = fields::zero_section(lat);
    for mu in 0..d {
        let comp: Section = (0..lat.n_sites()).map(|s| first[s * d + mu]).collect();
        let second = par::map_collect(lat.n_sites(), |s| nabla_at(lat, phases, &comp, s, mu));
        for (o, x) in out.iter_mut().zip(second) {
            o[0] += x[0];
            o[1] += x[1];
        }
    }
    out
}

/// `D⁺` on `S⁺ ⊗ L` from precomputed link phases.
pub fn dirac_plus_with(lat: &TorusLattice, phases: &[C64], psi: &[Half]) -> Section {
    let taus: Vec<M2> = (0..4).map(clifford::tau).collect();
    par::map_collect(lat.n_sites(), |s| {
        let mut acc = [ZERO; 2];
        for (k, t) in taus.iter().enumerate() {
            axpy2(&mut acc, t, &nabla_at(lat, phases, psi, s, k));
        }
        acc
    })
}

/// `D⁻` on `S⁻ ⊗ L`, the adjoint of `D⁺`.
pub fn dirac_minus_with(lat: &TorusLattice, phases: &[C64], chi: &[Half]) -> Section {
    let taus: Vec<M2> = (0..4).map(|k| clifford::m2_scale(&clifford::m2_adjoint(&clifford::tau(k)), C64::new(-1.0, 0.0))).collect();
    par::map_collect(lat.n_sites(), |s| {
        let mut acc = [ZERO; 2];
        for (k, t) in taus.iter().enumerate() {
            axpy2(&mut acc, t, &nabla_at(lat, phases, chi, s, k));
        }
        acc
    })
}

/// The twisted Dirac operator `D_A : S⁺ ⊗ L → S⁻ ⊗ L`.
pub fn dirac(c: &Config) -> Result<Section> {
    require_4d(&c.lat)?;
    Ok(dirac_plus_with(&c.lat, &c.link_phases(), &c.psi))
}

/// The operator `S⁻ ⊗ L → S⁺ ⊗ L` at the connection of `c`, applied to `chi`.
pub fn dirac_adjoint(c: &Config, chi: &[Half]) -> Result<Section> {
    require_4d(&c.lat)?;
    if chi.len() != c.lat.n_sites() {
        return Err(Error::ShapeMismatch("section length differs from lattice".into()));
    }
    Ok(dirac_minus_with(&c.lat, &c.link_phases(), chi))
}

/// Plaquette curvature `F₀ + da`.
pub fn curvature(c: &Config) -> Cochain {
    let da = lattice::d(&c.lat, &c.a).expect("1-cochain");
    c.bg.field_cochain(&c.lat).add(&da)
}

/// Site-centred average of a 2-cochain over the four plaquettes touching each site.
pub fn clover(lat: &TorusLattice, f: &Cochain) -> Cochain {
    let nc = lat.n_comps(2);
    let masks = lat.comp_masks(2).to_vec();
    let values = par::map_collect(lat.n_sites() * nc, |i| {
        let (s, c) = (i / nc, i % nc);
        let m = masks[c];
        let u = m.trailing_zeros() as usize;
        let v = (31 - m.leading_zeros()) as usize;
        let su = lat.bwd(s, u);
        let sv = lat.bwd(s, v);
        let suv = lat.bwd(su, v);
        0.25 * (f.values[s * nc + c] + f.values[su * nc + c] + f.values[sv * nc + c] + f.values[suv * nc + c])
    });
    Cochain { degree: 2, values }
}

/// Transpose of [`clover`] with respect to the cochain inner product.
pub fn clover_adjoint(lat: &TorusLattice, g: &Cochain) -> Cochain {
    let nc = lat.n_comps(2);
    let masks = lat.comp_masks(2).to_vec();
    let values = par::map_collect(lat.n_sites() * nc, |i| {
        let (s, c) = (i / nc, i % nc);
        let m = masks[c];
        let u = m.trailing_zeros() as usize;
        let v = (31 - m.leading_zeros()) as usize;
        let su = lat.fwd(s, u);
        let sv = lat.fwd(s, v);
        let suv = lat.fwd(su, v);
        0.25 * (g.values[s * nc + c] + g.values[su * nc + c] + g.values[sv * nc + c] + g.values[suv * nc + c])
    });
    Cochain { degree: 2, values }
}

/// Site-centred curvature `F₀ + clover(da)`.
pub fn clover_curvature(c: &Config) -> Cochain {
    clover(&c.lat, &curvature(c))
}

/// Self-dual part of the site-centred curvature.
pub fn sd_curvature(c: &Config) -> Result<Cochain> {
    lattice::selfdual_project(&c.lat, &clover_curvature(c))
}

/// The quadratic form `q(ψ)` as a self-dual 2-cochain.
pub fn quadratic_cochain(lat: &TorusLattice, psi: &[Half]) -> Cochain {
    let values = par::map_collect(lat.n_sites() * 6, |i| clifford::quadratic_form(&psi[i / 6])[i % 6]);
    Cochain { degree: 2, values }
}

/// Derivative of `q` at `ψ` in direction `φ`, i.e. `½ Im⟨e_ie_jψ, φ⟩`.
#[inline]
pub fn quadratic_form_derivative(psi: &Half, phi: &Half) -> [f64; 6] {
    let cross = psi[0].conj() * phi[1] + phi[0].conj() * psi[1];
    let b = [2.0 * cross.re, 2.0 * cross.im, 2.0 * (psi[0].conj() * phi[0] - psi[1].conj() * phi[1]).re];
    let (q1, q2, q3) = (-0.25 * b[0], -0.25 * b[1], -0.25 * b[2]);
    [q1, q2, q3, q3, -q2, q1]
}

/// Errors unless `eta` is a self-dual 4d 2-cochain.
pub fn check_self_dual(lat: &TorusLattice, eta: &Cochain) -> Result<()> {
    require_4d(lat)?;
    if eta.degree != 2 || eta.values.len() != lat.n_sites() * 6 {
        return Err(Error::ShapeMismatch("perturbation must be a 2-cochain".into()));
    }
    let p = lattice::selfdual_project(lat, eta)?;
    let viol = eta.sub(&p).max_abs();
    if viol > 1e-12 * eta.max_abs().max(1.0) {
        return Err(Error::NotSelfDual(viol));
    }
    Ok(())
}

/// Residuals of the (perturbed) Seiberg–Witten equations.
#[derive(Debug, Clone)]
pub struct SWResidual {
    pub dirac: Section,
    pub curv: Cochain,
}

impl SWResidual {
    pub fn dirac_norm(&self, lat: &TorusLattice) -> f64 {
        fields::section_norm(lat, &self.dirac)
    }

    pub fn curv_norm(&self, lat: &TorusLattice) -> f64 {
        lattice::norm(lat, &self.curv)
    }

    /// `sqrt(‖dirac‖² + ‖curv‖²)`
    pub fn norm(&self, lat: &TorusLattice) -> f64 {
        self.dirac_norm(lat).hypot(self.curv_norm(lat))
    }
}

/// `(D_Aψ, F_A⁺ + η − q(ψ))`.
pub fn sw_residual(c: &Config, eta: Option<&Cochain>) -> Result<SWResidual> {
    require_4d(&c.lat)?;
    if let Some(e) = eta {
        check_self_dual(&c.lat, e)?;
    }
    let lat = &c.lat;
    let dirac = dirac_plus_with(lat, &c.link_phases(), &c.psi);
    let fp = sd_curvature(c)?;
    let values = par::map_collect(lat.n_sites() * 6, |i| {
        let (s, k) = (i / 6, i % 6);
        fp.values[i] + eta.map_or(0.0, |e| e.values[i]) - clifford::quadratic_form(&c.psi[s])[k]
    });
    Ok(SWResidual { dirac, curv: Cochain { degree: 2, values } })
}

/// `c(F)ψ = -(i/2) Σ_{i<j} F_ij e_ie_j ψ` sitewise.
pub fn curvature_action(lat: &TorusLattice, f: &Cochain, psi: &[Half]) -> Section {
    let minus_half_i = C64::new(0.0, -0.5);
    par::map_collect(lat.n_sites(), |s| {
        let w: [f64; 6] = f.values[s * 6..s * 6 + 6].try_into().unwrap();
        let m = clifford::m2_scale(&clifford::two_form_matrix(&w), minus_half_i);
        clifford::m2_apply(&m, &psi[s])
    })
}

/// Transport of `ψ(x + s_k e_k)` to `x` along one link.
#[inline]
fn hop(lat: &TorusLattice, phases: &[C64], x: usize, mu: usize, forward: bool) -> (usize, C64) {
    let d = lat.dim();
    if forward {
        (lat.fwd(x, mu), phases[x * d + mu])
    } else {
        let b = lat.bwd(x, mu);
        (b, phases[b * d + mu].conj())
    }
}

/// Curvature action built from the same link transports as `∇`:
///
/// ```text
/// c_A ψ(x) = -(i/2) Σ_{k<l} e_ke_l · ¼ Σ_corners F_kl(plaquette) · ψ(corner)
/// ```
///
/// where `ψ(corner)` is transported to `x` along the mean of the two
/// two-link paths. It agrees with the pointwise action `c(F_clover)` to `O(a²)`.
pub fn curvature_action_matched(c: &Config) -> Result<Section> {
    require_4d(&c.lat)?;
    let lat = &c.lat;
    let phases = c.link_phases();
    let f = curvature(c);
    let pairs: Vec<M2> = clifford::PAIRS4.iter().map(|&(i, j)| clifford::pair_on_plus(i, j)).collect();
    let psi = &c.psi;
    Ok(par::map_collect(lat.n_sites(), |x| {
        let mut acc = [ZERO; 2];
        for (slot, &(k, l)) in clifford::PAIRS4.iter().enumerate() {
            let mut avg = [ZERO; 2];
            for (fk, fl) in [(true, true), (true, false), (false, true), (false, false)] {
                let (xk, tk) = hop(lat, &phases, x, k, fk);
                let (xl, tl) = hop(lat, &phases, x, l, fl);
                let (corner, tkl) = hop(lat, &phases, xk, l, fl);
                let (_, tlk) = hop(lat, &phases, xl, k, fk);
                let path = 0.5 * (tk * tkl + tl * tlk);
                let base = if fk { x } else { lat.bwd(x, k) };
                let base = if fl { base } else { lat.bwd(base, l) };
                let w = 0.25 * f.values[base * 6 + slot] * path;
                avg[0] += w * psi[corner][0];
                avg[1] += w * psi[corner][1];
            }
            axpy2(&mut acc, &pairs[slot], &avg);
        }
        [acc[0] * C64::new(0.0, -0.5), acc[1] * C64::new(0.0, -0.5)]
    }))
}

fn defect_with(c: &Config, cf: &[Half]) -> Section {
    let lat = &c.lat;
    let phases = c.link_phases();
    let dd = dirac_minus_with(lat, &phases, &dirac_plus_with(lat, &phases, &c.psi));
    // ∇*∇ = −Σ∇_μ∇_μ
    let lap = nabla_squared_with(lat, &phases, &c.psi);
    par::map_collect(lat.n_sites(), |s| [dd[s][0] + lap[s][0] - cf[s][0], dd[s][1] + lap[s][1] - cf[s][1]])
}

/// `D⁻D⁺ψ − ∇*∇ψ − c_A ψ` with the stencil-matched curvature action.
pub fn weitzenbock_defect(c: &Config) -> Result<Section> {
    let cf = curvature_action_matched(c)?;
    Ok(defect_with(c, &cf))
}

/// Same defect with the pointwise action `c(F_clover)ψ(x)`.
pub fn weitzenbock_defect_pointwise(c: &Config) -> Result<Section> {
    require_4d(&c.lat)?;
    let cf = curvature_action(&c.lat, &clover_curvature(c), &c.psi);
    Ok(defect_with(c, &cf))
}

/// Norm of the Weitzenböck defect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeitzenbockResidual {
    pub value: f64,
    /// `true` when `value` is divided by `‖ψ‖`; `false` for `ψ = 0`.
    pub relative: bool,
}

pub fn weitzenbock_residual(c: &Config) -> Result<WeitzenbockResidual> {
    relative_norm(c, &weitzenbock_defect(c)?)
}

pub fn weitzenbock_residual_pointwise(c: &Config) -> Result<WeitzenbockResidual> {
    relative_norm(c, &weitzenbock_defect_pointwise(c)?)
}

fn relative_norm(c: &Config, defect: &[Half]) -> Result<WeitzenbockResidual> {
    let num = fields::section_norm(&c.lat, defect);
    let den = fields::section_norm(&c.lat, &c.psi);
    Ok(if den > 0.0 {
        WeitzenbockResidual { value: num / den, relative: true }
    } else {
        WeitzenbockResidual { value: num, relative: false }
    })
}

/// Linearization of [`sw_residual`] at a base configuration.
#[derive(Debug, Clone)]
pub struct LinearizedOp {
    pub base: Config,
    phases: Vec<C64>,
}

/// Image of a tangent vector under `T`.
#[derive(Debug, Clone)]
pub struct LinearImage {
    pub dirac: Section,
    pub curv: Cochain,
}

impl LinearImage {
    pub fn norm(&self, lat: &TorusLattice) -> f64 {
        fields::section_norm(lat, &self.dirac).hypot(lattice::norm(lat, &self.curv))
    }
}

pub fn linearize(c: &Config) -> Result<LinearizedOp> {
    require_4d(&c.lat)?;
    Ok(LinearizedOp { base: c.clone(), phases: c.link_phases() })
}

impl LinearizedOp {
    /// `T(α, φ) = (D_Aφ + δ_αD ψ₀,  P⁺ clover(dα) − ½ Im⟨e_ie_jψ₀, φ⟩)`.
    pub fn apply(&self, t: &Tangent) -> Result<LinearImage> {
        let c = &self.base;
        let lat = &c.lat;
        if t.a.degree != 1 || t.a.values.len() != lat.n_sites() * 4 || t.psi.len() != lat.n_sites() {
            return Err(Error::ShapeMismatch("tangent does not match the base configuration".into()));
        }
        let taus: Vec<M2> = (0..4).map(clifford::tau).collect();
        let psi0 = &c.psi;
        let ph = &self.phases;
        let quarter_i = C64::new(0.0, -0.25);
        let dirac = par::map_collect(lat.n_sites(), |s| {
            let mut acc = [ZERO; 2];
            for (k, tk) in taus.iter().enumerate() {
                let mut v = nabla_at(lat, ph, &t.psi, s, k);
                let f = lat.fwd(s, k);
                let b = lat.bwd(s, k);
                let af = t.a.values[s * 4 + k] * ph[s * 4 + k];
                let ab = t.a.values[b * 4 + k] * ph[b * 4 + k].conj();
                for i in 0..2 {
                    v[i] += quarter_i * (af * psi0[f][i] + ab * psi0[b][i]);
                }
                axpy2(&mut acc, tk, &v);
            }
            acc
        });
        let dalpha = clover(lat, &lattice::d(lat, &t.a)?);
        let values = par::map_collect(lat.n_sites() * 6, |i| {
            let (s, k) = (i / 6, i % 6);
            let sd = lattice::selfdual_components(&dalpha.values[s * 6..s * 6 + 6]);
            sd[k] - quadratic_form_derivative(&psi0[s], &t.psi[s])[k]
        });
        Ok(LinearImage { dirac, curv: Cochain { degree: 2, values } })
    }
}

/// Infinitesimal gauge action `G(f) = (2 df, i f ψ₀)`.
pub fn gauge_tangent(c: &Config, f: &Cochain) -> Result<Tangent> {
    if f.degree != 0 || f.values.len() != c.lat.n_sites() {
        return Err(Error::ShapeMismatch("gauge generator must be a 0-cochain".into()));
    }
    let a = lattice::d(&c.lat, f)?.scale(2.0);
    let psi = c.psi.iter().zip(&f.values).map(|(p, &x)| [p[0] * C64::new(0.0, x), p[1] * C64::new(0.0, x)]).collect();
    Ok(Tangent { a, psi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{gauge_act, random_config, random_gauge_map, random_tangent};
    use crate::lattice::{flux_background, flux_matrix};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn cfg(sizes: &[usize], spacing: &[f64], m: &[i64], seed: u64, amp: f64) -> Config {
        let lat = Arc::new(TorusLattice::new(sizes, spacing).unwrap());
        let bg = Arc::new(flux_background(&lat, &flux_matrix(lat.dim(), m).unwrap()).unwrap());
        random_config(lat, bg, seed, amp).unwrap()
    }

    fn constant_psi(c: &Config, v: Half) -> Config {
        c.with_fields(c.lat.zeros(1), vec![v; c.lat.n_sites()])
    }

    fn max_diff(u: &[Half], v: &[Half]) -> f64 {
        u.iter().zip(v).map(|(a, b)| (a[0] - b[0]).norm().max((a[1] - b[1]).norm())).fold(0.0, f64::max)
    }

    #[test]
    fn constant_spinor_is_parallel() {
        let c = cfg(&[4, 4, 4, 4], &[1.0; 4], &[0; 6], 1, 0.3);
        let k = constant_psi(&c, [C64::new(0.3, 0.1), C64::new(-1.0, 0.4)]);
        assert!(covariant_derivative(&k).iter().all(|v| v[0].norm() < 1e-15 && v[1].norm() < 1e-15));
        assert!(dirac(&k).unwrap().iter().all(|v| v[0].norm() < 1e-15 && v[1].norm() < 1e-15));
        assert_eq!(weitzenbock_residual(&k).unwrap().value, 0.0);
        let r = sw_residual(&c.with_fields(c.lat.zeros(1), fields::zero_section(&c.lat)), None).unwrap();
        assert_eq!(r.norm(&c.lat), 0.0);
    }

    #[test]
    fn dirac_blocks_are_mutually_adjoint() {
        let c = cfg(&[4, 5, 4, 6], &[1.0, 0.7, 1.3, 0.9], &[2, 0, -2, 0, 4, 0], 3, 0.8);
        let chi = random_tangent(&c.lat, 11).psi;
        let lhs = fields::section_inner_complex(&c.lat, &dirac(&c).unwrap(), &chi);
        let rhs = fields::section_inner_complex(&c.lat, &c.psi, &dirac_adjoint(&c, &chi).unwrap());
        assert!((lhs - rhs).norm() < 1e-11 * lhs.norm().max(1.0), "{lhs} {rhs}");
    }

    #[test]
    fn covariance_is_exact() {
        let c = cfg(&[4, 4, 5, 4], &[1.0, 0.9, 1.1, 1.0], &[2, 0, 0, 0, 0, -2], 5, 0.6);
        let g = random_gauge_map(&c.lat, 6, 3.0, 2);
        let h = gauge_act(&g, &c).unwrap();
        let d = c.lat.dim();
        let lhs = covariant_derivative(&h);
        let rhs = covariant_derivative(&c);
        for s in 0..c.lat.n_sites() {
            let ph = C64::from_polar(1.0, g.phase(&c.lat, s));
            for mu in 0..d {
                let r = rhs[s * d + mu];
                let l = lhs[s * d + mu];
                assert!((l[0] - r[0] * ph).norm() < 1e-12 && (l[1] - r[1] * ph).norm() < 1e-12);
            }
        }
        let r0 = sw_residual(&c, None).unwrap();
        let r1 = sw_residual(&h, None).unwrap();
        assert!((r0.dirac_norm(&c.lat) - r1.dirac_norm(&c.lat)).abs() < 1e-11 * r0.dirac_norm(&c.lat));
        assert!((r0.curv_norm(&c.lat) - r1.curv_norm(&c.lat)).abs() < 1e-11 * r0.curv_norm(&c.lat));
    }

    #[test]
    fn plane_wave_derivative_converges() {
        let mut errs = vec![];
        for n in [8usize, 16, 32] {
            let lat = Arc::new(TorusLattice::new(&[n, 4, 4, 4], &[1.0 / n as f64, 0.25, 0.25, 0.25]).unwrap());
            let bg = Arc::new(flux_background(&lat, &flux_matrix(4, &[0; 6]).unwrap()).unwrap());
            let s0 = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
            let psi = (0..lat.n_sites())
                .map(|s| {
                    let ph = C64::from_polar(1.0, 2.0 * PI * lat.position(s, 0));
                    [s0[0] * ph, s0[1] * ph]
                })
                .collect();
            let c = Config::new(lat.clone(), bg, lat.zeros(1), psi).unwrap();
            let nab = covariant_derivative(&c);
            let norm = (lat.cell_volume() * nab.iter().map(|v| v[0].norm_sqr() + v[1].norm_sqr()).sum::<f64>()).sqrt();
            let exact = 2.0 * PI * fields::section_norm(&lat, &c.psi);
            errs.push((norm - exact).abs() / exact);
        }
        assert!(errs[0] / errs[1] > 3.8 && errs[1] / errs[2] > 3.9, "{errs:?}");
    }

    #[test]
    fn leibniz_symbol() {
        // D(fψ) − fDψ = Σ τ_k (∂_k f) ψ up to O(a²)
        let mut errs = vec![];
        for n in [16usize, 32] {
            let h = 1.0 / n as f64;
            let c = cfg(&[n, 4, n, 4], &[h, 0.25, h, 0.25], &[0; 6], 9, 0.5);
            let lat = &c.lat;
            let f: Vec<f64> = (0..lat.n_sites()).map(|s| (2.0 * PI * (lat.position(s, 0) + 2.0 * lat.position(s, 2))).sin()).collect();
            let fpsi: Section = c.psi.iter().zip(&f).map(|(p, &x)| [p[0] * x, p[1] * x]).collect();
            let lhs = dirac(&c.with_fields(c.a.clone(), fpsi)).unwrap();
            let dpsi = dirac(&c).unwrap();
            let mut err = 0.0f64;
            for s in 0..lat.n_sites() {
                let arg = 2.0 * PI * (lat.position(s, 0) + 2.0 * lat.position(s, 2));
                let grad = [2.0 * PI * arg.cos(), 0.0, 4.0 * PI * arg.cos(), 0.0];
                let mut sym = [ZERO; 2];
                for k in 0..4 {
                    axpy2(&mut sym, &clifford::m2_scale(&clifford::tau(k), C64::new(grad[k], 0.0)), &c.psi[s]);
                }
                for i in 0..2 {
                    err = err.max((lhs[s][i] - f[s] * dpsi[s][i] - sym[i]).norm());
                }
            }
            errs.push(err);
        }
        assert!(errs[0] / errs[1] > 3.5, "{errs:?}");
    }

    #[test]
    fn free_dirac_fourier_symbol() {
        let lat = Arc::new(TorusLattice::new(&[4, 6, 4, 5], &[1.0, 0.5, 2.0, 1.5]).unwrap());
        let bg = Arc::new(flux_background(&lat, &flux_matrix(4, &[0; 6]).unwrap()).unwrap());
        let modes = [1i64, 2, 3, 1];
        let psi: Section = (0..lat.n_sites())
            .map(|s| {
                let arg: f64 = (0..4).map(|mu| 2.0 * PI * (modes[mu] * lat.coord(s, mu) as i64) as f64 / lat.sizes()[mu] as f64).sum();
                let ph = C64::from_polar(1.0, arg);
                [ph * 0.7, ph * C64::new(0.2, -0.5)]
            })
            .collect();
        let c = Config::new(lat.clone(), bg, lat.zeros(1), psi).unwrap();
        let ph = c.link_phases();
        let dd = dirac_minus_with(&lat, &ph, &dirac_plus_with(&lat, &ph, &c.psi));
        let eig: f64 = (0..4)
            .map(|mu| {
                let t = (2.0 * PI * modes[mu] as f64 / lat.sizes()[mu] as f64).sin() / lat.spacings()[mu];
                t * t
            })
            .sum();
        let expect: Section = c.psi.iter().map(|p| [p[0] * eig, p[1] * eig]).collect();
        assert!(max_diff(&dd, &expect) < 1e-12);
    }

    #[test]
    fn curvature_basics() {
        let c = cfg(&[4, 4, 4, 4], &[1.0; 4], &[2, 0, 0, 0, 0, 4], 2, 0.0);
        let f = curvature(&c);
        let f0 = c.bg.field();
        for s in 0..c.lat.n_sites() {
            for k in 0..6 {
                assert_eq!(f.values[s * 6 + k], f0[k]);
            }
        }
        let c = cfg(&[4, 4, 4, 4], &[1.0; 4], &[2, 0, 0, 0, 0, 4], 2, 1.0);
        let f = curvature(&c);
        assert!(lattice::d(&c.lat, &f).unwrap().max_abs() < 1e-12);
        for (u, v) in [(0, 1), (2, 3), (1, 3)] {
            let total = lattice::flux_through(&c.lat, &f, u, v, 7);
            let expect = 2.0 * PI * c.bg.chern_l2(u, v) as f64;
            assert!((total - expect).abs() < 1e-11);
        }
    }

    #[test]
    fn residual_with_flux_and_no_spinor() {
        let c = cfg(&[4, 4, 4, 4], &[1.0, 1.0, 2.0, 1.0], &[2, 0, 0, 0, 0, 0], 2, 0.0);
        let r = sw_residual(&c, None).unwrap();
        let f01 = 2.0 * PI * 2.0 / (4.0 * 4.0);
        for s in 0..c.lat.n_sites() {
            let v = &r.curv.values[s * 6..s * 6 + 6];
            let expect = [f01 / 2.0, 0.0, 0.0, 0.0, 0.0, f01 / 2.0];
            assert!(v.iter().zip(expect).all(|(a, b)| (a - b).abs() < 1e-14));
        }
        assert_eq!(r.dirac_norm(&c.lat), 0.0);
    }

    #[test]
    fn curv_residual_is_self_dual_and_eta_is_checked() {
        let c = cfg(&[4, 4, 4, 4], &[1.0; 4], &[2, -2, 0, 0, 0, 2], 4, 0.9);
        let eta = lattice::selfdual_project(&c.lat, &Cochain::from_fn(&c.lat, 2, |s, k| ((s * 7 + k) % 5) as f64 * 0.01)).unwrap();
        let r = sw_residual(&c, Some(&eta)).unwrap();
        let p = lattice::selfdual_project(&c.lat, &r.curv).unwrap();
        assert!(r.curv.sub(&p).max_abs() < 1e-15);
        let bad = Cochain::from_fn(&c.lat, 2, |_, k| if k == 0 { 1.0 } else { 0.0 });
        assert!(matches!(sw_residual(&c, Some(&bad)), Err(Error::NotSelfDual(_))));
    }

    #[test]
    fn weitzenbock_constant_flux_constant_spinor() {
        // the stencil mismatch vanishes with the spacing
        let mut vals = vec![];
        for n in [8usize, 16] {
            let lat = Arc::new(TorusLattice::cubic(4, n, 8.0 / n as f64).unwrap());
            let bg = Arc::new(flux_background(&lat, &flux_matrix(4, &[2, 0, 0, 0, 0, 2]).unwrap()).unwrap());
            let psi = vec![[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]; lat.n_sites()];
            let c = Config::new(lat.clone(), bg, lat.zeros(1), psi).unwrap();
            vals.push(weitzenbock_residual(&c).unwrap().value);
        }
        assert!(vals[1] < vals[0]);
    }

    #[test]
    fn weitzenbock_zero_spinor_flags_absolute() {
        let c = cfg(&[4, 4, 4, 4], &[1.0; 4], &[0; 6], 1, 0.0);
        let w = weitzenbock_residual(&c).unwrap();
        assert!(!w.relative && w.value == 0.0);
    }

    #[test]
    fn linearization_matches_central_differences() {
        let c = cfg(&[4, 4, 5, 4], &[1.0, 0.8, 1.0, 1.2], &[2, 0, 0, 0, 0, 0], 12, 0.7);
        let t = linearize(&c).unwrap();
        for seed in 0..3 {
            let v = random_tangent(&c.lat, 100 + seed);
            let img = t.apply(&v).unwrap();
            let eps = 1e-5;
            let rp = sw_residual(&c.step(eps, &v), None).unwrap();
            let rm = sw_residual(&c.step(-eps, &v), None).unwrap();
            let fd_dirac: Section = rp.dirac.iter().zip(&rm.dirac).map(|(p, m)| [(p[0] - m[0]) / (2.0 * eps), (p[1] - m[1]) / (2.0 * eps)]).collect();
            let fd_curv = rp.curv.sub(&rm.curv).scale(0.5 / eps);
            let e1 = fields::section_norm(&c.lat, &fields::section_sub(&fd_dirac, &img.dirac)) / fields::section_norm(&c.lat, &img.dirac);
            let e2 = lattice::norm(&c.lat, &fd_curv.sub(&img.curv)) / lattice::norm(&c.lat, &img.curv);
            assert!(e1 < 1e-6 && e2 < 1e-6, "{e1} {e2}");
        }
    }

    #[test]
    fn t_of_g_is_multiplication_by_dirac() {
        let c = cfg(&[4, 4, 4, 4], &[1.0; 4], &[2, 0, 0, 0, 0, 2], 13, 0.8);
        let f = Cochain::from_fn(&c.lat, 0, |s, _| ((s * 37) % 11) as f64 / 11.0 - 0.5);
        let img = linearize(&c).unwrap().apply(&gauge_tangent(&c, &f).unwrap()).unwrap();
        let dpsi = dirac(&c).unwrap();
        let expect: Section = dpsi.iter().zip(&f.values).map(|(p, &x)| [p[0] * C64::new(0.0, x), p[1] * C64::new(0.0, x)]).collect();
        assert!(max_diff(&img.dirac, &expect) < 1e-12);
        assert!(img.curv.max_abs() < 1e-14);
        let flat = cfg(&[4, 4, 4, 4], &[1.0; 4], &[0; 6], 13, 0.0);
        let img = linearize(&flat).unwrap().apply(&gauge_tangent(&flat, &f).unwrap()).unwrap();
        assert!(img.norm(&flat.lat) < 1e-13);
    }

    #[test]
    fn three_dimensional_lattice_rejected_for_dirac() {
        let c = cfg(&[4, 4, 4], &[1.0; 3], &[0; 3], 1, 0.1);
        assert!(dirac(&c).is_err());
        assert!(sw_residual(&c, None).is_err());
        assert_eq!(covariant_derivative(&c).len(), c.lat.n_sites() * 3);
    }
}
