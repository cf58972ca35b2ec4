//! The standard complex structure on the 4-torus and the Kähler form of the
//! Seiberg–Witten equations.
//!
//! Real directions pair as `z₁ = x₀ + i x₁`, `z₂ = x₂ + i x₃`, with Kähler
//! form `ω = e01 + e23`. On `S⁺`, `ρ(ω) = -2iσ₁` has eigenvector `u₀ = (1,1)/√2`
//! (eigenvalue `-2i`, the `Λ⁰⁰` summand) and `u₂ = (1,-1)/√2` (eigenvalue `+2i`,
//! the `Λ⁰²` summand). A spinor is written `ψ = α u₀ − i β̄ u₂`.
//!
//! In these conventions the curvature equation splits as
//!
//! ```text
//! F^{2,0}           = −¼ αβ    dz₁∧dz₂
//! (F^{1,1})⁺        = −¼ (|α|² − |β|²) ω
//! F^{0,2}           = −¼ ᾱβ̄    dz̄₁∧dz̄₂
//! ```

use serde::{Deserialize, Serialize};

use crate::clifford::{self, Half, M2, C64};
use crate::error::{Error, Result};
use crate::fields::{Config, Section};
use crate::lattice::{self, Cochain, TorusLattice};
use crate::operators;
use crate::par;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct KahlerStructure {
    /// Real direction pairs forming `z₁` and `z₂`.
    pub pairs: [(usize, usize); 2],
    /// `ω` in `(01, 02, 03, 12, 13, 23)` slots.
    pub omega: [f64; 6],
    /// Unit vector spanning `Λ⁰⁰ ⊂ S⁺`.
    pub u0: Half,
    /// Unit vector spanning `Λ⁰² ⊂ S⁺`.
    pub u2: Half,
    /// `S⁻ ≅ Λ⁰¹`: columns are the images of `dz̄₁/√2` and `dz̄₂/√2`.
    pub w: M2,
}

impl Default for KahlerStructure {
    fn default() -> Self {
        Self::standard()
    }
}

impl KahlerStructure {
    pub fn standard() -> Self {
        let r = C64::new(FRAC_1_SQRT_2, 0.0);
        Self {
            pairs: [(0, 1), (2, 3)],
            omega: [1.0, 0.0, 0.0, 0.0, 0.0, 1.0],
            u0: [r, r],
            u2: [r, -r],
            w: [[r, r], [r, -r]],
        }
    }

    pub fn omega_cochain(&self, lat: &TorusLattice) -> Cochain {
        let w = self.omega;
        Cochain::from_fn(lat, 2, move |_, k| w[k])
    }
}

/// Recomputes `(u₀, u₂, W)` from scratch: eigenvectors of `ρ(ω)` with
/// eigenvalues `-2i` and `+2i` (phase fixed by a positive first entry), and
/// `W = [τ₀u₀ | τ₀u₂]`, the principal symbol in direction `e₀`.
pub fn regenerate_identification() -> (Half, Half, M2) {
    let ks = KahlerStructure { u0: [ZERO; 2], u2: [ZERO; 2], w: [[ZERO; 2]; 2], ..KahlerStructure::standard() };
    let rho = clifford::two_form_matrix(&ks.omega);
    // Hermitian h = iρ(ω); eigenvalue of ρ is -i·(eigenvalue of h)
    let h = clifford::m2_scale(&rho, C64::new(0.0, 1.0));
    let eig = |target: f64| -> Half {
        // (h - λ)v = 0 for 2×2: v ∝ (h01, λ - h00) or (λ - h11, h10)
        let a = [h[0][1], C64::new(target, 0.0) - h[0][0]];
        let b = [C64::new(target, 0.0) - h[1][1], h[1][0]];
        let v = if clifford::norm_sqr(&a) >= clifford::norm_sqr(&b) { a } else { b };
        let n = clifford::norm_sqr(&v).sqrt();
        let phase = if v[0].norm() > 0.0 { v[0].conj() / v[0].norm() } else { C64::new(1.0, 0.0) };
        [v[0] * phase / n, v[1] * phase / n]
    };
    // ρ = -2i on Λ⁰⁰ ⇔ h = 2; ρ = +2i on Λ⁰² ⇔ h = -2
    let u0 = eig(2.0);
    let u2 = eig(-2.0);
    let t0 = clifford::tau(0);
    let c0 = clifford::m2_apply(&t0, &u0);
    let c2 = clifford::m2_apply(&t0, &u2);
    (u0, u2, [[c0[0], c2[0]], [c0[1], c2[1]]])
}

fn require_4d(lat: &TorusLattice) -> Result<()> {
    if lat.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: lat.dim() });
    }
    Ok(())
}

#[inline]
fn dot_conj(u: &Half, v: &Half) -> C64 {
    u[0].conj() * v[0] + u[1].conj() * v[1]
}

/// `ψ ↦ (α, β)` with `ψ = α u₀ − i β̄ u₂`.
pub fn split_spinor(ks: &KahlerStructure, psi: &[Half]) -> (Vec<C64>, Vec<C64>) {
    let i = C64::new(0.0, 1.0);
    psi.iter()
        .map(|p| {
            let alpha = dot_conj(&ks.u0, p);
            let gamma = dot_conj(&ks.u2, p);
            (alpha, (i * gamma).conj())
        })
        .unzip()
}

/// Inverse of [`split_spinor`].
pub fn join_spinor(ks: &KahlerStructure, alpha: &[C64], beta: &[C64]) -> Result<Section> {
    if alpha.len() != beta.len() {
        return Err(Error::ShapeMismatch("alpha and beta lengths differ".into()));
    }
    let mi = C64::new(0.0, -1.0);
    Ok(alpha
        .iter()
        .zip(beta)
        .map(|(&a, &b)| {
            let g = mi * b.conj();
            [ks.u0[0] * a + ks.u2[0] * g, ks.u0[1] * a + ks.u2[1] * g]
        })
        .collect())
}

/// Components of `√2(∂̄_A α − i ∂̄*_A β̄)` in the unit basis `dz̄_k/√2` of `Λ⁰¹`.
///
/// With `γ = −iβ̄` and `∂̄_k = ½(∇_{2k} + i∇_{2k+1})`, `∂_k = ½(∇_{2k} − i∇_{2k+1})`:
/// `(2∂̄₁α − 2∂₂γ, 2∂̄₂α + 2∂₁γ)`.
pub fn dolbeault_components(ks: &KahlerStructure, c: &Config) -> Result<Vec<[C64; 2]>> {
    require_4d(&c.lat)?;
    let (alpha, beta) = split_spinor(ks, &c.psi);
    let mi = C64::new(0.0, -1.0);
    // pack (α, γ) so one covariant derivative pass handles both
    let packed: Section = alpha.iter().zip(&beta).map(|(&a, &b)| [a, mi * b.conj()]).collect();
    let nab = operators::nabla_with(&c.lat, &c.link_phases(), &packed);
    let i = C64::new(0.0, 1.0);
    let [(x1, y1), (x2, y2)] = ks.pairs;
    Ok(par::map_collect(c.lat.n_sites(), |s| {
        let g = |mu: usize, comp: usize| nab[s * 4 + mu][comp];
        let dbar1_a = g(x1, 0) + i * g(y1, 0);
        let dbar2_a = g(x2, 0) + i * g(y2, 0);
        let d1_g = g(x1, 1) - i * g(y1, 1);
        let d2_g = g(x2, 1) - i * g(y2, 1);
        [dbar1_a - d2_g, dbar2_a + d1_g]
    }))
}

/// The Dolbeault form of the Dirac operator, mapped into `S⁻` by `W`.
pub fn dolbeault_dirac(ks: &KahlerStructure, c: &Config) -> Result<Section> {
    let comps = dolbeault_components(ks, c)?;
    Ok(comps.iter().map(|v| clifford::m2_apply(&ks.w, v)).collect())
}

/// Norms of the three split curvature equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KswResidual {
    pub r20: f64,
    pub r11: f64,
    pub r02: f64,
    /// `sqrt(r20² + r11² + r02²)`
    pub total: f64,
}

/// `dz₁∧dz₂`-coefficient of the `(2,0)` part of a real 2-form.
#[inline]
pub fn two_zero_coefficient(f: &[f64]) -> C64 {
    C64::new(0.25 * (f[1] - f[4]), -0.25 * (f[2] + f[3]))
}

/// Residuals of the split equations, from `(α, β)` and the site-centred curvature.
pub fn ksw_residual(ks: &KahlerStructure, c: &Config, eta: Option<&Cochain>) -> Result<KswResidual> {
    require_4d(&c.lat)?;
    if let Some(e) = eta {
        operators::check_self_dual(&c.lat, e)?;
    }
    let lat = &c.lat;
    let f = operators::clover_curvature(c);
    let (alpha, beta) = split_spinor(ks, &c.psi);
    let vol = lat.cell_volume();
    let field = |s: usize| -> [f64; 6] {
        let mut w: [f64; 6] = f.values[s * 6..s * 6 + 6].try_into().unwrap();
        if let Some(e) = eta {
            for (k, x) in w.iter_mut().enumerate() {
                *x += e.values[s * 6 + k];
            }
        }
        w
    };
    let r20_sq = vol * par::sum(lat.n_sites(), |s| {
        let res = two_zero_coefficient(&field(s)) + 0.25 * alpha[s] * beta[s];
        4.0 * res.norm_sqr()
    });
    let r02_sq = vol * par::sum(lat.n_sites(), |s| {
        let res = two_zero_coefficient(&field(s)).conj() + 0.25 * (alpha[s] * beta[s]).conj();
        4.0 * res.norm_sqr()
    });
    let r11_sq = vol * par::sum(lat.n_sites(), |s| {
        let w = field(s);
        // (F^{1,1})⁺ = ½(F01 + F23) ω and |ω|² = 2
        let res = 0.5 * (w[0] + w[5]) + 0.25 * (alpha[s].norm_sqr() - beta[s].norm_sqr());
        2.0 * res * res
    });
    Ok(KswResidual { r20: r20_sq.sqrt(), r11: r11_sq.sqrt(), r02: r02_sq.sqrt(), total: (r20_sq + r11_sq + r02_sq).sqrt() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignClass {
    /// Positive pairing: solutions have `α ≡ 0`.
    AlphaVanishes,
    /// Negative pairing: solutions have `β ≡ 0`.
    BetaVanishes,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignDiagnostic {
    /// `∫ ω ∧ c₁(L) = (1/4π) ∫ ω ∧ F`
    pub pairing: f64,
    pub class: SignClass,
}

/// Sign of `∫ω∧c₁(L)`, which forces one of `α`, `β` to vanish on solutions.
pub fn sign_diagnostic(ks: &KahlerStructure, c: &Config, tol: f64) -> Result<SignDiagnostic> {
    require_4d(&c.lat)?;
    let f = operators::curvature(c);
    let top = lattice::cup(&c.lat, &ks.omega_cochain(&c.lat), &f)?;
    let pairing = lattice::integrate(&c.lat, &top)? / (4.0 * std::f64::consts::PI);
    let class = if pairing > tol {
        SignClass::AlphaVanishes
    } else if pairing < -tol {
        SignClass::BetaVanishes
    } else {
        SignClass::Indeterminate
    };
    Ok(SignDiagnostic { pairing, class })
}
