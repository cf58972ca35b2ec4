//! Configurations `(A, ψ)`, the gauge group action, Coulomb gauge fixing and
//! seeded band-limited random fields.
//!
//! The stored 1-cochain `a` is an offset over the background connection on
//! `L²`; spinors are sections of `S⁺ ⊗ L` (charge ½). A gauge map
//! `λ = exp(i(f + 2π Σ w_u x_u / L_u))` acts by
//!
//! ```text
//! a ↦ a + 2 (df + 2π w_u dx_u / L_u),     ψ ↦ λ ψ
//! ```
//!
//! which keeps the covariant derivative `∂ − (i/2)A` exactly covariant.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clifford::{Half, C64};
use crate::error::{Error, Result};
use crate::lattice::{self, Cochain, FluxBackground, TorusLattice};
use crate::par;

/// A section of a rank-2 complex bundle, one fiber per site.
pub type Section = Vec<Half>;

pub fn zero_section(lat: &TorusLattice) -> Section {
    vec![[C64::new(0.0, 0.0); 2]; lat.n_sites()]
}

/// Real part of the weighted Hermitian inner product of two sections.
pub fn section_inner(lat: &TorusLattice, u: &[Half], v: &[Half]) -> f64 {
    lat.cell_volume() * par::sum(u.len(), |s| (u[s][0] * v[s][0].conj() + u[s][1] * v[s][1].conj()).re)
}

/// Full complex weighted inner product `Σ vol ⟨u, v⟩`.
pub fn section_inner_complex(lat: &TorusLattice, u: &[Half], v: &[Half]) -> C64 {
    let w = lat.cell_volume();
    let re = par::sum(u.len(), |s| (u[s][0] * v[s][0].conj() + u[s][1] * v[s][1].conj()).re);
    let im = par::sum(u.len(), |s| (u[s][0] * v[s][0].conj() + u[s][1] * v[s][1].conj()).im);
    C64::new(w * re, w * im)
}

pub fn section_norm(lat: &TorusLattice, u: &[Half]) -> f64 {
    section_inner(lat, u, u).sqrt()
}

/// `max_x |ψ(x)|`
pub fn section_sup(u: &[Half]) -> f64 {
    par::max(u.len(), |s| (u[s][0].norm_sqr() + u[s][1].norm_sqr()).sqrt())
}

pub fn section_axpy(u: &[Half], t: f64, v: &[Half]) -> Section {
    u.iter().zip(v).map(|(a, b)| [a[0] + b[0] * t, a[1] + b[1] * t]).collect()
}

pub fn section_sub(u: &[Half], v: &[Half]) -> Section {
    section_axpy(u, -1.0, v)
}

pub fn section_scale(u: &[Half], t: C64) -> Section {
    u.iter().map(|a| [a[0] * t, a[1] * t]).collect()
}

/// A pair `(a, ψ)` on a lattice with a fixed flux background.
#[derive(Debug, Clone)]
pub struct Config {
    pub lat: Arc<TorusLattice>,
    pub bg: Arc<FluxBackground>,
    /// Connection offset, so that the full connection on `L²` is `A₀ + a`.
    pub a: Cochain,
    pub psi: Section,
}

impl Config {
    pub fn new(lat: Arc<TorusLattice>, bg: Arc<FluxBackground>, a: Cochain, psi: Section) -> Result<Self> {
        if a.degree != 1 || a.values.len() != lat.n_sites() * lat.dim() {
            return Err(Error::ShapeMismatch("connection offset must be a 1-cochain on the lattice".into()));
        }
        if psi.len() != lat.n_sites() {
            return Err(Error::ShapeMismatch(format!("section has {} sites, lattice has {}", psi.len(), lat.n_sites())));
        }
        if bg.flux().len() != lat.dim() {
            return Err(Error::ShapeMismatch("flux background dimension differs from lattice".into()));
        }
        Ok(Self { lat, bg, a, psi })
    }

    /// `a = 0`, `ψ = 0`.
    pub fn trivial(lat: Arc<TorusLattice>, bg: Arc<FluxBackground>) -> Self {
        let a = lat.zeros(1);
        let psi = zero_section(&lat);
        Self { lat, bg, a, psi }
    }

    pub fn dim(&self) -> usize {
        self.lat.dim()
    }

    /// Same lattice and background, new fields.
    pub fn with_fields(&self, a: Cochain, psi: Section) -> Self {
        Self { lat: self.lat.clone(), bg: self.bg.clone(), a, psi }
    }

    /// Moves along a tangent direction: `(a + t·α, ψ + t·φ)`.
    pub fn step(&self, t: f64, dir: &Tangent) -> Self {
        self.with_fields(self.a.axpy(t, &dir.a), section_axpy(&self.psi, t, &dir.psi))
    }

    /// Total link angle `θ⁰ + a_μ(x) a_μ` of the `L²` connection.
    #[inline]
    pub fn link_angle(&self, s: usize, mu: usize) -> f64 {
        let d = self.lat.dim();
        self.bg.link_angle(d, s, mu) + self.a.values[s * d + mu] * self.lat.spacings()[mu]
    }

    /// Parallel transport phases `exp(-iθ/2)` acting on `S⁺ ⊗ L`, per link.
    pub fn link_phases(&self) -> Vec<C64> {
        let d = self.lat.dim();
        par::map_collect(self.lat.n_sites() * d, |i| C64::from_polar(1.0, -0.5 * self.link_angle(i / d, i % d)))
    }

    pub fn same_lattice(&self, other: &Config) -> bool {
        Arc::ptr_eq(&self.lat, &other.lat)
            || (self.lat.sizes() == other.lat.sizes() && self.lat.spacings() == other.lat.spacings())
    }
}

/// A tangent vector `(α, φ)`: real 1-cochain and section.
#[derive(Debug, Clone)]
pub struct Tangent {
    pub a: Cochain,
    pub psi: Section,
}

impl Tangent {
    pub fn zeros(lat: &TorusLattice) -> Self {
        Self { a: lat.zeros(1), psi: zero_section(lat) }
    }

    /// Weighted inner product, connection part scaled by `a_weight`.
    pub fn inner_weighted(&self, lat: &TorusLattice, other: &Tangent, a_weight: f64) -> f64 {
        a_weight * lattice::inner(lat, &self.a, &other.a) + section_inner(lat, &self.psi, &other.psi)
    }

    pub fn inner(&self, lat: &TorusLattice, other: &Tangent) -> f64 {
        self.inner_weighted(lat, other, 1.0)
    }

    pub fn norm(&self, lat: &TorusLattice) -> f64 {
        self.inner(lat, self).sqrt()
    }

    /// Number of real degrees of freedom.
    pub fn real_dof(&self) -> usize {
        self.a.values.len() + 4 * self.psi.len()
    }

    pub fn scale(&self, t: f64) -> Tangent {
        Tangent { a: self.a.scale(t), psi: section_scale(&self.psi, C64::new(t, 0.0)) }
    }
}

/// A gauge transformation `exp(i(f + 2π Σ w_u x_u / L_u))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeMap {
    /// Single-valued phase generator, one value per site.
    pub f: Vec<f64>,
    /// Winding numbers `w_u`, the class in `H¹(T; Z)`.
    pub winding: Vec<i64>,
}

impl GaugeMap {
    pub fn identity(lat: &TorusLattice) -> Self {
        Self { f: vec![0.0; lat.n_sites()], winding: vec![0; lat.dim()] }
    }

    /// Pointwise composition `self ∘ other`.
    pub fn compose(&self, other: &GaugeMap) -> GaugeMap {
        GaugeMap {
            f: self.f.iter().zip(&other.f).map(|(a, b)| a + b).collect(),
            winding: self.winding.iter().zip(&other.winding).map(|(a, b)| a + b).collect(),
        }
    }

    /// Total phase at a site.
    #[inline]
    pub fn phase(&self, lat: &TorusLattice, s: usize) -> f64 {
        let wind: f64 = self
            .winding
            .iter()
            .enumerate()
            .map(|(u, &w)| 2.0 * PI * w as f64 * lat.coord(s, u) as f64 / lat.sizes()[u] as f64)
            .sum();
        self.f[s] + wind
    }

    /// The 1-cochain `df + 2π w_u dx_u / L_u` (the logarithmic derivative of λ over i).
    pub fn log_derivative(&self, lat: &TorusLattice) -> Cochain {
        Cochain::from_fn(lat, 1, |s, mu| {
            (self.f[lat.fwd(s, mu)] - self.f[s]) / lat.spacings()[mu] + 2.0 * PI * self.winding[mu] as f64 / lat.extent(mu)
        })
    }
}

/// Applies a gauge map.
pub fn gauge_act(g: &GaugeMap, c: &Config) -> Result<Config> {
    let lat = &c.lat;
    if g.f.len() != lat.n_sites() || g.winding.len() != lat.dim() {
        return Err(Error::ShapeMismatch("gauge map does not match the lattice".into()));
    }
    let shift = g.log_derivative(lat);
    let a = c.a.axpy(2.0, &shift);
    let psi = par::map_collect(lat.n_sites(), |s| {
        let ph = C64::from_polar(1.0, g.phase(lat, s));
        [c.psi[s][0] * ph, c.psi[s][1] * ph]
    });
    Ok(c.with_fields(a, psi))
}

/// Options for [`coulomb_fix`].
#[derive(Debug, Clone, Copy)]
pub struct CoulombOptions {
    /// Target for `‖d* a'‖ / ‖a‖`.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for CoulombOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iters: 10_000 }
    }
}

/// Moves `a` into the co-closed slice with an identity-component gauge map.
pub fn coulomb_fix(c: &Config) -> Result<(Config, GaugeMap)> {
    coulomb_fix_with(c, CoulombOptions::default())
}

pub fn coulomb_fix_with(c: &Config, opts: CoulombOptions) -> Result<(Config, GaugeMap)> {
    let lat = &c.lat;
    // d*(a + 2 df) = 0  ⇔  d*d f = -d*a / 2
    let mut rhs = lattice::d_star(lat, &c.a)?.scale(-0.5);
    let mean = rhs.values.iter().sum::<f64>() / rhs.values.len() as f64;
    rhs.values.iter_mut().for_each(|v| *v -= mean);
    let a_norm = lattice::norm(lat, &c.a);
    let f = poisson_cg(lat, &rhs, 0.01 * opts.tol * a_norm, opts.max_iters)?;
    let g = GaugeMap { f: f.values, winding: vec![0; lat.dim()] };
    let fixed = gauge_act(&g, c)?;
    let residual = lattice::norm(lat, &lattice::d_star(lat, &fixed.a)?);
    if residual > opts.tol * a_norm.max(f64::MIN_POSITIVE) && residual > 1e-13 {
        return Err(Error::PoissonNonConvergence { iterations: opts.max_iters, residual });
    }
    Ok((fixed, g))
}

/// Conjugate gradients for `d*d f = rhs` on 0-cochains (`rhs` must have zero mean).
fn poisson_cg(lat: &TorusLattice, rhs: &Cochain, abs_tol: f64, max_iters: usize) -> Result<Cochain> {
    let apply = |x: &Cochain| -> Result<Cochain> { lattice::d_star(lat, &lattice::d(lat, x)?) };
    let mut x = lat.zeros(0);
    let mut r = rhs.clone();
    let rhs_norm = lattice::norm(lat, rhs);
    if rhs_norm == 0.0 {
        return Ok(x);
    }
    let mut p = r.clone();
    let mut rr = lattice::inner(lat, &r, &r);
    let target = abs_tol.max(1e-15 * rhs_norm);
    for _ in 0..max_iters {
        if rr.sqrt() <= target {
            return Ok(x);
        }
        let ap = apply(&p)?;
        let pap = lattice::inner(lat, &p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rr / pap;
        x = x.axpy(alpha, &p);
        r = r.axpy(-alpha, &ap);
        let rr_new = lattice::inner(lat, &r, &r);
        p = r.axpy(rr_new / rr, &p);
        rr = rr_new;
    }
    if rr.sqrt() <= 1e2 * target {
        return Ok(x);
    }
    Err(Error::PoissonNonConvergence { iterations: max_iters, residual: rr.sqrt() })
}

/// Shape of the random band-limited fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandLimit {
    /// Largest Fourier index per direction.
    pub max_mode: i64,
    /// Number of random plane waves per field component.
    pub n_modes: usize,
}

impl Default for BandLimit {
    fn default() -> Self {
        Self { max_mode: 1, n_modes: 6 }
    }
}

struct PlaneWaves {
    /// per-direction tables `exp(2πi k n / N)` for `k ∈ [-K, K]`
    tables: Vec<Vec<C64>>,
    k_max: i64,
}

impl PlaneWaves {
    fn new(lat: &TorusLattice, k_max: i64) -> Self {
        let width = (2 * k_max + 1) as usize;
        let tables = (0..lat.dim())
            .map(|mu| {
                let n = lat.sizes()[mu];
                let mut t = Vec::with_capacity(width * n);
                for k in -k_max..=k_max {
                    for c in 0..n {
                        t.push(C64::from_polar(1.0, 2.0 * PI * (k * c as i64) as f64 / n as f64));
                    }
                }
                t
            })
            .collect();
        Self { tables, k_max }
    }

    #[inline]
    fn eval(&self, lat: &TorusLattice, s: usize, k: &[i64]) -> C64 {
        let mut z = C64::new(1.0, 0.0);
        for (mu, &km) in k.iter().enumerate() {
            let n = lat.sizes()[mu];
            z *= self.tables[mu][(km + self.k_max) as usize * n + lat.coord(s, mu)];
        }
        z
    }
}

fn random_modes(rng: &mut ChaCha8Rng, dim: usize, band: BandLimit) -> Vec<(Vec<i64>, C64)> {
    (0..band.n_modes)
        .map(|_| {
            let k: Vec<i64> = (0..dim).map(|_| rng.gen_range(-band.max_mode..=band.max_mode)).collect();
            let c = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            (k, c)
        })
        .collect()
}

/// Seeded smooth random configuration (`amplitude` scales both fields).
pub fn random_config(lat: Arc<TorusLattice>, bg: Arc<FluxBackground>, seed: u64, amplitude: f64) -> Result<Config> {
    random_config_with(lat, bg, seed, amplitude, amplitude, BandLimit::default())
}

/// Seeded random configuration with separate amplitudes for `a` and `ψ`.
///
/// The random mode set depends only on the seed, dimension and band limit, so
/// the same seed samples the same continuum fields at every resolution.
pub fn random_config_with(
    lat: Arc<TorusLattice>,
    bg: Arc<FluxBackground>,
    seed: u64,
    a_amplitude: f64,
    psi_amplitude: f64,
    band: BandLimit,
) -> Result<Config> {
    if !(a_amplitude >= 0.0 && psi_amplitude >= 0.0) {
        return Err(Error::InvalidParameter("amplitudes must be non-negative".into()));
    }
    let d = lat.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves = PlaneWaves::new(&lat, band.max_mode);
    let psi_modes: Vec<_> = (0..2).map(|_| random_modes(&mut rng, d, band)).collect();
    let a_modes: Vec<_> = (0..d).map(|_| random_modes(&mut rng, d, band)).collect();
    let norm = 1.0 / (band.n_modes as f64).sqrt();
    let psi = par::map_collect(lat.n_sites(), |s| {
        let mut out = [C64::new(0.0, 0.0); 2];
        for (comp, modes) in psi_modes.iter().enumerate() {
            for (k, c) in modes {
                out[comp] += c * waves.eval(&lat, s, k);
            }
            out[comp] *= psi_amplitude * norm;
        }
        out
    });
    let a = Cochain::from_fn(&lat, 1, |s, mu| {
        a_modes[mu].iter().map(|(k, c)| (c * waves.eval(&lat, s, k)).re).sum::<f64>() * a_amplitude * norm
    });
    Ok(Config { lat, bg, a, psi })
}

/// Random gauge map with per-site phases in `[-amplitude, amplitude]` and
/// windings in `[-max_winding, max_winding]`.
pub fn random_gauge_map(lat: &TorusLattice, seed: u64, amplitude: f64, max_winding: i64) -> GaugeMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = (0..lat.n_sites()).map(|_| amplitude * rng.gen_range(-1.0..1.0)).collect();
    let winding = (0..lat.dim()).map(|_| if max_winding > 0 { rng.gen_range(-max_winding..=max_winding) } else { 0 }).collect();
    GaugeMap { f, winding }
}

/// Random tangent direction with unit-scale entries (not band-limited).
pub fn random_tangent(lat: &TorusLattice, seed: u64) -> Tangent {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = Cochain { degree: 1, values: (0..lat.n_sites() * lat.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect() };
    let psi = (0..lat.n_sites())
        .map(|_| {
            [
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            ]
        })
        .collect();
    Tangent { a, psi }
}
