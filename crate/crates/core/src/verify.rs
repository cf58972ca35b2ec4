//! Named invariant suites with per-check values and tolerances.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clifford::{self, CMatrix, C64, PAIRS4};
use crate::error::{Error, Result};
use crate::fields::{self, gauge_act, random_config, random_gauge_map, random_tangent, Config, GaugeMap};
use crate::functional::{self, FunctionalParams};
use crate::kahler::{self, KahlerStructure};
use crate::lattice::{self, flux_background, flux_matrix, Cochain, TorusLattice};
use crate::operators;
use crate::reduce3d;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Clifford,
    Lattice,
    Weitzenbock,
    Gradient,
    Gauge,
    Kahler,
    Reduce3d,
}

impl Suite {
    pub const ALL: [Suite; 7] =
        [Suite::Clifford, Suite::Lattice, Suite::Weitzenbock, Suite::Gradient, Suite::Gauge, Suite::Kahler, Suite::Reduce3d];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Clifford => "clifford",
            Suite::Lattice => "lattice",
            Suite::Weitzenbock => "weitzenbock",
            Suite::Gradient => "gradient",
            Suite::Gauge => "gauge",
            Suite::Kahler => "kahler",
            Suite::Reduce3d => "reduce3d",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, comparison: Comparison::AtMost, passed: value <= tolerance }
    }

    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, comparison: Comparison::AtLeast, passed: value >= tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Parameters shared by the suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Sites per direction.
    pub size: usize,
    pub spacing: f64,
    /// Upper-triangle flux entries `(m01, m02, …)`; 3d suites use the first three.
    pub flux: Vec<i64>,
    pub kappa: f64,
    pub eta_amplitude: f64,
    pub seed: u64,
    /// Refinement sizes at fixed extent for the Weitzenböck study.
    pub sizes: Vec<usize>,
    /// Random draws per check (spinors, gauge maps, configurations).
    pub samples: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { size: 8, spacing: 1.0, flux: vec![0; 6], kappa: 0.0, eta_amplitude: 0.0, seed: 1, sizes: vec![8, 16, 32], samples: 50 }
    }
}

impl VerifyOptions {
    fn lattice(&self, dim: usize) -> Result<Arc<TorusLattice>> {
        Ok(Arc::new(TorusLattice::cubic(dim, self.size, self.spacing)?))
    }

    fn flux_upper(&self, dim: usize) -> Vec<i64> {
        let n = dim * (dim - 1) / 2;
        (0..n).map(|i| self.flux.get(i).copied().unwrap_or(0)).collect()
    }

    fn config(&self, lat: &Arc<TorusLattice>, seed: u64, amp: f64) -> Result<Config> {
        let bg = flux_background(lat, &flux_matrix(lat.dim(), &self.flux_upper(lat.dim()))?)?;
        random_config(lat.clone(), Arc::new(bg), seed, amp)
    }

    fn params(&self, lat: &TorusLattice) -> FunctionalParams {
        let p = FunctionalParams::weitzenbock(self.kappa);
        if self.eta_amplitude != 0.0 {
            p.with_eta(functional::constant_eta(lat, self.eta_amplitude))
        } else {
            p
        }
    }
}

pub fn run(suite: Suite, opts: &VerifyOptions) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::Clifford => clifford_suite(opts)?,
        Suite::Lattice => lattice_suite(opts)?,
        Suite::Weitzenbock => weitzenbock_suite(opts)?,
        Suite::Gradient => gradient_suite(opts)?,
        Suite::Gauge => gauge_suite(opts)?,
        Suite::Kahler => kahler_suite(opts)?,
        Suite::Reduce3d => reduce3d_suite(opts)?,
    };
    let passed = checks.iter().all(|c| c.passed);
    Ok(SuiteReport { suite, checks, passed })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn random_spinor(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

fn clifford_suite(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let rep = clifford::build_gamma_rep(4)?;
    let e = rep.generators();
    let mut anti: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let mut m = e[i].mul(&e[j]).add(&e[j].mul(&e[i]));
            if i == j {
                m = m.add(&CMatrix::identity(4).scale(C64::new(2.0, 0.0)));
            }
            anti = anti.max(m.max_abs());
        }
    }
    let pairs: Vec<CMatrix> = PAIRS4.iter().map(|&(i, j)| e[i].mul(&e[j])).collect();
    let asd: [[f64; 6]; 3] = [[1.0, 0.0, 0.0, 0.0, 0.0, -1.0], [0.0, 1.0, 0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 1.0, -1.0, 0.0, 0.0]];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (mut re_max, mut asd_max, mut quartic): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..opts.samples.max(1000) {
        let full = random_spinor(&mut rng, 4);
        for p in &pairs {
            re_max = re_max.max(clifford::inner(&p.apply(&full), &full).re.abs());
        }
        let mut plus = random_spinor(&mut rng, 2);
        plus.extend([C64::new(0.0, 0.0); 2]);
        for w in &asd {
            let mut out = vec![C64::new(0.0, 0.0); 4];
            for (k, p) in pairs.iter().enumerate() {
                for (o, v) in out.iter_mut().zip(p.apply(&plus)) {
                    *o += v * w[k];
                }
            }
            asd_max = asd_max.max(clifford::norm_sqr(&out).sqrt());
        }
        let sum: f64 = pairs.iter().map(|p| clifford::inner(&p.apply(&plus), &plus).norm_sqr()).sum();
        let n2 = clifford::norm_sqr(&plus);
        quartic = quartic.max(rel(sum, 2.0 * n2 * n2));
    }
    Ok(vec![
        Check::at_most("anticommutator_max_error", anti, 0.0),
        Check::at_most("pair_expectation_real_part", re_max, 1e-13),
        Check::at_most("asd_action_on_plus", asd_max, 1e-13),
        Check::at_most("quartic_identity_relative", quartic, 1e-12),
    ])
}

fn random_cochain(lat: &TorusLattice, k: usize, rng: &mut ChaCha8Rng) -> Cochain {
    let len = lat.n_sites() * lat.n_comps(k);
    Cochain { degree: k, values: (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect() }
}

fn lattice_suite(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let lat = opts.lattice(4)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (mut dd, mut adj, mut star): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for k in 0..=4 {
        let c = random_cochain(&lat, k, &mut rng);
        if k + 2 <= 4 {
            dd = dd.max(lattice::d(&lat, &lattice::d(&lat, &c)?)?.max_abs());
        }
        if k < 4 {
            let b = random_cochain(&lat, k + 1, &mut rng);
            let dc = lattice::d(&lat, &c)?;
            let gap = lattice::inner(&lat, &dc, &b) - lattice::inner(&lat, &c, &lattice::d_star(&lat, &b)?);
            adj = adj.max(gap.abs() / (lattice::norm(&lat, &dc) * lattice::norm(&lat, &b)));
        }
        let ss = lattice::hodge_star(&lat, &lattice::hodge_star(&lat, &c)?)?;
        let sign = if (k * (4 - k)) % 2 == 0 { 1.0 } else { -1.0 };
        star = star.max(ss.sub(&c.scale(sign)).max_abs());
    }
    let mut flux_err: f64 = 0.0;
    let mut draws: Vec<Vec<i64>> = vec![opts.flux_upper(4)];
    draws.extend((0..opts.samples.min(20)).map(|_| (0..6).map(|_| rng.gen_range(-3..=3)).collect()));
    for (i, upper) in draws.iter().enumerate() {
        let m = flux_matrix(4, upper)?;
        let bg = Arc::new(flux_background(&lat, &m)?);
        let c = random_config(lat.clone(), bg, opts.seed + i as u64, 0.5)?;
        let f = operators::curvature(&c);
        for (u, v) in PAIRS4 {
            for base in 0..lat.n_sites() {
                if lat.coord(base, u) != 0 || lat.coord(base, v) != 0 {
                    continue;
                }
                let total = lattice::flux_through(&lat, &f, u, v, base);
                flux_err = flux_err.max((total - 2.0 * PI * m[u][v] as f64).abs());
            }
        }
    }
    Ok(vec![
        Check::at_most("dd_max", dd, 1e-12),
        Check::at_most("adjointness_scaled", adj, 1e-12),
        Check::at_most("star_star_sign_law", star, 0.0),
        Check::at_most("flux_quantization", flux_err, 1e-12),
    ])
}

/// Relative Weitzenböck residuals and observed orders at fixed extent.
/// `pointwise` selects the site-local curvature action instead of the stencil-matched one.
pub fn weitzenbock_study(opts: &VerifyOptions, pointwise: bool) -> Result<(Vec<f64>, Vec<f64>)> {
    let extent = opts.size as f64 * opts.spacing;
    let mut res = Vec::new();
    for &n in &opts.sizes {
        let lat = Arc::new(TorusLattice::cubic(4, n, extent / n as f64)?);
        let c = opts.config(&lat, opts.seed, 0.5)?;
        let r = if pointwise { operators::weitzenbock_residual_pointwise(&c)? } else { operators::weitzenbock_residual(&c)? };
        res.push(r.value);
    }
    let orders = res
        .windows(2)
        .zip(opts.sizes.windows(2))
        .map(|(r, n)| (r[0] / r[1]).ln() / (n[1] as f64 / n[0] as f64).ln())
        .collect();
    Ok((res, orders))
}

fn weitzenbock_suite(opts: &VerifyOptions) -> Result<Vec<Check>> {
    if opts.sizes.len() < 2 {
        return Err(Error::InvalidParameter("the refinement study needs at least two sizes".into()));
    }
    let (res, orders) = weitzenbock_study(opts, false)?;
    let mut checks: Vec<Check> =
        opts.sizes.iter().zip(&res).map(|(n, r)| Check::at_most(format!("relative_residual_n{n}"), *r, f64::INFINITY)).collect();
    for (i, o) in orders.iter().enumerate() {
        checks.push(Check::at_least(format!("order_{}_{}", opts.sizes[i], opts.sizes[i + 1]), *o, 1.9));
    }
    Ok(checks)
}

fn gradient_suite(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let lat = opts.lattice(4)?;
    let p = opts.params(&lat);
    let mut worst: f64 = 0.0;
    for k in 0..5u64 {
        let c = opts.config(&lat, opts.seed + k, 0.7)?;
        let g = functional::gradient(&c, &p)?;
        for j in 0..20u64 {
            let v = random_tangent(&lat, 1000 * (opts.seed + k) + j);
            let analytic = g.inner(&lat, &v);
            let f = |t: f64| functional::action(&c.step(t, &v), &p);
            let h = 1e-3;
            let fd = (8.0 * (f(h)? - f(-h)?) - (f(2.0 * h)? - f(-2.0 * h)?)) / (12.0 * h);
            worst = worst.max((analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1.0));
        }
    }
    Ok(vec![Check::at_most("directional_derivative_relative", worst, 1e-6)])
}

fn gauge_suite(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let lat = opts.lattice(4)?;
    let c = opts.config(&lat, opts.seed, 0.7)?;
    let p = opts.params(&lat);
    let eta = p.eta.clone();
    let s0 = functional::action(&c, &p)?;
    let r0 = operators::sw_residual(&c, eta.as_ref())?;
    let (d0, f0) = (r0.dirac_norm(&lat), r0.curv_norm(&lat));
    let (mut ds, mut dd, mut df): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for k in 0..opts.samples as u64 {
        let g = random_gauge_map(&lat, opts.seed * 7919 + k, 3.0, 2);
        let h = gauge_act(&g, &c)?;
        ds = ds.max(rel(functional::action(&h, &p)?, s0));
        let r = operators::sw_residual(&h, eta.as_ref())?;
        dd = dd.max(rel(r.dirac_norm(&lat), d0));
        df = df.max(rel(r.curv_norm(&lat), f0));
    }
    Ok(vec![
        Check::at_most("functional_relative_change", ds, 1e-11),
        Check::at_most("dirac_residual_relative_change", dd, 1e-11),
        Check::at_most("curvature_residual_relative_change", df, 1e-11),
    ])
}

fn kahler_suite(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let lat = opts.lattice(4)?;
    let ks = KahlerStructure::standard();
    let eta = (opts.eta_amplitude != 0.0).then(|| functional::constant_eta(&lat, opts.eta_amplitude));
    let (mut dirac_err, mut curv_err): (f64, f64) = (0.0, 0.0);
    for k in 0..opts.samples.max(1) as u64 {
        let c = opts.config(&lat, opts.seed + k, 0.8)?;
        let a = operators::dirac(&c)?;
        let b = kahler::dolbeault_dirac(&ks, &c)?;
        let diff = fields::section_norm(&lat, &fields::section_sub(&a, &b));
        dirac_err = dirac_err.max(diff / fields::section_norm(&lat, &a).max(1e-300));
        let ksw = kahler::ksw_residual(&ks, &c, eta.as_ref())?;
        let sw = operators::sw_residual(&c, eta.as_ref())?;
        curv_err = curv_err.max(rel(ksw.total, sw.curv_norm(&lat)));
    }
    Ok(vec![
        Check::at_most("dolbeault_vs_dirac_relative", dirac_err, 1e-10),
        Check::at_most("ksw_total_vs_curvature_residual", curv_err, 1e-10),
    ])
}

fn reduce3d_suite(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let lat = opts.lattice(3)?;
    let c = opts.config(&lat, opts.seed, 0.7)?;
    let a_ref = c.a.scale(0.5);
    let rhs = reduce3d::flow_rhs(&c)?;
    let mut grad_err: f64 = 0.0;
    for j in 0..8u64 {
        let v = random_tangent(&lat, opts.seed * 31 + j);
        let eps = 1e-5;
        let fd = (reduce3d::csd(&c.step(eps, &v), &a_ref)? - reduce3d::csd(&c.step(-eps, &v), &a_ref)?) / (2.0 * eps);
        let metric = -rhs.inner_weighted(&lat, &v, 0.5);
        grad_err = grad_err.max((fd - metric).abs() / fd.abs().max(metric.abs()).max(1.0));
    }
    let mut shift_err: f64 = 0.0;
    let range = -2..=2i64;
    for m0 in range.clone() {
        for m1 in range.clone() {
            for m2 in range.clone() {
                let m = [m0, m1, m2];
                let bg = Arc::new(flux_background(&lat, &flux_matrix(3, &m)?)?);
                let c = random_config(lat.clone(), bg, opts.seed, 0.5)?;
                let a_ref = c.a.scale(0.5);
                let base = reduce3d::csd(&c, &a_ref)?;
                for w0 in range.clone() {
                    for w1 in range.clone() {
                        for w2 in range.clone() {
                            let w = [w0, w1, w2];
                            let g = GaugeMap { f: vec![0.0; lat.n_sites()], winding: w.to_vec() };
                            let shift = reduce3d::csd(&gauge_act(&g, &c)?, &a_ref)? - base;
                            let pred = reduce3d::gauge_shift_predicted(&m, &w);
                            shift_err = shift_err.max((shift - pred).abs() / pred.abs().max(1.0));
                        }
                    }
                }
            }
        }
    }
    Ok(vec![
        Check::at_most("flow_rhs_vs_minus_gradient", grad_err, 1e-6),
        Check::at_most("csd_winding_shift", shift_err, 1e-8),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn small_suites_pass() {
        let opts = VerifyOptions { size: 4, samples: 3, flux: vec![2, 0, 0, 0, 0, -2], eta_amplitude: 0.1, kappa: -0.5, ..Default::default() };
        for s in [Suite::Clifford, Suite::Lattice, Suite::Gradient, Suite::Gauge, Suite::Kahler] {
            let r = run(s, &opts).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn check_comparisons() {
        assert!(Check::at_most("x", 1.0, 1.0).passed);
        assert!(!Check::at_least("x", 1.8, 1.9).passed);
    }
}
