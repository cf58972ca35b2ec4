//! `topology input.json`: tables from the closed-form calculators.
//!
//! ```json
//! {
//!   "manifold": { "chi": 4, "sigma": 0, "b2plus": 1, "q": [[1, 0], [0, -1]], "b1": 0 },
//!   "classes": [[3, 1]],
//!   "c1_squares": ["0", "-1/4"],
//!   "basic_class_bound": 2,
//!   "thom_degrees": [1, 2, 3],
//!   "genera": [1, 2],
//!   "gromov": [{ "c1k_dot_a": -3, "a_sq": 1 }],
//!   "nonabelian": [{ "n": 2, "c2": 1, "delta": 4 }],
//!   "connected_sum": [[1, 1], [0, 3]]
//! }
//! ```
//!
//! Only `manifold` is required. Non-abelian rows take χ and σ from it.

use std::path::Path;

use monopole_core::topo::{self, format_rational, CountingRule, FourManifoldData, Rational, SpinCClass};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GromovQuery {
    pub c1k_dot_a: i64,
    pub a_sq: i64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonabelianQuery {
    pub n: i64,
    pub c2: i64,
    pub delta: i64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyInput {
    pub manifold: FourManifoldData,
    #[serde(default)]
    pub classes: Vec<Vec<i64>>,
    #[serde(default)]
    pub c1_squares: Vec<String>,
    #[serde(default)]
    pub basic_class_bound: Option<i64>,
    #[serde(default)]
    pub thom_degrees: Vec<i64>,
    #[serde(default)]
    pub genera: Vec<i64>,
    #[serde(default)]
    pub gromov: Vec<GromovQuery>,
    #[serde(default)]
    pub nonabelian: Vec<NonabelianQuery>,
    #[serde(default)]
    pub connected_sum: Vec<[i64; 2]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DimensionRow {
    pub class: String,
    pub c1_sq: String,
    pub dimension: String,
    pub dirac_index: String,
    pub asd_index: String,
    pub rule: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct TopologyReport {
    pub dimensions: Vec<DimensionRow>,
    pub basic_classes: Option<Vec<Vec<i64>>>,
    pub thom: Vec<(i64, i64)>,
    pub curvature: Vec<(i64, f64, f64)>,
    pub gromov: Vec<(i64, i64, i64)>,
    pub nonabelian: Vec<(i64, i64, i64, String)>,
    pub connected_sum: Vec<(i64, i64, String)>,
}

fn rule_name(r: CountingRule) -> String {
    match r {
        CountingRule::Zero => "zero".into(),
        CountingRule::SignedCount => "signed_count".into(),
        CountingRule::Pairing { degree } => format!("pairing_degree_{degree}"),
        CountingRule::NotIntegral => "not_integral".into(),
    }
}

fn class_label(x: &[i64]) -> String {
    x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn dimension_row(md: &FourManifoldData, class: String, c1_sq: Rational) -> DimensionRow {
    let d = topo::sw_dimension_from_square(md, c1_sq);
    DimensionRow {
        class,
        c1_sq: format_rational(&c1_sq),
        dimension: format_rational(&d.dimension),
        dirac_index: format_rational(&d.dirac_index),
        asd_index: format_rational(&d.asd_index),
        rule: rule_name(topo::invariant_counting_rules(d.dimension)),
    }
}

/// Errors here are schema or data errors (exit code 2).
pub fn evaluate(input: &TopologyInput, default_bound: i64) -> Result<TopologyReport, String> {
    let md = &input.manifold;
    md.validate().map_err(|e| e.to_string())?;
    let mut dimensions = Vec::new();
    for x in &input.classes {
        let sq = SpinCClass { c1_l2: x.clone() }.c1_l_squared(md).map_err(|e| e.to_string())?;
        dimensions.push(dimension_row(md, class_label(x), sq));
    }
    for s in &input.c1_squares {
        let sq: Rational = s.trim().parse().map_err(|_| format!("c1_squares entry '{s}' is not a rational"))?;
        dimensions.push(dimension_row(md, String::new(), sq));
    }
    let basic_classes = if md.q.is_empty() {
        None
    } else {
        let bound = input.basic_class_bound.unwrap_or(default_bound);
        let found = topo::basic_class_candidates(md, bound).map_err(|e| e.to_string())?;
        Some(found.into_iter().map(|c| c.c1_l2).collect())
    };
    let thom = input
        .thom_degrees
        .iter()
        .map(|&d| topo::thom_genus_bound(d).map(|g| (d, g)).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let curvature = input
        .genera
        .iter()
        .map(|&g| topo::curvature_estimate_bound(g).map(|b| (g, b.curvature, b.psi_sq)).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let gromov = input.gromov.iter().map(|q| (q.c1k_dot_a, q.a_sq, topo::gromov_dimension(q.c1k_dot_a, q.a_sq))).collect();
    let nonabelian = input
        .nonabelian
        .iter()
        .map(|q| {
            topo::nonabelian_dimension(q.n, q.c2, md.chi, md.sigma, q.delta)
                .map(|d| (q.n, q.c2, q.delta, format_rational(&d)))
                .map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    let connected_sum = input
        .connected_sum
        .iter()
        .map(|&[a, b]| {
            let v = match topo::connected_sum_invariant(a, b) {
                topo::ConnectedSumVerdict::Vanishes => "vanishes",
                topo::ConnectedSumVerdict::NoConclusion => "no_conclusion",
            };
            (a, b, v.to_string())
        })
        .collect();
    Ok(TopologyReport { dimensions, basic_classes, thom, curvature, gromov, nonabelian, connected_sum })
}

fn write_table<R: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = R>) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one CSV per table and returns the paths written.
pub fn write_tables(dir: &Path, r: &TopologyReport) -> csv::Result<Vec<std::path::PathBuf>> {
    let mut out = Vec::new();
    let mut emit = |name: &str| {
        let p = dir.join(name);
        out.push(p.clone());
        p
    };
    write_table(&emit("dimensions.csv"), &["class", "c1_sq", "dimension", "dirac_index", "asd_index", "rule"], &r.dimensions)?;
    if let Some(bc) = &r.basic_classes {
        write_table(&emit("basic_classes.csv"), &["class"], bc.iter().map(|x| (class_label(x),)))?;
    }
    write_table(&emit("thom.csv"), &["degree", "genus_bound"], &r.thom)?;
    write_table(&emit("curvature.csv"), &["genus", "curvature_bound", "psi_sq_bound"], &r.curvature)?;
    write_table(&emit("gromov.csv"), &["c1k_dot_a", "a_sq", "dimension"], &r.gromov)?;
    write_table(&emit("nonabelian.csv"), &["n", "c2", "delta", "dimension"], &r.nonabelian)?;
    write_table(&emit("connected_sum.csv"), &["b2plus_1", "b2plus_2", "verdict"], &r.connected_sum)?;
    Ok(out)
}
