//! Binary field snapshots.
//!
//! Byte layout:
//!
//! ```text
//! offset 0   8 bytes   magic "MNPLSNP1"
//! offset 8   u64 LE    header length H
//! offset 16  H bytes   UTF-8 JSON header (SnapshotHeader)
//! offset 16+H          header.len little-endian f64 values
//! ```
//!
//! Cochain values are site-major with components in increasing bitmask order.
//! Complex fields interleave `(re, im)` for each spinor component.
//! A configuration is written as two files, `<base>.a.snap` and `<base>.psi.snap`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::clifford::C64;
use crate::error::{Error, Result};
use crate::fields::{Config, GaugeMap, Section};
use crate::lattice::{flux_background, Cochain, TorusLattice};

pub const MAGIC: &[u8; 8] = b"MNPLSNP1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotKind {
    Connection,
    Spinor,
    GaugeMap,
    Cochain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub kind: SnapshotKind,
    pub sizes: Vec<usize>,
    pub spacings: Vec<f64>,
    /// Form degree; spinors and gauge maps use 0.
    pub degree: usize,
    pub complex: bool,
    /// Flux matrix of the background.
    pub flux: Vec<Vec<i64>>,
    pub seed: Option<u64>,
    /// Winding vector, for gauge maps.
    #[serde(default)]
    pub winding: Option<Vec<i64>>,
    /// Number of f64 values that follow.
    pub len: usize,
}

impl SnapshotHeader {
    fn for_lattice(kind: SnapshotKind, lat: &TorusLattice, flux: &[Vec<i64>], degree: usize, complex: bool, len: usize) -> Self {
        Self {
            kind,
            sizes: lat.sizes().to_vec(),
            spacings: lat.spacings().to_vec(),
            degree,
            complex,
            flux: flux.to_vec(),
            seed: None,
            winding: None,
            len,
        }
    }

    pub fn lattice(&self) -> Result<TorusLattice> {
        TorusLattice::new(&self.sizes, &self.spacings)
    }
}

pub fn write_snapshot<W: Write>(mut w: W, header: &SnapshotHeader, data: &[f64]) -> Result<()> {
    if header.len != data.len() {
        return Err(Error::Snapshot(format!("header says {} values, got {}", header.len, data.len())));
    }
    let json = serde_json::to_vec(header)?;
    w.write_all(MAGIC)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<(SnapshotHeader, Vec<f64>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let hlen = u64::from_le_bytes(len) as usize;
    if hlen > 1 << 24 {
        return Err(Error::Snapshot(format!("header length {hlen} is implausible")));
    }
    let mut json = vec![0u8; hlen];
    r.read_exact(&mut json)?;
    let header: SnapshotHeader = serde_json::from_slice(&json)?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != header.len * 8 {
        return Err(Error::Snapshot(format!("expected {} data bytes, found {}", header.len * 8, bytes.len())));
    }
    let data = bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
    Ok((header, data))
}

pub fn write_snapshot_file(path: &Path, header: &SnapshotHeader, data: &[f64]) -> Result<()> {
    write_snapshot(BufWriter::new(File::create(path)?), header, data)
}

pub fn read_snapshot_file(path: &Path) -> Result<(SnapshotHeader, Vec<f64>)> {
    read_snapshot(BufReader::new(File::open(path)?))
}

pub fn section_to_f64(psi: &Section) -> Vec<f64> {
    psi.iter().flat_map(|h| [h[0].re, h[0].im, h[1].re, h[1].im]).collect()
}

pub fn section_from_f64(data: &[f64]) -> Section {
    data.chunks_exact(4).map(|c| [C64::new(c[0], c[1]), C64::new(c[2], c[3])]).collect()
}

/// `(<base>.a.snap, <base>.psi.snap)`
pub fn config_paths(base: &Path) -> (PathBuf, PathBuf) {
    let s = base.as_os_str().to_string_lossy();
    (PathBuf::from(format!("{s}.a.snap")), PathBuf::from(format!("{s}.psi.snap")))
}

pub fn save_config(base: &Path, c: &Config, seed: Option<u64>) -> Result<()> {
    let (pa, pp) = config_paths(base);
    let mut ha = SnapshotHeader::for_lattice(SnapshotKind::Connection, &c.lat, c.bg.flux(), 1, false, c.a.values.len());
    ha.seed = seed;
    write_snapshot_file(&pa, &ha, &c.a.values)?;
    let data = section_to_f64(&c.psi);
    let mut hp = SnapshotHeader::for_lattice(SnapshotKind::Spinor, &c.lat, c.bg.flux(), 0, true, data.len());
    hp.seed = seed;
    write_snapshot_file(&pp, &hp, &data)
}

pub fn load_config(base: &Path) -> Result<Config> {
    let (pa, pp) = config_paths(base);
    let (ha, a) = read_snapshot_file(&pa)?;
    let (hp, p) = read_snapshot_file(&pp)?;
    if ha.kind != SnapshotKind::Connection || hp.kind != SnapshotKind::Spinor {
        return Err(Error::Snapshot("expected a connection and a spinor snapshot".into()));
    }
    if ha.sizes != hp.sizes || ha.spacings != hp.spacings || ha.flux != hp.flux {
        return Err(Error::Snapshot("connection and spinor headers disagree".into()));
    }
    let lat = ha.lattice()?;
    let bg = flux_background(&lat, &ha.flux)?;
    let a = Cochain::new(&lat, 1, a)?;
    Config::new(Arc::new(lat), Arc::new(bg), a, section_from_f64(&p))
}

pub fn save_cochain(path: &Path, lat: &TorusLattice, c: &Cochain) -> Result<()> {
    let h = SnapshotHeader::for_lattice(SnapshotKind::Cochain, lat, &vec![vec![0; lat.dim()]; lat.dim()], c.degree, false, c.values.len());
    write_snapshot_file(path, &h, &c.values)
}

pub fn load_cochain(path: &Path) -> Result<(TorusLattice, Cochain)> {
    let (h, data) = read_snapshot_file(path)?;
    let lat = h.lattice()?;
    let c = Cochain::new(&lat, h.degree, data)?;
    Ok((lat, c))
}

pub fn save_gauge_map(path: &Path, lat: &TorusLattice, g: &GaugeMap) -> Result<()> {
    let mut h = SnapshotHeader::for_lattice(SnapshotKind::GaugeMap, lat, &vec![vec![0; lat.dim()]; lat.dim()], 0, false, g.f.len());
    h.winding = Some(g.winding.clone());
    write_snapshot_file(path, &h, &g.f)
}

pub fn load_gauge_map(path: &Path) -> Result<(TorusLattice, GaugeMap)> {
    let (h, f) = read_snapshot_file(path)?;
    if h.kind != SnapshotKind::GaugeMap {
        return Err(Error::Snapshot("not a gauge map snapshot".into()));
    }
    let lat = h.lattice()?;
    let winding = h.winding.ok_or_else(|| Error::Snapshot("gauge map without winding".into()))?;
    if f.len() != lat.n_sites() || winding.len() != lat.dim() {
        return Err(Error::Snapshot("gauge map does not match its lattice".into()));
    }
    Ok((lat, GaugeMap { f, winding }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{random_config, random_gauge_map};

    #[test]
    fn header_layout() {
        let lat = TorusLattice::cubic(3, 4, 1.0).unwrap();
        let h = SnapshotHeader::for_lattice(SnapshotKind::Cochain, &lat, &vec![vec![0; 3]; 3], 0, false, 64);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &h, &[1.5; 64]).unwrap();
        assert_eq!(&buf[..8], MAGIC);
        let hlen = u64::from_le_bytes(buf[8..16].try_into().unwrap()) as usize;
        assert_eq!(buf.len(), 16 + hlen + 512);
        assert_eq!(f64::from_le_bytes(buf[16 + hlen..24 + hlen].try_into().unwrap()), 1.5);
        let (h2, d) = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(h2, h);
        assert_eq!(d, vec![1.5; 64]);
        buf[0] = b'X';
        assert!(read_snapshot(buf.as_slice()).is_err());
    }

    #[test]
    fn truncated_data_is_rejected() {
        let lat = TorusLattice::cubic(3, 4, 1.0).unwrap();
        let h = SnapshotHeader::for_lattice(SnapshotKind::Cochain, &lat, &[], 0, false, 64);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &h, &[0.0; 64]).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(read_snapshot(buf.as_slice()), Err(Error::Snapshot(_))));
    }

    #[test]
    fn config_and_gauge_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let lat = Arc::new(TorusLattice::new(&[4, 4, 4, 6], &[1.0, 0.5, 1.0, 2.0]).unwrap());
        let m = vec![vec![0, 2, 0, 0], vec![-2, 0, 0, 0], vec![0; 4], vec![0; 4]];
        let bg = Arc::new(flux_background(&lat, &m).unwrap());
        let c = random_config(lat.clone(), bg, 3, 0.4).unwrap();
        let base = dir.path().join("cfg");
        save_config(&base, &c, Some(3)).unwrap();
        let back = load_config(&base).unwrap();
        assert_eq!(back.a, c.a);
        assert_eq!(back.psi, c.psi);
        assert_eq!(back.bg.flux(), c.bg.flux());
        let g = random_gauge_map(&lat, 5, 0.7, 2);
        let p = dir.path().join("g.snap");
        save_gauge_map(&p, &lat, &g).unwrap();
        assert_eq!(load_gauge_map(&p).unwrap().1, g);
    }
}
