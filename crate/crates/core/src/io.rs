//! File formats: profile tables (CSV plus a JSON sidecar), binary field
//! snapshots, the diagnostics log and sign-region maps.
//!
//! Floats are written in the shortest form that parses back to the same
//! bits, so every table round-trips exactly.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::annulus::{AnnulusProfile, SignRegionMap};
use crate::error::{Error, Result};
use crate::fv::{Diagnostics, FieldState};
use crate::strip::StripProfile;

pub const SNAPSHOT_FORMAT: &str = "swarmwave-snapshot-1";

pub const DIAGNOSTICS_COLUMNS: [&str; 10] =
    ["time", "mass", "drift", "winding", "winding_raw", "shock", "l2", "speed", "dt", "steps"];

const STRIP_COLUMNS: [&str; 6] = ["x", "rho", "u1", "u2", "beta", "dbeta"];
const ANNULUS_COLUMNS: [&str; 6] = ["r", "rho", "u_r", "u_theta", "beta", "dbeta"];

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

fn parse(s: &str, line: usize) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Format(format!("line {line}: `{s}` is not a number")))
}

/// Column-oriented numeric table.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable {
    pub columns: Vec<String>,
    pub data: Vec<Vec<f64>>,
}

impl ProfileTable {
    pub fn new(columns: &[&str], data: Vec<Vec<f64>>) -> Result<Self> {
        let t = Self { columns: columns.iter().map(|c| c.to_string()).collect(), data };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.columns.len() != self.data.len() {
            return Err(Error::Format(format!("{} column names for {} columns", self.columns.len(), self.data.len())));
        }
        if let Some(n) = self.data.first().map(Vec::len) {
            if self.data.iter().any(|c| c.len() != n) {
                return Err(Error::Format("columns differ in length".into()));
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.columns
            .iter()
            .position(|c| c == name)
            .map(|i| self.data[i].as_slice())
            .ok_or_else(|| Error::Format(format!("missing column `{name}`")))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        self.validate()?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns).map_err(csv_err)?;
        for i in 0..self.rows() {
            w.write_record(self.data.iter().map(|c| fmt(c[i]))).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let columns: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
        let mut data = vec![Vec::new(); columns.len()];
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            for (k, field) in rec.iter().enumerate() {
                data[k].push(parse(field, line + 2)?);
            }
        }
        let t = Self { columns, data };
        t.validate()?;
        Ok(t)
    }

    pub fn from_strip(p: &StripProfile) -> Self {
        let data = vec![p.x.clone(), p.rho.clone(), p.u1.clone(), p.u2.clone(), p.beta.clone(), p.dbeta.clone()];
        Self { columns: STRIP_COLUMNS.iter().map(|c| c.to_string()).collect(), data }
    }

    pub fn to_strip(&self) -> Result<StripProfile> {
        let c = |n| self.column(n).map(<[f64]>::to_vec);
        Ok(StripProfile { x: c("x")?, rho: c("rho")?, u1: c("u1")?, u2: c("u2")?, beta: c("beta")?, dbeta: c("dbeta")? })
    }

    pub fn from_annulus(p: &AnnulusProfile) -> Self {
        let data = vec![p.r.clone(), p.rho.clone(), p.u_r.clone(), p.u_theta.clone(), p.beta.clone(), p.dbeta.clone()];
        Self { columns: ANNULUS_COLUMNS.iter().map(|c| c.to_string()).collect(), data }
    }

    pub fn to_annulus(&self) -> Result<AnnulusProfile> {
        let c = |n| self.column(n).map(<[f64]>::to_vec);
        Ok(AnnulusProfile {
            r: c("r")?,
            rho: c("rho")?,
            u_r: c("u_r")?,
            u_theta: c("u_theta")?,
            beta: c("beta")?,
            dbeta: c("dbeta")?,
        })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Writes `<dir>/<stem>.csv` and the metadata as `<dir>/<stem>.json`.
pub fn write_profile<M: Serialize>(dir: &Path, stem: &str, table: &ProfileTable, metadata: &M) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    table.write_csv(BufWriter::new(File::create(dir.join(format!("{stem}.csv")))?))?;
    write_json(&dir.join(format!("{stem}.json")), metadata)
}

/// Reads a table and its sidecar; the sidecar sits next to the CSV with a
/// `.json` extension.
pub fn read_profile(csv_path: &Path) -> Result<(ProfileTable, serde_json::Value)> {
    let table = ProfileTable::read_csv(BufReader::new(File::open(csv_path)?))?;
    let meta = read_json(&csv_path.with_extension("json"))?;
    Ok((table, meta))
}

pub fn write_json<M: Serialize + ?Sized>(path: &Path, value: &M) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json(path: &Path) -> Result<serde_json::Value> {
    let r = BufReader::new(File::open(path)?);
    serde_json::from_reader(r).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// First line of a snapshot file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotHeader {
    pub format: String,
    pub nx1: usize,
    pub nx2: usize,
    pub time: f64,
    pub z: f64,
    /// Free-form run description, e.g. model coefficients.
    #[serde(default)]
    pub params: serde_json::Value,
    /// Plane order after the header; `lift` is optional on read.
    pub planes: Vec<String>,
}

const PLANES: [&str; 5] = ["rho", "u1", "u2", "psi", "lift"];

/// Header line, then little-endian f64 planes in row-major order (x2 fastest).
pub fn write_snapshot<W: Write>(mut out: W, s: &FieldState, params: serde_json::Value) -> Result<()> {
    s.validate()?;
    let header = SnapshotHeader {
        format: SNAPSHOT_FORMAT.into(),
        nx1: s.nx1,
        nx2: s.nx2,
        time: s.time,
        z: s.z,
        params,
        planes: PLANES.iter().map(|p| p.to_string()).collect(),
    };
    serde_json::to_writer(&mut out, &header).map_err(|e| Error::Format(e.to_string()))?;
    out.write_all(b"\n")?;
    for plane in [&s.rho, &s.u1, &s.u2, &s.psi] {
        for v in plane.iter() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    for &l in &s.lift {
        out.write_all(&(l as f64).to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_snapshot<R: Read>(input: R) -> Result<(SnapshotHeader, FieldState)> {
    let mut r = BufReader::new(input);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: SnapshotHeader = serde_json::from_str(line.trim_end()).map_err(|e| Error::Format(format!("snapshot header: {e}")))?;
    if header.format != SNAPSHOT_FORMAT {
        return Err(Error::Format(format!("unknown snapshot format `{}`", header.format)));
    }
    let known = |k: usize| header.planes.len() == k && header.planes.iter().zip(PLANES).all(|(a, b)| a == b);
    if !(known(4) || known(5)) {
        return Err(Error::Format(format!("unexpected plane list {:?}", header.planes)));
    }
    let n = header.nx1.checked_mul(header.nx2).ok_or_else(|| Error::Format("grid too large".into()))?;
    let mut plane = || -> Result<Vec<f64>> {
        let mut buf = vec![0u8; n * 8];
        r.read_exact(&mut buf).map_err(|e| Error::Format(format!("truncated snapshot: {e}")))?;
        Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    };
    let (rho, u1, u2, psi) = (plane()?, plane()?, plane()?, plane()?);
    let lift = if header.planes.len() == 5 { plane()?.into_iter().map(|v| v as i64).collect() } else { vec![0; n] };
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes after the planes", rest.len())));
    }
    let s = FieldState { nx1: header.nx1, nx2: header.nx2, time: header.time, z: header.z, rho, u1, u2, psi, lift };
    s.validate()?;
    Ok((header, s))
}

/// Append-only diagnostics log with a fixed header.
pub struct DiagnosticsWriter<W: Write> {
    out: W,
}

impl DiagnosticsWriter<BufWriter<File>> {
    /// Opens `path` for appending, writing the header if the file is new or empty.
    pub fn append(path: &Path) -> Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let fresh = file.metadata()?.len() == 0;
        let mut w = DiagnosticsWriter { out: BufWriter::new(file) };
        if fresh {
            w.header()?;
        }
        Ok(w)
    }
}

impl<W: Write> DiagnosticsWriter<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut w = Self { out };
        w.header()?;
        Ok(w)
    }

    fn header(&mut self) -> Result<()> {
        writeln!(self.out, "{}", DIAGNOSTICS_COLUMNS.join(","))?;
        Ok(())
    }

    pub fn write(&mut self, d: &Diagnostics) -> Result<()> {
        writeln!(
            self.out,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt(d.time),
            fmt(d.mass),
            fmt(d.drift),
            d.winding,
            fmt(d.winding_raw),
            fmt(d.shock),
            fmt(d.l2),
            fmt(d.speed),
            fmt(d.dt),
            d.steps
        )?;
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

pub fn read_diagnostics<R: Read>(input: R) -> Result<Vec<Diagnostics>> {
    let mut r = csv::Reader::from_reader(input);
    let head: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if head != DIAGNOSTICS_COLUMNS {
        return Err(Error::Format(format!("unexpected diagnostics header {head:?}")));
    }
    let mut out = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = k + 2;
        let f = |i: usize| parse(&rec[i], line);
        let int = |i: usize| rec[i].trim().parse::<i64>().map_err(|_| Error::Format(format!("line {line}: bad integer")));
        out.push(Diagnostics {
            time: f(0)?,
            mass: f(1)?,
            drift: f(2)?,
            winding: int(3)?,
            winding_raw: f(4)?,
            shock: f(5)?,
            l2: f(6)?,
            speed: f(7)?,
            dt: f(8)?,
            steps: int(9)? as usize,
        });
    }
    Ok(out)
}

/// Grid cells as `r,rho,sign` rows.
pub fn write_sign_map<W: Write>(out: W, m: &SignRegionMap) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r", "rho", "sign"]).map_err(csv_err)?;
    for (i, &r) in m.r.iter().enumerate() {
        for (j, &rho) in m.rho.iter().enumerate() {
            w.write_record([fmt(r), fmt(rho), m.sign_at(i, j).to_string()]).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// The zero curve and, for ell < 0, the singular curve as `curve,r,rho` rows.
pub fn write_sign_curves<W: Write>(out: W, m: &SignRegionMap) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["curve", "r", "rho"]).map_err(csv_err)?;
    for (name, pts) in [("zero", &m.curve), ("singular", &m.singular)] {
        for &(r, rho) in pts.iter() {
            w.write_record([name.to_string(), fmt(r), fmt(rho)]).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn awkward_floats_round_trip() {
        let vals = vec![0.1, -1e-300, 5e-324, f64::MAX, 1.0 / 3.0, 0.0, -0.0, f64::NAN, f64::INFINITY];
        let t = ProfileTable::new(&["a"], vec![vals.clone()]).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = ProfileTable::read_csv(buf.as_slice()).unwrap();
        for (a, b) in vals.iter().zip(&back.data[0]) {
            assert_eq!(a.to_bits(), b.to_bits(), "{a} vs {b}");
        }
    }

    #[test]
    fn ragged_table_rejected() {
        assert!(ProfileTable::new(&["a", "b"], vec![vec![1.0], vec![]]).is_err());
        assert!(ProfileTable::read_csv("a,b\n1,2\n3\n".as_bytes()).is_err());
        assert!(ProfileTable::read_csv("a\nfoo\n".as_bytes()).is_err());
    }

    #[test]
    fn snapshot_rejects_truncation() {
        let s = FieldState::uniform(16, 16, 0.0);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &s, serde_json::Value::Null).unwrap();
        assert!(read_snapshot(&buf[..buf.len() - 1]).is_err());
        buf.push(0);
        assert!(read_snapshot(buf.as_slice()).is_err());
    }
}
