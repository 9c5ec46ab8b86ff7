//! Artifact directory layout: hashed CSV tables, the binary snapshot format
//! and the manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use gcf_core::graph::{GraphState, PressureState};
use gcf_core::grid::Grid2;
use gcf_core::radial::RadialState;
use gcf_core::{FlowParams, GcfError, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::scenario::{Geometry, Scenario};

pub const MANIFEST: &str = "manifest.json";
pub const TRAJECTORY: &str = "trajectory.csv";
pub const SNAPSHOTS: &str = "snapshots.bin";
pub const SNAPSHOT_MAGIC: &[u8; 8] = b"GCFSNAP1";
pub const HASH_PREFIX: &str = "# scenario_sha256=";

/// CSV table whose first line carries the scenario hash.
pub struct Table {
    buf: String,
}

impl Table {
    pub fn new(hash: &str, columns: &[&str]) -> Self {
        let mut buf = format!("{HASH_PREFIX}{hash}\n");
        buf.push_str(&columns.join(","));
        buf.push('\n');
        Self { buf }
    }

    /// Numbers use the shortest representation that round-trips.
    pub fn row(&mut self, fields: &[f64]) {
        for (k, v) in fields.iter().enumerate() {
            if k > 0 {
                self.buf.push(',');
            }
            write!(self.buf, "{v}").unwrap();
        }
        self.buf.push('\n');
    }

    pub fn text_row(&mut self, fields: &[String]) {
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

/// Rows of a hashed CSV file: `(hash, header, rows)`.
pub fn read_table(path: &Path) -> Result<(String, Vec<String>, Vec<Vec<String>>)> {
    let text = std::fs::read_to_string(path).map_err(|e| GcfError::io(path, e))?;
    let malformed = |reason: &str| GcfError::Malformed {
        path: path.display().to_string(),
        reason: reason.into(),
    };
    let mut lines = text.lines();
    let hash = lines
        .next()
        .and_then(|l| l.strip_prefix(HASH_PREFIX))
        .ok_or_else(|| malformed("missing scenario hash line"))?
        .to_string();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| malformed("missing header"))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows: Vec<Vec<String>> = lines
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    if rows.iter().any(|r| r.len() != header.len()) {
        return Err(malformed("row width differs from header"));
    }
    Ok((hash, header, rows))
}

/// Column `name` of a table as numbers.
pub fn column(
    path: &Path,
    header: &[String],
    rows: &[Vec<String>],
    name: &str,
) -> Result<Vec<f64>> {
    let k = header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| GcfError::Malformed {
            path: path.display().to_string(),
            reason: format!("no column {name}"),
        })?;
    rows.iter()
        .map(|r| {
            r[k].parse::<f64>().map_err(|_| GcfError::Malformed {
                path: path.display().to_string(),
                reason: format!("bad number {:?} in column {name}", r[k]),
            })
        })
        .collect()
}

/// Writes files into an artifact directory and remembers their digests.
pub struct ArtifactWriter {
    dir: PathBuf,
    hash: String,
    files: BTreeMap<String, String>,
}

impl ArtifactWriter {
    pub fn create(dir: &Path, hash: &str) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| GcfError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            hash: hash.to_string(),
            files: BTreeMap::new(),
        })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| GcfError::io(&path, e))?;
        self.files
            .insert(name.to_string(), hex::encode(Sha256::digest(bytes)));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn files(&self) -> &BTreeMap<String, String> {
        &self.files
    }
}

/// JSON document wrapper that stamps the scenario hash.
#[derive(Debug, Serialize)]
pub struct Stamped<'a, T: Serialize> {
    pub scenario_sha256: &'a str,
    #[serde(flatten)]
    pub body: &'a T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub kind: String,
    /// Nodes per axis (one entry for radial grids).
    pub nodes: Vec<usize>,
    pub spacing: f64,
    /// Radius or half width of the domain.
    pub extent: f64,
}

impl GridInfo {
    pub fn of(scenario: &Scenario) -> Self {
        let (kind, nodes, extent) = match scenario.geometry {
            Geometry::Radial { n, r_max, .. } => ("radial", vec![n], r_max),
            Geometry::Graph2d { n, half_width } => ("graph2d", vec![n, n], half_width),
        };
        Self {
            kind: kind.into(),
            nodes,
            spacing: scenario.spacing(),
            extent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub scenario_sha256: String,
    pub scenario: Scenario,
    pub exponents: FlowParams,
    pub grid: GridInfo,
    pub cfl: f64,
    pub frame_times: Vec<f64>,
    /// Seeds of every sampled quantity, by use.
    pub seeds: BTreeMap<String, u64>,
    /// Convention note for the curvature used by the decay audits.
    pub curvature_convention: String,
    /// SHA-256 of every other file in the directory.
    pub files: BTreeMap<String, String>,
}

pub const CURVATURE_NOTE: &str = "decay audits use K = det D2f / (1+|Df|^2); \
     the graph Gauss curvature det D2f / (1+|Df|^2)^2 is reported alongside (curvature_pinching_graph)";

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST);
    if !path.exists() {
        return Err(GcfError::MissingInput(format!(
            "{} (run `gcf simulate` first or pass --scenario)",
            path.display()
        )));
    }
    let text = std::fs::read_to_string(&path).map_err(|e| GcfError::io(&path, e))?;
    let m: Manifest = serde_json::from_str(&text)?;
    if m.scenario.sha256() != m.scenario_sha256 {
        return Err(GcfError::Malformed {
            path: path.display().to_string(),
            reason: "scenario hash does not match the embedded scenario".into(),
        });
    }
    Ok(m)
}

/// Radial trajectory table `t,r,f,flat_flag`.
pub fn trajectory_csv(hash: &str, frames: &[RadialState]) -> String {
    let mut t = Table::new(hash, &["t", "r", "f", "flat_flag"]);
    for s in frames {
        for k in 0..s.len() {
            t.row(&[s.t, s.r[k], s.f[k], s.flat[k] as u8 as f64]);
        }
    }
    t.finish()
}

pub fn read_trajectory(path: &Path) -> Result<(String, Vec<RadialState>)> {
    if !path.exists() {
        return Err(GcfError::MissingInput(path.display().to_string()));
    }
    let (hash, header, rows) = read_table(path)?;
    let t = column(path, &header, &rows, "t")?;
    let r = column(path, &header, &rows, "r")?;
    let f = column(path, &header, &rows, "f")?;
    let mut frames = Vec::new();
    let mut start = 0;
    for k in 1..=rows.len() {
        if k == rows.len() || t[k] != t[start] {
            frames.push(RadialState::new(
                r[start..k].to_vec(),
                f[start..k].to_vec(),
                t[start],
            )?);
            start = k;
        }
    }
    Ok((hash, frames))
}

/// Per-frame table `x,y,f,g,flat_flag`.
pub fn snapshot_csv(hash: &str, state: &GraphState, params: &FlowParams) -> String {
    let ps = PressureState::from_graph(state, params);
    let grid = &state.grid;
    let mut t = Table::new(hash, &["x", "y", "f", "g", "flat_flag"]);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = grid.idx(i, j);
            t.row(&[
                grid.x(i),
                grid.y(j),
                state.f[k],
                ps.g[k],
                state.flat[k] as u8 as f64,
            ]);
        }
    }
    t.finish()
}

/// Binary snapshot stream, all integers and floats little endian:
/// magic `GCFSNAP1`, 32-byte scenario hash, `u64` frame count, then per
/// frame `u64 nx, u64 ny, f64 x0, y0, dx, dy, alpha, t` followed by
/// `nx * ny` heights in row-major order (`x` fastest).
pub fn encode_snapshots(hash: &str, alpha: f64, frames: &[GraphState]) -> Result<Vec<u8>> {
    let digest = hex::decode(hash)
        .ok()
        .filter(|d| d.len() == 32)
        .ok_or_else(|| GcfError::Config(format!("bad scenario hash {hash:?}")))?;
    let mut out = Vec::new();
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.extend_from_slice(&digest);
    out.extend_from_slice(&(frames.len() as u64).to_le_bytes());
    for s in frames {
        let g = &s.grid;
        out.extend_from_slice(&(g.nx as u64).to_le_bytes());
        out.extend_from_slice(&(g.ny as u64).to_le_bytes());
        for v in [g.x0, g.y0, g.dx, g.dy, alpha, s.t] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in &s.f {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| GcfError::Malformed {
            path: self.path.display().to_string(),
            reason: "truncated snapshot stream".into(),
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Inverse of [`encode_snapshots`]: `(hash, alpha, frames)`.
pub fn decode_snapshots(path: &Path, bytes: &[u8]) -> Result<(String, f64, Vec<GraphState>)> {
    let mut rd = Reader {
        bytes,
        pos: 0,
        path,
    };
    let malformed = |reason: String| GcfError::Malformed {
        path: path.display().to_string(),
        reason,
    };
    if rd.take(8)? != SNAPSHOT_MAGIC {
        return Err(malformed("bad magic".into()));
    }
    let hash = hex::encode(rd.take(32)?);
    let count = rd.u64()?;
    let mut frames = Vec::new();
    let mut alpha = f64::NAN;
    for _ in 0..count {
        let (nx, ny) = (rd.u64()? as usize, rd.u64()? as usize);
        let (x0, y0, dx, dy) = (rd.f64()?, rd.f64()?, rd.f64()?, rd.f64()?);
        alpha = rd.f64()?;
        let t = rd.f64()?;
        let len = nx
            .checked_mul(ny)
            .filter(|&l| l.saturating_mul(8) <= bytes.len())
            .ok_or_else(|| malformed(format!("implausible grid {nx}x{ny}")))?;
        let f = (0..len).map(|_| rd.f64()).collect::<Result<Vec<_>>>()?;
        let grid = Grid2::new(nx, ny, x0, y0, dx, dy)?;
        frames.push(GraphState::new(grid, f, t)?);
    }
    if rd.pos != bytes.len() {
        return Err(malformed("trailing bytes".into()));
    }
    Ok((hash, alpha, frames))
}

/// Frames of an artifact directory.
pub enum Frames {
    Radial(Vec<RadialState>),
    Planar(Vec<GraphState>),
}

impl Frames {
    pub fn times(&self) -> Vec<f64> {
        match self {
            Frames::Radial(v) => v.iter().map(|s| s.t).collect(),
            Frames::Planar(v) => v.iter().map(|s| s.t).collect(),
        }
    }
}

/// Reads the manifest and the stored trajectory, checking every hash.
pub fn load_frames(dir: &Path) -> Result<(Manifest, Frames)> {
    let m = read_manifest(dir)?;
    let check = |path: &Path, hash: &str| {
        if hash != m.scenario_sha256 {
            Err(GcfError::Malformed {
                path: path.display().to_string(),
                reason: "scenario hash differs from the manifest".into(),
            })
        } else {
            Ok(())
        }
    };
    let frames = match m.scenario.geometry {
        Geometry::Radial { .. } => {
            let path = dir.join(TRAJECTORY);
            let (hash, frames) = read_trajectory(&path)?;
            check(&path, &hash)?;
            Frames::Radial(frames)
        }
        Geometry::Graph2d { .. } => {
            let path = dir.join(SNAPSHOTS);
            if !path.exists() {
                return Err(GcfError::MissingInput(path.display().to_string()));
            }
            let bytes = std::fs::read(&path).map_err(|e| GcfError::io(&path, e))?;
            let (hash, _, frames) = decode_snapshots(&path, &bytes)?;
            check(&path, &hash)?;
            Frames::Planar(frames)
        }
    };
    Ok((m, frames))
}
