//! Text formats: distance-set files, marker files, CSV clouds and ASCII PLY
//! meshes. Every writer has a strict reader counterpart that rejects
//! anything the writer would not have produced.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::Deserialize;

use crate::calibration::{MarkerFrame, LABELS};
use crate::distance::{DistanceSet, Point3};
use crate::error::{Error, Result};
use crate::kinematics::{SweepCloud, SweepPoint};

/// A distance set as stored on disk: eight lengths in mm, plus the optional
/// pose-dependent `d15`/`d25` reference values and a name.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceFile {
    pub name: Option<String>,
    pub distances: DistanceSet,
    pub d15: Option<f64>,
    pub d25: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDistanceFile {
    name: Option<String>,
    d12: f64,
    d13: f64,
    d14: f64,
    d23: f64,
    d24: f64,
    d34: f64,
    d35: f64,
    d45: f64,
    d15: Option<f64>,
    d25: Option<f64>,
}

const DISTANCE_HEADER: &str = "# malleable robot distance set; lengths in mm";

impl DistanceFile {
    pub fn new(distances: DistanceSet) -> Self {
        DistanceFile {
            name: None,
            distances,
            d15: None,
            d25: None,
        }
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let raw: RawDistanceFile =
            toml::from_str(text).map_err(|e| Error::parse(source_name, e.message()))?;
        let lengths = [
            raw.d12, raw.d13, raw.d14, raw.d23, raw.d24, raw.d34, raw.d35, raw.d45,
        ];
        for (key, v) in DistanceSet::KEYS
            .iter()
            .copied()
            .zip(lengths)
            .chain([("d15", raw.d15), ("d25", raw.d25)].into_iter().filter_map(|(k, v)| v.map(|v| (k, v))))
        {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::parse(
                    source_name,
                    format!("{key} = {v} must be a finite non-negative length"),
                ));
            }
        }
        Ok(DistanceFile {
            name: raw.name,
            distances: DistanceSet::from_lengths(lengths)?,
            d15: raw.d15,
            d25: raw.d25,
        })
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Canonical text: fixed header, keys in a fixed order, lengths with nine
    /// significant digits. Loading and re-saving reproduces it byte for byte.
    pub fn to_canonical_string(&self) -> String {
        let mut out = String::new();
        out.push_str(DISTANCE_HEADER);
        out.push('\n');
        if let Some(name) = &self.name {
            out.push_str(&format!("name = {}\n", toml::Value::String(name.clone())));
        }
        for (key, d) in DistanceSet::KEYS.iter().zip(self.distances.lengths()) {
            out.push_str(&format!("{key} = {}\n", format_sig9(d)));
        }
        for (key, d) in [("d15", self.d15), ("d25", self.d25)] {
            if let Some(d) = d {
                out.push_str(&format!("{key} = {}\n", format_sig9(d)));
            }
        }
        out
    }

    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_canonical_string()).map_err(|e| Error::io(path, e))
    }
}

/// Fixed-point decimal rounded to nine significant digits.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0.00000000".to_string();
    }
    // The exponent of the *rounded* value decides the number of decimals.
    let sci = format!("{v:.8e}");
    let (_, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    let rounded: f64 = sci.parse().expect("round trip of {:e} output");
    let decimals = (8 - exp).max(0) as usize;
    format!("{rounded:.decimals$}")
}

/// Marker file: one `P<k> x y z` row per marker (mm), `#` comments, and an
/// optional `t <seconds>` row.
pub fn parse_markers(text: &str, source_name: &str) -> Result<MarkerFrame> {
    let mut frame = MarkerFrame::default();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::parse(source_name, format!("line {}: {msg}", lineno + 1));
        let mut fields = line.split_whitespace();
        let label = fields.next().unwrap_or_default();
        let values: Vec<f64> = fields
            .map(|f| f.parse::<f64>().map_err(|_| err(format!("invalid number {f:?}"))))
            .collect::<Result<_>>()?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(err("non-finite value".into()));
        }
        if label == "t" {
            if values.len() != 1 || frame.timestamp.is_some() {
                return Err(err("expected a single `t <seconds>` row".into()));
            }
            frame.timestamp = Some(values[0]);
            continue;
        }
        let index = LABELS
            .iter()
            .position(|l| *l == label)
            .ok_or_else(|| err(format!("unknown label {label:?}")))?;
        if values.len() != 3 {
            return Err(err(format!("{label} needs 3 coordinates, got {}", values.len())));
        }
        if frame.markers[index].is_some() {
            return Err(err(format!("duplicate label {label}")));
        }
        frame.markers[index] = Some(Point3::new(values[0], values[1], values[2]));
    }
    Ok(frame)
}

pub fn format_markers(frame: &MarkerFrame) -> String {
    let mut out = String::from("# marker positions in mm\n");
    if let Some(t) = frame.timestamp {
        out.push_str(&format!("t {t}\n"));
    }
    for (label, p) in LABELS.iter().zip(frame.markers) {
        if let Some(p) = p {
            out.push_str(&format!("{label} {} {} {}\n", p.x, p.y, p.z));
        }
    }
    out
}

pub const CLOUD_UNITS: &str = "# units: mm, degrees; gamma_residual = |Gamma| / L^8";
pub const CLOUD_HEADER: [&str; 6] = ["theta1", "theta2", "x", "y", "z", "gamma_residual"];

/// One row of a cloud file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudRecord {
    pub theta1: f64,
    pub theta2: f64,
    pub position: Point3,
    pub residual: f64,
}

impl From<&SweepPoint> for CloudRecord {
    fn from(p: &SweepPoint) -> Self {
        CloudRecord {
            theta1: p.theta1,
            theta2: p.theta2,
            position: p.position,
            residual: p.residual,
        }
    }
}

/// Streaming CSV cloud writer. Numbers use the shortest representation that
/// parses back to the same `f64`.
pub struct CloudWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> CloudWriter<W> {
    pub fn new(mut w: W) -> std::io::Result<Self> {
        writeln!(w, "{CLOUD_UNITS}")?;
        let mut inner = csv::Writer::from_writer(w);
        inner.write_record(CLOUD_HEADER).map_err(csv_io)?;
        Ok(CloudWriter { inner })
    }

    pub fn write(&mut self, r: &CloudRecord) -> std::io::Result<()> {
        let fields = [
            r.theta1,
            r.theta2,
            r.position.x,
            r.position.y,
            r.position.z,
            r.residual,
        ];
        self.inner
            .write_record(fields.iter().map(|v| v.to_string()))
            .map_err(csv_io)
    }

    pub fn finish(self) -> std::io::Result<W> {
        self.inner.into_inner().map_err(|e| e.into_error())
    }
}

fn csv_io(e: csv::Error) -> std::io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => std::io::Error::other(format!("{other:?}")),
    }
}

pub fn write_cloud<W: Write>(w: W, cloud: &SweepCloud) -> std::io::Result<W> {
    let mut writer = CloudWriter::new(w)?;
    for p in &cloud.points {
        writer.write(&p.into())?;
    }
    writer.finish()
}

/// Reads a cloud written by [`CloudWriter`]: the unit comment, the exact
/// header, and six finite numbers per row.
pub fn read_cloud<R: BufRead>(mut r: R, source_name: &str) -> Result<Vec<CloudRecord>> {
    let mut first = String::new();
    r.read_line(&mut first)
        .map_err(|e| Error::parse(source_name, e.to_string()))?;
    if first.trim_end_matches(['\r', '\n']) != CLOUD_UNITS {
        return Err(Error::parse(source_name, "missing unit comment on line 1"));
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(source_name, e.to_string()))?;
    if headers.iter().ne(CLOUD_HEADER.iter().copied()) {
        return Err(Error::parse(source_name, format!("unexpected header {headers:?}")));
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(source_name, e.to_string()))?;
        let mut v = [0.0; 6];
        for (slot, field) in v.iter_mut().zip(rec.iter()) {
            *slot = field
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| {
                    Error::parse(source_name, format!("row {}: invalid number {field:?}", i + 1))
                })?;
        }
        out.push(CloudRecord {
            theta1: v[0],
            theta2: v[1],
            position: Point3::new(v[2], v[3], v[4]),
            residual: v[5],
        });
    }
    Ok(out)
}

/// Triangulated sweep grid with the scaled residual of every vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshOutput {
    pub vertices: Vec<Point3>,
    /// Stored as `float` in PLY, so kept at that precision here.
    pub residuals: Vec<f32>,
    pub faces: Vec<[u32; 3]>,
}

impl MeshOutput {
    /// Vertices only, no faces.
    pub fn points(cloud: &SweepCloud) -> Self {
        MeshOutput {
            vertices: cloud.positions(),
            residuals: cloud.points.iter().map(|p| p.residual as f32).collect(),
            faces: Vec::new(),
        }
    }

    /// Splits every grid cell whose four corners survived masking into two
    /// triangles.
    pub fn from_sweep(cloud: &SweepCloud) -> Self {
        let mut mesh = Self::points(cloud);
        let index: HashMap<(u32, u32), u32> = cloud
            .points
            .iter()
            .enumerate()
            .map(|(k, p)| ((p.row, p.col), k as u32))
            .collect();
        for i in 0..cloud.rows.saturating_sub(1) as u32 {
            for j in 0..cloud.cols.saturating_sub(1) as u32 {
                let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)].map(|c| index.get(&c).copied());
                if let [Some(a), Some(b), Some(c), Some(d)] = corners {
                    mesh.faces.push([a, b, c]);
                    mesh.faces.push([a, c, d]);
                }
            }
        }
        mesh
    }

    pub fn write_ply<W: Write>(&self, mut w: W) -> std::io::Result<W> {
        write!(
            w,
            "ply\nformat ascii 1.0\ncomment units: mm\n\
             element vertex {}\nproperty double x\nproperty double y\nproperty double z\n\
             property float gamma_residual\n\
             element face {}\nproperty list uchar int vertex_indices\nend_header\n",
            self.vertices.len(),
            self.faces.len()
        )?;
        for (p, r) in self.vertices.iter().zip(&self.residuals) {
            writeln!(w, "{} {} {} {}", p.x, p.y, p.z, r)?;
        }
        for f in &self.faces {
            writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?;
        }
        Ok(w)
    }

    /// Strict reader for the layout produced by [`MeshOutput::write_ply`].
    pub fn read_ply<R: BufRead>(r: R, source_name: &str) -> Result<Self> {
        let err = |msg: String| Error::parse(source_name, msg);
        let mut lines = r.lines();
        let mut next = || -> Result<String> {
            loop {
                let line = lines
                    .next()
                    .ok_or_else(|| err("unexpected end of file".into()))?
                    .map_err(|e| err(e.to_string()))?;
                if !line.starts_with("comment ") {
                    return Ok(line);
                }
            }
        };
        let expect = |got: String, want: &str| {
            if got == want {
                Ok(())
            } else {
                Err(err(format!("expected {want:?}, found {got:?}")))
            }
        };
        expect(next()?, "ply")?;
        expect(next()?, "format ascii 1.0")?;
        let count = |line: String, element: &str| -> Result<usize> {
            line.strip_prefix(&format!("element {element} "))
                .and_then(|n| n.parse().ok())
                .ok_or_else(|| err(format!("expected element {element} count, found {line:?}")))
        };
        let nv = count(next()?, "vertex")?;
        for prop in [
            "property double x",
            "property double y",
            "property double z",
            "property float gamma_residual",
        ] {
            expect(next()?, prop)?;
        }
        let nf = count(next()?, "face")?;
        expect(next()?, "property list uchar int vertex_indices")?;
        expect(next()?, "end_header")?;

        let mut mesh = MeshOutput {
            vertices: Vec::with_capacity(nv),
            residuals: Vec::with_capacity(nv),
            faces: Vec::with_capacity(nf),
        };
        for k in 0..nv {
            let line = next()?;
            let t: Vec<&str> = line.split(' ').collect();
            let bad = || err(format!("vertex {k}: malformed row {line:?}"));
            if t.len() != 4 {
                return Err(bad());
            }
            let xyz: Vec<f64> = t[..3]
                .iter()
                .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
                .collect::<Option<_>>()
                .ok_or_else(bad)?;
            let r = t[3].parse::<f32>().ok().filter(|v| v.is_finite()).ok_or_else(bad)?;
            mesh.vertices.push(Point3::new(xyz[0], xyz[1], xyz[2]));
            mesh.residuals.push(r);
        }
        for k in 0..nf {
            let line = next()?;
            let t: Vec<&str> = line.split(' ').collect();
            let bad = || err(format!("face {k}: malformed row {line:?}"));
            if t.len() != 4 || t[0] != "3" {
                return Err(bad());
            }
            let mut f = [0u32; 3];
            for (slot, s) in f.iter_mut().zip(&t[1..]) {
                *slot = s.parse().ok().filter(|&i: &u32| (i as usize) < nv).ok_or_else(bad)?;
            }
            mesh.faces.push(f);
        }
        if let Ok(extra) = next() {
            return Err(err(format!("trailing data {extra:?}")));
        }
        Ok(mesh)
    }
}
