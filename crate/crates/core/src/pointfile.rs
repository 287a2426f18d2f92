//! Line-oriented text format for point samples.
//!
//! ```text
//! # poisson-forest v1 d=2 rate=1 window=20x[0,1000] boundary=periodic palm=0 seed=7
//! 1 -3.25 0.0017
//! 2 8.5 0.0023
//! ```
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! save/load cycle is bit-exact.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::point_process::{Boundary, Point, PointId, PointSample, Window};

pub const FORMAT_TAG: &str = "# poisson-forest v1";

/// Sample-level parameters carried by every header.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleHeader {
    pub window: Window,
    pub rate: f64,
    pub palm: bool,
    pub seed: u64,
}

impl SampleHeader {
    pub fn of(sample: &PointSample) -> Self {
        SampleHeader {
            window: sample.window.clone(),
            rate: sample.rate,
            palm: sample.is_palm,
            seed: sample.seed,
        }
    }

    pub fn render(&self) -> String {
        let extents: Vec<String> = self.window.space_extent.iter().map(|l| l.to_string()).collect();
        format!(
            "{FORMAT_TAG} d={} rate={} window={}x[{},{}] boundary={} palm={} seed={}",
            self.window.d,
            self.rate,
            extents.join(","),
            self.window.time_lo,
            self.window.time_hi,
            self.window.boundary.as_str(),
            u8::from(self.palm),
            self.seed
        )
    }

    /// Parse a header line. Unknown trailing `key=value` tokens are returned
    /// untouched so derived formats can extend the header.
    pub fn parse(line: &str, line_no: usize) -> Result<(Self, Vec<(String, String)>)> {
        let perr = |message: String| Error::Parse { line: line_no, message };
        let rest = line
            .strip_prefix(FORMAT_TAG)
            .ok_or_else(|| perr(format!("expected header starting with '{FORMAT_TAG}'")))?;
        let mut d = None;
        let mut rate = None;
        let mut window = None;
        let mut boundary = None;
        let mut palm = None;
        let mut seed = None;
        let mut extra = Vec::new();
        for token in rest.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| perr(format!("malformed header token '{token}'")))?;
            let bad = |what: &str| perr(format!("bad {what} '{value}'"));
            match key {
                "d" => d = Some(value.parse::<usize>().map_err(|_| bad("dimension"))?),
                "rate" => rate = Some(value.parse::<f64>().map_err(|_| bad("rate"))?),
                "window" => window = Some(parse_window(value).ok_or_else(|| bad("window"))?),
                "boundary" => boundary = Some(value.parse::<Boundary>().map_err(|_| bad("boundary"))?),
                "palm" => {
                    palm = Some(match value {
                        "0" => false,
                        "1" => true,
                        _ => return Err(bad("palm flag")),
                    })
                }
                "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad("seed"))?),
                _ => extra.push((key.to_string(), value.to_string())),
            }
        }
        let missing = |k: &str| perr(format!("header is missing '{k}'"));
        let d = d.ok_or_else(|| missing("d"))?;
        let (extent, t0, t1) = window.ok_or_else(|| missing("window"))?;
        let window = Window {
            d,
            space_extent: extent,
            time_lo: t0,
            time_hi: t1,
            boundary: boundary.ok_or_else(|| missing("boundary"))?,
        };
        window.validate().map_err(|e| perr(e.to_string()))?;
        let header = SampleHeader {
            window,
            rate: rate.ok_or_else(|| missing("rate"))?,
            palm: palm.ok_or_else(|| missing("palm"))?,
            seed: seed.ok_or_else(|| missing("seed"))?,
        };
        if !(header.rate.is_finite() && header.rate > 0.0) {
            return Err(perr(format!("rate {} must be positive", header.rate)));
        }
        Ok((header, extra))
    }
}

fn parse_window(value: &str) -> Option<(Vec<f64>, f64, f64)> {
    let (extent, times) = value.split_once("x[")?;
    let times = times.strip_suffix(']')?;
    let (t0, t1) = times.split_once(',')?;
    let extent = extent
        .split(',')
        .map(|v| v.parse::<f64>().ok())
        .collect::<Option<Vec<_>>>()?;
    Some((extent, t0.parse().ok()?, t1.parse().ok()?))
}

pub fn write_points<W: Write>(sample: &PointSample, out: &mut W) -> Result<()> {
    writeln!(out, "{}", SampleHeader::of(sample).render())?;
    for p in &sample.points {
        write!(out, "{}", p.id)?;
        for v in &p.x {
            write!(out, " {v}")?;
        }
        writeln!(out, " {}", p.r)?;
    }
    Ok(())
}

pub fn read_points<R: BufRead>(input: R) -> Result<PointSample> {
    let mut lines = input.lines();
    let first = lines
        .next()
        .ok_or(Error::Parse { line: 1, message: "empty input".into() })??;
    let (header, _) = SampleHeader::parse(first.trim_end_matches('\r'), 1)?;
    let k = header.window.space_dim();
    let mut points = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let perr = |message: String| Error::Parse { line: line_no, message };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != k + 2 {
            return Err(perr(format!(
                "expected id, {k} space coordinate(s) and a time, found {} field(s)",
                fields.len()
            )));
        }
        let id = fields[0]
            .parse::<u64>()
            .map_err(|_| perr(format!("bad id '{}'", fields[0])))?;
        let coords = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| perr(format!("bad coordinate '{f}'"))))
            .collect::<Result<Vec<f64>>>()?;
        if !seen.insert(id) {
            return Err(perr(format!("duplicate id {id}")));
        }
        let r = coords[k];
        let x = coords[..k].to_vec();
        if !header.window.contains(&x, r) {
            return Err(perr(format!("point {id} lies outside the declared window")));
        }
        points.push(Point { id: PointId(id), x, r });
    }
    PointSample::new(header.window, header.rate, points, header.seed, header.palm)
}

pub fn save_points(sample: &PointSample, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_points(sample, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn load_points(path: &Path) -> Result<PointSample> {
    read_points(BufReader::new(File::open(path)?))
}
