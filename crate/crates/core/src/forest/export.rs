//! Forest text export: the sample header extended with root statistics,
//! then `<id> <mother_id|-> <sister_rank|0> <component_id>` per point.

use std::io::{BufRead, Write};

use super::Forest;
use crate::error::{Error, Result};
use crate::point_process::PointId;
use crate::pointfile::SampleHeader;

#[derive(Clone, Debug, PartialEq)]
pub struct ForestRecord {
    pub id: PointId,
    pub mother: Option<PointId>,
    /// 0 for roots.
    pub sister_rank: usize,
    pub component: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForestFile {
    pub header: SampleHeader,
    pub roots: usize,
    pub unresolved_fraction: f64,
    pub records: Vec<ForestRecord>,
}

impl ForestFile {
    pub fn of(forest: &Forest) -> Self {
        let records = (0..forest.len())
            .map(|s| ForestRecord {
                id: forest.id(s),
                mother: forest.mother_slot(s).map(|m| forest.id(m)),
                sister_rank: forest.rank_slot(s),
                component: forest.component_slot(s),
            })
            .collect();
        ForestFile {
            header: SampleHeader::of(forest.sample()),
            roots: forest.root_slots().len(),
            unresolved_fraction: forest.unresolved_fraction(),
            records,
        }
    }
}

pub fn write_forest<W: Write>(forest: &Forest, out: &mut W) -> Result<()> {
    let file = ForestFile::of(forest);
    writeln!(
        out,
        "{} roots={} unresolved_fraction={}",
        file.header.render(),
        file.roots,
        file.unresolved_fraction
    )?;
    for rec in &file.records {
        match rec.mother {
            Some(m) => writeln!(out, "{} {} {} {}", rec.id, m, rec.sister_rank, rec.component)?,
            None => writeln!(out, "{} - 0 {}", rec.id, rec.component)?,
        }
    }
    Ok(())
}

pub fn read_forest<R: BufRead>(input: R) -> Result<ForestFile> {
    let mut lines = input.lines();
    let first = lines
        .next()
        .ok_or(Error::Parse { line: 1, message: "empty input".into() })??;
    let (header, extra) = SampleHeader::parse(first.trim_end_matches('\r'), 1)?;
    let field = |key: &str| {
        extra
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| Error::Parse { line: 1, message: format!("forest header is missing '{key}'") })
    };
    let roots = field("roots")?
        .parse()
        .map_err(|_| Error::Parse { line: 1, message: "bad roots count".into() })?;
    let unresolved_fraction = field("unresolved_fraction")?
        .parse()
        .map_err(|_| Error::Parse { line: 1, message: "bad unresolved fraction".into() })?;

    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let perr = |message: &str| Error::Parse { line: line_no, message: message.to_string() };
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(perr("expected '<id> <mother|-> <rank> <component>'"));
        }
        let id = PointId(f[0].parse().map_err(|_| perr("bad id"))?);
        let mother = match f[1] {
            "-" => None,
            m => Some(PointId(m.parse().map_err(|_| perr("bad mother id"))?)),
        };
        records.push(ForestRecord {
            id,
            mother,
            sister_rank: f[2].parse().map_err(|_| perr("bad sister rank"))?,
            component: f[3].parse().map_err(|_| perr("bad component id"))?,
        });
    }
    Ok(ForestFile { header, roots, unresolved_fraction, records })
}
