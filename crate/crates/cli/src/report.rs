//! JSON and CSV encodings of results, and the region reader.

use dirquant_core::contour::{Orientation, SweptHyperplane};
use dirquant_core::directional::Counts;
use dirquant_core::geometry::{intersect_halfplanes_2d, polygon_area};
use dirquant_core::{ConvexRegion2D, Hyperplane, RegionStatus};
use serde_json::{json, Value};

use crate::error::{CliError, Result};

pub fn counts_json(c: &Counts) -> Value {
    json!({ "below": c.below, "on": c.on, "above": c.above })
}

pub fn halfplane_json(h: &Hyperplane) -> Value {
    json!({ "b": h.normal(), "a": h.offset() })
}

fn status_name(s: RegionStatus) -> &'static str {
    match s {
        RegionStatus::Bounded => "bounded",
        RegionStatus::Unbounded => "unbounded",
        RegionStatus::Empty => "empty",
    }
}

pub fn region_json(r: &ConvexRegion2D) -> Value {
    json!({
        "status": status_name(r.status()),
        "facets": r.facet_count(),
        "area": polygon_area(r).ok(),
        "vertices": r.vertices(),
        "halfplanes": r.halfplanes().iter().map(halfplane_json).collect::<Vec<_>>(),
    })
}

pub fn swept_json(h: &SweptHyperplane) -> Value {
    json!({
        "fitted": h.fitted,
        "orientation": match h.orientation {
            Orientation::Left => "left",
            Orientation::Right => "right",
        },
        "b": h.normal,
        "a": h.offset,
        "counts": counts_json(&h.counts),
        "arc": { "start": h.arc.start, "width": h.arc.width },
    })
}

fn f64_at(v: &Value, what: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| CliError::Region(format!("{what} is not a number")))
}

/// Reads a region back from [`region_json`] output. Accepts the bare region
/// object or a full `{meta, result}` document whose result holds a `region`.
pub fn read_region(doc: &Value) -> Result<ConvexRegion2D> {
    let r = if doc.get("status").is_some() {
        doc
    } else {
        doc.pointer("/result/region").ok_or_else(|| CliError::Region("no region object found".into()))?
    };
    let status = r["status"].as_str().ok_or_else(|| CliError::Region("missing status".into()))?;
    match status {
        "empty" => Ok(ConvexRegion2D::empty()),
        "bounded" => {
            let verts = r["vertices"].as_array().ok_or_else(|| CliError::Region("missing vertices".into()))?;
            let pts = verts
                .iter()
                .map(|p| Ok([f64_at(&p[0], "vertex x")?, f64_at(&p[1], "vertex y")?]))
                .collect::<Result<Vec<[f64; 2]>>>()?;
            Ok(ConvexRegion2D::from_vertices(pts)?)
        }
        "unbounded" => {
            let hs = r["halfplanes"].as_array().ok_or_else(|| CliError::Region("missing halfplanes".into()))?;
            let hs = hs
                .iter()
                .map(|h| {
                    let b = h["b"]
                        .as_array()
                        .ok_or_else(|| CliError::Region("halfplane without b".into()))?
                        .iter()
                        .map(|x| f64_at(x, "b"))
                        .collect::<Result<Vec<f64>>>()?;
                    Ok(Hyperplane::new(b, f64_at(&h["a"], "a")?)?)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(intersect_halfplanes_2d(&hs)?)
        }
        other => Err(CliError::Region(format!("unknown status {other:?}"))),
    }
}

/// Header plus rows, written with the `csv` crate.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Usage(format!("csv output: {e}"));
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.into_inner().map_err(|e| CliError::Usage(format!("csv output: {e}")))
    }
}

/// Vertex table of a region.
pub fn region_table(r: &ConvexRegion2D) -> Table {
    let mut t = Table::new(["x", "y"]);
    for v in r.vertices() {
        t.push(vec![v[0].to_string(), v[1].to_string()]);
    }
    t
}
