//! SVG plots of CSV columns.
//!
//! Plots are derived from CSV alone, so any emitted table can be re-plotted
//! without recomputing it.

use std::collections::BTreeMap;
use std::io::Read;

use plotters::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("column `{0}` is not in the table (columns: {1})")]
    UnknownColumn(String, String),
    #[error("bad plot name `{0}`: expected `x:y`, e.g. `n:measured`")]
    BadName(String),
    #[error("bad filter `{0}`: expected `column=value`")]
    BadFilter(String),
    #[error("nothing to plot: no row has numeric `{0}` and `{1}`")]
    Empty(String, String),
    #[error("drawing failed: {0}")]
    Draw(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Line,
    Scatter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub x: String,
    pub y: String,
    pub kind: PlotKind,
    /// One series per distinct combination of these columns.
    pub group_by: Vec<String>,
    /// Keep only rows where each column equals the value.
    pub filters: Vec<(String, String)>,
    pub log_x: bool,
    pub log_y: bool,
}

impl PlotSpec {
    /// `x:y` column names.
    pub fn from_name(name: &str) -> Result<Self, ReportError> {
        let (x, y) = name.split_once(':').ok_or_else(|| ReportError::BadName(name.into()))?;
        if x.trim().is_empty() || y.trim().is_empty() {
            return Err(ReportError::BadName(name.into()));
        }
        Ok(Self {
            x: x.trim().into(),
            y: y.trim().into(),
            kind: PlotKind::Line,
            group_by: Vec::new(),
            filters: Vec::new(),
            log_x: false,
            log_y: false,
        })
    }

    pub fn filter(mut self, expr: &str) -> Result<Self, ReportError> {
        let (k, v) = expr.split_once('=').ok_or_else(|| ReportError::BadFilter(expr.into()))?;
        self.filters.push((k.trim().into(), v.trim().into()));
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read<R: Read>(input: R) -> Result<Self, ReportError> {
        let mut rd = csv::Reader::from_reader(input);
        let header = rd.headers()?.iter().map(String::from).collect();
        let rows = rd.records().map(|r| r.map(|r| r.iter().map(String::from).collect())).collect::<Result<_, _>>()?;
        Ok(Self { header, rows })
    }

    fn column(&self, name: &str) -> Result<usize, ReportError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ReportError::UnknownColumn(name.into(), self.header.join(", ")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Verification tables group by check, law and quantity unless told otherwise.
fn default_groups(t: &Table) -> Vec<String> {
    ["check_id", "law", "quantity"].iter().filter(|c| t.header.iter().any(|h| h == *c)).map(|c| c.to_string()).collect()
}

pub fn series(table: &Table, spec: &PlotSpec) -> Result<Vec<Series>, ReportError> {
    let (xi, yi) = (table.column(&spec.x)?, table.column(&spec.y)?);
    let groups = if spec.group_by.is_empty() { default_groups(table) } else { spec.group_by.clone() };
    let gi = groups.iter().map(|g| table.column(g)).collect::<Result<Vec<_>, _>>()?;
    let fi = spec
        .filters
        .iter()
        .map(|(k, v)| Ok((table.column(k)?, v.as_str())))
        .collect::<Result<Vec<_>, ReportError>>()?;
    let usable = |v: f64, log: bool| v.is_finite() && (!log || v > 0.0);
    let mut out: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for row in &table.rows {
        if fi.iter().any(|(i, v)| row.get(*i).map(String::as_str) != Some(*v)) {
            continue;
        }
        let (Some(Ok(x)), Some(Ok(y))) = (row.get(xi).map(|s| s.parse::<f64>()), row.get(yi).map(|s| s.parse::<f64>()))
        else {
            continue;
        };
        if !usable(x, spec.log_x) || !usable(y, spec.log_y) {
            continue;
        }
        let label = gi.iter().map(|&i| row[i].as_str()).collect::<Vec<_>>().join(" | ");
        out.entry(label).or_default().push((x, y));
    }
    if out.is_empty() {
        return Err(ReportError::Empty(spec.x.clone(), spec.y.clone()));
    }
    Ok(out
        .into_iter()
        .map(|(label, mut points)| {
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series { label, points }
        })
        .collect())
}

fn padded(lo: f64, hi: f64, log: bool) -> (f64, f64) {
    if log {
        return (lo / 1.2, hi * 1.2);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
    (lo - pad, hi + pad)
}

fn draw_err<E: std::fmt::Display>(e: E) -> ReportError {
    ReportError::Draw(e.to_string())
}

pub fn render_svg(all: &[Series], spec: &PlotSpec) -> Result<String, ReportError> {
    let pts = all.iter().flat_map(|s| &s.points);
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        (x0, x1, y0, y1) = (x0.min(x), x1.max(x), y0.min(y), y1.max(y));
    }
    if !x0.is_finite() {
        return Err(ReportError::Empty(spec.x.clone(), spec.y.clone()));
    }
    let (x0, x1) = padded(x0, x1, spec.log_x);
    let (y0, y1) = padded(y0, y1, spec.log_y);
    let mut buf = String::new();
    {
        let root = SVGBackend::with_string(&mut buf, (900, 600)).into_drawing_area();
        root.fill(&WHITE).map_err(draw_err)?;
        let mut chart = ChartBuilder::on(&root);
        chart.margin(20).x_label_area_size(40).y_label_area_size(70);
        // The four axis combinations are distinct types.
        macro_rules! plot {
            ($xr:expr, $yr:expr) => {{
                let mut c = chart.build_cartesian_2d($xr, $yr).map_err(draw_err)?;
                c.configure_mesh().x_desc(spec.x.as_str()).y_desc(spec.y.as_str()).draw().map_err(draw_err)?;
                for (i, s) in all.iter().enumerate() {
                    let color = Palette99::pick(i).to_rgba();
                    let anno = match spec.kind {
                        PlotKind::Line => c
                            .draw_series(LineSeries::new(s.points.iter().copied(), color.stroke_width(2)))
                            .map_err(draw_err)?,
                        PlotKind::Scatter => c
                            .draw_series(s.points.iter().map(|&p| Circle::new(p, 3, color.filled())))
                            .map_err(draw_err)?,
                    };
                    anno.label(s.label.as_str())
                        .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color.stroke_width(2)));
                }
                c.configure_series_labels()
                    .background_style(WHITE.mix(0.8))
                    .border_style(BLACK)
                    .draw()
                    .map_err(draw_err)?;
            }};
        }
        match (spec.log_x, spec.log_y) {
            (false, false) => plot!(x0..x1, y0..y1),
            (true, false) => plot!((x0..x1).log_scale(), y0..y1),
            (false, true) => plot!(x0..x1, (y0..y1).log_scale()),
            (true, true) => plot!((x0..x1).log_scale(), (y0..y1).log_scale()),
        }
        root.present().map_err(draw_err)?;
    }
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "check_id,law,quantity,n,measured\nc,srw,q,8,1.5\nc,srw,q,16,2\nc,lazy,q,8,0.5\nc,srw,q,32,\n";

    #[test]
    fn groups_and_skips_blank_cells() {
        let t = Table::read(CSV.as_bytes()).unwrap();
        let s = series(&t, &PlotSpec::from_name("n:measured").unwrap()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].label, "c | srw | q");
        assert_eq!(s[1].points, vec![(8.0, 1.5), (16.0, 2.0)]);
        let only = PlotSpec::from_name("n:measured").unwrap().filter("law=lazy").unwrap();
        assert_eq!(series(&t, &only).unwrap().len(), 1);
    }

    #[test]
    fn svg_is_emitted() {
        let t = Table::read(CSV.as_bytes()).unwrap();
        let mut spec = PlotSpec::from_name("n:measured").unwrap();
        spec.log_x = true;
        spec.kind = PlotKind::Scatter;
        let svg = render_svg(&series(&t, &spec).unwrap(), &spec).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("</svg>"));
        assert!(matches!(PlotSpec::from_name("n"), Err(ReportError::BadName(_))));
        assert!(matches!(series(&t, &PlotSpec::from_name("n:nope").unwrap()), Err(ReportError::UnknownColumn(..))));
    }
}
