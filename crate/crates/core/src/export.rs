//! CSV and SVG writers for optimization results.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::contour::structure_contours;
use crate::error::{Error, Result};
use crate::fem::Mesh;
use crate::geometry::{component_corners, Component, Point};

pub const HISTORY_HEADER: &str =
    "iteration,compliance,volume,volume_fraction,constraint_value,max_design_change";

pub const COMPONENT_HEADER: &str = "component,x0,y0,L_half,t_half,p";

/// Objective and constraint values of one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub compliance: f64,
    pub volume: f64,
    /// Volume over domain area.
    pub volume_fraction: f64,
    /// `V / V_max - 1`; feasible when nonpositive.
    pub constraint_value: f64,
    /// Largest change of any design variable scaled to [0, 1].
    pub max_design_change: f64,
}

pub fn history_csv(records: &[IterationRecord]) -> String {
    let mut s = String::with_capacity(64 * (records.len() + 1));
    s.push_str(HISTORY_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.iteration,
            r.compliance,
            r.volume,
            r.volume_fraction,
            r.constraint_value,
            r.max_design_change
        );
    }
    s
}

/// Component table with half-length and half-thickness, two decimals.
pub fn component_table_csv(comps: &[Component]) -> String {
    let mut s = String::from(COMPONENT_HEADER);
    s.push('\n');
    for (k, c) in comps.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{:.2},{:.2},{:.2},{:.2},{:.2}",
            k + 1,
            c.x0,
            c.y0,
            0.5 * c.length,
            0.5 * c.thickness,
            c.p
        );
    }
    s
}

/// Pixels per domain unit in the SVG output.
const SVG_SCALE: f64 = 200.0;

fn svg_open(s: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}" width="{}" height="{}">"#,
        width * SVG_SCALE,
        height * SVG_SCALE
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{width}" height="{height}" fill="none" stroke="black" stroke-width="{}"/>"#,
        2.0 / SVG_SCALE
    );
}

/// SVG coordinates flip the vertical axis.
fn svg_point(p: Point, height: f64) -> (f64, f64) {
    (p.x, height - p.y)
}

/// Filled zero level set of the structure TDF sampled on the mesh nodes.
pub fn contour_svg(comps: &[Component], mesh: &Mesh, n_exp: u32) -> String {
    let (w, h) = (mesh.width(), mesh.height());
    let mut s = String::new();
    svg_open(&mut s, w, h);
    let loops = structure_contours(comps, mesh, n_exp);
    if !loops.is_empty() {
        s.push_str(r#"<path fill="black" fill-rule="evenodd" d=""#);
        for lp in &loops {
            for (k, &p) in lp.iter().enumerate() {
                let (x, y) = svg_point(p, h);
                let _ = write!(s, "{}{:.6} {:.6} ", if k == 0 { "M" } else { "L" }, x, y);
            }
            s.push('Z');
        }
        s.push_str("\"/>\n");
    }
    s.push_str("</svg>\n");
    s
}

/// Every component at least `threshold_t` thick drawn as its rectangle.
pub fn cad_svg(comps: &[Component], width: f64, height: f64, threshold_t: f64) -> String {
    let mut s = String::new();
    svg_open(&mut s, width, height);
    for c in comps.iter().filter(|c| c.thickness >= threshold_t) {
        s.push_str(r#"<polygon fill="black" points=""#);
        for (k, p) in component_corners(c).into_iter().enumerate() {
            let (x, y) = svg_point(p, height);
            let _ = write!(s, "{}{:.6},{:.6}", if k == 0 { "" } else { " " }, x, y);
        }
        s.push_str("\"/>\n");
    }
    s.push_str("</svg>\n");
    s
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn export_history_csv(path: &Path, records: &[IterationRecord]) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidDesign("empty iteration history".into()));
    }
    write(path, &history_csv(records))
}

pub fn export_component_table(path: &Path, comps: &[Component]) -> Result<()> {
    if comps.is_empty() {
        return Err(Error::InvalidDesign("no components".into()));
    }
    write(path, &component_table_csv(comps))
}

pub fn export_contour_svg(path: &Path, comps: &[Component], mesh: &Mesh, n_exp: u32) -> Result<()> {
    write(path, &contour_svg(comps, mesh, n_exp))
}

pub fn export_cad_svg(
    path: &Path,
    comps: &[Component],
    width: f64,
    height: f64,
    threshold_t: f64,
) -> Result<()> {
    write(path, &cad_svg(comps, width, height, threshold_t))
}
