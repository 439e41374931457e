//! Path CSV and SVG emission.
//!
//! CSV rows are `t,x,y` with 17 significant digits; a tracking gap is a comment
//! line `# gap t_lost=<t> t_found=<t|none>` placed before the first sample after it.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use meander_core::meander_analysis::LatticeGeometry;
use meander_core::ode::Trajectory;
use meander_core::tip_track::{Gap, TipPath, TipSample};

use crate::error::CliError;

pub const CSV_HEADER: &str = "t,x,y";

fn write_gap<W: Write>(w: &mut W, g: &Gap) -> std::io::Result<()> {
    match g.t_found {
        Some(f) => writeln!(w, "# gap t_lost={:.16e} t_found={:.16e}", g.t_lost, f),
        None => writeln!(w, "# gap t_lost={:.16e} t_found=none", g.t_lost),
    }
}

pub fn write_path_csv<W: Write>(path: &TipPath, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    let mut gaps = path.gaps.iter().peekable();
    for (i, s) in path.samples.iter().enumerate() {
        while let Some(g) = gaps.next_if(|g| g.index <= i) {
            write_gap(&mut w, g)?;
        }
        writeln!(w, "{:.16e},{:.16e},{:.16e}", s.t, s.x, s.y)?;
    }
    for g in gaps {
        write_gap(&mut w, g)?;
    }
    Ok(())
}

fn parse_f64(s: &str, line: usize) -> Result<f64, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Io(format!("line {line}: cannot parse number `{s}`")))
}

fn parse_gap(rest: &str, index: usize, line: usize) -> Result<Gap, CliError> {
    let mut t_lost = None;
    let mut t_found = None;
    for field in rest.split_whitespace() {
        match field.split_once('=') {
            Some(("t_lost", v)) => t_lost = Some(parse_f64(v, line)?),
            Some(("t_found", "none")) => t_found = Some(None),
            Some(("t_found", v)) => t_found = Some(Some(parse_f64(v, line)?)),
            _ => return Err(CliError::Io(format!("line {line}: unexpected gap field `{field}`"))),
        }
    }
    match (t_lost, t_found) {
        (Some(t_lost), Some(t_found)) => Ok(Gap { index, t_lost, t_found }),
        _ => Err(CliError::Io(format!("line {line}: gap needs t_lost and t_found"))),
    }
}

/// Inverse of [`write_path_csv`]; other comment lines are ignored.
pub fn read_path_csv<R: BufRead>(r: R) -> Result<TipPath, CliError> {
    let mut path = TipPath::default();
    let mut header = false;
    for (n, line) in r.lines().enumerate() {
        let line = line.map_err(|e| CliError::Io(e.to_string()))?;
        let ln = n + 1;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(rest) = text.strip_prefix("# gap") {
            path.gaps.push(parse_gap(rest, path.len(), ln)?);
            continue;
        }
        if text.starts_with('#') {
            continue;
        }
        if !header {
            if text != CSV_HEADER {
                return Err(CliError::Io(format!(
                    "line {ln}: expected header `{CSV_HEADER}`, got `{text}`"
                )));
            }
            header = true;
            continue;
        }
        let cols: Vec<&str> = text.split(',').collect();
        if cols.len() != 3 {
            return Err(CliError::Io(format!(
                "line {ln}: expected 3 columns, got {}",
                cols.len()
            )));
        }
        path.samples.push(TipSample {
            t: parse_f64(cols[0], ln)?,
            x: parse_f64(cols[1], ln)?,
            y: parse_f64(cols[2], ln)?,
        });
    }
    if !header {
        return Err(CliError::Io(format!("missing header `{CSV_HEADER}`")));
    }
    Ok(path)
}

pub fn read_path_file(p: &Path) -> Result<TipPath, CliError> {
    let f = std::fs::File::open(p).map_err(|e| CliError::io(p, e))?;
    read_path_csv(std::io::BufReader::new(f))
}

/// `t,<names...>` rows of a dense trajectory.
pub fn write_trajectory_csv<W: Write, const N: usize>(
    traj: &Trajectory<N>,
    names: [&str; N],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "t,{}", names.join(","))?;
    for (t, y) in traj.t.iter().zip(&traj.y) {
        write!(w, "{t:.16e}")?;
        for v in y {
            write!(w, ",{v:.16e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// View box `(x0, y0, x1, y1)` of a path; `[-10 pi, 10 pi]^2` when empty.
pub fn view_box(path: &TipPath) -> (f64, f64, f64, f64) {
    if path.is_empty() {
        let h = 10.0 * std::f64::consts::PI;
        return (-h, -h, h, h);
    }
    let mut b = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for s in &path.samples {
        b = (b.0.min(s.x), b.1.min(s.y), b.2.max(s.x), b.3.max(s.y));
    }
    if b.2 - b.0 <= 0.0 {
        b.0 -= 0.5;
        b.2 += 0.5;
    }
    if b.3 - b.1 <= 0.0 {
        b.1 -= 0.5;
        b.3 += 0.5;
    }
    b
}

type Points = Vec<(f64, f64)>;

/// Lattice and dual points inside a view box, with tolerance `1e-9`.
pub fn markers_in(lattice: &LatticeGeometry, b: (f64, f64, f64, f64)) -> (Points, Points) {
    const TOL: f64 = 1e-9;
    let s = lattice.spacing;
    let axis = |lo: f64, hi: f64, off: f64| -> Vec<f64> {
        let a = ((lo - off - TOL) / s).ceil() as i64;
        let z = ((hi - off + TOL) / s).floor() as i64;
        (a..=z).map(|n| off + s * n as f64).collect()
    };
    let grid = |off: f64| {
        let xs = axis(b.0, b.2, off);
        let ys = axis(b.1, b.3, off);
        xs.iter()
            .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
            .collect::<Vec<_>>()
    };
    (grid(0.0), grid(0.5 * s))
}

fn polyline(out: &mut String, pts: &[TipSample], colour: &str, width: f64) {
    if pts.len() < 2 {
        return;
    }
    let _ = write!(
        out,
        "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"{width:.6}\" points=\""
    );
    for (i, p) in pts.iter().enumerate() {
        let sep = if i == 0 { "" } else { " " };
        let _ = write!(out, "{sep}{:.6},{:.6}", p.x, -p.y);
    }
    out.push_str("\"/>\n");
}

/// SVG document: the first `transient_fraction` of the path in green, the rest in blue,
/// lattice points as red squares and dual points as black crosses. `y` points up.
pub fn path_svg(path: &TipPath, lattice: &LatticeGeometry, transient_fraction: f64) -> String {
    let b = view_box(path);
    let (w, h) = (b.2 - b.0, b.3 - b.1);
    let size = 0.015 * w.max(h);
    let stroke = 0.003 * w.max(h);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.6} {:.6} {:.6} {:.6}\" width=\"600\" height=\"{:.0}\">",
        b.0,
        -b.3,
        w,
        h,
        600.0 * h / w
    );
    let split = ((path.len() as f64) * transient_fraction).floor() as usize;
    for seg in path.segments() {
        let s = &path.samples[seg.clone()];
        let cut = split.clamp(seg.start, seg.end) - seg.start;
        polyline(&mut out, &s[..(cut + 1).min(s.len())], "green", stroke);
        polyline(&mut out, &s[cut..], "blue", stroke);
    }
    let (lat, dual) = markers_in(lattice, b);
    for (x, y) in lat {
        let _ = writeln!(
            out,
            "<rect class=\"lattice\" x=\"{:.6}\" y=\"{:.6}\" width=\"{size:.6}\" height=\"{size:.6}\" fill=\"red\"/>",
            x - size / 2.0,
            -y - size / 2.0
        );
    }
    for (x, y) in dual {
        let (x, y, r) = (x, -y, size / 2.0);
        let _ = writeln!(
            out,
            "<path class=\"dual\" d=\"M{:.6} {:.6}L{:.6} {:.6}M{:.6} {:.6}L{:.6} {:.6}\" stroke=\"black\" stroke-width=\"{stroke:.6}\"/>",
            x - r,
            y - r,
            x + r,
            y + r,
            x - r,
            y + r,
            x + r,
            y - r
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn write_file(p: &Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = p.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(p, contents).map_err(|e| CliError::io(p, e))
}
