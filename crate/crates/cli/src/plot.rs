//! Built-in SVG line plots of artifact tables. Plots are diagnostics; each
//! carries the scenario hash and source file in a comment.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use gcf_core::{GcfError, Result};

use crate::artifacts::{column, read_table};

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace("--", "- -")
}

/// Renders the series as polylines over a shared linear frame.
pub fn line_plot(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    series: &[Series],
    provenance: &str,
) -> String {
    let pts = series
        .iter()
        .flat_map(|s| &s.points)
        .filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x0 < x1) {
        (x0, x1) = (x0 - 0.5, x0 + 0.5);
    }
    if !(y0 < y1) {
        (y0, y1) = (y0 - 0.5, y0 + 0.5);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);
    let mut s = String::new();
    writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    )
    .unwrap();
    writeln!(s, "<!-- {} -->", esc(provenance)).unwrap();
    writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>").unwrap();
    writeln!(
        s,
        "<text x=\"{}\" y=\"24\" font-size=\"15\" text-anchor=\"middle\">{}</text>",
        W / 2.0,
        esc(title)
    )
    .unwrap();
    writeln!(
        s,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    )
    .unwrap();
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (x, y) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"middle\">{x:.4}</text>",
            sx(x),
            H - MARGIN + 14.0
        )
        .unwrap();
        writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"end\">{y:.4}</text>",
            MARGIN - 4.0,
            sy(y) + 3.0
        )
        .unwrap();
    }
    writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
        W / 2.0,
        H - 16.0,
        esc(xlabel)
    )
    .unwrap();
    writeln!(
        s,
        "<text x=\"14\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{}</text>",
        H / 2.0,
        H / 2.0,
        esc(ylabel)
    )
    .unwrap();
    for (k, ser) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let path: Vec<String> = ser
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        writeln!(
            s,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            path.join(" ")
        )
        .unwrap();
        writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{color}\">{}</text>",
            W - MARGIN + 4.0 - 120.0,
            MARGIN + 14.0 + 14.0 * k as f64,
            esc(&ser.label)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn group(keys: &[f64], xs: &[f64], ys: &[f64]) -> BTreeMap<u64, Vec<(f64, f64)>> {
    let mut m: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
    for ((k, x), y) in keys.iter().zip(xs).zip(ys) {
        m.entry(k.to_bits()).or_default().push((*x, *y));
    }
    m
}

fn interface_plot(path: &Path) -> Result<String> {
    let (hash, header, rows) = read_table(path)?;
    let t = column(path, &header, &rows, "t")?;
    let eps = column(path, &header, &rows, "epsilon")?;
    let gamma = column(path, &header, &rows, "gamma")?;
    let series = group(&eps, &t, &gamma)
        .into_iter()
        .map(|(e, pts)| {
            // mean over rays per time
            let mut by_t: BTreeMap<u64, (f64, f64, usize)> = BTreeMap::new();
            for (t, g) in pts.into_iter().filter(|p| p.1.is_finite()) {
                let e = by_t.entry(t.to_bits()).or_insert((t, 0.0, 0));
                e.1 += g;
                e.2 += 1;
            }
            let mut points: Vec<(f64, f64)> =
                by_t.values().map(|(t, s, n)| (*t, s / *n as f64)).collect();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series {
                label: format!("eps = {}", f64::from_bits(e)),
                points,
            }
        })
        .collect::<Vec<_>>();
    Ok(line_plot(
        "interface radius",
        "t",
        "mean gamma",
        &series,
        &format!("scenario_sha256={hash} source=interface.csv"),
    ))
}

fn exponent_plot(path: &Path) -> Result<String> {
    let (hash, header, rows) = read_table(path)?;
    let t = column(path, &header, &rows, "t")?;
    let w = column(path, &header, &rows, "collar_width")?;
    let b = column(path, &header, &rows, "beta_hat")?;
    let series: Vec<Series> = group(&w, &t, &b)
        .into_iter()
        .map(|(k, points)| Series {
            label: format!("width {}", f64::from_bits(k)),
            points,
        })
        .collect();
    Ok(line_plot(
        "vanishing exponent fits",
        "t",
        "beta_hat",
        &series,
        &format!("scenario_sha256={hash} source=exponents.csv"),
    ))
}

fn band_plot(path: &Path, name: &str) -> Result<String> {
    let (hash, header, rows) = read_table(path)?;
    let z = column(path, &header, &rows, "z")?;
    let mut series = Vec::new();
    for col in ["a11", "a22", "btilde1"] {
        let v = column(path, &header, &rows, col)?;
        let mut by_z: BTreeMap<u64, (f64, f64, f64)> = BTreeMap::new();
        for (zz, vv) in z.iter().zip(&v).filter(|p| p.1.is_finite()) {
            let e = by_z
                .entry(zz.to_bits())
                .or_insert((*zz, f64::INFINITY, f64::NEG_INFINITY));
            e.1 = e.1.min(*vv);
            e.2 = e.2.max(*vv);
        }
        let mut rows: Vec<(f64, f64, f64)> = by_z.into_values().collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        series.push(Series {
            label: format!("{col} min"),
            points: rows.iter().map(|r| (r.0, r.1)).collect(),
        });
        series.push(Series {
            label: format!("{col} max"),
            points: rows.iter().map(|r| (r.0, r.2)).collect(),
        });
    }
    Ok(line_plot(
        "hodograph coefficient bands",
        "z",
        "coefficient",
        &series,
        &format!("scenario_sha256={hash} source={name}"),
    ))
}

/// Writes every plot whose input table exists in `dir`; returns the SVG
/// paths. Errors when none of the inputs is present.
pub fn plot_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(GcfError::MissingInput(format!(
            "artifact directory {}",
            dir.display()
        )));
    }
    let mut jobs: Vec<(PathBuf, String)> = Vec::new();
    let interface = dir.join("interface.csv");
    if interface.exists() {
        jobs.push((
            dir.join("interface_radius.svg"),
            interface_plot(&interface)?,
        ));
    }
    let exps = dir.join("exponents.csv");
    if exps.exists() {
        jobs.push((dir.join("exponents.svg"), exponent_plot(&exps)?));
    }
    let mut charts: Vec<String> = std::fs::read_dir(dir)
        .map_err(|e| GcfError::io(dir, e))?
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.starts_with("hodograph_") && n.ends_with(".csv"))
        .collect();
    charts.sort();
    for name in charts {
        let stem = name
            .trim_end_matches(".csv")
            .replace("hodograph", "coefficient_bands");
        jobs.push((
            dir.join(format!("{stem}.svg")),
            band_plot(&dir.join(&name), &name)?,
        ));
    }
    if jobs.is_empty() {
        return Err(GcfError::MissingInput(format!(
            "none of interface.csv, exponents.csv, hodograph_<k>.csv in {}",
            dir.display()
        )));
    }
    let mut out = Vec::new();
    for (path, svg) in jobs {
        std::fs::write(&path, svg).map_err(|e| GcfError::io(&path, e))?;
        out.push(path);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_carries_provenance_and_lines() {
        let s = line_plot(
            "t",
            "x",
            "y",
            &[Series {
                label: "a".into(),
                points: vec![(0.0, 1.0), (1.0, 2.0), (2.0, f64::NAN)],
            }],
            "scenario_sha256=abc source=x.csv",
        );
        assert!(s.contains("<!-- scenario_sha256=abc source=x.csv -->"));
        assert_eq!(s.matches("<polyline").count(), 1);
        assert!(s.trim_end().ends_with("</svg>"));
    }
}
