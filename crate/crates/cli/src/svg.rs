//! Self-contained SVG rendering of a sweep: one rectangle per (p, q) cell
//! colored by the observed verdict, with the critical curve pq = 1 + 2/n and
//! the classical comparison curve Gamma(p, q) = n/2 overlaid as sampled
//! polylines.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use critcurve::sweep::{Observed, SweepRow};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 560.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_B: f64 = 50.0;
const MARGIN_T: f64 = 20.0;
const MARGIN_R: f64 = 170.0;
const CURVE_POINTS: usize = 200;

fn fill_for(observed: Observed) -> &'static str {
    match observed {
        Observed::Blowup => "#e0e0e0",
        Observed::Decay => "#8c8c8c",
        Observed::Ambiguous => "#f2e3b3",
    }
}

/// Cell edges at midpoints between consecutive grid values, extended by half
/// a spacing at the ends.
fn edges(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut e = Vec::with_capacity(sorted.len() + 1);
    if sorted.len() == 1 {
        return vec![sorted[0] - 0.5, sorted[0] + 0.5];
    }
    e.push(sorted[0] - 0.5 * (sorted[1] - sorted[0]));
    for w in sorted.windows(2) {
        e.push(0.5 * (w[0] + w[1]));
    }
    let last = sorted.len() - 1;
    e.push(sorted[last] + 0.5 * (sorted[last] - sorted[last - 1]));
    e
}

pub fn write_phase_diagram(
    dir: &Path,
    n: usize,
    p_list: &[f64],
    q_list: &[f64],
    rows: &[SweepRow],
) -> std::io::Result<PathBuf> {
    let p_edges = edges(p_list);
    let q_edges = edges(q_list);
    let (p_min, p_max) = (p_edges[0], *p_edges.last().unwrap());
    let (q_min, q_max) = (q_edges[0], *q_edges.last().unwrap());
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = move |p: f64| MARGIN_L + (p - p_min) / (p_max - p_min) * plot_w;
    let sy = move |q: f64| MARGIN_T + (q_max - q) / (q_max - q_min) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(
        svg,
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );

    // cells
    for row in rows {
        let pi = p_list.iter().position(|&v| v == row.p).unwrap_or(0);
        let qi = q_list.iter().position(|&v| v == row.q).unwrap_or(0);
        let x0 = sx(p_edges[pi]);
        let x1 = sx(p_edges[pi + 1]);
        let y1 = sy(q_edges[qi]);
        let y0 = sy(q_edges[qi + 1]);
        let _ = writeln!(
            svg,
            "<rect x=\"{x0:.2}\" y=\"{y0:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\" stroke=\"white\" stroke-width=\"1\"/>",
            x1 - x0,
            y1 - y0,
            fill_for(row.observed)
        );
    }

    // critical curve pq = 1 + 2/n
    let crit = 1.0 + 2.0 / n as f64;
    let mut path = String::new();
    for i in 0..CURVE_POINTS {
        let p = p_min.max(crit / q_max) + (p_max - p_min.max(crit / q_max)) * i as f64 / (CURVE_POINTS - 1) as f64;
        let q = crit / p;
        if q < q_min || q > q_max {
            continue;
        }
        let cmd = if path.is_empty() { 'M' } else { 'L' };
        let _ = write!(path, "{cmd}{:.2} {:.2} ", sx(p), sy(q));
    }
    let _ = writeln!(
        svg,
        "<path d=\"{path}\" fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"2\"/>"
    );

    // classical comparison curve Gamma(p, q) = n/2: for p >= q the branch
    // q = (2p + 2 + n)/(n p), mirrored across the diagonal; the branches
    // join at p = q = 1 + 2/n.
    let nf = n as f64;
    let junction = 1.0 + 2.0 / nf;
    for mirror in [false, true] {
        let mut path = String::new();
        for i in 0..CURVE_POINTS {
            let p = junction + (p_max.max(q_max) - junction) * i as f64 / (CURVE_POINTS - 1) as f64;
            let q = (2.0 * p + 2.0 + nf) / (nf * p);
            let (px, qx) = if mirror { (q, p) } else { (p, q) };
            if px < p_min || px > p_max || qx < q_min || qx > q_max {
                continue;
            }
            let cmd = if path.is_empty() { 'M' } else { 'L' };
            let _ = write!(path, "{cmd}{:.2} {:.2} ", sx(px), sy(qx));
        }
        if !path.is_empty() {
            let _ = writeln!(
                svg,
                "<path d=\"{path}\" fill=\"none\" stroke=\"#c23b3b\" stroke-width=\"2\"/>"
            );
        }
    }

    // axes and ticks
    let _ = writeln!(
        svg,
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{plot_w:.2}\" height=\"{plot_h:.2}\" fill=\"none\" stroke=\"black\"/>"
    );
    for &p in p_list {
        let x = sx(p);
        let y = MARGIN_T + plot_h;
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.2}\" y1=\"{y:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\
             <text x=\"{x:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">{p}</text>",
            y + 5.0,
            y + 18.0
        );
    }
    for &q in q_list {
        let y = sy(q);
        let _ = writeln!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{MARGIN_L}\" y2=\"{y:.2}\" stroke=\"black\"/>\
             <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\">{q}</text>",
            MARGIN_L - 5.0,
            MARGIN_L - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"14\" text-anchor=\"middle\">p</text>",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 8.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"16\" y=\"{:.2}\" font-size=\"14\" text-anchor=\"middle\">q</text>",
        MARGIN_T + plot_h / 2.0
    );

    // legend
    let lx = MARGIN_L + plot_w + 14.0;
    let mut ly = MARGIN_T + 10.0;
    for (label, color) in [
        ("blow-up observed", fill_for(Observed::Blowup)),
        ("decay observed", fill_for(Observed::Decay)),
        ("ambiguous", fill_for(Observed::Ambiguous)),
    ] {
        let _ = writeln!(
            svg,
            "<rect x=\"{lx}\" y=\"{ly}\" width=\"14\" height=\"14\" fill=\"{color}\" stroke=\"black\" stroke-width=\"0.5\"/>\
             <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\">{label}</text>",
            lx + 20.0,
            ly + 11.0
        );
        ly += 22.0;
    }
    ly += 6.0;
    for (label, color) in [
        (format!("pq = {crit}"), "#1f5fbf"),
        (format!("Gamma(p,q) = {}", nf / 2.0), "#c23b3b"),
    ] {
        let _ = writeln!(
            svg,
            "<line x1=\"{lx}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>\
             <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\">{label}</text>",
            ly + 7.0,
            lx + 14.0,
            ly + 7.0,
            lx + 20.0,
            ly + 11.0
        );
        ly += 22.0;
    }

    let _ = writeln!(svg, "</svg>");
    let path = dir.join("phase_diagram.svg");
    std::fs::write(&path, svg)?;
    Ok(path)
}
