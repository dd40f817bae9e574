//! CSV and SVG emission. All files use LF newlines, dot decimals and fixed
//! column orders; rows are written in deterministic order so identical runs
//! produce identical bytes.

use ccekit::montecarlo::{RateResult, ReportRow, SweepRow};

/// Fixed-point value formatting for statistics columns.
fn fmt(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.6}")
    }
}

/// Provenance comment line carried by every output file.
pub fn provenance(config_sha256: &str, master_seed: u64, reps: usize) -> String {
    format!(
        "# ccekit v{} config_sha256={config_sha256} master_seed={master_seed} reps={reps}\n",
        env!("CARGO_PKG_VERSION")
    )
}

pub fn table_csv(rows: &[ReportRow], header: &str) -> String {
    let mut out = String::from(header);
    out.push_str(
        "n,t,tau,dgp_mode,criterion,penalty,avg_g,share_misselected,share_over,share_under,reps,failures,seed\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.n,
            r.t,
            r.tau,
            r.dgp_mode,
            r.criterion,
            r.penalty,
            fmt(r.avg_g),
            fmt(r.share_misselected),
            fmt(r.share_over),
            fmt(r.share_under),
            r.reps,
            r.failures,
            r.seed
        ));
    }
    for r in rows.iter().filter(|r| r.unreliable) {
        out.push_str(&format!(
            "# unreliable: n={} t={} tau={} criterion={} penalty={} failures={}\n",
            r.n, r.t, r.tau, r.criterion, r.penalty, r.failures
        ));
    }
    out
}

pub fn sweep_csv(rows: &[SweepRow], header: &str) -> String {
    let mut out = String::from(header);
    out.push_str("tau,criterion,error_mode,share_misselected\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.tau,
            r.criterion,
            r.error_mode,
            fmt(r.share_misselected)
        ));
    }
    out
}

pub fn rate_csv(results: &[RateResult], header: &str) -> String {
    let mut out = String::from(header);
    out.push_str("statistic,t,median_value,fitted_slope,theoretical_slope\n");
    for r in results {
        for (t, med) in r.t_grid.iter().zip(&r.medians) {
            out.push_str(&format!("{},{},{:.6e},,\n", r.statistic.label(), t, med));
        }
        out.push_str(&format!(
            "{},,,{},{}\n",
            r.statistic.label(),
            fmt(r.fitted_slope),
            fmt(r.theoretical_slope)
        ));
    }
    out
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Self-contained line chart of misselection shares against tau: one
/// polyline per (criterion, error mode) series, labeled axes, no external
/// assets.
pub fn sweep_svg(rows: &[SweepRow]) -> String {
    let (w, h) = (640.0, 460.0);
    let (left, right, top, bottom) = (62.0, 200.0, 20.0, 52.0);
    let plot_w = w - left - right;
    let plot_h = h - top - bottom;
    let x_at = |tau: f64| left + tau.clamp(0.0, 1.0) * plot_w;
    let y_at = |share: f64| top + (1.0 - share.clamp(0.0, 1.0)) * plot_h;

    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for r in rows {
        let label = format!("{} / {}", r.criterion, r.error_mode);
        match series.iter_mut().find(|(l, _)| *l == label) {
            Some((_, pts)) => pts.push((r.tau, r.share_misselected)),
            None => series.push((label, vec![(r.tau, r.share_misselected)])),
        }
    }

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    ));
    // axes
    svg.push_str(&format!(
        "  <line x1=\"{left}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        top + plot_h,
        left + plot_w,
        top + plot_h
    ));
    svg.push_str(&format!(
        "  <line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{}\" stroke=\"black\"/>\n",
        top + plot_h
    ));
    for i in 0..=4 {
        let v = i as f64 / 4.0;
        let x = x_at(v);
        let y = y_at(v);
        svg.push_str(&format!(
            "  <line x1=\"{x:.1}\" y1=\"{}\" x2=\"{x:.1}\" y2=\"{}\" stroke=\"black\"/>\n",
            top + plot_h,
            top + plot_h + 4.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{x:.1}\" y=\"{}\" text-anchor=\"middle\">{v:.2}</text>\n",
            top + plot_h + 18.0
        ));
        svg.push_str(&format!(
            "  <line x1=\"{}\" y1=\"{y:.1}\" x2=\"{left}\" y2=\"{y:.1}\" stroke=\"black\"/>\n",
            left - 4.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{v:.2}</text>\n",
            left - 8.0,
            y + 4.0
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">tau</text>\n",
        left + plot_w / 2.0,
        h - 14.0
    ));
    svg.push_str(&format!(
        "  <text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 16 {:.1})\">share misselected</text>\n",
        top + plot_h / 2.0,
        top + plot_h / 2.0
    ));

    for (s, (label, pts)) in series.iter().enumerate() {
        let color = PALETTE[s % PALETTE.len()];
        let points: Vec<String> = pts
            .iter()
            .map(|&(tau, share)| format!("{:.1},{:.1}", x_at(tau), y_at(share)))
            .collect();
        svg.push_str(&format!(
            "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            points.join(" ")
        ));
        let ly = top + 14.0 + 18.0 * s as f64;
        let lx = left + plot_w + 16.0;
        svg.push_str(&format!(
            "  <line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" \
             stroke=\"{color}\" stroke-width=\"2\"/>\n",
            lx + 22.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\">{label}</text>\n",
            lx + 28.0,
            ly + 4.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_formatting_is_locale_free() {
        assert_eq!(fmt(0.5), "0.500000");
        assert_eq!(fmt(f64::NAN), "NaN");
    }

    #[test]
    fn svg_has_one_polyline_per_series() {
        let rows = vec![
            SweepRow { tau: 0.0, criterion: "mw".into(), error_mode: "weak_cs".into(), share_misselected: 0.1 },
            SweepRow { tau: 0.5, criterion: "mw".into(), error_mode: "weak_cs".into(), share_misselected: 0.4 },
            SweepRow { tau: 0.0, criterion: "dvs".into(), error_mode: "weak_cs".into(), share_misselected: 0.2 },
            SweepRow { tau: 0.5, criterion: "dvs".into(), error_mode: "weak_cs".into(), share_misselected: 0.6 },
        ];
        let svg = sweep_svg(&rows);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains(">tau<"));
        assert!(svg.contains("share misselected"));
    }
}
