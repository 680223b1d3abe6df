//! Tables and figures: CSV summaries of a [`MetricsReport`], SVG scalp
//! topographies (inverse-distance weighted) and significant-|R| bar charts.

use std::fmt::Write;

use crate::error::Result;
use crate::io::{Montage, Region};
use crate::metrics::{Band, BandPowerSummary, FdCorrelation, MetricsReport, RegionSummary, SnrRow};

fn num(v: f64) -> String {
    // Shortest round-trip form keeps the tables byte-stable and lossless.
    format!("{v}")
}

pub fn band_power_csv(summaries: &[BandPowerSummary], montage: &Montage, alpha: f64) -> Result<String> {
    let mut s = String::from("band_low_hz,band_high_hz,label,region,move_mean_z,idle_mean_z,p,significant\n");
    for b in summaries {
        for e in &b.electrodes {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                num(b.band.low_hz),
                num(b.band.high_hz),
                e.label,
                montage.get(&e.label)?.region.name(),
                num(e.move_mean),
                num(e.idle_mean),
                num(e.p),
                e.significant(alpha)
            );
        }
    }
    Ok(s)
}

pub fn snr_csv(rows: &[SnrRow]) -> String {
    let mut s = String::from("label,band_low_hz,band_high_hz,trial,snr_db\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{}", r.label, num(r.band.low_hz), num(r.band.high_hz), r.trial, num(r.snr_db));
    }
    s
}

pub fn fd_correlation_csv(corr: &FdCorrelation, montage: &Montage) -> Result<String> {
    let mut s = String::from("label,region,r,t,p,significant_r\n");
    for e in &corr.electrodes {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            e.label,
            montage.get(&e.label)?.region.name(),
            num(e.r),
            num(e.t),
            num(e.p),
            num(e.significant_r)
        );
    }
    Ok(s)
}

pub fn region_summary_csv(r: &RegionSummary) -> String {
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    let rows: [(&str, String); 11] = [
        ("ha_mean_z", num(r.ha_mean)),
        ("nha_mean_z", num(r.nha_mean)),
        ("p_ha_vs_nha", num(r.p_ha_vs_nha)),
        ("sce_ha", r.sce_ha.to_string()),
        ("sce_nha", r.sce_nha.to_string()),
        ("sce_in_ha_percent", opt(r.sce_in_ha_percent)),
        ("hand_motor_mean_sig_abs_r", num(r.hand_motor_mean_sig_abs_r)),
        ("contralesional_mean_sig_abs_r", num(r.contralesional_mean_sig_abs_r)),
        ("hand_motor_mean_abs_r_zero_filled", num(r.hand_motor_mean_abs_r_zero_filled)),
        ("contralesional_mean_abs_r_zero_filled", num(r.contralesional_mean_abs_r_zero_filled)),
        ("n_sce", (r.sce_ha + r.sce_nha).to_string()),
    ];
    let mut s = String::from("metric,value\n");
    for (k, v) in rows {
        let _ = writeln!(s, "{k},{v}");
    }
    s
}

pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Diverging blue–white–red map of `v ∈ [-1, 1]`.
fn diverging(v: f64) -> String {
    let v = v.clamp(-1.0, 1.0);
    let (r, g, b) = if v >= 0.0 {
        (255.0, 255.0 * (1.0 - v), 255.0 * (1.0 - v))
    } else {
        (255.0 * (1.0 + v), 255.0 * (1.0 + v), 255.0)
    };
    format!("#{:02x}{:02x}{:02x}", r.round() as u8, g.round() as u8, b.round() as u8)
}

/// Inverse-distance-weighted value at `(x, y)` (power 2); exact at sites.
pub fn idw(points: &[(f64, f64, f64)], x: f64, y: f64) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for &(px, py, v) in points {
        let d2 = (px - x).powi(2) + (py - y).powi(2);
        if d2 < 1e-18 {
            return Some(v);
        }
        num += v / d2;
        den += 1.0 / d2;
    }
    (den > 0.0).then(|| num / den)
}

/// Convex hull (monotone chain), counter-clockwise.
fn hull(mut pts: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// One electrode value for a topography; masked electrodes are drawn as
/// hollow markers and excluded from the interpolation.
#[derive(Clone, Debug, PartialEq)]
pub struct TopoValue {
    pub label: String,
    pub value: f64,
    pub shown: bool,
}

const SIZE: f64 = 400.0;
const RADIUS: f64 = 170.0;
const GRID: usize = 48;

fn to_px(x: f64, y: f64) -> (f64, f64) {
    (SIZE / 2.0 + x * RADIUS, SIZE / 2.0 - y * RADIUS)
}

/// Scalp map: interpolated color over the head disk, HA outline in red,
/// electrode markers, and virtual electrodes as a row of dots below the
/// head.
pub fn topography_svg(title: &str, values: &[TopoValue], montage: &Montage, virtual_labels: &[String]) -> Result<String> {
    let mut pts = Vec::new();
    for v in values.iter().filter(|v| v.shown && v.value.is_finite()) {
        let e = montage.get(&v.label)?;
        pts.push((e.x, e.y, v.value));
    }
    let scale = pts.iter().map(|p| p.2.abs()).fold(0.0, f64::max);
    let height = SIZE + if virtual_labels.is_empty() { 0.0 } else { 50.0 };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{height}" viewBox="0 0 {SIZE} {height}">"#
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#, SIZE / 2.0, escape(title));
    let _ = writeln!(
        s,
        r##"<circle cx="{c}" cy="{c}" r="{RADIUS}" fill="#eeeeee" stroke="black" stroke-width="2"/>"##,
        c = SIZE / 2.0
    );
    // Nose.
    let (nx, ny) = to_px(0.0, 1.0);
    let _ = writeln!(
        s,
        r#"<polygon points="{},{} {},{} {},{}" fill="none" stroke="black" stroke-width="2"/>"#,
        nx - 10.0,
        ny + 2.0,
        nx,
        ny - 14.0,
        nx + 10.0,
        ny + 2.0
    );
    if !pts.is_empty() {
        let _ = writeln!(s, "<g>");
        let cell = 2.0 / GRID as f64;
        for i in 0..GRID {
            for j in 0..GRID {
                let x = -1.0 + (i as f64 + 0.5) * cell;
                let y = 1.0 - (j as f64 + 0.5) * cell;
                if x * x + y * y > 1.0 {
                    continue;
                }
                let v = idw(&pts, x, y).expect("points present");
                let (px, py) = to_px(x - cell / 2.0, y + cell / 2.0);
                let w = cell * RADIUS;
                let c = diverging(if scale > 0.0 { v / scale } else { 0.0 });
                let _ = writeln!(s, r#"<rect x="{px:.2}" y="{py:.2}" width="{w:.2}" height="{w:.2}" fill="{c}"/>"#);
            }
        }
        let _ = writeln!(s, "</g>");
    }
    let ha: Vec<(f64, f64)> = montage
        .electrodes
        .iter()
        .filter(|e| e.region == Region::Ha)
        .map(|e| (e.x, e.y))
        .collect();
    let outline = hull(ha);
    if outline.len() >= 3 {
        let pts: Vec<String> = outline
            .iter()
            .map(|&(x, y)| {
                let (px, py) = to_px(x, y);
                format!("{px:.2},{py:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polygon class="ha-outline" points="{}" fill="none" stroke="red" stroke-width="2.5"/>"#,
            pts.join(" ")
        );
    }
    for v in values {
        let e = montage.get(&v.label)?;
        let (px, py) = to_px(e.x, e.y);
        let (class, fill) = if v.shown { ("electrode", "black") } else { ("electrode masked", "none") };
        let _ = writeln!(
            s,
            r#"<circle class="{class}" cx="{px:.2}" cy="{py:.2}" r="3" fill="{fill}" stroke="black"><title>{} {}</title></circle>"#,
            escape(&v.label),
            num(v.value)
        );
    }
    for (k, label) in virtual_labels.iter().enumerate() {
        let step = SIZE / (virtual_labels.len() as f64 + 1.0);
        let px = step * (k as f64 + 1.0);
        let py = SIZE + 20.0;
        let _ = writeln!(
            s,
            r##"<circle class="virtual" cx="{px:.2}" cy="{py:.2}" r="5" fill="#ff8c00" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle" font-size="9">{}</text>"##,
            py + 18.0,
            escape(label)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="10">scale ±{}</text>"#,
        8.0,
        SIZE - 8.0,
        num((scale * 1000.0).round() / 1000.0)
    );
    s.push_str("</svg>\n");
    Ok(s)
}

/// Bars of |R| for significant-correlation electrodes, red HA / blue NHA.
pub fn bar_chart_svg(title: &str, corr: &FdCorrelation, montage: &Montage) -> Result<String> {
    let bars: Vec<(&str, f64, Region)> = corr
        .electrodes
        .iter()
        .filter(|e| e.significant_r != 0.0)
        .map(|e| Ok((e.label.as_str(), e.significant_r.abs(), montage.get(&e.label)?.region)))
        .collect::<Result<_>>()?;
    let (w, h, left, bottom, top) = (480.0, 300.0, 50.0, 60.0, 30.0);
    let plot_h = h - bottom - top;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{y}" stroke="black"/><line x1="{left}" y1="{y}" x2="{x}" y2="{y}" stroke="black"/>"#,
        y = h - bottom,
        x = w - 10.0
    );
    for tick in 0..=4 {
        let v = tick as f64 * 0.25;
        let y = h - bottom - v * plot_h;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end" font-size="10">{v:.2}</text>"#,
            left - 4.0,
            y + 3.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" font-size="11" transform="rotate(-90 14 {:.2})">|R|</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0
    );
    if !bars.is_empty() {
        let slot = (w - left - 20.0) / bars.len() as f64;
        for (k, (label, r, region)) in bars.iter().enumerate() {
            let bh = r.min(1.0) * plot_h;
            let x = left + 5.0 + k as f64 * slot;
            let color = match region {
                Region::Ha => "red",
                Region::Nha => "blue",
            };
            let _ = writeln!(
                s,
                r#"<rect class="bar" x="{x:.2}" y="{:.2}" width="{:.2}" height="{bh:.2}" fill="{color}"><title>{} {}</title></rect>"#,
                h - bottom - bh,
                slot * 0.7,
                escape(label),
                num(*r)
            );
            let tx = x + slot * 0.35;
            let ty = h - bottom + 12.0;
            let _ = writeln!(
                s,
                r#"<text x="{tx:.2}" y="{ty:.2}" font-size="9" text-anchor="end" transform="rotate(-60 {tx:.2} {ty:.2})">{}</text>"#,
                escape(label)
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Topography values for a band: move-epoch mean z, shown where the
/// move-vs-idle difference is significant.
pub fn band_topography(summary: &BandPowerSummary, alpha: f64) -> Vec<TopoValue> {
    summary
        .electrodes
        .iter()
        .map(|e| TopoValue {
            label: e.label.clone(),
            value: e.move_mean,
            shown: e.significant(alpha),
        })
        .collect()
}

pub fn band_name(band: Band) -> String {
    format!("{}-{}Hz", num(band.low_hz), num(band.high_hz))
}

/// All figures for one metrics report: `(file name, svg)` pairs.
pub fn render_figures(report: &MetricsReport, montage: &Montage) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for summary in &report.band_power {
        let name = band_name(summary.band);
        let title = format!("{} move z, {name}", report.condition);
        out.push((
            format!("topography_{name}.svg"),
            topography_svg(&title, &band_topography(summary, report.alpha), montage, &report.virtual_labels)?,
        ));
    }
    let title = format!("{} significant |R| (relative FD vs force)", report.condition);
    out.push(("fd_correlation_bars.svg".to_string(), bar_chart_svg(&title, &report.fd, montage)?));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::Side;
    use crate::metrics::{ElectrodeBandPower, ElectrodeCorrelation, HIGH_GAMMA};

    /// Minimal XML well-formedness check: balanced, properly nested tags
    /// and quoted attributes.
    pub(crate) fn well_formed(xml: &str) -> bool {
        let mut stack: Vec<String> = Vec::new();
        let mut rest = xml;
        while let Some(i) = rest.find('<') {
            let text = &rest[..i];
            if text.contains('>') || (text.contains('&') && !text.split('&').skip(1).all(|t| t.contains(';'))) {
                return false;
            }
            let Some(j) = rest[i..].find('>') else { return false };
            let tag = &rest[i + 1..i + j];
            rest = &rest[i + j + 1..];
            if tag.matches('"').count() % 2 != 0 {
                return false;
            }
            if let Some(name) = tag.strip_prefix('/') {
                if stack.pop().as_deref() != Some(name.trim()) {
                    return false;
                }
            } else if !tag.ends_with('/') && !tag.starts_with('?') && !tag.starts_with('!') {
                stack.push(tag.split_whitespace().next().unwrap_or("").to_string());
            }
        }
        stack.is_empty()
    }

    fn montage() -> Montage {
        let labels = ["C3", "C5", "C1", "FCC5h", "FCC3h", "CCP5h", "CCP3h", "C4", "Cz", "O1"];
        Montage::default_128(Side::Left).subset(&labels).unwrap()
    }

    fn corr(rs: &[(&str, f64)]) -> FdCorrelation {
        FdCorrelation {
            level_centers: vec![],
            electrodes: rs
                .iter()
                .map(|&(l, r)| ElectrodeCorrelation {
                    label: l.into(),
                    r,
                    t: 0.0,
                    p: 0.5,
                    significant_r: r,
                    level_means: vec![],
                })
                .collect(),
        }
    }

    #[test]
    fn idw_is_exact_at_sites_and_bounded() {
        let pts = [(0.0, 0.0, 1.0), (1.0, 0.0, 3.0)];
        assert_eq!(idw(&pts, 0.0, 0.0), Some(1.0));
        let v = idw(&pts, 0.5, 0.0).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        assert!(idw(&[], 0.0, 0.0).is_none());
    }

    #[test]
    fn empty_bar_chart_has_no_bars() {
        let svg = bar_chart_svg("t", &corr(&[("C3", 0.0), ("C4", 0.0)]), &montage()).unwrap();
        assert!(!svg.contains("class=\"bar\""));
        assert!(well_formed(&svg));
    }

    #[test]
    fn bars_colored_by_region() {
        let svg = bar_chart_svg("t", &corr(&[("C3", 0.8), ("C4", -0.7), ("O1", 0.0)]), &montage()).unwrap();
        assert_eq!(svg.matches("class=\"bar\"").count(), 2);
        assert!(svg.contains("fill=\"red\"><title>C3"));
        assert!(svg.contains("fill=\"blue\"><title>C4"));
        assert!(well_formed(&svg));
    }

    #[test]
    fn masked_topography_shows_only_significant() {
        let m = montage();
        let summary = BandPowerSummary {
            band: HIGH_GAMMA,
            electrodes: ["C3", "C4", "Cz", "FCC5h", "O1"]
                .iter()
                .enumerate()
                .map(|(i, l)| ElectrodeBandPower {
                    label: l.to_string(),
                    move_mean: i as f64 - 2.0,
                    idle_mean: 0.0,
                    p: if i % 2 == 0 { 0.01 } else { 0.3 },
                })
                .collect(),
        };
        let vals = band_topography(&summary, 0.05);
        let shown: Vec<&str> = vals.iter().filter(|v| v.shown).map(|v| v.label.as_str()).collect();
        assert_eq!(shown, ["C3", "Cz", "O1"]);
        let svg = topography_svg("HG <move>", &vals, &m, &["EMG1".into(), "EMG2".into()]).unwrap();
        assert_eq!(svg.matches("class=\"electrode\"").count(), 3);
        assert_eq!(svg.matches("class=\"electrode masked\"").count(), 2);
        assert_eq!(svg.matches("class=\"virtual\"").count(), 2);
        assert!(svg.contains("HG &lt;move&gt;"));
        assert!(well_formed(&svg));
    }

    #[test]
    fn checker_rejects_broken_xml() {
        assert!(well_formed("<a><b/></a>"));
        assert!(!well_formed("<a><b></a>"));
        assert!(!well_formed("<a x=\"1></a>"));
        assert!(!well_formed("<a>x & y</a>"));
    }

    #[test]
    fn hull_of_square() {
        let h = hull(vec![(0.0, 0.0), (1.0, 0.0), (0.5, 0.5), (1.0, 1.0), (0.0, 1.0)]);
        assert_eq!(h.len(), 4);
    }

    #[test]
    fn tables_have_one_row_per_electrode() {
        let m = montage();
        let c = corr(&[("C3", 0.8), ("O1", 0.0)]);
        let csv = fd_correlation_csv(&c, &m).unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.contains("C3,HA,0.8"));
        assert!(fd_correlation_csv(&corr(&[("Xx", 0.1)]), &m).is_err());
    }
}
