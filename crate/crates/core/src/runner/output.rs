//! CSV and SVG artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::gradient::GradientTableRow;

use super::diagnostics::DiagnosticsRecord;
use super::RunRecord;

pub const RESULTS_HEADER: [&str; 9] = [
    "t",
    "policy",
    "seed",
    "arm",
    "reward",
    "inst_regret",
    "cum_regret",
    "rel_regret",
    "cos_dist",
];

fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_results(records: &[RunRecord], out: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(RESULTS_HEADER).map_err(csv_io)?;
    for r in records {
        w.write_record([
            r.t.to_string(),
            r.policy.clone(),
            r.seed.to_string(),
            r.arm.to_string(),
            r.reward.to_string(),
            r.inst_regret.to_string(),
            r.cum_regret.to_string(),
            opt(r.rel_regret),
            opt(r.cos_dist),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results(input: impl Read) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(input);
    let header = rdr.headers().map_err(|e| Error::data(1, e.to_string()))?;
    if header.iter().ne(RESULTS_HEADER) {
        return Err(Error::data(1, "unexpected results header"));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::data(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |col: &str| Error::data(line, format!("invalid {col} field"));
        let num = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(RESULTS_HEADER[i]));
        let opt_num = |i: usize| {
            if rec[i].is_empty() {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        out.push(RunRecord {
            t: rec[0].parse().map_err(|_| bad("t"))?,
            policy: rec[1].to_string(),
            seed: rec[2].parse().map_err(|_| bad("seed"))?,
            arm: rec[3].parse().map_err(|_| bad("arm"))?,
            reward: num(4)?,
            inst_regret: num(5)?,
            cum_regret: num(6)?,
            rel_regret: opt_num(7)?,
            cos_dist: opt_num(8)?,
        });
    }
    Ok(out)
}

/// Writes `dir/results.csv` and returns its path.
pub fn write_results_file(records: &[RunRecord], dir: &Path) -> Result<PathBuf> {
    if records.is_empty() {
        return Err(Error::config("no records to write"));
    }
    std::fs::create_dir_all(dir)?;
    let path = dir.join("results.csv");
    write_results(records, std::io::BufWriter::new(std::fs::File::create(&path)?))?;
    Ok(path)
}

pub fn write_diagnostics(records: &[DiagnosticsRecord], out: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["t", "policy", "seed", "n1_norm", "n2_norm", "n3_norm"]).map_err(csv_io)?;
    for r in records {
        w.write_record([
            r.t.to_string(),
            r.policy.clone(),
            r.seed.to_string(),
            r.n1.to_string(),
            r.n2.to_string(),
            r.n3.to_string(),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_gradient_table(rows: &[GradientTableRow], out: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["distribution", "l2_norm"]).map_err(csv_io)?;
    for r in rows {
        w.write_record([r.distribution.clone(), r.l2_norm.to_string()]).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

/// Seed-aggregated series of one policy: `(t, mean, min, max)`.
pub type Band = Vec<(usize, f64, f64, f64)>;

/// Aggregates `metric` over seeds for each policy, in first-seen order.
pub fn seed_bands(records: &[RunRecord], metric: impl Fn(&RunRecord) -> Option<f64>) -> Vec<(String, Band)> {
    let mut order: Vec<String> = Vec::new();
    let mut acc: BTreeMap<(usize, usize), (f64, f64, f64, usize)> = BTreeMap::new();
    for r in records {
        let Some(v) = metric(r) else { continue };
        let p = match order.iter().position(|l| *l == r.policy) {
            Some(p) => p,
            None => {
                order.push(r.policy.clone());
                order.len() - 1
            }
        };
        let e = acc.entry((p, r.t)).or_insert((0.0, f64::INFINITY, f64::NEG_INFINITY, 0));
        e.0 += v;
        e.1 = e.1.min(v);
        e.2 = e.2.max(v);
        e.3 += 1;
    }
    order
        .into_iter()
        .enumerate()
        .map(|(p, label)| {
            let band = acc
                .range((p, 0)..=(p, usize::MAX))
                .map(|(&(_, t), &(s, lo, hi, n))| (t, s / n as f64, lo, hi))
                .collect();
            (label, band)
        })
        .collect()
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
const MAX_POINTS: usize = 400;

/// Line chart with one mean line and min/max band per series.
pub fn render_svg(title: &str, series: &[(String, Band)]) -> String {
    let (w, h) = (720.0, 440.0);
    let (left, right, top, bottom) = (80.0, 170.0, 40.0, 50.0);
    let pts = series.iter().flat_map(|(_, b)| b.iter());
    let (mut tmin, mut tmax, mut ymin, mut ymax) = (usize::MAX, 0usize, f64::INFINITY, f64::NEG_INFINITY);
    for &(t, _, lo, hi) in pts {
        tmin = tmin.min(t);
        tmax = tmax.max(t);
        ymin = ymin.min(lo);
        ymax = ymax.max(hi);
    }
    let flat = ymin == ymax;
    let (ylo, yhi) = if flat { (ymin - 1.0, ymax + 1.0) } else { (ymin, ymax) };
    let tspan = (tmax.saturating_sub(tmin)).max(1) as f64;
    let px = |t: usize| left + (t.saturating_sub(tmin)) as f64 / tspan * (w - left - right);
    let py = |y: f64| top + (yhi - y) / (yhi - ylo) * (h - top - bottom);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, w / 2.0, escape(title));
    let (x0, x1, y0, y1) = (left, w - right, top, h - bottom);
    let _ = writeln!(s, r#"<path d="M{x0},{y0} V{y1} H{x1}" stroke="black" fill="none"/>"#);
    let _ = writeln!(s, r#"<text x="{x0}" y="{}" text-anchor="middle">{tmin}</text>"#, y1 + 18.0);
    let _ = writeln!(s, r#"<text x="{x1}" y="{}" text-anchor="middle">{tmax}</text>"#, y1 + 18.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">t</text>"#, (x0 + x1) / 2.0, y1 + 36.0);
    let labels: Vec<f64> = if flat { vec![ymin] } else { vec![ymin, ymax] };
    for v in labels {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{v}</text>"#, x0 - 6.0, py(v) + 4.0);
    }

    for (idx, (label, band)) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let stride = band.len().div_ceil(MAX_POINTS).max(1);
        let mut thin: Vec<_> = band.iter().step_by(stride).copied().collect();
        if let (Some(last), Some(end)) = (thin.last(), band.last()) {
            if last.0 != end.0 {
                thin.push(*end);
            }
        }
        let upper: Vec<String> = thin.iter().map(|&(t, _, _, hi)| format!("{:.2},{:.2}", px(t), py(hi))).collect();
        let lower: Vec<String> = thin.iter().rev().map(|&(t, _, lo, _)| format!("{:.2},{:.2}", px(t), py(lo))).collect();
        let _ = writeln!(s, r#"<polygon points="{} {}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#, upper.join(" "), lower.join(" "));
        let mean: Vec<String> = thin.iter().map(|&(t, m, _, _)| format!("{:.2},{:.2}", px(t), py(m))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, mean.join(" "));
        let ly = top + 16.0 * idx as f64 + 8.0;
        let _ = writeln!(s, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, x1 + 10.0, x1 + 30.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, x1 + 36.0, ly + 4.0, escape(label));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes `cum_regret.svg`, `rel_regret.svg` and `cos_dist.svg` for the
/// metrics that have data.
pub fn write_charts(records: &[RunRecord], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let metrics: [(&str, &str, fn(&RunRecord) -> Option<f64>); 3] = [
        ("cum_regret", "cumulative regret", |r| Some(r.cum_regret)),
        ("rel_regret", "cumulative relative regret", |r| r.rel_regret),
        ("cos_dist", "cosine distance to θ*", |r| r.cos_dist),
    ];
    let mut written = Vec::new();
    for (name, title, f) in metrics {
        let bands = seed_bands(records, f);
        if bands.iter().all(|(_, b)| b.is_empty()) {
            continue;
        }
        let path = dir.join(format!("{name}.svg"));
        std::fs::write(&path, render_svg(title, &bands))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: usize, policy: &str, seed: u64, v: f64) -> RunRecord {
        RunRecord {
            t,
            policy: policy.into(),
            seed,
            arm: t % 3,
            reward: 0.1 * v - 1.0 / 3.0,
            inst_regret: v,
            cum_regret: v * t as f64,
            rel_regret: if t % 2 == 0 { Some(v.sqrt()) } else { None },
            cos_dist: Some(1e-17 * v),
        }
    }

    #[test]
    fn single_record_is_two_lines() {
        let mut buf = Vec::new();
        write_results(&[rec(1, "nlinrel", 0, 0.5)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "t,policy,seed,arm,reward,inst_regret,cum_regret,rel_regret,cos_dist");
        assert_eq!(lines[1], "1,nlinrel,0,1,-0.2833333333333333,0.5,0.5,,0.000000000000000005");
    }

    #[test]
    fn round_trip_is_lossless() {
        let records: Vec<RunRecord> = (1..50)
            .map(|t| rec(t, if t < 25 { "a" } else { "b" }, t as u64 * 7, (t as f64).ln() / 3.0))
            .collect();
        let mut buf = Vec::new();
        write_results(&records, &mut buf).unwrap();
        assert_eq!(read_results(buf.as_slice()).unwrap(), records);
    }

    #[test]
    fn bands_average_over_seeds() {
        let recs = vec![rec(1, "p", 0, 1.0), rec(1, "p", 1, 3.0), rec(2, "p", 0, 2.0), rec(1, "q", 0, 5.0)];
        let b = seed_bands(&recs, |r| Some(r.inst_regret));
        assert_eq!(b[0].0, "p");
        assert_eq!(b[0].1, vec![(1, 2.0, 1.0, 3.0), (2, 2.0, 2.0, 2.0)]);
        assert_eq!(b[1].1, vec![(1, 5.0, 5.0, 5.0)]);
    }

    #[test]
    fn constant_series_is_flat_with_matching_label() {
        let band: Band = (1..=10).map(|t| (t, 0.25, 0.25, 0.25)).collect();
        let svg = render_svg("c", &[("p".into(), band)]);
        assert!(svg.contains(">0.25</text>"));
        let line = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
        let pts = line.split('"').nth(1).unwrap();
        let ys: Vec<&str> = pts.split(' ').map(|p| p.split(',').nth(1).unwrap()).collect();
        assert!(ys.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("occupied");
        std::fs::write(&file, "x").unwrap();
        let err = write_results_file(&[rec(1, "p", 0, 1.0)], &file.join("sub")).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }
}
