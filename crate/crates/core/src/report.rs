//! Comparison artifacts: CSV table, markdown summary grids, SVG charts, and
//! per-run confusion matrices. Output is byte-deterministic for a given set of
//! reports regardless of their input order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::metrics::{ConfusionMatrix, EvalReport};

pub const COMPARISON_HEADER: [&str; 12] = [
    "algorithm",
    "device",
    "test_fraction",
    "seed",
    "tp",
    "fp",
    "fn",
    "tn",
    "precision",
    "recall",
    "f1",
    "train_seconds",
];

/// Preferred column/legend order; anything else sorts after, alphabetically.
const ALGORITHM_ORDER: [&str; 3] = ["ddqn", "dqn", "ann"];

fn algo_rank(name: &str) -> (usize, String) {
    let rank = ALGORITHM_ORDER.iter().position(|a| *a == name).unwrap_or(ALGORITHM_ORDER.len());
    (rank, name.to_string())
}

fn fraction_key(f: f64) -> i64 {
    (f * 10_000.0).round() as i64
}

fn percent(f: f64) -> String {
    let p = f * 100.0;
    if (p - p.round()).abs() < 1e-9 {
        format!("{}%", p.round() as i64)
    } else {
        format!("{p:.1}%")
    }
}

fn sort_key(r: &EvalReport) -> (String, (usize, String), i64, u64) {
    (r.device.clone(), algo_rank(&r.algorithm), fraction_key(r.test_fraction), r.seed)
}

pub fn sorted(reports: &[EvalReport]) -> Vec<EvalReport> {
    let mut out = reports.to_vec();
    out.sort_by(|a, b| sort_key(a).cmp(&sort_key(b)));
    out
}

/// Seed-aggregated statistics for one (device, algorithm, test fraction) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub device: String,
    pub algorithm: String,
    pub test_fraction: f64,
    pub runs: usize,
    pub mean_f1: f64,
    /// Sample standard deviation (0 for a single run).
    pub sd_f1: f64,
    pub min_f1: f64,
    pub max_f1: f64,
    pub mean_seconds: f64,
}

pub fn aggregate(reports: &[EvalReport]) -> Vec<CellSummary> {
    let mut groups: BTreeMap<(String, (usize, String), i64), Vec<&EvalReport>> = BTreeMap::new();
    for r in reports {
        groups
            .entry((r.device.clone(), algo_rank(&r.algorithm), fraction_key(r.test_fraction)))
            .or_default()
            .push(r);
    }
    groups
        .into_values()
        .map(|runs| {
            let n = runs.len() as f64;
            let mean = runs.iter().map(|r| r.f1).sum::<f64>() / n;
            let var = if runs.len() > 1 {
                runs.iter().map(|r| (r.f1 - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            CellSummary {
                device: runs[0].device.clone(),
                algorithm: runs[0].algorithm.clone(),
                test_fraction: runs[0].test_fraction,
                runs: runs.len(),
                mean_f1: mean,
                sd_f1: var.sqrt(),
                min_f1: runs.iter().map(|r| r.f1).fold(f64::INFINITY, f64::min),
                max_f1: runs.iter().map(|r| r.f1).fold(f64::NEG_INFINITY, f64::max),
                mean_seconds: runs.iter().map(|r| r.train_seconds).sum::<f64>() / n,
            }
        })
        .collect()
}

pub fn comparison_csv(reports: &[EvalReport]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COMPARISON_HEADER)?;
    for r in sorted(reports) {
        let c = r.confusion;
        w.write_record([
            r.algorithm.clone(),
            r.device.clone(),
            r.test_fraction.to_string(),
            r.seed.to_string(),
            c.tp.to_string(),
            c.fp.to_string(),
            c.fn_.to_string(),
            c.tn.to_string(),
            format!("{:.6}", r.precision),
            format!("{:.6}", r.recall),
            format!("{:.6}", r.f1),
            format!("{:.3}", r.train_seconds),
        ])?;
    }
    w.into_inner().map_err(|e| Error::io("<memory>", e.into_error()))
}

/// Parses a `comparison.csv` back into reports (metrics recomputed from counts).
pub fn read_comparison_csv<R: std::io::Read>(reader: R) -> Result<Vec<EvalReport>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != COMPARISON_HEADER {
        return Err(Error::Schema(format!(
            "comparison header must be `{}`",
            COMPARISON_HEADER.join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let num = |c: usize| -> Result<f64> {
            rec[c].parse().map_err(|_| Error::Parse {
                row,
                message: format!("`{}` value `{}` is not numeric", COMPARISON_HEADER[c], &rec[c]),
            })
        };
        let count = |c: usize| -> Result<u64> {
            rec[c].parse().map_err(|_| Error::Parse {
                row,
                message: format!("`{}` value `{}` is not a count", COMPARISON_HEADER[c], &rec[c]),
            })
        };
        let cm = ConfusionMatrix {
            tp: count(4)?,
            fp: count(5)?,
            fn_: count(6)?,
            tn: count(7)?,
        };
        out.push(EvalReport::new(&rec[0], &rec[1], num(2)?, count(3)?, cm, num(11)?));
    }
    Ok(out)
}

fn grid<F: Fn(&CellSummary) -> String>(cells: &[CellSummary], device: &str, cell: F) -> String {
    let of_device: Vec<&CellSummary> = cells.iter().filter(|c| c.device == device).collect();
    let mut fractions: Vec<i64> = of_device.iter().map(|c| fraction_key(c.test_fraction)).collect();
    fractions.sort_unstable();
    fractions.dedup();
    let mut algos: Vec<(usize, String)> = of_device.iter().map(|c| algo_rank(&c.algorithm)).collect();
    algos.sort();
    algos.dedup();

    let mut s = String::from("| Algorithm |");
    for f in &fractions {
        let _ = write!(s, " Test {} |", percent(*f as f64 / 10_000.0));
    }
    s.push_str("\n|---|");
    for _ in &fractions {
        s.push_str("---|");
    }
    s.push('\n');
    for (_, algo) in &algos {
        let _ = write!(s, "| {} |", algo.to_uppercase());
        for f in &fractions {
            let text = of_device
                .iter()
                .find(|c| &c.algorithm == algo && fraction_key(c.test_fraction) == *f)
                .map(|c| cell(c))
                .unwrap_or_else(|| "n/a".into());
            let _ = write!(s, " {text} |");
        }
        s.push('\n');
    }
    s
}

pub fn summary_markdown(reports: &[EvalReport]) -> String {
    let cells = aggregate(reports);
    let mut devices: Vec<String> = cells.iter().map(|c| c.device.clone()).collect();
    devices.dedup();
    let mut s = String::from("# Algorithm comparison\n\n");
    s.push_str(
        "F1 is binary with FAILURE (label 1) as the positive class. Cells show the mean over seeds \
         ± sample standard deviation, with the run count in parentheses.\n",
    );
    for device in &devices {
        let _ = write!(s, "\n## {device}\n\n### F1\n\n");
        s.push_str(&grid(&cells, device, |c| {
            format!("{:.4} ± {:.4} ({})", c.mean_f1, c.sd_f1, c.runs)
        }));
        s.push_str("\n### Training time (s)\n\n");
        s.push_str(&grid(&cells, device, |c| format!("{:.2}", c.mean_seconds)));
    }
    s
}

const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

fn svg_open(width: u32, height: u32, title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        width / 2,
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn algorithms_in(cells: &[CellSummary]) -> Vec<String> {
    let mut algos: Vec<(usize, String)> = cells.iter().map(|c| algo_rank(&c.algorithm)).collect();
    algos.sort();
    algos.dedup();
    algos.into_iter().map(|(_, a)| a).collect()
}

/// Grouped bars of mean F1: one group per (device, test fraction), one bar per algorithm.
pub fn f1_bars_svg(reports: &[EvalReport]) -> String {
    let cells = aggregate(reports);
    let algos = algorithms_in(&cells);
    let mut groups: Vec<(String, i64)> = cells
        .iter()
        .map(|c| (c.device.clone(), fraction_key(c.test_fraction)))
        .collect();
    groups.sort();
    groups.dedup();

    let bar = 16.0;
    let group_w = bar * algos.len().max(1) as f64 + 24.0;
    let (left, top, plot_h) = (50.0, 40.0, 240.0);
    let width = (left + group_w * groups.len() as f64 + 20.0).max(360.0);
    let height = top + plot_h + 70.0 + 16.0 * algos.len() as f64;
    let mut s = svg_open(width as u32, height as u32, "Mean F1 by algorithm and test fraction");
    let base = top + plot_h;
    for tick in 0..=5 {
        let v = tick as f64 / 5.0;
        let y = base - v * plot_h;
        let _ = writeln!(
            s,
            "<line x1=\"{left:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{v:.1}</text>",
            width - 10.0,
            left - 4.0,
            y + 4.0
        );
    }
    for (g, (device, frac)) in groups.iter().enumerate() {
        let x0 = left + g as f64 * group_w + 12.0;
        for (a, algo) in algos.iter().enumerate() {
            let Some(c) = cells
                .iter()
                .find(|c| &c.device == device && fraction_key(c.test_fraction) == *frac && &c.algorithm == algo)
            else {
                continue;
            };
            let h = c.mean_f1.clamp(0.0, 1.0) * plot_h;
            let _ = writeln!(
                s,
                "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{h:.1}\" fill=\"{}\"><title>{} {} {}: {:.4}</title></rect>",
                x0 + a as f64 * bar,
                base - h,
                bar - 2.0,
                PALETTE[a % PALETTE.len()],
                escape(device),
                escape(algo),
                percent(*frac as f64 / 10_000.0),
                c.mean_f1
            );
        }
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            x0 + bar * algos.len() as f64 / 2.0,
            base + 14.0,
            percent(*frac as f64 / 10_000.0),
            x0 + bar * algos.len() as f64 / 2.0,
            base + 28.0,
            escape(device)
        );
    }
    for (a, algo) in algos.iter().enumerate() {
        let y = base + 48.0 + 16.0 * a as f64;
        let _ = writeln!(
            s,
            "<rect x=\"{left:.1}\" y=\"{:.1}\" width=\"10\" height=\"10\" fill=\"{}\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            y - 9.0,
            PALETTE[a % PALETTE.len()],
            left + 14.0,
            y,
            escape(&algo.to_uppercase())
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Scatter of mean training time against mean F1, one point per cell.
pub fn time_vs_f1_svg(reports: &[EvalReport]) -> String {
    let cells = aggregate(reports);
    let algos = algorithms_in(&cells);
    let (left, top, plot_w, plot_h) = (60.0, 40.0, 420.0, 260.0);
    let max_t = cells.iter().map(|c| c.mean_seconds).fold(0.0, f64::max).max(1e-9);
    let width = left + plot_w + 140.0;
    let height = top + plot_h + 50.0;
    let mut s = svg_open(width as u32, height as u32, "Training time vs. mean F1");
    let base = top + plot_h;
    let _ = writeln!(
        s,
        "<line x1=\"{left}\" y1=\"{base}\" x2=\"{:.1}\" y2=\"{base}\" stroke=\"black\"/>\
         <line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{base}\" stroke=\"black\"/>\
         <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">training seconds (max {max_t:.2})</text>\
         <text x=\"14\" y=\"{:.1}\" transform=\"rotate(-90 14 {:.1})\" text-anchor=\"middle\">F1</text>",
        left + plot_w,
        left + plot_w / 2.0,
        base + 34.0,
        top + plot_h / 2.0,
        top + plot_h / 2.0
    );
    for tick in 0..=5 {
        let v = tick as f64 / 5.0;
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{v:.1}</text>",
            left - 4.0,
            base - v * plot_h + 4.0
        );
    }
    for c in &cells {
        let a = algos.iter().position(|x| x == &c.algorithm).unwrap_or(0);
        let x = left + c.mean_seconds / max_t * plot_w;
        let y = base - c.mean_f1.clamp(0.0, 1.0) * plot_h;
        let _ = writeln!(
            s,
            "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"5\" fill=\"{}\"><title>{} {} {}: F1 {:.4}, {:.2}s</title></circle>",
            PALETTE[a % PALETTE.len()],
            escape(&c.device),
            escape(&c.algorithm),
            percent(c.test_fraction),
            c.mean_f1,
            c.mean_seconds
        );
    }
    for (a, algo) in algos.iter().enumerate() {
        let y = top + 10.0 + 16.0 * a as f64;
        let _ = writeln!(
            s,
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"5\" fill=\"{}\"/><text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            left + plot_w + 20.0,
            y - 4.0,
            PALETTE[a % PALETTE.len()],
            left + plot_w + 30.0,
            y,
            escape(&algo.to_uppercase())
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn confusion_csv(cm: &ConfusionMatrix) -> String {
    format!(
        "actual,pred_normal,pred_failure\nnormal,{},{}\nfailure,{},{}\n",
        cm.tn, cm.fp, cm.fn_, cm.tp
    )
}

fn confusion_file_name(r: &EvalReport) -> String {
    let clean = |s: &str| -> String {
        s.chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
            .collect()
    };
    format!(
        "{}_{}_test{}_seed{}.csv",
        clean(&r.device),
        clean(&r.algorithm),
        fraction_key(r.test_fraction) / 100,
        r.seed
    )
}

/// Paths written by [`emit_report`].
#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub comparison_csv: PathBuf,
    pub summary_md: PathBuf,
    pub f1_bars_svg: PathBuf,
    pub time_vs_f1_svg: PathBuf,
    pub confusion: Vec<PathBuf>,
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn emit_report(reports: &[EvalReport], out_dir: &Path) -> Result<ReportFiles> {
    if reports.is_empty() {
        return Err(Error::invalid("no reports to emit"));
    }
    let confusion_dir = out_dir.join("confusion");
    std::fs::create_dir_all(&confusion_dir).map_err(|e| Error::io(&confusion_dir, e))?;
    let files = ReportFiles {
        comparison_csv: out_dir.join("comparison.csv"),
        summary_md: out_dir.join("summary.md"),
        f1_bars_svg: out_dir.join("f1_bars.svg"),
        time_vs_f1_svg: out_dir.join("time_vs_f1.svg"),
        confusion: sorted(reports)
            .iter()
            .map(|r| confusion_dir.join(confusion_file_name(r)))
            .collect(),
    };
    write(&files.comparison_csv, &comparison_csv(reports)?)?;
    write(&files.summary_md, summary_markdown(reports).as_bytes())?;
    write(&files.f1_bars_svg, f1_bars_svg(reports).as_bytes())?;
    write(&files.time_vs_f1_svg, time_vs_f1_svg(reports).as_bytes())?;
    for (r, path) in sorted(reports).iter().zip(&files.confusion) {
        write(path, confusion_csv(&r.confusion).as_bytes())?;
    }
    Ok(files)
}
