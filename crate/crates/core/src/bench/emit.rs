//! File emitters for outcomes, summaries, and profile curves.
//!
//! All outputs are deterministic byte-for-byte for fixed inputs: rows keep
//! their given order, floats print in shortest round-trip form (fixed
//! precision in the SVG), and no timestamps or environment data leak in.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{BenchError, ProfileCurve, RunOutcome, SummaryRow};

/// CSV schema: `seed,n,method,solved,iterations,time_s,final_residual`.
pub fn write_outcomes_csv(path: &Path, outcomes: &[RunOutcome]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["seed", "n", "method", "solved", "iterations", "time_s", "final_residual"])?;
    for o in outcomes {
        w.write_record([
            o.instance_seed.to_string(),
            o.n.to_string(),
            o.method.label().to_string(),
            o.solved.to_string(),
            o.iterations.to_string(),
            format!("{:e}", o.wall_time),
            o.final_residual.map_or(String::new(), |r| format!("{r:e}")),
        ])?;
    }
    w.flush().map_err(BenchError::Io)?;
    Ok(())
}

/// Reads outcomes written by [`write_outcomes_csv`].
pub fn read_outcomes_csv(path: &Path) -> Result<Vec<RunOutcome>, BenchError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut outcomes = Vec::new();
    for record in r.records() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("").to_string();
        let parse_err = |what: &str| {
            BenchError::Csv(csv::Error::from(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("bad {what} in row {record:?}"),
            )))
        };
        outcomes.push(RunOutcome {
            instance_seed: field(0).parse().map_err(|_| parse_err("seed"))?,
            n: field(1).parse().map_err(|_| parse_err("n"))?,
            method: field(2).parse().map_err(|_| parse_err("method"))?,
            solved: field(3).parse().map_err(|_| parse_err("solved"))?,
            iterations: field(4).parse().map_err(|_| parse_err("iterations"))?,
            wall_time: field(5).parse().map_err(|_| parse_err("time_s"))?,
            final_residual: {
                let raw = field(6);
                if raw.is_empty() {
                    None
                } else {
                    Some(raw.parse().map_err(|_| parse_err("final_residual"))?)
                }
            },
        });
    }
    Ok(outcomes)
}

/// JSON mirror of the CSV schema.
pub fn write_outcomes_json(path: &Path, outcomes: &[RunOutcome]) -> Result<(), BenchError> {
    let rows: Vec<serde_json::Value> = outcomes
        .iter()
        .map(|o| {
            serde_json::json!({
                "seed": o.instance_seed,
                "n": o.n,
                "method": o.method.label(),
                "solved": o.solved,
                "iterations": o.iterations,
                "time_s": o.wall_time,
                "final_residual": o.final_residual,
            })
        })
        .collect();
    write_text(path, &serde_json::to_string_pretty(&rows).expect("serializable"))
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["n", "method", "percent_solved", "mean_iterations", "mean_time_s"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.method.label().to_string(),
            format!("{:.1}", r.percent_solved),
            format!("{:.4}", r.mean_iterations),
            format!("{:e}", r.mean_time),
        ])?;
    }
    w.flush().map_err(BenchError::Io)?;
    Ok(())
}

pub fn write_summary_json(path: &Path, rows: &[SummaryRow]) -> Result<(), BenchError> {
    write_text(path, &serde_json::to_string_pretty(rows).expect("serializable"))
}

/// Profile curves as long-form CSV: `method,tau,rho`.
pub fn write_profiles_csv(path: &Path, curves: &[ProfileCurve]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "tau", "rho"])?;
    for curve in curves {
        for &(tau, rho) in &curve.breakpoints {
            w.write_record([curve.method.clone(), format!("{tau:e}"), format!("{rho:e}")])?;
        }
    }
    w.flush().map_err(BenchError::Io)?;
    Ok(())
}

pub fn write_profiles_json(path: &Path, curves: &[ProfileCurve]) -> Result<(), BenchError> {
    write_text(path, &serde_json::to_string_pretty(curves).expect("serializable"))
}

/// Self-contained SVG step plot: τ on [1, τ_max] linear, ρ on [0, 1].
pub fn write_profiles_svg(
    path: &Path,
    curves: &[ProfileCurve],
    title: &str,
) -> Result<(), BenchError> {
    write_text(path, &render_svg(curves, title))
}

const SVG_COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn render_svg(curves: &[ProfileCurve], title: &str) -> String {
    let (width, height) = (640.0, 480.0);
    let (left, right, top, bottom) = (70.0, 20.0, 50.0, 50.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;

    let tau_max = curves
        .iter()
        .flat_map(|c| c.breakpoints.iter().map(|&(t, _)| t))
        .fold(1.0f64, f64::max)
        .max(1.0 + 1e-9)
        * 1.05;
    let x = |tau: f64| left + (tau - 1.0) / (tau_max - 1.0) * plot_w;
    let y = |rho: f64| top + (1.0 - rho) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" \
         text-anchor=\"middle\">{}</text>\n",
        width / 2.0,
        xml_escape(title)
    ));
    // axes
    svg.push_str(&format!(
        "  <line x1=\"{left:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        top + plot_h,
        left + plot_w,
        top + plot_h
    ));
    svg.push_str(&format!(
        "  <line x1=\"{left:.2}\" y1=\"{top:.2}\" x2=\"{left:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        top + plot_h
    ));
    // ticks
    for i in 0..=4 {
        let rho = i as f64 / 4.0;
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"end\">{:.2}</text>\n",
            left - 6.0,
            y(rho) + 4.0,
            rho
        ));
        let tau = 1.0 + (tau_max - 1.0) * rho;
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"middle\">{:.2}</text>\n",
            x(tau),
            top + plot_h + 18.0,
            tau
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" \
         text-anchor=\"middle\">performance ratio</text>\n",
        left + plot_w / 2.0,
        height - 12.0
    ));
    svg.push_str(&format!(
        "  <text x=\"16\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" \
         text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">fraction of problems</text>\n",
        top + plot_h / 2.0,
        top + plot_h / 2.0
    ));

    for (i, curve) in curves.iter().enumerate() {
        let color = SVG_COLORS[i % SVG_COLORS.len()];
        let mut d = String::new();
        d.push_str(&format!("M {:.2} {:.2}", x(1.0), y(curve.rho_at(1.0))));
        for &(tau, r) in &curve.breakpoints {
            if tau > 1.0 {
                d.push_str(&format!(" H {:.2} V {:.2}", x(tau), y(r)));
            }
        }
        d.push_str(&format!(" H {:.2}", x(tau_max)));
        svg.push_str(&format!(
            "  <path d=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n"
        ));
        svg.push_str(&format!(
            "  <rect x=\"{:.2}\" y=\"{:.2}\" width=\"14\" height=\"3\" fill=\"{color}\"/>\n",
            left + 12.0,
            top + 10.0 + 18.0 * i as f64
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            left + 32.0,
            top + 16.0 + 18.0 * i as f64,
            xml_escape(&curve.method)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn write_text(path: &Path, text: &str) -> Result<(), BenchError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}
