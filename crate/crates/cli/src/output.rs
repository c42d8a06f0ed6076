//! Run directories, headed CSV files, SVG plots and run records.

use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Config;

/// A fresh, never reused directory `<out>/<command>/<hash16>-<n>`.
pub struct RunDir {
    pub path: PathBuf,
    pub run_id: String,
    header: String,
}

impl RunDir {
    pub fn create(out: &Path, command: &str, config_hash: &str, seeds: &[u64]) -> io::Result<RunDir> {
        let parent = out.join(command);
        fs::create_dir_all(&parent)?;
        let short = &config_hash[..16];
        for n in 0.. {
            let run_id = format!("{short}-{n}");
            let path = parent.join(&run_id);
            match fs::create_dir(&path) {
                Ok(()) => {
                    let seeds = seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(";");
                    let header = format!("config_hash={config_hash} seeds={seeds}");
                    return Ok(RunDir { path, run_id, header });
                }
                Err(e) if e.kind() == io::ErrorKind::AlreadyExists => continue,
                Err(e) => return Err(e),
            }
        }
        unreachable!()
    }

    pub fn header(&self) -> &str {
        &self.header
    }

    fn create_file(&self, name: &str) -> io::Result<File> {
        OpenOptions::new().write(true).create_new(true).open(self.path.join(name))
    }

    /// CSV with a `# config_hash=… seeds=…` line, a header row and LF endings.
    pub fn write_csv(&self, name: &str, columns: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
        let mut f = self.create_file(name)?;
        writeln!(f, "# {}", self.header)?;
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(f);
        w.write_record(columns)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// JSON object whose first field is the run header.
    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> io::Result<()> {
        #[derive(Serialize)]
        struct Headed<'a, T> {
            header: &'a str,
            #[serde(flatten)]
            body: &'a T,
        }
        let f = self.create_file(name)?;
        serde_json::to_writer_pretty(f, &Headed { header: &self.header, body: value }).map_err(io::Error::other)
    }

    pub fn write_svg(&self, name: &str, plot: &Plot) -> io::Result<()> {
        let mut f = self.create_file(name)?;
        f.write_all(plot.render(&self.header).as_bytes())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), pass, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub experiment: String,
    pub run_id: String,
    pub config_hash: String,
    pub config: Config,
    pub metrics: Vec<(String, f64)>,
    pub checks: Vec<Check>,
    pub wall_time_s: f64,
}

impl RunRecord {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub line: bool,
}

/// Minimal scatter/line plot.
#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x: false,
            log_y: false,
            series: vec![],
        }
    }

    pub fn log(mut self, x: bool, y: bool) -> Self {
        self.log_x = x;
        self.log_y = y;
        self
    }

    pub fn scatter(mut self, label: &str, points: Vec<(f64, f64)>) -> Self {
        self.series.push(Series { label: label.into(), points, line: false });
        self
    }

    pub fn line(mut self, label: &str, points: Vec<(f64, f64)>) -> Self {
        self.series.push(Series { label: label.into(), points, line: true });
        self
    }

    pub fn render(&self, header: &str) -> String {
        let (w, h, m) = (640.0, 480.0, 60.0);
        let tx = |v: f64| if self.log_x { v.log10() } else { v };
        let ty = |v: f64| if self.log_y { v.log10() } else { v };
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|&(x, y)| (tx(x), ty(y))))
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .collect();
        let (mut x0, mut x1, mut y0, mut y1) = pts.iter().fold((f64::MAX, f64::MIN, f64::MAX, f64::MIN), |a, p| {
            (a.0.min(p.0), a.1.max(p.0), a.2.min(p.1), a.3.max(p.1))
        });
        if pts.is_empty() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        if y1 <= y0 {
            y1 = y0 + 1.0;
        }
        let sx = |v: f64| m + (v - x0) / (x1 - x0) * (w - 2.0 * m);
        let sy = |v: f64| h - m - (v - y0) / (y1 - y0) * (h - 2.0 * m);
        let mut s = String::new();
        let _ = writeln!(s, "<!-- {header} -->");
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
            w / 2.0,
            esc(&self.title)
        );
        let _ = writeln!(s, r#"<path d="M{m} {m} V{} H{}" fill="none" stroke="black"/>"#, h - m, w - m);
        let lx = if self.log_x { format!("log10 {}", self.x_label) } else { self.x_label.clone() };
        let ly = if self.log_y { format!("log10 {}", self.y_label) } else { self.y_label.clone() };
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, w / 2.0, h - 15.0, esc(&lx));
        let _ = writeln!(
            s,
            r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
            h / 2.0,
            h / 2.0,
            esc(&ly)
        );
        for (v, anchor, x, y) in [(x0, "start", sx(x0), h - m + 15.0), (x1, "end", sx(x1), h - m + 15.0)] {
            let _ = writeln!(s, r#"<text x="{x}" y="{y}" text-anchor="{anchor}">{}</text>"#, tick(v));
        }
        for (v, y) in [(y0, sy(y0)), (y1, sy(y1))] {
            let _ = writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end">{}</text>"#, m - 5.0, tick(v));
        }
        for (i, ser) in self.series.iter().enumerate() {
            let c = COLORS[i % COLORS.len()];
            let p: Vec<(f64, f64)> = ser
                .points
                .iter()
                .map(|&(x, y)| (tx(x), ty(y)))
                .filter(|p| p.0.is_finite() && p.1.is_finite())
                .map(|(x, y)| (sx(x), sy(y)))
                .collect();
            if ser.line {
                let d: Vec<String> = p.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{c}"/>"#, d.join(" "));
            } else {
                for (x, y) in p {
                    let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="1.5" fill="{c}"/>"#);
                }
            }
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" fill="{c}">{}</text>"#,
                w - m - 150.0,
                m + 15.0 * i as f64,
                esc(&ser.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    format!("{v:.3}")
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
