//! Self-contained SVG figures from a trajectory CSV.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::io::TrajectoryTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// `‖eᵢ(t)‖` per agent on a log axis, with the 0.05 m guide line.
    ErrorNorms,
    /// x–y and x–z projections of the agent and target paths.
    Traj3dProjection,
    /// `V(t)` and `P(t)` on a log axis.
    Lyapunov,
}

impl PlotKind {
    pub fn name(self) -> &'static str {
        match self {
            PlotKind::ErrorNorms => "error_norms",
            PlotKind::Traj3dProjection => "traj3d_projection",
            PlotKind::Lyapunov => "lyapunov",
        }
    }
}

impl FromStr for PlotKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "error_norms" => Ok(PlotKind::ErrorNorms),
            "traj3d_projection" => Ok(PlotKind::Traj3dProjection),
            "lyapunov" => Ok(PlotKind::Lyapunov),
            other => Err(format!(
                "unknown plot kind '{other}' (expected error_norms, traj3d_projection or lyapunov)"
            )),
        }
    }
}

pub const GUIDE_LINE: f64 = 0.05;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

const PANEL_W: f64 = 640.0;
const PANEL_H: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 50.0;
const MAX_POINTS: usize = 2000;

#[derive(Debug, Clone, Copy)]
struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn of<'a>(values: impl IntoIterator<Item = &'a f64>) -> Option<Self> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in values {
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() {
            return None;
        }
        if hi - lo < 1e-12 * lo.abs().max(1.0) {
            let pad = 0.5 * lo.abs().max(1.0);
            return Some(Self { lo: lo - pad, hi: hi + pad });
        }
        Some(Self { lo, hi })
    }

    fn union(self, other: Self) -> Self {
        Self { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }
}

struct Series {
    label: String,
    color: &'static str,
    dashed: bool,
    points: Vec<(f64, f64)>,
}

struct Panel {
    title: String,
    x_label: String,
    y_label: String,
    log_y: bool,
    series: Vec<Series>,
    guide: Option<f64>,
}

fn nice_ticks(r: Range, count: usize) -> Vec<f64> {
    let span = r.hi - r.lo;
    let raw = span / count as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= count as f64)
        .unwrap_or(10.0 * mag);
    let first = (r.lo / step).ceil() as i64;
    let last = (r.hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Panel {
    fn render(&self, out: &mut String, ox: f64, oy: f64) -> Result<()> {
        let transform = |y: f64| if self.log_y { y.log10() } else { y };
        let pts: Vec<Vec<(f64, f64)>> = self
            .series
            .iter()
            .map(|s| {
                s.points
                    .iter()
                    .filter(|p| p.0.is_finite() && p.1.is_finite() && (!self.log_y || p.1 > 0.0))
                    .map(|&(x, y)| (x, transform(y)))
                    .collect()
            })
            .collect();
        let xr = pts
            .iter()
            .filter_map(|p| Range::of(p.iter().map(|q| &q.0)))
            .reduce(Range::union)
            .ok_or_else(|| Error::validation(format!("{}: nothing to plot", self.title)))?;
        let mut yr = pts
            .iter()
            .filter_map(|p| Range::of(p.iter().map(|q| &q.1)))
            .reduce(Range::union)
            .ok_or_else(|| Error::validation(format!("{}: nothing to plot", self.title)))?;
        if let Some(g) = self.guide {
            let gy = transform(g);
            yr = yr.union(Range { lo: gy, hi: gy });
        }
        let (x0, x1) = (ox + MARGIN_L, ox + PANEL_W - MARGIN_R);
        let (y0, y1) = (oy + PANEL_H - MARGIN_B, oy + MARGIN_T);
        let sx = |x: f64| x0 + (x - xr.lo) / (xr.hi - xr.lo) * (x1 - x0);
        let sy = |y: f64| y0 + (y - yr.lo) / (yr.hi - yr.lo) * (y1 - y0);

        let _ = writeln!(
            out,
            r##"<rect x="{x0:.1}" y="{y1:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#333"/>"##,
            x1 - x0,
            y0 - y1
        );
        for tx in nice_ticks(xr, 6) {
            let px = sx(tx);
            let _ = writeln!(
                out,
                r##"<line x1="{px:.1}" y1="{y0:.1}" x2="{px:.1}" y2="{:.1}" stroke="#333"/><text x="{px:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"##,
                y0 + 5.0,
                y0 + 18.0,
                fmt_tick(tx)
            );
        }
        let y_ticks = if self.log_y {
            (yr.lo.ceil() as i64..=yr.hi.floor() as i64).map(|k| k as f64).collect()
        } else {
            nice_ticks(yr, 6)
        };
        for ty in y_ticks {
            let py = sy(ty);
            let label = if self.log_y { format!("1e{ty}") } else { fmt_tick(ty) };
            let _ = writeln!(
                out,
                r##"<line x1="{:.1}" y1="{py:.1}" x2="{x0:.1}" y2="{py:.1}" stroke="#333"/><line x1="{x0:.1}" y1="{py:.1}" x2="{x1:.1}" y2="{py:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{label}</text>"##,
                x0 - 5.0,
                x0 - 8.0,
                py + 4.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="14" text-anchor="middle">{}</text>"#,
            0.5 * (x0 + x1),
            oy + 22.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#,
            0.5 * (x0 + x1),
            y0 + 38.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
            ox + 16.0,
            0.5 * (y0 + y1),
            ox + 16.0,
            0.5 * (y0 + y1),
            escape(&self.y_label)
        );
        if let Some(g) = self.guide {
            let py = sy(transform(g));
            let _ = writeln!(
                out,
                r##"<line class="guide" x1="{x0:.1}" y1="{py:.1}" x2="{x1:.1}" y2="{py:.1}" stroke="#000" stroke-dasharray="6 4"/>"##
            );
        }
        for (s, p) in self.series.iter().zip(&pts) {
            let stride = (p.len() / MAX_POINTS).max(1);
            let mut path = String::new();
            for (k, &(x, y)) in p.iter().enumerate() {
                if k % stride == 0 || k + 1 == p.len() {
                    let _ = write!(path, "{:.2},{:.2} ", sx(x), sy(y));
                }
            }
            let dash = if s.dashed { r#" stroke-dasharray="4 3""# } else { "" };
            let _ = writeln!(
                out,
                r#"<polyline class="series" fill="none" stroke="{}" stroke-width="1.3"{dash} points="{}"><title>{}</title></polyline>"#,
                s.color,
                path.trim_end(),
                escape(&s.label)
            );
        }
        for (k, s) in self.series.iter().enumerate() {
            let ly = y1 + 14.0 + 14.0 * k as f64;
            let _ = writeln!(
                out,
                r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="2"/><text x="{:.1}" y="{:.1}" font-size="11">{}</text>"#,
                x1 - 90.0,
                x1 - 70.0,
                s.color,
                x1 - 65.0,
                ly + 4.0,
                escape(&s.label)
            );
        }
        Ok(())
    }
}

fn document(panels: &[Panel]) -> Result<String> {
    let width = PANEL_W * panels.len() as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{PANEL_H:.0}" viewBox="0 0 {width:.0} {PANEL_H:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (k, p) in panels.iter().enumerate() {
        p.render(&mut out, PANEL_W * k as f64, 0.0)?;
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn color(k: usize) -> &'static str {
    PALETTE[k % PALETTE.len()]
}

/// Renders `kind` from a parsed trajectory table.
pub fn render(table: &TrajectoryTable, kind: PlotKind) -> Result<String> {
    if table.rows.is_empty() {
        return Err(Error::validation("no samples"));
    }
    let t = table.times()?;
    let panels = match kind {
        PlotKind::ErrorNorms => {
            let series = (1..=table.agents)
                .map(|i| {
                    Ok(Series {
                        label: format!("agent {i}"),
                        color: color(i - 1),
                        dashed: false,
                        points: t.iter().copied().zip(table.error_norms(i)?).collect(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            vec![Panel {
                title: "Tracking error norms".into(),
                x_label: "t (s)".into(),
                y_label: "‖e_i‖ (m)".into(),
                log_y: true,
                series,
                guide: Some(GUIDE_LINE),
            }]
        }
        PlotKind::Traj3dProjection => {
            if table.dim < 2 {
                return Err(Error::validation("trajectory projections need n ≥ 2"));
            }
            let pairs: &[(usize, usize)] = if table.dim >= 3 { &[(0, 1), (0, 2)] } else { &[(0, 1)] };
            let mut panels = Vec::new();
            for &(a, b) in pairs {
                let (na, nb) = (crate::io::axis_name(a, table.dim), crate::io::axis_name(b, table.dim));
                let mut series = Vec::new();
                for i in 1..=table.agents {
                    let q = table.vectors(&format!("q{i}_"))?;
                    series.push(Series {
                        label: format!("agent {i}"),
                        color: color(i - 1),
                        dashed: false,
                        points: q.iter().map(|v| (v[a], v[b])).collect(),
                    });
                }
                let q0 = table.vectors("q0_")?;
                series.push(Series {
                    label: "target".into(),
                    color: "#000000",
                    dashed: true,
                    points: q0.iter().map(|v| (v[a], v[b])).collect(),
                });
                panels.push(Panel {
                    title: format!("{na}–{nb} projection"),
                    x_label: format!("{na} (m)"),
                    y_label: format!("{nb} (m)"),
                    log_y: false,
                    series,
                    guide: None,
                });
            }
            panels
        }
        PlotKind::Lyapunov => {
            let v = table.column("V")?;
            let p = table.column("P")?;
            if v.iter().chain(&p).all(|x| x.is_nan()) {
                return Err(Error::validation("trajectory CSV has no P/V values"));
            }
            vec![Panel {
                title: "Lyapunov function and P-function".into(),
                x_label: "t (s)".into(),
                y_label: "value".into(),
                log_y: true,
                series: vec![
                    Series {
                        label: "V".into(),
                        color: color(0),
                        dashed: false,
                        points: t.iter().copied().zip(v).collect(),
                    },
                    Series {
                        label: "P".into(),
                        color: color(3),
                        dashed: true,
                        points: t.iter().copied().zip(p).collect(),
                    },
                ],
                guide: None,
            }]
        }
    };
    document(&panels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> TrajectoryTable {
        let mut csv = String::from("t,q0_x,q0_y,q0dot_x,q0dot_y,q1_x,q1_y,q2_x,q2_y,e1_x,e1_y,e2_x,e2_y,P,V\n");
        for k in 0..20 {
            let t = k as f64 * 0.1;
            let e = (-t).exp();
            csv.push_str(&format!("{t},{t},0,1,0,{},{e},{},0,{e},0,{},0,{},{}\n", t - e, t + e, -e, e, 2.0 * e));
        }
        TrajectoryTable::read(csv.as_bytes()).unwrap()
    }

    #[test]
    fn kinds_parse() {
        for k in [PlotKind::ErrorNorms, PlotKind::Traj3dProjection, PlotKind::Lyapunov] {
            assert_eq!(k.name().parse::<PlotKind>().unwrap(), k);
        }
        assert!("bogus".parse::<PlotKind>().is_err());
    }

    #[test]
    fn one_curve_per_agent_and_guide() {
        let svg = render(&table(), PlotKind::ErrorNorms).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches(r#"class="series""#).count(), 2);
        assert_eq!(svg.matches(r#"class="guide""#).count(), 1);
    }

    #[test]
    fn projection_and_lyapunov_render() {
        let svg = render(&table(), PlotKind::Traj3dProjection).unwrap();
        assert_eq!(svg.matches(r#"class="series""#).count(), 3);
        let svg = render(&table(), PlotKind::Lyapunov).unwrap();
        assert_eq!(svg.matches(r#"class="series""#).count(), 2);
    }

    #[test]
    fn empty_table_has_no_samples() {
        let t = TrajectoryTable::read("t,q0_x,e1_x,P,V\n".as_bytes()).unwrap();
        let err = render(&t, PlotKind::ErrorNorms).unwrap_err();
        assert!(err.to_string().contains("no samples"));
    }
}
