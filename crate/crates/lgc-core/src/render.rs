//! Static raster rendering of loss-gradient clouds.
//!
//! Scatter plots put training error on the x-axis (optionally square-root
//! scaled for readability) and gradient norm on the y-axis. Points can be
//! split into one pane per curvature class or colourised by curvature,
//! generalization error, or saturation. Output bytes are deterministic for
//! a fixed cloud, options, and font file.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use plotters::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::Cloud;
use crate::curvature::{CurvatureKind, CurvatureOutcome};
use crate::error::{Error, Result};
use crate::scalar::{to_f64, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorBy {
    Curvature,
    EGen,
    Saturation,
}

impl ColorBy {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "curvature" => Ok(ColorBy::Curvature),
            "egen" | "e_gen" => Ok(ColorBy::EGen),
            "saturation" => Ok(ColorBy::Saturation),
            other => Err(Error::InvalidArgument(format!(
                "unknown coloring {other:?} (expected curvature|egen|saturation)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum XScale {
    Linear,
    Sqrt,
}

impl XScale {
    /// Axis position of a training-error value.
    pub fn position(self, e_train: f64) -> f64 {
        match self {
            XScale::Linear => e_train,
            XScale::Sqrt => e_train.max(0.0).sqrt(),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(XScale::Linear),
            "sqrt" => Ok(XScale::Sqrt),
            other => Err(Error::InvalidArgument(format!(
                "unknown x scale {other:?} (expected linear|sqrt)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderOptions {
    pub panes_by_curvature: bool,
    pub color_by: ColorBy,
    pub x_scale: XScale,
    /// Keep only records with `e_train` below this value.
    pub e_train_filter: Option<f64>,
    pub width: u32,
    pub height: u32,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            panes_by_curvature: false,
            color_by: ColorBy::Curvature,
            x_scale: XScale::Linear,
            e_train_filter: None,
            width: 900,
            height: 600,
        }
    }
}

/// Looks for a usable sans-serif TTF once per process; without one the
/// plots are drawn without any text (points and frame only).
fn fonts_available() -> bool {
    static AVAILABLE: OnceLock<bool> = OnceLock::new();
    *AVAILABLE.get_or_init(|| {
        let mut candidates: Vec<PathBuf> = Vec::new();
        if let Ok(custom) = std::env::var("LGC_FONT") {
            candidates.push(PathBuf::from(custom));
        }
        candidates.push("/usr/share/fonts/truetype/dejavu/DejaVuSans.ttf".into());
        candidates.push("/usr/share/fonts/TTF/DejaVuSans.ttf".into());
        for path in candidates {
            if let Ok(bytes) = std::fs::read(&path) {
                let leaked: &'static [u8] = Box::leak(bytes.into_boxed_slice());
                if plotters::style::register_font("sans-serif", FontStyle::Normal, leaked).is_ok() {
                    return true;
                }
            }
        }
        false
    })
}

fn curvature_color(outcome: &CurvatureOutcome) -> RGBColor {
    match outcome {
        CurvatureOutcome::Classified(c) => match c.kind {
            CurvatureKind::Convex => RGBColor(31, 119, 180),
            CurvatureKind::Concave => RGBColor(214, 39, 40),
            CurvatureKind::Saddle => RGBColor(44, 160, 44),
            CurvatureKind::Singular => RGBColor(255, 127, 14),
        },
        CurvatureOutcome::Skipped => RGBColor(120, 120, 120),
    }
}

/// Blue → red heat map over [0, 1].
fn heat_color(t: f64) -> RGBColor {
    let t = t.clamp(0.0, 1.0);
    RGBColor((40.0 + 200.0 * t) as u8, 60, (220.0 - 180.0 * t) as u8)
}

fn outcome_label(outcome: &CurvatureOutcome) -> &'static str {
    match outcome {
        CurvatureOutcome::Classified(c) => c.kind.name(),
        CurvatureOutcome::Skipped => "skipped",
    }
}

struct PlotPoint {
    x: f64,
    y: f64,
    color: RGBColor,
    pane: &'static str,
}

/// Renders a cloud to one or more PNG files. Without panes the single file
/// is `<base>.png`; with panes each non-empty curvature group gets
/// `<base>_<class>.png`. Returns the paths written.
pub fn render_lgc<T: Real>(
    cloud: &Cloud<T>,
    base: &Path,
    opts: &RenderOptions,
) -> Result<Vec<PathBuf>> {
    if cloud.is_empty() {
        return Err(Error::EmptyInput("render of an empty cloud"));
    }

    let filtered: Vec<_> = cloud
        .records
        .iter()
        .filter(|r| {
            opts.e_train_filter
                .is_none_or(|max| to_f64(r.e_train) < max)
        })
        .collect();
    if filtered.is_empty() {
        return Err(Error::InvalidArgument(
            "e_train filter removed every record".into(),
        ));
    }

    // Normalization bounds for the continuous colorings.
    let color_values: Option<Vec<Option<f64>>> = match opts.color_by {
        ColorBy::Curvature => None,
        ColorBy::EGen => {
            let values: Vec<Option<f64>> = filtered.iter().map(|r| r.e_gen.map(to_f64)).collect();
            if values.iter().all(Option::is_none) {
                return Err(Error::InvalidArgument(
                    "EGen coloring on a cloud without generalization errors".into(),
                ));
            }
            Some(values)
        }
        ColorBy::Saturation => {
            let values: Vec<Option<f64>> = filtered
                .iter()
                .map(|r| r.saturation.map(|s| to_f64(s.value)))
                .collect();
            if values.iter().all(Option::is_none) {
                return Err(Error::InvalidArgument(
                    "saturation coloring on a cloud without saturation readings".into(),
                ));
            }
            Some(values)
        }
    };
    let (color_lo, color_hi) = match &color_values {
        Some(values) => {
            let present: Vec<f64> = values.iter().flatten().copied().collect();
            let lo = present.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = present.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, if hi > lo { hi } else { lo + 1.0 })
        }
        None => (0.0, 1.0),
    };

    let points: Vec<PlotPoint> = filtered
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let color = match (&color_values, opts.color_by) {
                (None, _) => curvature_color(&r.curvature),
                (Some(values), _) => match values[i] {
                    Some(v) => heat_color((v - color_lo) / (color_hi - color_lo)),
                    None => RGBColor(160, 160, 160),
                },
            };
            PlotPoint {
                x: opts.x_scale.position(to_f64(r.e_train)),
                y: to_f64(r.grad_norm),
                color,
                pane: outcome_label(&r.curvature),
            }
        })
        .collect();

    let mut written = Vec::new();
    if opts.panes_by_curvature {
        let mut labels: Vec<&'static str> = points.iter().map(|p| p.pane).collect();
        labels.sort_unstable();
        labels.dedup();
        for label in labels {
            let pane: Vec<&PlotPoint> = points.iter().filter(|p| p.pane == label).collect();
            let file = pane_path(base, label);
            draw_scatter(&pane, &file, opts, label)?;
            written.push(file);
        }
    } else {
        let all: Vec<&PlotPoint> = points.iter().collect();
        let file = base.with_extension("png");
        draw_scatter(&all, &file, opts, "all")?;
        written.push(file);
    }
    Ok(written)
}

fn pane_path(base: &Path, label: &str) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("cloud");
    base.with_file_name(format!("{stem}_{label}.png"))
}

fn draw_scatter(
    points: &[&PlotPoint],
    file: &Path,
    opts: &RenderOptions,
    title: &str,
) -> Result<()> {
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for p in points {
        x_lo = x_lo.min(p.x);
        x_hi = x_hi.max(p.x);
        y_lo = y_lo.min(p.y);
        y_hi = y_hi.max(p.y);
    }
    if x_hi <= x_lo {
        x_hi = x_lo + 1.0;
    }
    if y_hi <= y_lo {
        y_hi = y_lo + 1.0;
    }
    let x_pad = 0.03 * (x_hi - x_lo);
    let y_pad = 0.03 * (y_hi - y_lo);
    let x_range = (x_lo - x_pad)..(x_hi + x_pad);
    let y_range = (y_lo - y_pad)..(y_hi + y_pad);

    let with_text = fonts_available();
    let map_err = |e: String| Error::Render(format!("{}: {e}", file.display()));

    let root = BitMapBackend::new(file, (opts.width, opts.height)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| map_err(e.to_string()))?;

    let mut builder = ChartBuilder::on(&root);
    builder.margin(12);
    if with_text {
        let x_name = match opts.x_scale {
            XScale::Linear => "E_t",
            XScale::Sqrt => "sqrt(E_t)",
        };
        builder
            .caption(title, ("sans-serif", 22))
            .x_label_area_size(42)
            .y_label_area_size(60);
        let mut chart = builder
            .build_cartesian_2d(x_range, y_range)
            .map_err(|e| map_err(e.to_string()))?;
        chart
            .configure_mesh()
            .x_desc(x_name)
            .y_desc("|G_t|")
            .draw()
            .map_err(|e| map_err(e.to_string()))?;
        chart
            .draw_series(
                points
                    .iter()
                    .map(|p| Circle::new((p.x, p.y), 2, p.color.filled())),
            )
            .map_err(|e| map_err(e.to_string()))?;
    } else {
        let mut chart = builder
            .build_cartesian_2d(x_range, y_range)
            .map_err(|e| map_err(e.to_string()))?;
        chart
            .draw_series(
                points
                    .iter()
                    .map(|p| Circle::new((p.x, p.y), 2, p.color.filled())),
            )
            .map_err(|e| map_err(e.to_string()))?;
    }
    root.present().map_err(|e| map_err(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::StepRecord;
    use crate::curvature::{CurvatureClass, CurvatureOutcome};

    fn record(e: f64, g: f64, kind: Option<CurvatureKind>) -> StepRecord<f64> {
        StepRecord {
            walk_id: 0,
            step: 0,
            e_train: e,
            e_gen: None,
            grad_norm: g,
            curvature: match kind {
                Some(kind) => CurvatureOutcome::Classified(CurvatureClass {
                    kind,
                    n_pos: 1,
                    n_neg: 0,
                    n_zero: 0,
                }),
                None => CurvatureOutcome::Skipped,
            },
            saturation: None,
            kink_adjacent: false,
        }
    }

    #[test]
    fn sqrt_scale_maps_four_to_two() {
        assert_eq!(XScale::Sqrt.position(4.0), 2.0);
        assert_eq!(XScale::Linear.position(4.0), 4.0);
    }

    #[test]
    fn egen_coloring_without_egen_is_an_error() {
        let cloud = Cloud {
            records: vec![record(0.5, 1.0, None)],
        };
        let opts = RenderOptions {
            color_by: ColorBy::EGen,
            ..Default::default()
        };
        let dir = std::env::temp_dir().join(format!("lgc-render-err-{}", std::process::id()));
        assert!(render_lgc(&cloud, &dir, &opts).is_err());
    }

    #[test]
    fn panes_emit_one_file_per_present_class() {
        let cloud = Cloud {
            records: vec![
                record(0.5, 1.0, Some(CurvatureKind::Convex)),
                record(0.4, 0.9, Some(CurvatureKind::Convex)),
            ],
        };
        let dir = std::env::temp_dir();
        let base = dir.join(format!("lgc-panes-{}", std::process::id()));
        let opts = RenderOptions {
            panes_by_curvature: true,
            ..Default::default()
        };
        let files = render_lgc(&cloud, &base, &opts).unwrap();
        assert_eq!(files.len(), 1);
        assert!(files[0].to_string_lossy().ends_with("_convex.png"));
        for f in files {
            std::fs::remove_file(f).ok();
        }
    }

    #[test]
    fn render_bytes_are_deterministic() {
        let cloud = Cloud {
            records: vec![
                record(0.5, 1.0, Some(CurvatureKind::Saddle)),
                record(0.1, 2.0, None),
            ],
        };
        let dir = std::env::temp_dir();
        let a = dir.join(format!("lgc-det-a-{}", std::process::id()));
        let b = dir.join(format!("lgc-det-b-{}", std::process::id()));
        let opts = RenderOptions::default();
        let fa = render_lgc(&cloud, &a, &opts).unwrap();
        let fb = render_lgc(&cloud, &b, &opts).unwrap();
        let bytes_a = std::fs::read(&fa[0]).unwrap();
        let bytes_b = std::fs::read(&fb[0]).unwrap();
        assert_eq!(bytes_a, bytes_b);
        std::fs::remove_file(&fa[0]).ok();
        std::fs::remove_file(&fb[0]).ok();
    }

    #[test]
    fn empty_cloud_is_rejected() {
        let cloud: Cloud<f64> = Cloud::default();
        let base = std::env::temp_dir().join("lgc-empty-render");
        assert!(render_lgc(&cloud, &base, &RenderOptions::default()).is_err());
    }
}
