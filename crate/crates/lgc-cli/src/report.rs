//! Human-readable and JSON summaries of a finished cell directory.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use lgc_core::cloud::{
    find_attractors, resolve_theta_g, saturation_by_curvature, two_cluster_diagnostic,
    AttractorSummary, CloudMetadata, SaturationSummary, TwoClusterDiagnostic,
};

use crate::experiment::load_cell;
use crate::CliResult;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvatureFraction {
    pub curvature: String,
    pub fraction: f64,
}

/// Everything `summarize` reports, in machine-readable form. The text
/// rendering below is a pure function of this struct, so reports are
/// deterministic for a given cell directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub problem: String,
    pub activation: String,
    pub regime: String,
    pub init_half_width: f64,
    pub record_count: usize,
    pub walk_count: usize,
    pub n_steps: usize,
    pub preset: Option<String>,
    pub master_seed: u64,
    pub tau_abs: f64,
    pub tau_rel: f64,
    pub theta_e: f64,
    pub resolved_theta_g: f64,
    pub link_radius: f64,
    pub classified_count: usize,
    pub skipped_count: usize,
    pub kink_adjacent_count: usize,
    pub curvature_fractions: Vec<CurvatureFraction>,
    pub attractors: Vec<AttractorSummary>,
    pub saturation: Option<Vec<SaturationSummary>>,
    pub two_cluster: Option<TwoClusterDiagnostic>,
}

/// Builds the report for a cell directory. Thresholds come from the
/// metadata sidecar, so the report always repeats the values the run used.
pub fn summarize(cell_dir: &Path) -> CliResult<Report> {
    let (meta, cloud) = load_cell(cell_dir)?;
    Ok(build_report(&meta, &cloud))
}

pub fn build_report(meta: &CloudMetadata, cloud: &lgc_core::Cloud64) -> Report {
    let classified_count = cloud
        .records
        .iter()
        .filter(|r| r.curvature.class().is_some())
        .count();
    let fractions = cloud
        .curvature_fractions()
        .into_iter()
        .map(|(kind, fraction)| CurvatureFraction {
            curvature: kind.name().into(),
            fraction,
        })
        .collect();
    Report {
        problem: meta.problem.clone(),
        activation: meta.activation.clone(),
        regime: meta.regime.clone(),
        init_half_width: meta.init_half_width,
        record_count: cloud.len(),
        walk_count: meta.walk_count,
        n_steps: meta.n_steps,
        preset: meta.preset.clone(),
        master_seed: meta.master_seed,
        tau_abs: meta.tau_abs,
        tau_rel: meta.tau_rel,
        theta_e: meta.attractors.theta_e,
        resolved_theta_g: resolve_theta_g(cloud, &meta.attractors),
        link_radius: meta.attractors.link_radius,
        classified_count,
        skipped_count: cloud.len() - classified_count,
        kink_adjacent_count: cloud.records.iter().filter(|r| r.kink_adjacent).count(),
        curvature_fractions: fractions,
        attractors: find_attractors(cloud, &meta.attractors),
        saturation: saturation_by_curvature(cloud).ok(),
        two_cluster: two_cluster_diagnostic(cloud, None),
    }
}

impl Report {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "cell: {} / {} / {} / [-{}, {}]",
            self.problem, self.activation, self.regime, self.init_half_width, self.init_half_width
        );
        let _ = writeln!(
            out,
            "records: {} ({} walks x {} steps{})",
            self.record_count,
            self.walk_count,
            self.n_steps,
            match &self.preset {
                Some(p) => format!(", preset {p}"),
                None => String::new(),
            }
        );
        let _ = writeln!(out, "master seed: {}", self.master_seed);
        let _ = writeln!(
            out,
            "thresholds: tau_abs={:e} tau_rel={:e} theta_e={} theta_g={:e} link_radius={}",
            self.tau_abs, self.tau_rel, self.theta_e, self.resolved_theta_g, self.link_radius
        );
        let _ = writeln!(
            out,
            "curvature: {} classified, {} skipped, {} kink-adjacent",
            self.classified_count, self.skipped_count, self.kink_adjacent_count
        );
        for f in &self.curvature_fractions {
            let _ = writeln!(out, "  {:<9} {:.4}", f.curvature, f.fraction);
        }
        if self.attractors.is_empty() {
            let _ = writeln!(out, "attractors: none below theta_g");
        } else {
            let _ = writeln!(out, "attractors ({}):", self.attractors.len());
            for a in &self.attractors {
                let _ = writeln!(
                    out,
                    "  #{:<2} E={:<12.6} |G|={:<12.3e} n={:<8} {:?}",
                    a.cluster_id, a.mean_error, a.mean_grad_norm, a.member_count, a.classification
                );
            }
        }
        if let Some(saturation) = &self.saturation {
            let _ = writeln!(out, "saturation by curvature (min q1 median q3 max, n):");
            for s in saturation {
                let _ = writeln!(
                    out,
                    "  {:<9} {:.4} {:.4} {:.4} {:.4} {:.4}  n={}",
                    s.curvature.name(),
                    s.stats.min,
                    s.stats.q1,
                    s.stats.median,
                    s.stats.q3,
                    s.stats.max,
                    s.count
                );
            }
        }
        if let Some(d) = &self.two_cluster {
            let _ = writeln!(
                out,
                "two-cluster diagnostic (ln|G| among E_t < {:.4}): means {:.3} / {:.3}, gap {:.3}, weights {:.2}/{:.2}, n={}",
                d.error_cutoff, d.mean_low, d.mean_high, d.gap, d.weight_low, d.weight_high, d.n_points
            );
        }
        out
    }
}
