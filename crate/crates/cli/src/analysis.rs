//! Correlation, NMI, factor and cluster analysis of a measure matrix.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qsim_core::stats::{
    cluster_average_correlation, correlation_matrix, efa, nmi_report, ClusterDefinitions,
    CorrelationMatrix, CorrelationMethod, FactorSolution, MeasureMatrix,
};
use serde::Serialize;
use serde_json::json;

use crate::catalog::default_clusters;
use crate::config::RunConfig;
use crate::error::PipelineError;
use crate::output::{correlation_csv, csv_header, fmt_num, nmi_csv, to_json, write_atomic};

/// What an analysis run produced. Artifacts that could not be computed are
/// listed in `failures`; everything else is still written.
#[derive(Debug, Default)]
pub struct AnalysisOutcome {
    pub written: Vec<PathBuf>,
    pub failures: Vec<(String, String)>,
}

struct Writer<'a> {
    dir: &'a Path,
    outcome: AnalysisOutcome,
}

impl Writer<'_> {
    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)
            .map_err(|e| PipelineError::data(path.display().to_string(), e))?;
        self.outcome.written.push(path);
        Ok(())
    }

    fn fail(&mut self, artifact: &str, message: impl ToString) {
        let message = message.to_string();
        log::error!("{artifact}: {message}");
        self.outcome.failures.push((artifact.to_owned(), message));
    }
}

pub fn efa_loadings_csv(digest: &str, s: &FactorSolution<f64>) -> String {
    let mut out = csv_header(digest);
    let mut header = vec!["measure".to_owned()];
    header.extend((1..=s.n_factors).map(|f| format!("F{f}")));
    header.extend(["communality".to_owned(), "uniqueness".to_owned()]);
    out += &header.join(",");
    out.push('\n');
    for (i, name) in s.names.iter().enumerate() {
        let mut cells = vec![name.clone()];
        cells.extend((0..s.n_factors).map(|f| fmt_num(Some(s.loadings[(i, f)]))));
        cells.push(fmt_num(Some(s.communalities[i])));
        cells.push(fmt_num(Some(s.uniquenesses[i])));
        out += &cells.join(",");
        out.push('\n');
    }
    out
}

fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Diverging blue–white–red scale over [−1, 1].
fn diverging(v: f64) -> String {
    let t = v.clamp(-1.0, 1.0);
    let (end, w) = if t < 0.0 {
        ((59, 76, 192), -t)
    } else {
        ((180, 4, 38), t)
    };
    let mix = |c: u8| (255.0 + (c as f64 - 255.0) * w).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(end.0), mix(end.1), mix(end.2))
}

/// Correlation heatmap; each cell is labelled with the same text as the CSV.
pub fn heatmap_svg(c: &CorrelationMatrix<f64>) -> String {
    const CELL: usize = 56;
    let margin = 12 + 7 * c.names.iter().map(|n| n.chars().count()).max().unwrap_or(0);
    let size = margin + CELL * c.len();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" font-family="sans-serif" font-size="9">"#
    );
    let _ = writeln!(svg, "<title>{} correlation</title>", c.method.as_str());
    for (i, name) in c.names.iter().enumerate() {
        let name = escape_xml(name);
        let mid = margin + CELL * i + CELL / 2;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{mid}" text-anchor="end" dominant-baseline="middle">{name}</text>"#,
            margin - 4
        );
        let _ = writeln!(
            svg,
            r#"<text transform="translate({mid},{}) rotate(-90)" dominant-baseline="middle">{name}</text>"#,
            margin - 4
        );
    }
    for i in 0..c.len() {
        for j in 0..c.len() {
            let v = c.get(i, j);
            let (x, y) = (margin + CELL * j, margin + CELL * i);
            let fill = v.map_or_else(|| "#cccccc".to_owned(), diverging);
            let _ = writeln!(
                svg,
                r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="#ffffff"/>"##
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" text-anchor="middle" dominant-baseline="middle" font-size="7">{}</text>"#,
                x + CELL / 2,
                y + CELL / 2,
                fmt_num(v)
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

#[derive(Serialize)]
struct ClusterReport<'a, P: Serialize, K: Serialize> {
    /// Matrix 0 is the analysed run, the rest are extra datasets in order.
    matrices: &'a [String],
    pearson: P,
    kendall: K,
}

/// Writes every analysis artifact for `matrix` into `out_dir`. `extra` holds
/// further datasets (label, matrix) that only enter the cluster averages.
pub fn analyze(
    matrix: &MeasureMatrix<f64>,
    extra: &[(String, MeasureMatrix<f64>)],
    config: &RunConfig,
    digest: &str,
    out_dir: &Path,
) -> Result<AnalysisOutcome, PipelineError> {
    if matrix.n_cols() < 2 {
        return Err(PipelineError::Analysis(format!(
            "need at least two measures, got {}",
            matrix.n_cols()
        )));
    }
    let mut w = Writer {
        dir: out_dir,
        outcome: AnalysisOutcome::default(),
    };

    let pearson = correlation_matrix(matrix, CorrelationMethod::Pearson);
    let kendall = correlation_matrix(matrix, CorrelationMethod::Kendall);
    w.put("pearson.csv", correlation_csv(digest, &pearson).as_bytes())?;
    w.put("kendall.csv", correlation_csv(digest, &kendall).as_bytes())?;

    let nmi = nmi_report(
        &pearson,
        &kendall,
        matrix,
        config.nmi.bins,
        config.nmi.thresholds,
    );
    w.put("nmi.csv", nmi_csv(digest, &nmi.nmi).as_bytes())?;
    w.put(
        "flags.json",
        &to_json(
            digest,
            json!({ "thresholds": nmi.thresholds, "flagged_pairs": nmi.flagged_pairs }),
        ),
    )?;

    let efa_input = match &config.efa.columns {
        Some(cols) => matrix
            .select(cols)
            .map_err(|e| PipelineError::Analysis(e.to_string())),
        None => Ok(matrix.clone()),
    };
    match efa_input.and_then(|m| {
        efa(&m, &config.efa.options()).map_err(|e| PipelineError::Analysis(e.to_string()))
    }) {
        Ok(solution) => {
            for warning in &solution.warnings {
                log::warn!("efa: {warning}");
            }
            w.put(
                "efa_loadings.csv",
                efa_loadings_csv(digest, &solution).as_bytes(),
            )?;
            w.put("efa.json", &to_json(digest, &solution))?;
        }
        Err(e) => {
            let message = match e {
                PipelineError::Analysis(m) => m,
                other => other.to_string(),
            };
            w.put("efa.json", &to_json(digest, json!({ "error": message })))?;
            w.fail("efa", message);
        }
    }

    let clusters: ClusterDefinitions = config
        .clusters
        .clone()
        .unwrap_or_else(|| default_clusters(matrix.column_names()));
    if clusters.is_empty() {
        log::warn!("no measure group has two measures; skipping cluster averages");
    } else {
        let mut labels = vec!["run".to_owned()];
        let mut p = vec![pearson.clone()];
        let mut k = vec![kendall.clone()];
        for (label, m) in extra {
            labels.push(label.clone());
            p.push(correlation_matrix(m, CorrelationMethod::Pearson));
            k.push(correlation_matrix(m, CorrelationMethod::Kendall));
        }
        match (
            cluster_average_correlation(&p, &clusters),
            cluster_average_correlation(&k, &clusters),
        ) {
            (Ok(p), Ok(k)) => w.put(
                "cluster_averages.json",
                &to_json(
                    digest,
                    ClusterReport {
                        matrices: &labels,
                        pearson: p,
                        kendall: k,
                    },
                ),
            )?,
            (Err(e), _) | (_, Err(e)) => w.fail("cluster_averages", e),
        }
    }

    if config.heatmap {
        w.put("heatmap.svg", heatmap_svg(&pearson).as_bytes())?;
    }
    Ok(w.outcome)
}
