//! Rendering of report tables.
//!
//! Intervals use two decimals; popularity values are in millions of views.
//! In markdown, intervals that exclude zero are bold.

use crate::analysis::{Cell, ReportRow, ReportTable};
use crate::stats::Characteristic;

const MILLION: f64 = 1e6;

fn scale(ch: Characteristic) -> f64 {
    match ch {
        Characteristic::Pop => MILLION,
        _ => 1.0,
    }
}

pub fn format_ci((lo, hi): (f64, f64)) -> String {
    format!("({lo:.2}, {hi:.2})")
}

fn bold(s: String, on: bool, markdown: bool) -> String {
    match (on, markdown) {
        (true, true) => format!("**{s}**"),
        (true, false) => format!("{s}*"),
        _ => s,
    }
}

fn cells_for(row: &ReportRow, ch: Characteristic, markdown: bool) -> Vec<String> {
    let Some(Cell {
        mean_a,
        mean_b,
        effect,
    }) = row.cell(ch)
    else {
        let n = if ch == Characteristic::Sem { 3 } else { 4 };
        return vec!["-".to_string(); n];
    };
    let k = scale(ch);
    let s = |(lo, hi): (f64, f64)| (lo / k, hi / k);
    let mut out = Vec::new();
    if let (Some(a), Some(b)) = (mean_a, mean_b) {
        out.push(format!("{:.2} / {:.2}", a / k, b / k));
    }
    out.push(bold(
        format_ci(s(effect.ci95)),
        effect.significant95,
        markdown,
    ));
    out.push(bold(
        format_ci(s(effect.ci99)),
        effect.significant99,
        markdown,
    ));
    out.push(format!("{:.2}", effect.mean_effect / k));
    out
}

fn header() -> Vec<&'static str> {
    vec![
        "Fixed",
        "Varied",
        "n",
        "mu views (M)",
        "pop CI95",
        "pop CI99",
        "pop mu effect",
        "mu entropy",
        "div CI95",
        "div CI99",
        "div mu effect",
        "sem CI95",
        "sem CI99",
        "sem mu effect",
    ]
}

fn body(table: &ReportTable, markdown: bool) -> Vec<Vec<String>> {
    table
        .rows
        .iter()
        .map(|row| {
            let mut n = format!("{}/{}", row.n_a, row.n_b);
            if row.excluded > 0 {
                n.push_str(&format!(" (-{})", row.excluded));
            }
            let mut line = vec![row.fixed.clone(), row.varied.clone(), n];
            for ch in Characteristic::ALL {
                line.extend(cells_for(row, ch, markdown));
            }
            line
        })
        .collect()
}

/// Markdown table with bold significant intervals.
pub fn render_markdown(table: &ReportTable) -> String {
    let mut out = String::new();
    let head = header();
    out.push_str(&format!("| {} |\n", head.join(" | ")));
    out.push_str(&format!("|{}\n", "---|".repeat(head.len())));
    for line in body(table, true) {
        out.push_str(&format!("| {} |\n", line.join(" | ")));
    }
    out
}

/// Column-aligned plain text; significant intervals end in `*`.
pub fn render_text(table: &ReportTable) -> String {
    let head: Vec<String> = header().into_iter().map(String::from).collect();
    let rows = body(table, false);
    let widths: Vec<usize> = (0..head.len())
        .map(|c| {
            rows.iter()
                .map(|r| r[c].chars().count())
                .chain([head[c].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let fmt = |line: &[String]| {
        line.iter()
            .zip(&widths)
            .map(|(s, w)| format!("{s:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = fmt(&head);
    out.push('\n');
    for r in &rows {
        out.push_str(&fmt(r));
        out.push('\n');
    }
    out
}

/// One record per comparison per characteristic, unscaled.
pub fn render_csv(table: &ReportTable) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "fixed",
        "varied",
        "n_a",
        "n_b",
        "excluded",
        "characteristic",
        "mean_a",
        "mean_b",
        "mean_within",
        "mean_across",
        "mean_effect",
        "ci95_lower",
        "ci95_upper",
        "ci99_lower",
        "ci99_upper",
        "significant95",
        "significant99",
        "resamples",
    ])?;
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for row in &table.rows {
        for c in &row.cells {
            let e = &c.effect;
            w.write_record([
                row.fixed.clone(),
                row.varied.clone(),
                row.n_a.to_string(),
                row.n_b.to_string(),
                row.excluded.to_string(),
                e.characteristic.to_string(),
                opt(c.mean_a),
                opt(c.mean_b),
                e.mean_within.to_string(),
                e.mean_across.to_string(),
                e.mean_effect.to_string(),
                e.ci95.0.to_string(),
                e.ci95.1.to_string(),
                e.ci99.0.to_string(),
                e.ci99.1.to_string(),
                e.significant95.to_string(),
                e.significant99.to_string(),
                e.n_resamples.to_string(),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{CiMethod, EffectReport, Resampling};

    fn effect(ch: Characteristic, ci95: (f64, f64), ci99: (f64, f64)) -> EffectReport {
        EffectReport {
            characteristic: ch,
            mean_within: 0.0,
            mean_across: 0.5,
            mean_effect: (ci95.0 + ci95.1) / 2.0,
            ci95,
            ci99,
            within_ci95: (0.0, 0.0),
            across_ci95: (0.0, 0.0),
            significant95: ci95.0 > 0.0 || ci95.1 < 0.0,
            significant99: ci99.0 > 0.0 || ci99.1 < 0.0,
            n_resamples: 1000,
            resampling: Resampling::Trees,
            method: CiMethod::Percentile,
        }
    }

    fn table() -> ReportTable {
        ReportTable {
            rows: vec![ReportRow {
                fixed: "account=full, seed=v1".into(),
                varied: "watch: W=100% vs W=10%".into(),
                n_a: 4,
                n_b: 4,
                excluded: 0,
                cells: vec![
                    Cell {
                        mean_a: Some(3.1e6),
                        mean_b: Some(2.0e6),
                        effect: effect(Characteristic::Pop, (0.34e6, 1.33e6), (-0.1e6, 1.5e6)),
                    },
                    Cell {
                        mean_a: Some(3.38),
                        mean_b: Some(3.26),
                        effect: effect(Characteristic::Div, (-0.16, 0.17), (-0.2, 0.2)),
                    },
                ],
            }],
        }
    }

    #[test]
    fn markdown_bolds_significant_intervals() {
        let md = render_markdown(&table());
        assert!(
            md.contains("| 3.10 / 2.00 | **(0.34, 1.33)** | (-0.10, 1.50) | 0.83 |"),
            "{md}"
        );
        assert!(md.contains("| 3.38 / 3.26 | (-0.16, 0.17) | (-0.20, 0.20) | 0.01 |"));
        assert!(md.trim_end().ends_with("| - | - | - |"));
        assert_eq!(md.lines().count(), 3);
    }

    #[test]
    fn text_is_aligned() {
        let txt = render_text(&table());
        let lines: Vec<&str> = txt.lines().collect();
        assert_eq!(lines.len(), 2);
        let col = lines[0].find("Varied").unwrap();
        assert_eq!(&lines[1][col..col + 6], "watch:");
        assert!(txt.contains("(0.34, 1.33)*"));
    }

    #[test]
    fn csv_has_a_record_per_cell() {
        let csv = render_csv(&table()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with(
            "\"account=full, seed=v1\",watch: W=100% vs W=10%,4,4,0,pop,3100000,2000000"
        ));
        assert!(lines[2].contains(",div,"));
    }

    #[test]
    fn ci_format() {
        assert_eq!(format_ci((2.684, 3.046)), "(2.68, 3.05)");
        assert_eq!(format_ci((-0.864, 0.28)), "(-0.86, 0.28)");
    }
}
