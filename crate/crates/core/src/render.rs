//! Human-readable views of a grid run: fixed-width text tables of median
//! correlations, and an SVG figure of original maps beside their aligned
//! reconstructions.

use crate::bidim::{stars, MapComparison};
use crate::error::{Error, Result};
use crate::experiment::ResultsTable;
use crate::geometry::Configuration2D;
use crate::mapgen::{CityMap, Distribution};

/// Which models a table summarizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableLayout {
    /// The four standard distributional models.
    Table1,
    /// The instance model.
    Table2,
}

impl TableLayout {
    pub fn models(self) -> &'static [&'static str] {
        match self {
            TableLayout::Table1 => &["ppmi", "lsa", "cbow", "glove"],
            TableLayout::Table2 => &["its"],
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            TableLayout::Table1 => "table1",
            TableLayout::Table2 => "table2",
        }
    }
}

impl std::str::FromStr for TableLayout {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table1" => Ok(TableLayout::Table1),
            "table2" => Ok(TableLayout::Table2),
            other => Err(Error::parse(format!("unknown table layout '{other}'"))),
        }
    }
}

/// Median r across replications with significance stars from the median
/// permutation p; a dash when the cell is absent or every replication
/// failed.
fn cell_text(results: &ResultsTable, model: &str, map: &str, relations: &str, sampling: &str) -> String {
    match results.median_r(model, map, relations, sampling) {
        Some(r) => {
            let p = results.median_p(model, map, relations, sampling);
            format!("{r:.2}{}", p.map(stars).unwrap_or(""))
        }
        None => "—".to_string(),
    }
}

/// Render the median-r summary table for one model group. Rows are model
/// × map; the four value columns are the sampling × relation-set
/// conditions. Maps appear in canonical order, restricted to those
/// present in the results; with no matching rows the output is just the
/// header.
pub fn render_table(results: &ResultsTable, layout: TableLayout) -> String {
    const W_MODEL: usize = 7;
    const W_MAP: usize = 11;
    const W_CELL: usize = 10;

    let mut out = String::new();
    out.push_str(&format!(
        "{:W_MODEL$} {:W_MAP$} {:>W_CELL$} {:>W_CELL$} {:>W_CELL$} {:>W_CELL$}\n",
        "", "", "Uniform", "", "Distance", ""
    ));
    out.push_str(&format!(
        "{:W_MODEL$} {:W_MAP$} {:>W_CELL$} {:>W_CELL$} {:>W_CELL$} {:>W_CELL$}\n",
        "Model", "Map", "N/F", "N/S/E/W", "N/F", "N/S/E/W"
    ));

    let maps: Vec<&str> = Distribution::all()
        .iter()
        .map(|d| d.tag())
        .filter(|tag| results.rows.iter().any(|row| row.map == *tag))
        .collect();

    for model in layout.models() {
        if !results.rows.iter().any(|row| row.model == *model) {
            continue;
        }
        for map in &maps {
            let cells = [
                cell_text(results, model, map, "nf", "uniform"),
                cell_text(results, model, map, "nsew", "uniform"),
                cell_text(results, model, map, "nf", "distance"),
                cell_text(results, model, map, "nsew", "distance"),
            ];
            out.push_str(&format!(
                "{model:W_MODEL$} {map:W_MAP$} {:>W_CELL$} {:>W_CELL$} {:>W_CELL$} {:>W_CELL$}\n",
                cells[0], cells[1], cells[2], cells[3]
            ));
        }
    }
    out
}

/// One reconstruction panel: the recovered configuration plus its scored
/// fit against the row's original map.
#[derive(Debug, Clone)]
pub struct FigurePanel {
    pub model: String,
    pub configuration: Configuration2D,
    pub comparison: MapComparison,
}

/// One figure row: an original map and the reconstructions shown beside it.
#[derive(Debug, Clone)]
pub struct FigureRow {
    pub map: CityMap,
    pub tag: String,
    pub panels: Vec<FigurePanel>,
}

const PANEL: f64 = 200.0;
const PAD: f64 = 14.0;
const CAPTION: f64 = 22.0;
const GAP: f64 = 16.0;

fn esc(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Map unit-square coordinates into a panel. The y axis flips because
/// SVG's y grows downward while map north points up.
fn project(p: (f64, f64), x0: f64, y0: f64) -> (f64, f64) {
    let inner = PANEL - 2.0 * PAD;
    (x0 + PAD + p.0 * inner, y0 + PAD + (1.0 - p.1) * inner)
}

fn draw_panel(
    out: &mut String,
    x0: f64,
    y0: f64,
    clip: &str,
    labels: &[String],
    points: &[(f64, f64)],
    caption: &str,
) {
    out.push_str(&format!(
        "  <clipPath id=\"{clip}\"><rect x=\"{x0}\" y=\"{y0}\" width=\"{PANEL}\" height=\"{PANEL}\"/></clipPath>\n"
    ));
    out.push_str(&format!(
        "  <rect x=\"{x0}\" y=\"{y0}\" width=\"{PANEL}\" height=\"{PANEL}\" fill=\"white\" stroke=\"#444\"/>\n"
    ));
    out.push_str(&format!("  <g clip-path=\"url(#{clip})\">\n"));
    for (label, &p) in labels.iter().zip(points) {
        let (px, py) = project(p, x0, y0);
        out.push_str(&format!(
            "    <circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"2.5\" fill=\"#1965b0\"/>\n"
        ));
        out.push_str(&format!(
            "    <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"9\" font-family=\"sans-serif\">{}</text>\n",
            px + 4.0,
            py - 3.0,
            esc(label)
        ));
    }
    out.push_str("  </g>\n");
    out.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" font-family=\"sans-serif\" text-anchor=\"middle\">{}</text>\n",
        x0 + PANEL / 2.0,
        y0 + PANEL + CAPTION - 6.0,
        esc(caption)
    ));
}

/// Render rows of map panels: the original map in the first column, each
/// reconstruction beside it after mapping through its fitted affine
/// transform into the original's coordinate frame, captioned with the
/// model tag, r, and significance stars.
pub fn render_maps_svg(rows: &[FigureRow]) -> String {
    let n_cols = 1 + rows.iter().map(|row| row.panels.len()).max().unwrap_or(0);
    let n_rows = rows.len().max(1);
    let cell_w = PANEL + GAP;
    let cell_h = PANEL + CAPTION + GAP;
    let width = GAP + n_cols as f64 * cell_w;
    let height = GAP + n_rows as f64 * cell_h;

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {width:.0} {height:.0}\" \
         width=\"{width:.0}\" height=\"{height:.0}\">\n"
    ));
    out.push_str("  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    for (ri, row) in rows.iter().enumerate() {
        let y0 = GAP + ri as f64 * cell_h;
        let x0 = GAP;
        draw_panel(
            &mut out,
            x0,
            y0,
            &format!("clip-{ri}-orig"),
            &row.map.labels,
            &row.map.coords,
            &format!("{} (original)", row.tag),
        );
        for (ci, panel) in row.panels.iter().enumerate() {
            let x0 = GAP + (ci + 1) as f64 * cell_w;
            let aligned: Vec<(f64, f64)> =
                panel.configuration.coords.iter().map(|&p| panel.comparison.fit.apply(p)).collect();
            let caption = format!(
                "{} r={:.2}{}",
                panel.model,
                panel.comparison.fit.r,
                panel.comparison.stars()
            );
            draw_panel(
                &mut out,
                x0,
                y0,
                &format!("clip-{ri}-{ci}"),
                &panel.configuration.labels,
                &aligned,
                &caption,
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::files::ResultRow;

    fn row(model: &str, map: &str, relations: &str, sampling: &str, rep: usize, r: f64, p: f64) -> ResultRow {
        ResultRow {
            model: model.into(),
            map: map.into(),
            relations: relations.into(),
            sampling: sampling.into(),
            replication: rep,
            r: Some(r),
            p: Some(p),
            stars: stars(p).into(),
            stress: Some(0.05),
            runtime_ms: None,
            error: None,
        }
    }

    #[test]
    fn empty_results_render_header_only() {
        let table = ResultsTable { rows: vec![] };
        let text = render_table(&table, TableLayout::Table1);
        assert_eq!(text.lines().count(), 2);
        assert!(text.contains("Uniform"));
        assert!(text.contains("Distance"));
        assert!(text.contains("N/S/E/W"));
    }

    #[test]
    fn table_reports_medians_with_stars_and_dashes() {
        let rows = vec![
            row("ppmi", "random", "nf", "distance", 0, 0.99, 0.0001),
            row("ppmi", "random", "nf", "distance", 1, 0.95, 0.0001),
            row("ppmi", "random", "nf", "distance", 2, 0.40, 0.2),
            row("ppmi", "random", "nf", "uniform", 0, 0.21, 0.4),
        ];
        let table = ResultsTable { rows };
        let text = render_table(&table, TableLayout::Table1);
        // Median of {0.99, 0.95, 0.40} is 0.95; median p 1e-4 earns ***.
        assert!(text.contains("0.95***"), "{text}");
        assert!(text.contains("0.21"), "{text}");
        // The two conditions with no rows render as dashes.
        assert_eq!(text.matches('—').count(), 2, "{text}");
        // Table 2 has no ITS rows here, so it is header-only.
        assert_eq!(render_table(&table, TableLayout::Table2).lines().count(), 2);
    }

    #[test]
    fn median_of_even_count_averages_the_middle_pair() {
        let rows = vec![
            row("its", "circular", "nsew", "uniform", 0, 0.80, 0.001),
            row("its", "circular", "nsew", "uniform", 1, 0.90, 0.001),
        ];
        let table = ResultsTable { rows };
        assert!((table.median_r("its", "circular", "nsew", "uniform").unwrap() - 0.85).abs() < 1e-12);
    }

    #[test]
    fn svg_escapes_and_aligns() {
        use crate::bidim::compare_to_truth;
        use crate::mapgen::generate_map;

        let map = generate_map(Distribution::Random, 8, 42).unwrap();
        // A reconstruction identical to the truth: the fit must be exact
        // and the aligned panel must land on the original's points.
        let config = Configuration2D {
            labels: map.labels.clone(),
            coords: map.coords.clone(),
            stress: 0.0,
            stress_trace: vec![0.0],
            iterations: 0,
            converged: true,
            degenerate: false,
            restart: 0,
        };
        let comparison = compare_to_truth(&config, &map, 9_999, 7).unwrap();
        let rows = vec![FigureRow {
            map: map.clone(),
            tag: "random".into(),
            panels: vec![FigurePanel {
                model: "ppmi".into(),
                configuration: config,
                comparison,
            }],
        }];
        let svg = render_maps_svg(&rows);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("r=1.00***"), "{svg}");
        assert!(svg.contains("(original)"));
    }

    #[test]
    fn svg_output_is_well_formed_xml() {
        use crate::bidim::compare_to_truth;
        use crate::mapgen::generate_map;

        let rows: Vec<FigureRow> = Distribution::all()
            .iter()
            .enumerate()
            .map(|(i, &distribution)| {
                let map = generate_map(distribution, 10, 3 + i as u64).unwrap();
                let config = Configuration2D {
                    labels: map.labels.clone(),
                    coords: map.coords.iter().map(|&(x, y)| (y, x)).collect(),
                    stress: 0.01,
                    stress_trace: vec![0.01],
                    iterations: 1,
                    converged: true,
                    degenerate: false,
                    restart: 0,
                };
                let comparison = compare_to_truth(&config, &map, 199, 5).unwrap();
                FigureRow {
                    map: map.clone(),
                    tag: distribution.tag().into(),
                    panels: vec![FigurePanel {
                        model: "its".into(),
                        configuration: config,
                        comparison,
                    }],
                }
            })
            .collect();
        let svg = render_maps_svg(&rows);
        let doc = roxmltree::Document::parse(&svg).expect("well-formed XML");
        assert_eq!(doc.root_element().tag_name().name(), "svg");
        let panels = doc
            .descendants()
            .filter(|n| n.tag_name().name() == "rect" && n.attribute("stroke").is_some())
            .count();
        // 3 rows of (original + 1 reconstruction).
        assert_eq!(panels, 6);
    }
}
