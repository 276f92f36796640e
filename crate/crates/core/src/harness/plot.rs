use super::{Summary, THIN_CURVES};

/// Gnuplot script drawing `summary` from the CSV at `csv_path` (relative to
/// the script). Thick lines are means, thin lines the sample runs.
pub fn emit_plot_script(summary: &Summary, csv_path: &str, title: &str) -> String {
    let mut out = String::new();
    out.push_str("# gnuplot script\n");
    out.push_str("set datafile separator \",\"\n");
    out.push_str(&format!("set title \"{}\"\n", escape(title)));
    out.push_str("set xlabel \"step\"\n");
    out.push_str("set ylabel \"normalized reward rate\"\n");
    out.push_str("set yrange [-0.2:1.1]\n");
    out.push_str("set key outside right\n");
    out.push_str(&format!("data = \"{}\"\n", escape(csv_path)));
    let mut items = Vec::new();
    for (i, c) in summary.curves.iter().enumerate() {
        let id = escape(&c.algorithm);
        let color = i + 1;
        items
            .push(format!("data using 3:(strcol(1) eq \"{id}\" ? $4 : NaN) with lines lw 3 lc {color} title \"{id}\""));
        let samples = c.points.iter().map(|p| p.samples.len()).max().unwrap_or(0).min(THIN_CURVES);
        for k in 0..samples {
            items.push(format!(
                "data using 3:(strcol(1) eq \"{id}\" ? column({}) : NaN) with lines lw 1 lc {color} dt 3 notitle",
                7 + k
            ));
        }
    }
    if items.is_empty() {
        out.push_str("plot NaN notitle\n");
    } else {
        out.push_str("plot \\\n    ");
        out.push_str(&items.join(", \\\n    "));
        out.push('\n');
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{AlgorithmCurve, CurvePoint};

    #[test]
    fn empty_summary_still_plots() {
        let text = emit_plot_script(&Summary::default(), "summary.csv", "empty");
        assert!(text.contains("plot NaN notitle"));
        assert!(text.contains("set yrange [-0.2:1.1]"));
    }

    #[test]
    fn one_thick_curve_per_algorithm() {
        let point = CurvePoint { window: 0, step_end: 10, mean: 0.5, std_err: 0.1, count: 2, samples: vec![0.4, 0.6] };
        let summary = Summary {
            curves: ["ec", "ps"]
                .iter()
                .map(|a| AlgorithmCurve { algorithm: a.to_string(), points: vec![point.clone()] })
                .collect(),
        };
        let text = emit_plot_script(&summary, "summary.csv", "t");
        assert_eq!(text.matches("lw 3").count(), 2);
        assert_eq!(text.matches("lw 1").count(), 4);
        assert!(text.contains("data = \"summary.csv\""));
    }
}
