use crate::report::{AtomRecord, Interval, LowerBoundRecord, RelaxReport, Report};

fn num(x: Option<f64>) -> String {
    match x {
        None => "-".into(),
        Some(v) if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-3) => format!("{v:.4e}"),
        Some(v) => format!("{v:.4}"),
    }
}

fn lower(lb: Option<&LowerBoundRecord>) -> String {
    match lb {
        None => "-".into(),
        Some(r) if r.finite => num(r.value),
        Some(r) if r.is_unbounded() => "-inf".into(),
        Some(r) => r.status.clone().unwrap_or_else(|| "-".into()),
    }
}

fn atoms(a: &[AtomRecord]) -> String {
    if a.is_empty() {
        return "-".into();
    }
    a.iter()
        .map(|r| {
            let coords: Vec<String> = r.point.iter().map(|x| format!("{x:.4}")).collect();
            format!("({})", coords.join(", "))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn interval(i: Option<&Interval>) -> String {
    match i {
        None => "-".into(),
        Some(i) => {
            let lo = i.lower.map_or("-inf".into(), |v| num(Some(v)));
            format!("[{lo}, {}]", num(Some(i.upper)))
        }
    }
}

fn layout(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<String>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        padded.join(" | ").trim_end().to_string() + "\n"
    };
    let mut out = line(header.iter().map(|h| h.to_string()).collect());
    out += &line(widths.iter().map(|&w| "-".repeat(w)).collect());
    for r in rows {
        out += &line(r.clone());
    }
    out
}

fn relax_table(r: &RelaxReport) -> String {
    let rows = vec![
        vec!["degree".into(), r.degree.to_string()],
        vec!["mode".into(), r.mode.clone()],
        vec!["status".into(), r.status.clone()],
        vec!["lower bound".into(), lower(Some(&r.lower_bound))],
        vec![
            "ranks".into(),
            format!(
                "{} / {}",
                r.rank_full.map_or("-".into(), |v| v.to_string()),
                r.rank_sub.map_or("-".into(), |v| v.to_string())
            ),
        ],
        vec!["flat".into(), r.flat.to_string()],
        vec!["hankel M~".into(), r.hankel_modified.to_string()],
        vec!["atoms".into(), atoms(&r.atoms)],
        vec!["verdict".into(), r.verdict.clone().unwrap_or_else(|| "-".into())],
        vec!["certified".into(), r.certified_optimal.to_string()],
        vec!["time (s)".into(), format!("{:.2}", r.wall_time_s)],
    ];
    layout(&["field", "value"], &rows)
}

/// Plain-text table, one row per λ, columns in report order.
pub fn render(report: &Report) -> String {
    if let Some(r) = &report.relaxation {
        return relax_table(r);
    }
    let mut header = vec![
        "lambda", "status", "lower", "U", "flat", "|A-B|", "minimizers", "interval", "iters",
        "time (s)",
    ];
    let with_ref = !report.reference.is_empty();
    if with_ref {
        header.extend(["ref U", "ref flat", "ref |A-B|", "ref minimizers", "ref iters"]);
    }
    let rows: Vec<Vec<String>> = report
        .runs
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = vec![
                num(Some(r.lambda)),
                r.status.clone(),
                lower(r.lower_bound.as_ref()),
                num(r.upper_bound),
                r.flat.clone(),
                num(r.flat_residual),
                atoms(&r.atoms),
                interval(r.certified_interval.as_ref()),
                r.outer_iterations.to_string(),
                format!("{:.2}", r.wall_time_s),
            ];
            if let Some(p) = report.reference.get(i).filter(|_| with_ref) {
                row.extend([
                    p.upper_bound.clone(),
                    p.flat.clone(),
                    p.flat_residual.clone(),
                    p.minimizers.clone(),
                    p.iterations.to_string(),
                ]);
            }
            row
        })
        .collect();
    layout(&header, &rows)
}
