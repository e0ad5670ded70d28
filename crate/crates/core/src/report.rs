//! CSV tables and static SVG charts.
//!
//! CSV values use the shortest decimal form that parses back to the same
//! `f64`, so files round-trip exactly. Human-facing text (chart labels,
//! console tables) uses [`format_sig`] with six significant digits.

use std::fmt::Write as _;

use crate::error::{LcaError, Result};
use crate::hpc::CrosscheckCell;
use crate::impact::{Impacts, Indicator, Phase, PhaseImpact};
use crate::scenario::{CrossoverEntry, RatioEntry, SweepSeries};

pub const DISPLAY_DIGITS: usize = 6;

/// Rounds to `digits` significant digits, ties to even, on the exact
/// decimal value of `x`. Trailing zeros are dropped. Magnitudes outside
/// `[1e-4, 1e15)` use exponent notation.
pub fn format_sig(x: f64, digits: usize) -> String {
    assert!(digits >= 1, "at least one significant digit");
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    // 800 fractional digits in scientific form hold every f64 exactly.
    let exact = format!("{:.800e}", x.abs());
    let (mantissa, exp) = exact.split_once('e').expect("scientific form");
    let mut exp: i32 = exp.parse().expect("exponent");
    let all: Vec<u8> = mantissa.bytes().filter(u8::is_ascii_digit).map(|b| b - b'0').collect();
    let mut kept: Vec<u8> = all[..digits].to_vec();
    let rest = &all[digits..];
    let round_up = match rest.first() {
        Some(&d) if d > 5 => true,
        Some(&5) => rest[1..].iter().any(|&d| d != 0) || kept[digits - 1] % 2 == 1,
        _ => false,
    };
    if round_up {
        let mut i = digits;
        loop {
            if i == 0 {
                kept.insert(0, 1);
                kept.pop();
                exp += 1;
                break;
            }
            i -= 1;
            if kept[i] == 9 {
                kept[i] = 0;
            } else {
                kept[i] += 1;
                break;
            }
        }
    }
    while kept.len() > 1 && *kept.last().unwrap() == 0 {
        kept.pop();
    }
    let digits_str: String = kept.iter().map(|d| char::from(b'0' + d)).collect();
    let sign = if x < 0.0 { "-" } else { "" };
    if !(-4..15).contains(&exp) {
        let (head, tail) = digits_str.split_at(1);
        let frac = if tail.is_empty() { String::new() } else { format!(".{tail}") };
        return format!("{sign}{head}{frac}e{exp}");
    }
    let body = if exp < 0 {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits_str)
    } else {
        let int_len = exp as usize + 1;
        if digits_str.len() <= int_len {
            format!("{}{}", digits_str, "0".repeat(int_len - digits_str.len()))
        } else {
            format!("{}.{}", &digits_str[..int_len], &digits_str[int_len..])
        }
    };
    format!("{sign}{body}")
}

/// Six-digit display form.
pub fn display(x: f64) -> String {
    format_sig(x, DISPLAY_DIGITS)
}

/// Exact, shortest round-trip form used in CSV files.
pub fn csv_number(x: f64) -> String {
    format!("{x}")
}

fn opt_number(x: Option<f64>) -> String {
    x.map(csv_number).unwrap_or_else(|| "none".to_string())
}

fn write_csv(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8 fields")
}

pub fn phase_impacts_csv(rows: &[(String, f64, Vec<PhaseImpact>)]) -> String {
    let mut out = Vec::new();
    for (scenario, hours, phases) in rows {
        for p in phases {
            for (ind, v) in p.impacts.iter() {
                out.push(vec![
                    scenario.clone(),
                    p.phase.id().to_string(),
                    ind.id().to_string(),
                    csv_number(*hours),
                    csv_number(v),
                    ind.unit().to_string(),
                ]);
            }
        }
    }
    write_csv(&["scenario", "phase", "indicator", "hours", "value", "unit"], out)
}

pub fn sweep_csv(series: &[SweepSeries]) -> String {
    let mut out = Vec::new();
    for s in series {
        for (i, h) in s.hours.iter().enumerate() {
            for ind in Indicator::ALL {
                for phase in Phase::ALL {
                    out.push(vec![
                        s.scenario.clone(),
                        csv_number(*h),
                        phase.id().to_string(),
                        ind.id().to_string(),
                        csv_number(s.value(phase, ind, i)),
                        ind.unit().to_string(),
                    ]);
                }
                out.push(vec![
                    s.scenario.clone(),
                    csv_number(*h),
                    "total".to_string(),
                    ind.id().to_string(),
                    csv_number(s.total(ind, i)),
                    ind.unit().to_string(),
                ]);
            }
        }
    }
    write_csv(&["scenario", "hours", "phase", "indicator", "value", "unit"], out)
}

pub fn crossover_csv(entries: &[CrossoverEntry]) -> String {
    let rows = entries
        .iter()
        .map(|c| {
            vec![
                c.x.clone(),
                c.y.clone(),
                c.indicator.id().to_string(),
                c.status.id().to_string(),
                opt_number(c.hours),
                "h".to_string(),
                c.lower_before.clone().unwrap_or_else(|| "none".into()),
                c.lower_after.clone().unwrap_or_else(|| "none".into()),
            ]
        })
        .collect();
    write_csv(
        &["x", "y", "indicator", "status", "crossover_hours", "unit", "lower_before", "lower_after"],
        rows,
    )
}

pub fn dominance_csv(rows: &[(String, Indicator, Option<f64>)]) -> String {
    let rows = rows
        .iter()
        .map(|(s, ind, h)| vec![s.clone(), ind.id().to_string(), opt_number(*h), "h".to_string()])
        .collect();
    write_csv(&["scenario", "indicator", "use_exceeds_production_hours", "unit"], rows)
}

pub fn ratio_csv(rows: &[RatioEntry]) -> String {
    let rows = rows
        .iter()
        .map(|r| {
            vec![
                r.x.clone(),
                r.y.clone(),
                r.indicator.id().to_string(),
                opt_number(r.fixed_ratio),
                "ratio".to_string(),
                opt_number(r.orders_of_magnitude),
                "log10".to_string(),
            ]
        })
        .collect();
    write_csv(
        &["x", "y", "indicator", "fixed_phase_ratio", "ratio_unit", "orders_of_magnitude", "orders_unit"],
        rows,
    )
}

/// Subsystem contributions to production, with shares of the phase total.
pub fn contribution_csv(rows: &[(String, Vec<(String, Impacts)>)]) -> String {
    let mut out = Vec::new();
    for (scenario, parts) in rows {
        let mut total = Impacts::ZERO;
        for (_, v) in parts {
            total += *v;
        }
        for (name, v) in parts {
            for (ind, x) in v.iter() {
                let share = (total[ind] > 0.0).then(|| x / total[ind]);
                out.push(vec![
                    scenario.clone(),
                    name.clone(),
                    ind.id().to_string(),
                    csv_number(x),
                    ind.unit().to_string(),
                    opt_number(share),
                ]);
            }
        }
    }
    write_csv(&["scenario", "subsystem", "indicator", "value", "unit", "share"], out)
}

/// Model quantities such as counts, power and mass, one row each.
pub fn quantities_csv(rows: &[(String, &str, f64, &str)]) -> String {
    let rows = rows
        .iter()
        .map(|(s, q, v, unit)| vec![s.clone(), q.to_string(), csv_number(*v), unit.to_string()])
        .collect();
    write_csv(&["scenario", "quantity", "value", "unit"], rows)
}

pub fn setup_ratio_csv(rows: &[(String, String, f64)]) -> String {
    let rows = rows
        .iter()
        .map(|(x, y, r)| vec![x.clone(), y.clone(), csv_number(*r), "ratio".to_string()])
        .collect();
    write_csv(&["x", "y", "setup_ratio_y_over_x", "unit"], rows)
}

pub fn quantity_unit(quantity: &str) -> &'static str {
    match quantity {
        q if q.ends_with("_kw") => "kW",
        q if q.ends_with("_kg") => "kg",
        q if q.ends_with("_gb") => "GB",
        q if q.contains("cores") => "cores",
        "total_cpu" | "compute_nodes" => "CPU",
        "total_gpu" => "GPU",
        "total_blades" => "blade",
        _ => "1",
    }
}

pub fn crosscheck_csv(cells: &[CrosscheckCell]) -> String {
    let rows = cells
        .iter()
        .map(|c| {
            vec![
                c.machine.clone(),
                c.quantity.to_string(),
                csv_number(c.computed),
                csv_number(c.published),
                quantity_unit(c.quantity).to_string(),
                c.decimals.to_string(),
                csv_number(c.rel_diff),
                if c.pass { "pass" } else { "fail" }.to_string(),
            ]
        })
        .collect();
    write_csv(
        &["machine", "quantity", "computed", "published", "unit", "printed_decimals", "rel_diff", "result"],
        rows,
    )
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PHASE_COLORS: [&str; 4] = ["#3b6ea5", "#e0a030", "#6aa84f", "#9e4a6e"];
const LINE_COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn c(x: f64) -> String {
    format!("{x:.2}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;").replace('\'', "&#39;")
}

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">",
        w = WIDTH,
        h = HEIGHT
    );
    let _ = writeln!(s, "<rect width=\"{}\" height=\"{}\" fill=\"white\"/>", WIDTH, HEIGHT);
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
        c(WIDTH / 2.0),
        escape(title)
    );
    s
}

fn axes(s: &mut String, x_label: &str, y_label: &str) {
    let (x0, y0, x1, y1) = (LEFT, HEIGHT - BOTTOM, WIDTH - RIGHT, TOP);
    let _ = writeln!(s, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>", c(x0), c(y0), c(x1), c(y0));
    let _ = writeln!(s, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>", c(x0), c(y0), c(x0), c(y1));
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        c((x0 + x1) / 2.0),
        c(HEIGHT - 15.0),
        escape(x_label)
    );
    let _ = writeln!(
        s,
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>",
        c((y0 + y1) / 2.0),
        c((y0 + y1) / 2.0),
        escape(y_label)
    );
}

fn legend(s: &mut String, entries: &[(String, &str)], title: &str) {
    let x = WIDTH - RIGHT + 15.0;
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" font-weight=\"bold\">{}</text>", c(x), c(TOP + 5.0), escape(title));
    for (i, (label, color)) in entries.iter().enumerate() {
        let y = TOP + 22.0 + 18.0 * i as f64;
        let _ = writeln!(s, "<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{color}\"/>", c(x), c(y - 10.0));
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\">{}</text>", c(x + 18.0), c(y), escape(label));
    }
}

/// Stacked bar per hour point, one segment per phase. Negative phase
/// values are drawn as zero height; the table output keeps their sign.
pub fn stacked_bars_svg(series: &SweepSeries, indicator: Indicator) -> Result<String> {
    if series.hours.is_empty() {
        return Err(LcaError::EmptySeries);
    }
    let n = series.hours.len();
    let totals: Vec<f64> = (0..n)
        .map(|i| Phase::ALL.iter().map(|p| series.value(*p, indicator, i).max(0.0)).sum())
        .collect();
    let max = totals.iter().cloned().fold(0.0, f64::max);
    let top = if max > 0.0 { max * 1.05 } else { 1.0 };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let slot = plot_w / n as f64;
    let bar_w = slot * 0.6;

    let mut s = svg_open(&format!("{}: {} by life-cycle phase", series.scenario, indicator.id()));
    axes(&mut s, "Operating time (h)", &format!("{} ({})", indicator.id(), indicator.unit()));
    for k in 0..=4 {
        let v = top * k as f64 / 4.0;
        let y = HEIGHT - BOTTOM - plot_h * k as f64 / 4.0;
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            c(LEFT - 6.0),
            c(y + 4.0),
            display(v)
        );
    }
    for i in 0..n {
        let x = LEFT + slot * i as f64 + (slot - bar_w) / 2.0;
        let mut y = HEIGHT - BOTTOM;
        for (k, phase) in Phase::ALL.iter().enumerate() {
            let h = plot_h * series.value(*phase, indicator, i).max(0.0) / top;
            y -= h;
            let _ = writeln!(
                s,
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"><title>{} {}: {} {}</title></rect>",
                c(x),
                c(y),
                c(bar_w),
                c(h),
                PHASE_COLORS[k],
                phase.id(),
                display(series.hours[i]),
                display(series.value(*phase, indicator, i)),
                escape(indicator.unit())
            );
        }
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            c(x + bar_w / 2.0),
            c(HEIGHT - BOTTOM + 16.0),
            display(series.hours[i])
        );
    }
    let entries: Vec<(String, &str)> = Phase::ALL
        .iter()
        .zip(PHASE_COLORS)
        .map(|(p, col)| (p.id().to_string(), col))
        .collect();
    legend(&mut s, &entries, &format!("Phase ({})", indicator.unit()));
    s.push_str("</svg>\n");
    Ok(s)
}

/// Totals of several scenarios against operating time on a log scale.
/// Non-positive totals are left out of the line.
pub fn log_lines_svg(series: &[SweepSeries], indicator: Indicator) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.hours.is_empty()) {
        return Err(LcaError::EmptySeries);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut h_max: f64 = 0.0;
    for s in series {
        for i in 0..s.hours.len() {
            let t = s.total(indicator, i);
            if t > 0.0 {
                lo = lo.min(t);
                hi = hi.max(t);
            }
            h_max = h_max.max(s.hours[i]);
        }
    }
    if !lo.is_finite() {
        lo = 1.0;
        hi = 10.0;
    }
    let d_lo = lo.log10().floor();
    let d_hi = (hi.log10().ceil()).max(d_lo + 1.0);
    let h_max = if h_max > 0.0 { h_max } else { 1.0 };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |h: f64| LEFT + plot_w * h / h_max;
    let py = |v: f64| HEIGHT - BOTTOM - plot_h * (v.log10() - d_lo) / (d_hi - d_lo);

    let mut s = svg_open(&format!("{} against operating time", indicator.id()));
    axes(&mut s, "Operating time (h)", &format!("{} ({}, log scale)", indicator.id(), indicator.unit()));
    let mut d = d_lo;
    while d <= d_hi {
        let y = py(10f64.powf(d));
        let _ = writeln!(
            s,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#dddddd\"/>",
            c(LEFT),
            c(y),
            c(WIDTH - RIGHT),
            c(y)
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            c(LEFT - 6.0),
            c(y + 4.0),
            display(10f64.powf(d))
        );
        d += 1.0;
    }
    for k in 0..=4 {
        let h = h_max * k as f64 / 4.0;
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            c(px(h)),
            c(HEIGHT - BOTTOM + 16.0),
            display(h)
        );
    }
    let mut entries = Vec::new();
    for (k, ser) in series.iter().enumerate() {
        let color = LINE_COLORS[k % LINE_COLORS.len()];
        let points: Vec<String> = (0..ser.hours.len())
            .filter(|&i| ser.total(indicator, i) > 0.0)
            .map(|i| format!("{},{}", c(px(ser.hours[i])), c(py(ser.total(indicator, i)))))
            .collect();
        let _ = writeln!(
            s,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>",
            points.join(" ")
        );
        for p in &points {
            let (x, y) = p.split_once(',').expect("point");
            let _ = writeln!(s, "<circle cx=\"{x}\" cy=\"{y}\" r=\"3\" fill=\"{color}\"/>");
        }
        entries.push((ser.scenario.clone(), color));
    }
    legend(&mut s, &entries, &format!("Scenario ({})", indicator.unit()));
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_digit_display() {
        assert_eq!(display(112.475), "112.475");
        assert_eq!(display(12_629.333333), "12629.3");
        assert_eq!(display(175.0), "175");
        assert_eq!(display(0.0), "0");
        assert_eq!(display(-2.5), "-2.5");
        assert_eq!(display(1e-7), "1e-7");
        assert_eq!(display(123_456_789.0), "123457000");
        assert_eq!(display(999_999.5), "1000000");
        assert_eq!(display(2.5e20), "2.5e20");
    }

    #[test]
    fn exact_ties_go_to_even() {
        // Exactly representable halves.
        assert_eq!(format_sig(0.125, 2), "0.12");
        assert_eq!(format_sig(0.375, 2), "0.38");
        assert_eq!(format_sig(2.5, 1), "2");
        assert_eq!(format_sig(3.5, 1), "4");
        assert_eq!(format_sig(1_234_565.0, 6), "1234560");
        assert_eq!(format_sig(1_234_575.0, 6), "1234580");
    }

    #[test]
    fn csv_numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 12_629.333333333334, 1e-300, 6.02e23, -0.0] {
            let back: f64 = csv_number(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits());
        }
    }

    fn series(id: &str, scale: f64) -> SweepSeries {
        SweepSeries {
            scenario: id.to_string(),
            hours: vec![1000.0],
            values: vec![[
                Impacts([1.0 * scale; 3]),
                Impacts([0.1 * scale; 3]),
                Impacts([0.5 * scale; 3]),
                Impacts([0.1 * scale; 3]),
            ]],
        }
    }

    #[test]
    fn one_bar_four_segments() {
        let svg = stacked_bars_svg(&series("A", 1.0), Indicator::ClimateChange).unwrap();
        assert_eq!(svg.matches("<rect x=").count(), 4 + 4); // segments + legend swatches
        assert!(svg.contains("t CO2eq"));
        assert_eq!(svg, stacked_bars_svg(&series("A", 1.0), Indicator::ClimateChange).unwrap());
    }

    #[test]
    fn log_scale_keeps_both_lines_in_frame() {
        let svg = log_lines_svg(&[series("A", 1.0), series("B", 100.0)], Indicator::Ecosystems).unwrap();
        let ys: Vec<f64> = svg
            .lines()
            .filter(|l| l.starts_with("<circle"))
            .map(|l| l.split("cy=\"").nth(1).unwrap().split('"').next().unwrap().parse().unwrap())
            .collect();
        assert_eq!(ys.len(), 2);
        for y in ys {
            assert!((TOP..=HEIGHT - BOTTOM).contains(&y), "{y}");
        }
    }

    #[test]
    fn empty_series_rejected() {
        let mut s = series("A", 1.0);
        s.hours.clear();
        s.values.clear();
        assert_eq!(stacked_bars_svg(&s, Indicator::HumanHealth), Err(LcaError::EmptySeries));
        assert_eq!(log_lines_svg(&[], Indicator::HumanHealth), Err(LcaError::EmptySeries));
    }

    #[test]
    fn every_csv_row_has_a_unit() {
        let csv = phase_impacts_csv(&[(
            "A".into(),
            10.0,
            vec![PhaseImpact {
                phase: Phase::Use,
                impacts: Impacts([1.0, 2.0, 3.0]),
            }],
        )]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("scenario,phase,indicator,hours,value,unit"));
        for l in lines {
            assert!(!l.ends_with(','), "{l}");
        }
    }
}
