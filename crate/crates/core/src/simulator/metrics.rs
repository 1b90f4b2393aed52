use std::fmt::Write as _;
use std::io::{self, Write};

/// Test metrics of the global model after a change.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub wall_time: f64,
    pub global_epoch: u64,
    pub test_accuracy: f64,
    pub test_loss: f64,
    pub strategy: String,
}

pub const METRICS_HEADER: &str = "time_s,epoch,strategy,accuracy,loss";

/// Formats `x` with six significant digits, `%g` style.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    // The exponent after rounding to six digits decides the notation.
    let sci = format!("{x:.5e}");
    let (mantissa, e) = sci.split_once('e').unwrap();
    let exp: i32 = e.parse().unwrap();
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let mut s = format!("{x:.decimals$}");
        if s.contains('.') {
            s = s.trim_end_matches('0').trim_end_matches('.').to_string();
        }
        s
    } else {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        let mut s = String::new();
        write!(s, "{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs()).unwrap();
        s
    }
}

pub fn write_metrics_csv<W: Write>(records: &[MetricsRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{METRICS_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{}",
            format_sig6(r.wall_time),
            r.global_epoch,
            r.strategy,
            format_sig6(r.test_accuracy),
            format_sig6(r.test_loss)
        )?;
    }
    Ok(())
}

pub fn metrics_csv_string(records: &[MetricsRecord]) -> String {
    let mut buf = Vec::new();
    write_metrics_csv(records, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}
