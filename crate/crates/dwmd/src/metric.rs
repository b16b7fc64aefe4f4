//! Discrepancy between two CSV feature tables, for the `discrepancy` command.

use dwmd_core::discrepancy::{cmd, dwmd, mmd_rbf, smd, Bandwidth, DiscrepancyReport, DwmdConfig, IntervalWidth, TruncationBound};
use dwmd_core::SampleMatrix;
use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Dwmd,
    Smd,
    Cmd,
    Mmd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricOptions {
    pub dwmd: DwmdConfig,
    pub cmd_width: IntervalWidth,
    pub bandwidth: Bandwidth,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricOutput {
    pub metric: Metric,
    pub total: f64,
    /// Present for the moment-series metrics.
    pub report: Option<DiscrepancyReport>,
}

/// CMD uses `dwmd.n` as its highest order.
pub fn compute(metric: Metric, source: &SampleMatrix, target: &SampleMatrix, opts: &MetricOptions) -> Result<MetricOutput> {
    let (total, report) = match metric {
        Metric::Dwmd | Metric::Smd => {
            let r = if metric == Metric::Dwmd {
                dwmd(source, target, &opts.dwmd)?
            } else {
                smd(source, target, &opts.dwmd)?
            };
            (r.total, Some(r))
        }
        Metric::Cmd => (cmd(source, target, opts.dwmd.n, opts.cmd_width)?, None),
        Metric::Mmd => (mmd_rbf(source, target, opts.bandwidth)?, None),
    };
    Ok(MetricOutput { metric, total, report })
}

/// `%g`-style rendering with six significant digits.
pub fn sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{}", if v == 0.0 { 0.0 } else { v });
    }
    let exp = v.abs().log10().floor() as i32;
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-5..6).contains(&exp) {
        trim(format!("{:.*}", (5 - exp) as usize, v))
    } else {
        let s = format!("{v:.5e}");
        let (mantissa, e) = s.split_once('e').unwrap();
        format!("{}e{e}", trim(mantissa.to_string()))
    }
}

/// One `key value` pair per line: `metric`, `total`, then for DWMD and SMD
/// `order <k> <total>` lines and `truncation_bound <value|divergent>`.
pub fn render_text(out: &MetricOutput) -> String {
    let name = serde_json::to_value(out.metric).unwrap();
    let mut s = format!("metric {}\ntotal {}\n", name.as_str().unwrap(), sig6(out.total));
    if let Some(r) = &out.report {
        for (k, v) in r.per_order_totals.iter().enumerate() {
            s.push_str(&format!("order {} {}\n", k + 1, sig6(*v)));
        }
        match r.truncation_bound {
            TruncationBound::Bounded { bound, .. } => s.push_str(&format!("truncation_bound {}\n", sig6(bound))),
            TruncationBound::Divergent => s.push_str("truncation_bound divergent\n"),
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.479_252_118_483_862), "0.479252");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(-0.0), "0");
        assert_eq!(sig6(1.0 / 12.0), "0.0833333");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(2.5), "2.5");
        assert_eq!(sig6(1234567.0), "1.23457e6");
        assert_eq!(sig6(1.5e-9), "1.5e-9");
        assert_eq!(sig6(f64::INFINITY), "inf");
    }

    #[test]
    fn text_lists_orders_and_bound() {
        let s = SampleMatrix::from_rows(&[[-1.0], [1.0]]).unwrap();
        let t = SampleMatrix::from_rows(&[[0.0], [2.0]]).unwrap();
        let opts = MetricOptions {
            dwmd: DwmdConfig { n: 2, alpha: 0.0, ..DwmdConfig::default() },
            cmd_width: IntervalWidth::PooledRange,
            bandwidth: Bandwidth::MedianHeuristic,
        };
        let out = compute(Metric::Dwmd, &s, &t, &opts).unwrap();
        let text = render_text(&out);
        assert!(text.starts_with("metric dwmd\ntotal 0.479252\norder 1 "), "{text}");
        assert!(text.ends_with("truncation_bound 0.25\n"), "{text}");
        let cmd_out = render_text(&compute(Metric::Cmd, &s, &t, &opts).unwrap());
        assert_eq!(cmd_out.lines().count(), 2);
    }
}
