//! Per-stage CSV export.

use std::fmt::Write as _;

use plc_core::bounds::degree_recurrence_bound;
use plc_core::StageStats;

pub const CSV_HEADER: &str = "k,n_k,m_k,delta_k,Delta_k,deltabar_k,Deltabar_k,parallel_pairs_skipped,max_coord_bits,thm4_bound,intersect_ms,connect_ms";

/// One row per stage. `thm4_bound` is the lower bound the previous stage
/// imposes on this stage's minimum point degree; empty for the first row.
/// `parallel_pairs_skipped` is empty when unknown.
pub fn stats_csv(rows: &[StageStats]) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    let mut prev: Option<&StageStats> = None;
    for s in rows {
        let d = &s.degrees;
        let bound = prev
            .filter(|p| p.k + 1 == s.k)
            .map(|p| degree_recurrence_bound(p).to_string())
            .unwrap_or_default();
        let parallel = s.parallel_pairs.map(|p| p.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{:.3},{:.3}",
            s.k,
            d.n,
            d.m,
            d.min_point_degree,
            d.max_point_degree,
            d.min_line_degree,
            d.max_line_degree,
            parallel,
            s.max_coord_bits,
            bound,
            s.intersect_ms,
            s.connect_ms
        )
        .unwrap();
        prev = Some(s);
    }
    out
}

/// The CSV with the two wall-time columns removed.
pub fn without_timings(csv: &str) -> String {
    csv.lines()
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            cols[..cols.len().saturating_sub(2)].join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use plc_core::{Budget, Engine, ParallelPolicy, StartConfig};

    #[test]
    fn canonical_rows() {
        let e = Engine::new(ParallelPolicy::Skip, Budget::default(), 1);
        let c1 = e.init(&StartConfig::canonical()).unwrap();
        let (c2, s2) = e.run_stage(&c1).unwrap();
        let (_, s3) = e.run_stage(&c2).unwrap();
        let csv = stats_csv(&[StageStats::of(&c1), s2, s3]);
        let trimmed = without_timings(&csv);
        let lines: Vec<&str> = trimmed.lines().collect();
        assert_eq!(lines[0], "k,n_k,m_k,delta_k,Delta_k,deltabar_k,Deltabar_k,parallel_pairs_skipped,max_coord_bits,thm4_bound");
        assert_eq!(lines[1], "1,4,6,3,3,2,2,,3,");
        assert_eq!(lines[2], "2,7,9,3,4,2,3,0,7,3");
        assert!(lines[3].starts_with("3,13,25,4,"));
        assert_eq!(csv.lines().next().unwrap().split(',').count(), 12);
    }
}
