//! Herd-immunity table: threshold, limit fraction and the share of
//! infections occurring past the threshold, per reproduction number.

use crate::error::CliError;
use crate::output::{fmt12, write_csv};
use lockdown_opt_core::final_size::s_infinity_from_state;
use lockdown_opt_core::EpidemicParams;
use std::path::Path;

#[derive(Debug, Clone, Copy)]
pub struct HerdRow {
    pub r0: f64,
    pub s_herd: f64,
    /// Limit of the susceptible fraction for an initially naive population.
    pub s_inf: f64,
    /// `(s_herd - s_inf) / (1 - s_inf)`: share of all infections that occur
    /// after the threshold is crossed.
    pub after_threshold_ratio: f64,
}

/// Compute the table rows for the given reproduction numbers and initial
/// susceptible fraction (the infected take up the remainder).
///
/// Reproduction numbers at or below 1 are rejected; just above 1 the table
/// degenerates (threshold and limit both approach 1).
pub fn herd_table(r0_values: &[f64], s0: f64) -> Result<Vec<HerdRow>, CliError> {
    if r0_values.is_empty() {
        return Err(CliError::config("r0", "need at least one value"));
    }
    if !(0.0..1.0).contains(&s0) || s0 <= 0.5 {
        return Err(CliError::config(
            "s0",
            format!("initial susceptible fraction should be close to 1, got {s0}"),
        ));
    }
    let mut rows = Vec::with_capacity(r0_values.len());
    for &r0 in r0_values {
        if !r0.is_finite() || r0 <= 1.0 {
            return Err(CliError::config(
                "r0",
                format!("reproduction number must exceed 1, got {r0}"),
            ));
        }
        // only the ratio beta/nu matters here
        let params = EpidemicParams::new(0.1 * r0, 0.1).map_err(CliError::Solver)?;
        let s_herd = params.herd_threshold();
        let s_inf = s_infinity_from_state(&params, s0, 1.0 - s0)?;
        rows.push(HerdRow {
            r0,
            s_herd,
            s_inf,
            after_threshold_ratio: (s_herd - s_inf) / (1.0 - s_inf),
        });
    }
    Ok(rows)
}

pub fn write_herd_csv(path: &Path, rows: &[HerdRow]) -> std::io::Result<()> {
    let lines: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{}",
                fmt12(r.r0),
                fmt12(r.s_herd),
                fmt12(r.s_inf),
                fmt12(r.after_threshold_ratio)
            )
        })
        .collect();
    write_csv(path, "r0,s_herd,s_inf,after_threshold_ratio", &lines)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bold_column_reproduces_the_reference_row() {
        let rows = herd_table(&[2.9], 1.0 - 1e-6).unwrap();
        let row = rows[0];
        assert_eq!(format!("{:.2}", row.s_herd), "0.34");
        assert_eq!(format!("{:.3}", row.s_inf), "0.067");
        assert_eq!(format!("{:.0}", 100.0 * row.after_threshold_ratio), "30");
    }

    #[test]
    fn subcritical_rows_are_rejected() {
        assert!(herd_table(&[1.0], 1.0 - 1e-6).is_err());
        assert!(herd_table(&[0.8], 1.0 - 1e-6).is_err());
        assert!(herd_table(&[], 1.0 - 1e-6).is_err());
    }
}
