use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::retrieval_eval::ExperimentReport;

/// Writes the reports as a pretty-printed JSON array.
pub fn save_reports(path: impl AsRef<Path>, reports: &[ExperimentReport]) -> Result<()> {
    let json = serde_json::to_string_pretty(reports)
        .map_err(|e| Error::format(format!("cannot encode reports: {e}")))?;
    std::fs::write(path, json + "\n")?;
    Ok(())
}

/// Per-trial rows `trial,method,map`, trial-major.
pub fn write_trial_csv<W: Write>(mut writer: W, reports: &[ExperimentReport]) -> Result<()> {
    writeln!(writer, "trial,method,map")?;
    let trials = reports
        .iter()
        .map(|r| r.per_trial_map.len())
        .max()
        .unwrap_or(0);
    for t in 0..trials {
        for r in reports {
            if let Some(map) = r.per_trial_map.get(t) {
                writeln!(writer, "{t},{},{map}", r.method)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::Method;

    #[test]
    fn csv_rows_are_trial_major() {
        let a = ExperimentReport::from_trials(Method::Brs, vec![0.5, 0.25], "f".into());
        let b = ExperimentReport::from_trials(Method::Rrs, vec![1.0, 0.75], "f".into());
        let mut out = Vec::new();
        write_trial_csv(&mut out, &[a, b]).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "trial,method,map\n0,BRS,0.5\n0,RRS,1\n1,BRS,0.25\n1,RRS,0.75\n"
        );
    }
}
