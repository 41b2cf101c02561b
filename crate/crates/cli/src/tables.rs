//! Plain-text tables: the yields format shared by `intensity-scan`,
//! `analyze` and `fit`, and the fit report.

use std::fmt::Write as _;

use tdcis::analysis::{cross_section_from_yield, fluence, order_fit, IonizationRecord};
use tdcis::{Error, Result};

/// Rows of `photon_eV intensity_W/cm2 fwhm_fs P_1 [P_2 ...]`; column
/// `3 + N` is the N-photon yield. `#` starts a comment.
pub fn parse_yields(text: &str) -> Result<Vec<IonizationRecord>> {
    let mut out: Vec<IonizationRecord> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: String| Error::Parse { line: k + 1, msg };
        let cols = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|c| !c.is_empty())
            .map(|c| c.parse::<f64>().map_err(|e| bad(format!("{c}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if cols.len() < 4 {
            return Err(bad(format!("expected at least 4 columns, found {}", cols.len())));
        }
        if let Some(first) = out.first() {
            if first.yields.len() != cols.len() - 3 {
                return Err(bad("column count differs from the first row".into()));
            }
        }
        let rec = IonizationRecord::new(cols[0], cols[1], cols[2], cols[3..].to_vec()).map_err(|e| bad(e.to_string()))?;
        out.push(rec);
    }
    if out.len() < 3 {
        return Err(Error::Config(format!("a yields table needs at least 3 rows, found {}", out.len())));
    }
    Ok(out)
}

pub fn write_yields(records: &[IonizationRecord], header: &str) -> String {
    let mut s = String::new();
    for line in header.lines() {
        let _ = writeln!(s, "# {line}");
    }
    let n = records.first().map_or(0, |r| r.yields.len());
    let cols: Vec<String> = (1..=n).map(|k| format!("P_{k}")).collect();
    let _ = writeln!(s, "# photon_eV intensity_Wcm2 fwhm_fs {}", cols.join(" "));
    for r in records {
        let _ = write!(s, "{:.10e} {:.10e} {:.10e}", r.photon_ev, r.intensity_wcm2, r.tau_fs);
        for y in &r.yields {
            let _ = write!(s, " {y:.10e}");
        }
        s.push('\n');
    }
    s
}

/// Fitted slope per order plus the generalized cross section of every
/// record. Returns the report text and the slopes.
pub fn fit_report(records: &[IonizationRecord], orders: &[u32]) -> Result<(String, Vec<f64>)> {
    let mut s = String::from("# order slope stderr spans_decade perturbative\n");
    let mut slopes = Vec::new();
    for &n in orders {
        let f = order_fit(records, n)?;
        let _ = writeln!(s, "{n} {:.6} {:.3e} {} {}", f.slope, f.stderr, f.spans_decade, f.perturbative);
        slopes.push(f.slope);
    }
    let _ = writeln!(s, "# cross sections: order intensity_Wcm2 sigma_cgs(cm^2N s^(N-1)) perturbative");
    for r in records {
        let pulse = r.pulse()?;
        for &n in orders {
            let cs = cross_section_from_yield(r.yields[n as usize - 1], fluence(&pulse, n)?, n)?;
            let _ = writeln!(s, "{n} {:.6e} {:.6e} {}", r.intensity_wcm2, cs.cgs, cs.perturbative);
        }
    }
    Ok((s, slopes))
}
