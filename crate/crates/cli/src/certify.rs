//! `certify`: run the rigorous positivity check and write its certificate.

use std::path::Path;

use dglab_core::certifier::{certify, Certificate, CertifyParams};

use crate::output::{self, fmt_float, Series};
use crate::{ensure_dir, CliError};

pub const CERTIFICATE_FILE: &str = "certificate.json";
pub const PLOT_FILE: &str = "g_lower.svg";

pub fn plot(cert: &Certificate) -> String {
    let series = [
        Series {
            name: "lower bound",
            points: cert.g_lower.clone(),
        },
        Series {
            name: "upper bound",
            points: cert.g_upper.clone(),
        },
    ];
    output::line_plot("rigorous bounds on G(xi)", "xi", &series, true)
}

/// Writes `certificate.json` and the bound plot; the exit code is the verdict's.
pub fn cmd_certify(params: &CertifyParams, out_dir: &Path) -> Result<(Certificate, i32), CliError> {
    let cert = certify(params)?;
    let dir = ensure_dir(out_dir)?;
    output::write_json(&dir.join(CERTIFICATE_FILE), &cert)?;
    let svg = dir.join(PLOT_FILE);
    std::fs::write(&svg, plot(&cert)).map_err(|e| CliError::io(&svg, e))?;
    let min_lower = cert.g_lower.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    println!(
        "verdict={:?} points={} min_lower={} b1_upper={} margins=({}, {}, {})",
        cert.verdict,
        cert.g_lower.len(),
        fmt_float(min_lower),
        fmt_float(cert.b1_upper),
        fmt_float(cert.ver1.margin),
        fmt_float(cert.ver2.margin),
        fmt_float(cert.ver3.margin)
    );
    let code = cert.verdict.exit_code();
    Ok((cert, code))
}
