//! Resolved run configuration: flags override config-file values override
//! defaults; the resolved set is embedded in every output.

use serde::{Deserialize, Serialize};

use crate::CliError;

/// Physical constants and shared numerics, after precedence resolution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Resolved {
    pub nu: f64,
    pub g: f64,
    pub l0: f64,
    pub rho_a: f64,
    pub format: String,
    pub jobs: usize,
}

/// Optional config-file values (same keys as the global flags).
#[derive(Debug, Clone, Default, Deserialize)]
pub struct FileConfig {
    pub nu: Option<f64>,
    pub g: Option<f64>,
    pub l0: Option<f64>,
    pub rho_a: Option<f64>,
    pub format: Option<String>,
    pub jobs: Option<usize>,
}

pub fn load_file(path: &str) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::Io)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("config file {path}: {e}")))
}

/// flags > config file > defaults
pub fn resolve(
    file: &FileConfig,
    nu: Option<f64>,
    g: Option<f64>,
    l0: Option<f64>,
    rho_a: Option<f64>,
    format: Option<String>,
    jobs: Option<usize>,
) -> Resolved {
    Resolved {
        nu: nu.or(file.nu).unwrap_or(2.0),
        g: g.or(file.g).unwrap_or(1.0),
        l0: l0.or(file.l0).unwrap_or(1.0),
        rho_a: rho_a.or(file.rho_a).unwrap_or(1.0),
        format: format
            .or(file.format.clone())
            .unwrap_or_else(|| "csv".into()),
        jobs: jobs.or(file.jobs).unwrap_or(1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let file = FileConfig {
            nu: Some(3.0),
            g: None,
            ..Default::default()
        };
        let r = resolve(&file, Some(1.5), None, None, None, None, None);
        assert_eq!(r.nu, 1.5); // flag wins
        assert_eq!(r.g, 1.0); // default
        let r = resolve(&file, None, None, None, None, None, None);
        assert_eq!(r.nu, 3.0); // file wins over default
    }
}
