//! Flat `key = value` configuration files.
//!
//! Blank lines and `#` comments are ignored. Keys are case-sensitive.
//! Powers carry a `_dbm` suffix; everything else is SI (metres, seconds,
//! bps/Hz). Keys left out take the reference defaults.
//!
//! | key        | meaning                               | default |
//! |------------|---------------------------------------|---------|
//! | `P_b_dbm`  | beacon transmit power                 | 33      |
//! | `M_dbm`    | ST transmit power                     | 20      |
//! | `P_c_dbm`  | EH-circuit power                      | −30     |
//! | `N0_dbm`   | noise power                           | −101    |
//! | `eta`      | conversion efficiency                 | 0.85    |
//! | `tau`      | switching time                        | 0.5     |
//! | `T`        | frame duration (s)                    | 1       |
//! | `R`        | target rate (bps/Hz)                  | 1       |
//! | `alpha`    | PB→ST path-loss exponent              | 2.4     |
//! | `alpha_s`  | ST→SR path-loss exponent              | 3       |
//! | `d_min`    | guard radius (m)                      | 1       |
//! | `d_max`    | coverage radius (m)                   | 15      |
//! | `d_STSR`   | ST→SR distance (m)                    | 30      |
//! | `rho`      | amplifier inefficiency                | 1.2     |
//! | `ideal`    | ignore `rho` and `P_c`                | true    |
//! | `K`, `m`   | PB→ST Rician factor and shadowing     | 7, 20   |
//! | `mu` / `L` | PB→ST clusters = beacon antennas      | 1       |
//! | `K_s`, `mu_s`, `m_s` | ST→SR fading                | 7, 1, 20 |

use std::collections::HashMap;
use std::path::Path;

use crate::analysis::SystemConfig;
use crate::error::{Error, Result};
use crate::fading::FadingParams;
use crate::numerics::dbm_to_watts;

const KNOWN_KEYS: &[&str] = &[
    "P_b_dbm", "M_dbm", "P_c_dbm", "N0_dbm", "eta", "tau", "T", "R", "alpha", "alpha_s", "d_min",
    "d_max", "d_STSR", "rho", "ideal", "K", "mu", "L", "m", "K_s", "mu_s", "m_s",
];

pub fn load_config(path: impl AsRef<Path>) -> Result<SystemConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

struct Entries(HashMap<String, (usize, String)>);

impl Entries {
    fn float(&self, key: &str, default: f64) -> Result<f64> {
        match self.0.get(key) {
            None => Ok(default),
            Some((line, raw)) => raw.parse::<f64>().map_err(|_| Error::Parse {
                line: *line,
                message: format!("`{key}` expects a number, got `{raw}`"),
            }),
        }
    }

    fn uint(&self, key: &str, default: u32) -> Result<u32> {
        match self.0.get(key) {
            None => Ok(default),
            Some((line, raw)) => raw.parse::<u32>().map_err(|_| Error::Parse {
                line: *line,
                message: format!("`{key}` expects a nonnegative integer, got `{raw}`"),
            }),
        }
    }

    fn boolean(&self, key: &str, default: bool) -> Result<bool> {
        match self.0.get(key) {
            None => Ok(default),
            Some((line, raw)) => match raw.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(Error::Parse {
                    line: *line,
                    message: format!("`{key}` expects true or false, got `{raw}`"),
                }),
            },
        }
    }
}

pub fn parse_config(text: &str) -> Result<SystemConfig> {
    let mut entries = HashMap::new();
    for (index, raw_line) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("unknown key `{key}`"),
            });
        }
        if value.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("`{key}` has no value"),
            });
        }
        if let Some((first, _)) = entries.insert(key.to_string(), (line_no, value.to_string())) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("`{key}` already set on line {first}"),
            });
        }
    }
    if entries.contains_key("mu") && entries.contains_key("L") {
        let (line, _) = entries["L"];
        return Err(Error::Parse {
            line,
            message: "`L` and `mu` name the same parameter; set only one".into(),
        });
    }
    let e = Entries(entries);
    let defaults = SystemConfig::reference_defaults();
    let mu = if e.0.contains_key("L") {
        e.uint("L", 1)?
    } else {
        e.uint("mu", 1)?
    };
    let fading_pb_st = FadingParams::new(e.float("K", 7.0)?, mu, e.uint("m", 20)?)?;
    let fading_st_sr =
        FadingParams::new(e.float("K_s", 7.0)?, e.uint("mu_s", 1)?, e.uint("m_s", 20)?)?;
    let cfg = SystemConfig {
        p_b: dbm_to_watts(e.float("P_b_dbm", 33.0)?),
        tx_power: dbm_to_watts(e.float("M_dbm", 20.0)?),
        eta: e.float("eta", defaults.eta)?,
        tau: e.float("tau", defaults.tau)?,
        frame: e.float("T", defaults.frame)?,
        n0: dbm_to_watts(e.float("N0_dbm", -101.0)?),
        rate: e.float("R", defaults.rate)?,
        alpha: e.float("alpha", defaults.alpha)?,
        alpha_s: e.float("alpha_s", defaults.alpha_s)?,
        d_min: e.float("d_min", defaults.d_min)?,
        d_max: e.float("d_max", defaults.d_max)?,
        d_stsr: e.float("d_STSR", defaults.d_stsr)?,
        rho: e.float("rho", defaults.rho)?,
        p_c: dbm_to_watts(e.float("P_c_dbm", -30.0)?),
        ideal: e.boolean("ideal", defaults.ideal)?,
        fading_pb_st,
        fading_st_sr,
    };
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(
            parse_config("").unwrap(),
            SystemConfig::reference_defaults()
        );
        assert_eq!(
            parse_config("# nothing\n\n   \n").unwrap(),
            SystemConfig::reference_defaults()
        );
    }

    #[test]
    fn imperfection_energy() {
        let cfg = parse_config("rho = 1.2\nP_c_dbm = -30\nM_dbm = 20\nT = 1e-3\nideal = false\n")
            .unwrap();
        let mj = cfg.buffer_capacity() * 1e3;
        assert!((0.118..=0.122).contains(&mj), "{mj}");
    }

    #[test]
    fn mu_above_m_is_invalid() {
        let err = parse_config("m = 5\nmu = 16\n").unwrap_err();
        assert!(
            matches!(err, Error::InvalidConfig(ref s) if s.contains("mu <= m")),
            "{err}"
        );
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse_config("eta = 0.5\n\nbogus line\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_config("tau = abc") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_config("speed = 3"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_config("K = 1\nK = 2"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_config("L = 2\nmu = 2"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_config("ideal = maybe"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn overrides_and_comments() {
        let cfg = parse_config("L = 16 # beacon array\nR=3\nd_STSR = 40\n").unwrap();
        assert_eq!(cfg.fading_pb_st.mu(), 16);
        assert_eq!(cfg.fading_st_sr.mu(), 1);
        assert_eq!(cfg.rate, 3.0);
        assert_eq!(cfg.d_stsr, 40.0);
    }

    #[test]
    fn validation_errors_surface() {
        assert!(matches!(
            parse_config("tau = 1.5"),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            parse_config("d_min = 20"),
            Err(Error::InvalidConfig(_))
        ));
    }
}
