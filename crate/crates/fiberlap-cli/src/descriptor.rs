//! Compact textual descriptors for momentum-space test functions.
//!
//! A descriptor names a coefficient profile and its parameters in one
//! flag-friendly token, `kind:key=value,key=value`:
//!
//! * `bump:n=1,k0=1.5,w=0.3,step=0.02` — Gaussian `e^{-(k-k0)²/w²}`;
//! * `cutoff:n=1,lo=0,hi=1,step=0.01` — C∞ bump supported on `[lo, hi]`.
//!
//! Appending `norm=1` rescales the profile to unit `L²(dk)` mass.

use fiberlap::ModeFunction;
use num_complex::Complex64;

/// Parsed but not yet sampled descriptor; keeps the original token so
/// configuration echoes stay byte-identical to what the user wrote.
#[derive(Debug, Clone)]
pub struct ModeSpec {
    token: String,
    kind: Kind,
    band: usize,
    normalize: bool,
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Bump { k0: f64, width: f64, step: f64 },
    Cutoff { lo: f64, hi: f64, step: f64 },
}

impl serde::Serialize for ModeSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.token)
    }
}

fn parse_f64(key: &str, val: &str) -> Result<f64, String> {
    val.parse()
        .map_err(|_| format!("descriptor key `{key}` needs a number, got `{val}`"))
}

impl ModeSpec {
    pub fn parse(token: &str) -> Result<ModeSpec, String> {
        let (kind_name, rest) = token
            .split_once(':')
            .ok_or_else(|| format!("descriptor `{token}` is missing `kind:`"))?;
        let mut band = 1usize;
        let mut normalize = false;
        let mut k0 = 1.0f64;
        let mut width = 0.3f64;
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        let mut step = match kind_name {
            "bump" => 0.02,
            "cutoff" => 0.01,
            other => return Err(format!("unknown descriptor kind `{other}`")),
        };
        for pair in rest.split(',').filter(|p| !p.is_empty()) {
            let (key, val) = pair
                .split_once('=')
                .ok_or_else(|| format!("descriptor entry `{pair}` is not `key=value`"))?;
            match (kind_name, key) {
                (_, "n") => {
                    band = val
                        .parse()
                        .map_err(|_| format!("band index `{val}` is not a positive integer"))?;
                }
                (_, "norm") => normalize = val == "1" || val == "true",
                (_, "step") => step = parse_f64(key, val)?,
                ("bump", "k0") => k0 = parse_f64(key, val)?,
                ("bump", "w") => width = parse_f64(key, val)?,
                ("cutoff", "lo") => lo = parse_f64(key, val)?,
                ("cutoff", "hi") => hi = parse_f64(key, val)?,
                _ => return Err(format!("descriptor key `{key}` is not valid for `{kind_name}`")),
            }
        }
        if band == 0 || band > 8 {
            return Err(format!("band index must lie in 1..=8, got {band}"));
        }
        let kind = match kind_name {
            "bump" => Kind::Bump { k0, width, step },
            _ => Kind::Cutoff { lo, hi, step },
        };
        Ok(ModeSpec {
            token: token.to_string(),
            kind,
            band,
            normalize,
        })
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn token(&self) -> &str {
        &self.token
    }

    /// Sample the descriptor into a concrete coefficient profile.
    pub fn build(&self) -> Result<ModeFunction, fiberlap::Error> {
        let raw = match self.kind {
            Kind::Bump { k0, width, step } => {
                ModeFunction::gaussian_bump(self.band, k0, width, step)?
            }
            Kind::Cutoff { lo, hi, step } => ModeFunction::cutoff_bump(self.band, lo, hi, step)?,
        };
        if self.normalize {
            let mass = raw.norm_sq();
            if mass <= 0.0 {
                return Err(fiberlap::Error::InvalidParameter(
                    "cannot normalize a vanishing profile".into(),
                ));
            }
            Ok(raw.scale(Complex64::new(mass.sqrt().recip(), 0.0)))
        } else {
            Ok(raw)
        }
    }
}
