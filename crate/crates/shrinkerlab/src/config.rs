//! Small text grammars: the catalog config file and the CLI range, domain
//! and field specs. All parsers are strict (unknown keys rejected) and
//! bounded (no grammar can demand unbounded allocation), since they accept
//! untrusted input.

use crate::catalog::{self, ShrinkerKind, ShrinkerParams};
use crate::error::{Error, Result};
use crate::reilly::{AmbientField, DomainSpec};

/// Exemplar specification as read from a config file.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogSpec {
    pub kind: ShrinkerKind,
    pub radius: Option<f64>,
    pub offset: [f64; 3],
    pub resolution: u32,
    pub halflength: f64,
}

impl CatalogSpec {
    pub fn defaults(kind: ShrinkerKind) -> Self {
        Self {
            kind,
            radius: None,
            offset: [0.0; 3],
            resolution: 4,
            halflength: catalog::DEFAULT_HALFLENGTH,
        }
    }

    pub fn effective_radius(&self) -> f64 {
        self.radius.unwrap_or(match self.kind {
            ShrinkerKind::Sphere => catalog::EXACT_SPHERE_RADIUS,
            ShrinkerKind::Cylinder => catalog::EXACT_CYLINDER_RADIUS,
            ShrinkerKind::Plane => 0.0,
        })
    }

    pub fn build(&self) -> Result<catalog::AnalyticShrinker> {
        catalog::make_shrinker(
            self.kind,
            ShrinkerParams {
                radius: self.effective_radius(),
                offset: self.offset,
            },
        )
    }
}

pub fn parse_kind(s: &str) -> Result<ShrinkerKind> {
    match s.trim().to_ascii_lowercase().as_str() {
        "plane" => Ok(ShrinkerKind::Plane),
        "sphere" => Ok(ShrinkerKind::Sphere),
        "cylinder" => Ok(ShrinkerKind::Cylinder),
        other => Err(Error::Parse(format!(
            "unknown catalog kind `{other}` (expected plane|sphere|cylinder)"
        ))),
    }
}

/// Parse a `key = value` catalog config. `#` starts a comment. Keys:
/// `kind` (required), `radius`, `offset` (three comma-separated reals),
/// `resolution`, `halflength`. Unknown keys are rejected.
pub fn parse_catalog_config(text: &str) -> Result<CatalogSpec> {
    let mut kind: Option<ShrinkerKind> = None;
    let mut radius: Option<f64> = None;
    let mut offset = [0.0f64; 3];
    let mut resolution: u32 = 4;
    let mut halflength: f64 = catalog::DEFAULT_HALFLENGTH;

    for (no, raw) in text.lines().enumerate() {
        let no = no + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!("line {no}: expected `key = value`"))
        })?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "kind" => kind = Some(parse_kind(value)?),
            "radius" => {
                radius = Some(parse_float(value, no)?);
            }
            "offset" => {
                let parts: Vec<&str> = value.split(',').collect();
                if parts.len() != 3 {
                    return Err(Error::Parse(format!(
                        "line {no}: offset needs three comma-separated values"
                    )));
                }
                for (slot, p) in offset.iter_mut().zip(&parts) {
                    *slot = parse_float(p, no)?;
                }
            }
            "resolution" => {
                resolution = value.parse().map_err(|_| {
                    Error::Parse(format!("line {no}: bad resolution `{value}`"))
                })?;
                if resolution > 16 {
                    return Err(Error::Parse(format!(
                        "line {no}: resolution {resolution} too large"
                    )));
                }
            }
            "halflength" => {
                halflength = parse_float(value, no)?;
                if !(halflength > 0.0) || halflength > 1e6 {
                    return Err(Error::Parse(format!(
                        "line {no}: halflength {halflength} out of range"
                    )));
                }
            }
            other => {
                return Err(Error::Parse(format!("line {no}: unknown key `{other}`")));
            }
        }
    }

    let kind = kind.ok_or_else(|| Error::Parse("config is missing `kind`".into()))?;
    Ok(CatalogSpec {
        kind,
        radius,
        offset,
        resolution,
        halflength,
    })
}

fn parse_float(s: &str, line: usize) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: bad number `{s}`")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("line {line}: non-finite number `{s}`")));
    }
    Ok(v)
}

/// Largest grid a range spec may produce.
pub const MAX_RANGE_POINTS: usize = 1_000_000;

/// Parse `a:b:step` into an inclusive grid.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("range `{s}` must be a:b:step")));
    }
    let a = parse_float(parts[0], 0)?;
    let b = parse_float(parts[1], 0)?;
    let step = parse_float(parts[2], 0)?;
    if !(step > 0.0) {
        return Err(Error::Parse(format!("range step must be positive in `{s}`")));
    }
    if b < a {
        return Err(Error::Parse(format!("range `{s}` is empty (b < a)")));
    }
    // Guard before the usize cast: the quotient can dwarf usize::MAX.
    let steps = ((b - a) / step).floor();
    if !steps.is_finite() || steps < 0.0 || steps >= MAX_RANGE_POINTS as f64 {
        return Err(Error::Parse(format!(
            "range `{s}` would produce more than {MAX_RANGE_POINTS} points"
        )));
    }
    let count = steps as usize + 1;
    let mut grid: Vec<f64> = (0..count).map(|k| a + step * k as f64).collect();
    // Include the right endpoint when the step does not land on it.
    if let Some(&last) = grid.last() {
        if (b - last) > 1e-9 * step {
            grid.push(b);
        }
    }
    Ok(grid)
}

/// Parse `ball:R` or `shell:R1:R2`.
pub fn parse_domain(s: &str) -> Result<DomainSpec> {
    let parts: Vec<&str> = s.split(':').collect();
    let spec = match parts.as_slice() {
        ["ball", r] => DomainSpec::Ball {
            radius: parse_float(r, 0)?,
        },
        ["shell", r1, r2] => DomainSpec::Shell {
            inner: parse_float(r1, 0)?,
            outer: parse_float(r2, 0)?,
        },
        _ => {
            return Err(Error::Parse(format!(
                "domain `{s}` must be ball:R or shell:R1:R2"
            )))
        }
    };
    spec.validate()?;
    Ok(spec)
}

/// Parse a manufactured-field choice: `x1|x2|x3`, `x1x2|x1x3|x2x3`, or
/// `poly:c0,c1,...` with at most 20 degree-<=3 coefficients.
pub fn parse_field(s: &str) -> Result<AmbientField> {
    match s.trim() {
        "x1" => return Ok(AmbientField::coordinate(0)),
        "x2" => return Ok(AmbientField::coordinate(1)),
        "x3" => return Ok(AmbientField::coordinate(2)),
        "x1x2" => return Ok(AmbientField::coordinate_product(0, 1)),
        "x1x3" => return Ok(AmbientField::coordinate_product(0, 2)),
        "x2x3" => return Ok(AmbientField::coordinate_product(1, 2)),
        _ => {}
    }
    if let Some(rest) = s.trim().strip_prefix("poly:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.is_empty() || parts.len() > 20 {
            return Err(Error::Parse(
                "poly: takes between 1 and 20 coefficients".into(),
            ));
        }
        let mut coeffs = [0.0f64; 20];
        for (slot, p) in coeffs.iter_mut().zip(&parts) {
            *slot = parse_float(p, 0)?;
        }
        return Ok(AmbientField::polynomial(format!("poly:{rest}"), coeffs));
    }
    Err(Error::Parse(format!(
        "field `{s}` must be x1|x2|x3|xixj|poly:coeffs"
    )))
}

/// Parse a seed like `0x5EED` or `5EED` (hex) or a decimal integer.
pub fn parse_seed(s: &str) -> Result<u64> {
    let t = s.trim();
    if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        return u64::from_str_radix(hex, 16)
            .map_err(|_| Error::Parse(format!("bad hex seed `{s}`")));
    }
    if t.chars().all(|c| c.is_ascii_digit()) {
        return t
            .parse()
            .map_err(|_| Error::Parse(format!("bad seed `{s}`")));
    }
    u64::from_str_radix(t, 16).map_err(|_| Error::Parse(format!("bad seed `{s}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_roundtrip() {
        let text = "# exemplar\nkind = sphere\nradius = 2.0\nresolution = 3\n";
        let spec = parse_catalog_config(text).unwrap();
        assert_eq!(spec.kind, ShrinkerKind::Sphere);
        assert_eq!(spec.radius, Some(2.0));
        assert_eq!(spec.resolution, 3);
        let shrinker = spec.build().unwrap();
        assert!(shrinker.exact);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(parse_catalog_config("kind = sphere\nbogus = 1\n").is_err());
        assert!(parse_catalog_config("radius = 2.0\n").is_err());
    }

    #[test]
    fn range_grammar() {
        let g = parse_range("1:2:0.5").unwrap();
        assert_eq!(g, vec![1.0, 1.5, 2.0]);
        assert!(parse_range("2:1:0.5").is_err());
        assert!(parse_range("1:2:0").is_err());
        assert!(parse_range("0:1e9:1e-6").is_err());
        // Quotients beyond usize must not wrap into an empty grid
        // (found by the range_spec fuzz target).
        assert!(parse_range("8.9e27:8.9e45:8.9e15").is_err());
    }

    #[test]
    fn domain_grammar() {
        assert_eq!(
            parse_domain("ball:1.5").unwrap(),
            DomainSpec::Ball { radius: 1.5 }
        );
        assert_eq!(
            parse_domain("shell:1:2").unwrap(),
            DomainSpec::Shell {
                inner: 1.0,
                outer: 2.0
            }
        );
        assert!(parse_domain("shell:2:1").is_err());
        assert!(parse_domain("cube:1").is_err());
    }

    #[test]
    fn field_grammar() {
        assert!(parse_field("x1").is_ok());
        assert!(parse_field("x2x3").is_ok());
        assert!(parse_field("poly:1,0,2").is_ok());
        assert!(parse_field("poly:").is_err());
        assert!(parse_field("sin").is_err());
    }

    #[test]
    fn seed_grammar() {
        assert_eq!(parse_seed("0x5EED").unwrap(), 0x5EED);
        assert_eq!(parse_seed("5EED").unwrap(), 0x5EED);
        assert_eq!(parse_seed("12345").unwrap(), 12345);
        assert!(parse_seed("zz").is_err());
    }
}
