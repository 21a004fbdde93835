//! On-disk formats: presentations, endomorphism rings, and check reports.
//!
//! Everything is structured text with rationals carried as strings, so
//! files are exact and diff-friendly. Serialization is deterministic:
//! struct fields keep their declared order, maps are sorted, and reports
//! omit timings unless explicitly requested. Unknown fields are rejected.

use rigid_core::construction::{ConstructionMeta, ConstructionParams, PrimeScheme};
use rigid_core::presentation::{LocalizedGenerator, Presentation};
use rigid_core::report::{CheckStatus, Report};
use rigid_core::rigidity::EndoRing;
use rigid_core::separation::{Branch, BranchFamily};
use rigid_core::symbol::BasisSymbol;
use rigid_core::vector::RationalVector;
use rigid_core::{Int, Rational};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug)]
pub struct FormatError(pub String);

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for FormatError {}

fn err(field: &str, detail: impl fmt::Display) -> FormatError {
    FormatError(format!("field {field}: {detail}"))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    #[serde(rename = "Lambda")]
    pub lambda: u32,
    pub blocks: u32,
    pub depth_cap: u32,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrimesFile {
    pub p: Vec<u64>,
    pub q: Vec<Vec<u64>>,
    pub q_star: Vec<u64>,
    pub cross: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorFile {
    /// Sparse coefficients, symbol string to exact rational string.
    pub coeffs: BTreeMap<String, String>,
    /// Inverted primes.
    pub loc: Vec<u64>,
}

/// The presentation document. Round-trips losslessly.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresentationFile {
    pub params: ParamsFile,
    pub primes: PrimesFile,
    pub basis: Vec<String>,
    pub generators: Vec<GeneratorFile>,
    pub g_family: Vec<String>,
}

fn rational_to_string(r: &Rational) -> String {
    if r.denom() == &Int::from(1) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn rational_from_str(s: &str) -> Result<Rational, FormatError> {
    Rational::from_str(s).map_err(|e| FormatError(format!("bad rational {s:?}: {e}")))
}

pub fn presentation_to_file(pres: &Presentation) -> Result<PresentationFile, FormatError> {
    let meta = pres
        .meta
        .as_ref()
        .ok_or_else(|| err("params", "presentation carries no construction metadata"))?;
    let blocks = meta.blocks;
    let generators = pres
        .generators
        .iter()
        .map(|g| GeneratorFile {
            coeffs: g
                .vector
                .iter()
                .map(|(s, c)| (s.render(blocks), rational_to_string(c)))
                .collect(),
            loc: g.inverted_primes.iter().copied().collect(),
        })
        .collect();
    Ok(PresentationFile {
        params: ParamsFile {
            lambda: meta.lambda,
            blocks: meta.blocks,
            depth_cap: meta.depth_cap,
        },
        primes: PrimesFile {
            p: meta.scheme.p.clone(),
            q: meta.scheme.q.clone(),
            q_star: meta.scheme.q_star.clone(),
            cross: meta.scheme.cross,
        },
        basis: pres.basis.iter().map(|s| s.render(blocks)).collect(),
        generators,
        g_family: meta.family.members().iter().map(Branch::to_string).collect(),
    })
}

pub fn presentation_from_file(file: &PresentationFile) -> Result<Presentation, FormatError> {
    let basis: Vec<BasisSymbol> = file
        .basis
        .iter()
        .map(|s| BasisSymbol::parse(s).map_err(|e| err("basis", e)))
        .collect::<Result<_, _>>()?;
    let mut generators = Vec::with_capacity(file.generators.len());
    for (i, g) in file.generators.iter().enumerate() {
        let mut v = RationalVector::zero();
        for (sym, c) in &g.coeffs {
            let s = BasisSymbol::parse(sym)
                .map_err(|e| err(&format!("generators[{i}].coeffs"), e))?;
            v.add_assign_entry(s, rational_from_str(c)?);
        }
        if v.is_zero() {
            return Err(err(&format!("generators[{i}]"), "zero generator"));
        }
        generators.push(LocalizedGenerator::new(v, g.loc.iter().copied()));
    }
    let scheme = PrimeScheme {
        p: file.primes.p.clone(),
        q: file.primes.q.clone(),
        q_star: file.primes.q_star.clone(),
        cross: file.primes.cross,
    };
    scheme.validate().map_err(|e| err("primes", e))?;
    let members = file
        .g_family
        .iter()
        .map(|s| Branch::parse(s).map_err(|e| err("g_family", e)))
        .collect::<Result<Vec<_>, _>>()?;
    let family = BranchFamily::new(members).map_err(|e| err("g_family", e))?;
    let params = ConstructionParams::new(
        file.params.lambda,
        file.params.blocks,
        file.params.depth_cap,
        family.clone(),
    )
    .map_err(|e| err("params", e))?;
    let mut levels = Vec::new();
    for _ in 0..params.blocks {
        let mut map = std::collections::BTreeMap::new();
        for a in 0..params.lambda {
            for i in 0..params.lambda {
                map.insert((a, i), params.level(a, i).map_err(|e| err("g_family", e))?);
            }
        }
        levels.push(map);
    }
    let mut pres = Presentation::new(basis, generators);
    pres.meta = Some(ConstructionMeta {
        lambda: params.lambda,
        blocks: params.blocks,
        depth_cap: params.depth_cap,
        family,
        scheme,
        levels,
    });
    Ok(pres)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckFile {
    pub clause: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportFile {
    pub suite: String,
    pub checks: Vec<CheckFile>,
}

pub fn report_to_file(report: &Report, timing_ms: Option<u64>) -> ReportFile {
    ReportFile {
        suite: report.suite.clone(),
        checks: report
            .checks
            .iter()
            .map(|c| {
                let (status, witness) = match &c.status {
                    CheckStatus::Pass => ("pass".to_string(), None),
                    CheckStatus::Fail { witness } => ("fail".to_string(), Some(witness.clone())),
                };
                CheckFile {
                    clause: c.clause.clone(),
                    status,
                    witness,
                    timing_ms,
                }
            })
            .collect(),
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndoSolutionFile {
    /// Column symbol to dense image (symbol to rational string).
    pub matrix: BTreeMap<String, BTreeMap<String, String>>,
    pub preserved: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndoRingFile {
    pub cap: u32,
    pub rank: usize,
    pub contains_identity: bool,
    pub stable: bool,
    pub solutions: Vec<EndoSolutionFile>,
}

pub fn ring_to_file(ring: &EndoRing, blocks: u32) -> EndoRingFile {
    EndoRingFile {
        cap: ring.cap,
        rank: ring.rank,
        contains_identity: ring.contains_identity,
        stable: ring.stable,
        solutions: ring
            .solutions
            .iter()
            .map(|sol| EndoSolutionFile {
                matrix: sol
                    .matrix
                    .source_basis
                    .iter()
                    .zip(&sol.matrix.cols)
                    .map(|(src, col)| {
                        let image: BTreeMap<String, String> = sol
                            .matrix
                            .target_basis
                            .iter()
                            .zip(col)
                            .filter(|(_, c)| !num_traits::Zero::is_zero(*c))
                            .map(|(t, c)| (t.render(blocks), rational_to_string(c)))
                            .collect();
                        (src.render(blocks), image)
                    })
                    .collect(),
                preserved: sol.preserved.clone(),
            })
            .collect(),
    }
}

/// Parses `x.0:1/2,y.0.0:1` into a vector.
pub fn parse_vector(s: &str) -> Result<RationalVector, FormatError> {
    let mut v = RationalVector::zero();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (sym, val) = part
            .split_once(':')
            .ok_or_else(|| FormatError(format!("bad vector entry {part:?}: expected sym:value")))?;
        let sym = BasisSymbol::parse(sym.trim()).map_err(|e| FormatError(e.to_string()))?;
        v.add_assign_entry(sym, rational_from_str(val.trim())?);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rigid_core::construction::{build, default_scheme};

    #[test]
    fn presentation_round_trip_is_lossless() {
        let family = BranchFamily::new(vec![Branch::constant(false), Branch::constant(true)])
            .unwrap();
        let params = ConstructionParams::new(2, 1, 4, family).unwrap();
        let scheme = default_scheme(1, params.ladder_primes_needed().unwrap());
        let pres = build(&params, &scheme).unwrap();
        let file = presentation_to_file(&pres).unwrap();
        let text = serde_json::to_string_pretty(&file).unwrap();
        let parsed: PresentationFile = serde_json::from_str(&text).unwrap();
        let back = presentation_from_file(&parsed).unwrap();
        assert_eq!(back, pres);
        // Byte-identical re-serialization.
        let text2 = serde_json::to_string_pretty(&presentation_to_file(&back).unwrap()).unwrap();
        assert_eq!(text, text2);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = r#"{"params":{"Lambda":2,"blocks":1,"depth_cap":4,"extra":1},"primes":{"p":[],"q":[],"q_star":[],"cross":23},"basis":[],"generators":[],"g_family":[]}"#;
        assert!(serde_json::from_str::<PresentationFile>(bad).is_err());
    }

    #[test]
    fn vector_parsing() {
        let v = parse_vector("x.0:1/2,y.0.0:1").unwrap();
        assert_eq!(v.support_len(), 2);
        assert!(parse_vector("x.0").is_err());
        assert!(parse_vector("z.0:1").is_err());
    }
}
