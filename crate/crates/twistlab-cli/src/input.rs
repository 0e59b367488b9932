//! Parsing of matrices, weights, epsilon values, and approximation tuples
//! from their command-line encodings.

use std::path::Path;

use twistlab::error::{Error, Result};
use twistlab::geom::{ApproxFn, ApproxTuple, MatrixSpec, TorusRectangle, WeightVector};
use twistlab::scalar::{liouville_like, phi, sqrt2, sqrt3, Rat64, Scalar};

use crate::args::{MatrixArgs, RectArgs, WeightArgs};

/// Resolve a matrix source. Exactly one of preset/file/inline must be given.
pub fn load_matrix(src: &MatrixArgs) -> Result<MatrixSpec> {
    let given = [
        src.preset.is_some(),
        src.matrix_file.is_some(),
        src.matrix.is_some(),
    ]
    .iter()
    .filter(|b| **b)
    .count();
    if given != 1 {
        return Err(Error::usage(
            "give exactly one of --preset, --matrix-file, --matrix",
        ));
    }
    if let Some(name) = &src.preset {
        return preset_matrix(name);
    }
    if let Some(path) = &src.matrix_file {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::usage(format!("cannot read matrix file {}: {e}", path.display()))
        })?;
        return parse_matrix_text(&text);
    }
    let inline = src.matrix.as_ref().unwrap().replace(';', "\n");
    parse_matrix_text(&inline)
}

fn preset_matrix(name: &str) -> Result<MatrixSpec> {
    match name {
        "golden" => MatrixSpec::from_floats(1, 1, vec![phi()]),
        "sqrt2" => MatrixSpec::from_floats(1, 1, vec![sqrt2()]),
        "sqrt2-sqrt3-row" => MatrixSpec::from_floats(1, 2, vec![sqrt2(), sqrt3()]),
        "liouville-like" => MatrixSpec::from_floats(1, 1, vec![liouville_like()]),
        other => {
            if let Some(rest) = other
                .strip_prefix("rand-rational(")
                .and_then(|s| s.strip_suffix(')'))
            {
                let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
                if parts.len() != 4 {
                    return Err(Error::usage(
                        "rand-rational takes (seed,n,m,den), e.g. rand-rational(7,2,2,64)",
                    ));
                }
                let seed: u64 = parts[0]
                    .parse()
                    .map_err(|_| Error::usage("rand-rational: bad seed"))?;
                let n: usize = parts[1]
                    .parse()
                    .map_err(|_| Error::usage("rand-rational: bad n"))?;
                let m: usize = parts[2]
                    .parse()
                    .map_err(|_| Error::usage("rand-rational: bad m"))?;
                let den: i64 = parts[3]
                    .parse()
                    .map_err(|_| Error::usage("rand-rational: bad denominator"))?;
                if n == 0 || m == 0 || den <= 0 {
                    return Err(Error::usage("rand-rational: n, m, den must be positive"));
                }
                MatrixSpec::random_rational(seed, n, m, den)
            } else {
                Err(Error::usage(format!(
                    "unknown preset `{other}`; known: golden, sqrt2, sqrt2-sqrt3-row, \
                     liouville-like, rand-rational(seed,n,m,den)"
                )))
            }
        }
    }
}

/// Parse the matrix text format. Errors carry 1-based line and column.
pub fn parse_matrix_text(text: &str) -> Result<MatrixSpec> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (first_no, first) = lines
        .next()
        .ok_or_else(|| Error::usage("matrix text is empty"))?;
    let mut header = first.split_whitespace();
    let parse_dim = |tok: Option<&str>| -> Result<usize> {
        tok.and_then(|t| t.parse().ok()).ok_or_else(|| {
            Error::usage(format!(
                "line {}: header must be `n m` (rows, columns)",
                first_no + 1
            ))
        })
    };
    let n = parse_dim(header.next())?;
    let m = parse_dim(header.next())?;
    if header.next().is_some() {
        return Err(Error::usage(format!(
            "line {}: header must be exactly `n m`",
            first_no + 1
        )));
    }

    let mut entries: Vec<Scalar> = Vec::with_capacity(n * m);
    let mut first_tag: Option<(bool, usize, usize)> = None; // exact?, line, col
    let mut rows_read = 0usize;
    for (line_no, line) in lines {
        rows_read += 1;
        if rows_read > n {
            return Err(Error::usage(format!(
                "line {}: expected only {n} matrix rows",
                line_no + 1
            )));
        }
        let mut count = 0usize;
        let mut rest = line;
        let mut col_base = 0usize;
        while let Some(start) = rest.find(|c: char| !c.is_whitespace()) {
            let tail = &rest[start..];
            let end = tail.find(|c: char| c.is_whitespace()).unwrap_or(tail.len());
            let tok = &tail[..end];
            let col = col_base + start + 1;
            count += 1;
            if count > m {
                return Err(Error::usage(format!(
                    "line {}, column {col}: expected only {m} entries per row",
                    line_no + 1
                )));
            }
            let s = Scalar::parse_entry(tok)
                .map_err(|e| Error::usage(format!("line {}, column {col}: {e}", line_no + 1)))?;
            match first_tag {
                None => first_tag = Some((s.is_exact(), line_no + 1, col)),
                Some((exact, fl, fc)) => {
                    if s.is_exact() != exact {
                        return Err(Error::usage(format!(
                            "line {}, column {col}: mixed exact/float entries are forbidden \
                             (first entry at line {fl}, column {fc} was {})",
                            line_no + 1,
                            if exact { "exact" } else { "float" }
                        )));
                    }
                }
            }
            entries.push(s);
            col_base += start + end;
            rest = &rest[start + end..];
        }
        if count < m {
            return Err(Error::usage(format!(
                "line {}: expected {m} entries, found {count}",
                line_no + 1
            )));
        }
    }
    if rows_read < n {
        return Err(Error::usage(format!(
            "expected {n} matrix rows, found {rows_read}"
        )));
    }
    MatrixSpec::from_scalars(n, m, entries)
}

fn parse_rat64(tok: &str) -> Result<Rat64> {
    let s = Scalar::parse_exact(tok)?;
    let r = s.to_rational()?;
    let numer: i64 = r
        .numer()
        .try_into()
        .map_err(|_| Error::usage(format!("weight `{tok}` is too large")))?;
    let denom: i64 = r
        .denom()
        .try_into()
        .map_err(|_| Error::usage(format!("weight `{tok}` is too precise")))?;
    Ok(Rat64::new(numer, denom))
}

/// Comma-separated rational weights; `None` means all ones.
pub fn parse_weights(spec: &Option<String>, dim: usize, what: &str) -> Result<WeightVector> {
    match spec {
        None => Ok(WeightVector::ones(dim)),
        Some(s) => {
            let parts: Vec<Rat64> = s
                .split(',')
                .map(parse_rat64)
                .collect::<Result<_>>()
                .map_err(|e| Error::usage(format!("{what}: {e}")))?;
            if parts.len() != dim {
                return Err(Error::usage(format!(
                    "{what}: expected {dim} entries, got {}",
                    parts.len()
                )));
            }
            WeightVector::from_rationals(parts).map_err(|e| Error::usage(format!("{what}: {e}")))
        }
    }
}

pub fn parse_weight_pair(
    weights: &WeightArgs,
    a: &MatrixSpec,
) -> Result<(WeightVector, WeightVector)> {
    let v = parse_weights(&weights.v, a.rows(), "--v")?;
    let alpha = parse_weights(&weights.alpha, a.cols(), "--alpha")?;
    Ok((v, alpha))
}

/// Exact threshold value (decimals are read as exact rationals).
pub fn parse_eps(tok: &str) -> Result<Scalar> {
    let s = Scalar::parse_exact(tok)?;
    if s.to_f64() <= 0.0 {
        return Err(Error::usage(format!("epsilon must be positive, got {tok}")));
    }
    Ok(s)
}

pub fn parse_f64_list(spec: &str, what: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::usage(format!("{what}: bad number `{t}`")))
        })
        .collect()
}

pub fn parse_u32_list(spec: &str, what: &str) -> Result<Vec<u32>> {
    spec.split(',')
        .map(|t| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| Error::usage(format!("{what}: bad integer `{t}`")))
        })
        .collect()
}

/// Tuple spec: row specs joined by ';', each `pow:C,TAU` | `const:V` |
/// `tab:PATH`; a single row spec broadcasts to all n rows.
pub fn parse_psi(spec: &str, n: usize) -> Result<ApproxTuple> {
    let parts: Vec<&str> = spec.split(';').map(str::trim).collect();
    let rows: Vec<&str> = if parts.len() == 1 {
        vec![parts[0]; n]
    } else {
        parts
    };
    if rows.len() != n {
        return Err(Error::usage(format!(
            "--psi: expected 1 or {n} row specs, got {}",
            rows.len()
        )));
    }
    let funcs = rows
        .into_iter()
        .map(parse_psi_row)
        .collect::<Result<Vec<_>>>()?;
    ApproxTuple::new(funcs)
}

fn parse_psi_row(spec: &str) -> Result<ApproxFn> {
    if let Some(body) = spec.strip_prefix("pow:") {
        let (c, tau) = body
            .split_once(',')
            .ok_or_else(|| Error::usage(format!("--psi: `pow:` needs C,TAU in `{spec}`")))?;
        let c: f64 = c
            .trim()
            .parse()
            .map_err(|_| Error::usage(format!("--psi: bad coefficient in `{spec}`")))?;
        let tau: f64 = tau
            .trim()
            .parse()
            .map_err(|_| Error::usage(format!("--psi: bad exponent in `{spec}`")))?;
        ApproxFn::power_law(c, tau)
    } else if let Some(body) = spec.strip_prefix("const:") {
        let v: f64 = body
            .trim()
            .parse()
            .map_err(|_| Error::usage(format!("--psi: bad constant in `{spec}`")))?;
        ApproxFn::tabulated(vec![(1.0, v)])
    } else if let Some(path) = spec.strip_prefix("tab:") {
        let text = std::fs::read_to_string(Path::new(path.trim()))
            .map_err(|e| Error::usage(format!("--psi: cannot read `{path}`: {e}")))?;
        let mut samples = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let r: f64 = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::usage(format!("--psi: line {}: bad r", i + 1)))?;
            let y: f64 = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::usage(format!("--psi: line {}: bad value", i + 1)))?;
            samples.push((r, y));
        }
        ApproxFn::tabulated(samples)
    } else {
        Err(Error::usage(format!(
            "--psi: row spec `{spec}` must start with pow:, const:, or tab:"
        )))
    }
}

pub fn parse_rect(args: &RectArgs) -> Result<TorusRectangle> {
    let center = parse_f64_list(&args.b_center, "--b-center")?;
    let radii = parse_f64_list(&args.b_radii, "--b-radii")?;
    TorusRectangle::new(center, radii)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        assert!(load_matrix(&MatrixArgs {
            preset: Some("golden".into()),
            matrix_file: None,
            matrix: None,
        })
        .is_ok());
        let row = preset_matrix("sqrt2-sqrt3-row").unwrap();
        assert_eq!((row.rows(), row.cols()), (1, 2));
        let rr = preset_matrix("rand-rational(7,2,2,64)").unwrap();
        assert!(rr.is_exact());
        // determinism of the preset
        let rr2 = preset_matrix("rand-rational(7,2,2,64)").unwrap();
        assert_eq!(format!("{rr:?}"), format!("{rr2:?}"));
        assert!(preset_matrix("nope").is_err());
    }

    #[test]
    fn matrix_text_happy_path() {
        let m = parse_matrix_text("1 1\n1/3").unwrap();
        assert!(m.is_exact());
        let m = parse_matrix_text("2 2\n0.5 0.25\n0.1 0.9").unwrap();
        assert!(!m.is_exact());
    }

    #[test]
    fn matrix_text_errors_carry_positions() {
        let err = parse_matrix_text("2 2\n1/2 0.5\n1/3 1/4").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2, column 5"), "{msg}");
        assert!(msg.contains("mixed"), "{msg}");

        let err = parse_matrix_text("1 2\n0.5 oops").unwrap_err();
        assert!(err.to_string().contains("line 2, column 5"));

        let err = parse_matrix_text("2 1\n0.5").unwrap_err();
        assert!(err.to_string().contains("expected 2 matrix rows"));
    }

    #[test]
    fn weights_parse_exactly() {
        let w = parse_weights(&Some("0.5,1.5".into()), 2, "--v").unwrap();
        assert_eq!(w.exact().unwrap()[0], Rat64::new(1, 2));
        assert!(parse_weights(&Some("0.5,1".into()), 2, "--v").is_err());
        assert!(parse_weights(&Some("1,1".into()), 3, "--v").is_err());
    }

    #[test]
    fn psi_specs_parse() {
        assert!(parse_psi("pow:0.4,1", 1).is_ok());
        assert!(parse_psi("pow:1,2;const:0.5", 2).is_ok());
        assert!(parse_psi("pow:1,2;pow:1,3", 1).is_err());
        assert!(parse_psi("wat:1", 1).is_err());
    }
}
