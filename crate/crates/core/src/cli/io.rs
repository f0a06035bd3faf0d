use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::CliError;

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parses `1.5`, `-2e-3`, `0.5+0.5i`, `-i`, `3i`, `1-2.5e-1i`.
pub fn parse_complex(text: &str) -> Result<Complex64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let err = || format!("cannot parse `{text}` as a complex number");
    let Some(body) = s.strip_suffix(['i', 'j']) else {
        return s.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| err());
    };
    // split before the last sign that is not a leading sign or an exponent sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        t => t.parse::<f64>().map_err(|_| err())?,
    };
    let re = re.parse::<f64>().map_err(|_| err())?;
    Ok(Complex64::new(re, im))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

/// Non-empty lines with `#` comments stripped.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// One amplitude per line, either a complex literal or two columns `re im`.
pub fn read_amplitudes(path: &Path) -> Result<Vec<Complex64>, CliError> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (line_no, line) in data_lines(&text) {
        let cols: Vec<&str> = line.split([' ', '\t', ',']).filter(|c| !c.is_empty()).collect();
        let fail = |e: String| CliError::Config(format!("{}:{line_no}: {e}", path.display()));
        let z = match cols.as_slice() {
            [one] => parse_complex(one).map_err(fail)?,
            [re, im] => {
                let re = re.parse::<f64>().map_err(|_| fail(format!("bad real part `{re}`")))?;
                let im = im.parse::<f64>().map_err(|_| fail(format!("bad imaginary part `{im}`")))?;
                Complex64::new(re, im)
            }
            _ => return Err(fail("expected `re`, `re im` or a complex literal".into())),
        };
        out.push(z);
    }
    if out.is_empty() {
        return Err(CliError::Config(format!("{} has no amplitudes", path.display())));
    }
    Ok(out)
}

/// Square matrix, one row per line, entries separated by whitespace or
/// commas, each a complex literal.
pub fn read_matrix(path: &Path) -> Result<DMatrix<Complex64>, CliError> {
    let text = read_text(path)?;
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for (line_no, line) in data_lines(&text) {
        let row = line
            .split([' ', '\t', ','])
            .filter(|c| !c.is_empty())
            .map(parse_complex)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Config(format!("{}:{line_no}: {e}", path.display())))?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Config(format!("{} is not a square matrix", path.display())));
    }
    Ok(DMatrix::from_fn(n, n, |i, k| rows[i][k]))
}

pub fn matrix_dimension(path: &Path) -> Result<usize, CliError> {
    Ok(read_matrix(path)?.nrows())
}

/// Writes a CSV table with a header row.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        let c = |re, im| Complex64::new(re, im);
        assert_eq!(parse_complex("1.5").unwrap(), c(1.5, 0.0));
        assert_eq!(parse_complex("-2e-3").unwrap(), c(-2e-3, 0.0));
        assert_eq!(parse_complex("0.5+0.5i").unwrap(), c(0.5, 0.5));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("i").unwrap(), c(0.0, 1.0));
        assert_eq!(parse_complex("3i").unwrap(), c(0.0, 3.0));
        assert_eq!(parse_complex("1e-1-2.5e-1i").unwrap(), c(0.1, -0.25));
        assert_eq!(parse_complex("-1 - 2i").unwrap(), c(-1.0, -2.0));
        assert!(parse_complex("abc").is_err());
        assert!(parse_complex("1+xi").is_err());
    }

    #[test]
    fn formatting_is_fixed() {
        assert_eq!(fmt_f(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f(-6.0), "-6.0000000000000000e0");
        assert_eq!(fmt_f(f64::INFINITY), "inf");
    }

    #[test]
    fn matrix_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.txt");
        std::fs::write(&p, "# comment\n1, 0.5i\n-0.5i 2\n").unwrap();
        let h = read_matrix(&p).unwrap();
        assert_eq!(h[(0, 1)], Complex64::new(0.0, 0.5));
        assert_eq!(h[(1, 1)], Complex64::new(2.0, 0.0));
        std::fs::write(&p, "1 2 3\n4 5 6\n").unwrap();
        assert!(read_matrix(&p).is_err());
    }
}
