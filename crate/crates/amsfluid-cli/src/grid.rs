//! Grid arguments: comma lists, start:stop:count ranges, state ranges.

use crate::CliError;

fn real(s: &str, what: &str) -> Result<f64, CliError> {
    s.trim().parse().map_err(|_| CliError::Usage(format!("--{what}: cannot parse '{}'", s.trim())))
}

/// `a,b,c` or `start:stop:count` (count points, both ends included).
pub fn reals(spec: &str, what: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let v = match parts.as_slice() {
        [a, b, n] => {
            let (a, b) = (real(a, what)?, real(b, what)?);
            let n: usize = n
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("--{what}: bad point count '{}'", n.trim())))?;
            match n {
                0 => Vec::new(),
                1 => vec![a],
                _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
            }
        }
        [_] => spec.split(',').map(|s| real(s, what)).collect::<Result<_, _>>()?,
        _ => return Err(CliError::Usage(format!("--{what}: expected a list or start:stop:count, got '{spec}'"))),
    };
    if v.is_empty() {
        return Err(CliError::Usage(format!("--{what}: empty grid")));
    }
    Ok(v)
}

/// `all`, `a..b` (inclusive) or a comma list of states 0..=n.
pub fn states(spec: &str, n: usize) -> Result<Vec<usize>, CliError> {
    let bad = |s: &str| CliError::Usage(format!("--k: cannot parse '{s}'"));
    let int = |s: &str| s.trim().parse::<usize>().map_err(|_| bad(s));
    let v: Vec<usize> = if spec.trim() == "all" {
        (0..=n).collect()
    } else if let Some((a, b)) = spec.split_once("..") {
        (int(a)?..=int(b)?).collect()
    } else {
        spec.split(',').map(int).collect::<Result<_, _>>()?
    };
    if let Some(&k) = v.iter().find(|&&k| k > n) {
        return Err(CliError::Usage(format!("--k: state {k} exceeds N={n}")));
    }
    if v.is_empty() {
        return Err(CliError::Usage("--k: no states selected".into()));
    }
    Ok(v)
}
