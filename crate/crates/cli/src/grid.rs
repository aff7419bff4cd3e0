use anyhow::{bail, Context, Result};

use leaky_well::observables::time_grid;

/// `start:end:step`, both ends inclusive.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        bail!("grid must look like start:end:step, got '{text}'");
    }
    let mut values = [0.0; 3];
    for (slot, part) in values.iter_mut().zip(&parts) {
        *slot = part.trim().parse().with_context(|| format!("bad number '{part}' in grid '{text}'"))?;
    }
    let [start, end, step] = values;
    Ok(time_grid(start, end, step)?)
}

/// Comma-separated numbers, at least one.
pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    let values = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad number '{s}' in list '{text}'")))
        .collect::<Result<Vec<_>>>()?;
    if values.iter().any(|v| !v.is_finite()) {
        bail!("list '{text}' holds a non-finite value");
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:1:0.5").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("2:2:1").unwrap(), vec![2.0]);
        assert_eq!(parse_grid("0:2:0.01").unwrap().len(), 201);
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("a:1:0.1").is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list("1, 6,20").unwrap(), vec![1.0, 6.0, 20.0]);
        assert!(parse_list("0.1,,0.5").is_err());
        assert!(parse_list("inf").is_err());
    }
}
