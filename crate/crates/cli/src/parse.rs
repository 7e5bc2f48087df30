//! Parsing of node lists and number lists given on the command line.

use anyhow::{bail, Context, Result};
use lattice_gramian::NodeIndex;

/// Inclusive integer range `a..b`, or a single integer.
pub fn parse_range(text: &str) -> Result<Vec<i64>> {
    let text = text.trim();
    if let Some((a, b)) = text.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let a: i64 = a.trim().parse().with_context(|| format!("bad range start in '{text}'"))?;
        let b: i64 = b.trim().parse().with_context(|| format!("bad range end in '{text}'"))?;
        if b < a {
            bail!("empty range '{text}'");
        }
        return Ok((a..=b).collect());
    }
    Ok(vec![text.parse().with_context(|| format!("bad integer '{text}'"))?])
}

/// Nodes of a `d`-dimensional lattice. In one dimension items are separated
/// by `,` or `;` and may be ranges (`0..7`); otherwise nodes are separated by
/// `;` and coordinates by `,` (`0,0;1,0`).
pub fn parse_nodes(text: &str, d: usize) -> Result<Vec<NodeIndex>> {
    let mut out = Vec::new();
    if d == 1 {
        for item in text.split([',', ';']).filter(|s| !s.trim().is_empty()) {
            out.extend(parse_range(item)?.into_iter().map(NodeIndex::scalar));
        }
    } else {
        for item in text.split(';').filter(|s| !s.trim().is_empty()) {
            let coords = item
                .split(',')
                .map(|c| c.trim().parse::<i64>().with_context(|| format!("bad coordinate in '{item}'")))
                .collect::<Result<Vec<_>>>()?;
            if coords.len() != d {
                bail!("node '{item}' has {} coordinates, lattice has {d}", coords.len());
            }
            out.push(NodeIndex::new(coords));
        }
    }
    if out.is_empty() {
        bail!("empty node list '{text}'");
    }
    Ok(out)
}

pub fn parse_floats(text: &str) -> Result<Vec<f64>> {
    let out = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad number '{s}'")))
        .collect::<Result<Vec<_>>>()?;
    if out.is_empty() {
        bail!("empty number list '{text}'");
    }
    Ok(out)
}

/// CSV field for a node: the integer itself, or coordinates joined by `;`.
pub fn node_field(n: &NodeIndex) -> String {
    n.coords().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";")
}

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0..5").unwrap(), vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(parse_range("-2..=0").unwrap(), vec![-2, -1, 0]);
        assert_eq!(parse_range("7").unwrap(), vec![7]);
        assert!(parse_range("5..1").is_err());
        assert!(parse_range("x").is_err());
    }

    #[test]
    fn node_lists() {
        let one = parse_nodes("0,2..4;9", 1).unwrap();
        assert_eq!(one, [0, 2, 3, 4, 9].map(NodeIndex::scalar));
        let two = parse_nodes("0,0;1,-1", 2).unwrap();
        assert_eq!(two, vec![NodeIndex::new(vec![0, 0]), NodeIndex::new(vec![1, -1])]);
        assert!(parse_nodes("0,0,1", 2).is_err());
        assert!(parse_nodes("", 1).is_err());
    }

    #[test]
    fn fields() {
        assert_eq!(node_field(&NodeIndex::scalar(-3)), "-3");
        assert_eq!(node_field(&NodeIndex::new(vec![1, 2])), "1;2");
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(parse_floats("1.5, 2").unwrap(), vec![1.5, 2.0]);
    }
}
