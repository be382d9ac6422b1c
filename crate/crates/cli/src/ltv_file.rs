//! Plant description files.
//!
//! Line-oriented text, `#` starts a comment:
//!
//! ```text
//! ltv-plant v1
//! dims <k> <m> <p>
//! horizon <N>
//! interpolate            # optional flag line
//! system                 # one block per supplied time step
//! A <k*k row-major entries>
//! B <k*m entries>
//! C <p*k entries>
//! D <p*m entries>
//! system
//! ...
//! ```
//!
//! One `system` block defines a time-invariant plant replicated over the
//! horizon; two blocks with `interpolate` define endpoints whose entries are
//! interpolated linearly; `horizon` blocks define a fully general plant.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use great_core::behavior::LtvSystem;
use nalgebra::DMatrix;

struct SystemBlock {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

pub fn load_plant(path: &Path) -> Result<LtvSystem> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading plant file {}", path.display()))?;
    parse_plant(&text).with_context(|| format!("parsing plant file {}", path.display()))
}

pub fn parse_plant(text: &str) -> Result<LtvSystem> {
    let mut lines = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty());

    let header = lines.next().ok_or_else(|| anyhow!("empty plant file"))?;
    if header != "ltv-plant v1" {
        bail!("unsupported header {header:?}, expected \"ltv-plant v1\"");
    }

    let mut dims: Option<(usize, usize, usize)> = None;
    let mut horizon: Option<usize> = None;
    let mut interpolate = false;
    let mut blocks: Vec<SystemBlock> = Vec::new();
    let mut pending: Vec<(char, Vec<f64>)> = Vec::new();

    let flush_block = |pending: &mut Vec<(char, Vec<f64>)>,
                       blocks: &mut Vec<SystemBlock>,
                       dims: &(usize, usize, usize)|
     -> Result<()> {
        if pending.is_empty() {
            return Ok(());
        }
        let (k, m, p) = *dims;
        let mut a = None;
        let mut b = None;
        let mut c = None;
        let mut d = None;
        for (label, values) in pending.drain(..) {
            let (rows, cols, slot): (usize, usize, &mut Option<DMatrix<f64>>) = match label {
                'A' => (k, k, &mut a),
                'B' => (k, m, &mut b),
                'C' => (p, k, &mut c),
                'D' => (p, m, &mut d),
                _ => unreachable!(),
            };
            if values.len() != rows * cols {
                bail!(
                    "matrix {label} needs {rows}x{cols} = {} entries, got {}",
                    rows * cols,
                    values.len()
                );
            }
            if slot.is_some() {
                bail!("matrix {label} given twice in one system block");
            }
            *slot = Some(DMatrix::from_row_slice(rows, cols, &values));
        }
        blocks.push(SystemBlock {
            a: a.ok_or_else(|| anyhow!("system block missing A"))?,
            b: b.ok_or_else(|| anyhow!("system block missing B"))?,
            c: c.ok_or_else(|| anyhow!("system block missing C"))?,
            d: d.ok_or_else(|| anyhow!("system block missing D"))?,
        });
        Ok(())
    };

    for line in lines {
        let mut tokens = line.split_whitespace();
        let keyword = tokens.next().expect("filtered empty lines");
        match keyword {
            "dims" => {
                let values: Vec<usize> = tokens
                    .map(|t| t.parse().context("parsing dims"))
                    .collect::<Result<_>>()?;
                if values.len() != 3 {
                    bail!("dims needs three integers k m p");
                }
                dims = Some((values[0], values[1], values[2]));
            }
            "horizon" => {
                horizon = Some(
                    tokens
                        .next()
                        .ok_or_else(|| anyhow!("horizon needs a value"))?
                        .parse()
                        .context("parsing horizon")?,
                );
            }
            "interpolate" => interpolate = true,
            "system" => {
                let d = dims.ok_or_else(|| anyhow!("dims must precede system blocks"))?;
                flush_block(&mut pending, &mut blocks, &d)?;
            }
            "A" | "B" | "C" | "D" => {
                let values: Vec<f64> = tokens
                    .map(|t| {
                        t.parse::<f64>()
                            .with_context(|| format!("parsing entry {t:?}"))
                    })
                    .collect::<Result<_>>()?;
                pending.push((keyword.chars().next().expect("single char"), values));
            }
            other => bail!("unknown keyword {other:?}"),
        }
    }
    let dims = dims.ok_or_else(|| anyhow!("missing dims line"))?;
    flush_block(&mut pending, &mut blocks, &dims)?;
    let horizon = horizon.ok_or_else(|| anyhow!("missing horizon line"))?;
    if horizon == 0 {
        bail!("horizon must be positive");
    }

    let sys = match (blocks.len(), interpolate) {
        (1, false) => {
            let blk = blocks.pop().expect("one block");
            LtvSystem::lti(blk.a, blk.b, blk.c, blk.d, horizon)
        }
        (2, true) => {
            let last = blocks.pop().expect("two blocks");
            let first = blocks.pop().expect("two blocks");
            LtvSystem::interpolated(
                (first.a, first.b, first.c, first.d),
                (last.a, last.b, last.c, last.d),
                horizon,
            )
        }
        (n, false) if n == horizon => {
            let mut a = Vec::with_capacity(n);
            let mut b = Vec::with_capacity(n);
            let mut c = Vec::with_capacity(n);
            let mut d = Vec::with_capacity(n);
            for blk in blocks {
                a.push(blk.a);
                b.push(blk.b);
                c.push(blk.c);
                d.push(blk.d);
            }
            LtvSystem::new(a, b, c, d)
        }
        (n, interp) => bail!(
            "expected 1 system block (time-invariant), 2 with interpolate, or {horizon} \
             (one per step); got {n} blocks, interpolate = {interp}"
        ),
    }?;
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LTI: &str = "\
ltv-plant v1
dims 1 1 1
horizon 4
system
A 0.5
B 1
C 1
D 0
";

    #[test]
    fn parses_lti_plant() {
        let sys = parse_plant(LTI).unwrap();
        assert_eq!(sys.horizon(), 4);
        assert_eq!(sys.state_dim(), 1);
        let (a, _, _, _) = sys.matrices(3).unwrap();
        assert_eq!(a[(0, 0)], 0.5);
    }

    #[test]
    fn parses_interpolated_plant() {
        let text = "\
ltv-plant v1
dims 1 1 1
horizon 3
interpolate
system
A 0.0
B 1
C 1
D 0
system
A 1.0
B 1
C 1
D 0
";
        let sys = parse_plant(text).unwrap();
        let mid = sys.matrices(1).unwrap().0[(0, 0)];
        assert!((mid - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_wrong_entry_count() {
        let bad = LTI.replace("A 0.5", "A 0.5 0.5");
        assert!(parse_plant(&bad).is_err());
    }
}
