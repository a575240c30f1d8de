//! Reading and writing of the CLI's CSV/JSON/binary artifacts.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::Serialize;

use lncass::metrics::PosteriorSummary;
use lncass::sampler::PosteriorDraws;

const DRAWS_MAGIC: &[u8; 8] = b"LNCDRAWS";

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

/// `chain,draw,<parameters...>`, one row per post-warmup draw.
pub fn write_draws_csv(path: &Path, draws: &PosteriorDraws) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["chain".to_string(), "draw".to_string()];
    header.extend(draws.names().iter().cloned());
    w.write_record(&header)?;
    for c in 0..draws.n_chains() {
        for d in 0..draws.n_draws() {
            let mut row = vec![c.to_string(), d.to_string()];
            row.extend(draws.draw(c, d).iter().map(f64::to_string));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_draws_csv(path: &Path) -> Result<PosteriorDraws> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    ensure!(
        header.len() > 2 && header[0] == "chain" && header[1] == "draw",
        "{} is not a draws file",
        path.display()
    );
    let names = header[2..].to_vec();
    let mut chains: Vec<Vec<f64>> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let c: usize = rec[0].parse().context("chain index")?;
        if c == chains.len() {
            chains.push(Vec::new());
        } else if c + 1 != chains.len() {
            bail!("draws for chain {c} are not contiguous");
        }
        for cell in rec.iter().skip(2) {
            chains[c].push(cell.parse().with_context(|| format!("parsing draw value {cell:?}"))?);
        }
    }
    Ok(PosteriorDraws::new(names, chains)?)
}

/// Compact little-endian layout:
///
/// ```text
/// b"LNCDRAWS"
/// u64 chains, u64 draws, u64 dim
/// dim × (u64 byte length, UTF-8 parameter name)
/// chains × draws × dim f64 values, chain-major then draw-major
/// ```
pub fn write_draws_binary(path: &Path, draws: &PosteriorDraws) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    w.write_all(DRAWS_MAGIC)?;
    for v in [draws.n_chains(), draws.n_draws(), draws.dim()] {
        w.write_all(&(v as u64).to_le_bytes())?;
    }
    for name in draws.names() {
        w.write_all(&(name.len() as u64).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
    }
    for d in draws.iter_draws() {
        for v in d {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_draws_binary(path: &Path) -> Result<PosteriorDraws> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    ensure!(&magic == DRAWS_MAGIC, "{} is not a binary draws file", path.display());
    let mut word = [0u8; 8];
    let mut next = |r: &mut BufReader<File>| -> Result<u64> {
        r.read_exact(&mut word)?;
        Ok(u64::from_le_bytes(word))
    };
    let (chains, draws, dim) = (next(&mut r)? as usize, next(&mut r)? as usize, next(&mut r)? as usize);
    let mut names = Vec::with_capacity(dim);
    for _ in 0..dim {
        let len = next(&mut r)? as usize;
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf)?;
        names.push(String::from_utf8(buf).context("parameter name")?);
    }
    let mut out = Vec::with_capacity(chains);
    for _ in 0..chains {
        let mut c = Vec::with_capacity(draws * dim);
        for _ in 0..draws * dim {
            c.push(f64::from_bits(next(&mut r)?));
        }
        out.push(c);
    }
    Ok(PosteriorDraws::new(names, out)?)
}

pub fn write_summary_csv(path: &Path, summary: &PosteriorSummary) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["parameter", "mean", "median", "lower", "upper", "rhat", "ess"])?;
    for p in &summary.params {
        w.write_record([
            p.name.clone(),
            p.mean.to_string(),
            p.median.to_string(),
            p.lower.to_string(),
            p.upper.to_string(),
            p.rhat.to_string(),
            p.ess.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `(median, mean)` of `beta[1..]` from a summary CSV, in covariate order.
pub fn read_coefficients(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("{} has no {name} column", path.display()))
    };
    let (pc, mc, ac) = (col("parameter")?, col("median")?, col("mean")?);
    let mut found: Vec<(usize, f64, f64)> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let name = &rec[pc];
        let Some(idx) = name.strip_prefix("beta[").and_then(|s| s.strip_suffix(']')) else {
            continue;
        };
        let Ok(i) = idx.parse::<usize>() else { continue };
        found.push((i, rec[mc].parse()?, rec[ac].parse()?));
    }
    ensure!(!found.is_empty(), "{} has no beta[i] rows", path.display());
    found.sort_by_key(|f| f.0);
    for (k, f) in found.iter().enumerate() {
        ensure!(f.0 == k + 1, "{} is missing beta[{}]", path.display(), k + 1);
    }
    Ok((found.iter().map(|f| f.1).collect(), found.iter().map(|f| f.2).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draws() -> PosteriorDraws {
        PosteriorDraws::new(
            vec!["a".into(), "omega[1,2]".into()],
            vec![vec![0.1, -2.5, 1e-300, 3.0], vec![f64::MAX, 0.0, -0.0, 7.25]],
        )
        .unwrap()
    }

    #[test]
    fn draws_csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        write_draws_csv(&p, &draws()).unwrap();
        let back = read_draws_csv(&p).unwrap();
        assert_eq!(back.names(), draws().names());
        assert_eq!(back.iter_draws().collect::<Vec<_>>(), draws().iter_draws().collect::<Vec<_>>());
    }

    #[test]
    fn draws_binary_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.bin");
        write_draws_binary(&p, &draws()).unwrap();
        let back = read_draws_binary(&p).unwrap();
        assert_eq!(back, draws());
        assert!(read_draws_csv(&p).is_err());
    }
}
