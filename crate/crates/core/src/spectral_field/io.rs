//! Plain-text field serialization.
//!
//! Line 1 is a JSON header (geometry, mode ceiling, label, seed). Every following line is
//! one nonzero record `m k k_1 … k_{d2} re im`. Floats are written with Rust's shortest
//! round-trip formatting, so reading back reproduces every bit.

use super::{Geometry, SpectralField};
use crate::{Complex64, Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    geometry: Geometry,
    m_max: usize,
    label: String,
    seed: Option<u64>,
    records: usize,
}

const FORMAT: &str = "grushin-field/1";

pub fn write_field<W: Write>(field: &SpectralField, mut out: W) -> Result<()> {
    let recs = field.records();
    let header = Header {
        format: FORMAT.into(),
        geometry: field.geometry.clone(),
        m_max: field.m_max,
        label: field.label.clone(),
        seed: field.seed,
        records: recs.len(),
    };
    let h = serde_json::to_string(&header).map_err(|e| Error::Serialization(e.to_string()))?;
    writeln!(out, "{h}")?;
    for r in recs {
        let mut line = format!("{} {}", r.m, r.k);
        for c in &r.lattice {
            line.push_str(&format!(" {c}"));
        }
        line.push_str(&format!(" {:?} {:?}", r.value.re, r.value.im));
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_field<R: BufRead>(input: R) -> Result<SpectralField> {
    let mut lines = input.lines();
    let first = lines.next().ok_or_else(|| Error::Serialization("empty input".into()))??;
    let header: Header = serde_json::from_str(&first).map_err(|e| Error::Serialization(format!("header: {e}")))?;
    if header.format != FORMAT {
        return Err(Error::Serialization(format!("unknown format {}", header.format)));
    }
    let d2 = header.geometry.d2;
    let mut field = SpectralField::zeros(header.geometry, header.m_max);
    field.label = header.label;
    field.seed = header.seed;
    let mut count = 0;
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Serialization(format!("line {}: {what}", n + 2));
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 4 + d2 {
            return Err(bad("wrong field count"));
        }
        let m: usize = toks[0].parse().map_err(|_| bad("mode"))?;
        let k: usize = toks[1].parse().map_err(|_| bad("multi-index"))?;
        let lattice: Vec<i64> =
            toks[2..2 + d2].iter().map(|t| t.parse().map_err(|_| bad("lattice"))).collect::<Result<_>>()?;
        let re: f64 = toks[2 + d2].parse().map_err(|_| bad("real part"))?;
        let im: f64 = toks[3 + d2].parse().map_err(|_| bad("imaginary part"))?;
        field.set(m, k, &lattice, Complex64::new(re, im)).map_err(|e| bad(&e.to_string()))?;
        count += 1;
    }
    if count != header.records {
        return Err(Error::Serialization(format!("expected {} records, read {count}", header.records)));
    }
    Ok(field)
}

pub fn save(field: &SpectralField, path: &std::path::Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_field(field, std::io::BufWriter::new(f))
}

pub fn load(path: &std::path::Path) -> Result<SpectralField> {
    let f = std::fs::File::open(path)?;
    read_field(std::io::BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn bit_exact_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let g = Geometry::euclidean_box(2, 2, 13.7, 2).unwrap();
        let mut f = SpectralField::random(g, 3, 3, 2, &mut rng);
        f.label = "sample field".into();
        f.seed = Some(77);
        f.coeffs[5] = Complex64::new(1e-310, -0.0);
        let mut buf = Vec::new();
        write_field(&f, &mut buf).unwrap();
        let back = read_field(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back.coeffs.len(), f.coeffs.len());
        for (a, b) in back.coeffs.iter().zip(&f.coeffs) {
            if b.re == 0.0 && b.im == 0.0 {
                continue;
            }
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        assert_eq!(back.label, f.label);
        assert_eq!(back.seed, Some(77));
    }

    #[test]
    fn truncated_input_rejected() {
        let g = Geometry::torus(1, 1, 2).unwrap();
        let mut f = SpectralField::zeros(g, 1);
        f.set(1, 0, &[1], Complex64::new(0.5, 0.25)).unwrap();
        let mut buf = Vec::new();
        write_field(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first = text.lines().next().unwrap().to_string();
        assert!(read_field(std::io::Cursor::new(first)).is_err());
    }
}
