//! Binary Satake cache.
//!
//! Layout (little-endian): magic `TWLSATK\0`, version u32, field (u32 length +
//! UTF-8), label (u32 length + UTF-8), count u64, then `count` records of
//! prime u64 followed by six f64 (re, im of γ1, γ2, γ3).

use super::{CoefficientSystem, Satake};
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

pub const MAGIC: &[u8; 8] = b"TWLSATK\0";
pub const VERSION: u32 = 1;
pub const CACHE_ENV: &str = "TWISTLAB_CACHE";

#[derive(Clone, Debug, PartialEq)]
pub struct CacheContents {
    pub field: String,
    pub label: String,
    pub primes: Vec<u64>,
    pub satake: Vec<Satake>,
}

pub fn encode(c: &CacheContents) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + c.primes.len() * 56);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for s in [&c.field, &c.label] {
        out.extend_from_slice(&(s.len() as u32).to_le_bytes());
        out.extend_from_slice(s.as_bytes());
    }
    out.extend_from_slice(&(c.primes.len() as u64).to_le_bytes());
    for (p, g) in c.primes.iter().zip(&c.satake) {
        out.extend_from_slice(&p.to_le_bytes());
        for z in g {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Io("coefficient cache truncated".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Io("cache string is not UTF-8".into()))
    }
}

pub fn decode(buf: &[u8]) -> Result<CacheContents> {
    let mut cur = Cursor { buf, pos: 0 };
    if cur.take(8)? != MAGIC {
        return Err(Error::Config("not a coefficient cache (bad magic)".into()));
    }
    let v = cur.u32()?;
    if v != VERSION {
        return Err(Error::Config(format!("coefficient cache version {v} unsupported (expected {VERSION})")));
    }
    let field = cur.string()?;
    let label = cur.string()?;
    let count = cur.u64()? as usize;
    if buf.len() - cur.pos != count * 56 {
        return Err(Error::Io(format!("coefficient cache declares {count} records but holds {} bytes", buf.len() - cur.pos)));
    }
    let mut primes = Vec::with_capacity(count);
    let mut satake = Vec::with_capacity(count);
    for _ in 0..count {
        primes.push(cur.u64()?);
        let mut g = [Complex64::new(0.0, 0.0); 3];
        for z in g.iter_mut() {
            let re = cur.f64()?;
            let im = cur.f64()?;
            *z = Complex64::new(re, im);
        }
        satake.push(g);
    }
    Ok(CacheContents { field, label, primes, satake })
}

pub fn write_file(path: &Path, c: &CacheContents) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    static SEQ: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);
    let seq = SEQ.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
    let tmp = path.with_extension(format!("tmp{}-{seq}", std::process::id()));
    {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        w.write_all(&encode(c))?;
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_file(path: &Path) -> Result<CacheContents> {
    let mut buf = Vec::new();
    BufReader::new(fs::File::open(path)?).read_to_end(&mut buf)?;
    decode(&buf)
}

pub fn contents_of(sys: &CoefficientSystem) -> CacheContents {
    CacheContents {
        field: "Q".into(),
        label: sys.label.clone(),
        primes: sys.primes().to_vec(),
        satake: sys.satake_table().to_vec(),
    }
}

pub fn default_dir() -> PathBuf {
    std::env::var_os(CACHE_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("twistlab-cache"))
}

/// sym²Δ with Satake data up to `prime_bound`, reusing any cached table that covers it.
pub fn load_or_build_sym2_delta(prime_bound: u64, dir: Option<&Path>) -> Result<CoefficientSystem> {
    let dir = dir.map(Path::to_path_buf).unwrap_or_else(default_dir);
    if let Ok(entries) = fs::read_dir(&dir) {
        let mut best: Option<(u64, PathBuf)> = None;
        for e in entries.flatten() {
            let name = e.file_name().to_string_lossy().to_string();
            if let Some(b) = name.strip_prefix("sym2_delta_").and_then(|r| r.strip_suffix(".tlc")).and_then(|b| b.parse::<u64>().ok()) {
                if b >= prime_bound && best.as_ref().map_or(true, |(bb, _)| b < *bb) {
                    best = Some((b, e.path()));
                }
            }
        }
        if let Some((_, path)) = best {
            if let Ok(c) = read_file(&path) {
                if c.label == "sym2_delta" && c.field == "Q" {
                    let k = c.primes.partition_point(|&p| p <= prime_bound);
                    let sys = CoefficientSystem::new(&c.label, c.primes[..k].to_vec(), c.satake[..k].to_vec(), true)?;
                    return Ok(sys.with_archimedean(super::sym2_delta_shifts(), 1, Complex64::new(1.0, 0.0)));
                }
            }
        }
    }
    let sys = super::sym2_delta(prime_bound)?;
    let path = dir.join(format!("sym2_delta_{prime_bound}.tlc"));
    let _ = write_file(&path, &contents_of(&sys));
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_exact_roundtrip() {
        let sys = CoefficientSystem::synthetic(3, 3000);
        let c = contents_of(&sys);
        let bytes = encode(&c);
        let back = decode(&bytes).unwrap();
        assert_eq!(back, c);
        for (a, b) in back.satake.iter().flatten().zip(c.satake.iter().flatten()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn rejects_corruption() {
        let c = contents_of(&CoefficientSystem::synthetic(3, 100));
        let mut bytes = encode(&c);
        assert!(decode(&bytes[..bytes.len() - 3]).is_err());
        bytes[8] = 9;
        assert_eq!(decode(&bytes).unwrap_err().code(), "E_CONFIG");
        bytes[0] = b'X';
        assert!(decode(&bytes).is_err());
    }

    #[test]
    fn file_roundtrip_and_reuse() {
        let dir = std::env::temp_dir().join(format!("twistlab-cache-test-{}", std::process::id()));
        let a = load_or_build_sym2_delta(500, Some(&dir)).unwrap();
        let b = load_or_build_sym2_delta(300, Some(&dir)).unwrap();
        assert_eq!(b.prime_bound(), 293);
        assert_eq!(a.satake_table()[..b.primes().len()], *b.satake_table());
        let _ = fs::remove_dir_all(&dir);
    }
}
