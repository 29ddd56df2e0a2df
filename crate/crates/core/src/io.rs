//! Persistence: the binary `PSIF` field format, text potential and mode
//! files, and CSV slices.
//!
//! Field file layout, all little-endian: magic `PSIF`, `u32` version 1, `u8`
//! dtype (0 real, 1 complex interleaved), `u8` rank, two zero bytes; per axis
//! a `u8` name length, the UTF-8 name, `u64` count, `f64` min and `f64` max;
//! then the `f64` payload in row-major order.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex;

use crate::error::{validation, Error, Result};
use crate::fields::{AxisGrid, AxisKind, ComplexField, RealField, MAX_RANK};
use crate::potential::PolynomialPotential;
use crate::scalar::Scalar;
use crate::vonneumann::ModeSet;

pub const MAGIC: &[u8; 4] = b"PSIF";
pub const VERSION: u32 = 1;

/// Contents of a field file.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldData<T> {
    Real(RealField<T>),
    Complex(ComplexField<T>),
}

impl<T: Scalar> FieldData<T> {
    pub fn axes(&self) -> &[AxisGrid<T>] {
        match self {
            Self::Real(f) => f.axes(),
            Self::Complex(f) => f.axes(),
        }
    }

    pub fn rank(&self) -> usize {
        self.axes().len()
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, Self::Complex(_))
    }

    pub fn into_real(self) -> Result<RealField<T>> {
        match self {
            Self::Real(f) => Ok(f),
            Self::Complex(_) => validation("expected a real field, got a complex one"),
        }
    }

    pub fn into_complex(self) -> Result<ComplexField<T>> {
        match self {
            Self::Complex(f) => Ok(f),
            Self::Real(_) => validation("expected a complex field, got a real one"),
        }
    }
}

impl<T> From<RealField<T>> for FieldData<T> {
    fn from(f: RealField<T>) -> Self {
        Self::Real(f)
    }
}

impl<T> From<ComplexField<T>> for FieldData<T> {
    fn from(f: ComplexField<T>) -> Self {
        Self::Complex(f)
    }
}

pub fn write_field<T: Scalar, W: Write>(mut w: W, field: &FieldData<T>) -> Result<()> {
    let axes = field.axes();
    if axes.is_empty() || axes.len() > MAX_RANK {
        return validation(format!("field files hold rank 1..={MAX_RANK}, got {}", axes.len()));
    }
    let mut head = Vec::with_capacity(12 + axes.len() * 32);
    head.extend_from_slice(MAGIC);
    head.extend_from_slice(&VERSION.to_le_bytes());
    head.push(u8::from(field.is_complex()));
    head.push(axes.len() as u8);
    head.extend_from_slice(&[0, 0]);
    for a in axes {
        let name = a.kind().as_str().as_bytes();
        head.push(name.len() as u8);
        head.extend_from_slice(name);
        head.extend_from_slice(&(a.len() as u64).to_le_bytes());
        head.extend_from_slice(&to_f64(a.min()).to_le_bytes());
        head.extend_from_slice(&to_f64(a.max()).to_le_bytes());
    }
    w.write_all(&head)?;
    let mut payload = Vec::new();
    match field {
        FieldData::Real(f) => {
            payload.reserve(f.len() * 8);
            for &v in f.data() {
                payload.extend_from_slice(&to_f64(v).to_le_bytes());
            }
        }
        FieldData::Complex(f) => {
            payload.reserve(f.len() * 16);
            for z in f.data() {
                payload.extend_from_slice(&to_f64(z.re).to_le_bytes());
                payload.extend_from_slice(&to_f64(z.im).to_le_bytes());
            }
        }
    }
    w.write_all(&payload)?;
    Ok(())
}

pub fn encode_field<T: Scalar>(field: &FieldData<T>) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write_field(&mut out, field)?;
    Ok(out)
}

pub fn read_field<T: Scalar, R: Read>(mut r: R) -> Result<FieldData<T>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode_field(&bytes)
}

pub fn decode_field<T: Scalar>(bytes: &[u8]) -> Result<FieldData<T>> {
    let mut cur = Cursor { bytes, pos: 0 };
    if bytes.is_empty() {
        return Err(Error::Format("empty field file".into()));
    }
    if cur.take(4)? != MAGIC {
        return Err(Error::Format("bad magic, not a field file".into()));
    }
    let version = u32::from_le_bytes(cur.array()?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported field file version {version}")));
    }
    let dtype = cur.take(1)?[0];
    let rank = cur.take(1)?[0] as usize;
    if dtype > 1 {
        return Err(Error::Format(format!("unknown dtype {dtype}")));
    }
    if rank == 0 || rank > MAX_RANK {
        return Err(Error::Format(format!("rank {rank} outside 1..={MAX_RANK}")));
    }
    if cur.take(2)? != [0, 0] {
        return Err(Error::Format("reserved header bytes are not zero".into()));
    }
    let mut axes = Vec::with_capacity(rank);
    for _ in 0..rank {
        let len = cur.take(1)?[0] as usize;
        let name = std::str::from_utf8(cur.take(len)?)
            .map_err(|_| Error::Format("axis name is not UTF-8".into()))?;
        let kind: AxisKind = name.parse().map_err(|_| Error::Format(format!("unknown axis {name:?}")))?;
        let n = u64::from_le_bytes(cur.array()?);
        let min = f64::from_le_bytes(cur.array()?);
        let max = f64::from_le_bytes(cur.array()?);
        let n = usize::try_from(n).map_err(|_| Error::Format("axis too long".into()))?;
        let axis = AxisGrid::new(kind, from_f64(min)?, from_f64(max)?, n)
            .map_err(|e| Error::Format(format!("axis {name}: {e}")))?;
        axes.push(axis);
    }
    let count = axes
        .iter()
        .try_fold(1usize, |acc, a: &AxisGrid<T>| acc.checked_mul(a.len()))
        .ok_or_else(|| Error::Format("grid size overflows".into()))?;
    let width = if dtype == 1 { 16 } else { 8 };
    let rest = &bytes[cur.pos..];
    if Some(rest.len()) != count.checked_mul(width) {
        return Err(Error::Format(format!(
            "payload has {} bytes, header implies {}",
            rest.len(),
            count.saturating_mul(width)
        )));
    }
    let values: Vec<T> = rest
        .chunks_exact(8)
        .map(|c| from_f64(f64::from_le_bytes(c.try_into().expect("8-byte chunk"))))
        .collect::<Result<_>>()?;
    let wrap = |e: Error| match e {
        Error::Numeric(msg) => Error::Format(msg),
        other => other,
    };
    Ok(if dtype == 1 {
        let data = values.chunks_exact(2).map(|p| Complex::new(p[0], p[1])).collect();
        FieldData::Complex(ComplexField::new(axes, data).map_err(wrap)?)
    } else {
        FieldData::Real(RealField::new(axes, values).map_err(wrap)?)
    })
}

pub fn save_field<T: Scalar>(path: impl AsRef<Path>, field: &FieldData<T>) -> Result<()> {
    fs::write(path, encode_field(field)?)?;
    Ok(())
}

pub fn load_field<T: Scalar>(path: impl AsRef<Path>) -> Result<FieldData<T>> {
    decode_field(&fs::read(path)?)
}

pub fn load_potential<T: Scalar>(path: impl AsRef<Path>) -> Result<PolynomialPotential<T>> {
    PolynomialPotential::parse(&fs::read_to_string(path)?)
}

pub fn load_modes<T: Scalar>(path: impl AsRef<Path>, hbar2: T) -> Result<ModeSet<T>> {
    ModeSet::parse(&fs::read_to_string(path)?, hbar2)
}

/// Parses `axis=value,axis=value`.
pub fn parse_slice(spec: &str) -> Result<Vec<(AxisKind, f64)>> {
    let mut pins: Vec<(AxisKind, f64)> = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| Error::Validation(format!("slice entry {part:?} is not axis=value")))?;
        let kind: AxisKind = name.trim().parse()?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Validation(format!("slice value {value:?} is not a number")))?;
        if pins.iter().any(|(k, _)| *k == kind) {
            return validation(format!("axis {kind} pinned twice"));
        }
        pins.push((kind, value));
    }
    Ok(pins)
}

/// Writes the slice of `field` obtained by pinning the given axes to their
/// nearest nodes. One or two axes must stay free. Rows run with the outer
/// free axis ascending and the inner one fastest; numbers carry 17
/// significant digits.
pub fn export_csv<T: Scalar, W: Write>(
    field: &RealField<T>,
    pins: &[(AxisKind, f64)],
    mut out: W,
) -> Result<()> {
    let mut fixed = vec![None; field.rank()];
    for &(kind, value) in pins {
        let k = field.axis_position(kind)?;
        fixed[k] = Some(field.axis(k).nearest_index(from_f64(value)?));
    }
    let free: Vec<usize> = (0..field.rank()).filter(|&k| fixed[k].is_none()).collect();
    if free.is_empty() || free.len() > 2 {
        return validation(format!(
            "slice must leave 1 or 2 free axes, leaves {}",
            free.len()
        ));
    }
    let header: Vec<&str> = free.iter().map(|&k| field.axis(k).kind().as_str()).collect();
    let mut text = format!("{},value\n", header.join(","));
    let mut index: Vec<usize> = fixed.iter().map(|f| f.unwrap_or(0)).collect();
    let outer = field.axis(free[0]).len();
    let inner = free.get(1).map_or(1, |&k| field.axis(k).len());
    for i in 0..outer {
        index[free[0]] = i;
        for j in 0..inner {
            if let Some(&k) = free.get(1) {
                index[k] = j;
            }
            for &k in &free {
                text.push_str(&format!("{:.16e},", to_f64(field.axis(k).coord(index[k]))));
            }
            text.push_str(&format!("{:.16e}\n", to_f64(field.get(&index))));
        }
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::Format("field file is truncated".into()));
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("exact length"))
    }
}

fn to_f64<T: Scalar>(v: T) -> f64 {
    v.to_f64().expect("scalar converts to f64")
}

fn from_f64<T: Scalar>(v: f64) -> Result<T> {
    T::from_f64(v).ok_or_else(|| Error::Format(format!("value {v} not representable")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{sample_complex, sample_real};

    fn small_real() -> RealField<f64> {
        let axes = vec![
            AxisGrid::new(AxisKind::X, -1.0, 1.0, 4).unwrap(),
            AxisGrid::new(AxisKind::Vddot, 0.0, 2.0, 6).unwrap(),
        ];
        sample_real(|c| c[0] * 10.0 + c[1] + 0.1, axes).unwrap()
    }

    #[test]
    fn round_trip_bit_exact() {
        let f: FieldData<f64> = small_real().into();
        let bytes = encode_field(&f).unwrap();
        let back = decode_field::<f64>(&bytes).unwrap();
        assert_eq!(back, f);
        assert_eq!(encode_field(&back).unwrap(), bytes);

        let axes = vec![
            AxisGrid::new(AxisKind::X, -8.0, 8.0, 4).unwrap(),
            AxisGrid::new(AxisKind::V, -8.0, 8.0, 4).unwrap(),
        ];
        let c: FieldData<f64> = sample_complex(|c| Complex::new(c[0], -c[1] / 3.0), axes).unwrap().into();
        let bytes = encode_field(&c).unwrap();
        assert_eq!(bytes[8], 1);
        assert_eq!(bytes[9], 2);
        assert_eq!(decode_field::<f64>(&bytes).unwrap(), c);
    }

    #[test]
    fn corrupt_inputs() {
        assert!(matches!(decode_field::<f64>(&[]), Err(Error::Format(_))));
        let mut bytes = encode_field(&FieldData::Real(small_real())).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_field::<f64>(&bad), Err(Error::Format(_))));
        bytes.pop();
        assert!(matches!(decode_field::<f64>(&bytes), Err(Error::Format(_))));
        assert!(matches!(decode_field::<f64>(&bytes[..10]), Err(Error::Format(_))));
    }

    #[test]
    fn slices() {
        assert_eq!(parse_slice("x=0, v=-1.5").unwrap(), vec![(AxisKind::X, 0.0), (AxisKind::V, -1.5)]);
        assert!(parse_slice("x=0,x=1").is_err());
        assert!(parse_slice("q=0").is_err());
        let f = small_real();
        let mut out = Vec::new();
        export_csv(&f, &[(AxisKind::X, 0.2)], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "vddot,value");
        assert_eq!(lines.len(), 7);
        // x = 0.2 snaps to node 0.0
        let row: Vec<f64> = lines[1].split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(row, vec![0.0, 0.1]);
        assert!(export_csv(&f, &[(AxisKind::X, 0.0), (AxisKind::Vddot, 1.0)], Vec::new()).is_err());
        let mut out = Vec::new();
        export_csv(&f, &[], &mut out).unwrap();
        assert!(String::from_utf8(out).unwrap().starts_with("x,vddot,value\n"));
    }

    #[test]
    fn tie_goes_down() {
        let f = small_real();
        let mut out = Vec::new();
        // x nodes are -1, -0.5, 0, 0.5; -0.25 is a tie between -0.5 and 0
        export_csv(&f, &[(AxisKind::X, -0.25)], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let v: f64 = text.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(v, -5.0 + 0.1);
    }
}
