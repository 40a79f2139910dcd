//! Versioned little-endian snapshot format.
//!
//! ```text
//! header   : b"CDFB" | u16 version (=1) | u8 kind | u8 reserved (=0)
//! kind 1   : ValueCounts
//!            u64 total | u64 n | n × (f64 value | u64 count)
//! kind 2   : WeightedStreamStats
//!            f64 k | u64 t | f64 Σw | f64 Σw² | u64 n
//!            n × (f64 value | u64 count | f64 Σw | f64 Σw² | u64 zero_count
//!                 | u64 n_buckets | n_buckets × (i32 n | f64 a | f64 b | f64 c))
//! ```
//!
//! Values are strictly increasing; decoding re-validates every invariant.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::weighted::{BucketAcc, LogApproxBuckets, PointStats, WeightedStreamStats};
use super::{OrdValue, ValueCounts};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"CDFB";
pub const VERSION: u16 = 1;
pub const KIND_VALUE_COUNTS: u8 = 1;
pub const KIND_WEIGHTED: u8 = 2;

/// Either snapshot kind, as read back from bytes.
#[derive(Debug, Clone, PartialEq)]
pub enum Snapshot {
    Counts(ValueCounts),
    Weighted(WeightedStreamStats),
}

fn header(out: &mut Vec<u8>, kind: u8) {
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(kind);
    out.push(0);
}

pub fn encode_counts(vc: &ValueCounts) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 16 * vc.distinct());
    header(&mut out, KIND_VALUE_COUNTS);
    out.extend_from_slice(&vc.total().to_le_bytes());
    out.extend_from_slice(&(vc.distinct() as u64).to_le_bytes());
    for (v, c) in vc.iter() {
        out.extend_from_slice(&v.to_le_bytes());
        out.extend_from_slice(&c.to_le_bytes());
    }
    out
}

pub fn encode_weighted(ws: &WeightedStreamStats) -> Vec<u8> {
    let mut out = Vec::new();
    header(&mut out, KIND_WEIGHTED);
    out.extend_from_slice(&ws.k.to_le_bytes());
    out.extend_from_slice(&ws.t.to_le_bytes());
    out.extend_from_slice(&ws.sum_w.to_le_bytes());
    out.extend_from_slice(&ws.sum_w_sq.to_le_bytes());
    out.extend_from_slice(&(ws.points.len() as u64).to_le_bytes());
    for (x, p) in ws.points() {
        out.extend_from_slice(&x.to_le_bytes());
        out.extend_from_slice(&p.count.to_le_bytes());
        out.extend_from_slice(&p.sum_w.to_le_bytes());
        out.extend_from_slice(&p.sum_w_sq.to_le_bytes());
        out.extend_from_slice(&p.buckets.zero_count().to_le_bytes());
        let buckets: Vec<_> = p.buckets.buckets().collect();
        out.extend_from_slice(&(buckets.len() as u64).to_le_bytes());
        for (n, acc) in buckets {
            out.extend_from_slice(&n.to_le_bytes());
            out.extend_from_slice(&acc.a.to_le_bytes());
            out.extend_from_slice(&acc.b.to_le_bytes());
            out.extend_from_slice(&acc.c.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        if self.buf.len() < N {
            return Err(Error::Decode("truncated input"));
        }
        let (head, rest) = self.buf.split_at(N);
        self.buf = rest;
        Ok(head.try_into().unwrap())
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take::<1>()?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }
    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take()?))
    }
    fn f64(&mut self) -> Result<f64> {
        let v = f64::from_le_bytes(self.take()?);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Decode("non-finite float"))
        }
    }
    fn len(&mut self, min_record: usize) -> Result<usize> {
        let n = self.u64()?;
        // Refuse lengths that cannot fit in the remaining bytes.
        if n > (self.buf.len() / min_record.max(1)) as u64 {
            return Err(Error::Decode("length exceeds input"));
        }
        Ok(n as usize)
    }
}

fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot> {
    let mut r = Reader { buf: bytes };
    if r.take::<4>()? != MAGIC {
        return Err(Error::Decode("bad magic"));
    }
    if r.u16()? != VERSION {
        return Err(Error::Decode("unsupported version"));
    }
    let kind = r.u8()?;
    if r.u8()? != 0 {
        return Err(Error::Decode("reserved byte set"));
    }
    let snap = match kind {
        KIND_VALUE_COUNTS => Snapshot::Counts(decode_counts(&mut r)?),
        KIND_WEIGHTED => Snapshot::Weighted(decode_weighted(&mut r)?),
        _ => return Err(Error::Decode("unknown snapshot kind")),
    };
    if !r.buf.is_empty() {
        return Err(Error::Decode("trailing bytes"));
    }
    Ok(snap)
}

fn decode_counts(r: &mut Reader<'_>) -> Result<ValueCounts> {
    let total = r.u64()?;
    let n = r.len(16)?;
    let mut vc = ValueCounts::new();
    let mut prev: Option<f64> = None;
    for _ in 0..n {
        let v = r.f64()?;
        let c = r.u64()?;
        if c == 0 {
            return Err(Error::Decode("zero count"));
        }
        if prev.is_some_and(|p| OrdValue::new(p) >= OrdValue::new(v)) {
            return Err(Error::Decode("values not strictly increasing"));
        }
        prev = Some(v);
        vc.add(v, c).map_err(|_| Error::Decode("bad value"))?;
    }
    if vc.total() != total {
        return Err(Error::Decode("total does not match counts"));
    }
    Ok(vc)
}

fn decode_weighted(r: &mut Reader<'_>) -> Result<WeightedStreamStats> {
    let k = r.f64()?;
    if !(k > 0.0) {
        return Err(Error::Decode("granularity must be positive"));
    }
    let t = r.u64()?;
    let sum_w = r.f64()?;
    let sum_w_sq = r.f64()?;
    let n = r.len(48)?;
    let mut points = BTreeMap::new();
    let mut prev: Option<OrdValue> = None;
    let (mut t_check, mut w_check, mut w2_check) = (0u64, 0.0, 0.0);
    for _ in 0..n {
        let x = OrdValue::new(r.f64()?).unwrap();
        if prev.is_some_and(|p| p >= x) {
            return Err(Error::Decode("values not strictly increasing"));
        }
        prev = Some(x);
        let count = r.u64()?;
        let pw = r.f64()?;
        let pw2 = r.f64()?;
        let zero = r.u64()?;
        if count == 0 || zero > count || pw < 0.0 || pw2 < 0.0 {
            return Err(Error::Decode("invalid point accumulators"));
        }
        let nb = r.len(28)?;
        let mut buckets = BTreeMap::new();
        let mut mass = 0.0;
        let mut prev_n: Option<i32> = None;
        for _ in 0..nb {
            let bn = r.i32()?;
            if prev_n.is_some_and(|p| p >= bn) {
                return Err(Error::Decode("bucket indices not strictly increasing"));
            }
            prev_n = Some(bn);
            let acc = BucketAcc { a: r.f64()?, b: r.f64()?, c: r.f64()? };
            if acc.a < 0.0 || acc.b < -1e-12 || acc.c < 0.0 {
                return Err(Error::Decode("negative bucket accumulator"));
            }
            mass += acc.a + acc.b;
            buckets.insert(bn, acc);
        }
        let positive = count - zero;
        if !approx_eq(mass, positive as f64) {
            return Err(Error::Decode("bucket mass does not match positive count"));
        }
        t_check += count;
        w_check += pw;
        w2_check += pw2;
        let buckets = LogApproxBuckets::from_parts(k, zero, positive, buckets);
        points.insert(x, PointStats { count, sum_w: pw, sum_w_sq: pw2, buckets });
    }
    if t_check != t || !approx_eq(w_check, sum_w) || !approx_eq(w2_check, sum_w_sq) {
        return Err(Error::Decode("global totals do not match points"));
    }
    Ok(WeightedStreamStats { k, points, t, sum_w, sum_w_sq })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout_is_stable() {
        let bytes = encode_counts(&ValueCounts::new());
        assert_eq!(&bytes[..8], &[b'C', b'D', b'F', b'B', 1, 0, 1, 0]);
        assert_eq!(bytes.len(), 24);
    }

    #[test]
    fn corrupt_inputs_rejected() {
        let mut vc = ValueCounts::new();
        vc.update(0.5).unwrap();
        let good = encode_counts(&vc);
        assert!(decode(&good[..good.len() - 1]).is_err());
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        let mut bad = good.clone();
        bad[8] = 7; // total
        assert!(decode(&bad).is_err());
        let mut extra = good;
        extra.push(0);
        assert!(decode(&extra).is_err());
    }

    proptest! {
        #[test]
        fn counts_roundtrip(xs in proptest::collection::vec(-5.0f64..5.0, 0..50)) {
            let mut vc = ValueCounts::new();
            for &x in &xs {
                vc.update((x * 4.0).round() / 4.0).unwrap();
            }
            let back = decode(&encode_counts(&vc)).unwrap();
            prop_assert_eq!(back, Snapshot::Counts(vc));
        }

        #[test]
        fn weighted_roundtrip(
            pts in proptest::collection::vec((prop_oneof![Just(0.0), 0.0f64..30.0], -3.0f64..3.0), 0..50)
        ) {
            let mut ws = WeightedStreamStats::default();
            for &(w, x) in &pts {
                ws.update(w, (x * 8.0).round() / 8.0).unwrap();
            }
            let bytes = encode_weighted(&ws);
            let back = decode(&bytes).unwrap();
            prop_assert_eq!(back, Snapshot::Weighted(ws));
        }
    }
}
