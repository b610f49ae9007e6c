//! Hash keys and the byte-string-to-key derivation.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use sha2::{Digest, Sha512};

use crate::error::{Error, Result};

/// An arbitrary-precision non-negative key together with the bit width of
/// the entropy source that produced it. The width drives the entropy guard
/// and the truncation rule for ring lookups; the permutation algorithm
/// itself consumes the value alone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HashKey {
    value: BigUint,
    source_bits: u64,
}

impl HashKey {
    pub fn new(value: BigUint, source_bits: u64) -> Result<Self> {
        if source_bits == 0 || value.bits() > source_bits {
            return Err(Error::KeyExceedsWidth { bits: source_bits });
        }
        Ok(HashKey { value, source_bits })
    }

    /// Key from a machine integer, with the smallest byte-aligned width
    /// that holds it.
    pub fn from_u128(value: u128) -> Self {
        let bits = 128 - value.leading_zeros() as u64;
        let source_bits = bits.div_ceil(8).max(1) * 8;
        HashKey {
            value: BigUint::from(value),
            source_bits,
        }
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn source_bits(&self) -> u64 {
        self.source_bits
    }

    /// Leading `bits` bits of the key, aligned against its declared width:
    /// a wider key is right-shifted, a narrower one zero-extended on the
    /// right. Keys produced by [`derive_key`] therefore truncate to exactly
    /// what a fresh derivation at the smaller width would give.
    pub fn leading_bits(&self, bits: u32) -> u64 {
        assert!((1..=64).contains(&bits));
        let shifted = if self.source_bits >= u64::from(bits) {
            &self.value >> (self.source_bits - u64::from(bits))
        } else {
            &self.value << (u64::from(bits) - self.source_bits)
        };
        shifted.to_u64().expect("truncated key fits 64 bits")
    }
}

/// SHA-512 over a sequence of chunks, shared by key derivation and ring
/// point placement.
pub(crate) fn sha512_chunks(chunks: &[&[u8]]) -> [u8; 64] {
    let mut hasher = Sha512::new();
    for chunk in chunks {
        hasher.update(chunk);
    }
    hasher.finalize().into()
}

/// Deterministically expand `data` to a `width_bits`-wide key.
///
/// Block `i` (i = 0, 1, 2, ...) is `SHA-512(data || 0x00 || i_be32)`; blocks
/// are concatenated and the leading `width_bits` bits, read big-endian, form
/// the key value. `width_bits` must be a positive multiple of 8.
pub fn derive_key(data: &[u8], width_bits: u64) -> Result<HashKey> {
    if width_bits == 0 || !width_bits.is_multiple_of(8) {
        return Err(Error::WidthNotByteAligned(width_bits));
    }
    let want = (width_bits / 8) as usize;
    let mut bytes = Vec::with_capacity(want + 64);
    let mut counter: u32 = 0;
    while bytes.len() < want {
        let block = sha512_chunks(&[data, &[0x00], &counter.to_be_bytes()]);
        bytes.extend_from_slice(&block);
        counter += 1;
    }
    bytes.truncate(want);
    Ok(HashKey {
        value: BigUint::from_bytes_be(&bytes),
        source_bits: width_bits,
    })
}
