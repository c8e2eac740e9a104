//! The 64-bit mixer behind seeded colorings.
//!
//! A seeded coloring assigns `mix64(seed ^ fold(codes)) % k`, where `fold`
//! starts from zero and absorbs each per-element code left to right with
//! `acc = mix64(acc ^ code)`. Tree nodes use the code `1·bits` (the bit string
//! with a leading one, read as a binary numeral); integers use themselves.

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
pub fn fold_codes<I: IntoIterator<Item = u64>>(codes: I) -> u64 {
    codes.into_iter().fold(0, |acc, code| mix64(acc ^ code))
}

#[inline]
pub fn seeded_color<I: IntoIterator<Item = u64>>(seed: u64, codes: I, k: u32) -> u32 {
    (mix64(seed ^ fold_codes(codes)) % u64::from(k)) as u32
}
