//! Independent SHA-256 used only as a test oracle.
//!
//! Implemented directly from the FIPS 180-4 definition, sharing no code
//! with the crate. The round constants are not hardcoded: they are
//! derived here as the fractional parts of the square and cube roots of
//! the first primes, computed with exact integer arithmetic. A constant
//! error is impossible to copy from the implementation under test and
//! would fail the published vectors immediately.

/// First `n` primes by trial division.
fn primes(n: usize) -> Vec<u128> {
    let mut found: Vec<u128> = Vec::with_capacity(n);
    let mut candidate: u128 = 2;
    while found.len() < n {
        if found.iter().all(|p| !candidate.is_multiple_of(*p)) {
            found.push(candidate);
        }
        candidate += 1;
    }
    found
}

/// Largest x with x^2 <= n.
fn isqrt(n: u128) -> u128 {
    let mut lo: u128 = 0;
    let mut hi: u128 = 1 << 40;
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if mid * mid <= n {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

/// Largest x with x^3 <= n.
fn icbrt(n: u128) -> u128 {
    let mut lo: u128 = 0;
    let mut hi: u128 = 1 << 40;
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if mid * mid * mid <= n {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

/// floor(frac(sqrt(p)) * 2^32): the low 32 bits of floor(sqrt(p) * 2^32).
fn sqrt_frac32(p: u128) -> u32 {
    (isqrt(p << 64) & 0xFFFF_FFFF) as u32
}

/// floor(frac(cbrt(p)) * 2^32): the low 32 bits of floor(cbrt(p) * 2^32).
fn cbrt_frac32(p: u128) -> u32 {
    (icbrt(p << 96) & 0xFFFF_FFFF) as u32
}

pub fn digest(data: &[u8]) -> [u8; 32] {
    let mut h: Vec<u32> = primes(8).into_iter().map(sqrt_frac32).collect();
    let k: Vec<u32> = primes(64).into_iter().map(cbrt_frac32).collect();

    // Pad: 0x80, zeros to 56 mod 64, then the bit length as 64-bit BE.
    let mut message = data.to_vec();
    let bit_len = (data.len() as u64) * 8;
    message.push(0x80);
    while message.len() % 64 != 56 {
        message.push(0);
    }
    message.extend_from_slice(&bit_len.to_be_bytes());

    for block in message.chunks_exact(64) {
        let mut w = [0u32; 64];
        for (i, word) in block.chunks_exact(4).enumerate() {
            w[i] = u32::from_be_bytes(word.try_into().unwrap());
        }
        for i in 16..64 {
            let s0 = w[i - 15].rotate_right(7) ^ w[i - 15].rotate_right(18) ^ (w[i - 15] >> 3);
            let s1 = w[i - 2].rotate_right(17) ^ w[i - 2].rotate_right(19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16]
                .wrapping_add(s0)
                .wrapping_add(w[i - 7])
                .wrapping_add(s1);
        }

        let (mut a, mut b, mut c, mut d) = (h[0], h[1], h[2], h[3]);
        let (mut e, mut f, mut g, mut hh) = (h[4], h[5], h[6], h[7]);
        for i in 0..64 {
            let s1 = e.rotate_right(6) ^ e.rotate_right(11) ^ e.rotate_right(25);
            let ch = (e & f) ^ (!e & g);
            let temp1 = hh
                .wrapping_add(s1)
                .wrapping_add(ch)
                .wrapping_add(k[i])
                .wrapping_add(w[i]);
            let s0 = a.rotate_right(2) ^ a.rotate_right(13) ^ a.rotate_right(22);
            let maj = (a & b) ^ (a & c) ^ (b & c);
            let temp2 = s0.wrapping_add(maj);
            hh = g;
            g = f;
            f = e;
            e = d.wrapping_add(temp1);
            d = c;
            c = b;
            b = a;
            a = temp1.wrapping_add(temp2);
        }

        h[0] = h[0].wrapping_add(a);
        h[1] = h[1].wrapping_add(b);
        h[2] = h[2].wrapping_add(c);
        h[3] = h[3].wrapping_add(d);
        h[4] = h[4].wrapping_add(e);
        h[5] = h[5].wrapping_add(f);
        h[6] = h[6].wrapping_add(g);
        h[7] = h[7].wrapping_add(hh);
    }

    let mut out = [0u8; 32];
    for (i, word) in h.iter().enumerate() {
        out[i * 4..i * 4 + 4].copy_from_slice(&word.to_be_bytes());
    }
    out
}
