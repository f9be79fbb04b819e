//! Single-threaded f32 matrix multiply.
//!
//! Every output element is accumulated over the inner dimension in ascending
//! order, whichever tile path computes it, so results are bit-identical to the
//! textbook triple loop and independent of the blocking.

const MR: usize = 4;
const NR: usize = 8;

/// `c[m×n] = (accumulate ? c : 0) + a[m×k] · b[k×n]`.
///
/// `a` is addressed as `a[i*rs_a + p*cs_a]`, so transposed views cost nothing.
/// `b` and `c` are dense row-major.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(m: usize, n: usize, k: usize, a: &[f32], rs_a: usize, cs_a: usize, b: &[f32], c: &mut [f32], accumulate: bool) {
    assert!(b.len() >= k * n && c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    if k > 0 {
        assert!(a.len() > (m - 1) * rs_a + (k - 1) * cs_a);
    }
    let full_rows = m - m % MR;
    let full_cols = n - n % NR;

    for i0 in (0..full_rows).step_by(MR) {
        for j0 in (0..full_cols).step_by(NR) {
            let mut acc = [[0.0f32; NR]; MR];
            if accumulate {
                for (r, row) in acc.iter_mut().enumerate() {
                    row.copy_from_slice(&c[(i0 + r) * n + j0..(i0 + r) * n + j0 + NR]);
                }
            }
            for p in 0..k {
                let brow: &[f32; NR] = b[p * n + j0..p * n + j0 + NR].try_into().unwrap();
                for (r, row) in acc.iter_mut().enumerate() {
                    let av = a[(i0 + r) * rs_a + p * cs_a];
                    for (x, &bv) in row.iter_mut().zip(brow) {
                        *x += av * bv;
                    }
                }
            }
            for (r, row) in acc.iter().enumerate() {
                c[(i0 + r) * n + j0..(i0 + r) * n + j0 + NR].copy_from_slice(row);
            }
        }
        if full_cols < n {
            edge(i0, i0 + MR, full_cols, n, n, k, a, rs_a, cs_a, b, c, accumulate);
        }
    }
    if full_rows < m {
        edge(full_rows, m, 0, n, n, k, a, rs_a, cs_a, b, c, accumulate);
    }
}

#[allow(clippy::too_many_arguments)]
fn edge(
    i_lo: usize,
    i_hi: usize,
    j_lo: usize,
    j_hi: usize,
    n: usize,
    k: usize,
    a: &[f32],
    rs_a: usize,
    cs_a: usize,
    b: &[f32],
    c: &mut [f32],
    accumulate: bool,
) {
    for i in i_lo..i_hi {
        let crow = &mut c[i * n + j_lo..i * n + j_hi];
        if !accumulate {
            crow.fill(0.0);
        }
        for p in 0..k {
            let av = a[i * rs_a + p * cs_a];
            let brow = &b[p * n + j_lo..p * n + j_hi];
            for (x, &bv) in crow.iter_mut().zip(brow) {
                *x += av * bv;
            }
        }
    }
}
