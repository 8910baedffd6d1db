//! Sequential reference: Polybench-style GEMM with a fixed summation order.

pub const ALPHA: f64 = 1.5;
pub const BETA: f64 = 1.2;

/// C[i][j] = ((i*j + 1) mod ni) / ni
pub fn init_c(i: usize, j: usize, ni: usize) -> f64 {
    ((i * j + 1) % ni) as f64 / ni as f64
}

/// A[i][k] = ((i*(k+1)) mod nk) / nk
pub fn init_a(i: usize, k: usize, nk: usize) -> f64 {
    (i * (k + 1) % nk) as f64 / nk as f64
}

/// B[k][j] = ((k*(j+2)) mod nj) / nj
pub fn init_b(k: usize, j: usize, nj: usize) -> f64 {
    (k * (j + 2) % nj) as f64 / nj as f64
}

/// Row-major C = alpha*A*B + beta*C over the standard initialization,
/// k accumulated in ascending order so a distributed run that keeps the
/// same per-cell order matches it bit for bit.
pub fn reference_gemm(ni: usize, nj: usize, nk: usize) -> Vec<f64> {
    let mut c = vec![0.0f64; ni * nj];
    for i in 0..ni {
        for j in 0..nj {
            let mut acc = BETA * init_c(i, j, ni);
            for k in 0..nk {
                acc += ALPHA * init_a(i, k, nk) * init_b(k, j, nj);
            }
            c[i * nj + j] = acc;
        }
    }
    c
}

/// First cell where a gathered C disagrees with the reference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mismatch {
    pub i: usize,
    pub j: usize,
    pub expected: f64,
    pub actual: f64,
}

/// Bit-exact comparison of row-major f64 bytes against the reference.
pub fn check_result(gathered: &[u8], ni: usize, nj: usize, nk: usize) -> Result<(), Mismatch> {
    let want = reference_gemm(ni, nj, nk);
    for i in 0..ni {
        for j in 0..nj {
            let at = 8 * (i * nj + j);
            let actual = f64::from_ne_bytes(gathered[at..at + 8].try_into().unwrap());
            let expected = want[i * nj + j];
            if actual.to_bits() != expected.to_bits() {
                return Err(Mismatch { i, j, expected, actual });
            }
        }
    }
    Ok(())
}
