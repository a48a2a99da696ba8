//! Float math pinned for bit-reproducibility.
//!
//! Transcendentals always go through the libm crate, std build or not. The
//! platform math library is not an option here: LLVM merges adjacent
//! std sin/cos calls into one sincos libcall, and glibc's sincos disagrees
//! with its own sin by an ulp at some arguments, so the same source line
//! could yield different bits depending on inlining context. libm is plain
//! Rust and is never fused. sqrt stays on the intrinsic: IEEE defines its
//! result exactly, so every backend agrees.

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

#[cfg(feature = "std")]
#[inline]
pub fn sqrt(x: f64) -> f64 {
    x.sqrt()
}

#[cfg(not(feature = "std"))]
#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

/// Euclidean norm without the range-guarded hypot algorithm, which differs
/// between math libraries. Inputs here are task-scale (well under 1e100), so
/// plain squaring neither overflows nor underflows.
#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    sqrt(x * x + y * y)
}
