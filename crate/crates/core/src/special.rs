//! Gamma function.

#![allow(clippy::excessive_precision)]

const LANCZOS_SHIFT: f64 = 671.0 / 128.0;
const LANCZOS_COEFFS: [f64; 14] = [
    57.156_235_665_862_923_5,
    -59.597_960_355_475_491_2,
    14.136_097_974_741_747_1,
    -0.491_913_816_097_620_199,
    0.339_946_499_848_118_887e-4,
    0.465_236_289_270_485_756e-4,
    -0.983_744_753_048_795_646e-4,
    0.158_088_703_224_912_494e-3,
    -0.210_264_441_724_104_883e-3,
    0.217_439_618_115_212_643e-3,
    -0.164_318_106_536_763_890e-3,
    0.844_182_239_838_527_433e-4,
    -0.261_908_384_015_814_087e-4,
    0.368_991_826_595_316_234e-5,
];

/// `ln Γ(x)` for `x > 0` (Lanczos approximation, g = 671/128, 14 terms).
///
/// Returns NaN for `x <= 0` or NaN input.
pub fn ln_gamma(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    if x.is_infinite() {
        return f64::INFINITY;
    }
    let t = x + LANCZOS_SHIFT;
    let head = (x + 0.5) * t.ln() - t;
    let mut ser = 0.999_999_999_999_997_092;
    let mut y = x;
    for c in LANCZOS_COEFFS {
        y += 1.0;
        ser += c / y;
    }
    head + (2.506_628_274_631_000_5 * ser / x).ln()
}

/// `Γ(x)` for `x > 0`.
pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}
